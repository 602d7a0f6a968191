"""Indexed binary min-heap over reactions keyed by absolute firing time.

Reactions are never popped. After a reaction fires its key is rewritten in
place and the node is sifted to its new position, which keeps the
reaction count fixed for the whole run.
"""

import math

INF = math.inf


class SystemExhausted(Exception):
    """Every reaction is scheduled at +infinity; nothing can fire again."""


class ScheduleHeap:
    """Min-heap of reaction indices with back-pointers.

    ``keys[r]`` is the scheduled time of reaction ``r``; ``heap[i]`` is the
    reaction stored at array position ``i`` and ``pos[r]`` is the inverse
    mapping. ``keys`` is owned by the heap: change it only through
    :meth:`update_key`.
    """

    __slots__ = ("keys", "heap", "pos")

    def __init__(self, keys):
        keys = [float(k) for k in keys]
        if not keys:
            raise ValueError("cannot build a schedule over zero reactions")
        self.keys = keys
        self.heap = list(range(len(keys)))
        self.pos = list(range(len(keys)))
        # bottom-up construction
        for i in range(len(keys) // 2 - 1, -1, -1):
            self._sift_down(i)

    @classmethod
    def build(cls, keys):
        return cls(keys)

    def __len__(self):
        return len(self.heap)

    def peek_min(self):
        r = self.heap[0]
        return r, self.keys[r]

    def key(self, r):
        return self.keys[r]

    def update_key(self, r, new_key):
        if not 0 <= r < len(self.pos):
            raise IndexError(f"reaction {r} is not in the schedule")
        old = self.keys[r]
        if new_key == old:
            return
        self.keys[r] = new_key
        if new_key < old:
            self._sift_up(self.pos[r])
        else:
            self._sift_down(self.pos[r])

    def collect_min_ties(self):
        """All reactions whose key equals the root key, in pre-order.

        Any node sharing the minimum has an ancestor chain of equal keys
        (heap order), so descent can stop at the first larger child.
        """
        heap, keys = self.heap, self.keys
        top = keys[heap[0]]
        if top == INF:
            raise SystemExhausted("all reactions are scheduled at infinity")
        n = len(heap)
        # fast path: no tie at the root's children
        if (n < 2 or keys[heap[1]] != top) and (n < 3 or keys[heap[2]] != top):
            return [heap[0]]
        ties = []
        stack = [0]
        while stack:
            i = stack.pop()
            ties.append(heap[i])
            right = 2 * i + 2
            left = right - 1
            if right < n and keys[heap[right]] == top:
                stack.append(right)
            if left < n and keys[heap[left]] == top:
                stack.append(left)
        return ties

    def audit(self):
        """Return a list of heap-order or back-pointer violations."""
        problems = []
        heap, keys, pos = self.heap, self.keys, self.pos
        for i, r in enumerate(heap):
            if pos[r] != i:
                problems.append(f"back-pointer of reaction {r} is {pos[r]}, expected {i}")
            if i > 0:
                p = (i - 1) // 2
                if keys[heap[p]] > keys[r]:
                    problems.append(f"heap order broken between positions {p} and {i}")
        if sorted(heap) != list(range(len(keys))):
            problems.append("heap does not hold every reaction exactly once")
        return problems

    def _sift_up(self, i):
        heap, keys, pos = self.heap, self.keys, self.pos
        r = heap[i]
        k = keys[r]
        while i > 0:
            p = (i - 1) >> 1
            pr = heap[p]
            if keys[pr] <= k:
                break
            heap[i] = pr
            pos[pr] = i
            i = p
        heap[i] = r
        pos[r] = i

    def _sift_down(self, i):
        heap, keys, pos = self.heap, self.keys, self.pos
        n = len(heap)
        r = heap[i]
        k = keys[r]
        while True:
            c = 2 * i + 1
            if c >= n:
                break
            cr = heap[c]
            ck = keys[cr]
            if c + 1 < n:
                c2 = heap[c + 1]
                if keys[c2] < ck:
                    c, cr, ck = c + 1, c2, keys[c2]
            if ck >= k:
                break
            heap[i] = cr
            pos[cr] = i
            i = c
        heap[i] = r
        pos[r] = i
