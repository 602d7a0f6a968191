"""Nondeterministic Waiting Time simulation.

Each reaction waits a deterministic mass-action time ``1/(c*|A|*|B|...)``.
The reaction with the earliest absolute firing time is applied. Randomness
enters only when several reactions are due at the same instant and there
are not enough reactant molecules for all of them.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field

from .model import prepare
from .recorder import RunStats
from .scheduler import INF, ScheduleHeap

log = logging.getLogger(__name__)


def _requirements(reactants):
    """(species, multiplicity) pairs for a reactant slot tuple."""
    need = {}
    for s in reactants:
        need[s] = need.get(s, 0) + 1
    return tuple(need.items())


def base_duration(reaction, counts):
    """Time until the next single firing at the current counts.

    A repeated reactant contributes a falling factorial, so ``A + A``
    with three A molecules waits ``1/(c*3*2)``. Any zero factor gives
    ``inf``.
    """
    denom = reaction.const_discrete
    for s, m in _requirements(reaction.reactants):
        n = counts[s]
        for j in range(m):
            denom *= n - j
    if denom <= 0:
        return INF
    return 1.0 / denom


@dataclass
class StepReport:
    tau: float
    applied: list
    skipped: list
    draws: int


@dataclass
class NwtState:
    system: object
    counts: list
    heap: ScheduleHeap
    tau_fin: float
    rng: random.Random
    seed: object = None
    tau: float = 0.0
    anchor: list = field(default_factory=list)
    mem: list = field(default_factory=list)
    applied_rule_count: int = 0
    nondet_decision_count: int = 0
    skipped_tie_count: int = 0
    memory: bool = True
    # per-reaction lookups precomputed from the system
    needs: list = field(default_factory=list, repr=False)
    deltas: list = field(default_factory=list, repr=False)
    consts: list = field(default_factory=list, repr=False)
    consumers: list = field(default_factory=list, repr=False)
    species_of: list = field(default_factory=list, repr=False)

    @property
    def scheduled(self):
        return self.heap.keys

    def duration(self, r):
        return _duration(self.consts[r], self.needs[r], self.counts)


def _duration(denom, needs, counts):
    for s, m in needs:
        n = counts[s]
        if m == 1:
            denom *= n
        else:
            for j in range(m):
                denom *= n - j
    if denom <= 0:
        return INF
    return 1.0 / denom


def _deltas(reaction):
    d = {}
    for s in reaction.reactants:
        d[s] = d.get(s, 0) - 1
    for s in reaction.products:
        d[s] = d.get(s, 0) + 1
    return tuple((s, v) for s, v in d.items() if v != 0)


def init(system, tau_fin, seed=None, *, memory=True, rng=None):
    """Compute initial waiting times and build the schedule."""
    if not tau_fin > 0:
        raise ValueError("tau_fin must be positive")
    system = prepare(system)
    if not system.reactions:
        raise ValueError("model has no reactions to simulate")
    counts = system.initial_counts()
    needs = [_requirements(r.reactants) for r in system.reactions]
    consts = [r.const_discrete for r in system.reactions]
    keys = [_duration(c, nd, counts) for c, nd in zip(consts, needs)]
    n = len(keys)
    return NwtState(
        system=system,
        counts=counts,
        heap=ScheduleHeap.build(keys),
        tau_fin=float(tau_fin),
        rng=rng if rng is not None else random.Random(seed),
        seed=seed,
        anchor=[0.0] * n,
        mem=[1.0] * n,
        memory=memory,
        needs=needs,
        deltas=[_deltas(r) for r in system.reactions],
        consts=consts,
        consumers=[list(s.consuming_reactions) for s in system.alphabet],
        species_of=[list(dict.fromkeys(r.reactants + r.products)) for r in system.reactions],
    )


def _sufficient(needs, counts):
    for s, m in needs:
        if counts[s] < m:
            return False
    return True


def _apply(deltas, counts):
    for s, v in deltas:
        counts[s] += v


def handle_ties(state, ties):
    """Apply the due reactions; returns ``(applied, skipped, draws)``.

    When the counts cover every tied reaction at once they are all applied
    in order. Otherwise entries are drawn uniformly at random from the
    remaining ties, applied if still feasible and dropped either way. Each
    such draw is one nondeterministic decision.
    """
    counts, needs, deltas = state.counts, state.needs, state.deltas
    if len(ties) == 1:
        r = ties[0]
        if _sufficient(needs[r], counts):
            _apply(deltas[r], counts)
            return [r], [], 0
        return [], [r], 0

    if _jointly_sufficient(ties, needs, counts):
        for r in ties:
            _apply(deltas[r], counts)
        return list(ties), [], 0

    applied, skipped = [], []
    remaining = list(ties)
    draws = 0
    randrange = state.rng.randrange
    while remaining:
        # Stop drawing once the order can no longer matter: nothing left is
        # feasible (only applications add molecules), or everything left fits.
        feasible = [r for r in remaining if _sufficient(needs[r], counts)]
        if not feasible:
            skipped.extend(remaining)
            break
        if len(remaining) == 1 or _jointly_sufficient(remaining, needs, counts):
            for r in remaining:
                _apply(deltas[r], counts)
            applied.extend(remaining)
            break
        r = remaining.pop(randrange(len(remaining)))
        draws += 1
        if _sufficient(needs[r], counts):
            _apply(deltas[r], counts)
            applied.append(r)
        else:
            skipped.append(r)
    state.nondet_decision_count += draws
    return applied, skipped, draws


def _jointly_sufficient(reactions, needs, counts):
    demand = {}
    for r in reactions:
        for s, m in needs[r]:
            demand[s] = demand.get(s, 0) + m
    return all(counts[s] >= m for s, m in demand.items())


def memory_on_exhaust(state, r, tau):
    """Record how much of the full wait is left when ``r`` loses a reactant.

    The current segment ``[anchor, scheduled]`` already covers only
    ``mem`` of a full wait, so the stored fraction compounds; repeated
    interruptions keep eating into the same wait instead of restarting it.
    """
    sched = state.heap.keys[r]
    anchor = state.anchor[r]
    if sched == anchor:
        frac = 0.0
    else:
        frac = (sched - tau) / (sched - anchor)
        frac = min(1.0, max(0.0, frac))
    state.mem[r] = state.mem[r] * frac


def memory_on_resupply(state, r, tau, base):
    """Scheduled time for ``r`` coming back from infinity with full wait ``base``."""
    if not state.memory:
        state.mem[r] = 1.0
    state.anchor[r] = tau
    return tau + state.mem[r] * base


def update_dependents(state, changed, applied, skipped=()):
    """Reschedule applied rules and every rule consuming a changed species.

    Applied rules restart a full wait. Others keep the earlier of the old
    and the newly computed time, except that a reactant running out sends
    them to infinity (storing memory) and a resupply brings them back using
    the stored fraction.
    """
    tau = state.tau
    heap = state.heap
    keys = heap.keys
    counts, needs, consts = state.counts, state.needs, state.consts
    anchor, mem = state.anchor, state.mem
    applied_set = set(applied)

    for r in applied:
        mem[r] = 1.0
        anchor[r] = tau
        d = _duration(consts[r], needs[r], counts)
        heap.update_key(r, tau + d if d != INF else INF)

    touched = []
    seen = set(applied_set)
    consumers = state.consumers
    for s in changed:
        for r in consumers[s]:
            if r not in seen:
                seen.add(r)
                touched.append(r)
    for r in skipped:
        if r not in seen:
            seen.add(r)
            touched.append(r)

    for r in touched:
        old = keys[r]
        d = _duration(consts[r], needs[r], counts)
        if d == INF:
            if old != INF:
                memory_on_exhaust(state, r, tau)
                heap.update_key(r, INF)
        elif old == INF:
            heap.update_key(r, memory_on_resupply(state, r, tau, d))
        else:
            cand = tau + d
            if cand < old:
                anchor[r] = tau
                mem[r] = 1.0
                heap.update_key(r, cand)


def _fire(state, ties):
    applied, skipped, draws = handle_ties(state, ties)
    state.applied_rule_count += len(applied)
    state.skipped_tie_count += len(skipped)
    species_of = state.species_of
    if len(applied) == 1:
        changed = species_of[applied[0]]
    else:
        changed = list(dict.fromkeys(s for r in applied for s in species_of[r]))
    update_dependents(state, changed, applied, skipped)
    return applied, skipped, draws


def step(state):
    """Advance to the next firing instant and apply whatever is due there.

    Raises :class:`~nwtsim.scheduler.SystemExhausted` when nothing can fire.
    """
    ties = state.heap.collect_min_ties()
    state.tau = state.heap.keys[ties[0]]
    applied, skipped, draws = _fire(state, ties)
    return StepReport(state.tau, applied, skipped, draws)


def run(state, recorder=None, halt_on_zero=()):
    """Step until the next firing lies beyond ``tau_fin`` or the system is exhausted.

    ``halt_on_zero`` lists species indices; the run stops (termination
    ``extinct``) as soon as one of them reaches zero.
    """
    start = time.perf_counter()
    keys = state.heap.keys
    heap_list = state.heap.heap
    collect = state.heap.collect_min_ties
    counts = state.counts
    tau_fin = state.tau_fin
    halt = tuple(halt_on_zero)
    termination = "completed"

    while True:
        t_next = keys[heap_list[0]]
        if t_next == INF:
            termination = "exhausted"
            break
        if t_next > tau_fin:
            break
        if recorder is not None:
            recorder.advance(t_next, counts)
        ties = collect()
        state.tau = t_next
        _fire(state, ties)
        if halt and any(counts[s] == 0 for s in halt):
            termination = "extinct"
            break

    t_end = state.tau if termination == "extinct" else state.tau_fin
    if recorder is not None:
        recorder.finish(counts, t_end=t_end)
    stats = RunStats(
        engine="nwt",
        seed=state.seed,
        applied_rule_count=state.applied_rule_count,
        nondet_decision_count=state.nondet_decision_count,
        termination=termination,
        t_end=t_end,
        wall_seconds=time.perf_counter() - start,
    )
    log.debug("nwt run finished: %s", stats)
    return stats
