"""Gillespie direct-method SSA over a membrane system.

Reference engine for comparison runs. Every step draws two uniforms from
the seeded source: one for the exponential time advance and one for the
propensity-weighted reaction choice.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field

from .model import prepare
from .nwt import _deltas, _requirements
from .recorder import RunStats


def propensity(reaction, counts):
    """``c * h`` with ``h`` the number of distinct reactant combinations."""
    a = reaction.const_discrete
    for s, m in _requirements(reaction.reactants):
        a *= math.comb(counts[s], m)
    return a


def _prop(c, needs, counts):
    for s, m in needs:
        n = counts[s]
        if m == 1:
            c *= n
        elif m == 2:
            c *= n * (n - 1) // 2
        else:
            c *= math.comb(n, m) if n >= m else 0
    return c


@dataclass
class SsaState:
    system: object
    counts: list
    tau_fin: float
    rng: random.Random
    seed: object = None
    tau: float = 0.0
    applied_rule_count: int = 0
    nondet_decision_count: int = 0
    props: list = field(default_factory=list, repr=False)
    needs: list = field(default_factory=list, repr=False)
    deltas: list = field(default_factory=list, repr=False)
    consts: list = field(default_factory=list, repr=False)
    # reactions whose propensity may change when reaction j fires
    affects: list = field(default_factory=list, repr=False)

    @property
    def total_propensity(self):
        return sum(self.props)


def init(system, tau_fin, seed=None, *, rng=None):
    if not tau_fin > 0:
        raise ValueError("tau_fin must be positive")
    system = prepare(system)
    if not system.reactions:
        raise ValueError("model has no reactions to simulate")
    counts = system.initial_counts()
    needs = [_requirements(r.reactants) for r in system.reactions]
    consts = [r.const_discrete for r in system.reactions]
    deltas = [_deltas(r) for r in system.reactions]
    affects = []
    for d in deltas:
        hit = []
        for s, _ in d:
            hit.extend(system.alphabet[s].consuming_reactions)
        affects.append(sorted(set(hit)))
    return SsaState(
        system=system, counts=counts, tau_fin=float(tau_fin),
        rng=rng if rng is not None else random.Random(seed), seed=seed,
        props=[_prop(c, nd, counts) for c, nd in zip(consts, needs)],
        needs=needs, deltas=deltas, consts=consts, affects=affects,
    )


def _choose(props, a0, u):
    target = u * a0
    acc = 0.0
    last = 0
    for j, a in enumerate(props):
        if a > 0:
            acc += a
            last = j
            if target < acc:
                return j
    # rounding left target at the very top of the range
    return last


def ssa_step(state):
    """Fire one reaction; returns its index, or ``None`` if nothing can fire."""
    props = state.props
    a0 = sum(props)
    if a0 <= 0:
        return None
    rnd = state.rng.random
    state.tau += -math.log(1.0 - rnd()) / a0
    j = _choose(props, a0, rnd())
    _fire(state, j)
    return j


def _fire(state, j):
    counts = state.counts
    for s, v in state.deltas[j]:
        counts[s] += v
    props, consts, needs = state.props, state.consts, state.needs
    for k in state.affects[j]:
        props[k] = _prop(consts[k], needs[k], counts)
    state.applied_rule_count += 1
    state.nondet_decision_count += 1


def run(state, recorder=None, halt_on_zero=()):
    """Simulate until the next event would fall after ``tau_fin``."""
    start = time.perf_counter()
    counts, props = state.counts, state.props
    rnd = state.rng.random
    log_ = math.log
    tau_fin = state.tau_fin
    halt = tuple(halt_on_zero)
    termination = "completed"
    while True:
        a0 = sum(props)
        if a0 <= 0:
            termination = "exhausted"
            break
        t_next = state.tau - log_(1.0 - rnd()) / a0
        if t_next > tau_fin:
            break
        if recorder is not None:
            recorder.advance(t_next, counts)
        state.tau = t_next
        _fire(state, _choose(props, a0, rnd()))
        if halt and any(counts[s] == 0 for s in halt):
            termination = "extinct"
            break
    t_end = state.tau if termination == "extinct" else state.tau_fin
    if recorder is not None:
        recorder.finish(counts, t_end=t_end)
    return RunStats(
        engine="ssa", seed=state.seed,
        applied_rule_count=state.applied_rule_count,
        nondet_decision_count=state.nondet_decision_count,
        termination=termination, t_end=t_end,
        wall_seconds=time.perf_counter() - start,
    )
