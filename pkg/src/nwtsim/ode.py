"""Mass-action ODEs in molecule-count space, integrated with classical RK4."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .model import prepare
from .recorder import RunStats

log = logging.getLogger(__name__)

DEFAULT_STEP = 0.01


class IntegrationDiverged(ArithmeticError):
    def __init__(self, t):
        super().__init__(f"integration produced a non-finite state at t={t:g}")
        self.t = t


@dataclass
class RateSystem:
    """``dy/dt = stoich @ (consts * prod(y[reactant_slots]))``.

    ``reactant_slots`` is padded with the index ``n_species``, which points
    at a constant 1.0 appended to the state.
    """

    labels: list
    consts: np.ndarray
    reactant_slots: np.ndarray
    stoich: np.ndarray

    def velocities(self, y):
        ext = np.empty(len(y) + 1)
        ext[:-1] = y
        ext[-1] = 1.0
        slots = self.reactant_slots
        return self.consts * ext[slots[:, 0]] * ext[slots[:, 1]] * ext[slots[:, 2]]

    def __call__(self, y):
        return self.stoich @ self.velocities(y)


def derive_rates(system):
    system = prepare(system)
    n = len(system.alphabet)
    m = len(system.reactions)
    slots = np.full((m, 3), n, dtype=np.intp)
    stoich = np.zeros((n, m))
    for j, r in enumerate(system.reactions):
        slots[j, :len(r.reactants)] = r.reactants
        for s in r.reactants:
            stoich[s, j] -= 1
        for s in r.products:
            stoich[s, j] += 1
    consts = np.array([r.const_discrete for r in system.reactions], dtype=float)
    return RateSystem(system.species_labels(), consts, slots, stoich)


def rk4_step(f, y, t, h):
    """One classical fourth-order Runge-Kutta step of the autonomous system ``f``."""
    if not h > 0:
        raise ValueError("step size must be positive")
    # overflow is reported below as divergence, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_next)):
        raise IntegrationDiverged(t + h)
    return y_next


def run(rates, y0, t_fin, h=DEFAULT_STEP, recorder=None, interval=1.0):
    """Integrate from 0 to ``t_fin`` landing exactly on every sample point.

    Each sample interval is split into ``ceil(interval/h)`` equal steps.
    Negative coordinates are clamped to zero and counted.
    Returns ``(y_final, stats)``.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    y = np.asarray(y0, dtype=float).copy()
    if np.any(y < 0):
        raise ValueError("initial state must be non-negative")
    start = time.perf_counter()
    if recorder is not None:
        interval = recorder.interval
        n_points = recorder.n_points
    else:
        n_points = int(math.floor(t_fin / interval + 1e-9)) + 1
    sub = max(1, math.ceil(interval / h - 1e-9))
    h_eff = interval / sub
    clamps = 0
    if recorder is not None:
        recorder.record_at(0, y)
    t = 0.0
    for i in range(1, n_points):
        for _ in range(sub):
            y = rk4_step(rates, y, t, h_eff)
            t += h_eff
            if (y < 0).any():
                clamps += 1
                np.maximum(y, 0.0, out=y)
        t = i * interval
        if recorder is not None:
            recorder.record_at(i, y)
    # tail shorter than one interval
    rest = t_fin - (n_points - 1) * interval
    if rest > 1e-12:
        k = max(1, math.ceil(rest / h - 1e-9))
        for _ in range(k):
            y = rk4_step(rates, y, t, rest / k)
            t += rest / k
            if (y < 0).any():
                clamps += 1
                np.maximum(y, 0.0, out=y)
    if recorder is not None:
        recorder.flush()
    if clamps:
        log.warning("clamped negative ODE coordinates to zero %d times", clamps)
    stats = RunStats(engine="ode", termination="completed", t_end=float(t_fin),
                     clamp_warnings=clamps, wall_seconds=time.perf_counter() - start)
    return y, stats
