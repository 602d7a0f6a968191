"""Hand-written right-hand sides used as independent oracles for derive_rates."""

import numpy as np

LOTKA = dict(a=0.5, b=0.001, c=0.5, d=0.001)


def lotka_rhs(p1, p2, a, b, c, d):
    # collected form: dP1 = P1 (a - b P2), dP2 = -P2 (c - d P1)
    return np.array([p1 * (a - b * p2), -p2 * (c - d * p1)])


CIRCADIAN = dict(
    alpha_A=50.0, alpha_pA=500.0, alpha_R=0.01, alpha_pR=50.0,
    beta_A=50.0, beta_R=5.0, delta_MA=10.0, delta_MR=0.5,
    delta_A=1.0, delta_R=0.05, gamma_A=1.0, gamma_R=1.0, gamma_C=2.0,
    theta_A=50.0, theta_R=100.0,
)

CIRCADIAN_ORDER = ["D_A", "D'_A", "D_R", "D'_R", "M_A", "M_R", "A", "R", "C"]


def circadian_rhs(s, p, misprint=False):
    """Activator/repressor ODEs. ``misprint=True`` uses D'_R in the D'_A
    gain term, the way the equations are sometimes printed."""
    DA, DpA, DR, DpR, MA, MR, A, R, C = (s[k] for k in CIRCADIAN_ORDER)
    gain_A = p["gamma_A"] * (DpR if misprint else DA) * A
    return {
        "D_A": p["theta_A"] * DpA - p["gamma_A"] * DA * A,
        "D_R": p["theta_R"] * DpR - p["gamma_R"] * DR * A,
        "D'_A": gain_A - p["theta_A"] * DpA,
        "D'_R": p["gamma_R"] * DR * A - p["theta_R"] * DpR,
        "M_A": p["alpha_pA"] * DpA + p["alpha_A"] * DA - p["delta_MA"] * MA,
        "A": (p["beta_A"] * MA + p["theta_A"] * DpA + p["theta_R"] * DpR
              - A * (p["gamma_A"] * DA + p["gamma_R"] * DR + p["gamma_C"] * R + p["delta_A"])),
        "M_R": p["alpha_pR"] * DpR + p["alpha_R"] * DR - p["delta_MR"] * MR,
        "R": p["beta_R"] * MR - p["gamma_C"] * A * R + p["delta_A"] * C - p["delta_R"] * R,
        "C": p["gamma_C"] * A * R - p["delta_A"] * C,
    }


def rel_close(x, y, tol):
    x, y = np.asarray(x, float), np.asarray(y, float)
    scale = np.maximum(np.maximum(np.abs(x), np.abs(y)), 1e-300)
    return bool(np.all(np.abs(x - y) <= tol * scale))
