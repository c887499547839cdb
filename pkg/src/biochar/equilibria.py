"""Steady states of the reduced (Om, M, Ch) system and their stability.

CO2 never feeds back into the other equations, so equilibria are sought for
the first three components only. All quantities are dimensional.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .kinetics import BiocharParams

MARGINAL_BAND = 1e-10
BISECTION_ITERATIONS = 200
BRACKET_LIMIT = 1e9


class Verdict(str, Enum):
    STABLE = "asymptotically stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class Regime(str, Enum):
    BOUNDED = "bounded"
    DEGENERATE_LINE = "degenerate-line"
    BLOW_UP_PRONE = "blow-up-prone"


class NoRootError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EquilibriumPoint:
    kind: str  # "trivial" (microbe-free) or "microbial"
    point: tuple[float, float, float]
    jacobian: np.ndarray
    eigenvalues: tuple[complex, complex, complex]
    verdict: Verdict


@dataclass(frozen=True)
class SubsystemReport:
    C1: float
    U1: float
    regime: Regime
    conserved: bool
    equilibrium_line: Optional[float] = None


def reduced_rhs(p: BiocharParams, y) -> np.ndarray:
    """Right-hand side of (u1, u2, u3); unlike the full model it accepts any real state."""
    u1, u2, u3 = (float(v) for v in y)
    k1, k3, k4 = p.k1(u2), p.k3(u3), p.k4()
    growth = k3 * u2 * u1**p.delta
    return np.array(
        [
            -k1 * u1 - p.delta * growth + p.eta * k4 * u2 + p.source,
            p.mu * growth - k4 * u2,
            -p.k2(u2) * u3,
        ]
    )


def u1_star(p: BiocharParams) -> float:
    """Organic-matter level at which microbial growth balances death."""
    return (p.k4() / (p.mu * p.k3(0.0))) ** (1.0 / p.delta)


def bifurcation_threshold(p: BiocharParams) -> float:
    """Source level above which the microbial equilibrium exists."""
    return p.k1(0.0) * u1_star(p)


def _u2_residual(p: BiocharParams, U1: float, u2: float) -> float:
    return -p.k1(u2) * U1 - (p.k4() / p.mu) * (p.delta - p.eta * p.mu) * u2 + p.source


def solve_u2_star(p: BiocharParams) -> Optional[float]:
    """Microbe concentration of the microbial equilibrium, or None below the threshold.

    The residual is strictly decreasing in u2, so bisection on a doubling
    bracket always converges.
    """
    U1 = u1_star(p)
    if not p.source > p.k1(0.0) * U1:
        return None
    U2 = p.refs[1]
    lo, hi = 0.0, U2
    while _u2_residual(p, U1, hi) >= 0:
        lo, hi = hi, 2 * hi
        if hi > BRACKET_LIMIT * U2:
            raise NoRootError(f"no sign change of the u2* residual below {BRACKET_LIMIT:g}*U2")
    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _u2_residual(p, U1, mid) > 0:
            lo = mid
        else:
            hi = mid
    r_lo, r_hi = _u2_residual(p, U1, lo), _u2_residual(p, U1, hi)
    return lo if abs(r_lo) <= abs(r_hi) else hi


def jacobian_ue1(p: BiocharParams) -> np.ndarray:
    s, k10, k3, k4 = p.source, p.k1(0.0), p.k3(0.0), p.k4()
    u1 = s / k10
    return np.array(
        [
            [-k10, -p.k1.derivative() / k10 * s - p.delta * k3 * u1**p.delta + p.eta * k4, 0.0],
            [0.0, p.mu * k3 * u1**p.delta - k4, 0.0],
            [0.0, 0.0, -p.k2(0.0)],
        ]
    )


def jacobian_ue2(p: BiocharParams, u2: Optional[float] = None) -> np.ndarray:
    if u2 is None:
        u2 = solve_u2_star(p)
        if u2 is None:
            raise ValueError("the microbial equilibrium does not exist below the bifurcation threshold")
    U1 = u1_star(p)
    d, mu, eta = p.delta, p.mu, p.eta
    k3, dk3, k4 = p.k3(0.0), p.k3.derivative(), p.k4()
    return np.array(
        [
            [
                -p.k1(u2) - d * d * k3 * u2 * U1 ** (d - 1),
                -p.k1.derivative() * U1 - k4 / mu * (d - eta * mu),
                -d / mu * dk3 / k3 * k4 * u2,
            ],
            [d * mu * k3 * u2 * U1 ** (d - 1), 0.0, dk3 / k3 * k4 * u2],
            [0.0, 0.0, -p.k2(u2)],
        ]
    )


def _cubic_roots(c2: float, c1: float, c0: float) -> list[complex]:
    """Roots of ``x^3 + c2 x^2 + c1 x + c0`` by Cardano's formula."""
    shift = c2 / 3
    q = c1 - c2 * c2 / 3
    r = 2 * c2**3 / 27 - c2 * c1 / 3 + c0
    disc = (r / 2) ** 2 + (q / 3) ** 3
    sq = cmath.sqrt(disc)
    a = -r / 2 + sq
    if abs(a) < abs(-r / 2 - sq):
        a = -r / 2 - sq
    if a == 0:
        return [-shift + 0j] * 3
    A = complex(a) ** (1 / 3)
    omega = complex(-0.5, math.sqrt(3) / 2)
    roots = []
    for w in (1, omega, omega.conjugate()):
        Aw = A * w
        roots.append(Aw - q / (3 * Aw) - shift)
    return roots


def _block_2x2(a: float, b: float, c: float, d: float) -> tuple[complex, complex]:
    half_trace = (a + d) / 2
    root = cmath.sqrt(((a - d) / 2) ** 2 + b * c)
    return half_trace + root, half_trace - root


def eigenvalues_3x3(J) -> tuple[complex, complex, complex]:
    """Eigenvalues of a 3x3 matrix in closed form.

    Upper-triangular matrices return their diagonal; matrices whose last row is
    ``(0, 0, x)`` split into a 2x2 block and ``x``; anything else goes through
    the characteristic cubic.
    """
    J = np.asarray(J, dtype=float)
    if J[2, 0] == 0 and J[2, 1] == 0:
        if J[1, 0] == 0:
            return complex(J[0, 0]), complex(J[1, 1]), complex(J[2, 2])
        l1, l2 = _block_2x2(J[0, 0], J[0, 1], J[1, 0], J[1, 1])
        return l1, l2, complex(J[2, 2])
    trace = float(np.trace(J))
    minors = (
        J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
        + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1]
    )
    det = float(np.linalg.det(J))
    r = _cubic_roots(-trace, minors, -det)
    return r[0], r[1], r[2]


def classify(eigenvalues) -> Verdict:
    top = max(ev.real for ev in eigenvalues)
    if top <= -MARGINAL_BAND:
        return Verdict.STABLE
    if top >= MARGINAL_BAND:
        return Verdict.UNSTABLE
    return Verdict.MARGINAL


def find_equilibria(p: BiocharParams) -> list[EquilibriumPoint]:
    """The microbe-free equilibrium, plus the microbial one above the threshold."""
    J1 = jacobian_ue1(p)
    ev1 = eigenvalues_3x3(J1)
    points = [EquilibriumPoint("trivial", (p.source / p.k1(0.0), 0.0, 0.0), J1, ev1, classify(ev1))]
    u2 = solve_u2_star(p)
    if u2 is not None:
        J2 = jacobian_ue2(p, u2)
        ev2 = eigenvalues_3x3(J2)
        points.append(EquilibriumPoint("microbial", (u1_star(p), u2, 0.0), J2, ev2, classify(ev2)))
    return points


def subsystem_rhs(p: BiocharParams, y) -> np.ndarray:
    """Growth/death block alone: no source, no mineralization, no charcoal."""
    om, m = (float(v) for v in y)
    k3, k4 = p.k3(0.0), p.k4()
    growth = k3 * m * om**p.delta
    return np.array([-p.delta * growth + p.eta * k4 * m, p.mu * growth - k4 * m])


def analyze_subsystem(p: BiocharParams) -> SubsystemReport:
    """Classify the growth/death block by comparing delta with eta*mu.

    The delta >= eta*mu restriction is deliberately not enforced here.
    """
    k3, k4 = p.k3(0.0), p.k4()
    C1 = (p.eta * k4 / (p.delta * k3)) ** (1.0 / p.delta)
    U1 = (k4 / (p.mu * k3)) ** (1.0 / p.delta)
    balance = p.eta * p.mu
    if math.isclose(p.delta, balance, rel_tol=1e-12, abs_tol=0.0):
        return SubsystemReport(C1, U1, Regime.DEGENERATE_LINE, True, equilibrium_line=U1)
    regime = Regime.BOUNDED if p.delta > balance else Regime.BLOW_UP_PRONE
    return SubsystemReport(C1, U1, regime, False)
