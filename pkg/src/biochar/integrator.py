"""Explicit Runge-Kutta integrators.

:func:`integrate_adaptive` is a Dormand-Prince 5(4) pair with a PI step-size
controller; :func:`integrate_fixed_rk4` is classical RK4 at a fixed step and
serves as an independent reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .kinetics import NEGATIVE_FLOOR

Rhs = Callable[[float, np.ndarray], np.ndarray]

# Dormand-Prince coefficients (Hairer, Norsett & Wanner, Solving ODEs I, p. 178)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# PI controller exponents for a 5th-order error estimate (Hairer & Wanner, IV.2)
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5


@dataclass(frozen=True)
class LogSampling:
    """Zero plus ``per_decade`` log-spaced points from ``t_end * first_fraction`` to ``t_end``."""

    per_decade: int = 200
    first_fraction: float = 1e-7

    def times(self, t_end: float) -> np.ndarray:
        t0 = t_end * self.first_fraction
        decades = math.log10(t_end / t0)
        count = max(2, int(round(decades * self.per_decade)) + 1)
        grid = np.logspace(math.log10(t0), math.log10(t_end), count)
        grid[-1] = t_end
        return np.concatenate([[0.0], grid])


@dataclass(frozen=True)
class FixedGrid:
    times_: tuple[float, ...]

    def times(self, t_end: float) -> np.ndarray:
        grid = np.asarray(self.times_, dtype=float)
        grid = grid[(grid > 0) & (grid < t_end)]
        return np.concatenate([[0.0], grid, [t_end]])


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    rel_tol: float = 1e-8
    abs_tol: Union[float, Sequence[float]] = 1e-10
    max_steps: int = 1_000_000
    initial_step: Optional[float] = None
    sampling: Union[LogSampling, FixedGrid] = field(default_factory=LogSampling)

    def __post_init__(self):
        if not self.rel_tol > 0 or not np.all(np.asarray(self.abs_tol) > 0):
            raise ValueError("tolerances must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be positive")


@dataclass(frozen=True)
class Monitors:
    min_component: float
    steps: int
    rejected: int


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    monitors: Monitors
    complete: bool = True
    error: Optional[str] = None

    def __post_init__(self):
        self.times.setflags(write=False)
        self.states.setflags(write=False)

    def at(self, t: float) -> np.ndarray:
        """State at ``t`` by linear interpolation between samples."""
        return np.array([np.interp(t, self.times, self.states[:, i]) for i in range(self.states.shape[1])])


class IntegrationError(RuntimeError):
    def __init__(self, message: str, partial: Optional[Trajectory] = None):
        super().__init__(message)
        self.partial = partial


class PositivityError(IntegrationError):
    def __init__(self, component: int, time: float, value: float, partial: Optional[Trajectory] = None):
        super().__init__(f"component {component} fell to {value!r} at t={time!r}", partial)
        self.component = component
        self.time = time
        self.value = value


def _check_y0(y0) -> np.ndarray:
    y = np.array(y0, dtype=float)
    if y.ndim != 1 or not np.all(np.isfinite(y)):
        raise ValueError(f"initial state must be a finite vector, got {y0!r}")
    if np.any(y < 0):
        raise ValueError(f"initial state must be nonnegative, got {y0!r}")
    return y


def _initial_step(rhs: Rhs, y: np.ndarray, f0: np.ndarray, atol, rtol: float, span: float) -> float:
    # Hairer & Wanner's starting-step heuristic
    scale = atol + rtol * np.abs(y)
    d0 = np.max(np.abs(y) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = rhs(h0, np.maximum(y + h0 * f0, 0.0))
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def integrate_adaptive(rhs: Rhs, y0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from 0 to ``cfg.t_end``.

    Steps are shortened to land exactly on every sample time, so sampled
    states carry the full accuracy of the method. Components that drift into
    ``[-1e-12, 0)`` are clamped to zero after each accepted step. A step
    that would go lower is retried with half the size. :class:`PositivityError`
    is raised if the step underflows or if the field points out of the
    nonnegative orthant at a component sitting on zero. Running out of steps raises
    :class:`IntegrationError` carrying the partial trajectory.
    """
    y = _check_y0(y0)
    samples = cfg.sampling.times(cfg.t_end)
    atol = np.broadcast_to(np.asarray(cfg.abs_tol, dtype=float), y.shape)
    rtol = cfg.rel_tol

    out_t = [0.0]
    out_y = [y.copy()]
    t = 0.0
    f = np.asarray(rhs(t, y), dtype=float)
    h = cfg.initial_step or _initial_step(rhs, y, f, atol, rtol, cfg.t_end)
    err_prev = 1e-4
    steps = rejected = 0
    min_seen = float(np.min(y))
    k = np.empty((7, y.size))
    next_i = 1

    def partial(msg):
        mon = Monitors(min_seen, steps, rejected)
        return Trajectory(np.array(out_t), np.array(out_y), mon, complete=False, error=msg)

    while next_i < len(samples):
        if steps + rejected >= cfg.max_steps:
            msg = f"max_steps={cfg.max_steps} exceeded at t={t!r}"
            raise IntegrationError(msg, partial(msg))
        target = samples[next_i]
        hit = t + h >= target * (1 - 1e-14)
        step = target - t if hit else h

        k[0] = f
        try:
            for s in range(1, 7):
                k[s] = rhs(t + _C[s] * step, y + step * (np.dot(_A[s], k[:s])))
        except ValueError as exc:
            # a stage left the admissible region; retry with a shorter step
            rejected += 1
            h = step * MIN_FACTOR
            if h <= 1e-15 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t={t!r}: {exc}", partial(str(exc))) from exc
            continue
        y_new = y + step * np.dot(_B5[:6], k[:6])
        if not np.all(np.isfinite(y_new)):
            rejected += 1
            h = step * MIN_FACTOR
            continue
        err_vec = step * np.dot(_E, k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))

        low = float(np.min(y_new))
        if err <= 1.0 and low < NEGATIVE_FLOOR:
            # the exact solution of a positive system cannot cross zero; shrink until it does not
            rejected += 1
            h = step * 0.5
            if h <= 1e-15 * max(1.0, abs(t)):
                i = int(np.argmin(y_new))
                raise PositivityError(i, t + step, low, partial(f"positivity violated in component {i}"))
            continue
        if err <= 1.0:
            steps += 1
            t = target if hit else t + step
            min_seen = min(min_seen, low)
            y = np.where(y_new < 0, 0.0, y_new)
            f = k[6].copy() if low >= 0 else np.asarray(rhs(t, y), dtype=float)
            outward = (y <= 0) & (f < -atol)
            if np.any(outward):
                # the field points out of the orthant on its boundary: no step size can help
                i = int(np.flatnonzero(outward)[0])
                out_t.append(t)
                out_y.append(y.copy())
                raise PositivityError(i, t, float(f[i]), partial(f"positivity violated in component {i}"))
            if hit:
                out_t.append(t)
                out_y.append(y.copy())
                next_i += 1
            e = max(err, 1e-10)
            factor = SAFETY * e**-_ALPHA * err_prev**_BETA
            err_prev = e
            # a grid-shortened step says nothing about the step size the controller wanted
            h_basis = max(step, h) if hit else step
            h = min(h_basis * min(MAX_FACTOR, max(MIN_FACTOR, factor)), cfg.t_end)
        else:
            rejected += 1
            h = step * max(MIN_FACTOR, SAFETY * err ** (-1 / 5))

    return Trajectory(np.array(out_t), np.array(out_y), Monitors(min_seen, steps, rejected))


def rk4_step(rhs: Rhs, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + dt / 2, y + dt / 2 * k1)
    k3 = rhs(t + dt / 2, y + dt / 2 * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_fixed_rk4(rhs: Rhs, y0, dt: float, t_end: float, record_every: int = 1) -> Trajectory:
    """Classical fourth-order Runge-Kutta with constant step ``dt``.

    The last step is shortened to end exactly at ``t_end``. Every
    ``record_every``-th step is stored, plus the final state. Time stamps are
    ``i * dt`` so they do not accumulate rounding.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    y = np.array(y0, dtype=float)
    n_full = int(math.floor(t_end / dt * (1 + 1e-12)))
    times = [0.0]
    states = [y.copy()]
    min_seen = float(np.min(y))
    t = 0.0
    i = 0
    while True:
        if i < n_full:
            t_next, step = (i + 1) * dt, dt
        elif t < t_end * (1 - 1e-14):
            t_next, step = t_end, t_end - t
        else:
            break
        y = rk4_step(rhs, t, y, step)
        i += 1
        t = t_next
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at t={t!r}")
        min_seen = min(min_seen, float(np.min(y)))
        if i % record_every == 0 or t >= t_end * (1 - 1e-14):
            times.append(t)
            states.append(y.copy())
    return Trajectory(np.array(times), np.array(states), Monitors(min_seen, i, 0))
