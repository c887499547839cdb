"""Built-in parameter sets, charcoal-vs-baseline runs and sensitivity sweeps."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Mapping, Optional

import numpy as np

from .integrator import IntegrationError, IntegratorConfig, Trajectory, integrate_adaptive
from .kinetics import BiocharParams, validate_params
from .nondim import FreeParams, apply_settings, build_params, dimensionless_rhs, OVERRIDE_PREFIX

_COMMON = dict(a1=1.0, a2=1.0, a3=1.9, b1=1.0, b2=1.0, b3=0.1, b4=1.0, mu=1.0)

SET1 = FreeParams(**_COMMON, K1=0.01, K2=1e-3, K3=1.0, U1=1.0, U2=1.0, U3=1.0, U4=1e3,
                  delta=10.0, n=10.0, tau=1.0, tau_unit="s")
SET2 = FreeParams(**_COMMON, K1=5e-8, K2=2e-8, K3=3e-10, U1=18.0, U2=0.2, U3=100.0, U4=180.0,
                  delta=2.0, n=10.0, tau=1.0, tau_unit="year")
SET3 = FreeParams(**_COMMON, K1=5e-8, K2=5e-8, K3=5e-8, U1=3.6, U2=2.0, U3=100.0, U4=180.0,
                  delta=5.0, n=100.0, tau=1.0, tau_unit="year")

BUILTIN_SETS = {1: SET1, 2: SET2, 3: SET3}
DEFAULT_T_END = {1: 2000.0, 2: 10.0, 3: 10.0}
CHARCOAL_START = (1.0, 1.0, 1.0, 0.0)


class ParameterError(ValueError):
    def __init__(self, problems):
        super().__init__("invalid parameters: " + "; ".join(problems))
        self.problems = list(problems)


class ScenarioIntegrationError(IntegrationError):
    def __init__(self, variant: str, cause: IntegrationError):
        super().__init__(f"{variant} run failed: {cause}", cause.partial)
        self.variant = variant


@dataclass(frozen=True)
class Scenario:
    """A dimensionless run: ``initial`` and ``t_end`` are in reference units.

    ``overrides`` are ``(key, value)`` pairs applied to ``free`` before the
    dependent constants are derived; ``override.*`` keys pin those constants.
    """

    name: str
    free: FreeParams
    t_end: float
    initial: tuple[float, float, float, float] = CHARCOAL_START
    overrides: tuple[tuple[str, object], ...] = ()
    short_time: Optional[float] = None

    @cached_property
    def resolved(self) -> tuple[FreeParams, dict[str, float]]:
        return apply_settings(self.free, dict(self.overrides))

    @cached_property
    def params(self) -> BiocharParams:
        free, pinned = self.resolved
        return build_params(free, pinned)

    @property
    def baseline_initial(self) -> tuple[float, float, float, float]:
        u1, u2, _, u4 = self.initial
        return (u1, u2, 0.0, u4)

    @property
    def split_time(self) -> float:
        """Boundary between the short-time and long-time plot panels."""
        return self.short_time if self.short_time is not None else 0.01 * self.t_end

    @property
    def tag(self) -> str:
        """File-name stem: scenario name plus a hash of the overrides."""
        if not self.overrides:
            return self.name
        text = ";".join(f"{k}={v!r}" for k, v in sorted(self.overrides, key=lambda kv: kv[0]))
        return f"{self.name}-{hashlib.sha1(text.encode()).hexdigest()[:8]}"

    def with_overrides(self, overrides: Mapping[str, object] | tuple = (), **changes) -> "Scenario":
        items = dict(self.overrides)
        items.update(dict(overrides))
        return replace(self, overrides=tuple(items.items()), **changes)


def builtin_scenario(number: int, t_end: Optional[float] = None) -> Scenario:
    if number not in BUILTIN_SETS:
        raise ValueError(f"unknown parameter set {number}; choose from {sorted(BUILTIN_SETS)}")
    return Scenario(
        name=f"set{number}",
        free=BUILTIN_SETS[number],
        t_end=t_end if t_end is not None else DEFAULT_T_END[number],
        short_time=1.0 if number == 1 else None,
    )


@dataclass(frozen=True)
class ComparisonResult:
    scenario: Scenario
    with_charcoal: Trajectory
    baseline: Trajectory

    @property
    def times(self) -> np.ndarray:
        return self.with_charcoal.times

    @cached_property
    def delta_co2(self) -> np.ndarray:
        return self.with_charcoal.states[:, 3] - self.baseline.states[:, 3]


def default_config(sc: Scenario) -> IntegratorConfig:
    return IntegratorConfig(t_end=sc.t_end)


def run_scenario(sc: Scenario, cfg: Optional[IntegratorConfig] = None) -> ComparisonResult:
    """Integrate the scenario with and without initial charcoal on one sampling grid."""
    problems = validate_params(sc.params)
    if problems:
        raise ParameterError(problems)
    if any(v < 0 for v in sc.initial):
        raise ParameterError([f"initial state must be nonnegative, got {sc.initial}"])
    cfg = cfg or default_config(sc)
    if cfg.t_end != sc.t_end:
        cfg = replace(cfg, t_end=sc.t_end)
    rhs = dimensionless_rhs(sc.params)
    runs = {}
    for variant, y0 in (("with-charcoal", sc.initial), ("baseline", sc.baseline_initial)):
        try:
            runs[variant] = integrate_adaptive(rhs, y0, cfg)
        except IntegrationError as exc:
            raise ScenarioIntegrationError(variant, exc) from exc
    return ComparisonResult(sc, runs["with-charcoal"], runs["baseline"])


def _pins_only(sc: Scenario) -> tuple[tuple[str, object], ...]:
    return tuple((k, v) for k, v in sc.overrides if k.startswith(OVERRIDE_PREFIX))


def scale_u3(sc: Scenario, factor: float) -> Scenario:
    if not factor > 0:
        raise ValueError("factor must be positive")
    free, _ = sc.resolved
    if factor == 1:
        return sc
    return replace(sc, name=f"{sc.name}-u3x{factor:g}", free=replace(free, U3=free.U3 * factor),
                   overrides=_pins_only(sc))


def sensitivity_u3(sc: Scenario, factor: float, cfg: Optional[IntegratorConfig] = None) -> ComparisonResult:
    """Rerun with ``factor`` times as much charcoal (U3 scaled)."""
    return run_scenario(scale_u3(sc, factor), cfg)


def set_k2(sc: Scenario, new_K2: float) -> Scenario:
    """Scenario with K2 replaced; the horizon stretches by old/new K2 when K2 shrinks."""
    if not new_K2 > 0:
        raise ValueError("K2 must be positive")
    free, _ = sc.resolved
    if new_K2 == free.K2:
        return sc
    stretch = max(1.0, free.K2 / new_K2)
    return replace(
        sc,
        name=f"{sc.name}-k2_{new_K2:g}",
        free=replace(free, K2=new_K2),
        overrides=_pins_only(sc),
        t_end=sc.t_end * stretch,
        short_time=sc.short_time * stretch if sc.short_time is not None else None,
    )


def sensitivity_k2(sc: Scenario, new_K2: float, cfg: Optional[IntegratorConfig] = None) -> ComparisonResult:
    """Rerun with the charcoal breakdown constant K2 replaced."""
    return run_scenario(set_k2(sc, new_K2), cfg)


# -- trajectory diagnostics ---------------------------------------------------

def charcoal_half_life(traj: Trajectory) -> Optional[float]:
    """First time u3 falls below half its initial value, linearly interpolated."""
    u3 = traj.states[:, 2]
    half = 0.5 * u3[0]
    below = np.flatnonzero(u3 < half)
    if not below.size or u3[0] <= 0:
        return None
    i = int(below[0])
    t0, t1, y0, y1 = traj.times[i - 1], traj.times[i], u3[i - 1], u3[i]
    return float(t0 + (half - y0) * (t1 - t0) / (y1 - y0))


def emission_rate(result: ComparisonResult, t: float, variant: str = "with-charcoal") -> float:
    """d u4/dt at time ``t`` for one variant of a comparison."""
    traj = result.with_charcoal if variant == "with-charcoal" else result.baseline
    rhs = dimensionless_rhs(result.scenario.params)
    return float(rhs(t, traj.at(t))[3])


def sign_pattern(values, rel_deadband: float = 1e-3) -> str:
    """Run-length-compressed signs, ignoring entries below ``rel_deadband * max|values|``.

    >>> sign_pattern([0.0, 1e-9, -1.0, -2.0, 0.5])
    '-+'
    """
    values = np.asarray(values, dtype=float)
    cutoff = rel_deadband * float(np.max(np.abs(values))) if values.size else 0.0
    out = []
    for v in values:
        if abs(v) <= cutoff:
            continue
        c = "+" if v > 0 else "-"
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)
