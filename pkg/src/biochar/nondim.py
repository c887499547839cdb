"""Scaling between dimensional and dimensionless forms of the model.

Holds the free (table-style) parameters, the normalization chain that fixes
the dependent constants, the nine characteristic time scales, and the flat
``key = value`` parameter-config format.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, Mapping

import numpy as np

from .kinetics import BiocharParams, RateLaw, biochar_rhs, clean_state

SECONDS_PER = {
    "s": 1.0,
    "min": 60.0,
    "h": 3600.0,
    "day": 86400.0,
    "year": 365.25 * 86400.0,
}

PINNABLE = ("eta", "s", "K4", "alpha")


@dataclass(frozen=True)
class FreeParams:
    """Parameters chosen by the modeller; everything else is derived from them.

    Rates ``K*`` are per second, ``tau`` is expressed in ``tau_unit``.
    """

    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    b3: float
    b4: float
    K1: float
    K2: float
    K3: float
    U1: float
    U2: float
    U3: float
    U4: float
    mu: float
    delta: float
    n: float
    tau: float = 1.0
    tau_unit: str = "s"

    @property
    def tau_seconds(self) -> float:
        try:
            return self.tau * SECONDS_PER[self.tau_unit]
        except KeyError:
            raise ValueError(f"unknown tau_unit {self.tau_unit!r}; expected one of {sorted(SECONDS_PER)}") from None


@dataclass(frozen=True)
class DerivedConstants:
    eta: float
    source: float
    K4: float
    alpha: float


@dataclass(frozen=True)
class TimeScales:
    tau1: float
    tau2: float
    tau3: float
    tau4: float
    tau5: float
    tau6: float
    tau7: float
    tau8: float
    tau9: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


def derive_constants(free: FreeParams) -> DerivedConstants:
    """Fix eta, alpha, the source and K4 so the system is balanced and normalized.

    The microbial equilibrium is placed at (U1, U2) in dimensional units, i.e.
    at (1, 1) in dimensionless ones.
    """
    if not (free.a1 > 0 and free.b1 > 0):
        raise ValueError("derive_constants needs a1 > 0 and b1 > 0")
    eta = free.delta / free.mu
    alpha = 1.0 + free.a1 / free.b1
    source = alpha * free.K1 * free.b1 * free.U1
    K4 = free.U1**free.delta * free.K3 * free.mu * free.b3 / free.b4
    return DerivedConstants(eta=eta, source=source, K4=K4, alpha=alpha)


def build_params(free: FreeParams, pinned: Mapping[str, float] | None = None) -> BiocharParams:
    """Dimensional model parameters from free values plus optional pinned constants.

    ``pinned`` may hold ``eta``, ``s``, ``K4`` or ``alpha``; an ``alpha`` pin
    feeds back into the source unless ``s`` is pinned too.
    """
    pinned = dict(pinned or {})
    unknown = set(pinned) - set(PINNABLE)
    if unknown:
        raise ValueError(f"cannot pin {sorted(unknown)}; pinnable constants are {PINNABLE}")
    d = derive_constants(free)
    if "alpha" in pinned:
        d = replace(d, alpha=pinned["alpha"], source=pinned["alpha"] * free.K1 * free.b1 * free.U1)
    if "eta" in pinned:
        d = replace(d, eta=pinned["eta"])
    if "s" in pinned:
        d = replace(d, source=pinned["s"])
    if "K4" in pinned:
        d = replace(d, K4=pinned["K4"])
    return BiocharParams(
        k1=RateLaw(free.a1, free.b1, free.K1, free.U2),
        k2=RateLaw(free.a2, free.b2, free.K2, free.U2),
        k3=RateLaw(free.a3, free.b3, free.K3, free.U3),
        k4=RateLaw(0.0, free.b4, d.K4),
        delta=free.delta,
        eta=d.eta,
        mu=free.mu,
        n_co2=free.n,
        source=d.source,
        refs=(free.U1, free.U2, free.U3, free.U4),
        tau=free.tau_seconds,
    )


def time_scales(p: BiocharParams) -> TimeScales:
    tau = p.tau
    U1, U2, U3, U4 = p.refs
    K1, K2, K3, K4 = p.k1.scale, p.k2.scale, p.k3.scale, p.k4.scale
    return TimeScales(
        tau1=tau * K1,
        tau2=tau * p.delta * K3 * U1 ** (p.delta - 1) * U2,
        tau3=tau * p.eta * K4 * U2 / U1,
        tau4=tau / U1,
        tau5=tau * p.mu * K3 * U1**p.delta,
        tau6=tau * K4,
        tau7=tau * K2,
        tau8=tau * p.n_co2 * K1 * U1 / U4,
        tau9=tau * K2 * U3 / U4,
    )


def check_ordering(p: BiocharParams) -> tuple[bool, str]:
    """Test ``K2 < K1/2 < min(K3_eff, K4)/2``.

    ``K3_eff = K3 * U1**delta`` puts the growth coefficient in per-second units
    (it multiplies ``u1**delta``).
    """
    K1, K2, K4 = p.k1.scale, p.k2.scale, p.k4.scale
    K3_eff = p.k3.scale * p.refs[0] ** p.delta
    first = K2 < 0.5 * K1
    second = 0.5 * K1 < 0.5 * min(K3_eff, K4)
    report = (
        f"K2 = {K2:g} {'<' if first else '>='} K1/2 = {0.5 * K1:g}; "
        f"K1/2 = {0.5 * K1:g} {'<' if second else '>='} min(K3_eff, K4)/2 = {0.5 * min(K3_eff, K4):g}"
    )
    return first and second, report


def to_dimensionless(p: BiocharParams, y) -> np.ndarray:
    return np.asarray(y, dtype=float) / np.asarray(p.refs)


def to_dimensional(p: BiocharParams, y) -> np.ndarray:
    return np.asarray(y, dtype=float) * np.asarray(p.refs)


def _unit_law(law: RateLaw) -> RateLaw:
    return RateLaw(law.slope, law.intercept)


def dimensionless_rhs(p: BiocharParams) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand side ``f(t, y)`` of the scaled system in dimensionless time."""
    ts = time_scales(p)
    k1, k2, k3, k4 = (_unit_law(law) for law in (p.k1, p.k2, p.k3, p.k4))
    delta, s = p.delta, p.source

    def rhs(t, y):
        u1, u2, u3, _ = clean_state(y)
        kk1, kk2, kk3, kk4 = k1(u2), k2(u2), k3(u3), k4()
        growth = kk3 * u1**delta * u2
        return np.array(
            [
                -ts.tau1 * kk1 * u1 - ts.tau2 * growth + ts.tau3 * kk4 * u2 + ts.tau4 * s,
                ts.tau5 * growth - ts.tau6 * kk4 * u2,
                -ts.tau7 * kk2 * u3,
                ts.tau8 * kk1 * u1 + ts.tau9 * kk2 * u3,
            ]
        )

    return rhs


def dimensional_rhs(p: BiocharParams) -> Callable[[float, np.ndarray], np.ndarray]:
    return lambda t, y: biochar_rhs(p, y)


# -- parameter config files ---------------------------------------------------

_FREE_KEYS = tuple(f.name for f in fields(FreeParams))
OVERRIDE_PREFIX = "override."


def parse_config(text: str) -> dict[str, float | str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    Keys are free-parameter names or ``override.<constant>`` pins.
    """
    out: dict[str, float | str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = _coerce(key, value, lineno)
    return out


def _coerce(key: str, value: str, lineno: int | None = None) -> float | str:
    where = f"line {lineno}: " if lineno is not None else ""
    if key == "tau_unit":
        if value not in SECONDS_PER:
            raise ValueError(f"{where}unknown tau_unit {value!r}")
        return value
    if key.startswith(OVERRIDE_PREFIX):
        if key[len(OVERRIDE_PREFIX):] not in PINNABLE:
            raise ValueError(f"{where}cannot override {key!r}; pinnable: {', '.join(PINNABLE)}")
    elif key not in _FREE_KEYS:
        raise ValueError(f"{where}unknown parameter {key!r}")
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"{where}{key}: not a number: {value!r}") from None
    if not math.isfinite(number):
        raise ValueError(f"{where}{key}: value must be finite")
    return number


def parse_override(item: str) -> tuple[str, float | str]:
    """Parse one ``KEY=VAL`` command-line override."""
    if "=" not in item:
        raise ValueError(f"override {item!r} is not KEY=VAL")
    key, value = (part.strip() for part in item.split("=", 1))
    return key, _coerce(key, value)


def apply_settings(free: FreeParams, settings: Mapping[str, float | str]) -> tuple[FreeParams, dict[str, float]]:
    """Split settings into updated free parameters and pinned constants."""
    plain = {k: v for k, v in settings.items() if not k.startswith(OVERRIDE_PREFIX)}
    pinned = {k[len(OVERRIDE_PREFIX):]: float(v) for k, v in settings.items() if k.startswith(OVERRIDE_PREFIX)}
    return replace(free, **plain), pinned


def format_config(free: FreeParams, pinned: Mapping[str, float] | None = None) -> str:
    lines = [f"{k} = {v!r}" if not isinstance(v, str) else f"{k} = {v}" for k, v in asdict(free).items()]
    lines += [f"{OVERRIDE_PREFIX}{k} = {v!r}" for k, v in (pinned or {}).items()]
    return "\n".join(lines) + "\n"
