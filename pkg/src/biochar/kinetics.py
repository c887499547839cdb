"""Reaction-network types, the mass-action rate engine and the biochar model.

Two independent routes to the same right-hand side live here: a generic
mass-action engine driven by a :class:`Mechanism`, and a hand-coded
:func:`biochar_rhs`. :func:`biochar_mechanism` builds the mechanism whose
generic right-hand side must agree with the hand-coded one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

#: Tolerated negative drift of a state component before it counts as an error.
_EPS = float(np.finfo(float).eps)
NEGATIVE_FLOOR = -1e-12

SPECIES_NAMES = ("Om", "M", "Ch", "CO2")


@dataclass(frozen=True)
class RateLaw:
    """Affine reaction-rate coefficient ``k(x) = scale * (slope * x / ref + intercept)``.

    ``ref`` is the reference concentration of the modulating species. It is
    1 for laws evaluated on dimensionless concentrations.
    """

    slope: float
    intercept: float
    scale: float = 1.0
    ref: float = 1.0

    def __call__(self, x: float = 0.0) -> float:
        return self.scale * (self.slope * x / self.ref + self.intercept)

    def derivative(self) -> float:
        """dk/dx, constant for an affine law."""
        return self.scale * self.slope / self.ref

    def scaled(self, factor: float) -> "RateLaw":
        return RateLaw(self.slope, self.intercept, self.scale * factor, self.ref)


UNIT_RATE = RateLaw(slope=0.0, intercept=1.0)


@dataclass(frozen=True)
class Species:
    name: str
    index: int


@dataclass(frozen=True)
class Reaction:
    """One irreversible reaction ``sum(alpha_i A_i) -> sum(beta_i A_i)``.

    ``rate_name`` is the symbolic name used in ``.rxn`` files; a reaction
    without a name runs at :data:`UNIT_RATE`.
    """

    reactant_coeffs: Mapping[str, float]
    product_coeffs: Mapping[str, float]
    rate: RateLaw = UNIT_RATE
    rate_name: Optional[str] = None
    rate_argument: Optional[str] = None

    def __post_init__(self):
        for side in (self.reactant_coeffs, self.product_coeffs):
            for name, c in side.items():
                if not (math.isfinite(c) and c >= 0):
                    raise ValueError(f"stoichiometric coefficient of {name!r} must be finite and >= 0, got {c!r}")
        if not any(self.reactant_coeffs.values()) and not any(self.product_coeffs.values()):
            raise ValueError("reaction has no nonzero coefficient")
        # drop explicit zeros so structural equality does not depend on them
        object.__setattr__(self, "reactant_coeffs", {k: float(v) for k, v in self.reactant_coeffs.items() if v})
        object.__setattr__(self, "product_coeffs", {k: float(v) for k, v in self.product_coeffs.items() if v})

    def species_names(self) -> set[str]:
        names = set(self.reactant_coeffs) | set(self.product_coeffs)
        if self.rate_argument is not None:
            names.add(self.rate_argument)
        return names


@dataclass(frozen=True)
class Mechanism:
    species: tuple[Species, ...] = ()
    reactions: tuple[Reaction, ...] = ()
    sources: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        names = [sp.name for sp in self.species]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate species names in {names}")
        if [sp.index for sp in self.species] != list(range(len(names))):
            raise ValueError("species indices must be 0..n-1 in order")
        known = set(names)
        for j, rxn in enumerate(self.reactions):
            missing = rxn.species_names() - known
            if missing:
                raise ValueError(f"reaction {j} references unknown species {sorted(missing)}")
        for name, value in self.sources.items():
            if name not in known:
                raise ValueError(f"source references unknown species {name!r}")
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"source of {name!r} must be finite and >= 0, got {value!r}")

    @classmethod
    def from_names(cls, names: Sequence[str], reactions=(), sources=None) -> "Mechanism":
        return cls(tuple(Species(n, i) for i, n in enumerate(names)), tuple(reactions), dict(sources or {}))

    @property
    def index(self) -> dict[str, int]:
        return {sp.name: sp.index for sp in self.species}

    def rate_table(self) -> dict[str, RateLaw]:
        """Named rate laws used by the reactions."""
        return {r.rate_name: r.rate for r in self.reactions if r.rate_name is not None}

    def stoichiometric_matrix(self) -> np.ndarray:
        """Net coefficients ``beta - alpha`` as an (n_species, n_reactions) array."""
        idx = self.index
        out = np.zeros((len(self.species), len(self.reactions)))
        for j, rxn in enumerate(self.reactions):
            for name, c in rxn.product_coeffs.items():
                out[idx[name], j] += c
            for name, c in rxn.reactant_coeffs.items():
                out[idx[name], j] -= c
        return out


@dataclass(frozen=True)
class BiocharParams:
    """Parameters of the four-species charcoal/soil model in dimensional units.

    Rates are per second; ``tau`` is the reference time in seconds and
    ``refs`` holds the reference concentrations (U1, U2, U3, U4).
    """

    k1: RateLaw
    k2: RateLaw
    k3: RateLaw
    k4: RateLaw
    delta: float
    eta: float
    mu: float
    n_co2: float
    source: float
    refs: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    tau: float = 1.0

    def replace(self, **changes) -> "BiocharParams":
        from dataclasses import replace

        return replace(self, **changes)


def validate_params(p: BiocharParams) -> list[str]:
    """Return every violated parameter restriction; an empty list means valid."""
    problems = []
    for name, law, strict in (("k1", p.k1, True), ("k2", p.k2, True), ("k3", p.k3, True), ("k4", p.k4, False)):
        if not law.intercept > 0:
            problems.append(f"{name}.intercept > 0")
        if not law.scale > 0:
            problems.append(f"{name}.scale > 0")
        if not law.ref > 0:
            problems.append(f"{name}.ref > 0")
        if strict and not law.slope > 0:
            problems.append(f"{name}.slope > 0")
        if not strict and law.slope != 0:
            problems.append(f"{name}.slope = 0")
    if not p.delta >= 1:
        problems.append("delta ≥ 1")
    # derived eta = delta/mu may round one ulp high
    if not p.delta * (1 + 4 * _EPS) >= p.eta * p.mu:
        problems.append("delta ≥ eta·mu")
    for name in ("eta", "mu", "n_co2"):
        if not getattr(p, name) > 0:
            problems.append(f"{name} > 0")
    if not p.source >= 0:
        problems.append("source ≥ 0")
    for i, u in enumerate(p.refs, start=1):
        if not u > 0:
            problems.append(f"U{i} > 0")
    if not p.tau > 0:
        problems.append("tau > 0")
    return problems


def clean_state(y) -> np.ndarray:
    """Check finiteness/positivity and clamp tiny negative drift to zero."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError(f"non-finite state {y}")
    bad = np.flatnonzero(y < NEGATIVE_FLOOR)
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"negative state component {i}: {y[i]!r}")
    return np.where(y < 0, 0.0, y)


def reaction_rates(m: Mechanism, y) -> np.ndarray:
    """Mass-action rates ``r_j = k_j(arg) * prod(y_i ** alpha_ij)``."""
    y = clean_state(y)
    idx = m.index
    rates = np.empty(len(m.reactions))
    for j, rxn in enumerate(m.reactions):
        arg = y[idx[rxn.rate_argument]] if rxn.rate_argument is not None else 0.0
        r = rxn.rate(arg)
        for name, alpha in rxn.reactant_coeffs.items():
            r *= y[idx[name]] ** alpha
        rates[j] = r
    return rates


def mechanism_rhs(m: Mechanism, y) -> np.ndarray:
    """Time derivative of every species under mass-action kinetics plus sources."""
    y = clean_state(y)
    rates = reaction_rates(m, y)
    idx = m.index
    dy = np.zeros(len(m.species))
    for j, rxn in enumerate(m.reactions):
        for name, c in rxn.product_coeffs.items():
            dy[idx[name]] += c * rates[j]
        for name, c in rxn.reactant_coeffs.items():
            dy[idx[name]] -= c * rates[j]
    for name, value in m.sources.items():
        dy[idx[name]] += value
    return dy


def biochar_rhs(p: BiocharParams, y) -> np.ndarray:
    """Hand-coded right-hand side of the four-species model."""
    u1, u2, u3, _ = clean_state(y)
    k1 = p.k1(u2)
    k2 = p.k2(u2)
    k3 = p.k3(u3)
    k4 = p.k4()
    growth = k3 * u2 * u1**p.delta
    return np.array(
        [
            -k1 * u1 - p.delta * growth + p.eta * k4 * u2 + p.source,
            p.mu * growth - k4 * u2,
            -k2 * u3,
            p.n_co2 * k1 * u1 + k2 * u3,
        ]
    )


def biochar_mechanism(p: BiocharParams) -> Mechanism:
    """Reactions Om -> n CO2, Ch -> CO2, M + δ Om -> (μ+1) M, M -> η Om and a source of Om."""
    reactions = (
        Reaction({"Om": 1.0}, {"CO2": p.n_co2}, p.k1, "k1", "M"),
        Reaction({"Ch": 1.0}, {"CO2": 1.0}, p.k2, "k2", "M"),
        Reaction({"M": 1.0, "Om": p.delta}, {"M": p.mu + 1.0}, p.k3, "k3", "Ch"),
        Reaction({"M": 1.0}, {"Om": p.eta}, p.k4, "k4", None),
    )
    return Mechanism.from_names(SPECIES_NAMES, reactions, {"Om": p.source})
