"""Line-oriented ``.rxn`` reaction-mechanism format.

Example::

    species Om M Ch CO2
    Om -> 10 CO2 @rate(k1, arg=M)
    M + 10 Om -> 2 M @rate(k3, arg=Ch)
    source Om = 0.02

Rate laws are referenced by name only; their numbers come from a rate table
passed to :func:`parse_mechanism`.
"""
from __future__ import annotations

import math
import re
from typing import Mapping, Optional

from .kinetics import UNIT_RATE, Mechanism, RateLaw, Reaction, Species


class MechanismParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
        self.message = message


_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_NAME_RE = re.compile(rf"^{_NAME}$")
_RESERVED = {"species", "source"}
_RATE_RE = re.compile(rf"@rate\(\s*({_NAME})\s*(?:,\s*arg\s*=\s*({_NAME})\s*)?\)\s*$")
_TERM_RE = re.compile(rf"^(?:(\S+)\s+)?({_NAME})$")
_SOURCE_RE = re.compile(rf"^source\s+({_NAME})\s*=\s*(\S+)$")


def _number(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MechanismParseError(lineno, f"malformed {what} {token!r}") from None
    if not math.isfinite(value):
        raise MechanismParseError(lineno, f"{what} must be finite, got {token!r}")
    if value < 0:
        raise MechanismParseError(lineno, f"negative {what} {token!r}")
    return value


def _side(text: str, known: dict[str, int], lineno: int) -> dict[str, float]:
    text = text.strip()
    if text == "0":
        return {}
    if not text:
        raise MechanismParseError(lineno, "empty reaction side (write 0 for no species)")
    coeffs: dict[str, float] = {}
    for term in text.split("+"):
        m = _TERM_RE.match(term.strip())
        if not m:
            raise MechanismParseError(lineno, f"malformed term {term.strip()!r}")
        coeff = _number(m.group(1), lineno, "coefficient") if m.group(1) else 1.0
        name = m.group(2)
        if name not in known:
            raise MechanismParseError(lineno, f"unknown species {name!r}")
        coeffs[name] = coeffs.get(name, 0.0) + coeff
    return coeffs


def parse_mechanism(text: str, rates: Optional[Mapping[str, RateLaw]] = None) -> Mechanism:
    """Parse ``.rxn`` text into a :class:`Mechanism`.

    Reactions naming a rate absent from ``rates`` get :data:`UNIT_RATE` but keep
    the name, so the text still round-trips.
    """
    rates = rates or {}
    names: list[str] = []
    known: dict[str, int] = {}
    reactions: list[Reaction] = []
    sources: dict[str, float] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(None, 1)[0]
        if head == "species":
            for name in line.split()[1:]:
                if not _NAME_RE.match(name) or name in _RESERVED:
                    raise MechanismParseError(lineno, f"invalid species name {name!r}")
                if name in known:
                    raise MechanismParseError(lineno, f"duplicate species {name!r}")
                known[name] = len(names)
                names.append(name)
            continue
        if head == "source":
            m = _SOURCE_RE.match(line)
            if not m:
                raise MechanismParseError(lineno, "malformed source line, expected 'source S = value'")
            name = m.group(1)
            if name not in known:
                raise MechanismParseError(lineno, f"unknown species {name!r}")
            if name in sources:
                raise MechanismParseError(lineno, f"duplicate source for {name!r}")
            sources[name] = _number(m.group(2), lineno, "source")
            continue

        rate_name = arg = None
        if "@" in line:
            body, _, tail = line.partition("@")
            m = _RATE_RE.match("@" + tail)
            if not m:
                raise MechanismParseError(lineno, f"malformed rate annotation {'@' + tail!r}")
            rate_name, arg = m.group(1), m.group(2)
            if arg is not None and arg not in known:
                raise MechanismParseError(lineno, f"unknown species {arg!r}")
        else:
            body = line
        if body.count("->") != 1:
            raise MechanismParseError(lineno, "malformed arrow, expected exactly one '->'")
        lhs, rhs = body.split("->")
        reactants = _side(lhs, known, lineno)
        products = _side(rhs, known, lineno)
        if not any(reactants.values()) and not any(products.values()):
            raise MechanismParseError(lineno, "reaction has no nonzero coefficient")
        law = rates.get(rate_name, UNIT_RATE) if rate_name is not None else UNIT_RATE
        reactions.append(Reaction(reactants, products, law, rate_name, arg))

    return Mechanism(tuple(Species(n, i) for i, n in enumerate(names)), tuple(reactions), sources)


def _coeff(c: float) -> str:
    if c.is_integer() and abs(c) < 1e16:
        return str(int(c))
    return repr(c)


def _format_side(coeffs: Mapping[str, float], order: Mapping[str, int]) -> str:
    if not coeffs:
        return "0"
    terms = []
    for name in sorted(coeffs, key=order.__getitem__):
        c = coeffs[name]
        terms.append(name if c == 1.0 else f"{_coeff(c)} {name}")
    return " + ".join(terms)


def print_mechanism(m: Mechanism) -> str:
    """Canonical ``.rxn`` text; ``parse_mechanism(print_mechanism(m), m.rate_table())`` equals ``m``."""
    order = m.index
    lines = [" ".join(["species", *(sp.name for sp in m.species)])]
    for rxn in m.reactions:
        line = f"{_format_side(rxn.reactant_coeffs, order)} -> {_format_side(rxn.product_coeffs, order)}"
        if rxn.rate_name is not None:
            arg = f", arg={rxn.rate_argument}" if rxn.rate_argument is not None else ""
            line += f" @rate({rxn.rate_name}{arg})"
        lines.append(line)
    for name in sorted(m.sources, key=order.__getitem__):
        lines.append(f"source {name} = {_coeff(m.sources[name])}")
    return "\n".join(lines) + "\n"
