"""Kinetic model of charcoal added to a well-mixed soil and its effect on CO2 emission."""

from .kinetics import (
    BiocharParams,
    Mechanism,
    RateLaw,
    Reaction,
    Species,
    biochar_mechanism,
    biochar_rhs,
    mechanism_rhs,
    reaction_rates,
    validate_params,
)
from .parser import MechanismParseError, parse_mechanism, print_mechanism
from .scenarios import builtin_scenario, run_scenario, sensitivity_k2, sensitivity_u3

__all__ = [
    "BiocharParams",
    "Mechanism",
    "MechanismParseError",
    "RateLaw",
    "Reaction",
    "Species",
    "biochar_mechanism",
    "biochar_rhs",
    "builtin_scenario",
    "mechanism_rhs",
    "parse_mechanism",
    "print_mechanism",
    "reaction_rates",
    "run_scenario",
    "sensitivity_k2",
    "sensitivity_u3",
    "validate_params",
]
