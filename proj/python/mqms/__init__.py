"""Python bindings for the mqms stability-region library."""

import json as _json

from ._mqms import (
    ChannelDistribution,
    ConfigError,
    ContractViolation,
    DomainError,
    LpInfeasible,
    LpUnbounded,
    Region,
    StateSpaceTooLarge,
    candidate_counts,
    candidate_weights,
    delay_bound,
    facet_rhs,
    fluid_boundary,
    fluid_rhs_closed,
    fluid_rhs_mc,
    margin,
    solve_utility,
    stability_polytope,
    vertex_for_direction,
)
from . import _mqms

__version__ = "0.1.0"


def _arrivals_json(arrivals):
    # Accepts the same list-of-dicts layout as the JSON config files.
    return arrivals if isinstance(arrivals, str) else _json.dumps(list(arrivals))


def simulate(dist, arrivals, slots, seed=1):
    """Run MW scheduling for `slots` slots and return summary statistics."""
    return _mqms._simulate(dist, _arrivals_json(arrivals), slots, seed)


def clc2b(dist, arrivals, utilities, V, r_max, slots, seed=1, eta=1.0):
    """Run the CLC2b flow controller on top of MW scheduling."""
    return _mqms._clc2b(dist, _arrivals_json(arrivals), utilities, V, list(r_max), slots, seed, eta)


__all__ = [
    "ChannelDistribution",
    "ConfigError",
    "ContractViolation",
    "DomainError",
    "LpInfeasible",
    "LpUnbounded",
    "Region",
    "StateSpaceTooLarge",
    "candidate_counts",
    "candidate_weights",
    "clc2b",
    "delay_bound",
    "facet_rhs",
    "fluid_boundary",
    "fluid_rhs_closed",
    "fluid_rhs_mc",
    "margin",
    "simulate",
    "solve_utility",
    "stability_polytope",
    "vertex_for_direction",
]
