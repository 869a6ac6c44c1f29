"""Optimal 2D branched transport networks by functional lifting."""

import json as _json

from ._liftnet import (
    LiftnetError,
    TransportCost,
    cumulative_image,
    diffuse_flux_condition,
    triple_junction_certificate,
    uniform_element_count,
)
from . import _liftnet

__all__ = [
    "LiftnetError",
    "TransportCost",
    "cumulative_image",
    "diffuse_flux_condition",
    "oracle",
    "solve",
    "triple_junction_certificate",
    "uniform_element_count",
]


def solve(config):
    """Adaptive solve for a config dict (same layout as the CLI's JSON files)."""
    return _json.loads(_liftnet._solve_json(_json.dumps(config)))


def oracle(config):
    """Best candidate network for the config's 1-to-2 or 4-to-4 measures."""
    return _json.loads(_liftnet._oracle_json(_json.dumps(config)))
