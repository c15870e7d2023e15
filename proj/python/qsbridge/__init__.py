"""Schrodinger bridges for pre- and post-selected quantum experiments.

Thin wrappers over the C++ core: numeric entry points pass numpy arrays
straight through; the ``run_*`` drivers take a config dict (or JSON text) and
return parsed documents.
"""

import json as _json

from ._core import (
    InputError,
    VerificationError,
    rate_function,
    solve_coupling,
)
from . import _core

__all__ = [
    "InputError",
    "VerificationError",
    "solve_coupling",
    "rate_function",
    "solve",
    "intermediate_csv",
    "weak",
    "simulate",
]


def _as_text(config):
    if isinstance(config, str):
        return config
    return _json.dumps(config)


def solve(config):
    """Solve the bridge and run the verification battery. Returns a dict."""
    return _json.loads(_core.run_solve(_as_text(config)))


def intermediate_csv(config):
    """Most likely intervening statistics over the tau grid, as CSV text."""
    return _core.run_intermediate(_as_text(config))


def weak(config):
    """Weak values (per-pair, most likely, finite-delta ladder). Returns a dict."""
    return _json.loads(_core.run_weak(_as_text(config)))


def simulate(config):
    """Sample endpoint records; exact Sanov report at 2x2. Returns a dict."""
    return _json.loads(_core.run_simulate(_as_text(config)))
