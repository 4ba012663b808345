"""Time-optimal multi-quadrotor trajectories by modular Bayesian optimization.

Configurations are passed as keyword overrides (the same keys as the
``--config`` JSON file of the command line tool).
"""

import json as _json

from . import _core
from ._core import Environment, InfeasibleError, SwarmError, load_environment, parse_environment

__all__ = [
    "Environment",
    "InfeasibleError",
    "SwarmError",
    "cli",
    "equalize_intervals",
    "evaluate",
    "formation_baseline",
    "initialize",
    "load_environment",
    "optimize",
    "parse_environment",
    "verify",
]


def _config(overrides):
    return _json.dumps(overrides) if overrides else ""


def initialize(env, **config):
    """Synchronized initial allocation: dict with x, makespan, slowdown."""
    return _core.initialize(env, _config(config))


def evaluate(env, x, level=0, **config):
    """Ground-truth labels of allocation x (vehicles x segments) at a fidelity level."""
    return _core.evaluate(env, x, level, _config(config))


def optimize(env, multi_fidelity=False, **config):
    """Runs the optimizer; returns x, makespan, feasible, trace and warnings."""
    return _core.optimize(env, _config(config), multi_fidelity)


def formation_baseline(env):
    return _core.formation_baseline(env)


def verify(env, x, high_fidelity=False, **config):
    """Independent check of the trajectories of x: (passed, list of checks)."""
    return _core.verify(env, x, high_fidelity, _config(config))


def equalize_intervals(x, ranges):
    return _core.equalize_intervals(x, ranges)


def cli(*args):
    """Runs the command line tool in-process: (exit code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])
