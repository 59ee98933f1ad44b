"""Weighted power variations of iterated Brownian motion."""

import json

from ._ibmvar import (
    ArgumentError,
    InvariantViolation,
    ResourceError,
    gaussian_moment,
    variance_of,
    weights,
)
from . import _ibmvar

__all__ = [
    "ArgumentError",
    "InvariantViolation",
    "ResourceError",
    "default_config",
    "finite_rows",
    "gaussian_moment",
    "identity_suite",
    "limit_rows",
    "presets",
    "run_experiment",
    "variance_of",
    "weights",
]


def presets():
    """Theorem ids with parity, default kappa, functional and limit."""
    return json.loads(_ibmvar._presets_json())


def default_config(theorem_id):
    return json.loads(_ibmvar._default_config_json(theorem_id))


def _config_text(config):
    if "theorem_id" not in config:
        raise ArgumentError("config needs a theorem_id")
    return json.dumps(config)


def run_experiment(config, include_timing=True):
    """Runs a convergence experiment; fields missing from `config` take the
    preset defaults. Returns the report as a dict."""
    return json.loads(_ibmvar._run_experiment_json(_config_text(config), include_timing))


def identity_suite(seed=1, trials=200):
    return json.loads(_ibmvar._identity_suite_json(seed, trials))


def finite_rows(config, level, replicates):
    """Normalized finite-n rows (functional at the times, then X at the sites)."""
    return _ibmvar._finite_rows(_config_text(config), level, replicates)


def limit_rows(config, level, replicates):
    """Limit rows matching `finite_rows`."""
    return _ibmvar._limit_rows(_config_text(config), level, replicates)
