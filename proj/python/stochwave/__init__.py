"""Gaussian field of the linear stochastic wave equation with Riesz noise."""

import json

from ._core import (
    NumericsError,
    covariance,
    covariance_matrix,
    gamma_modulus,
    riesz_spectral_constant,
    sample,
    set_num_threads,
    sigma_metric,
)
from . import _core

__all__ = [
    "NumericsError",
    "covariance",
    "covariance_matrix",
    "entropy",
    "gamma_modulus",
    "modulus",
    "proof_grid",
    "riesz_spectral_constant",
    "run_cli",
    "sample",
    "set_num_threads",
    "sigma_metric",
    "verify_lnd",
]


def verify_lnd(k, beta, trials=200, n_conditioning=4, seed=1, sectorial=False, a=1.0, a_prime=2.0, b=1.0):
    return json.loads(_core.lnd_report(k, beta, trials, n_conditioning, seed, sectorial, a, a_prime, b))


def proof_grid(k, beta, n_levels=6, sandwich_pairs=1000, seed=1):
    return json.loads(_core.proof_grid_report(k, beta, n_levels, sandwich_pairs, seed))


def modulus(k, beta, time_points=40, space_points=40, n_levels=6, n_samples=100, seed=1, sandwich_pairs=1000):
    return json.loads(
        _core.modulus_report(k, beta, time_points, space_points, n_levels, n_samples, seed, sandwich_pairs)
    )


def entropy(k, beta, time_points=60, space_points=60, epsilons=()):
    return json.loads(_core.entropy_report(k, beta, time_points, space_points, list(epsilons)))


def run_cli(args):
    """Run a CLI command in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
