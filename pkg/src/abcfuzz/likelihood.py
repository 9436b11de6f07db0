"""Directed log-likelihood shared by both samplers.

The score of particle x against target t is

    log L(x) = -||x - t||_2 / scale - alpha * |x[0]|

i.e. a normalized Euclidean distance term plus a penalty for deviating
from zero in the first dimension. Samplers only ever use log-likelihood
differences, so the linear-scale likelihood is never materialized.
"""

import numpy as np

from .core import ConfigError, LikelihoodConfig, Particle, ParticleSet


def log_likelihood_values(values: np.ndarray, config: LikelihoodConfig) -> np.ndarray:
    """Score each row of an (N, D) matrix; returns N log-likelihoods.

    Array-level entry point used inside sampler loops; the typed ops below
    wrap it.
    """
    if values.shape[1] != config.target.dim:
        raise ConfigError(
            f"particles have {values.shape[1]} dims but target has {config.target.dim}")
    diffs = values - config.target.values
    # coordinates near the float ceiling overflow the norm to inf; that is a
    # legitimate -inf score, handled downstream as weight degeneracy
    with np.errstate(over="ignore"):
        distances = np.linalg.norm(diffs, axis=1)
    return -(distances / config.scale) - config.alpha * np.abs(values[:, 0])


def log_likelihood(particle: Particle, config: LikelihoodConfig) -> float:
    """Score a single particle. Finite for all finite inputs."""
    return float(log_likelihood_values(particle.values[np.newaxis, :], config)[0])


def log_likelihood_batch(particles: ParticleSet, config: LikelihoodConfig) -> np.ndarray:
    """Elementwise scores for a whole set, order-preserving."""
    return log_likelihood_values(particles.values, config)
