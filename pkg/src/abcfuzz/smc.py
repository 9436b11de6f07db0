"""Sequential Monte Carlo: transition, reweight, resample, record.

The live population starts at the prior. Every step perturbs all particles
with a Gaussian random walk, reweights them by the directed likelihood,
records one posterior particle drawn by weight (pre-resampling
coordinates), then resamples the population systematically. Running T
steps therefore yields exactly T posterior particles regardless of the
population size.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ConfigError,
    DegenerateWeightsError,
    Particle,
    ParticleSet,
    RandomSource,
    SmcConfig,
    WEIGHT_SUM_TOLERANCE,
    _require,
)
from .likelihood import log_likelihood_values
from .oracle import CountingOracle, Oracle, pass_rate


@dataclass(frozen=True, eq=False)
class SmcResult:
    """Posterior particles plus per-step diagnostics for one run.

    ``weight_sum_series`` holds the log of the unnormalized weight sum at
    each step (raw sums underflow at high dimension, so the log is the
    stored quantity). ``ess_series`` holds the effective sample size
    1 / sum(w_i^2) of the normalized weights, always in [1, N].
    """

    posterior: ParticleSet
    weight_sum_series: np.ndarray
    ess_series: np.ndarray
    oracle_calls: int = 0
    prior_pass_rate: Optional[float] = None
    posterior_pass_rate: Optional[float] = None

    def to_dict(self) -> dict:
        """JSON-ready scalars and series (posterior particles go to CSV)."""
        return {
            "n_steps": int(self.weight_sum_series.size),
            "oracle_calls": self.oracle_calls,
            "prior_pass_rate": self.prior_pass_rate,
            "posterior_pass_rate": self.posterior_pass_rate,
            "weight_sum_series": [float(v) for v in self.weight_sum_series],
            "ess_series": [float(v) for v in self.ess_series],
        }


def transition(particle: Particle, step_std: float, rng: RandomSource) -> Particle:
    """Gaussian random-walk move: particle + Normal(0, step_std^2 I).

    Noise is drawn dimension-by-dimension in index order from ``rng``; the
    draw happens even when step_std is 0 so stream consumption does not
    depend on the value.
    """
    _require(step_std >= 0, f"step_std must be nonnegative, got {step_std!r}")
    noise = rng.standard_normal(particle.dim)
    return Particle(particle.values + step_std * noise)


def _log_sum_exp(log_values: np.ndarray) -> float:
    """Max-subtraction log-sum-exp; -inf entries contribute nothing."""
    m = float(np.max(log_values))
    if m == -np.inf:
        return -np.inf
    return m + float(np.log(np.sum(np.exp(log_values - m))))


def normalize_log_weights(log_weights) -> np.ndarray:
    """Turn log-weights into normalized weights, stably.

    Uses max-subtraction, so inputs as low as -1e6 stay representable. The
    output sums to 1 within 1e-12. Entries of -inf map to weight 0; if
    every entry is -inf there is nothing to normalize and a
    DegenerateWeightsError is raised.
    """
    arr = np.asarray(log_weights, dtype=np.float64)
    _require(arr.ndim == 1 and arr.size >= 1, "log-weights must be a nonempty flat sequence")
    _require(not bool(np.isnan(arr).any()), "log-weights must not contain NaN")
    _require(not bool(np.isposinf(arr).any()), "log-weights must not contain +inf")
    m = float(np.max(arr))
    if m == -np.inf:
        raise DegenerateWeightsError("all log-weights are -inf")
    w = np.exp(arr - m)
    return w / w.sum()


def systematic_resample(weights, rng: RandomSource) -> np.ndarray:
    """Select N particle indices from normalized weights on one uniform offset.

    Draws u ~ Uniform[0, 1/N) and lays the grid u + k/N, k = 0..N-1, over
    the cumulative weights; each grid point selects the index of the
    cumulative interval it falls in. Index i is copied N*w_i times in
    expectation, with variance far below multinomial sampling.
    """
    w = np.asarray(weights, dtype=np.float64)
    _require(w.ndim == 1 and w.size >= 1, "weights must be a nonempty flat sequence")
    _require(bool(np.isfinite(w).all()) and bool((w >= 0).all()),
             "weights must be finite and nonnegative")
    _require(abs(float(w.sum()) - 1.0) <= WEIGHT_SUM_TOLERANCE,
             f"weights must be normalized, got sum {w.sum()!r}")
    n = w.size
    u = rng.uniform() / n
    grid = u + np.arange(n) / n
    cumulative = np.cumsum(w)
    indices = np.searchsorted(cumulative, grid, side="right")
    return np.minimum(indices, n - 1).astype(np.int64)


def _categorical_draw(cumulative: np.ndarray, rng: RandomSource) -> int:
    u = rng.uniform()
    return int(min(np.searchsorted(cumulative, u, side="right"), cumulative.size - 1))


def run_smc(prior: ParticleSet, config: SmcConfig,
            oracle: Optional[Oracle] = None) -> SmcResult:
    """Run the full SMC loop and collect one posterior particle per step.

    Per step: (1) transition every particle, (2) score them, (3) record the
    log-sum of raw weights, (4) normalize, (5) record the ESS, (6) draw the
    systematic resampling indices, (7) append one particle drawn by weight
    (pre-resampling coordinates) to the posterior, then replace the
    population with the resampled one.

    When an oracle is given, prior and posterior pass rates are evaluated
    and the verdict count is reported in ``oracle_calls``. Identical
    (prior, config) pairs produce bitwise-identical results.

    Raises DegenerateWeightsError, naming the step, if every particle
    weight collapses.
    """
    if prior.dim != config.likelihood.target.dim:
        raise ConfigError(
            f"prior particles have {prior.dim} dims but likelihood target has "
            f"{config.likelihood.target.dim}")
    rng = RandomSource(config.seed)
    n, d = prior.n, prior.dim
    steps = config.n_steps

    population = prior.to_array()
    posterior = np.empty((steps, d))
    weight_sums = np.empty(steps)
    ess = np.empty(steps)

    for step in range(steps):
        population += config.step_std * rng.standard_normal(n * d).reshape(n, d)
        log_w = log_likelihood_values(population, config.likelihood)
        weight_sums[step] = _log_sum_exp(log_w)
        try:
            w = normalize_log_weights(log_w)
        except DegenerateWeightsError as exc:
            raise DegenerateWeightsError(
                f"all particle weights collapsed to zero at step {step}",
                step=step) from exc
        # float round-off can push 1/sum(w^2) past N by ~1e-15; keep the
        # recorded series inside its documented [1, N] range
        ess[step] = min(max(1.0 / float(np.sum(w * w)), 1.0), float(n))
        resample_indices = systematic_resample(w, rng)
        draw = _categorical_draw(np.cumsum(w), rng)
        posterior[step] = population[draw]
        population = population[resample_indices]

    posterior_set = ParticleSet(posterior)
    calls = 0
    prior_rate = None
    posterior_rate = None
    if oracle is not None:
        counting = CountingOracle(oracle)
        prior_rate = pass_rate(prior, counting)
        posterior_rate = pass_rate(posterior_set, counting)
        calls = counting.calls

    weight_sums.setflags(write=False)
    ess.setflags(write=False)
    return SmcResult(
        posterior=posterior_set,
        weight_sum_series=weight_sums,
        ess_series=ess,
        oracle_calls=calls,
        prior_pass_rate=prior_rate,
        posterior_pass_rate=posterior_rate,
    )
