"""Particle-based inference engine for steering fuzz-test inputs.

Two approximate-Bayesian samplers (a sequential Monte Carlo population and
a single-chain Metropolis walker) push candidate inputs toward an oracle's
passing region using a directed likelihood: distance to a target point
plus a penalty on the first coordinate. Every run is seeded and fully
reproducible.
"""

from .core import (
    AbcFuzzError,
    ConfigError,
    DegeneracyError,
    DegenerateStateError,
    DegenerateWeightsError,
    ENGINE_VERSION,
    LikelihoodConfig,
    McmcConfig,
    Particle,
    ParticleSet,
    PriorConfig,
    RandomSource,
    SmcConfig,
    WeightedParticleSet,
    load_config_file,
)
from .diagnostics import (
    TraceSummary,
    effective_sample_size,
    trace_summary,
    weight_sum_delta_series,
    weight_updates_converging,
)
from .likelihood import log_likelihood, log_likelihood_batch, log_likelihood_values
from .mcmc import McmcResult, accept_probability, run_mcmc
from .oracle import (
    CountingOracle,
    ExternalOracle,
    OracleSpawnError,
    OracleTimeoutError,
    OracleVerdict,
    RangeOracle,
    RangeOracleConfig,
    external_oracle_evaluate,
    pass_rate,
    range_oracle_evaluate,
)
from .prior import generate_prior, slice_count, slice_indices
from .report import (
    RunReport,
    emit_plot_data,
    read_particles_csv,
    read_report,
    write_particles_csv,
    write_report,
)
from .smc import SmcResult, normalize_log_weights, run_smc, systematic_resample, transition

__version__ = ENGINE_VERSION

__all__ = [
    "AbcFuzzError",
    "ConfigError",
    "CountingOracle",
    "DegeneracyError",
    "DegenerateStateError",
    "DegenerateWeightsError",
    "ENGINE_VERSION",
    "ExternalOracle",
    "LikelihoodConfig",
    "McmcConfig",
    "McmcResult",
    "OracleSpawnError",
    "OracleTimeoutError",
    "OracleVerdict",
    "Particle",
    "ParticleSet",
    "PriorConfig",
    "RandomSource",
    "RangeOracle",
    "RangeOracleConfig",
    "RunReport",
    "SmcConfig",
    "SmcResult",
    "TraceSummary",
    "WeightedParticleSet",
    "accept_probability",
    "effective_sample_size",
    "emit_plot_data",
    "external_oracle_evaluate",
    "generate_prior",
    "load_config_file",
    "log_likelihood",
    "log_likelihood_batch",
    "log_likelihood_values",
    "normalize_log_weights",
    "pass_rate",
    "range_oracle_evaluate",
    "read_particles_csv",
    "read_report",
    "run_mcmc",
    "run_smc",
    "slice_count",
    "slice_indices",
    "systematic_resample",
    "trace_summary",
    "transition",
    "weight_sum_delta_series",
    "weight_updates_converging",
    "write_particles_csv",
    "write_report",
]
