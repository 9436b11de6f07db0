"""Run-artifact persistence: JSON reports, CSV dumps, and plot-data files.

Figures are emitted as plain columnar data (CSV with a header, ``.dat``
extension) rather than rendered images; any external plotting tool can
consume them. Every file ends with a newline, and floats are written at
full round-trip precision. One writer per path: concurrent runs must
target distinct output directories (out/<run-id>/ by convention).
"""

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .core import ConfigError, ENGINE_VERSION, ParticleSet, _require
from .mcmc import McmcResult
from .smc import SmcResult

PLOT_KINDS = {
    "prior-histogram-data": "plot-prior-histogram.dat",
    "dims-1-3-surface-data": "plot-prior-surface.dat",
    "mcmc-trace-data": "plot-mcmc-trace.dat",
    "smc-weights-data": "plot-smc-weights.dat",
}


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class RunReport:
    """Serialized record of one sampler run: config, seed, rates, diagnostics."""

    sampler: str
    seed: int
    config_echo: dict
    prior_pass_rate: Optional[float]
    posterior_pass_rate: Optional[float]
    oracle_calls: int
    diagnostics: dict
    engine_version: str = ENGINE_VERSION
    timestamp: str = ""

    def __post_init__(self):
        _require(self.sampler in ("smc", "mcmc"),
                 f"sampler must be 'smc' or 'mcmc', got {self.sampler!r}")
        for name, rate in (("prior_pass_rate", self.prior_pass_rate),
                           ("posterior_pass_rate", self.posterior_pass_rate)):
            if rate is not None:
                _require(0.0 <= rate <= 1.0, f"{name} must lie in [0, 1], got {rate!r}")
        _require(self.oracle_calls >= 0, "oracle_calls must be nonnegative")
        if not self.timestamp:
            object.__setattr__(self, "timestamp", utc_now_iso())

    def to_dict(self) -> dict:
        return {
            "engine_version": self.engine_version,
            "timestamp": self.timestamp,
            "sampler": self.sampler,
            "seed": self.seed,
            "config_echo": self.config_echo,
            "prior_pass_rate": self.prior_pass_rate,
            "posterior_pass_rate": self.posterior_pass_rate,
            "oracle_calls": self.oracle_calls,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(**data)


def write_json(payload: dict, path) -> None:
    """Write a JSON document with sorted keys and a trailing newline."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_report(report: RunReport, path) -> None:
    write_json(report.to_dict(), path)


def read_report(path) -> RunReport:
    with open(path, "r", encoding="utf-8") as fh:
        return RunReport.from_dict(json.load(fh))


def _format(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Plain comma-separated writer; floats keep full round-trip precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format(v) for v in row) + "\n")


def write_particles_csv(particles: ParticleSet, path) -> None:
    """One particle per row, columns x0..x{D-1}."""
    header = [f"x{i}" for i in range(particles.dim)]
    write_csv(path, header, particles.values)


def read_particles_csv(path) -> ParticleSet:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    _require(len(lines) >= 2, f"particle CSV {path} needs a header and at least one row")
    try:
        rows = [[float(cell) for cell in line.split(",")] for line in lines[1:]]
    except ValueError as exc:
        raise ConfigError(f"particle CSV {path} has a non-numeric cell: {exc}") from exc
    return ParticleSet(rows)


def emit_plot_data(result: Union[SmcResult, McmcResult, ParticleSet], kind: str,
                   path, slice_indices: Optional[set] = None) -> None:
    """Write one figure's underlying data as a columnar text file.

    Kinds and the result type they need:

    - ``prior-histogram-data`` (ParticleSet): dimension-0 value of every
      particle with a 0/1 flag marking membership in the forced-zero slice
      (pass ``slice_indices``; defaults to empty).
    - ``dims-1-3-surface-data`` (ParticleSet, D >= 4): coordinates 1..3 of
      every particle, verbatim.
    - ``mcmc-trace-data`` (McmcResult): (step, x0) for every step.
    - ``smc-weights-data`` (SmcResult): (step, log_weight_sum, ess, delta)
      where delta is the absolute change in log_weight_sum from the
      previous step (nan on step 0).
    """
    if kind not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}; expected one of {sorted(PLOT_KINDS)}")

    if kind == "prior-histogram-data":
        if not isinstance(result, ParticleSet):
            raise ConfigError(f"plot kind {kind!r} needs a ParticleSet")
        marked = slice_indices or set()
        rows = ((v, 1 if i in marked else 0)
                for i, v in enumerate(result.values[:, 0]))
        write_csv(path, ["x0", "in_slice"], rows)
    elif kind == "dims-1-3-surface-data":
        if not isinstance(result, ParticleSet):
            raise ConfigError(f"plot kind {kind!r} needs a ParticleSet")
        if result.dim < 4:
            raise ConfigError(
                f"plot kind {kind!r} needs particles with at least 4 dims, got {result.dim}")
        write_csv(path, ["x1", "x2", "x3"], result.values[:, 1:4])
    elif kind == "mcmc-trace-data":
        if not isinstance(result, McmcResult):
            raise ConfigError(f"plot kind {kind!r} needs an McmcResult")
        rows = ((step, x0) for step, x0 in enumerate(result.trace_dim0))
        write_csv(path, ["step", "x0"], rows)
    else:  # smc-weights-data
        if not isinstance(result, SmcResult):
            raise ConfigError(f"plot kind {kind!r} needs an SmcResult")
        sums = result.weight_sum_series
        deltas = np.concatenate([[np.nan], np.abs(np.diff(sums))])
        rows = zip(range(sums.size), sums, result.ess_series, deltas)
        write_csv(path, ["step", "log_weight_sum", "ess", "delta"], rows)
