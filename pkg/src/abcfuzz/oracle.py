"""Fuzz-test oracles: pass/fail verdicts over particles and population pass rates.

Two oracle families: an in-process range check on one coordinate (the
white-box target), and an external command run once per particle (a
black-box hook; its protocol is this engine's own extension).
"""

import math
import subprocess
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from .core import AbcFuzzError, ConfigError, Particle, ParticleSet, _require


class OracleSpawnError(AbcFuzzError, RuntimeError):
    """The external oracle command could not be started."""


class OracleTimeoutError(AbcFuzzError, RuntimeError):
    """The external oracle ran past its timeout and was killed."""


@dataclass(frozen=True)
class OracleVerdict:
    passed: bool


Oracle = Callable[[Particle], OracleVerdict]


@dataclass(frozen=True)
class RangeOracleConfig:
    """Pass iff one coordinate lies inside [low, high], boundaries inclusive."""

    low: float = -0.5
    high: float = 0.5
    dimension: int = 0

    def __post_init__(self):
        _require(math.isfinite(self.low) and math.isfinite(self.high),
                 "range bounds must be finite")
        _require(self.low <= self.high,
                 f"low ({self.low!r}) must not exceed high ({self.high!r})")
        _require(isinstance(self.dimension, (int, np.integer)) and self.dimension >= 0,
                 f"dimension must be a nonnegative integer, got {self.dimension!r}")

    def to_dict(self) -> dict:
        return {"low": self.low, "high": self.high, "dimension": self.dimension}


def range_oracle_evaluate(particle: Particle, config: RangeOracleConfig) -> OracleVerdict:
    """White-box check: does the configured coordinate fall in the band?"""
    if config.dimension >= particle.dim:
        raise ConfigError(
            f"oracle dimension {config.dimension} out of range for {particle.dim}-dim particle")
    value = particle[config.dimension]
    return OracleVerdict(config.low <= value <= config.high)


@dataclass(frozen=True)
class RangeOracle:
    """Callable wrapper around range_oracle_evaluate for a fixed config."""

    config: RangeOracleConfig = RangeOracleConfig()

    def __call__(self, particle: Particle) -> OracleVerdict:
        return range_oracle_evaluate(particle, self.config)


@dataclass(frozen=True)
class ExternalOracle:
    """Judges particles by spawning one child process per evaluation.

    Protocol: every coordinate is written to the child's stdin as one ASCII
    float per line (full round-trip precision), newline-terminated, then
    stdin is closed. Exit status 0 is a pass, any nonzero status a fail.
    A child running past ``timeout`` seconds is killed and reported as a
    timeout error, distinct from a fail.
    """

    argv: Tuple[str, ...]
    timeout: float = 5.0

    def __post_init__(self):
        _require(len(self.argv) >= 1, "external oracle needs a command")
        _require(self.timeout > 0, f"timeout must be positive, got {self.timeout!r}")

    def __call__(self, particle: Particle) -> OracleVerdict:
        payload = "".join(f"{float(v)!r}\n" for v in particle.values)
        try:
            proc = subprocess.run(
                list(self.argv),
                input=payload.encode("ascii"),
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
                timeout=self.timeout,
            )
        except subprocess.TimeoutExpired as exc:
            raise OracleTimeoutError(
                f"oracle command {self.argv[0]!r} exceeded {self.timeout} s") from exc
        except OSError as exc:
            raise OracleSpawnError(
                f"could not run oracle command {self.argv[0]!r}: {exc}") from exc
        return OracleVerdict(proc.returncode == 0)


def external_oracle_evaluate(particle: Particle, command_spec: Sequence[str],
                             timeout: float = 5.0) -> OracleVerdict:
    """One-shot form of ExternalOracle: run command_spec once for this particle."""
    return ExternalOracle(tuple(command_spec), timeout=timeout)(particle)


class CountingOracle:
    """Wraps an oracle and counts evaluations: the run's call-budget metric."""

    def __init__(self, oracle: Oracle):
        self._oracle = oracle
        self.calls = 0

    def __call__(self, particle: Particle) -> OracleVerdict:
        self.calls += 1
        return self._oracle(particle)


def pass_rate(particles: ParticleSet, oracle: Oracle) -> float:
    """Fraction of the population the oracle passes: exact N_pass / N.

    ParticleSet construction already guarantees a nonempty population.
    """
    passed = sum(1 for p in particles if oracle(p).passed)
    return passed / particles.n
