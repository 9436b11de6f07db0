"""Domain types, configuration records, and the seedable random source.

Everything here is immutable after construction and safe to share across
threads. Random sources are the one stateful object; each sampler run owns
exactly one and never shares it.
"""

import json
import math
from dataclasses import dataclass, fields
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.special import ndtri

ENGINE_VERSION = "0.1.0"

MAX_SEED = 2**64 - 1


class AbcFuzzError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(AbcFuzzError, ValueError):
    """Invalid configuration value or misuse of an operation."""


class DegeneracyError(AbcFuzzError, ArithmeticError):
    """Numerical degeneracy that prevents a sampler from continuing.

    ``step`` carries the failing sampler step when known.
    """

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class DegenerateWeightsError(DegeneracyError):
    """Every particle weight collapsed (all log-weights are -inf)."""


class DegenerateStateError(DegeneracyError):
    """Chain state and proposal both have -inf log-likelihood."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _validate_seed(seed: int) -> int:
    _require(isinstance(seed, (int, np.integer)) and not isinstance(seed, bool),
             f"seed must be an integer, got {seed!r}")
    _require(0 <= seed <= MAX_SEED,
             f"seed must fit in 64 unsigned bits, got {seed}")
    return int(seed)


class RandomSource:
    """Deterministic stream of uniform [0, 1) and standard-normal draws.

    Uniforms come from numpy's PCG64 bit generator, which produces the same
    sequence for the same seed on every platform. Standard normals are
    derived from that same uniform stream by the inverse normal CDF
    (scipy.special.ndtri), consuming exactly one uniform per normal draw.
    A uniform of exactly 0.0 (probability 2**-53 per draw) is nudged to
    2**-54 so the transform stays finite.

    The transform is pinned so that seeded runs are auditable and
    reproducible across engine versions that keep this contract.
    """

    def __init__(self, seed: int):
        self.seed = _validate_seed(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, n: Optional[int] = None) -> Union[float, np.ndarray]:
        """Draw one uniform (n=None) or an array of n uniforms in [0, 1)."""
        if n is None:
            return float(self._gen.random())
        _require(n >= 0, f"draw count must be nonnegative, got {n}")
        return self._gen.random(n)

    def standard_normal(self, n: Optional[int] = None) -> Union[float, np.ndarray]:
        """Draw one standard normal (n=None) or an array of n of them."""
        if n is None:
            u = self._gen.random()
            return float(ndtri(u if u > 0.0 else 2.0**-54))
        _require(n >= 0, f"draw count must be nonnegative, got {n}")
        u = self._gen.random(n)
        return ndtri(np.maximum(u, 2.0**-54))


class Particle:
    """One fuzz input: a fixed-length vector of finite floats.

    The backing array is copied on construction and marked read-only, so a
    particle never changes after it exists.
    """

    __slots__ = ("_values",)

    def __init__(self, values: Union[Sequence[float], np.ndarray]):
        arr = np.array(values, dtype=np.float64)
        _require(arr.ndim == 1, f"particle must be one-dimensional, got shape {arr.shape}")
        _require(arr.size >= 1, "particle needs at least one dimension")
        _require(bool(np.isfinite(arr).all()), "particle values must be finite (no NaN/inf)")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def dim(self) -> int:
        return self._values.size

    def __len__(self) -> int:
        return self._values.size

    def __getitem__(self, index: int) -> float:
        return float(self._values[index])

    def __iter__(self):
        return iter(self._values.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Particle):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    def __repr__(self) -> str:
        return f"Particle(dim={self.dim})"


class ParticleSet:
    """A population of particles sharing one dimensionality: an (N, D) matrix."""

    __slots__ = ("_values",)

    def __init__(self, values: Union[np.ndarray, Sequence[Sequence[float]]]):
        arr = np.array(values, dtype=np.float64)
        _require(arr.ndim == 2, f"particle set must be a 2-d matrix, got shape {arr.shape}")
        _require(arr.shape[0] >= 1, "particle set needs at least one particle")
        _require(arr.shape[1] >= 1, "particles need at least one dimension")
        _require(bool(np.isfinite(arr).all()), "particle values must be finite (no NaN/inf)")
        arr.setflags(write=False)
        self._values = arr

    @classmethod
    def from_particles(cls, particles: Iterable[Particle]) -> "ParticleSet":
        rows = [p.values for p in particles]
        _require(len(rows) >= 1, "particle set needs at least one particle")
        _require(len({r.size for r in rows}) == 1, "particles must share one dimensionality")
        return cls(np.stack(rows))

    @property
    def values(self) -> np.ndarray:
        """Read-only (N, D) view of the population."""
        return self._values

    @property
    def n(self) -> int:
        return self._values.shape[0]

    @property
    def dim(self) -> int:
        return self._values.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, index: int) -> Particle:
        return Particle(self._values[index])

    def __iter__(self):
        for row in self._values:
            yield Particle(row)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParticleSet):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    def __repr__(self) -> str:
        return f"ParticleSet(n={self.n}, dim={self.dim})"

    def to_array(self) -> np.ndarray:
        """Writable copy of the population matrix."""
        return self._values.copy()


WEIGHT_SUM_TOLERANCE = 1e-9


class WeightedParticleSet:
    """Particles paired with normalized, nonnegative importance weights."""

    __slots__ = ("_particles", "_weights")

    def __init__(self, particles: ParticleSet, weights: Union[Sequence[float], np.ndarray]):
        w = np.array(weights, dtype=np.float64)
        _require(w.ndim == 1, "weights must be a flat sequence")
        _require(w.size == particles.n,
                 f"got {w.size} weights for {particles.n} particles")
        _require(bool(np.isfinite(w).all()), "weights must be finite")
        _require(bool((w >= 0).all()), "weights must be nonnegative")
        _require(abs(float(w.sum()) - 1.0) <= WEIGHT_SUM_TOLERANCE,
                 f"weights must sum to 1 within {WEIGHT_SUM_TOLERANCE}, got {w.sum()!r}")
        w.setflags(write=False)
        self._particles = particles
        self._weights = w

    @property
    def particles(self) -> ParticleSet:
        return self._particles

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    def __len__(self) -> int:
        return self._particles.n

    def __repr__(self) -> str:
        return f"WeightedParticleSet(n={len(self)}, dim={self._particles.dim})"


def _reject_unknown_keys(kind: str, data: dict, allowed: Iterable[str]) -> None:
    extra = set(data) - set(allowed)
    if extra:
        raise ConfigError(f"unknown {kind} config keys: {sorted(extra)}")


def _field_names(cls) -> list:
    return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class PriorConfig:
    """Parameters of the Gaussian prior population and its forced-zero slice."""

    n_particles: int = 10
    n_dims: int = 100
    mean: float = 0.0
    std_dev: float = 10.0
    zero_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        _require(isinstance(self.n_particles, (int, np.integer)) and self.n_particles >= 1,
                 f"n_particles must be a positive integer, got {self.n_particles!r}")
        _require(isinstance(self.n_dims, (int, np.integer)) and self.n_dims >= 1,
                 f"n_dims must be a positive integer, got {self.n_dims!r}")
        _require(math.isfinite(self.mean), "mean must be finite")
        _require(math.isfinite(self.std_dev) and self.std_dev >= 0,
                 f"std_dev must be nonnegative, got {self.std_dev!r}")
        _require(0.0 <= self.zero_fraction <= 1.0,
                 f"zero_fraction must lie in [0, 1], got {self.zero_fraction!r}")
        _validate_seed(self.seed)

    def to_dict(self) -> dict:
        return {
            "n_particles": self.n_particles,
            "n_dims": self.n_dims,
            "mean": self.mean,
            "std_dev": self.std_dev,
            "zero_fraction": self.zero_fraction,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PriorConfig":
        _reject_unknown_keys("prior", data, _field_names(cls))
        return cls(**data)


@dataclass(frozen=True)
class LikelihoodConfig:
    """Directed scoring: distance to a target point plus a first-dimension penalty.

    ``alpha`` weights the penalty for deviating from zero in dimension 0;
    ``scale`` normalizes the Euclidean distance so raw scores stay in a
    numerically benign range.
    """

    target: Particle
    alpha: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        _require(isinstance(self.target, Particle), "target must be a Particle")
        _require(math.isfinite(self.alpha) and self.alpha >= 0,
                 f"alpha must be nonnegative, got {self.alpha!r}")
        _require(math.isfinite(self.scale) and self.scale > 0,
                 f"scale must be positive, got {self.scale!r}")

    @classmethod
    def for_prior(cls, n_dims: int, prior_std: float, *, alpha: float = 1.0,
                  scale: Optional[float] = None,
                  target: Optional[Particle] = None) -> "LikelihoodConfig":
        """Config with the default scale sqrt(D) * prior std.

        That product is the typical prior distance from the origin, so
        default scores land near -1 instead of underflowing. A zero prior
        std falls back to scale 1.
        """
        if scale is None:
            scale = math.sqrt(n_dims) * prior_std
            if scale <= 0:
                scale = 1.0
        if target is None:
            target = Particle(np.zeros(n_dims))
        return cls(target=target, alpha=alpha, scale=scale)

    def to_dict(self) -> dict:
        return {
            "target": [float(v) for v in self.target],
            "alpha": self.alpha,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LikelihoodConfig":
        _reject_unknown_keys("likelihood", data, _field_names(cls))
        data = dict(data)
        if "target" in data and not isinstance(data["target"], Particle):
            data["target"] = Particle(data["target"])
        return cls(**data)


@dataclass(frozen=True)
class SmcConfig:
    """Sequential Monte Carlo run parameters."""

    likelihood: LikelihoodConfig
    n_steps: int = 1000
    step_std: float = 0.5
    seed: int = 0

    def __post_init__(self):
        _require(isinstance(self.likelihood, LikelihoodConfig),
                 "likelihood must be a LikelihoodConfig")
        _require(isinstance(self.n_steps, (int, np.integer)) and self.n_steps >= 1,
                 f"n_steps must be a positive integer, got {self.n_steps!r}")
        _require(math.isfinite(self.step_std) and self.step_std >= 0,
                 f"step_std must be nonnegative, got {self.step_std!r}")
        _validate_seed(self.seed)

    def to_dict(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "step_std": self.step_std,
            "seed": self.seed,
            "likelihood": self.likelihood.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SmcConfig":
        _reject_unknown_keys("smc", data, _field_names(cls))
        data = dict(data)
        if "likelihood" in data and not isinstance(data["likelihood"], LikelihoodConfig):
            data["likelihood"] = LikelihoodConfig.from_dict(data["likelihood"])
        return cls(**data)


@dataclass(frozen=True)
class McmcConfig:
    """Single-chain Metropolis run parameters.

    ``initial_index`` picks the starting particle out of the prior set; when
    None the chain starts at a uniformly random prior particle drawn from
    the run's random source.
    """

    likelihood: LikelihoodConfig
    n_steps: int = 1000
    burn_in: int = 100
    step_std: float = 0.5
    initial_index: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        _require(isinstance(self.likelihood, LikelihoodConfig),
                 "likelihood must be a LikelihoodConfig")
        _require(isinstance(self.n_steps, (int, np.integer)) and self.n_steps >= 1,
                 f"n_steps must be a positive integer, got {self.n_steps!r}")
        _require(isinstance(self.burn_in, (int, np.integer)) and self.burn_in >= 0,
                 f"burn_in must be a nonnegative integer, got {self.burn_in!r}")
        _require(self.burn_in < self.n_steps,
                 f"burn_in ({self.burn_in}) must be smaller than n_steps ({self.n_steps})")
        _require(math.isfinite(self.step_std) and self.step_std >= 0,
                 f"step_std must be nonnegative, got {self.step_std!r}")
        if self.initial_index is not None:
            _require(isinstance(self.initial_index, (int, np.integer)) and self.initial_index >= 0,
                     f"initial_index must be a nonnegative integer, got {self.initial_index!r}")
        _validate_seed(self.seed)

    def to_dict(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "burn_in": self.burn_in,
            "step_std": self.step_std,
            "initial_index": self.initial_index,
            "seed": self.seed,
            "likelihood": self.likelihood.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "McmcConfig":
        _reject_unknown_keys("mcmc", data, _field_names(cls))
        data = dict(data)
        if "likelihood" in data and not isinstance(data["likelihood"], LikelihoodConfig):
            data["likelihood"] = LikelihoodConfig.from_dict(data["likelihood"])
        return cls(**data)


CONFIG_FILE_SECTIONS = ("prior", "likelihood", "smc", "mcmc", "oracle")


def load_config_file(path) -> dict:
    """Parse a JSON run-config file into its sections.

    The file must be a JSON object whose top-level keys are a subset of
    ``prior``, ``likelihood``, ``smc``, ``mcmc``, ``oracle``, each holding
    an object. Unknown keys, here and inside each section, are errors.
    Section contents are validated when they are turned into config
    records.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    _require(isinstance(data, dict), f"config file {path} must hold a JSON object")
    _reject_unknown_keys("file", data, CONFIG_FILE_SECTIONS)
    for section, content in data.items():
        _require(isinstance(content, dict),
                 f"config section {section!r} must be a JSON object")
    return data
