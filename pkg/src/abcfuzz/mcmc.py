"""Single-chain Metropolis sampler with burn-in and trace recording.

Proposals come from the same Gaussian random-walk kernel as the SMC
transition, which is symmetric, so the plain Metropolis rule applies with
no Hastings correction. The trace records dimension 0 of every state
(burn-in included); the chain keeps the post-burn-in states.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ConfigError,
    DegenerateStateError,
    McmcConfig,
    ParticleSet,
    RandomSource,
)
from .likelihood import log_likelihood_values
from .oracle import CountingOracle, Oracle, pass_rate


@dataclass(frozen=True, eq=False)
class McmcResult:
    """Post-burn-in chain plus the full trace and acceptance bookkeeping.

    ``trace_dim0`` has one entry per step including burn-in;
    ``accepted`` flags which steps moved. ``trace_full`` carries every
    state in full dimension when the run asked for it.
    """

    chain: ParticleSet
    trace_dim0: np.ndarray
    accepted: np.ndarray
    acceptance_rate: float
    oracle_calls: int = 0
    prior_pass_rate: Optional[float] = None
    chain_pass_rate: Optional[float] = None
    trace_full: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        """JSON-ready scalars and series (chain particles go to CSV)."""
        return {
            "n_steps": int(self.trace_dim0.size),
            "chain_length": self.chain.n,
            "acceptance_rate": self.acceptance_rate,
            "oracle_calls": self.oracle_calls,
            "prior_pass_rate": self.prior_pass_rate,
            "chain_pass_rate": self.chain_pass_rate,
            "trace_dim0": [float(v) for v in self.trace_dim0],
            "accepted": [bool(v) for v in self.accepted],
        }


def accept_probability(log_likelihood_current: float, log_likelihood_proposed: float) -> float:
    """Metropolis acceptance for a symmetric proposal: min(1, exp(delta)).

    A proposal of -inf is rejected with probability 1; if the current state
    is also at -inf there is no valid move and a DegenerateStateError is
    raised.
    """
    if math.isnan(log_likelihood_current) or math.isnan(log_likelihood_proposed):
        raise ConfigError("log-likelihoods must not be NaN")
    if log_likelihood_current == -math.inf and log_likelihood_proposed == -math.inf:
        raise DegenerateStateError("current state and proposal both have -inf log-likelihood")
    delta = log_likelihood_proposed - log_likelihood_current
    if delta >= 0:
        return 1.0
    return math.exp(delta)


def run_mcmc(prior: ParticleSet, config: McmcConfig,
             oracle: Optional[Oracle] = None,
             trace_all_dims: bool = False) -> McmcResult:
    """Run the Metropolis chain for n_steps and keep the post-burn-in states.

    The chain starts at prior[initial_index], or at a uniformly random
    prior particle when no index is configured. Draw order per step is
    fixed: D normals for the proposal, then one uniform for the
    accept/reject decision (preceded by one uniform for the starting index
    when it is random), so identical (prior, config) pairs produce
    bitwise-identical results.

    When an oracle is given, the prior's and the post-burn-in chain's pass
    rates are evaluated and the verdict count reported in ``oracle_calls``.
    """
    if prior.dim != config.likelihood.target.dim:
        raise ConfigError(
            f"prior particles have {prior.dim} dims but likelihood target has "
            f"{config.likelihood.target.dim}")
    rng = RandomSource(config.seed)
    n, d = prior.n, prior.dim
    steps, burn_in = config.n_steps, config.burn_in

    if config.initial_index is not None:
        if config.initial_index >= n:
            raise ConfigError(
                f"initial_index {config.initial_index} out of range for {n} prior particles")
        start = config.initial_index
    else:
        start = min(int(rng.uniform() * n), n - 1)

    state = prior.values[start].copy()
    log_l = float(log_likelihood_values(state[np.newaxis, :], config.likelihood)[0])

    states = np.empty((steps, d))
    trace = np.empty(steps)
    accepted = np.zeros(steps, dtype=bool)
    n_accepted = 0

    for step in range(steps):
        proposal = state + config.step_std * rng.standard_normal(d)
        log_l_proposal = float(
            log_likelihood_values(proposal[np.newaxis, :], config.likelihood)[0])
        try:
            prob = accept_probability(log_l, log_l_proposal)
        except DegenerateStateError as exc:
            raise DegenerateStateError(
                f"chain degenerated (state and proposal at -inf) at step {step}",
                step=step) from exc
        if rng.uniform() < prob:
            state = proposal
            log_l = log_l_proposal
            accepted[step] = True
            n_accepted += 1
        states[step] = state
        trace[step] = state[0]

    chain = ParticleSet(states[burn_in:])
    acceptance_rate = n_accepted / steps

    calls = 0
    prior_rate = None
    chain_rate = None
    if oracle is not None:
        counting = CountingOracle(oracle)
        prior_rate = pass_rate(prior, counting)
        chain_rate = pass_rate(chain, counting)
        calls = counting.calls

    trace.setflags(write=False)
    accepted.setflags(write=False)
    full = None
    if trace_all_dims:
        full = states
        full.setflags(write=False)
    return McmcResult(
        chain=chain,
        trace_dim0=trace,
        accepted=accepted,
        acceptance_rate=acceptance_rate,
        oracle_calls=calls,
        prior_pass_rate=prior_rate,
        chain_pass_rate=chain_rate,
        trace_full=full,
    )
