"""Shared test helpers."""

import math

import numpy as np

from abcfuzz import RandomSource, log_likelihood_values


def replay_chain(prior, config):
    """Independent re-walk of run_mcmc's documented draw order.

    Consumes the run's random stream exactly as run_mcmc does (one uniform
    for the random start, then D normals + one uniform per step) and
    re-derives every decision, asserting that uphill proposals always move
    the state. Returns (trace, accepted, states, uphill_count).
    """
    rng = RandomSource(config.seed)
    n, d = prior.n, prior.dim
    if config.initial_index is not None:
        state = prior.values[config.initial_index].copy()
    else:
        state = prior.values[min(int(rng.uniform() * n), n - 1)].copy()
    log_l = float(log_likelihood_values(state[np.newaxis, :], config.likelihood)[0])

    trace = np.empty(config.n_steps)
    accepted = np.zeros(config.n_steps, dtype=bool)
    states = np.empty((config.n_steps, d))
    uphill = 0
    for step in range(config.n_steps):
        proposal = state + config.step_std * rng.standard_normal(d)
        log_l_prop = float(
            log_likelihood_values(proposal[np.newaxis, :], config.likelihood)[0])
        delta = log_l_prop - log_l
        prob = 1.0 if delta >= 0 else math.exp(delta)
        u = rng.uniform()
        if delta >= 0:
            uphill += 1
            assert u < prob, "uphill proposal must be accepted"
        if u < prob:
            state, log_l = proposal, log_l_prop
            accepted[step] = True
        states[step] = state
        trace[step] = state[0]
    return trace, accepted, states, uphill
