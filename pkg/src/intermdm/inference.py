"""Samplers over the two-agent game state.

* :func:`run_naming_game` -- the Metropolis-Hastings naming game. Each
  iteration lets A speak to B, then B speak to A. With
  ``CommunicationType.ALL_ACCEPT`` / ``ALL_REJECT`` the acceptance
  probability is forced to 1 / 0 inside the same code path.
* :func:`gibbs_integrated` -- the joint Gibbs sampler that sees both agents'
  categories when drawing the sign (the reference "top line").

All per-datum loops of one sweep are independent given the other blocks,
so they are evaluated as vectorized draws over ``d``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .distributions import make_rng, sample_categorical_rows, sample_log_categorical_rows
from .metrics import ari, kappa
from .model import (
    AgentState,
    CommunicationType,
    GameState,
    ModelConfig,
    check_observations,
    init_agent,
    sample_categories,
    sample_phi,
    sample_theta,
    validate_agent,
)

log = logging.getLogger(__name__)

TRACE_FIELDS = ("iteration", "ari_a", "ari_b", "ari_w", "kappa",
                "accept_rate_ab", "accept_rate_ba")


def propose_sign(c_d: int, theta, gamma, rng: np.random.Generator) -> int:
    """Draw a sign with probability proportional to ``gamma[k] * theta[k, c_d]``."""
    theta = np.asarray(theta, dtype=float)
    if not 0 <= c_d < theta.shape[1]:
        raise IndexError(f"category {c_d} out of range [0, {theta.shape[1]})")
    weights = np.asarray(gamma, dtype=float) * theta[:, c_d]
    if not weights.sum() > 0:
        raise ValueError(f"no sign explains category {c_d} (zero normalizer)")
    return int(sample_categorical_rows(weights[None, :], rng)[0])


def propose_signs(c: np.ndarray, log_theta: np.ndarray, log_gamma: np.ndarray,
                  rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`propose_sign` for every datum, in log space."""
    return sample_log_categorical_rows(log_theta[:, c].T + log_gamma[None, :], rng)


def acceptance_ratio(c_listener: int, theta_listener, w_proposed: int, w_current: int) -> float:
    """``min(1, theta[w_proposed, c] / theta[w_current, c])`` for the listener.

    Only the listener's categorical likelihoods appear; sign priors and the
    speaker's terms cancel. A zero denominator gives 1.
    """
    theta = np.asarray(theta_listener, dtype=float)
    if w_proposed == w_current:
        return 1.0
    num = theta[w_proposed, c_listener]
    den = theta[w_current, c_listener]
    if den == 0:
        if num == 0:
            log.warning("acceptance ratio 0/0 for category %d; accepting", c_listener)
        return 1.0
    return float(min(1.0, num / den))


def log_acceptance_ratios(c_listener: np.ndarray, log_theta: np.ndarray,
                          w_proposed: np.ndarray, w_current: np.ndarray) -> np.ndarray:
    """Per-datum ``log z`` (clipped at 0) from the listener's log theta."""
    num = log_theta[w_proposed, c_listener]
    den = log_theta[w_current, c_listener]
    with np.errstate(invalid="ignore"):
        diff = num - den
    both_zero = np.isneginf(num) & np.isneginf(den)
    if np.any(both_zero):
        log.warning("acceptance ratio 0/0 for %d data; accepting", int(both_zero.sum()))
    diff = np.where(both_zero | (w_proposed == w_current), 0.0, diff)
    return np.minimum(diff, 0.0)


@dataclass
class ExchangeResult:
    w: np.ndarray
    listener: AgentState
    proposed: np.ndarray
    accepted: np.ndarray

    @property
    def accept_rate(self) -> float:
        return float(self.accepted.mean())


def mh_exchange(speaker: AgentState, listener: AgentState, listener_obs: Mapping,
                w_listener: np.ndarray, config: ModelConfig,
                rng: np.random.Generator) -> ExchangeResult:
    """One speaker -> listener pass of the naming game.

    Proposes a sign per datum from the speaker's categories and theta, lets
    the listener accept each with probability ``z``, then resamples the
    listener's phi, theta and categories given the updated signs. Neither
    ``speaker`` nor ``listener`` is modified; the updated listener is returned.
    """
    mode = config.communication_type
    if mode is CommunicationType.INTEGRATED_GIBBS:
        raise ValueError("mh_exchange does not run the integrated Gibbs sampler")
    with np.errstate(divide="ignore"):
        log_gamma = np.log(config.gamma_vector())
    proposed = propose_signs(speaker.c, speaker.log_theta, log_gamma, rng)
    u = rng.random(proposed.shape[0])
    if mode is CommunicationType.ALL_ACCEPT:
        z = np.ones(proposed.shape[0])
    elif mode is CommunicationType.ALL_REJECT:
        z = np.zeros(proposed.shape[0])
    else:
        z = np.exp(log_acceptance_ratios(listener.c, listener.log_theta, proposed, w_listener))
    accepted = u < z
    w = np.where(accepted, proposed, w_listener)

    new = listener.copy()
    sample_phi(new, listener_obs, config.beta_for, rng)
    sample_theta(new, w, config.alpha, rng)
    sample_categories(new, listener_obs, w, rng)
    return ExchangeResult(w=w, listener=new, proposed=proposed, accepted=accepted)


@dataclass
class RunResult:
    config: ModelConfig
    state: GameState
    trace: list = field(default_factory=list)

    def final(self) -> dict:
        """The last trace record (empty when no iterations ran)."""
        return self.trace[-1] if self.trace else {}


def _record(iteration, state, labels, accept_ab, accept_ba, gibbs) -> dict:
    nan = float("nan")
    if labels is not None:
        ari_a = ari(labels, state.agent_a.c)
        ari_b = ari(labels, state.agent_b.c)
        ari_w = ari(labels, state.w_a)
    else:
        ari_a = ari_b = ari_w = nan
    return {
        "iteration": int(iteration),
        "ari_a": ari_a,
        "ari_b": ari_b,
        "ari_w": ari_w,
        "kappa": nan if gibbs else kappa(state.w_a, state.w_b),
        "accept_rate_ab": accept_ab,
        "accept_rate_ba": accept_ba,
    }


def _check_labels(labels, D):
    if labels is None:
        return None
    labels = np.asarray(labels)
    if labels.shape != (D,):
        raise ValueError(f"labels must have length D={D}")
    return labels


def initial_state(config: ModelConfig, obs_a: Mapping, obs_b: Mapping,
                  rng: np.random.Generator) -> GameState:
    D = check_observations(obs_a, config.D)
    check_observations(obs_b, D)
    agent_a = init_agent(config, obs_a, rng)
    agent_b = init_agent(config, obs_b, rng)
    gamma = np.broadcast_to(config.gamma_vector(), (D, config.K))
    if config.communication_type is CommunicationType.INTEGRATED_GIBBS:
        w = sample_categorical_rows(gamma, rng)
        return GameState(agent_a, agent_b, w, w.copy())
    w_a = sample_categorical_rows(gamma, rng)
    w_b = sample_categorical_rows(gamma, rng)
    return GameState(agent_a, agent_b, w_a, w_b)


def run_naming_game(config: ModelConfig, obs_a: Mapping, obs_b: Mapping, labels=None,
                    state: GameState | None = None,
                    callback: Callable[[GameState, dict], None] | None = None) -> RunResult:
    """Play ``config.iterations`` rounds of the naming game.

    Per round, agent B listens to A first and then A listens to B. ``labels``
    (ground-truth object ids) only feed the per-iteration trace. Pass
    ``state`` to continue from a checkpoint instead of a fresh init.
    """
    if config.communication_type is CommunicationType.INTEGRATED_GIBBS:
        return gibbs_integrated(config, obs_a, obs_b, labels, state=state, callback=callback)
    rng = make_rng(config.seed)
    D = check_observations(obs_a, config.D)
    check_observations(obs_b, D)
    labels = _check_labels(labels, D)
    if state is None:
        state = initial_state(config, obs_a, obs_b, rng)
    else:
        state = state.copy()
        for agent in (state.agent_a, state.agent_b):
            validate_agent(agent, config.K, config.L)
    result = RunResult(config=config, state=state)
    for _ in range(config.iterations):
        to_b = mh_exchange(state.agent_a, state.agent_b, obs_b, state.w_b, config, rng)
        state.agent_b, state.w_b = to_b.listener, to_b.w
        to_a = mh_exchange(state.agent_b, state.agent_a, obs_a, state.w_a, config, rng)
        state.agent_a, state.w_a = to_a.listener, to_a.w
        state.iteration += 1
        rec = _record(state.iteration, state, labels, to_b.accept_rate, to_a.accept_rate, False)
        result.trace.append(rec)
        if callback is not None:
            callback(state, rec)
    return result


def sample_shared_signs(agent_a: AgentState, agent_b: AgentState, log_gamma: np.ndarray,
                        rng: np.random.Generator) -> np.ndarray:
    """Draw each w_d from ``gamma[k] * theta_a[k, c_a[d]] * theta_b[k, c_b[d]]``."""
    logits = (agent_a.log_theta[:, agent_a.c] + agent_b.log_theta[:, agent_b.c]).T
    return sample_log_categorical_rows(logits + log_gamma[None, :], rng)


def gibbs_integrated(config: ModelConfig, obs_a: Mapping, obs_b: Mapping, labels=None,
                     state: GameState | None = None,
                     callback: Callable[[GameState, dict], None] | None = None) -> RunResult:
    """Joint Gibbs sweep over both agents with a single shared sign sequence."""
    config = ModelConfig.from_dict({**config.to_dict(),
                                    "communication_type": CommunicationType.INTEGRATED_GIBBS})
    rng = make_rng(config.seed)
    D = check_observations(obs_a, config.D)
    check_observations(obs_b, D)
    labels = _check_labels(labels, D)
    if state is None:
        state = initial_state(config, obs_a, obs_b, rng)
    else:
        state = state.copy()
    with np.errstate(divide="ignore"):
        log_gamma = np.log(config.gamma_vector())
    nan = float("nan")
    result = RunResult(config=config, state=state)
    w = state.w_a
    for _ in range(config.iterations):
        for agent, obs in ((state.agent_a, obs_a), (state.agent_b, obs_b)):
            sample_phi(agent, obs, config.beta_for, rng)
        for agent in (state.agent_a, state.agent_b):
            sample_theta(agent, w, config.alpha, rng)
        for agent, obs in ((state.agent_a, obs_a), (state.agent_b, obs_b)):
            sample_categories(agent, obs, w, rng)
        w = sample_shared_signs(state.agent_a, state.agent_b, log_gamma, rng)
        state.w_a = w
        state.w_b = w.copy()
        state.iteration += 1
        rec = _record(state.iteration, state, labels, nan, nan, True)
        result.trace.append(rec)
        if callback is not None:
            callback(state, rec)
    return result


def run(config: ModelConfig, obs_a: Mapping, obs_b: Mapping, labels=None, **kwargs) -> RunResult:
    """Dispatch on ``config.communication_type``."""
    if config.communication_type is CommunicationType.INTEGRATED_GIBBS:
        return gibbs_integrated(config, obs_a, obs_b, labels, **kwargs)
    return run_naming_game(config, obs_a, obs_b, labels, **kwargs)


def fit_single_agent(config: ModelConfig, obs: Mapping, labels=None) -> tuple[AgentState, list]:
    """Gibbs sampling of one agent's MDM on its own (no signs exchanged).

    Equivalent to an agent with a single sign: theta reduces to one mixing
    vector over categories. Returns the final agent and a per-iteration ARI
    trace (NaN without ``labels``).
    """
    single = ModelConfig.from_dict({**config.to_dict(), "K": 1, "gamma": None})
    rng = make_rng(single.seed)
    D = check_observations(obs, single.D)
    labels = _check_labels(labels, D)
    agent = init_agent(single, obs, rng)
    w = np.zeros(D, dtype=np.int64)
    trace = []
    for _ in range(single.iterations):
        sample_phi(agent, obs, single.beta_for, rng)
        sample_theta(agent, w, single.alpha, rng)
        sample_categories(agent, obs, w, rng)
        trace.append(ari(labels, agent.c) if labels is not None else float("nan"))
    return agent, trace
