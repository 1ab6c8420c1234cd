"""Interpersonal cross-modal inference.

Agent A observes a datum, infers a category and utters a sign; agent B turns
the sign into one of its own categories and imagines the histograms it would
observe. Chaining the four draws is ancestral sampling of B's observation
given A's, with both agents' parameters held fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import logsumexp

from .distributions import sample_log_categorical_rows
from .metrics import jsd
from .model import AgentState, category_log_posterior


def _check_trained(agent: AgentState) -> None:
    # zero probabilities (-inf logs) are fine; NaN, +inf or an all-zero row are not
    for name, lp in [("theta", agent.log_theta)] + [(f"phi[{m}]", v) for m, v in agent.log_phi.items()]:
        if np.any(np.isnan(lp)) or np.any(np.isposinf(lp)) or np.any(np.all(np.isneginf(lp), axis=-1)):
            raise ValueError(f"agent {name} is not a valid set of distributions "
                             "(untrained or corrupted state)")


def recognition_log_prior(agent: AgentState, gamma, prior: str = "marginal") -> np.ndarray:
    """Log prior over categories used when recognizing a fresh observation.

    ``"marginal"`` uses ``sum_k gamma[k] * theta[k, c]``; ``"uniform"`` uses 1/L.
    """
    if prior == "uniform":
        return np.full(agent.L, -np.log(agent.L))
    if prior != "marginal":
        raise ValueError(f"unknown recognition prior {prior!r}")
    with np.errstate(divide="ignore"):
        log_gamma = np.log(np.asarray(gamma, dtype=float))
    return logsumexp(agent.log_theta + log_gamma[:, None], axis=0)


def _datum_log_likelihood(agent: AgentState, o: Mapping) -> np.ndarray:
    if set(o) != set(agent.modalities):
        raise ValueError(
            f"observation modalities {sorted(o)} do not match the agent's {sorted(agent.modalities)}")
    ll = np.zeros(agent.L)
    for m, x in o.items():
        ll = ll + agent.log_phi[m] @ np.asarray(x, dtype=float)
    return ll


def infer_sign_from_observation(agent: AgentState, o_d: Mapping, gamma,
                                rng: np.random.Generator, prior: str = "marginal") -> tuple[int, int]:
    """Sample ``(category, sign)`` for one observation of ``agent``."""
    _check_trained(agent)
    log_post = category_log_posterior(recognition_log_prior(agent, gamma, prior),
                                      _datum_log_likelihood(agent, o_d))
    c = int(sample_log_categorical_rows(log_post[None, :], rng)[0])
    with np.errstate(divide="ignore"):
        logits = agent.log_theta[:, c] + np.log(np.asarray(gamma, dtype=float))
    w = int(sample_log_categorical_rows(logits[None, :], rng)[0])
    return c, w


def predict_observation_from_sign(agent: AgentState, w: int, totals: Mapping,
                                  rng: np.random.Generator) -> tuple[int, dict]:
    """Sample ``agent``'s category for sign ``w`` and imagined histograms.

    ``totals`` gives the histogram size per modality; modalities the agent
    lacks are skipped. Returns ``(category, {modality: histogram})``.
    """
    _check_trained(agent)
    if not 0 <= w < agent.K:
        raise IndexError(f"sign {w} out of range [0, {agent.K})")
    c = int(sample_log_categorical_rows(agent.log_theta[w][None, :], rng)[0])
    out = {}
    for m in agent.modalities:
        if m not in totals:
            continue
        p = np.exp(agent.log_phi[m][c])
        p /= p.sum()
        out[m] = rng.multinomial(int(totals[m]), p).astype(np.int64)
    return c, out


def nearest_dataset_image(predicted, candidates) -> int:
    """Index of the candidate histogram closest in JSD to ``predicted``.

    Ties go to the lowest index.
    """
    cands = np.asarray(candidates, dtype=float)
    if cands.ndim != 2 or cands.shape[0] == 0:
        raise ValueError("no candidates to choose from")
    p = np.asarray(predicted, dtype=float)
    if p.shape != cands.shape[1:]:
        raise ValueError(f"dimension mismatch {p.shape} vs {cands.shape[1:]}")
    if p.sum() <= 0 or np.any(cands.sum(axis=1) <= 0):
        raise ValueError("JSD needs histograms with a positive total")
    p = p / p.sum()
    q = cands / cands.sum(axis=1, keepdims=True)
    m = 0.5 * (p[None, :] + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        kp = np.where(p > 0, p * np.log(p / m), 0.0).sum(axis=1)
        kq = np.where(q > 0, q * np.log(q / m), 0.0).sum(axis=1)
    return int(np.argmin(0.5 * (kp + kq)))


@dataclass
class CrossModalRecord:
    d: int
    category_a: int
    sign: int
    category_b: int
    predicted: dict
    nearest: dict
    jsd: dict

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "category_a": self.category_a,
            "sign": self.sign,
            "category_b": self.category_b,
            "predicted": {m: h.tolist() for m, h in self.predicted.items()},
            "nearest": self.nearest,
            "jsd": self.jsd,
        }


def default_totals(observations: Mapping) -> dict:
    """Per-modality histogram size: the rounded mean total of the given data."""
    return {m: max(1, int(round(float(np.asarray(x).sum(axis=1).mean()))))
            for m, x in observations.items()}


def cross_modal_predictions(agent_a: AgentState, agent_b: AgentState, obs_a: Mapping,
                            gamma, rng: np.random.Generator, totals: Mapping | None = None,
                            candidates: Mapping | None = None,
                            prior: str = "marginal") -> list[CrossModalRecord]:
    """Run A-observes / B-imagines for every datum of ``obs_a``.

    ``candidates`` (modality -> (N, V) histograms) enables the nearest-image
    lookup; JSD values are against agent A's own observation of the datum.
    """
    if totals is None:
        totals = default_totals(obs_a)
    D = next(iter(obs_a.values())).shape[0]
    records = []
    for d in range(D):
        o_d = {m: np.asarray(x)[d] for m, x in obs_a.items()}
        c_a, w = infer_sign_from_observation(agent_a, o_d, gamma, rng, prior)
        c_b, pred = predict_observation_from_sign(agent_b, w, totals, rng)
        nearest, div = {}, {}
        for m, h in pred.items():
            if m in o_d and h.sum() > 0 and o_d[m].sum() > 0:
                div[m] = jsd(o_d[m], h)
            if candidates is not None and m in candidates:
                nearest[m] = nearest_dataset_image(h, np.asarray(candidates[m]))
        records.append(CrossModalRecord(d, c_a, w, c_b, pred, nearest, div))
    return records


def predicted_category_distribution(agent_a: AgentState, agent_b: AgentState, o_d: Mapping,
                                    gamma, prior: str = "marginal") -> np.ndarray:
    """Exact distribution of B's category given A's observation (chained conditionals)."""
    log_post_a = category_log_posterior(recognition_log_prior(agent_a, gamma, prior),
                                        _datum_log_likelihood(agent_a, o_d))
    gamma = np.asarray(gamma, dtype=float)
    theta_a, theta_b = agent_a.theta, agent_b.theta
    p_ca = np.exp(log_post_a)
    # P(w | c_a) proportional to gamma[w] * theta_a[w, c_a]
    p_w_given_c = gamma[:, None] * theta_a
    p_w_given_c /= p_w_given_c.sum(axis=0, keepdims=True)
    p_w = p_w_given_c @ p_ca
    return p_w @ theta_b


