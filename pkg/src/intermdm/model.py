"""Agent and game state of the two-agent multimodal Dirichlet mixture, plus
the conjugate updates and single-site conditionals every sampler shares.

Data layout
-----------
An agent's observations are a mapping ``modality -> (D, V) int array``;
a single datum is a mapping ``modality -> (V,) int array``. An absent key
means the agent lacks that modality for the whole run.

Parameters are kept in log space (``log_phi``, ``log_theta``). With the
small concentrations used in practice (0.001-0.01) many probabilities are
below the smallest double, and working with logs keeps every likelihood
finite. ``phi`` / ``theta`` expose the exponentiated values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import logsumexp

from .distributions import (
    check_simplex,
    multinomial_log_coefficient,
    sample_log_categorical_rows,
    sample_log_dirichlet,
)

MODALITIES = ("vision", "sound", "haptic")


class CommunicationType(str, enum.Enum):
    PROPOSED = "proposed"
    ALL_ACCEPT = "all_accept"
    ALL_REJECT = "all_reject"
    INTEGRATED_GIBBS = "integrated_gibbs"

    @classmethod
    def parse(cls, value) -> "CommunicationType":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"allaccept": "all_accept", "allreject": "all_reject",
                   "gibbs": "integrated_gibbs", "integratedgibbs": "integrated_gibbs"}
        return cls(aliases.get(key, key))


@dataclass
class ModelConfig:
    """Hyperparameters and run settings.

    ``beta`` may be a single float (shared by all modalities) or a mapping
    per modality. ``gamma`` defaults to the uniform simplex over ``K``.
    ``D`` and ``V`` are optional; when given they are checked against data.
    """

    K: int = 15
    L: int = 15
    alpha: float = 0.01
    beta: float | dict = 0.001
    gamma: list | None = None
    iterations: int = 200
    communication_type: CommunicationType = CommunicationType.PROPOSED
    seed: int = 0
    D: int | None = None
    V: dict | None = None

    def __post_init__(self):
        self.communication_type = CommunicationType.parse(self.communication_type)
        for name in ("K", "L"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if int(self.iterations) < 0:
            raise ValueError("iterations must be >= 0")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        betas = self.beta.values() if isinstance(self.beta, Mapping) else [self.beta]
        if any(not b > 0 for b in betas):
            raise ValueError("beta must be > 0")
        if self.gamma is not None:
            g = check_simplex(self.gamma, "gamma")
            if g.shape != (self.K,):
                raise ValueError(f"gamma must have K={self.K} entries")
        if self.D is not None and int(self.D) < 1:
            raise ValueError("D must be >= 1")

    def beta_for(self, modality: str) -> float:
        if isinstance(self.beta, Mapping):
            return float(self.beta[modality])
        return float(self.beta)

    def gamma_vector(self) -> np.ndarray:
        if self.gamma is None:
            return np.full(self.K, 1.0 / self.K)
        return np.asarray(self.gamma, dtype=float)

    def to_dict(self) -> dict:
        return {
            "K": int(self.K),
            "L": int(self.L),
            "D": None if self.D is None else int(self.D),
            "V": None if self.V is None else {m: int(v) for m, v in self.V.items()},
            "alpha": float(self.alpha),
            "beta": dict(self.beta) if isinstance(self.beta, Mapping) else float(self.beta),
            "gamma": None if self.gamma is None else [float(x) for x in self.gamma],
            "iterations": int(self.iterations),
            "communication_type": self.communication_type.value,
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelConfig":
        known = {"K", "L", "D", "V", "alpha", "beta", "gamma", "iterations",
                 "communication_type", "seed"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown ModelConfig fields: {sorted(unknown)}")
        return cls(**dict(d))


@dataclass
class AgentState:
    modalities: tuple
    log_phi: dict          # modality -> (L, V)
    log_theta: np.ndarray  # (K, L)
    c: np.ndarray          # (D,)

    @property
    def phi(self) -> dict:
        return {m: np.exp(lp) for m, lp in self.log_phi.items()}

    @property
    def theta(self) -> np.ndarray:
        return np.exp(self.log_theta)

    @property
    def K(self) -> int:
        return self.log_theta.shape[0]

    @property
    def L(self) -> int:
        return self.log_theta.shape[1]

    def copy(self) -> "AgentState":
        return AgentState(
            modalities=tuple(self.modalities),
            log_phi={m: lp.copy() for m, lp in self.log_phi.items()},
            log_theta=self.log_theta.copy(),
            c=self.c.copy(),
        )

    def equals(self, other: "AgentState") -> bool:
        return (
            tuple(self.modalities) == tuple(other.modalities)
            and set(self.log_phi) == set(other.log_phi)
            and all(np.array_equal(self.log_phi[m], other.log_phi[m]) for m in self.log_phi)
            and np.array_equal(self.log_theta, other.log_theta)
            and np.array_equal(self.c, other.c)
        )

    def to_dict(self) -> dict:
        return {
            "modalities": list(self.modalities),
            "phi": {m: np.exp(lp).tolist() for m, lp in self.log_phi.items()},
            "theta": np.exp(self.log_theta).tolist(),
            "log_phi": {m: lp.tolist() for m, lp in self.log_phi.items()},
            "log_theta": self.log_theta.tolist(),
            "c": self.c.tolist(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AgentState":
        if "log_phi" in d:
            log_phi = {m: np.asarray(v, dtype=float) for m, v in d["log_phi"].items()}
            log_theta = np.asarray(d["log_theta"], dtype=float)
        else:
            with np.errstate(divide="ignore"):
                log_phi = {m: np.log(np.asarray(v, dtype=float)) for m, v in d["phi"].items()}
                log_theta = np.log(np.asarray(d["theta"], dtype=float))
        return cls(
            modalities=tuple(d["modalities"]),
            log_phi=log_phi,
            log_theta=log_theta,
            c=np.asarray(d["c"], dtype=np.int64),
        )


@dataclass
class GameState:
    agent_a: AgentState
    agent_b: AgentState
    w_a: np.ndarray
    w_b: np.ndarray
    iteration: int = 0

    def copy(self) -> "GameState":
        return GameState(self.agent_a.copy(), self.agent_b.copy(),
                         self.w_a.copy(), self.w_b.copy(), self.iteration)

    def to_dict(self) -> dict:
        return {
            "agentA": self.agent_a.to_dict(),
            "agentB": self.agent_b.to_dict(),
            "wA": self.w_a.tolist(),
            "wB": self.w_b.tolist(),
            "iteration": int(self.iteration),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GameState":
        return cls(
            agent_a=AgentState.from_dict(d["agentA"]),
            agent_b=AgentState.from_dict(d["agentB"]),
            w_a=np.asarray(d["wA"], dtype=np.int64),
            w_b=np.asarray(d["wB"], dtype=np.int64),
            iteration=int(d["iteration"]),
        )


def check_observations(observations: Mapping, D: int | None = None) -> int:
    """Validate an agent's ``modality -> (D, V)`` histograms; return D."""
    if not observations:
        raise ValueError("an agent needs at least one modality")
    sizes = set()
    for m, x in observations.items():
        x = np.asarray(x)
        if x.ndim != 2:
            raise ValueError(f"modality {m!r}: expected a (D, V) array, got shape {x.shape}")
        if x.size and (np.any(x < 0) or not np.issubdtype(x.dtype, np.integer)):
            raise ValueError(f"modality {m!r}: counts must be non-negative integers")
        sizes.add(x.shape[0])
    if len(sizes) != 1:
        raise ValueError(f"modalities disagree on D: {sorted(sizes)}")
    n = sizes.pop()
    if n == 0:
        raise ValueError("D must be >= 1")
    if D is not None and n != D:
        raise ValueError(f"expected D={D} data, got {n}")
    return n


def init_agent(config: ModelConfig, observations: Mapping, rng: np.random.Generator) -> AgentState:
    """Draw phi and theta from their priors and uniform initial categories."""
    D = check_observations(observations, config.D)
    modalities = tuple(m for m in MODALITIES if m in observations) + tuple(
        sorted(m for m in observations if m not in MODALITIES)
    )
    log_phi = {}
    for m in modalities:
        V = np.asarray(observations[m]).shape[1]
        if config.V is not None and m in config.V and int(config.V[m]) != V:
            raise ValueError(f"modality {m!r}: expected V={config.V[m]}, got {V}")
        log_phi[m] = sample_log_dirichlet(np.full((config.L, V), config.beta_for(m)), rng)
    log_theta = sample_log_dirichlet(np.full((config.K, config.L), float(config.alpha)), rng)
    c = rng.integers(0, config.L, size=D)
    return AgentState(modalities=modalities, log_phi=log_phi, log_theta=log_theta, c=c)


def posterior_phi(observations: Mapping, c, l: int, modality: str, beta: float) -> np.ndarray:
    """Dirichlet concentration for ``phi[modality][l]`` given assignments ``c``."""
    if modality not in observations:
        raise KeyError(f"modality {modality!r} is absent for this agent")
    x = np.asarray(observations[modality])
    c = np.asarray(c)
    return beta + x[c == l].sum(axis=0).astype(float)


def posterior_phi_all(x: np.ndarray, c: np.ndarray, L: int, beta: float) -> np.ndarray:
    """All L rows of :func:`posterior_phi` for one modality at once."""
    stats = np.zeros((L, x.shape[1]))
    np.add.at(stats, c, x)
    return beta + stats


def posterior_theta(c, w, k: int, alpha: float, L: int) -> np.ndarray:
    """Dirichlet concentration for ``theta[k]``: alpha plus category counts of sign k."""
    c = np.asarray(c)
    w = np.asarray(w)
    if c.shape != w.shape:
        raise ValueError("c and w must have the same length")
    return alpha + np.bincount(c[w == k], minlength=L).astype(float)


def posterior_theta_all(c: np.ndarray, w: np.ndarray, K: int, L: int, alpha: float) -> np.ndarray:
    counts = np.zeros((K, L))
    np.add.at(counts, (w, c), 1.0)
    return alpha + counts


def sample_phi(agent: AgentState, observations: Mapping, beta_for, rng) -> None:
    """Resample every phi row of ``agent`` from its full conditional (in place)."""
    for m in agent.modalities:
        x = np.asarray(observations[m])
        conc = posterior_phi_all(x, agent.c, agent.L, beta_for(m))
        agent.log_phi[m] = sample_log_dirichlet(conc, rng)


def sample_theta(agent: AgentState, w: np.ndarray, alpha: float, rng) -> None:
    conc = posterior_theta_all(agent.c, w, agent.K, agent.L, alpha)
    agent.log_theta = sample_log_dirichlet(conc, rng)


def log_likelihood_matrix(agent: AgentState, observations: Mapping,
                          coefficient: bool = False) -> np.ndarray:
    """(D, L) sum over present modalities of multinomial log likelihoods."""
    total = None
    for m in agent.modalities:
        x = np.asarray(observations[m], dtype=float)
        ll = x @ agent.log_phi[m].T
        if coefficient:
            ll = ll + multinomial_log_coefficient(x)[:, None]
        total = ll if total is None else total + ll
    return total


def category_log_posterior(log_prior: np.ndarray, log_lik: np.ndarray) -> np.ndarray:
    """Normalized log posterior rows; raises if a row has no finite mass."""
    logits = log_prior + log_lik
    norm = logsumexp(logits, axis=-1, keepdims=True)
    if np.any(~np.isfinite(norm)):
        raise FloatingPointError("category posterior has zero mass for every category")
    return logits - norm


def category_posterior(o: Mapping, theta_row, phi: Mapping, L: int | None = None,
                       coefficient: bool = False) -> np.ndarray:
    """Posterior over categories for one datum.

    ``theta_row`` is the categorical prior over the L categories; ``phi`` maps
    each present modality of ``o`` to its (L, V) emission rows. Modalities
    missing from ``o`` contribute no factor. The multinomial coefficient is
    left out by default; including it gives the same normalized result.
    """
    theta_row = np.asarray(theta_row, dtype=float)
    if L is not None and theta_row.shape != (L,):
        raise ValueError(f"theta_row must have L={L} entries")
    if set(o) != set(phi):
        raise ValueError(f"phi covers {sorted(phi)} but observation has {sorted(o)}")
    with np.errstate(divide="ignore"):
        log_prior = np.log(theta_row)
        log_lik = np.zeros_like(theta_row)
        for m, x in o.items():
            x = np.asarray(x, dtype=float)
            lp = np.log(np.asarray(phi[m], dtype=float))
            # 0 * log 0 := 0
            term = np.where(x[None, :] > 0, x[None, :] * lp, 0.0).sum(axis=1)
            if coefficient:
                term = term + multinomial_log_coefficient(x)
            log_lik = log_lik + term
    post = np.exp(category_log_posterior(log_prior, log_lik))
    return post / post.sum()


def sample_categories(agent: AgentState, observations: Mapping, w: np.ndarray, rng) -> None:
    """Resample every c_d from ``theta[w_d][c] * prod_m Multi(o_md | phi_m,c)`` (in place)."""
    log_post = category_log_posterior(agent.log_theta[w], log_likelihood_matrix(agent, observations))
    agent.c = sample_log_categorical_rows(log_post, rng)


def validate_agent(agent: AgentState, K: int, L: int) -> None:
    if agent.log_theta.shape != (K, L):
        raise ValueError(f"theta must be ({K}, {L}), got {agent.log_theta.shape}")
    for m, lp in agent.log_phi.items():
        if lp.shape[0] != L:
            raise ValueError(f"phi[{m!r}] must have L={L} rows")
    if np.any(agent.c < 0) or np.any(agent.c >= L):
        raise ValueError("category index out of range")
    if not all(np.all(np.isfinite(lp)) for lp in agent.log_phi.values()) or not np.all(
        np.isfinite(agent.log_theta)
    ):
        raise ValueError("agent parameters must be finite")
