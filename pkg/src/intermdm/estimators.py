"""scikit-learn style wrappers.

Multimodal inputs are mappings ``modality -> (n_samples, n_bins)`` count
arrays; a bare 2-D array is treated as a single modality named ``"x"``.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .crossmodal import default_totals, predict_observation_from_sign, recognition_log_prior
from .distributions import make_rng
from .inference import fit_single_agent, run
from .metrics import kappa
from .model import CommunicationType, ModelConfig, category_log_posterior


def check_multimodal(X, n_samples: int | None = None, bins: Mapping | None = None) -> dict:
    """Validate multimodal count data and return ``{modality: int64 array}``."""
    if not isinstance(X, Mapping):
        X = {"x": X}
    if not X:
        raise ValueError("at least one modality is required")
    out = {}
    for m, x in X.items():
        arr = check_array(x, dtype=None, ensure_2d=True)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr != np.round(arr)):
            raise ValueError(f"modality {m!r}: counts must be non-negative integers")
        out[m] = arr.astype(np.int64)
    sizes = {x.shape[0] for x in out.values()}
    if len(sizes) != 1:
        raise ValueError(f"modalities disagree on n_samples: {sorted(sizes)}")
    if n_samples is not None and sizes.pop() != n_samples:
        raise ValueError(f"expected {n_samples} samples")
    if bins is not None:
        if set(out) != set(bins):
            raise ValueError(f"expected modalities {sorted(bins)}, got {sorted(out)}")
        for m, x in out.items():
            if x.shape[1] != bins[m]:
                raise ValueError(f"modality {m!r}: expected {bins[m]} bins, got {x.shape[1]}")
    return out


def _seed(random_state) -> int:
    if random_state is None:
        return int(np.random.SeedSequence().entropy % 2**63)
    return int(random_state)


def _log_likelihood(agent, X: Mapping) -> np.ndarray:
    ll = 0.0
    for m in agent.modalities:
        ll = ll + X[m].astype(float) @ agent.log_phi[m].T
    return ll


class MultimodalDirichletMixture(ClusterMixin, BaseEstimator):
    """Single-agent multimodal Dirichlet mixture fitted by Gibbs sampling.

    Parameters
    ----------
    n_categories : int
        Upper bound on the number of categories.
    alpha, beta : float
        Dirichlet concentrations of the mixing weights and emissions.
    n_iter : int
        Gibbs sweeps.
    random_state : int or None
        Seed; ``None`` draws a fresh one.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
        Final category assignments.
    weights_ : ndarray of shape (n_categories,)
        Mixing weights.
    emissions_ : dict
        Per-modality ``(n_categories, n_bins)`` emission probabilities.
    """

    def __init__(self, n_categories=15, alpha=0.01, beta=0.001, n_iter=200, random_state=0):
        self.n_categories = n_categories
        self.alpha = alpha
        self.beta = beta
        self.n_iter = n_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_multimodal(X)
        config = ModelConfig(K=1, L=self.n_categories, alpha=self.alpha, beta=self.beta,
                             iterations=self.n_iter, seed=_seed(self.random_state))
        self.agent_, _ = fit_single_agent(config, X)
        self.labels_ = self.agent_.c.copy()
        self.weights_ = self.agent_.theta[0]
        self.emissions_ = self.agent_.phi
        self.n_bins_ = {m: x.shape[1] for m, x in X.items()}
        return self

    def predict_log_proba(self, X):
        check_is_fitted(self, "agent_")
        X = check_multimodal(X, bins=self.n_bins_)
        return category_log_posterior(self.agent_.log_theta[0], _log_likelihood(self.agent_, X))

    def predict_proba(self, X):
        return np.exp(self.predict_log_proba(X))

    def predict(self, X):
        return np.argmax(self.predict_log_proba(X), axis=1)


class InterMDM(BaseEstimator):
    """Two agents learning categories and a shared sign system.

    ``fit(X_a, X_b)`` takes paired observations of the same objects by the
    two agents (each may have a different set of modalities).

    Parameters
    ----------
    n_signs, n_categories : int
        Sign vocabulary size and per-agent category bound.
    alpha, beta : float
        Dirichlet concentrations.
    n_iter : int
        Naming-game rounds (or Gibbs sweeps for ``"integrated_gibbs"``).
    communication : str
        ``"proposed"``, ``"all_accept"``, ``"all_reject"`` or ``"integrated_gibbs"``.
    random_state : int or None

    Attributes
    ----------
    state_ : GameState
    labels_a_, labels_b_ : ndarray
        Final categories of each agent.
    signs_ : ndarray
        Final sign per datum (agent A's copy).
    kappa_ : float
        Agreement of the two agents' sign copies (NaN for the joint sampler).
    trace_ : list of dict
    """

    def __init__(self, n_signs=15, n_categories=15, alpha=0.01, beta=0.001, n_iter=200,
                 communication="proposed", random_state=0):
        self.n_signs = n_signs
        self.n_categories = n_categories
        self.alpha = alpha
        self.beta = beta
        self.n_iter = n_iter
        self.communication = communication
        self.random_state = random_state

    def _config(self) -> ModelConfig:
        return ModelConfig(K=self.n_signs, L=self.n_categories, alpha=self.alpha, beta=self.beta,
                           iterations=self.n_iter,
                           communication_type=CommunicationType.parse(self.communication),
                           seed=_seed(self.random_state))

    def fit(self, X_a, X_b, y=None):
        X_a = check_multimodal(X_a)
        X_b = check_multimodal(X_b, n_samples=next(iter(X_a.values())).shape[0])
        self.config_ = self._config()
        result = run(self.config_, X_a, X_b, y)
        self.state_ = result.state
        self.trace_ = result.trace
        self.labels_a_ = result.state.agent_a.c.copy()
        self.labels_b_ = result.state.agent_b.c.copy()
        self.signs_ = result.state.w_a.copy()
        gibbs = self.config_.communication_type is CommunicationType.INTEGRATED_GIBBS
        self.kappa_ = float("nan") if gibbs else kappa(result.state.w_a, result.state.w_b)
        self.n_bins_a_ = {m: x.shape[1] for m, x in X_a.items()}
        self.totals_b_ = default_totals(X_b)
        return self

    def predict(self, X_a):
        """Most probable sign agent A would utter for each new observation."""
        check_is_fitted(self, "state_")
        X_a = check_multimodal(X_a, bins=self.n_bins_a_)
        agent = self.state_.agent_a
        gamma = self.config_.gamma_vector()
        log_post = category_log_posterior(recognition_log_prior(agent, gamma),
                                          _log_likelihood(agent, X_a))
        with np.errstate(divide="ignore"):
            log_sign = agent.log_theta.T + np.log(gamma)[None, :]
        log_sign -= logsumexp(log_sign, axis=1, keepdims=True)
        return np.argmax(logsumexp(log_post[:, :, None] + log_sign[None, :, :], axis=1), axis=1)

    def predict_cross_modal(self, X_a, random_state=None):
        """Histograms agent B imagines for the signs A utters about ``X_a``.

        Returns ``{modality: (n_samples, n_bins)}`` over B's modalities.
        """
        signs = self.predict(X_a)
        rng = make_rng(_seed(self.random_state if random_state is None else random_state))
        out = {m: [] for m in self.state_.agent_b.modalities}
        for w in signs:
            _, hists = predict_observation_from_sign(self.state_.agent_b, int(w), self.totals_b_, rng)
            for m, h in hists.items():
                out[m].append(h)
        return {m: np.array(v) for m, v in out.items()}
