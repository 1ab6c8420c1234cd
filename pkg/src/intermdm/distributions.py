"""Seeded sampling and log densities for the Dirichlet, categorical and
multinomial families.

Every sampler takes an explicit :class:`numpy.random.Generator`. Use
:func:`make_rng` to build one; it wraps ``PCG64`` so that equal seeds give
bit-identical streams for identical call sequences (within one release).

Dirichlet draws go through log space: ``Gamma(a) = Gamma(a + 1) * U**(1/a)``
keeps concentrations such as 0.001 from underflowing to all-zero rows.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln, logsumexp

SIMPLEX_ATOL = 1e-9


def make_rng(seed: int | None) -> np.random.Generator:
    """Return a PCG64 generator for ``seed`` (a non-negative 64-bit int)."""
    if seed is not None and not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Seed of the sub-stream owned by trial ``trial_index``."""
    return (int(base_seed) + int(trial_index)) % 2**64


def check_simplex(probs, name: str = "probs") -> np.ndarray:
    """Validate a probability vector (or stack of them along the last axis)."""
    p = np.asarray(probs, dtype=float)
    if p.ndim == 0 or p.shape[-1] == 0:
        raise ValueError(f"{name} must have at least one outcome")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValueError(f"{name} must be finite and non-negative")
    if not np.allclose(p.sum(axis=-1), 1.0, rtol=0.0, atol=SIMPLEX_ATOL):
        raise ValueError(f"{name} must sum to 1 (atol={SIMPLEX_ATOL})")
    return p


def check_concentration(alphas, name: str = "alphas") -> np.ndarray:
    a = np.asarray(alphas, dtype=float)
    if a.ndim == 0 or a.shape[-1] == 0:
        raise ValueError(f"{name} must have at least one outcome")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return a


def sample_log_dirichlet(alphas, rng: np.random.Generator) -> np.ndarray:
    """Draw ``log(p)`` with ``p ~ Dir(alphas)``, batched over leading axes.

    The result is finite even when the matching probabilities underflow
    double precision.
    """
    a = check_concentration(alphas)
    log_g = np.log(rng.standard_gamma(a + 1.0))
    log_g += np.log(rng.random(a.shape)) / a
    return log_g - logsumexp(log_g, axis=-1, keepdims=True)


def sample_dirichlet(alphas, rng: np.random.Generator) -> np.ndarray:
    """Draw ``p ~ Dir(alphas)``; rows of a 2-D input are independent draws."""
    p = np.exp(sample_log_dirichlet(alphas, rng))
    # renormalize after exp so the sum is within SIMPLEX_ATOL
    return p / p.sum(axis=-1, keepdims=True)


def sample_categorical(probs, rng: np.random.Generator) -> int:
    """Draw one index ``i`` with probability ``probs[i]``."""
    p = check_simplex(probs)
    if p.ndim != 1:
        raise ValueError("probs must be one-dimensional")
    return int(sample_categorical_rows(p[None, :], rng)[0])


def sample_categorical_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one index per row of an (n, k) matrix of (unnormalized) weights.

    Rows need not sum to one; each row must have a positive total. Uses one
    uniform per row and inverse-CDF lookup, so an outcome with zero weight is
    never returned.
    """
    w = np.asarray(probs, dtype=float)
    cdf = np.cumsum(w, axis=1)
    total = cdf[:, -1]
    if np.any(~(total > 0)):
        raise ValueError("every row needs a positive total weight")
    u = rng.random(w.shape[0]) * total
    idx = (cdf <= u[:, None]).sum(axis=1)
    # guard against u landing exactly on the last cdf value
    return np.minimum(idx, w.shape[1] - 1)


def sample_log_categorical_rows(log_w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Row-wise categorical draw from log weights (max-subtracted before exp)."""
    log_w = np.asarray(log_w, dtype=float)
    top = log_w.max(axis=1, keepdims=True)
    if np.any(~np.isfinite(top)):
        raise ValueError("every row needs at least one finite log weight")
    return sample_categorical_rows(np.exp(log_w - top), rng)


def multinomial_log_coefficient(counts) -> float | np.ndarray:
    """``log(n! / prod(x_i!))`` along the last axis."""
    x = np.asarray(counts, dtype=float)
    return gammaln(x.sum(axis=-1) + 1.0) - gammaln(x + 1.0).sum(axis=-1)


def multinomial_log_kernel(counts, probs) -> float:
    """Coefficient-free multinomial log likelihood ``sum_i x_i log p_i``.

    This is the variant used inside category posteriors: the coefficient is
    the same for every category and drops out after normalization.
    """
    x = _check_counts(counts)
    p = check_simplex(probs)
    if x.shape != p.shape:
        raise ValueError(f"length mismatch: counts {x.shape} vs probs {p.shape}")
    pos = x > 0
    if np.any(p[pos] == 0):
        return -np.inf
    return float(np.sum(x[pos] * np.log(p[pos])))


def multinomial_log_pmf(counts, probs, coefficient: bool = True) -> float:
    """Log multinomial pmf of a histogram; ``-inf`` if it hits a zero-probability bin."""
    kernel = multinomial_log_kernel(counts, probs)
    if not coefficient or kernel == -np.inf:
        return kernel
    return kernel + float(multinomial_log_coefficient(counts))


def sample_multinomial(total: int, probs, rng: np.random.Generator) -> np.ndarray:
    """Draw a histogram of ``total`` counts."""
    if int(total) != total or total < 1:
        raise ValueError(f"total must be a positive integer, got {total}")
    p = check_simplex(probs)
    # numpy's multinomial rejects sums slightly above 1
    p = p / p.sum(axis=-1, keepdims=True)
    return rng.multinomial(int(total), p).astype(np.int64)


def dirichlet_multinomial_log_marginal(counts, alphas) -> float:
    """``log int Multi-kernel(x | p) Dir(p | a) dp`` (no multinomial coefficient)."""
    x = np.asarray(counts, dtype=float)
    a = check_concentration(alphas)
    return float(
        gammaln(a.sum()) - gammaln(a.sum() + x.sum()) + np.sum(gammaln(a + x) - gammaln(a))
    )


def _check_counts(counts) -> np.ndarray:
    x = np.asarray(counts)
    if x.ndim != 1:
        raise ValueError("counts must be one-dimensional")
    if x.size and (np.any(x < 0) or not np.all(np.equal(np.mod(x, 1), 0))):
        raise ValueError("counts must be non-negative integers")
    return x.astype(float)
