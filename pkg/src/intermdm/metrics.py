"""Evaluation criteria: ARI, Cohen's kappa, cosine similarity, Jensen-Shannon
divergence, trial aggregation and Welch's t-test."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats


def _labels_pair(labels_a, labels_b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("labelings must be one-dimensional")
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def _comb2(n):
    return n * (n - 1) / 2.0


def contingency(labels_a, labels_b) -> np.ndarray:
    a, b = _labels_pair(labels_a, labels_b)
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def ari(labels_a, labels_b) -> float:
    """Adjusted Rand index by pair counting.

    Returns 1.0 when the denominator vanishes, which happens only when both
    partitions are the same trivial partition (one cluster, or all singletons).
    """
    a, _ = _labels_pair(labels_a, labels_b)
    if a.shape[0] < 2:
        raise ValueError("ARI needs at least two items")
    table = contingency(labels_a, labels_b)
    index = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(a.shape[0])
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))


def kappa(w_a, w_b) -> float:
    """Cohen's kappa between two sign sequences.

    Chance agreement uses the empirical marginals of each sequence. When both
    sequences are the same constant, chance agreement is 1 and 1.0 is returned.
    """
    a, b = _labels_pair(w_a, w_b)
    if a.shape[0] == 0:
        raise ValueError("kappa needs at least one item")
    observed = float(np.mean(a == b))
    _, inv = np.unique(np.concatenate([a, b]), return_inverse=True)
    n_signs = inv.max() + 1
    pa = np.bincount(inv[: a.shape[0]], minlength=n_signs) / a.shape[0]
    pb = np.bincount(inv[a.shape[0]:], minlength=n_signs) / b.shape[0]
    chance = float(pa @ pb)
    if chance >= 1.0:
        return 1.0
    return (observed - chance) / (1.0 - chance)


KAPPA_BANDS = (
    (0.81, "almost-perfect"),
    (0.61, "substantial"),
    (0.41, "moderate"),
    (0.21, "fair"),
    (0.0, "slight"),
)


def kappa_band(k: float) -> str:
    """Qualitative agreement band; a value equal to a band's lower bound belongs to that band."""
    if k > 1.0 + 1e-12:
        raise ValueError(f"kappa cannot exceed 1, got {k}")
    for lower, name in KAPPA_BANDS:
        if k >= lower:
            return name
    return "no-agreement"


def _histogram_pairs(set_a, set_b):
    if len(set_a) != len(set_b):
        raise ValueError(f"set sizes differ: {len(set_a)} vs {len(set_b)}")
    if len(set_a) == 0:
        raise ValueError("sets must be non-empty")
    for i, (x, y) in enumerate(zip(set_a, set_b)):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError(f"pair {i}: dimension mismatch {x.shape} vs {y.shape}")
        yield i, x, y


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(u @ v / (nu * nv))


def mean_cosine(set_a, set_b) -> float:
    return float(np.mean([cosine(x, y) for _, x, y in _histogram_pairs(set_a, set_b)]))


def kl_divergence(p, q, base: float = math.e) -> float:
    """KL(p || q) with 0 log 0 := 0; ``inf`` when q has a zero where p does not."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])) / math.log(base))


def jsd(p, q, base: float = math.e) -> float:
    """Jensen-Shannon divergence of two histograms, each normalized to sum 1."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.sum() <= 0 or q.sum() <= 0:
        raise ValueError("JSD needs histograms with a positive total")
    p = p / p.sum()
    q = q / q.sum()
    m = 0.5 * (p + q)
    return 0.5 * (kl_divergence(p, m, base) + kl_divergence(q, m, base))


def mean_jsd(set_a, set_b, base: float = math.e) -> float:
    return float(np.mean([jsd(x, y, base) for _, x, y in _histogram_pairs(set_a, set_b)]))


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    pvalue: float
    band: str


def significance_band(p: float) -> str:
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return "n.s."


def welch_t_test(sample_a, sample_b) -> TTestResult:
    """Two-sided Welch t-test with the result tables' significance bands."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    if a.var(ddof=1) == 0 and b.var(ddof=1) == 0:
        diff = a.mean() - b.mean()
        if diff == 0:
            return TTestResult(0.0, 1.0, "n.s.")
        return TTestResult(math.copysign(math.inf, diff), 0.0, "**")
    with warnings.catch_warnings():
        # near-identical trial values trip scipy's cancellation check; the statistic is still valid
        warnings.filterwarnings("ignore", message="Precision loss", category=RuntimeWarning)
        res = stats.ttest_ind(a, b, equal_var=False)
    p = float(res.pvalue)
    return TTestResult(float(res.statistic), p, significance_band(p))


@dataclass(frozen=True)
class Summary:
    mean: float
    sd: float
    n: int


def summarize(values) -> Summary:
    """Mean and sample SD (ddof=1; 0 for a single value). NaNs are not allowed."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("nothing to summarize")
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return Summary(float(v.mean()), sd, int(v.size))
