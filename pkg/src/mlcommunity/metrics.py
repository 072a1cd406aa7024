"""Agreement between a ground-truth partition and an estimate.

Labels may be any hashable values; only the induced partitions matter.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import UnsupportedKError

MAX_EXHAUSTIVE_K = 8


def _encode(labels):
    _, codes = np.unique(np.asarray(labels).ravel(), return_inverse=True)
    return codes.ravel()


def contingency(truth, est) -> np.ndarray:
    """K_truth x K_est table of co-membership counts."""
    t, e = _encode(truth), _encode(est)
    if t.size != e.size:
        raise ValueError(f"partitions differ in length ({t.size} vs {e.size})")
    if t.size == 0:
        raise ValueError("partitions are empty")
    rows, cols = int(t.max()) + 1, int(e.max()) + 1
    return np.bincount(t * cols + e, minlength=rows * cols).reshape(rows, cols)


@functools.lru_cache(maxsize=None)
def _permutations(K):
    return np.array(list(itertools.permutations(range(K))), dtype=np.int64)


def _padded(truth, est):
    table = contingency(truth, est)
    K, K_est = table.shape
    if K_est > K:
        raise ValueError(f"estimate has {K_est} communities but the truth has only {K}")
    if K_est < K:
        table = np.hstack([table, np.zeros((K, K - K_est), dtype=np.int64)])
    return table


def clustering_error(truth, est) -> float:
    """Minimax misclassification rate over label permutations.

    For every permutation ``pi`` the rate of community ``k`` is
    ``(|C_k minus Chat_pi(k)| + |Chat_pi(k) minus C_k|) / n_k``; the result is
    the smallest achievable worst-community rate. ``est`` may use fewer
    labels than ``truth`` (missing communities are empty).

    Raises
    ------
    UnsupportedKError
        If the truth has more than 8 communities.
    """
    table = _padded(truth, est)
    K = table.shape[0]
    if K > MAX_EXHAUSTIVE_K:
        raise UnsupportedKError(f"clustering error is exhaustive over K! permutations; K={K} > {MAX_EXHAUSTIVE_K}, use ARI or NMI")
    n_k = table.sum(axis=1)
    m_j = table.sum(axis=0)
    rate = (n_k[:, None] + m_j[None, :] - 2 * table) / n_k[:, None]
    perms = _permutations(K)
    worst = rate[np.arange(K)[None, :], perms].max(axis=1)
    return float(worst.min())


def hamming_error(truth, est) -> float:
    """Fraction of nodes misassigned under the best label matching.

    The matching is a maximum-weight assignment on the contingency table, so
    any number of communities is supported on either side.
    """
    table = contingency(truth, est)
    rows, cols = linear_sum_assignment(table, maximize=True)
    n = table.sum()
    return float(1.0 - table[rows, cols].sum() / n)


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(truth, est) -> float:
    """Mutual information normalized by the arithmetic mean of the two entropies.

    Two single-cluster partitions score 1.
    """
    table = contingency(truth, est).astype(np.float64)
    n = table.sum()
    h_t = _entropy(table.sum(axis=1))
    h_e = _entropy(table.sum(axis=0))
    if h_t == 0.0 and h_e == 0.0:
        return 1.0
    pij = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / n**2
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / outer[nz])))
    return float(np.clip(mi / ((h_t + h_e) / 2), 0.0, 1.0))


def _pairs(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def ari(truth, est) -> float:
    """Hubert-Arabie adjusted Rand index; 1 when the denominator vanishes."""
    table = contingency(truth, est)
    n = table.sum()
    index = _pairs(table).sum()
    a = _pairs(table.sum(axis=1)).sum()
    b = _pairs(table.sum(axis=0)).sum()
    expected = a * b / _pairs(n) if n > 1 else 0.0
    max_index = (a + b) / 2
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))


def accuracy_rate(estimates, true_k: int) -> float:
    """Fraction of trials whose estimated number of communities equals ``true_k``."""
    estimates = np.asarray(list(estimates))
    if estimates.size == 0:
        raise ValueError("accuracy rate needs at least one estimate")
    return float(np.mean(estimates == true_k))


@dataclass(frozen=True)
class MetricsReport:
    clustering_error: float
    hamming_error: float
    nmi: float
    ari: float


def evaluate(truth, est) -> MetricsReport:
    return MetricsReport(clustering_error(truth, est), hamming_error(truth, est), nmi(truth, est), ari(truth, est))
