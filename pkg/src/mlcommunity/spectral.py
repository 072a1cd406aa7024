"""Spectral primitives: leading eigen/singular vectors, row normalization, k-means.

Small problems use LAPACK dense solvers. Large ones fall back to ARPACK
(implicitly restarted Lanczos) through :mod:`scipy.sparse.linalg`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .rng import spawn

DENSE_EIGEN_LIMIT = 2048
DENSE_SVD_LIMIT = 512
SYMMETRY_TOL = 1e-9
ZERO_ROW_TOL = 1e-12
GAP_TOL = 1e-8


class SpectralGapWarning(UserWarning):
    """The K-th and (K+1)-th leading values tie, so the leading subspace is not unique."""


@dataclass
class Embedding:
    """Leading vectors (n x K, orthonormal columns) with their eigen/singular values."""

    vectors: np.ndarray
    values: np.ndarray
    normalized: np.ndarray | None = None
    flagged_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def K(self) -> int:
        return self.vectors.shape[1]

    def truncate(self, k: int) -> "Embedding":
        return Embedding(self.vectors[:, :k].copy(), self.values[:k].copy())


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of every column made positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _magnitude_order(values: np.ndarray) -> np.ndarray:
    # |value| descending, then signed value descending, then index ascending
    idx = np.arange(values.size)
    return np.lexsort((idx, -values, -np.abs(values)))


def _check_gap(sorted_mags, k, what):
    if k < sorted_mags.size and sorted_mags[k - 1] - sorted_mags[k] <= GAP_TOL * max(1.0, sorted_mags[0]):
        warnings.warn(
            f"{what} {k} and {k + 1} are tied ({sorted_mags[k - 1]:.3g} vs {sorted_mags[k]:.3g}); "
            "the leading subspace is not unique",
            SpectralGapWarning,
            stacklevel=3,
        )


def _asymmetry(M) -> float:
    if sp.issparse(M):
        diff = (M - M.T).tocsr()
        return float(abs(diff).max()) if diff.nnz else 0.0
    return float(np.max(np.abs(M - M.T))) if M.size else 0.0


def top_k_eigen(M, k: int, warn_on_tie: bool = True) -> Embedding:
    """K eigenpairs of a symmetric matrix with the largest ``|eigenvalue|``.

    Parameters
    ----------
    M : (n, n) ndarray or sparse matrix
        Symmetric real matrix.
    k : int
        Number of eigenpairs, ``1 <= k <= n``.

    Returns
    -------
    Embedding
        Values ordered by magnitude (ties by signed value, descending).
        Each eigenvector is signed so its largest-magnitude entry is positive.
    """
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if _asymmetry(M) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric")

    if n <= DENSE_EIGEN_LIMIT or k + 1 >= n:
        dense = M.toarray() if sp.issparse(M) else np.asarray(M)
        vals, vecs = np.linalg.eigh(dense.astype(np.float64))
    else:
        op = M.astype(np.float64)
        if sp.issparse(op):
            op = op.tocsr()
        # one extra pair so the gap after the k-th value can be checked
        v0 = np.ones(n) / np.sqrt(n)
        vals, vecs = spla.eigsh(op, k=k + 1, which="LM", v0=v0)
    order = _magnitude_order(vals)
    vals, vecs = vals[order], vecs[:, order]
    if warn_on_tie:
        _check_gap(np.abs(vals), k, "eigenvalues")
    return Embedding(_fix_signs(vecs[:, :k]), vals[:k].copy())


def top_k_left_singular(M, k: int, warn_on_tie: bool = True) -> Embedding:
    """Leading ``k`` left-singular vectors of an n x m matrix."""
    if M.ndim != 2:
        raise ValueError("expected a matrix")
    n, m = M.shape
    if not 1 <= k <= min(n, m):
        raise ValueError(f"k must lie in [1, {min(n, m)}], got {k}")
    if min(n, m) <= DENSE_SVD_LIMIT or k + 1 >= min(n, m):
        dense = M.toarray() if sp.issparse(M) else np.asarray(M)
        U, s, _ = np.linalg.svd(dense.astype(np.float64), full_matrices=False)
    else:
        op = M.astype(np.float64)
        if sp.issparse(op):
            op = op.tocsr()
        v0 = np.ones(min(n, m)) / np.sqrt(min(n, m))
        U, s, _ = spla.svds(op, k=k + 1, which="LM", v0=v0, solver="arpack")
        order = np.argsort(-s, kind="stable")
        U, s = U[:, order], s[order]
    if warn_on_tie:
        _check_gap(s, k, "singular values")
    return Embedding(_fix_signs(U[:, :k]), s[:k].copy())


def row_normalize(E: np.ndarray, tol: float = ZERO_ROW_TOL):
    """Scale rows to unit Euclidean norm.

    Rows with norm below ``tol`` are returned as zeros and their indices are
    reported in the second return value.
    """
    E = np.asarray(E, dtype=np.float64)
    norms = np.linalg.norm(E, axis=1)
    flagged = np.flatnonzero(norms < tol)
    out = np.zeros_like(E)
    ok = norms >= tol
    out[ok] = E[ok] / norms[ok, None]
    return out, flagged


@dataclass(frozen=True)
class KMeansOptions:
    iters: int = 100
    restarts: int = 10

    def __post_init__(self):
        if self.iters < 1 or self.restarts < 1:
            raise ValueError("iters and restarts must be positive")


@dataclass
class KMeansResult:
    labels: np.ndarray  # 1..K, canonical first-occurrence order
    centers: np.ndarray
    inertia: float
    n_iter: int
    history: list  # within-cluster sum of squares after each Lloyd update
    restart: int


def canonical_labels(labels) -> np.ndarray:
    """Relabel so the first node's cluster is 1, the next new cluster is 2, and so on."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return rank[inverse.ravel()] + 1


def _sq_dists(X, C, x_sq):
    d = x_sq[:, None] - 2.0 * X @ C.T + np.sum(C * C, axis=1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(X, k, rng, x_sq):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(X, X[chosen], x_sq)[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a chosen center
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(X, X[idx : idx + 1], x_sq)[:, 0])
    return X[chosen].copy()


def _lloyd(X, centers, iters, x_sq):
    k = centers.shape[0]
    n = X.shape[0]
    labels = None
    history = []
    it = 0
    for it in range(1, iters + 1):
        d = _sq_dists(X, centers, x_sq)
        new = np.argmin(d, axis=1)
        counts = np.bincount(new, minlength=k)
        for j in np.flatnonzero(counts == 0):
            # move the worst-served point into the empty cluster
            cost = d[np.arange(n), new]
            far = int(np.argmax(cost))
            if cost[far] <= 0:
                break
            new[far] = j
            d[far] = 0.0
            counts = np.bincount(new, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, new, X)
        nonempty = counts > 0
        centers = centers.copy()
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        history.append(float(np.sum((X - centers[new]) ** 2)))
        if labels is not None and np.array_equal(new, labels):
            labels = new
            break
        labels = new
    return labels, centers, history, it


def kmeans_fit(points, k: int, iters: int = 100, restarts: int = 10, rng_seed=None) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds, best of ``restarts`` runs.

    The winner has the smallest final within-cluster sum of squares, ties
    going to the earliest restart. Restart ``r`` draws from the ``r``-th child
    of ``SeedSequence(rng_seed)``.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    if iters < 1 or restarts < 1:
        raise ValueError("iters and restarts must be positive")
    x_sq = np.sum(X * X, axis=1)
    seeds = spawn(rng_seed, restarts)
    best = None
    for r, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        centers = _kmeanspp(X, k, rng, x_sq)
        labels, centers, history, n_iter = _lloyd(X, centers, iters, x_sq)
        inertia = history[-1]
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centers, inertia, n_iter, history, r)
    canon = canonical_labels(best.labels)
    # reorder centers to follow the canonical labels
    order = np.empty(k, dtype=np.int64)
    seen = {}
    for old, new in zip(best.labels, canon):
        seen.setdefault(new, old)
    remaining = [c for c in range(k) if c not in seen.values()]
    for new in range(1, k + 1):
        order[new - 1] = seen[new] if new in seen else remaining.pop(0)
    best.centers = best.centers[order]
    best.labels = canon
    return best


def kmeans(points, k: int, iters: int = 100, restarts: int = 10, rng_seed=None) -> np.ndarray:
    """Cluster rows of ``points`` into ``k`` groups; returns labels in ``1..k``."""
    return kmeans_fit(points, k, iters, restarts, rng_seed).labels
