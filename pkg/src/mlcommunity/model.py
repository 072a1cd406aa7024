"""Multi-layer degree-corrected stochastic block model (MLDCSBM).

Edge probabilities are ``theta[i] * theta[j] * B_l[label[i], label[j]]``,
independently for every unordered pair (self-loops included) and layer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .network import MultiLayerNetwork
from .rng import generator

THETA_FLOOR = 1e-12
LABEL_RETRIES = 100
# rows per block when sampling, to bound memory at roughly 4M probabilities
_BLOCK_ENTRIES = 1 << 22


@dataclass(frozen=True, eq=False)
class NodeLabels:
    """Community labels in ``1..K``; every community must be non-empty."""

    labels: np.ndarray
    K: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        K = int(self.K)
        if K < 1:
            raise ValueError("K must be positive")
        if labels.size == 0:
            raise ValueError("labels must be non-empty")
        if labels.min() < 1 or labels.max() > K:
            raise ValueError(f"labels must lie in 1..{K}")
        missing = np.setdiff1d(np.arange(1, K + 1), labels)
        if missing.size:
            raise ValueError(f"communities {missing.tolist()} are empty")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "K", K)

    @classmethod
    def from_any(cls, labels) -> "NodeLabels":
        """Relabel arbitrary hashable labels to ``1..K`` by first occurrence."""
        _, first, inverse = np.unique(np.asarray(labels), return_index=True, return_inverse=True)
        order = np.argsort(np.argsort(first))
        return cls(order[inverse.ravel()] + 1, first.size)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def membership(self) -> np.ndarray:
        """n x K binary matrix Z with one 1 per row."""
        Z = np.zeros((self.n, self.K))
        Z[np.arange(self.n), self.labels - 1] = 1.0
        return Z

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels - 1, minlength=self.K)


@dataclass(frozen=True, eq=False)
class MldcsbmParams:
    """Labels, degree heterogeneity ``theta`` and one K x K matrix per layer."""

    labels: NodeLabels
    theta: np.ndarray
    B: np.ndarray
    rho: float | None = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64).ravel()
        B = np.asarray(self.B, dtype=np.float64)
        if B.ndim == 2:
            B = B[None]
        K = self.labels.K
        if theta.shape != (self.labels.n,):
            raise ValueError("theta must have one entry per node")
        if np.any(theta <= 0) or np.any(theta > 1):
            raise ValueError("theta entries must lie in (0, 1]")
        if B.ndim != 3 or B.shape[1:] != (K, K) or B.shape[0] < 1:
            raise ValueError(f"B must be an L x {K} x {K} array")
        if np.any(B < 0) or np.any(B > 1):
            raise ValueError("B entries must lie in [0, 1]")
        if not np.array_equal(B, B.transpose(0, 2, 1)):
            raise ValueError("every B_l must be symmetric")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.labels.n

    @property
    def K(self) -> int:
        return self.labels.K

    @property
    def L(self) -> int:
        return self.B.shape[0]


def expected_adjacency(params: MldcsbmParams, layer: int) -> np.ndarray:
    """Omega_l = Theta Z B_l Z' Theta as a dense n x n array (``layer`` is 0-based)."""
    if not 0 <= layer < params.L:
        raise ValueError(f"layer index must lie in [0, {params.L}), got {layer}")
    lab = params.labels.labels - 1
    theta = params.theta
    return theta[:, None] * params.B[layer][np.ix_(lab, lab)] * theta[None, :]


def expected_sum(params: MldcsbmParams) -> np.ndarray:
    """Omega_sum = Theta Z (sum_l B_l) Z' Theta."""
    lab = params.labels.labels - 1
    core = params.B.sum(axis=0)
    return params.theta[:, None] * core[np.ix_(lab, lab)] * params.theta[None, :]


def expected_sum_squares(params: MldcsbmParams) -> np.ndarray:
    """S_tilde_sum = sum_l Omega_l^2, via the K x K core sum_l B_l (Z'Theta^2 Z) B_l."""
    lab = params.labels.labels - 1
    gram = np.bincount(lab, weights=params.theta**2, minlength=params.K)
    core = np.einsum("lij,j,ljk->ik", params.B, gram, params.B)
    core = (core + core.T) / 2
    return params.theta[:, None] * core[np.ix_(lab, lab)] * params.theta[None, :]


def sample_network(params: MldcsbmParams, rng_seed=None, self_loops: bool = True) -> MultiLayerNetwork:
    """Draw every layer independently from the model.

    Entries with ``i <= j`` (``i < j`` when ``self_loops`` is False) are
    Bernoulli draws mirrored across the diagonal.
    """
    rng = generator(rng_seed)
    n = params.n
    lab = params.labels.labels - 1
    theta = params.theta
    step = max(1, _BLOCK_ENTRIES // n)
    offset = 0 if self_loops else 1
    layers = []
    for l in range(params.L):
        B = params.B[l]
        rows, cols = [], []
        for i0 in range(0, n, step):
            i1 = min(n, i0 + step)
            prob = theta[i0:i1, None] * B[np.ix_(lab[i0:i1], lab)] * theta[None, :]
            hit = rng.random(prob.shape) < prob
            r, c = np.nonzero(hit)
            r += i0
            keep = c >= r + offset
            rows.append(r[keep])
            cols.append(c[keep])
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        upper = sp.coo_matrix((np.ones(r.size, dtype=np.int64), (r, c)), shape=(n, n)).tocsr()
        layer = upper + sp.triu(upper, k=1).T
        layers.append(layer.tocsr())
    return MultiLayerNetwork(tuple(layers))


def _uniform_labels(rng, n, K):
    for _ in range(LABEL_RETRIES):
        lab = rng.integers(1, K + 1, size=n)
        if np.unique(lab).size == K:
            return lab
    raise ValueError(f"could not draw {K} non-empty communities for n={n} in {LABEL_RETRIES} attempts")


def simulation_params(
    n: int,
    K: int,
    L: int,
    rho: float,
    assortative: bool = False,
    rng_seed=None,
    labels=None,
) -> MldcsbmParams:
    """Random parameters following the simulation recipe.

    Each node joins one of ``K`` communities with equal probability (redrawn
    until no community is empty), ``theta[i] = sqrt(rho) * U(0, 1)`` and
    ``B_l = (Bt + Bt') / 2`` with uniform ``Bt``. With ``assortative`` the
    diagonal of every ``B_l`` is set to 1.

    Parameters
    ----------
    labels : array-like, optional
        Fixed labels in ``1..K`` instead of the uniform draw.
    """
    if not (isinstance(n, (int, np.integer)) and isinstance(K, (int, np.integer)) and isinstance(L, (int, np.integer))):
        raise TypeError("n, K and L must be integers")
    if K < 1 or n < K:
        raise ValueError(f"need n >= K >= 1, got n={n}, K={K}")
    if L < 1:
        raise ValueError("L must be positive")
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    rng = generator(rng_seed)
    lab = _uniform_labels(rng, n, K) if labels is None else np.asarray(labels)
    theta = np.sqrt(rho) * rng.random(n)
    theta = np.maximum(theta, THETA_FLOOR)
    Bt = rng.random((L, K, K))
    B = (Bt + Bt.transpose(0, 2, 1)) / 2
    if assortative:
        idx = np.arange(K)
        B[:, idx, idx] = 1.0
    return MldcsbmParams(NodeLabels(lab, K), theta, B, rho=float(rho))
