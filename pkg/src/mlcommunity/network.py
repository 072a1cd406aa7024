"""Multi-layer network container and the aggregate matrices built from it.

Layers are stored as sparse CSR matrices with int64 entries so that every
aggregate is computed exactly in integer arithmetic. Aggregates whose
density exceeds :data:`DENSE_THRESHOLD` are returned as dense arrays.

All Python-level indices (nodes, layers) are 0-based. Files and the CLI use
1-based ids; see :mod:`mlcommunity.ingest`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .rng import generator

DENSE_THRESHOLD = 0.05

AGGREGATE_KINDS = (
    "A_sum",
    "S_sum",
    "SumOfSquares",
    "Omega_sum",
    "S_tilde_sum",
    "A_sub_sum",
    "S_sub_sum",
)


def _as_layer(layer, n=None) -> sp.csr_matrix:
    mat = sp.csr_matrix(layer, dtype=np.int64, copy=True)
    mat.sum_duplicates()
    mat.eliminate_zeros()
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"layer must be square, got shape {mat.shape}")
    if n is not None and mat.shape[0] != n:
        raise ValueError(f"layer has {mat.shape[0]} nodes, expected {n}")
    if mat.nnz and not np.all(mat.data == 1):
        raise ValueError("layer entries must be 0 or 1")
    if (mat != mat.T).nnz:
        raise ValueError("layer must be symmetric")
    mat.sort_indices()
    return mat


@dataclass(frozen=True, eq=False)
class MultiLayerNetwork:
    """L symmetric binary adjacency matrices over a shared node set.

    Parameters
    ----------
    layers : sequence of array-like or sparse matrices
        Each layer is n x n, symmetric with entries in {0, 1}. Self-loops are
        allowed.
    node_ids : array-like of int, optional
        Original (file-level) identifiers of the nodes, in internal order.
        Defaults to ``1..n``.
    """

    layers: tuple
    node_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        layers = list(self.layers)
        if not layers:
            raise ValueError("a multi-layer network needs at least one layer")
        first = _as_layer(layers[0])
        n = first.shape[0]
        if n < 1:
            raise ValueError("a multi-layer network needs at least one node")
        checked = [first] + [_as_layer(a, n) for a in layers[1:]]
        for a in checked:
            a.data.setflags(write=False)
        object.__setattr__(self, "layers", tuple(checked))
        ids = np.arange(1, n + 1) if self.node_ids is None else np.asarray(self.node_ids)
        if ids.shape != (n,):
            raise ValueError(f"node_ids must have length {n}")
        ids = ids.copy()
        ids.setflags(write=False)
        object.__setattr__(self, "node_ids", ids)

    @classmethod
    def from_dense(cls, layers: Sequence, node_ids=None) -> "MultiLayerNetwork":
        return cls(tuple(np.asarray(a) for a in layers), node_ids)

    @classmethod
    def from_edges(cls, n: int, edges_per_layer: Sequence[Sequence[tuple]], node_ids=None):
        """Build from 0-based ``(u, v)`` pairs per layer; edges are symmetrized."""
        layers = []
        for edges in edges_per_layer:
            edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
            rows = np.concatenate([edges[:, 0], edges[:, 1]])
            cols = np.concatenate([edges[:, 1], edges[:, 0]])
            mat = sp.coo_matrix((np.ones(rows.size, dtype=np.int64), (rows, cols)), shape=(n, n)).tocsr()
            mat.data[:] = 1
            layers.append(mat)
        return cls(tuple(layers), node_ids)

    @property
    def n(self) -> int:
        return self.layers[0].shape[0]

    @property
    def L(self) -> int:
        return len(self.layers)

    def degrees(self) -> np.ndarray:
        """L x n array of per-layer degrees, D_l(i, i) = sum_j A_l(i, j)."""
        return np.vstack([np.asarray(a.sum(axis=1)).ravel() for a in self.layers])

    def subnetwork(self, nodes) -> "MultiLayerNetwork":
        """Restrict every layer to ``nodes`` (0-based, kept in the given order)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        return MultiLayerNetwork(tuple(a[nodes][:, nodes] for a in self.layers), self.node_ids[nodes])

    def permute(self, perm) -> "MultiLayerNetwork":
        """Relabel nodes so that new node ``i`` is old node ``perm[i]``."""
        return self.subnetwork(perm)

    def __repr__(self):
        nnz = sum(a.nnz for a in self.layers)
        return f"MultiLayerNetwork(n={self.n}, L={self.L}, nnz={nnz})"


@dataclass(frozen=True, eq=False)
class AggregateMatrix:
    """A single matrix summarizing all layers.

    ``data`` is a dense ndarray or a scipy CSR matrix depending on density.
    """

    kind: str
    data: object

    def __post_init__(self):
        if self.kind not in AGGREGATE_KINDS:
            raise ValueError(f"unknown aggregate kind {self.kind!r}")

    @property
    def shape(self):
        return self.data.shape

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.data)

    def toarray(self) -> np.ndarray:
        return self.data.toarray() if self.is_sparse else np.asarray(self.data)

    def is_zero(self) -> bool:
        if self.is_sparse:
            return self.data.count_nonzero() == 0
        return not np.any(self.data)

    def frobenius_norm(self) -> float:
        if self.is_sparse:
            return float(spla.norm(self.data.astype(np.float64)))
        return float(np.linalg.norm(self.data))


def _finalize(kind: str, mat) -> AggregateMatrix:
    if sp.issparse(mat):
        mat = mat.tocsr()
        mat.eliminate_zeros()
        size = mat.shape[0] * mat.shape[1]
        if size and mat.nnz / size > DENSE_THRESHOLD:
            mat = mat.toarray()
        else:
            mat.sort_indices()
    return AggregateMatrix(kind, mat)


def aggregate_sum(net: MultiLayerNetwork) -> AggregateMatrix:
    """Entrywise sum of the adjacency matrices."""
    total = net.layers[0].copy()
    for a in net.layers[1:]:
        total = total + a
    return _finalize("A_sum", total)


def _square_minus_degree(a: sp.csr_matrix) -> sp.csr_matrix:
    deg = np.asarray(a.sum(axis=1)).ravel()
    return (a @ a - sp.diags(deg, format="csr", dtype=np.int64)).tocsr()


def debiased_sum_squares(net: MultiLayerNetwork) -> AggregateMatrix:
    """S_sum = sum_l (A_l^2 - D_l); symmetric with an exactly zero diagonal."""
    total = None
    for a in net.layers:
        term = _square_minus_degree(a)
        total = term if total is None else total + term
    return _finalize("S_sum", total)


def sum_of_squares(net: MultiLayerNetwork) -> AggregateMatrix:
    """sum_l A_l^2 without the degree correction."""
    total = None
    for a in net.layers:
        term = (a @ a).tocsr()
        total = term if total is None else total + term
    return _finalize("SumOfSquares", total)


@dataclass(frozen=True, eq=False)
class SubsamplePlan:
    """Randomly selected node and layer subsets (0-based, sorted ascending)."""

    node_set: np.ndarray
    layer_set: np.ndarray
    varpi: int = 1

    def __post_init__(self):
        nodes = np.asarray(self.node_set, dtype=np.int64)
        layers = np.asarray(self.layer_set, dtype=np.int64)
        for name, idx in (("node_set", nodes), ("layer_set", layers)):
            if idx.ndim != 1 or idx.size == 0:
                raise ValueError(f"{name} must be a non-empty 1-D index array")
            if np.any(np.diff(idx) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
            if idx[0] < 0:
                raise ValueError(f"{name} contains negative indices")
        if int(self.varpi) < 1:
            raise ValueError("varpi must be a positive integer")
        object.__setattr__(self, "node_set", nodes)
        object.__setattr__(self, "layer_set", layers)

    @property
    def n_sample(self) -> int:
        return int(self.node_set.size)

    @property
    def L_sample(self) -> int:
        return int(self.layer_set.size)

    def check(self, net: MultiLayerNetwork) -> None:
        if self.node_set[-1] >= net.n:
            raise ValueError(f"plan node index {self.node_set[-1]} out of range for n={net.n}")
        if self.layer_set[-1] >= net.L:
            raise ValueError(f"plan layer index {self.layer_set[-1]} out of range for L={net.L}")

    @classmethod
    def full(cls, net: MultiLayerNetwork) -> "SubsamplePlan":
        return cls(np.arange(net.n), np.arange(net.L))


def make_subsample(net: MultiLayerNetwork, n_sample: int, L_sample: int, rng_seed=None, varpi: int = 1) -> SubsamplePlan:
    """Draw node and layer subsets uniformly without replacement."""
    if not 1 <= n_sample <= net.n:
        raise ValueError(f"n_sample must lie in [1, {net.n}], got {n_sample}")
    if not 1 <= L_sample <= net.L:
        raise ValueError(f"L_sample must lie in [1, {net.L}], got {L_sample}")
    rng = generator(rng_seed)
    nodes = np.sort(rng.choice(net.n, size=n_sample, replace=False))
    layers = np.sort(rng.choice(net.L, size=L_sample, replace=False))
    return SubsamplePlan(nodes, layers, varpi)


def subsampled_sum(net: MultiLayerNetwork, plan: SubsamplePlan) -> AggregateMatrix:
    """n x n_sample sum of the selected layers restricted to the selected columns."""
    plan.check(net)
    total = None
    for l in plan.layer_set:
        block = net.layers[l][:, plan.node_set]
        total = block if total is None else total + block
    return _finalize("A_sub_sum", total)


def subsampled_debiased_sum_squares(net: MultiLayerNetwork, plan: SubsamplePlan) -> AggregateMatrix:
    """Columns ``plan.node_set`` of sum_j (A_sub A_sub' - D_sub) over the selected layers.

    Only the needed columns are formed: column ``nodes[j]`` of ``A_sub A_sub'``
    is ``A_sub @ A_sub[nodes[j], :]'``, and ``D_sub`` touches entry
    ``(nodes[j], j)`` alone.
    """
    plan.check(net)
    nodes = plan.node_set
    cols = np.arange(nodes.size)
    total = None
    for l in plan.layer_set:
        a_sub = net.layers[l][:, nodes]
        d_sub = np.asarray(a_sub.sum(axis=1)).ravel()
        corr = sp.csr_matrix((d_sub[nodes], (nodes, cols)), shape=(net.n, nodes.size), dtype=np.int64)
        term = (a_sub @ a_sub[nodes].T).tocsr() - corr
        total = term if total is None else total + term
    return _finalize("S_sub_sum", total)
