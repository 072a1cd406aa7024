"""Reading, preprocessing and writing real multi-layer networks.

Edge lists are whitespace-separated ``layer u v [weight]`` lines with ``#``
comments. Node and layer ids in files are 1-based.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .exceptions import EdgeListParseError
from .network import MultiLayerNetwork


@dataclass(frozen=True)
class EdgeRecord:
    layer: int
    u: int
    v: int
    weight: float = 1.0


def _parse_int(token, what, lineno):
    try:
        value = int(token)
    except ValueError:
        raise EdgeListParseError(f"{what} {token!r} is not an integer", lineno) from None
    if value < 1:
        raise EdgeListParseError(f"{what} must be >= 1, got {value}", lineno)
    return value


def read_edge_records(path, layer_first: bool = True) -> list[EdgeRecord]:
    """Parse an edge-list file into records.

    With ``layer_first=False`` the columns are ``u v layer [weight]``.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (3, 4):
                raise EdgeListParseError(f"expected 3 or 4 columns, got {len(parts)}", lineno)
            if layer_first:
                layer, u, v = parts[:3]
            else:
                u, v, layer = parts[:3]
            try:
                weight = float(parts[3]) if len(parts) == 4 else 1.0
            except ValueError:
                raise EdgeListParseError(f"weight {parts[3]!r} is not a number", lineno) from None
            records.append(
                EdgeRecord(_parse_int(layer, "layer id", lineno), _parse_int(u, "node id", lineno), _parse_int(v, "node id", lineno), weight)
            )
    if not records:
        raise EdgeListParseError(f"{path}: no edge records found")
    return records


def network_from_records(records, n_layers: int | None = None) -> MultiLayerNetwork:
    """Symmetrize and binarize records; node ids are remapped to ``0..n-1`` in sorted order."""
    kept = [r for r in records if r.weight != 0]
    ids = np.unique(np.array([[r.u, r.v] for r in records], dtype=np.int64).ravel())
    L = max(r.layer for r in records)
    if n_layers is not None:
        if n_layers < L:
            raise ValueError(f"records mention layer {L} but n_layers={n_layers}")
        L = n_layers
    n = ids.size
    edges = [[] for _ in range(L)]
    for r in kept:
        edges[r.layer - 1].append((r.u, r.v))
    layers = []
    for pairs in edges:
        if pairs:
            uv = np.searchsorted(ids, np.array(pairs, dtype=np.int64))
            rows = np.concatenate([uv[:, 0], uv[:, 1]])
            cols = np.concatenate([uv[:, 1], uv[:, 0]])
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
        mat = sp.coo_matrix((np.ones(rows.size, dtype=np.int64), (rows, cols)), shape=(n, n)).tocsr()
        mat.data[:] = 1
        layers.append(mat)
    return MultiLayerNetwork(tuple(layers), node_ids=ids)


def load_edge_list(path, layer_first: bool = True, n_layers: int | None = None) -> MultiLayerNetwork:
    """Load an undirected, unweighted multi-layer network.

    An edge is present when either direction appears with nonzero weight.
    ``net.node_ids`` keeps the original id of every node.
    """
    return network_from_records(read_edge_records(path, layer_first), n_layers)


def write_edge_list(net: MultiLayerNetwork, path) -> None:
    """Write ``layer u v`` lines with ``u <= v``, sorted by layer, then u, then v."""
    ids = net.node_ids
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# layer u v  (n={net.n}, L={net.L})\n")
        for l, a in enumerate(net.layers, start=1):
            upper = sp.triu(a).tocoo()
            u, v = ids[upper.row], ids[upper.col]
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            for i in np.lexsort((hi, lo)):
                fh.write(f"{l} {lo[i]} {hi[i]}\n")


def _support_without_loops(net: MultiLayerNetwork) -> sp.csr_matrix:
    total = net.layers[0].copy()
    for a in net.layers[1:]:
        total = total + a
    total = total.tolil()
    total.setdiag(0)
    return total.tocsr()


def largest_connected_component(net: MultiLayerNetwork):
    """Restrict the network to the largest connected component of the aggregate.

    Connectivity ignores self-loops. Among equally large components the one
    containing the lowest node index wins.

    Returns
    -------
    (MultiLayerNetwork, ndarray)
        The restricted network and the original ids of the kept nodes.
    """
    _, comp = connected_components(_support_without_loops(net), directed=False)
    sizes = np.bincount(comp)
    # component labels follow first appearance, so argmax picks the lowest index on ties
    best = int(np.argmax(sizes))
    keep = np.flatnonzero(comp == best)
    sub = net.subnetwork(keep)
    return sub, sub.node_ids.copy()


def edge_count(net: MultiLayerNetwork) -> int:
    """Undirected off-diagonal edges, counted once per layer."""
    return int(sum((a.nnz - a.diagonal().astype(bool).sum()) // 2 for a in net.layers))


def nu_sparsity(net: MultiLayerNetwork) -> float:
    """Edges divided by ``L * n (n - 1) / 2``; self-loops are not counted."""
    if net.n < 2:
        raise ValueError("sparsity needs at least two nodes")
    return edge_count(net) / (net.L * net.n * (net.n - 1) / 2)


def preprocess(net: MultiLayerNetwork):
    """Largest connected component plus basic statistics."""
    sub, kept = largest_connected_component(net)
    stats = {"n": sub.n, "L": sub.L, "edges": edge_count(sub), "nu": nu_sparsity(sub) if sub.n > 1 else 0.0}
    return sub, kept, stats


@dataclass
class ReturnsPanel:
    series: np.ndarray  # m assets x T time points
    asset_ids: list

    def __post_init__(self):
        self.series = np.asarray(self.series, dtype=np.float64)
        if self.series.ndim != 2:
            raise ValueError("series must be a 2-D array")
        if self.series.shape[1] < 3:
            raise ValueError("need at least 3 time points per series")
        if len(self.asset_ids) != self.series.shape[0]:
            raise ValueError("one asset id per series is required")


def load_returns_panel(path) -> ReturnsPanel:
    """Read a CSV with header ``asset_id,t1,...,tT``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EdgeListParseError(f"{path}: empty returns file") from None
        if not header or header[0].strip() != "asset_id":
            raise EdgeListParseError("header must start with asset_id", 1)
        ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise EdgeListParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            try:
                rows.append([float(x) for x in row[1:]])
            except ValueError:
                raise EdgeListParseError("non-numeric return", lineno) from None
            ids.append(row[0])
    if not rows:
        raise EdgeListParseError(f"{path}: no return series")
    return ReturnsPanel(np.array(rows), ids)


def build_threshold_multilayer(panel: ReturnsPanel, thresholds) -> MultiLayerNetwork:
    """One layer per threshold: edge (i, j), i != j, when ``|corr(i, j)| > tau``.

    Constant series are dropped with a warning before computing Pearson
    correlations. ``node_ids`` of the result index the surviving assets
    (1-based positions in the panel).
    """
    thresholds = [float(t) for t in thresholds]
    if not thresholds:
        raise ValueError("at least one threshold is required")
    if any(not 0 <= t < 1 for t in thresholds):
        raise ValueError("thresholds must lie in [0, 1)")
    Y = panel.series
    constant = np.ptp(Y, axis=1) == 0
    if constant.any():
        dropped = [panel.asset_ids[i] for i in np.flatnonzero(constant)]
        warnings.warn(f"dropping constant series: {dropped}", stacklevel=2)
    keep = np.flatnonzero(~constant)
    if keep.size < 2:
        raise ValueError("fewer than two non-constant series")
    C = np.corrcoef(Y[keep])
    absC = np.abs(C)
    np.fill_diagonal(absC, 0.0)
    layers = [sp.csr_matrix((absC > t).astype(np.int64)) for t in thresholds]
    return MultiLayerNetwork(tuple(layers), node_ids=keep + 1)


def write_node_map(net: MultiLayerNetwork, path) -> None:
    """``index,node_id`` rows mapping 1-based internal indices to original ids."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "node_id"])
        for i, nid in enumerate(net.node_ids, start=1):
            w.writerow([i, nid])
