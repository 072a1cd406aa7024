"""Averaged multi-layer modularity and K selection by maximizing it.

The score averages Newman-Girvan modularity over layers. It is meaningful for
assortative networks only; nothing here checks assortativity.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .detectors import (
    Algorithm,
    DetectionResult,
    _embed,
    _finish,
    _seeds,
    build_aggregate,
    default_plan,
    rank_deficient,
)
from .exceptions import DegenerateInputError
from .network import MultiLayerNetwork
from .rng import derive
from .spectral import KMeansOptions


def layer_modularity(layer, labels) -> float:
    """Newman-Girvan modularity of one layer; 0 for a layer without edges."""
    _, codes = np.unique(np.asarray(labels).ravel(), return_inverse=True)
    codes = codes.ravel()
    deg = np.asarray(layer.sum(axis=1)).ravel().astype(np.float64)
    two_m = deg.sum()
    if two_m == 0:
        return 0.0
    coo = layer.tocoo()
    inside = float(coo.data[codes[coo.row] == codes[coo.col]].sum())
    group_deg = np.bincount(codes, weights=deg)
    return inside / two_m - float(np.sum(group_deg**2)) / two_m**2


def q_mnavrg(net: MultiLayerNetwork, labels) -> float:
    """Per-layer modularity averaged over all ``L`` layers.

    Empty layers contribute 0 to the average.
    """
    labels = np.asarray(labels)
    if labels.shape != (net.n,):
        raise ValueError(f"labels must have length {net.n}")
    return float(sum(layer_modularity(a, labels) for a in net.layers) / net.L)


@dataclass
class KSweepEntry:
    K: int
    q: float
    result: DetectionResult | None
    error: str | None = None


@dataclass
class KSweepResult:
    per_k: list = field(default_factory=list)
    best_k: int = 0
    best_q: float = -math.inf

    @property
    def best(self) -> KSweepEntry:
        return next(e for e in self.per_k if e.K == self.best_k)

    def table(self):
        return [(e.K, e.q) for e in self.per_k]


def estimate_k(
    net: MultiLayerNetwork,
    algorithm="NDSoSA",
    k_min: int = 1,
    k_max: int = 10,
    kmeans_options: KMeansOptions | None = None,
    rng_seed=None,
) -> KSweepResult:
    """Detect communities for every K in ``k_min..k_max`` and keep the best score.

    The aggregate matrix and its leading ``k_max`` vectors are computed once
    and truncated for each K; k-means for a given K draws from a seed derived
    from ``(rng_seed, K)``. A K whose detection is degenerate scores ``-inf``.
    Ties go to the smallest K.
    """
    algorithm = Algorithm.parse(algorithm)
    if algorithm.ideal:
        raise ValueError("K estimation needs an observed network, not an ideal detector")
    if not 1 <= k_min <= k_max <= net.n:
        raise ValueError(f"need 1 <= k_min <= k_max <= n, got {k_min}, {k_max}, n={net.n}")
    options = kmeans_options or KMeansOptions()
    plan_seed, _ = _seeds(rng_seed)

    start = time.perf_counter()
    plan = default_plan(net, k_max, plan_seed) if algorithm.subsampled else None
    emb, embed_error, norm = None, None, 0.0
    if k_max > 1:
        k_top = k_max if plan is None else min(k_max, plan.n_sample)
        agg = build_aggregate(net, algorithm, plan)
        norm = agg.frobenius_norm()
        try:
            emb = _embed(agg, k_top, algorithm, check_rank=False)
        except DegenerateInputError as exc:
            embed_error = str(exc)
    embed_time = time.perf_counter() - start

    sweep = KSweepResult()
    for k in range(k_min, k_max + 1):
        t0 = time.perf_counter()
        if k == 1:
            labels = np.ones(net.n, dtype=np.int64)
            res = DetectionResult(labels, algorithm, np.zeros(0), time.perf_counter() - t0, plan=plan)
        elif emb is None or k > emb.K or (algorithm.subsampled and rank_deficient(emb, k, norm)):
            sweep.per_k.append(KSweepEntry(k, -math.inf, None, embed_error or f"{algorithm.value}: rank below {k}"))
            continue
        else:
            _, km_seed = _seeds(derive(rng_seed, k))
            labels, X, flagged = _finish(emb, k, algorithm, options, km_seed)
            elapsed = time.perf_counter() - t0 + embed_time
            res = DetectionResult(labels, algorithm, emb.values[:k], elapsed, flagged, X, plan)
        sweep.per_k.append(KSweepEntry(k, q_mnavrg(net, res.labels), res))

    for entry in sweep.per_k:
        if entry.q > sweep.best_q:
            sweep.best_k, sweep.best_q = entry.K, entry.q
    if sweep.best_k == 0:
        sweep.best_k = k_min
    return sweep
