"""Community detectors for multi-layer networks.

Every detector aggregates the layers into one matrix, extracts ``K`` leading
eigen- or left-singular vectors, optionally normalizes their rows and runs
k-means:

==========  ============================  ==========  ================
algorithm   aggregate                     vectors     row-normalized
==========  ============================  ==========  ================
NSoA        sum_l A_l                     eigen       yes
NDSoSA      sum_l (A_l^2 - D_l)           eigen       yes
NSoSA       sum_l A_l^2                   eigen       yes
Sum         sum_l A_l                     eigen       no
SoSDebias   sum_l (A_l^2 - D_l)           eigen       no
SNSoA       A_sub_sum (n x n_sample)      singular    yes
SNDSoSA     S_sub_sum (n x n_sample)      singular    yes
==========  ============================  ==========  ================

``IdealNSoA`` and ``IdealNDSoSA`` run the same pipeline on the expectation
matrices of a known model and serve as exact-recovery oracles.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import network as nw
from .exceptions import DegenerateInputError
from .model import MldcsbmParams, expected_sum, expected_sum_squares
from .rng import spawn
from .network import AggregateMatrix, MultiLayerNetwork, SubsamplePlan
from .spectral import (
    Embedding,
    KMeansOptions,
    canonical_labels,
    kmeans_fit,
    row_normalize,
    top_k_eigen,
    top_k_left_singular,
)

RANK_TOL = 1e-8


class Algorithm(str, Enum):
    NSoA = "NSoA"
    NDSoSA = "NDSoSA"
    NSoSA = "NSoSA"
    Sum = "Sum"
    SoSDebias = "SoSDebias"
    SNSoA = "SNSoA"
    SNDSoSA = "SNDSoSA"
    IdealNSoA = "IdealNSoA"
    IdealNDSoSA = "IdealNDSoSA"

    @classmethod
    def parse(cls, value) -> "Algorithm":
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown algorithm {value!r}")

    @property
    def normalizes(self) -> bool:
        return self not in (Algorithm.Sum, Algorithm.SoSDebias)

    @property
    def subsampled(self) -> bool:
        return self in (Algorithm.SNSoA, Algorithm.SNDSoSA)

    @property
    def ideal(self) -> bool:
        return self in (Algorithm.IdealNSoA, Algorithm.IdealNDSoSA)


FULL_ALGORITHMS = (Algorithm.NSoA, Algorithm.NDSoSA, Algorithm.NSoSA, Algorithm.Sum, Algorithm.SoSDebias)
SUBSAMPLED_ALGORITHMS = (Algorithm.SNSoA, Algorithm.SNDSoSA)

_AGGREGATORS = {
    Algorithm.NSoA: nw.aggregate_sum,
    Algorithm.Sum: nw.aggregate_sum,
    Algorithm.NDSoSA: nw.debiased_sum_squares,
    Algorithm.SoSDebias: nw.debiased_sum_squares,
    Algorithm.NSoSA: nw.sum_of_squares,
}


@dataclass
class DetectionResult:
    labels: np.ndarray
    algorithm: Algorithm
    leading_values: np.ndarray
    elapsed: float
    flagged_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    embedding: np.ndarray | None = field(default=None, repr=False)
    plan: SubsamplePlan | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return int(self.labels.max())


def _seeds(rng_seed):
    """(subsample seed, k-means seed) children shared by every detector."""
    plan_ss, km_ss = spawn(rng_seed, 2)
    return plan_ss, km_ss


def cluster_rows(X: np.ndarray, k: int, flagged, options: KMeansOptions, rng_seed):
    """k-means on the non-flagged rows of ``X``.

    Flagged (all-zero) rows join the cluster whose centroid lies closest to the
    origin.
    """
    n = X.shape[0]
    flagged = np.asarray(flagged, dtype=np.int64)
    keep = np.ones(n, dtype=bool)
    keep[flagged] = False
    if keep.sum() < k:
        # not enough informative rows: cluster everything
        keep[:] = True
    fit = kmeans_fit(X[keep], k, options.iters, options.restarts, rng_seed)
    labels = np.empty(n, dtype=np.int64)
    labels[keep] = fit.labels
    if not keep.all():
        labels[~keep] = int(np.argmin(np.linalg.norm(fit.centers, axis=1))) + 1
    return canonical_labels(labels)


def _finish(emb: Embedding, k: int, algorithm: Algorithm, options: KMeansOptions, km_seed):
    vectors = emb.vectors[:, :k]
    if algorithm.normalizes:
        X, flagged = row_normalize(vectors)
    else:
        X, flagged = vectors, np.zeros(0, dtype=np.int64)
    if k == 1:
        labels = np.ones(X.shape[0], dtype=np.int64)
    else:
        labels = cluster_rows(X, k, flagged, options, km_seed)
    return labels, X, flagged


def build_aggregate(net: MultiLayerNetwork, algorithm, plan: SubsamplePlan | None = None) -> AggregateMatrix:
    """The matrix a detector decomposes."""
    algorithm = Algorithm.parse(algorithm)
    if algorithm.subsampled:
        if plan is None:
            raise ValueError("subsampled detectors need a plan")
        if algorithm is Algorithm.SNSoA:
            return nw.subsampled_sum(net, plan)
        return nw.subsampled_debiased_sum_squares(net, plan)
    if algorithm.ideal:
        raise ValueError("ideal detectors use model parameters, see ideal_detect")
    return _AGGREGATORS[algorithm](net)


def rank_deficient(emb: Embedding, k: int, norm: float) -> bool:
    """True when the k-th leading value is numerically zero relative to ``norm``."""
    return abs(emb.values[k - 1]) <= RANK_TOL * norm


def _embed(agg: AggregateMatrix, k: int, algorithm: Algorithm, check_rank: bool = True) -> Embedding:
    if agg.is_zero():
        raise DegenerateInputError(f"aggregate {agg.kind} is identically zero")
    if not algorithm.subsampled:
        return top_k_eigen(agg.data, k)
    emb = top_k_left_singular(agg.data, k)
    if check_rank and rank_deficient(emb, k, agg.frobenius_norm()):
        raise DegenerateInputError(f"{agg.kind} has rank below {k} (singular value {emb.values[-1]:.3g})")
    return emb


def default_sample_sizes(n: int, L: int):
    """Subsample sizes ``(n_sample, L_sample, varpi)`` for a network of ``n`` nodes and ``L`` layers.

    ``L_sample = round(ln(L)^2)`` once ``L >= 10`` and ``n_sample =
    round(varpi * ln(n)^2)`` once ``n >= 500``, with ``varpi`` = 5 below
    2000 nodes, 15 up to 20000 and ``15 * ceil(n / 20000)`` beyond. Smaller
    networks are used whole. Callers clamp the results to ``[K, n]`` and
    ``[1, L]``.
    """
    if n < 1 or L < 1:
        raise ValueError("n and L must be positive")
    L_sample = int(round(math.log(L) ** 2)) if L >= 10 else L
    if n < 500:
        varpi = 1
    elif n < 2000:
        varpi = 5
    elif n <= 20000:
        varpi = 15
    else:
        varpi = 15 * math.ceil(n / 20000)
    n_sample = int(round(varpi * math.log(n) ** 2)) if n >= 500 else n
    return n_sample, L_sample, varpi


def default_plan(net: MultiLayerNetwork, k: int, rng_seed=None) -> SubsamplePlan:
    n_sample, L_sample, varpi = default_sample_sizes(net.n, net.L)
    n_sample = min(max(n_sample, k), net.n)
    L_sample = min(max(L_sample, 1), net.L)
    if n_sample == net.n and L_sample == net.L:
        return SubsamplePlan(np.arange(net.n), np.arange(net.L), varpi)
    return nw.make_subsample(net, n_sample, L_sample, rng_seed, varpi)


def _check_k(net: MultiLayerNetwork, k: int):
    if not 1 <= k <= net.n:
        raise ValueError(f"K must lie in [1, {net.n}], got {k}")


def detect(net: MultiLayerNetwork, K: int, algorithm="NDSoSA", kmeans_options: KMeansOptions | None = None, rng_seed=None) -> DetectionResult:
    """Run one of the full-network detectors.

    Parameters
    ----------
    net : MultiLayerNetwork
    K : int
        Number of communities.
    algorithm : str or Algorithm
        One of NSoA, NDSoSA, NSoSA, Sum, SoSDebias (case-insensitive).
    kmeans_options : KMeansOptions, optional
        Defaults to 100 Lloyd iterations and 10 restarts.
    rng_seed : int or SeedSequence, optional

    Returns
    -------
    DetectionResult
        Labels in ``1..K`` ordered by first occurrence.

    Raises
    ------
    DegenerateInputError
        If the aggregate matrix is identically zero and ``K > 1``.
    """
    algorithm = Algorithm.parse(algorithm)
    if algorithm not in FULL_ALGORITHMS:
        if algorithm.subsampled:
            return detect_subsampled(net, K, algorithm, None, kmeans_options, rng_seed)
        raise ValueError(f"{algorithm.value} is not a full-network detector")
    _check_k(net, K)
    options = kmeans_options or KMeansOptions()
    _, km_seed = _seeds(rng_seed)
    start = time.perf_counter()
    if K == 1:
        return DetectionResult(np.ones(net.n, dtype=np.int64), algorithm, np.zeros(0), time.perf_counter() - start)
    agg = build_aggregate(net, algorithm)
    emb = _embed(agg, K, algorithm)
    labels, X, flagged = _finish(emb, K, algorithm, options, km_seed)
    return DetectionResult(labels, algorithm, emb.values, time.perf_counter() - start, flagged, X)


def detect_subsampled(
    net: MultiLayerNetwork,
    K: int,
    algorithm="SNDSoSA",
    plan: SubsamplePlan | None = None,
    kmeans_options: KMeansOptions | None = None,
    rng_seed=None,
) -> DetectionResult:
    """SNSoA / SNDSoSA: spectral clustering on an n x n_sample subsampled aggregate.

    Without an explicit ``plan`` the default sample sizes are drawn from the
    first child of ``SeedSequence(rng_seed)``. Labels cover all ``n`` nodes.
    """
    algorithm = Algorithm.parse(algorithm)
    if not algorithm.subsampled:
        raise ValueError(f"{algorithm.value} is not a subsampled detector")
    _check_k(net, K)
    options = kmeans_options or KMeansOptions()
    plan_seed, km_seed = _seeds(rng_seed)
    start = time.perf_counter()
    if plan is None:
        plan = default_plan(net, K, plan_seed)
    plan.check(net)
    if K > plan.n_sample:
        raise ValueError(f"K={K} exceeds n_sample={plan.n_sample}")
    if K == 1:
        return DetectionResult(np.ones(net.n, dtype=np.int64), algorithm, np.zeros(0), time.perf_counter() - start, plan=plan)
    agg = build_aggregate(net, algorithm, plan)
    emb = _embed(agg, K, algorithm)
    labels, X, flagged = _finish(emb, K, algorithm, options, km_seed)
    return DetectionResult(labels, algorithm, emb.values, time.perf_counter() - start, flagged, X, plan)


def ideal_aggregate(params: MldcsbmParams, algorithm) -> np.ndarray:
    algorithm = Algorithm.parse(algorithm)
    if algorithm is Algorithm.IdealNSoA:
        return expected_sum(params)
    if algorithm is Algorithm.IdealNDSoSA:
        return expected_sum_squares(params)
    raise ValueError(f"{algorithm.value} is not an ideal detector")


def ideal_embedding(params: MldcsbmParams, K: int, algorithm) -> Embedding:
    """Leading eigenvectors of Omega_sum or S_tilde_sum plus their normalized rows."""
    algorithm = Algorithm.parse(algorithm)
    M = ideal_aggregate(params, algorithm)
    emb = top_k_eigen(M, K, warn_on_tie=False)
    if rank_deficient(emb, K, np.linalg.norm(M)):
        raise DegenerateInputError(
            f"expected aggregate has rank below {K} (|lambda_K| = {abs(emb.values[-1]):.3g})"
        )
    emb.normalized, emb.flagged_rows = row_normalize(emb.vectors)
    return emb


def ideal_detect(params: MldcsbmParams, K: int, algorithm="IdealNDSoSA", kmeans_options: KMeansOptions | None = None, rng_seed=None) -> DetectionResult:
    """Oracle pipeline on the model's expectation matrices."""
    algorithm = Algorithm.parse(algorithm)
    if not algorithm.ideal:
        raise ValueError(f"{algorithm.value} is not an ideal detector")
    if not 1 <= K <= params.n:
        raise ValueError(f"K must lie in [1, {params.n}], got {K}")
    options = kmeans_options or KMeansOptions()
    _, km_seed = _seeds(rng_seed)
    start = time.perf_counter()
    if K == 1:
        return DetectionResult(np.ones(params.n, dtype=np.int64), algorithm, np.zeros(0), time.perf_counter() - start)
    emb = ideal_embedding(params, K, algorithm)
    labels = cluster_rows(emb.normalized, K, emb.flagged_rows, options, km_seed)
    return DetectionResult(labels, algorithm, emb.values, time.perf_counter() - start, emb.flagged_rows, emb.normalized)


def run(net: MultiLayerNetwork, K: int, algorithm, kmeans_options=None, rng_seed=None) -> DetectionResult:
    """Dispatch to :func:`detect` or :func:`detect_subsampled`."""
    algorithm = Algorithm.parse(algorithm)
    if algorithm.subsampled:
        return detect_subsampled(net, K, algorithm, None, kmeans_options, rng_seed)
    return detect(net, K, algorithm, kmeans_options, rng_seed)
