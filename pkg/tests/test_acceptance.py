"""Exit criteria for the package, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible even under output
capture) before asserting, so ``pytest tests/test_acceptance.py -v`` doubles
as the acceptance report. Tolerances and runtime budgets are fixed here.
"""
import itertools
import os
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import pdist

from mlcommunity import (
    DegenerateInputError,
    MultiLayerNetwork,
    SubsamplePlan,
    accuracy_rate,
    ari,
    clustering_error,
    debiased_sum_squares,
    detect,
    detect_subsampled,
    estimate_k,
    hamming_error,
    ideal_detect,
    ideal_embedding,
    load_edge_list,
    preprocess,
    q_mnavrg,
    run,
    sample_network,
    simulation_params,
    sum_of_squares,
)
from mlcommunity.experiments import ExperimentSpec, run_experiment
from mlcommunity.rng import derive

import oracles

pytestmark = pytest.mark.filterwarnings("ignore::mlcommunity.spectral.SpectralGapWarning")


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        with capsys.disabled():
            print(f"\n{status} criterion {criterion}: {detail}")
        return ok

    return emit


def test_c01_ideal_exact_recovery(report):
    start = time.perf_counter()
    r = np.random.default_rng(2024)
    done = skipped = failures = 0
    draw = 0
    while done < 200:
        draw += 1
        K = int(r.choice([2, 3, 4]))
        n = int(r.integers(4 * K, 201))
        L = int(r.integers(1, 11))
        rho = float(r.uniform(0.05, 1.0))
        params = simulation_params(n, K, L, rho, rng_seed=derive(2024, draw))
        try:
            for algo in ("IdealNSoA", "IdealNDSoSA"):
                ideal_embedding(params, K, algo)
        except DegenerateInputError:
            skipped += 1
            continue
        for algo in ("IdealNSoA", "IdealNDSoSA"):
            res = ideal_detect(params, K, algo, rng_seed=draw)
            if clustering_error(params.labels.labels, res.labels) != 0.0:
                failures += 1
        done += 1
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 120
    report(1, ok, f"{done} draws x 2 ideal detectors, {failures} nonzero errors, {skipped} rank-deficient skipped, {elapsed:.1f}s")
    assert ok


def test_c02_ideal_geometry(report):
    labels = np.repeat([1, 2, 3], 100)
    params = simulation_params(300, 3, 20, 1.0, rng_seed=0, labels=labels)
    worst = 0.0
    distinct = []
    for algo in ("IdealNSoA", "IdealNDSoSA"):
        X = ideal_embedding(params, 3, algo).normalized
        centers = np.array([X[labels == k][0] for k in (1, 2, 3)])
        spread = max(np.abs(X[labels == k] - centers[k - 1]).max() for k in (1, 2, 3))
        distinct.append(np.unique(np.round(X, 8), axis=0).shape[0])
        worst = max(worst, spread, np.abs(pdist(centers) - np.sqrt(2)).max())
    ok = distinct == [3, 3] and worst <= 1e-6
    report(2, ok, f"distinct rows {distinct}, max deviation {worst:.2e}")
    assert ok


class TestC03:
    checked = []

    @settings(max_examples=100, deadline=None, derandomize=True)
    @given(st.integers(2, 40), st.integers(1, 6), st.floats(0.05, 1.0), st.integers(0, 2**32 - 1))
    def test_c03_bias_identity(self, n, L, rho, seed):
        K = min(3, n)
        net = sample_network(simulation_params(n, K, L, rho, rng_seed=seed), seed + 1)
        s = debiased_sum_squares(net).toarray()
        sos = sum_of_squares(net).toarray()
        degrees = np.diag(sum(np.asarray(a.sum(axis=1)).ravel() for a in net.layers))
        ok = np.array_equal(sos - s, degrees) and not np.diag(s).any()
        TestC03.checked.append(ok)
        assert ok

    def test_c03_report(self, report):
        # runs after the property test in file order
        ok = len(self.checked) >= 100 and all(self.checked)
        report(3, ok, f"{len(self.checked)} sampled networks, identity exact in {sum(self.checked)}")
        assert ok


def test_c04_sparsity_trend(report, tmp_path):
    start = time.perf_counter()
    spec = ExperimentSpec(
        1, preset="desk", seed=0, output_dir=tmp_path, estimate_k=False,
        overrides={"n": 200, "L": 20, "trials": 20, "grid": [0.0036, 0.0144, 0.0576, 0.1764, 0.36], "algorithms": ["NSoA", "NDSoSA"]},
    )
    _, summary = run_experiment(spec)
    err = [s["clustering_error"] for s in summary if s["algorithm"] == "NDSoSA"]
    ari_top = {s["algorithm"]: s["ari"] for s in summary if s["rho"] == 0.36}
    rises = [b - a for a, b in zip(err, err[1:]) if b > a]
    trend = len(rises) == 0 or (len(rises) == 1 and rises[0] <= 0.02)
    elapsed = time.perf_counter() - start
    ok = trend and ari_top["NDSoSA"] >= ari_top["NSoA"] and elapsed < 600
    report(
        4, ok,
        f"NDSoSA error {[round(e, 3) for e in err]}, ARI at 0.36 NDSoSA {ari_top['NDSoSA']:.3f} vs NSoA {ari_top['NSoA']:.3f}, {elapsed:.1f}s",
    )
    assert ok


def test_c05_layer_trend(report, tmp_path):
    start = time.perf_counter()
    spec = ExperimentSpec(
        3, preset="desk", seed=0, output_dir=tmp_path, estimate_k=False,
        overrides={"n": 200, "rho": 0.16, "trials": 20, "grid": [2, 10, 40], "algorithms": ["NDSoSA"]},
    )
    _, summary = run_experiment(spec)
    err = {s["L"]: s["clustering_error"] for s in summary}
    elapsed = time.perf_counter() - start
    ok = err[2] - err[40] >= 0.1 and elapsed < 600
    report(5, ok, f"NDSoSA error L=2 {err[2]:.3f}, L=10 {err[10]:.3f}, L=40 {err[40]:.3f}, {elapsed:.1f}s")
    assert ok


def test_c06_k_estimation(report):
    start = time.perf_counter()
    k_hats = []
    for trial in range(20):
        base = derive(6, trial)
        params = simulation_params(500, 3, 20, 0.16, assortative=True, rng_seed=derive(base, 0))
        net = sample_network(params, derive(base, 1))
        k_hats.append(estimate_k(net, "NDSoSA", 1, 10, rng_seed=derive(base, 2)).best_k)
    rate = accuracy_rate(k_hats, 3)
    elapsed = time.perf_counter() - start
    ok = rate >= 0.9 and elapsed < 600
    report(6, ok, f"accuracy rate {rate:.2f}, estimates {k_hats}, {elapsed:.1f}s")
    assert ok


class TestC07:
    checked = []

    @settings(max_examples=100, deadline=None, derandomize=True)
    @given(st.integers(2, 30), st.integers(1, 5), st.floats(0.05, 0.9), st.integers(0, 2**32 - 1))
    def test_c07_single_community_modularity(self, n, L, p, seed):
        r = np.random.default_rng(seed)
        layers = []
        for _ in range(L):
            upper = np.triu(r.random((n, n)) < p, k=1)
            upper[0, 1] = True  # every layer nonempty
            layers.append((upper | upper.T).astype(np.int64))
        q = q_mnavrg(MultiLayerNetwork.from_dense(layers), np.ones(n, dtype=int))
        TestC07.checked.append(q == 0.0)
        assert q == 0.0

    def test_c07_report(self, report):
        ok = len(self.checked) >= 100 and all(self.checked)
        report(7, ok, f"{len(self.checked)} networks, Q exactly 0 in {sum(self.checked)}")
        assert ok


def test_c08a_full_sample_degeneracy(report):
    worst = 0.0
    same_labels = True
    for seed in range(5):
        params = simulation_params(150, 3, 6, 0.6, rng_seed=seed)
        net = sample_network(params, seed + 10)
        plan = SubsamplePlan.full(net)
        for full, sub in (("NSoA", "SNSoA"), ("NDSoSA", "SNDSoSA")):
            a = detect(net, 3, full, rng_seed=seed)
            b = detect_subsampled(net, 3, sub, plan, rng_seed=seed)
            worst = max(worst, np.abs(pdist(a.embedding) - pdist(b.embedding)).max())
            same_labels &= bool(np.array_equal(a.labels, b.labels))
    ok = worst <= 1e-8
    report("8a", ok, f"max pairwise distance gap {worst:.2e} over 5 networks x 2 pairs, labels identical: {same_labels}")
    assert ok


@pytest.mark.slow
def test_c08b_subsampling_speed_and_accuracy(report):
    start = time.perf_counter()
    t_full = t_sub = 0.0
    scores, full_scores = [], []
    for trial in range(10):
        base = derive(8, trial)
        params = simulation_params(4000, 3, 3, 0.25, rng_seed=derive(base, 0))
        net = sample_network(params, derive(base, 1))
        a = run(net, 3, "NDSoSA", rng_seed=derive(base, 2))
        b = run(net, 3, "SNDSoSA", rng_seed=derive(base, 3))
        t_full += a.elapsed
        t_sub += b.elapsed
        full_scores.append(ari(params.labels.labels, a.labels))
        scores.append(ari(params.labels.labels, b.labels))
    elapsed = time.perf_counter() - start
    mean_ari = float(np.mean(scores))
    ok = t_sub < t_full and mean_ari >= 0.8 and elapsed < 900
    report(
        "8b", ok,
        f"wall time SNDSoSA {t_sub:.1f}s vs NDSoSA {t_full:.1f}s; mean ARI SNDSoSA {mean_ari:.3f} (need >= 0.8), "
        f"NDSoSA {np.mean(full_scores):.3f}; {elapsed:.1f}s",
    )
    assert t_sub < t_full
    assert mean_ari >= 0.8


def _check_pairs(pairs):
    bad = 0
    for t, e in pairs:
        if len(set(e)) <= len(set(t)) and abs(clustering_error(t, e) - oracles.clustering_error(t, e)) > 1e-12:
            bad += 1
        if abs(hamming_error(t, e) - oracles.hamming_error(t, e)) > 1e-12:
            bad += 1
        if abs(ari(t, e) - oracles.ari(t, e)) > 1e-12:
            bad += 1
    return bad


def test_c09_metric_oracles(report):
    start = time.perf_counter()
    count = bad = 0
    for n in range(1, 8):
        parts = list(oracles.set_partitions(n, 3))
        pairs = list(itertools.product(parts, parts))
        bad += _check_pairs(pairs)
        count += len(pairs)
    # n = 8: the metrics only see the pair up to a common node relabeling, so
    # one truth per block-size sequence against every estimate covers all
    # pairs; a random slice of the full product is checked directly as well
    parts8 = list(oracles.set_partitions(8, 3))
    reps = [(t, e) for t in oracles.sorted_labelings(8, 3) for e in parts8]
    r = np.random.default_rng(9)
    direct = [(parts8[i], parts8[j]) for i, j in r.integers(0, len(parts8), (20000, 2))]
    bad += _check_pairs(reps) + _check_pairs(direct)
    count += len(reps) + len(direct)
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 60
    report(9, ok, f"{count} partition pairs (n <= 8, K <= 3), {bad} disagreements, {elapsed:.1f}s")
    assert ok


def _lazega_path():
    env = os.environ.get("MLCOMMUNITY_LAZEGA")
    if env:
        return Path(env)
    return Path(__file__).parent / "data" / "Lazega-Law-Firm_multiplex.edges"


def test_c10_lazega(report):
    path = _lazega_path()
    if not path.exists():
        report(10, "SKIP", f"dataset not found at {path} (set MLCOMMUNITY_LAZEGA)")
        pytest.skip("Lazega law firm edge list not available")
    net, _, stats = preprocess(load_edge_list(path))
    runs = [estimate_k(net, "NDSoSA", 1, 10, rng_seed=seed) for seed in range(5)]
    stats_ok = (stats["n"], stats["L"], stats["edges"]) == (71, 3, 2223) and round(stats["nu"], 4) == 0.2982
    k_ok = all(s.best_k == 3 and abs(s.best_q - 0.2553) <= 0.01 for s in runs)
    ok = stats_ok and k_ok
    report(10, ok, f"stats {stats}, (K, Q) per seed {[(s.best_k, round(s.best_q, 4)) for s in runs]}")
    assert ok
