"""Simulation experiments: sweep one model parameter, score every detector.

Each experiment varies one of ``rho``, ``n``, ``L`` or ``K`` while the others
stay fixed. Two presets exist: ``full`` (the published grids, 100 trials)
and ``desk`` (smaller grids that finish in minutes).

Seeds: trial ``t`` at grid point ``g`` draws everything from
``derive(seed, g, t)``, so any single trial can be rerun in isolation.
"""
from __future__ import annotations

import csv
import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detectors import Algorithm, run
from .metrics import accuracy_rate, evaluate
from .model import sample_network, simulation_params
from .modularity import estimate_k
from .rng import derive
from .spectral import KMeansOptions

log = logging.getLogger(__name__)

CLASSIC = ("NSoA", "NDSoSA", "NSoSA", "Sum", "SoSDebias")
ACCELERATED = ("NSoA", "NDSoSA", "SNSoA", "SNDSoSA")

ROW_FIELDS = [
    "experiment", "n", "L", "K", "rho", "trial", "algorithm",
    "clustering_error", "hamming", "nmi", "ari", "k_hat", "q_mnavrg", "elapsed_s", "error",
]
SUMMARY_FIELDS = [
    "experiment", "n", "L", "K", "rho", "algorithm", "trials",
    "clustering_error", "hamming", "nmi", "ari", "accuracy_rate", "q_mnavrg", "elapsed_s", "errors",
]

PRESETS = {
    "full": {
        1: dict(vary="rho", grid=[round((0.06 * i) ** 2, 6) for i in range(1, 11)], n=500, L=100, K=3, trials=100, algorithms=CLASSIC),
        2: dict(vary="n", grid=list(range(100, 1001, 100)), L=20, rho=0.16, K=3, trials=100, algorithms=CLASSIC),
        3: dict(vary="L", grid=list(range(2, 41, 2)), n=500, rho=0.16, K=3, trials=100, algorithms=CLASSIC),
        4: dict(vary="K", grid=list(range(1, 7)), n_per_k=200, L=20, rho=0.16, trials=100, algorithms=CLASSIC),
        5: dict(vary="n", grid=list(range(2000, 24001, 2000)), L=3, rho=0.25, K=3, trials=100, algorithms=ACCELERATED),
        6: dict(vary="L", grid=list(range(20, 201, 20)), n=500, rho=0.25, K=3, trials=100, algorithms=ACCELERATED),
    },
    "desk": {
        1: dict(vary="rho", grid=[0.0036, 0.0144, 0.0576, 0.1764, 0.36], n=200, L=20, K=3, trials=20, algorithms=CLASSIC),
        2: dict(vary="n", grid=[100, 200, 300, 400], L=20, rho=0.16, K=3, trials=20, algorithms=CLASSIC),
        3: dict(vary="L", grid=[2, 10, 40], n=200, rho=0.16, K=3, trials=20, algorithms=CLASSIC),
        4: dict(vary="K", grid=[1, 2, 3, 4], n_per_k=50, L=20, rho=0.16, trials=20, algorithms=CLASSIC),
        5: dict(vary="n", grid=[2000, 4000], L=3, rho=0.25, K=3, trials=5, algorithms=ACCELERATED),
        6: dict(vary="L", grid=[20, 60, 100], n=500, rho=0.25, K=3, trials=5, algorithms=ACCELERATED),
    },
}


@dataclass
class ExperimentSpec:
    """One experiment run.

    ``overrides`` may set ``n``, ``L``, ``K``, ``rho``, ``trials``,
    ``algorithms`` or ``grid`` (values for the varied parameter).
    """

    id: int
    overrides: dict = field(default_factory=dict)
    output_dir: Path = Path("results")
    preset: str = "full"
    seed: int = 0
    estimate_k: bool = True
    k_max: int = 10
    workers: int = 1
    kmeans: KMeansOptions = field(default_factory=KMeansOptions)
    record_timing: bool = True

    def __post_init__(self):
        if self.id not in range(1, 7):
            raise ValueError(f"experiment id must be 1..6, got {self.id}")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        self.overrides = {k: v for k, v in self.overrides.items() if v is not None}
        self.output_dir = Path(self.output_dir)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @property
    def settings(self) -> dict:
        s = dict(PRESETS[self.preset][self.id])
        s.update(self.overrides)
        return s

    @property
    def trials(self) -> int:
        return int(self.settings["trials"])

    @property
    def algorithms(self) -> list:
        return [Algorithm.parse(a) for a in self.settings["algorithms"]]

    def grid_points(self) -> list:
        s = self.settings
        points = []
        for value in s["grid"]:
            p = {k: s.get(k) for k in ("n", "L", "K", "rho")}
            p[s["vary"]] = value
            if s["vary"] == "K" and "n_per_k" in s and "n" not in self.overrides:
                p["n"] = int(s["n_per_k"]) * int(value)
            p["n"], p["L"], p["K"] = int(p["n"]), int(p["L"]), int(p["K"])
            p["rho"] = float(p["rho"])
            points.append(p)
        return points


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return x


def run_trial(task) -> list:
    """Score every algorithm on one sampled network. ``task`` is a picklable tuple."""
    exp_id, g, point, trial, algorithms, seed, do_k, k_max, km, timing = task
    base = derive(seed, g, trial)
    n, L, K, rho = point["n"], point["L"], point["K"], point["rho"]
    rows = []
    common = dict(experiment=exp_id, n=n, L=L, K=K, rho=rho, trial=trial)
    try:
        params = simulation_params(n, K, L, rho, rng_seed=derive(base, 0))
        net = sample_network(params, derive(base, 1))
        k_net = None
        if do_k:
            k_params = simulation_params(n, K, L, rho, assortative=True, rng_seed=derive(base, 3))
            k_net = sample_network(k_params, derive(base, 4))
    except Exception as exc:  # noqa: BLE001 - recorded in the error column
        log.warning("generation failed at %s trial %d: %s", point, trial, exc)
        return [dict(common, algorithm=a.value, error=f"generation: {exc}") for a in algorithms]

    for a_idx, algo in enumerate(algorithms):
        row = dict(common, algorithm=algo.value)
        try:
            res = run(net, K, algo, km, derive(base, 2, a_idx))
            rep = evaluate(params.labels.labels, res.labels)
            row.update(
                clustering_error=rep.clustering_error, hamming=rep.hamming_error,
                nmi=rep.nmi, ari=rep.ari, elapsed_s=res.elapsed if timing else None,
            )
            if k_net is not None:
                sweep = estimate_k(k_net, algo, 1, min(k_max, n), km, derive(base, 5, a_idx))
                row.update(k_hat=sweep.best_k, q_mnavrg=sweep.best_q)
            row["error"] = ""
        except Exception as exc:  # noqa: BLE001
            log.debug("%s", traceback.format_exc())
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def _summaries(spec: ExperimentSpec, rows: list) -> list:
    out = []
    keys = []
    groups = {}
    for r in rows:
        key = (r["n"], r["L"], r["K"], r["rho"], r["algorithm"])
        if key not in groups:
            keys.append(key)
            groups[key] = []
        groups[key].append(r)
    for key in keys:
        grp = groups[key]
        ok = [r for r in grp if not r.get("error")]

        def mean(name, ok=ok):
            vals = [r[name] for r in ok if r.get(name) is not None]
            return float(np.mean(vals)) if vals else float("nan")

        k_hats = [r["k_hat"] for r in ok if r.get("k_hat") is not None]
        n, L, K, rho, algo = key
        out.append(dict(
            experiment=spec.id, n=n, L=L, K=K, rho=rho, algorithm=algo, trials=len(grp),
            clustering_error=mean("clustering_error"), hamming=mean("hamming"), nmi=mean("nmi"), ari=mean("ari"),
            accuracy_rate=accuracy_rate(k_hats, K) if k_hats else float("nan"),
            q_mnavrg=mean("q_mnavrg"), elapsed_s=mean("elapsed_s"), errors=len(grp) - len(ok),
        ))
    return out


def _write_csv(path: Path, fields, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        w.writeheader()
        for r in rows:
            w.writerow({f: _fmt(r.get(f)) for f in fields})


_GNUPLOT = """\
# gnuplot -e "metric='ari'" {name}
if (!exists("metric")) metric = 'ari'
set datafile separator ','
set key autotitle columnhead outside
set xlabel '{vary}'
set ylabel metric
set terminal pngcairo size 900,600
set output 'experiment{id}_'.metric.'.png'
plot for [a in "{algos}"] '{summary}' using (strcol('algorithm') eq a ? column('{vary}') : 1/0):(column(metric)) with linespoints title a
"""


def run_experiment(spec: ExperimentSpec) -> tuple[list, list]:
    """Run every (grid point, trial) and write the result CSVs.

    Writes ``experiment<id>_rows.csv`` (one row per grid point, trial and
    algorithm), ``experiment<id>_summary.csv`` (trial means and the
    accuracy rate of the K estimates) and a gnuplot script. Rows are written
    in (grid point, trial, algorithm) order whatever the worker count.
    """
    points = spec.grid_points()
    algorithms = spec.algorithms
    tasks = [
        (spec.id, g, p, t, algorithms, spec.seed, spec.estimate_k, spec.k_max, spec.kmeans, spec.record_timing)
        for g, p in enumerate(points)
        for t in range(spec.trials)
    ]
    log.info("experiment %d: %d grid points x %d trials", spec.id, len(points), spec.trials)
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(run_trial, tasks))
    else:
        results = [run_trial(t) for t in tasks]
    rows = [r for chunk in results for r in chunk]
    summary = _summaries(spec, rows)

    spec.output_dir.mkdir(parents=True, exist_ok=True)
    rows_path = spec.output_dir / f"experiment{spec.id}_rows.csv"
    summary_path = spec.output_dir / f"experiment{spec.id}_summary.csv"
    _write_csv(rows_path, ROW_FIELDS, rows)
    _write_csv(summary_path, SUMMARY_FIELDS, summary)
    (spec.output_dir / f"experiment{spec.id}.gp").write_text(
        _GNUPLOT.format(
            name=f"experiment{spec.id}.gp", id=spec.id, vary=spec.settings["vary"],
            algos=" ".join(a.value for a in algorithms), summary=summary_path.name,
        ),
        encoding="utf-8",
    )
    return rows, summary
