import csv
import json

import numpy as np
import pytest

from mlcommunity import load_edge_list
from mlcommunity.cli import main, read_config


def read_labels(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([int(r["node_id"]) for r in rows]), np.array([int(r["label"]) for r in rows])


@pytest.fixture
def generated(tmp_path):
    out = tmp_path / "gen"
    assert main(["generate", "--n", "300", "--k", "3", "--l", "20", "--rho", "1.0", "--seed", "1", "--out-dir", str(out)]) == 0
    return out


class TestGenerate:
    def test_files_loadable(self, generated):
        net = load_edge_list(generated / "network.edges")
        assert (net.n, net.L) == (300, 20)
        ids, labels = read_labels(generated / "labels.csv")
        np.testing.assert_array_equal(ids, np.arange(1, 301))
        assert set(labels) == {1, 2, 3}
        params = json.loads((generated / "params.json").read_text())
        assert np.array(params["B"]).shape == (20, 3, 3)

    def test_assortative_diagonal(self, tmp_path):
        args = ["generate", "--n", "40", "--k", "2", "--l", "3", "--rho", "0.5", "--assortative", "--out-dir", str(tmp_path)]
        assert main(args) == 0
        B = np.array(json.loads((tmp_path / "params.json").read_text())["B"])
        assert (B[:, [0, 1], [0, 1]] == 1.0).all()

    @pytest.mark.parametrize("extra", [["--rho", "0"], ["--rho", "1.5"], ["--k", "50"]])
    def test_invalid_params(self, tmp_path, extra, capsys):
        base = ["generate", "--n", "40", "--k", "2", "--l", "3", "--out-dir", str(tmp_path)]
        assert main(base + extra) == 1
        assert "error" in capsys.readouterr().err


class TestDetect:
    def test_detect_writes_outputs(self, generated, tmp_path):
        out = tmp_path / "det"
        assert main(["detect", "--input", str(generated / "network.edges"), "--k", "3", "--out-dir", str(out)]) == 0
        ids, labels = read_labels(out / "labels.csv")
        assert ids.size == 300 and set(labels) == {1, 2, 3}
        diag = json.loads((out / "diagnostics.json").read_text())
        assert len(diag["leading_values"]) == 3 and diag["elapsed_s"] >= 0

    def test_single_community(self, generated, tmp_path):
        args = ["detect", "--input", str(generated / "network.edges"), "--algo", "nsoa", "--k", "1", "--out-dir", str(tmp_path)]
        assert main(args) == 0
        assert (read_labels(tmp_path / "labels.csv")[1] == 1).all()

    def test_subsampled_equals_full_on_small_network(self, tmp_path):
        gen = tmp_path / "small"
        main(["generate", "--n", "200", "--k", "3", "--l", "5", "--rho", "0.8", "--seed", "2", "--out-dir", str(gen)])
        outs = []
        for algo in ("ndsosa", "sndsosa"):
            out = tmp_path / algo
            assert main(["detect", "--input", str(gen / "network.edges"), "--algo", algo, "--k", "3", "--out-dir", str(out)]) == 0
            outs.append(read_labels(out / "labels.csv")[1])
        np.testing.assert_array_equal(*outs)

    def test_original_ids_kept(self, tmp_path):
        path = tmp_path / "ids.edges"
        path.write_text("1 10 20\n1 20 30\n1 10 30\n1 40 50\n1 50 60\n1 40 60\n")
        assert main(["detect", "--input", str(path), "--k", "2", "--out-dir", str(tmp_path)]) == 0
        ids, labels = read_labels(tmp_path / "labels.csv")
        np.testing.assert_array_equal(ids, [10, 20, 30, 40, 50, 60])
        np.testing.assert_array_equal(labels, [1, 1, 1, 2, 2, 2])

    def test_estimate_k(self, tmp_path):
        gen = tmp_path / "g"
        main(["generate", "--n", "300", "--k", "3", "--l", "10", "--rho", "0.5", "--assortative", "--seed", "3", "--out-dir", str(gen)])
        out = tmp_path / "est"
        assert main(["estimate-k", "--input", str(gen / "network.edges"), "--kmax", "6", "--out-dir", str(out)]) == 0
        with open(out / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [int(r["K"]) for r in rows] == list(range(1, 7))
        best = max(rows, key=lambda r: float(r["q_mnavrg"]))
        assert int(best["K"]) == 3
        assert json.loads((out / "diagnostics.json").read_text())["k_hat"] == 3
        # same sweep through detect --estimate-k
        out2 = tmp_path / "est2"
        assert main(["detect", "--input", str(gen / "network.edges"), "--estimate-k", "--kmax", "6", "--out-dir", str(out2)]) == 0
        assert (out2 / "sweep.csv").read_bytes() == (out / "sweep.csv").read_bytes()

    def test_usage_errors(self, generated, tmp_path):
        edges = str(generated / "network.edges")
        assert main(["detect", "--input", edges, "--out-dir", str(tmp_path)]) == 1
        assert main(["detect", "--k", "2"]) == 1
        assert main(["detect", "--input", edges, "--k", "2", "--algo", "amp"]) == 2
        assert main([]) == 1
        assert main(["bogus"]) == 1

    def test_data_errors(self, tmp_path):
        bad = tmp_path / "bad.edges"
        bad.write_text("1 a b\n")
        assert main(["detect", "--input", str(bad), "--k", "2", "--out-dir", str(tmp_path)]) == 2
        assert main(["detect", "--input", str(tmp_path / "missing"), "--k", "2"]) == 2
        empty = tmp_path / "empty.edges"
        empty.write_text("1 1 1\n1 2 2\n1 3 3\n")
        # only self-loops: the debiased aggregate vanishes
        assert main(["detect", "--input", str(empty), "--k", "2", "--out-dir", str(tmp_path)]) == 2

    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "detect" in capsys.readouterr().out


class TestConfig:
    def test_config_and_override(self, generated, tmp_path):
        cfg = tmp_path / "run.cfg"
        out = tmp_path / "from_cfg"
        cfg.write_text(
            f"# detect settings\ninput = {generated / 'network.edges'}\nalgo = nsoa\nk = 1\nout-dir = {out}\n",
            encoding="utf-8",
        )
        assert main(["--config", str(cfg), "detect"]) == 0
        assert (read_labels(out / "labels.csv")[1] == 1).all()
        assert main(["--config", str(cfg), "detect", "--k", "3"]) == 0
        assert set(read_labels(out / "labels.csv")[1]) == {1, 2, 3}
        assert json.loads((out / "diagnostics.json").read_text())["algorithm"] == "NSoA"

    def test_boolean_and_list_keys(self, tmp_path):
        cfg = tmp_path / "gen.cfg"
        cfg.write_text("n = 30\nk = 2\nl = 2\nrho = 0.5\nassortative = yes\n")
        assert main(["--config", str(cfg), "generate", "--out-dir", str(tmp_path)]) == 0
        B = np.array(json.loads((tmp_path / "params.json").read_text())["B"])
        assert (B[:, [0, 1], [0, 1]] == 1).all()

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nonsense = 3\n")
        assert main(["--config", str(cfg), "generate", "--n", "5", "--k", "1", "--l", "1"]) == 1
        cfg.write_text("just words\n")
        assert main(["--config", str(cfg), "generate", "--n", "5", "--k", "1", "--l", "1"]) == 1
        assert main(["--config", str(tmp_path / "none.cfg"), "generate", "--n", "5", "--k", "1", "--l", "1"]) == 1

    def test_read_config(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("--Out-Dir = x  # trailing\n\n")
        assert read_config(cfg) == {"out_dir": "x"}


class TestIngest:
    def test_edge_list(self, tmp_path):
        src = tmp_path / "in.edges"
        src.write_text("1 5 6\n2 6 7\n1 8 9\n")
        out = tmp_path / "out"
        assert main(["ingest", "--input", str(src), "--out-dir", str(out)]) == 0
        stats = json.loads((out / "stats.json").read_text())
        assert stats == {"n": 3, "L": 2, "edges": 2, "nu": pytest.approx(2 / 6)}
        assert (out / "node_map.csv").read_text().splitlines()[1:] == ["1,5", "2,6", "3,7"]
        assert [l for l in (out / "network.edges").read_text().splitlines() if not l.startswith("#")] == ["1 5 6", "2 6 7"]

    def test_returns(self, tmp_path):
        r = np.random.default_rng(0)
        src = tmp_path / "r.csv"
        rows = ["asset_id," + ",".join(f"t{i}" for i in range(1, 28))]
        base = r.standard_normal(27)
        for a in range(12):
            rows.append(f"S{a}," + ",".join(f"{x:.6f}" for x in base * (a % 2) + r.standard_normal(27)))
        src.write_text("\n".join(rows) + "\n")
        out = tmp_path / "out"
        assert main(["ingest", "--returns", str(src), "--thresholds", "0.3", "0.5", "--no-lcc", "--out-dir", str(out)]) == 0
        stats = json.loads((out / "stats.json").read_text())
        assert stats["n"] == 12 and stats["L"] == 2

    def test_requires_source(self, tmp_path):
        assert main(["ingest", "--out-dir", str(tmp_path)]) == 1
