import csv

import numpy as np
import pytest

from maxmachine.cli import main

FAST = "max_sweeps = 40\nburn_in = 10\nn_samples = 5\n"


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def workdir(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(FAST)
    X = np.random.default_rng(3).random((10, 5)) < 0.4
    X[np.arange(10), np.arange(10) % 5] = True  # every object and attribute appears
    (tmp_path / "p.csv").write_text("".join(f"o{n},a{d}\n" for n, d in np.argwhere(X)))
    (tmp_path / "t.csv").write_text("".join(f"o{n},{'st'[n % 2]}\n" for n in range(10)))
    return tmp_path


def train(w, *extra):
    return main(["train", "--pairs", str(w / "p.csv"), "--types", str(w / "t.csv"), "--config", str(w / "run.cfg"),
                 "--dims", "2", "--seed", "1", "--out", str(w / "m.npz"), *extra])


def test_train_predict_all(workdir):
    assert train(workdir, "--save-samples") == 0
    assert main(["predict", "--model", str(workdir / "m.npz"), "--all", "--out", str(workdir / "p.out")]) == 0
    out = rows(workdir / "p.out")
    assert out[0] == ["object_id", "attribute_id", "p"]
    data = out[1:]
    assert len(data) == 50
    assert all(0 < float(r[2]) < 1 for r in data)


def test_predict_on_10x5(tmp_path):
    X = np.random.default_rng(0).random((10, 5)) < 0.4
    X[:, 0] = True
    X[0, :] = True
    (tmp_path / "p.csv").write_text("".join(f"o{n},a{d}\n" for n, d in np.argwhere(X)))
    (tmp_path / "run.cfg").write_text(FAST)
    assert main(["train", "--pairs", str(tmp_path / "p.csv"), "--config", str(tmp_path / "run.cfg"),
                 "--dims", "2", "--out", str(tmp_path / "m.npz")]) == 0
    with pytest.warns(UserWarning, match="no retained samples"):
        assert main(["predict", "--model", str(tmp_path / "m.npz"), "--all", "--out", str(tmp_path / "o.csv")]) == 0
    p = [float(r[2]) for r in rows(tmp_path / "o.csv")[1:]]
    assert len(p) == 50 and all(0 < v < 1 for v in p)


def test_predict_cells(workdir):
    assert train(workdir) == 0
    (workdir / "cells.csv").write_text("o0,a1\no3,a4\n")
    with pytest.warns(UserWarning):
        assert main(["predict", "--model", str(workdir / "m.npz"), "--cells", str(workdir / "cells.csv"),
                     "--out", str(workdir / "o.csv")]) == 0
    assert [r[:2] for r in rows(workdir / "o.csv")[1:]] == [["o0", "a1"], ["o3", "a4"]]
    (workdir / "bad.csv").write_text("zzz,a1\n")
    assert main(["predict", "--model", str(workdir / "m.npz"), "--cells", str(workdir / "bad.csv")]) == 3


def test_report_codes(workdir):
    assert train(workdir) == 0
    assert main(["report", "--model", str(workdir / "m.npz"), "--codes", "--out", str(workdir / "c.csv")]) == 0
    out = rows(workdir / "c.csv")
    D = 5
    assert out[0][-2:] == ["nu", "lambda_hat"] and len(out[0]) == D + 3
    assert [r[0] for r in out[1:]] == ["0", "1", "clamped"]


def test_report_attribute(workdir):
    assert train(workdir, "--save-samples") == 0
    code = main(["report", "--model", str(workdir / "m.npz"), "--attribute", "a0", "--top-k", "1",
                 "--out", str(workdir / "r.csv")])
    assert code == 0
    out = rows(workdir / "r.csv")
    assert out[0] == ["type", "mean_p", "mean_p_absent", "n_products"] and len(out) == 2
    assert main(["report", "--model", str(workdir / "m.npz")]) == 2
    assert main(["report", "--model", str(workdir / "m.npz"), "--attribute", "nope"]) == 3


def test_evaluate_with_clusters(workdir):
    (workdir / "cl.csv").write_text("".join(f"o{n},{'xy'[n % 2]}\n" for n in range(10)))
    code = main(["evaluate", "--pairs", str(workdir / "p.csv"), "--types", str(workdir / "t.csv"),
                 "--config", str(workdir / "run.cfg"), "--dims", "2", "--holdout-frac", "0.3",
                 "--clusters", str(workdir / "cl.csv"), "--out", str(workdir / "rep.csv")])
    assert code == 0
    out = rows(workdir / "rep.csv")
    assert out[0] == ["cluster", "auc_model", "auc_baseline", "delta", "n_cells"]
    assert [r[0] for r in out[1:]] == ["all", "x", "y"]


def test_simulate(tmp_path):
    (tmp_path / "s.cfg").write_text("synth.N = 20\nsynth.D = 8\nsynth.T = 2\n")
    assert main(["simulate", "--config", str(tmp_path / "s.cfg"), "--seed", "4",
                 "--out-prefix", str(tmp_path / "P")]) == 0
    truth = np.load(tmp_path / "P_truth.npz")
    assert truth["Z"].shape == (20, 4) and truth["U"].shape == (4, 8)
    types = rows(tmp_path / "P_types.csv")
    assert len(types) == 20


def test_exit_codes(workdir, capsys):
    assert main(["train"]) == 2
    assert main(["train", "--pairs", "x", "--out", "y", "--bogus"]) == 2
    (workdir / "bad.cfg").write_text("nonsense = 1\n")
    assert train(workdir, "--config", str(workdir / "bad.cfg")) == 2
    assert main(["train", "--pairs", str(workdir / "absent.csv"), "--out", str(workdir / "m.npz")]) == 3
    (workdir / "broken.csv").write_text("a,b,c\n")
    assert main(["train", "--pairs", str(workdir / "broken.csv"), "--out", str(workdir / "m.npz")]) == 3
    assert main(["predict", "--model", str(workdir / "absent.npz"), "--all"]) == 3
    assert train(workdir, "--threads", "0") == 2
    assert "error:" in capsys.readouterr().err


def test_seeded_runs_identical(workdir):
    args = ["evaluate", "--pairs", str(workdir / "p.csv"), "--types", str(workdir / "t.csv"), "--config",
            str(workdir / "run.cfg"), "--dims", "2", "--seed", "5", "--holdout-frac", "0.3"]
    assert main(args + ["--out", str(workdir / "a.csv")]) == 0
    assert main(args + ["--out", str(workdir / "b.csv")]) == 0
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()
