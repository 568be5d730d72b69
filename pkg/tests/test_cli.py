import csv
import json

import numpy as np
import pytest

from paucens.cli import main
from paucens.dataset import Dataset, ToyConfig, generate_toy, load_csv, save_csv
from paucens.features import write_pnm
from paucens.metrics import roc_area


def run(capsys, *argv):
    code = main(list(map(str, argv)))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def toy(tmp_path, capsys):
    paths = [tmp_path / f"{s}.csv" for s in ("train", "val", "test")]
    code, _, _ = run(capsys, "gen-toy", "--seed", 1, "--n-train", 60, "--n-test", 300,
                     "--out", ",".join(map(str, paths)))
    assert code == 0
    return paths


def test_gen_toy_sizes(toy):
    train, val, test = (load_csv(p) for p in toy)
    assert (train.m, train.n, val.m, test.m) == (60, 60, 60, 300)


def test_train_ten_learners(tmp_path, toy, capsys):
    model = tmp_path / "m.json"
    logp = tmp_path / "log.jsonl"
    code, out, _ = run(capsys, "train", "--data", toy[0], "--method", "pauc-ens", "--alpha", 0,
                       "--beta", 0.2, "--iters", 10, "--depth", 1, "--model", model, "--log", logp)
    assert code == 0
    summary = json.loads(out)
    assert summary["learners"] == 10
    recs = [json.loads(l) for l in logp.read_text().splitlines()]
    assert len(recs) == 10
    assert all(r["monotone_ok"] for r in recs)
    assert {"objective", "xi", "working_set", "gap_bound_ok"} <= set(recs[0])


def test_train_is_reproducible(tmp_path, toy, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run(capsys, "train", "--data", toy[0], "--beta", 0.2, "--iters", 4,
                   "--seed", 3, "--model", path)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_nu_grid_selection(tmp_path, toy, capsys):
    code, out, _ = run(capsys, "train", "--data", toy[0], "--val", toy[1], "--beta", 0.2,
                       "--iters", 3, "--depth", 1, "--nu-grid", "0.01,1", "--model", tmp_path / "m.json")
    assert code == 0
    sel = json.loads(out)["selection"]
    assert sel["nu"] in (0.01, 1.0) and len(sel["validation_pauc"]) == 2


def test_adaboost_and_eval(tmp_path, toy, capsys):
    model = tmp_path / "ada.json"
    assert run(capsys, "train", "--data", toy[0], "--method", "adaboost", "--iters", 5,
               "--model", model)[0] == 0
    roc = tmp_path / "roc.csv"
    code, out, _ = run(capsys, "eval", "--model", model, "--data", toy[2], "--beta", 0.2, "--out", roc)
    assert code == 0
    report = json.loads(out)
    with roc.open() as fh:
        pts = [(float(r["fpr"]), float(r["tpr"])) for r in csv.DictReader(fh)]
    assert abs(roc_area(pts) - report["auc"]) <= 1e-12
    assert report["auc"] > 0.8


def test_beta_too_small_is_config_error(tmp_path, capsys):
    data = tmp_path / "d.csv"
    save_csv(Dataset(np.arange(4.0)[:, None] + 10, np.arange(4.0)[:, None]), data)
    code, _, err = run(capsys, "train", "--data", data, "--beta", 0.05, "--model", tmp_path / "m.json")
    assert code == 2
    assert "selects no negative" in err


def test_missing_data_is_data_error(tmp_path, capsys):
    code, _, _ = run(capsys, "train", "--data", tmp_path / "nope.csv", "--model", tmp_path / "m.json")
    assert code == 3


def test_perfect_scores(tmp_path, capsys):
    p = tmp_path / "s.csv"
    p.write_text("label,score\n1,5\n1,4\n0,1\n0,2\n")
    code, out, _ = run(capsys, "eval", "--scores", p, "--beta", 0.5)
    assert code == 0 and json.loads(out)["pauc"] == 1.0


def test_shuffled_labels_give_chance_auc(tmp_path, capsys):
    # tied scores count as misordered, so the null check needs a model with many distinct scores
    data = tmp_path / "train.csv"
    save_csv(generate_toy(ToyConfig(seed=1), "train"), data)
    model = tmp_path / "m.json"
    assert run(capsys, "train", "--data", data, "--method", "adaboost", "--iters", 30, "--depth", 3,
               "--model", model)[0] == 0
    test = generate_toy(ToyConfig(n_test_per_class=1000, seed=2), "test")
    X = np.vstack([test.positives, test.negatives])
    labels = np.random.default_rng(0).permutation(np.r_[np.ones(1000), np.zeros(1000)])
    shuffled = tmp_path / "shuffled.csv"
    save_csv(Dataset(X[labels == 1], X[labels == 0], ("x", "y")), shuffled)
    code, out, _ = run(capsys, "eval", "--model", model, "--data", shuffled)
    assert code == 0
    assert abs(json.loads(out)["auc"] - 0.5) <= 0.05


def test_roc_to_stdout(tmp_path, capsys):
    p = tmp_path / "s.csv"
    p.write_text("label,score\n1,2\n0,1\n")
    code, out, _ = run(capsys, "roc", "--scores", p)
    assert code == 0
    assert out.splitlines()[0] == "fpr,tpr" and "0.0,1.0" in out


def test_scores_and_model_conflict(tmp_path, capsys):
    code, _, _ = run(capsys, "eval", "--scores", "a.csv", "--model", "m.json")
    assert code == 2


def test_config_file_and_flag_precedence(tmp_path, toy, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"iters": 2, "beta": 0.2, "depth": 1}))
    code, out, _ = run(capsys, "--config", cfg, "train", "--data", toy[0], "--model", tmp_path / "m.json")
    assert code == 0 and json.loads(out)["learners"] == 2
    code, out, _ = run(capsys, "--config", cfg, "train", "--data", toy[0], "--iters", 3,
                       "--model", tmp_path / "m.json")
    assert json.loads(out)["learners"] == 3


def test_extract(tmp_path, capsys):
    img = np.random.default_rng(0).integers(0, 256, (72, 40, 3)).astype(float)
    write_pnm(tmp_path / "a.ppm", img)
    out = tmp_path / "f.csv"
    code, _, _ = run(capsys, "extract", "--features", "sp-cov,luv", "--window", "32x64", "--stride", 4,
                     tmp_path / "a.ppm", "--out", out, "--label", 1)
    assert code == 0
    with out.open() as fh:
        rows = list(csv.reader(fh))
    # (40-32)/4+1 columns by (72-64)/4+1 rows of windows, plus the header
    assert len(rows) == 10
    assert len(rows[0]) == 6824 + 1 and rows[1][-1] == "1"


@pytest.mark.parametrize("argv", [
    ["extract", "x.ppm", "--features", "hog"],
    ["extract", "x.ppm", "--stride", "3"],
    ["extract", "x.ppm", "--window", "abc"],
])
def test_extract_config_errors(argv, capsys):
    assert run(capsys, *argv)[0] == 2


def test_selftest_and_fault(capsys):
    code, out, _ = run(capsys, "selftest", "--suite", "metric-oracle,constraint-oracle")
    assert code == 0 and out.count("PASS") == 2
    code, out, _ = run(capsys, "selftest", "--suite", "metric-oracle", "--inject-tie-fault")
    assert code == 1 and "FAIL metric-oracle" in out


def test_selftest_unknown_suite(capsys):
    assert run(capsys, "selftest", "--suite", "nope")[0] == 2
