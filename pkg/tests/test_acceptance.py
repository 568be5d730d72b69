"""Acceptance criteria, one test per criterion.

Every test records a single ``[PASS]`` / ``[FAIL]`` line with the measured
numbers; ``conftest.py`` prints them in an "acceptance criteria" section at
the end of the pytest run.
"""

import math
import time

import numpy as np
import pytest

from paucens.baseline import adaboost_coefficient, adaboost_train
from paucens.dataset import Dataset, ToyConfig, generate_toy
from paucens.ensemble import convergence_report, train
from paucens.features import channel_layout, compute_base_channels, extract_maps
from paucens.metrics import PaucRange, pauc
from paucens.selftest import constraint_oracle, covariance_oracle, metric_oracle
from paucens.structopt import OrderingConstraint, WeakOutputs, cutting_plane, most_violated_constraint, violation

SLACK = 1e-9
TOY_RANGE = PaucRange(0.0, 0.2)
TOY_SEEDS = range(20)
TOY_STUMPS = 10
# validation grid for nu: 10^-5, 10^-4.8, ..., 10^-3
NU_GRID = [10 ** (-5 + 0.2 * k) for k in range(11)]


VERDICTS = []


def report(tag, ok, detail, status=None):
    line = f"[{status or ('PASS' if ok else 'FAIL')}] {tag}: {detail}"
    VERDICTS.append(line)
    print(line)
    return line


def test_c1_metric_exactness():
    r = metric_oracle(seed=0, instances=200)
    ok = r.passed and r.checked == 200 and r.seconds < 5.0
    report("C1 metric exactness", ok,
           f"{r.checked - len(r.failures)}/{r.checked} instances equal the pair-counting oracle, {r.seconds:.2f}s (limit 5s)")
    assert ok, r.failures[:3]


def test_c2_constraint_oracle():
    r = constraint_oracle(seed=0, instances=100)
    ok = r.passed and r.checked == 100 and r.seconds < 30.0
    report("C2 constraint oracle", ok,
           f"{r.checked - len(r.failures)}/{r.checked} within 1e-9 of exhaustive search, {r.seconds:.2f}s (limit 30s)")
    assert ok, r.failures[:3]


def _random_probe(g, m, n, rng):
    _, jb = rng.indices(n)
    return OrderingConstraint(g.permutation(n)[:jb], g.random((m, jb)) < g.random(), n, rng)


def test_c3_cutting_plane_soundness():
    g = np.random.default_rng(0)
    eps = 1e-4
    worst = -np.inf
    for _ in range(20):
        tau = int(g.integers(1, 6))
        H = WeakOutputs(g.choice([-1.0, 1.0], (tau, 10)), g.choice([-1.0, 1.0], (tau, 10)))
        rng = PaucRange(0.0, float(g.choice([0.1, 0.2, 0.5, 1.0])))
        nu = float(g.choice([0.1, 1.0, 10.0]))
        state = cutting_plane(H, rng, nu, eps)
        probes = [_random_probe(g, 10, 10, rng) for _ in range(100)]
        probes.append(most_violated_constraint(H, state.w, rng))
        excess = max(violation(H, state.w, Y) - state.xi for Y in probes)
        worst = max(worst, excess)
    ok = worst <= eps + SLACK
    report("C3 cutting-plane soundness", ok,
           f"largest probe violation above xi over 20 instances x 101 probes = {worst:.3e} (limit eps_cp + 1e-9 = {eps + SLACK:.3e})")
    assert ok


@pytest.fixture(scope="module")
def toy_runs():
    """Every toy training run: 20 seeds, each nu of the grid, 10 stumps."""
    t0 = time.perf_counter()
    runs = []
    for seed in TOY_SEEDS:
        cfg = ToyConfig(seed=seed)
        tr, va, te = (generate_toy(cfg, s) for s in ("train", "val", "test"))
        fits = [(nu, train(tr, TOY_RANGE, nu=nu, t_max=TOY_STUMPS, tree_depth=1)) for nu in NU_GRID]
        ada = adaboost_train(tr, t_max=TOY_STUMPS, tree_depth=1)
        runs.append((seed, va, te, fits, ada))
    return runs, time.perf_counter() - t0


def _pauc(model, data):
    f = model.decision_function
    return pauc(f(data.positives), f(data.negatives), TOY_RANGE)


def _round_reports(toy_runs):
    runs, _ = toy_runs
    return [rec for _, _, _, fits, _ in runs for _, model in fits
            for rec in convergence_report(model.training_log, SLACK)]


def test_c4a_objective_monotone(toy_runs):
    recs = _round_reports(toy_runs)
    bad = sum(not r["monotone_ok"] for r in recs)
    worst = min(r["decrease"] for r in recs)
    ok = bad == 0
    report("C4a objective decrease >= 0", ok,
           f"{len(recs) - bad}/{len(recs)} rounds, smallest decrease {worst:.3e} (slack 1e-9)")
    assert ok


def test_c4b_squared_gap_bound(toy_runs):
    recs = _round_reports(toy_runs)
    bad = sum(not r["gap_bound_ok"] for r in recs)
    worst = min(r["decrease"] - r["gap_bound"] for r in recs)
    ok = bad == 0
    report("C4b decrease >= squared-gap bound", ok,
           f"{len(recs) - bad}/{len(recs)} rounds, worst decrease minus bound {worst:.3e} (slack 1e-9)")
    assert ok, f"squared-gap decrease bound violated in {bad} of {len(recs)} rounds"


def test_c5_toy_reproduction(toy_runs):
    runs, seconds = toy_runs
    diffs = []
    for _, va, te, fits, ada in runs:
        best = max(fits, key=lambda f: _pauc(f[1], va))[1]
        diffs.append(_pauc(best, te) - _pauc(ada, te))
    diffs = np.array(diffs)
    wins = int((diffs >= 0).sum())
    med = float(np.median(diffs))
    ok = wins >= 15 and med > 0 and seconds < 120
    report("C5 toy pAUC(0, 0.2) vs AdaBoost", ok,
           f"pAUCEns >= AdaBoost on {wins}/20 seeds (need 15), median difference {med:+.4f} (need > 0), "
           f"{seconds:.1f}s (limit 120s)")
    assert ok


def test_c6_adaboost_sanity():
    coef = adaboost_coefficient(0.25)
    coef_ok = abs(coef - 0.5 * math.log(3)) <= 1e-12
    data = generate_toy(ToyConfig(n_train_per_class=100, seed=0), "train")
    model = adaboost_train(data, t_max=20, tree_depth=1)
    post = max(abs(r["error_after_update"] - 0.5) for r in model.training_log)
    post_ok = post <= 1e-9
    # alternating blocks on a line: separable, but only by a sum of stumps
    sep = Dataset(np.array([[0.0], [2.0], [4.0], [6.0]]), np.array([[1.0], [3.0], [5.0], [7.0]]))
    ens = adaboost_train(sep, t_max=20, tree_depth=1)
    f = ens.decision_function
    train_err = int((f(sep.positives) <= 0).sum() + (f(sep.negatives) >= 0).sum())
    ok = coef_ok and post_ok and train_err == 0
    report("C6 AdaBoost sanity", ok,
           f"coef(0.25) - ln(3)/2 = {coef - 0.5 * math.log(3):.1e} (tol 1e-12); "
           f"max |post-update error - 0.5| = {post:.1e} (tol 1e-9); "
           f"separable training errors after {len(ens)} rounds = {train_err}")
    assert ok


def test_c7_feature_correctness():
    n_channels = len(channel_layout(("sp-cov", "luv")))
    cov = covariance_oracle(seed=0, instances=100)

    base = np.random.default_rng(1).integers(0, 256, (72, 72, 3)).astype(float)
    a_img = np.zeros((80, 80, 3))
    a_img[4:76, 4:76] = base
    b_img = np.zeros((80, 80, 3))
    b_img[4:76, 8:80] = base
    shift_ok = True
    for a, b in zip(extract_maps(a_img, ("sp-cov", "sp-lbp", "luv")), extract_maps(b_img, ("sp-cov", "sp-lbp", "luv"))):
        lo, hi = 2, (76 - a.footprint() - 2) // 4
        shift_ok &= np.array_equal(a.values[:, lo:hi, lo:hi - 1], b.values[:, lo:hi, lo + 1:hi])

    img = np.random.default_rng(2).integers(0, 256, (1000, 1000)).astype(float)
    o2 = compute_base_channels(img).channel("o2")
    o2_ok = o2.size == 10**6 and o2.min() >= 0.0 and o2.max() <= np.pi

    ok = n_channels == 136 and cov.passed and shift_ok and o2_ok
    report("C7 feature correctness", ok,
           f"{n_channels} channels (need 136); covariance {cov.checked - len(cov.failures)}/{cov.checked} patches "
           f"within 1e-6; 4px shift moves every map by one cell: {shift_ok}; "
           f"O2 in [{o2.min():.4f}, {o2.max():.4f}] on 1e6 pixels")
    assert ok, cov.failures[:3]


def test_c8_full_scale_out_of_scope():
    report("C8 full-scale detection results", True, "out of scope, needs multi-GB corpora (non-blocking)", status="SKIP")
    pytest.skip("full-scale detection benchmarks are out of scope; the protein stretch goal needs network data")
