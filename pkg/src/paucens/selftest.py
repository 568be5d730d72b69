"""Brute-force oracle suites run by ``paucens selftest``.

Each suite draws seeded random instances, compares the fast code path with
a slow independent computation, and returns a :class:`SuiteResult`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import ToyConfig, generate_toy
from .ensemble import convergence_report, train
from .features.channels import compute_base_channels
from .features.integral import IntegralChannels, patch_covariance
from .metrics import PaucRange, pauc_risk
from .structopt import (
    WeakOutputs,
    brute_force_most_violated,
    cutting_plane,
    most_violated_constraint,
    violation,
)

__all__ = [
    "SuiteResult",
    "brute_pauc_risk",
    "naive_covariance",
    "metric_oracle",
    "constraint_oracle",
    "covariance_oracle",
    "convergence_invariants",
    "SUITES",
    "run_all",
]


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checked: int
    failures: list = field(default_factory=list)
    seconds: float = 0.0
    notes: list = field(default_factory=list)


def brute_pauc_risk(pos, neg, rng: PaucRange) -> float:
    """Pair counting straight from the definition, one pair at a time.

    Negatives are ranked by descending score with ties by index; a pair
    counts when the positive does not score strictly above the negative.
    """
    pos = [float(v) for v in pos]
    neg = [float(v) for v in neg]
    n = len(neg)
    ja, jb = rng.indices(n)
    order = sorted(range(n), key=lambda j: (-neg[j], j))
    bad = 0
    for j in order[ja:jb]:
        for s in pos:
            if not s > neg[j]:
                bad += 1
    return bad / rng.normalizer(len(pos), n)


def naive_covariance(values):
    """Two-pass sample covariance of the rows of ``values`` (k, N)."""
    v = np.asarray(values, dtype=np.float64)
    N = v.shape[1]
    mean = v.sum(axis=1) / N
    d = v - mean[:, None]
    return (d @ d.T) / (N - 1)


def metric_oracle(seed: int = 0, instances: int = 200) -> SuiteResult:
    t0 = time.perf_counter()
    g = np.random.default_rng(seed)
    fails = []
    for k in range(instances):
        m, n = int(g.integers(1, 21)), int(g.integers(1, 21))
        beta = float(g.choice(np.round(np.arange(1, 11) / 10, 1)))
        rng = PaucRange(0.0, beta)
        if rng.j_beta(n) < 1:
            n = int(np.ceil(1 / beta))
        # integer scores force ties between and within classes
        pos = g.integers(0, 6, m).astype(float)
        neg = g.integers(0, 6, n).astype(float)
        got, want = pauc_risk(pos, neg, rng), brute_pauc_risk(pos, neg, rng)
        if got != want:
            fails.append(f"instance {k}: pauc_risk {got!r} != oracle {want!r}")
    return SuiteResult("metric-oracle", not fails, instances, fails, time.perf_counter() - t0)


def _random_outputs(g, m, n, tau):
    hp = g.choice([-1.0, 1.0], size=(tau, m))
    hn = g.choice([-1.0, 1.0], size=(tau, n))
    return WeakOutputs(hp, hn)


def constraint_oracle(seed: int = 0, instances: int = 100) -> SuiteResult:
    t0 = time.perf_counter()
    g = np.random.default_rng(seed)
    fails = []
    for k in range(instances):
        m, n, tau = int(g.integers(1, 4)), int(g.integers(1, 6)), int(g.integers(1, 5))
        jb = int(g.integers(1, min(3, n) + 1))
        rng = PaucRange(0.0, jb / n)
        H = _random_outputs(g, m, n, tau)
        w = g.normal(size=tau) * g.choice([0.1, 1.0, 10.0])
        fast = violation(H, w, most_violated_constraint(H, w, rng))
        _, exact = brute_force_most_violated(H, w, rng)
        if abs(fast - exact) > 1e-9:
            fails.append(f"instance {k}: oracle Q {fast!r} vs exhaustive {exact!r}")
    return SuiteResult("constraint-oracle", not fails, instances, fails, time.perf_counter() - t0)


def covariance_oracle(seed: int = 0, instances: int = 100) -> SuiteResult:
    t0 = time.perf_counter()
    g = np.random.default_rng(seed)
    img = g.integers(0, 256, size=(72, 72)).astype(float)
    stack = compute_base_channels(img)
    ic = IntegralChannels.from_stack(stack)
    yy, xx = np.mgrid[0:72, 0:72]
    values = np.concatenate([np.stack([xx, yy]).astype(float), stack.planes])
    iu = np.triu_indices(9, 1)
    fails = []
    for k in range(instances):
        h, w = int(g.integers(8, 33)), int(g.integers(8, 33))
        y0, x0 = int(g.integers(0, 72 - h + 1)), int(g.integers(0, 72 - w + 1))
        var, corr = patch_covariance(ic, (x0, y0, w, h))
        C = naive_covariance(values[:, y0 : y0 + h, x0 : x0 + w].reshape(9, -1))
        dv = np.abs(var - np.diag(C)) / np.maximum(np.abs(np.diag(C)), 1e-12)
        sd = np.sqrt(np.diag(C))
        with np.errstate(invalid="ignore", divide="ignore"):
            R = C / np.outer(sd, sd)
        R = np.where(np.outer(sd, sd) > 0, R, 0.0)[iu]
        dc = np.abs(corr - R)
        if dv.max() > 1e-6 or dc.max() > 1e-6:
            fails.append(f"patch {k} ({x0},{y0},{w},{h}): variance rel err {dv.max():.2e}, corr err {dc.max():.2e}")
    return SuiteResult("covariance-oracle", not fails, instances, fails, time.perf_counter() - t0)


def convergence_invariants(seed: int = 0, runs: int = 3, slack: float = 1e-9) -> SuiteResult:
    """Objective monotonicity, the strong-convexity decrease bound, KKT and cutting-plane exit."""
    t0 = time.perf_counter()
    fails, notes = [], []
    checked = 0
    rng = PaucRange(0.0, 0.2)
    for r in range(runs):
        cfg = ToyConfig(n_train_per_class=60, n_test_per_class=1, n_val_per_class=1, seed=seed + r)
        data = generate_toy(cfg, "train")
        model = train(data, rng, nu=0.25, t_max=6, tree_depth=1)
        for rec in convergence_report(model.training_log, slack):
            checked += 1
            if not rec["monotone_ok"]:
                fails.append(f"run {r} round {rec['iteration']}: objective rose by {-rec['decrease']:.3e}")
            if not rec["strong_convexity_ok"]:
                fails.append(f"run {r} round {rec['iteration']}: decrease below strong-convexity bound")
            if not rec["gap_bound_ok"]:
                notes.append(f"run {r} round {rec['iteration']}: decrease {rec['decrease']:.3e} "
                             f"below squared-gap bound {rec['gap_bound']:.3e}")
        for rec in model.training_log:
            if rec["kkt_reconstruction_error"] > 1e-8:
                fails.append(f"run {r} round {rec['iteration']}: w differs from sum lam phi by "
                             f"{rec['kkt_reconstruction_error']:.2e}")
    g = np.random.default_rng(seed)
    for k in range(5):
        H = _random_outputs(g, 10, 10, 4)
        eps = 1e-4
        state = cutting_plane(H, rng, 0.5, eps)
        Y = most_violated_constraint(H, state.w, rng)
        checked += 1
        if violation(H, state.w, Y) > state.xi + eps + slack:
            fails.append(f"cutting plane {k}: exit constraint violated beyond xi + eps")
    return SuiteResult("convergence-invariants", not fails, checked, fails, time.perf_counter() - t0, notes)


SUITES = {
    "metric-oracle": metric_oracle,
    "constraint-oracle": constraint_oracle,
    "covariance-oracle": covariance_oracle,
    "convergence-invariants": convergence_invariants,
}


def run_all(seed: int = 0, suites=None):
    names = list(SUITES) if suites is None else list(suites)
    return [SUITES[name](seed=seed) for name in names]
