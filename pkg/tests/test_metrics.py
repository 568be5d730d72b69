import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paucens import metrics
from paucens.errors import ConfigError, DataError
from paucens.metrics import PaucRange, auc, pauc, pauc_risk, rank_negatives, roc_area, roc_points
from paucens.selftest import brute_pauc_risk


def brute_auc(pos, neg):
    good = sum(1 for s in pos for t in neg if s > t)
    return good / (len(pos) * len(neg))


class TestPaucRange:
    def test_indices(self):
        assert PaucRange(0.0, 0.5).indices(4) == (0, 2)
        assert PaucRange(0.1, 0.35).indices(20) == (2, 7)

    def test_snapping_keeps_exact_products(self):
        # 10 * 0.7 is 7.000000000000001 in floating point
        assert PaucRange(0.7, 1.0).j_alpha(10) == 7
        assert PaucRange(0.0, 0.3).j_beta(10) == 3

    @pytest.mark.parametrize("a,b", [(0.5, 0.5), (-0.1, 0.5), (0.2, 1.5), (0.6, 0.3), (0.0, float("nan"))])
    def test_rejects_bad_interval(self, a, b):
        with pytest.raises(ConfigError):
            PaucRange(a, b)

    def test_empty_window_is_rejected(self):
        with pytest.raises(ConfigError, match="selects no negative"):
            PaucRange(0.0, 0.05).indices(4)

    def test_normalizer(self):
        assert PaucRange(0.0, 0.5).normalizer(2, 4) == 4.0


def test_auc_perfect_separation():
    assert auc([2, 3], [0, 1]) == 1.0


def test_auc_tie_counts_against():
    assert auc([1], [1]) == 0.0


def test_auc_worked_example():
    assert auc([3, 2], [1, 0.5, 2.5, 0.1]) == 7 / 8


def test_pauc_worked_example():
    # j_beta = 2, top negatives {2.5, 1}; only (2, 2.5) is misordered
    assert pauc([3, 2], [1, 0.5, 2.5, 0.1], PaucRange(0, 0.5)) == 0.75


def test_pauc_full_range_matches_auc():
    g = np.random.default_rng(3)
    pos, neg = g.normal(size=17), g.normal(size=23)
    assert pauc(pos, neg, PaucRange(0, 1)) == auc(pos, neg)


def test_pauc_separated_is_one():
    for beta in (0.1, 0.5, 1.0):
        assert pauc([15, 16, 17], np.arange(10.0), PaucRange(0, beta)) == 1.0


def test_rank_negatives_breaks_ties_by_index():
    assert rank_negatives([1.0, 3.0, 3.0, 2.0]).tolist() == [1, 2, 3, 0]


@pytest.mark.parametrize("bad", [[], [np.nan], [1.0, np.inf]])
def test_bad_scores(bad):
    with pytest.raises(DataError):
        auc(bad, [0.0])


def test_roc_contains_single_step():
    pts = roc_points([2], [1])
    assert (0.0, 1.0) in {tuple(p) for p in pts}
    assert tuple(pts[0]) == (0.0, 0.0) and tuple(pts[-1]) == (1.0, 1.0)


def test_roc_negated_scores():
    g = np.random.default_rng(5)
    pos, neg = g.normal(size=30), g.normal(size=20)
    assert auc(-pos, -neg) == pytest.approx(1 - auc(pos, neg), abs=1e-15)
    assert roc_area(roc_points(-pos, -neg)) == pytest.approx(1 - auc(pos, neg), abs=1e-12)


def test_roc_area_matches_auc_random():
    g = np.random.default_rng(11)
    pos, neg = g.normal(0.5, 1, size=25), g.normal(size=25)
    assert abs(roc_area(roc_points(pos, neg)) - auc(pos, neg)) <= 1e-12


def test_roc_area_with_ties():
    pos, neg = [1, 1, 2, 3], [1, 2, 2, 0]
    assert abs(roc_area(roc_points(pos, neg)) - auc(pos, neg)) <= 1e-12


def test_roc_is_monotone():
    g = np.random.default_rng(2)
    pts = roc_points(g.integers(0, 4, 40), g.integers(0, 4, 30))
    assert (np.diff(pts, axis=0) >= 0).all()


def test_tie_side_hook_changes_ties():
    saved = metrics._TIE_SIDE
    try:
        metrics._TIE_SIDE = "left"
        assert auc([1], [1]) == 1.0
    finally:
        metrics._TIE_SIDE = saved
    assert auc([1], [1]) == 0.0


scores = st.lists(st.integers(-3, 3).map(float), min_size=1, max_size=12)


@settings(max_examples=150, deadline=None)
@given(pos=scores, neg=scores, beta_tenths=st.integers(1, 10))
def test_pauc_risk_matches_pair_counting(pos, neg, beta_tenths):
    rng = PaucRange(0, beta_tenths / 10)
    if rng.j_beta(len(neg)) < 1:
        return
    assert pauc_risk(pos, neg, rng) == brute_pauc_risk(pos, neg, rng)


@settings(max_examples=100, deadline=None)
@given(pos=scores, neg=scores, ja=st.integers(0, 5), width=st.integers(1, 6))
def test_pauc_risk_nonzero_alpha(pos, neg, ja, width):
    n = len(neg)
    if ja + width > n:
        return
    rng = PaucRange(ja / n, (ja + width) / n)
    assert rng.indices(n) == (ja, ja + width)
    assert pauc_risk(pos, neg, rng) == brute_pauc_risk(pos, neg, rng)


@settings(max_examples=100, deadline=None)
@given(pos=scores, neg=scores)
def test_auc_matches_pair_counting(pos, neg):
    assert auc(pos, neg) == pytest.approx(brute_auc(pos, neg), abs=1e-15)
    assert abs(roc_area(roc_points(pos, neg)) - auc(pos, neg)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(pos=scores, neg=scores, shift=st.floats(-5, 5), scale=st.floats(0.1, 10))
def test_pauc_invariant_to_monotone_maps(pos, neg, shift, scale):
    rng = PaucRange(0, 1)
    a = pauc(pos, neg, rng)
    b = pauc([scale * s + shift for s in pos], [scale * s + shift for s in neg], rng)
    # affine maps can merge nearby values only through rounding; integers stay distinct
    assert math.isclose(a, b, abs_tol=1e-15)
