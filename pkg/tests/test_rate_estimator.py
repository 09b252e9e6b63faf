import math

import numpy as np
import pytest

from utils.errors import EmptyTrainingSet
from utils.graph_model import LabelTable, build_graph
from utils.rate_estimator import (ConfidencePriors, TargetCounts, accumulate_counts, build_rate_table,
                                  estimate_accept_rates, estimate_selection_rates)

from tests.conftest import random_graph

EPS = 1e-6


def counts_for(rho_s, rho_b, f_s, f_b, rho_L_s=None, rho_L_b=None):
    rho_s, rho_b = np.asarray(rho_s, float), np.asarray(rho_b, float)
    return TargetCounts(rho_s=rho_s, rho_b=rho_b,
                        f_s=np.asarray(f_s, float), f_b=np.asarray(f_b, float),
                        rho_L_s=float(rho_s.sum() if rho_L_s is None else rho_L_s),
                        rho_L_b=float(rho_b.sum() if rho_L_b is None else rho_L_b))


# -------------------- accumulate_counts --------------------

def test_single_fake_edge():
    graph = build_graph(2, [(0, 1, 1)])
    counts = accumulate_counts(graph, LabelTable.from_mapping(2, {0: 1.0}))
    assert counts.rho_s[1] == 1.0 and counts.f_s[1] == 1.0
    assert counts.rho_L_s == 1.0 and counts.rho_L_b == 0.0
    assert counts.rho_b.sum() == 0.0 and counts.f_b.sum() == 0.0
    assert counts.rho_s[0] == 0.0


def test_fractional_sender():
    graph = build_graph(2, [(0, 1, 1)])
    counts = accumulate_counts(graph, LabelTable.from_mapping(2, {0: 0.25}))
    assert counts.rho_s[1] == 0.25 and counts.rho_b[1] == 0.75
    assert counts.f_s[1] == 0.25 and counts.f_b[1] == 0.75


def test_unlabeled_sender_ignored():
    graph = build_graph(3, [(0, 1, 1), (2, 1, 0)])
    counts = accumulate_counts(graph, LabelTable.from_mapping(3, {2: 0.0}))
    assert counts.rho_b[1] == 1.0 and counts.f_b[1] == 0.0
    assert counts.rho_L == 1.0


def test_fractional_label_is_linear(rng):
    graph = random_graph(30, 200, rng)
    values = np.where(rng.random(30) < 0.5, 0.25, np.nan)
    mixed = accumulate_counts(graph, LabelTable(values))
    as_fake = accumulate_counts(graph, LabelTable(np.where(np.isnan(values), np.nan, 1.0)))
    as_real = accumulate_counts(graph, LabelTable(np.where(np.isnan(values), np.nan, 0.0)))
    np.testing.assert_allclose(mixed.rho_s, 0.25 * as_fake.rho_s, atol=1e-12)
    np.testing.assert_allclose(mixed.rho_b, 0.75 * as_real.rho_b, atol=1e-12)
    np.testing.assert_allclose(mixed.f_s, 0.25 * as_fake.f_s, atol=1e-12)
    np.testing.assert_allclose(mixed.f_b, 0.75 * as_real.f_b, atol=1e-12)
    assert mixed.rho_L == pytest.approx(as_fake.rho_L)


def test_count_invariants(small_world):
    graph, _, training = small_world
    counts = accumulate_counts(graph, training)
    assert math.isclose(counts.rho_s.sum(), counts.rho_L_s)
    assert math.isclose(counts.rho_b.sum(), counts.rho_L_b)
    assert np.all(counts.f_s <= counts.rho_s) and np.all(counts.f_b <= counts.rho_b)


def test_sharded_accumulation_matches(small_world):
    graph, _, training = small_world
    whole = accumulate_counts(graph, training)
    sharded = accumulate_counts(graph, training, shards=7, threads=3)
    for name in ("rho_s", "rho_b", "f_s", "f_b"):
        np.testing.assert_array_equal(getattr(whole, name), getattr(sharded, name))
    assert whole.rho_L_s == sharded.rho_L_s


def test_sharded_fractional_counts_are_bit_identical(rng):
    graph = random_graph(500, 6000, rng)
    values = rng.random(500)
    values[rng.random(500) < 0.2] = np.nan
    labels = LabelTable(values)
    whole = accumulate_counts(graph, labels)
    for shards in (2, 5, 13):
        sharded = accumulate_counts(graph, labels, shards=shards, threads=4)
        for name in ("rho_s", "rho_b", "f_s", "f_b"):
            np.testing.assert_array_equal(getattr(whole, name), getattr(sharded, name))
        assert (whole.rho_L_s, whole.rho_L_b) == (sharded.rho_L_s, sharded.rho_L_b)


def test_merge_adds_partial_counts(rng):
    graph = random_graph(200, 1500, rng)
    labels = LabelTable(np.where(rng.random(200) < 0.5, rng.random(200), np.nan))
    triples = np.column_stack([graph.sources, graph.targets, graph.responses])
    half = graph.num_edges // 2
    first, second = build_graph(200, triples[:half]), build_graph(200, triples[half:])
    merged = accumulate_counts(first, labels).merge(accumulate_counts(second, labels))
    whole = accumulate_counts(graph, labels)
    for name in ("rho_s", "rho_b", "f_s", "f_b"):
        np.testing.assert_allclose(getattr(merged, name), getattr(whole, name), rtol=1e-12, atol=1e-12)
    assert math.isclose(merged.rho_L, whole.rho_L)


# -------------------- accept rates --------------------

def test_accept_rates_mle():
    a_s, a_b = estimate_accept_rates(counts_for([2], [8], [1], [8]), phi=0.0, clamp_eps=EPS)
    assert a_s[0] == 0.5
    assert a_b[0] == 1.0 - EPS


def test_accept_rates_shrinkage():
    a_s, a_b = estimate_accept_rates(counts_for([2], [8], [1], [8]), phi=10.0, clamp_eps=EPS)
    assert a_s[0] == pytest.approx(10 / 12, abs=1e-12)
    assert a_b[0] == pytest.approx(17 / 18, abs=1e-12)


def test_accept_rates_large_phi_converge():
    a_s, a_b = estimate_accept_rates(counts_for([2], [8], [1], [8]), phi=1e9, clamp_eps=EPS)
    assert abs(a_s[0] - 0.9) < 1e-6 and abs(a_b[0] - 0.9) < 1e-6


def test_accept_rates_infinite_phi_is_exact():
    a_s, a_b = estimate_accept_rates(counts_for([2], [8], [1], [8]), phi=math.inf, clamp_eps=EPS)
    assert a_s[0] == a_b[0] == 0.9


def test_missing_class_falls_back_to_overall():
    a_s, a_b = estimate_accept_rates(counts_for([0], [4], [0], [1]), phi=0.0, clamp_eps=EPS)
    assert a_s[0] == 0.25 and a_b[0] == 0.25


def test_non_informative_target_gets_mean_rate():
    a_s, a_b = estimate_accept_rates(counts_for([0, 2], [0, 8], [0, 1], [0, 8]), phi=1.0, clamp_eps=EPS)
    assert a_s[0] == a_b[0] == pytest.approx(0.9)


def test_per_target_phi():
    counts = counts_for([2, 2], [8, 8], [1, 1], [8, 8])
    a_s, _ = estimate_accept_rates(counts, ConfidencePriors(phi=np.array([0.0, 10.0])), clamp_eps=EPS)
    assert a_s[0] == 0.5
    assert a_s[1] == pytest.approx(10 / 12)


# -------------------- selection rates --------------------

def test_selection_rates_mle():
    counts = counts_for([3, 7], [1, 99], [0, 0], [0, 0], rho_L_s=10, rho_L_b=100)
    r_s, r_b = estimate_selection_rates(counts, sigma=0.0, clamp_eps=EPS)
    assert r_s[0] == pytest.approx(0.3, abs=1e-15)
    assert r_b[0] == pytest.approx(0.01, abs=1e-15)


def test_selection_rates_large_sigma():
    counts = counts_for([3, 7], [1, 99], [0, 0], [0, 0])
    r_s, r_b = estimate_selection_rates(counts, sigma=1e12, clamp_eps=EPS)
    overall = counts.rho / counts.rho_L
    np.testing.assert_allclose(r_s, overall, atol=1e-9)
    np.testing.assert_allclose(r_b, overall, atol=1e-9)
    r_s, r_b = estimate_selection_rates(counts, sigma=math.inf, clamp_eps=EPS)
    np.testing.assert_array_equal(r_s, r_b)


def test_selection_rates_non_informative_are_equal():
    counts = counts_for([0, 3], [0, 1], [0, 0], [0, 0])
    r_s, r_b = estimate_selection_rates(counts, sigma=2.0, clamp_eps=EPS)
    assert r_s[0] == r_b[0] == EPS


def test_selection_needs_labeled_requests():
    with pytest.raises(EmptyTrainingSet):
        estimate_selection_rates(counts_for([0], [0], [0], [0]), sigma=1.0, clamp_eps=EPS)
    with pytest.raises(EmptyTrainingSet):
        build_rate_table(build_graph(3, []), LabelTable.from_mapping(3, {0: 1.0}), 1.0, 1.0)


# -------------------- rate table --------------------

def _fully_labeled(rng, n=50, m=500):
    graph = random_graph(n, m, rng)
    return graph, LabelTable((rng.random(n) < 0.3).astype(float))


def test_uniform_sigma_rates_sum_to_one(rng):
    graph, labels = _fully_labeled(rng)
    for sigma in (0.0, 3.0, 250.0):
        table = build_rate_table(graph, labels, sigma=sigma, phi=1.0, clamp_eps=0.0)
        assert abs(table.r_s.sum() - 1.0) < 1e-9
        assert abs(table.r_b.sum() - 1.0) < 1e-9


def test_zero_priors_reproduce_raw_ratios(rng):
    graph, labels = _fully_labeled(rng)
    counts = accumulate_counts(graph, labels)
    table = build_rate_table(graph, labels, sigma=0.0, phi=0.0, clamp_eps=0.0)
    np.testing.assert_array_equal(table.r_s, counts.rho_s / counts.rho_L_s)
    np.testing.assert_array_equal(table.r_b, counts.rho_b / counts.rho_L_b)
    has_s = counts.rho_s > 0
    has_b = counts.rho_b > 0
    np.testing.assert_array_equal(table.a_s[has_s], counts.f_s[has_s] / counts.rho_s[has_s])
    np.testing.assert_array_equal(table.a_b[has_b], counts.f_b[has_b] / counts.rho_b[has_b])


def test_shrinkage_is_monotone(rng):
    for _ in range(20):
        n = 40
        rho_s = rng.integers(0, 20, n).astype(float)
        rho_b = rng.integers(0, 50, n).astype(float)
        counts = counts_for(rho_s, rho_b, np.floor(rho_s * rng.random(n)), np.floor(rho_b * rng.random(n)))
        prev_a, prev_r = None, None
        for prior in (0.0, 0.5, 2.0, 10.0, 100.0, 1e4):
            a_s, a_b = estimate_accept_rates(counts, prior, clamp_eps=0.0)
            r_s, r_b = estimate_selection_rates(counts, prior, clamp_eps=0.0)
            gap_a, gap_r = np.abs(a_s - a_b), np.abs(r_s - r_b)
            if prev_a is not None:
                assert np.all(gap_a <= prev_a + 1e-12)
                assert np.all(gap_r <= prev_r + 1e-12)
            prev_a, prev_r = gap_a, gap_r


def test_rate_table_bounds_and_globals(small_world):
    graph, _, training = small_world
    table = build_rate_table(graph, training, sigma=5.0, phi=1.0, clamp_eps=EPS)
    for rates in (table.a_s, table.a_b):
        assert np.all((rates >= EPS) & (rates <= 1 - EPS))
    for rates in (table.r_s, table.r_b):
        assert np.all((rates >= EPS) & (rates <= 1.0))
    assert table.n_targets == int(table.informative.sum())
    assert table.prior_fake_fraction == pytest.approx(training.fake_fraction())
    assert set(table.globals()) >= {"n_targets", "rho_L", "rho_L_s", "rho_L_b"}
