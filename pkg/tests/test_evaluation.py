import json

import numpy as np
import pytest

from utils.config import COARSE_BUCKETS, FINE_BUCKETS
from utils.errors import ConfigError, InvalidParameter, SingleClass
from utils.evaluation import (DEFAULT_METHODS, SYBIL_EDGE, SYBIL_EDGE_TR, SYBIL_SCAR, BucketedAUC,
                              BucketRow, MethodParams, best_of, bucket_by_out_degree, bucketed_auc,
                              evaluate_methods, parse_buckets, parse_sweep_config, roc_auc,
                              run_generator_sweep, run_noise_sweep)
from utils.graph_model import build_graph
from utils.performance_monitor import PerformanceMonitor
from utils.synthgraphs import Generator, SynthConfig, build_scenario

TINY = SynthConfig(generator=Generator.ERDOS_RENYI, n=400, mean_degree=10.0, fraction_fake=0.1)


def _brute_force_auc(scores, truth):
    pos, neg = scores[truth], scores[~truth]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return wins / (pos.size * neg.size)


# -------------------- AUC --------------------

def test_auc_examples():
    assert roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert roc_auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5
    assert roc_auc([0.9, 0.4, 0.4, 0.1], [1, 1, 0, 0]) == pytest.approx(0.875)
    with pytest.raises(SingleClass):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(SingleClass):
        roc_auc([], [])


def test_auc_matches_pair_counting(rng):
    for _ in range(100):
        size = int(rng.integers(2, 2001))
        scores = rng.integers(0, 6, size).astype(float)
        truth = rng.random(size) < rng.uniform(0.05, 0.95)
        truth[0], truth[1] = True, False
        assert abs(roc_auc(scores, truth) - _brute_force_auc(scores, truth)) < 1e-12


def test_auc_rank_invariance_and_complement(rng):
    scores = rng.normal(size=500)
    truth = rng.random(500) < 0.3
    auc = roc_auc(scores, truth)
    assert roc_auc(np.exp(scores), truth) == pytest.approx(auc, abs=1e-12)
    assert roc_auc(3 * scores + 1, truth) == pytest.approx(auc, abs=1e-12)
    assert roc_auc(-scores, truth) == pytest.approx(1 - auc, abs=1e-12)


# -------------------- Buckets --------------------

def test_parse_bucket_schemes():
    fine = parse_buckets(FINE_BUCKETS)
    assert fine[0] == (0, 5) and fine[-1] == (46, None) and len(fine) == 10
    assert parse_buckets(COARSE_BUCKETS) == [(0, 10), (11, 20), (21, 45), (46, None)]


@pytest.mark.parametrize("text", ["1:5,6:", "0:5,7:", "0:5,6:10", "0:5,3:", "", "a:b,5:", "0:5;6:"])
def test_parse_buckets_rejects(text):
    with pytest.raises(InvalidParameter):
        parse_buckets(text)


def test_bucket_by_out_degree():
    edges = [(0, t, 1) for t in range(1, 47)] + [(1, 2, 0)]
    graph = build_graph(50, edges)
    buckets = parse_buckets(FINE_BUCKETS)
    groups = bucket_by_out_degree(graph, [0, 1, 3], buckets)
    assert list(groups[0]) == [1, 3]
    assert list(groups[-1]) == [0]
    assert sum(len(g) for g in groups) == 3


def test_bucketed_auc_undefined_bucket():
    edges = [(0, 5, 1), (1, 5, 1), (2, 6, 1)] + [(3, t, 0) for t in range(7, 20)]
    graph = build_graph(20, edges)
    result = bucketed_auc(graph, [0, 1, 2, 3], [0.9, 0.1, 0.5, 0.7], [True, False, True, False],
                          parse_buckets(COARSE_BUCKETS))
    first, second = result.buckets[0], result.buckets[1]
    assert (first.n_fakes, first.n_reals) == (2, 1)
    assert first.auc == 1.0
    assert (second.n_fakes, second.n_reals, second.auc) == (0, 1, None)
    assert result.overall_auc == roc_auc([0.9, 0.1, 0.5, 0.7], [True, False, True, False])
    assert result.to_dict()["buckets"][1]["auc"] is None


def test_best_of():
    a = BucketedAUC([BucketRow(0, 5, 1, 1, 0.6), BucketRow(6, None, 0, 1, None)], 0.7)
    b = BucketedAUC([BucketRow(0, 5, 1, 1, 0.8), BucketRow(6, None, 0, 1, None)], 0.65)
    best = best_of(a, b)
    assert [row.auc for row in best.buckets] == [0.8, None]
    assert best.overall_auc == 0.7


# -------------------- Methods --------------------

def test_evaluate_methods_on_tiny_scenario():
    scenario = build_scenario(TINY.with_overrides(rng_seed=3))
    monitor = PerformanceMonitor()
    methods = list(DEFAULT_METHODS) + ["sybil_rank", SYBIL_SCAR]
    results = evaluate_methods(scenario.graph, scenario.training_labels, scenario.true_labels,
                               methods, parse_buckets(COARSE_BUCKETS), monitor=monitor)
    assert set(results) == set(methods)
    for result in results.values():
        assert result.overall_auc is None or 0.0 <= result.overall_auc <= 1.0
        assert sum(b.n_fakes + b.n_reals for b in result.buckets) == scenario.test_nodes.size
    assert results[SYBIL_EDGE].overall_auc > 0.6
    assert monitor.get_count("edges_visited") > 0
    with pytest.raises(InvalidParameter):
        evaluate_methods(scenario.graph, scenario.training_labels, scenario.true_labels,
                         ["magic"], parse_buckets(COARSE_BUCKETS))


# -------------------- Sweeps --------------------

def test_noise_sweep_zero_flip_equals_clean_run():
    buckets = parse_buckets(COARSE_BUCKETS)
    methods = [SYBIL_EDGE, SYBIL_EDGE_TR]
    report = run_noise_sweep(TINY, methods, [0.0, 0.3], [1, 2], buckets)
    assert len(report.points) == 2 * 2 * len(methods)

    clean = build_scenario(TINY.with_overrides(rng_seed=1))
    expected = evaluate_methods(clean.graph, clean.training_labels, clean.true_labels, methods, buckets)
    for point in report.points:
        if point.params["flip_prob"] == 0.0 and point.seed == 1:
            assert point.result == expected[point.method]


def test_coin_flip_labels_carry_no_signal():
    # flip_prob 0.5 makes every training label independent of the truth
    world = TINY.with_overrides(n=2000)
    report = run_noise_sweep(world, [SYBIL_EDGE], [0.0, 0.5], [1, 2, 3, 4, 5],
                             parse_buckets(COARSE_BUCKETS))
    assert report.mean_auc(SYBIL_EDGE, flip_prob=0.0) > 0.75
    assert abs(report.mean_auc(SYBIL_EDGE, flip_prob=0.5) - 0.5) < 0.12


def test_sweeps_are_reproducible_across_threads():
    buckets = parse_buckets(COARSE_BUCKETS)
    one = run_noise_sweep(TINY, [SYBIL_EDGE], [0.0, 0.2], [1, 2], buckets, threads=1)
    again = run_noise_sweep(TINY, [SYBIL_EDGE], [0.0, 0.2], [1, 2], buckets, threads=3)
    assert one.to_json() == again.to_json()
    assert one.to_tsv() == again.to_tsv()
    assert json.loads(one.to_json())["kind"] == "noise"


def test_generator_sweep_grid():
    buckets = parse_buckets(COARSE_BUCKETS)
    report = run_generator_sweep(TINY, ["erdos_renyi", "sbm"], [4.0, 8.0], [0.1],
                                 ["sybil_edge", "reject_rate"], [1], buckets)
    assert len(report.points) == 2 * 2 * 1 * 2
    summary = report.summary_frame()
    overall = summary[summary.bucket == "all"]
    assert len(overall) == 8
    assert set(overall.n_seeds) == {1}
    assert set(report.series("sybil_edge", "mean_degree")) == {4.0, 8.0}


def test_single_point_grid():
    report = run_generator_sweep(TINY, ["erdos_renyi"], [10.0], [0.1], ["sybil_edge"], [1, 2],
                                 parse_buckets(COARSE_BUCKETS))
    summary = report.summary_frame()
    assert len(summary[summary.bucket == "all"]) == 1
    assert int(summary[summary.bucket == "all"].n_seeds.iloc[0]) == 2
    header = report.to_tsv().splitlines()[0].split("\t")
    assert header == ["generator", "mean_degree", "fraction_fake", "method", "bucket",
                      "auc_mean", "auc_std", "n_seeds"]


def test_parse_sweep_config():
    spec = parse_sweep_config({"sweep": ("noise", 1), "n": ("300", 2), "seeds": ("1,2", 3)})
    assert spec.kind == "noise"
    assert spec.scenario.generator == Generator.ERDOS_RENYI
    assert spec.flip_probs == [0.0, 0.1, 0.2, 0.3]
    assert spec.seeds == [1, 2]
    assert spec.methods == list(DEFAULT_METHODS)
    assert spec.params == MethodParams()

    grid = parse_sweep_config({"sweep": ("grid", 1), "generators": ("sbm, configuration", 2),
                               "mean_degrees": ("5, 10", 3), "sigma": ("inf", 4)})
    assert grid.generators == ["sbm", "configuration"]
    assert grid.mean_degrees == [5.0, 10.0]
    assert grid.params.sigma == float("inf")


def test_parse_sweep_config_errors():
    with pytest.raises(ConfigError) as err:
        parse_sweep_config({"n": ("300", 1)})
    assert err.value.key == "sweep"
    with pytest.raises(ConfigError) as err:
        parse_sweep_config({"sweep": ("grid", 1), "methods": ("sybil_edge, oracle", 2)})
    assert err.value.line == 2
    with pytest.raises(ConfigError):
        parse_sweep_config({"sweep": ("grid", 1), "buckets": ("1:5,6:", 2)})
