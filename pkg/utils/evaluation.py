#!/usr/bin/env python3
"""
evaluation.py

ROC AUC (average ranks for ties), AUC per sent-request bucket, and the
robustness sweeps: label noise, generator x mean degree x fake prevalence.

A sweep point is one (parameters, seed) pair. Points are independent and run
in a thread pool; the report keeps them in grid order so equal seeds give
byte-identical JSON and TSV.
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from utils.baselines import BaselineMethod, score_baseline
from utils.config import (Config, FINE_BUCKETS, get_float, get_int, get_list, get_str, require)
from utils.errors import ConfigError, InvalidParameter, SingleClass
from utils.graph_model import inject_label_noise
from utils.rate_estimator import build_rate_table
from utils.scorer import ScoringConfig, Variant, score_all
from utils.synthgraphs import Generator, SynthConfig, build_scenario

logger = logging.getLogger(__name__)

SYBIL_EDGE = "sybil_edge"
SYBIL_EDGE_TR = "sybil_edge_tr"
SYBIL_SCAR = "sybil_scar"  # best of -C and -D per bucket
METHODS = (SYBIL_EDGE, SYBIL_EDGE_TR) + tuple(m.value for m in BaselineMethod) + (SYBIL_SCAR,)
DEFAULT_METHODS = (SYBIL_EDGE, SYBIL_EDGE_TR, BaselineMethod.REJECT_RATE.value)


# -------------------- AUC --------------------

def roc_auc(scores, truth):
    """
    Mann-Whitney AUC: chance that a random fake outscores a random real,
    ties counting one half.

    Args:
        scores: per-node scores, higher = more fake-like
        truth: per-node fake flags

    Raises:
        SingleClass: no fake or no real among the nodes
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    n_pos = int(truth.sum())
    n_neg = int(truth.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(f"AUC needs both classes, got {n_pos} fakes and {n_neg} reals")
    ranks = rankdata(scores, method='average')
    r_pos = float(ranks[truth].sum())
    return (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


# -------------------- Buckets --------------------

def parse_buckets(text):
    """
    '0:5,6:10,...,46:' -> [(0, 5), (6, 10), ..., (46, None)].

    Ranges must start at 0, be contiguous and end open.
    """
    buckets = []
    for part in (p.strip() for p in str(text).split(',')):
        if not part:
            continue
        low, sep, high = part.partition(':')
        try:
            low = int(low)
            high = int(high) if high.strip() else None
        except ValueError:
            raise InvalidParameter(f"bad bucket {part!r}, expected low:high or low:")
        if not sep or (high is not None and high < low):
            raise InvalidParameter(f"bad bucket {part!r}")
        buckets.append((low, high))

    if not buckets or buckets[0][0] != 0:
        raise InvalidParameter("buckets must start at 0")
    for (_, high), (low, _) in zip(buckets, buckets[1:]):
        if high is None or low != high + 1:
            raise InvalidParameter("buckets must be contiguous and non-overlapping")
    if buckets[-1][1] is not None:
        raise InvalidParameter("last bucket must be open-ended (e.g. '46:')")
    return buckets


def bucket_label(bucket):
    low, high = bucket
    return f"{low}-{high}" if high is not None else f"{low}+"


def bucket_by_out_degree(graph, test_nodes, buckets):
    """Split test nodes by sent-request count; one ascending id array per bucket."""
    test_nodes = np.asarray(test_nodes, dtype=np.int64)
    degree = graph.out_degree[test_nodes]
    out = []
    for low, high in buckets:
        mask = degree >= low
        if high is not None:
            mask &= degree <= high
        out.append(test_nodes[mask])
    return out


@dataclass(frozen=True)
class BucketRow:
    low: int
    high: Optional[int]
    n_fakes: int
    n_reals: int
    auc: Optional[float]  # None = undefined (a class is missing)

    @property
    def label(self):
        return bucket_label((self.low, self.high))


@dataclass(frozen=True)
class BucketedAUC:
    buckets: List[BucketRow]
    overall_auc: Optional[float]

    def to_dict(self):
        return {
            "overall_auc": self.overall_auc,
            "buckets": [{"bucket": b.label, "n_fakes": b.n_fakes, "n_reals": b.n_reals, "auc": b.auc}
                        for b in self.buckets],
        }


def _auc_or_none(scores, truth):
    try:
        return roc_auc(scores, truth)
    except SingleClass:
        return None


def bucketed_auc(graph, test_nodes, scores, truth, buckets):
    """
    Args:
        graph (RequestGraph): for out-degrees
        test_nodes: scored node ids
        scores: scores aligned with test_nodes
        truth: fake flags aligned with test_nodes
        buckets: parsed bucket ranges

    Returns:
        BucketedAUC
    """
    test_nodes = np.asarray(test_nodes, dtype=np.int64)
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    degree = graph.out_degree[test_nodes]

    rows = []
    for low, high in buckets:
        mask = degree >= low
        if high is not None:
            mask &= degree <= high
        n_fakes = int(truth[mask].sum())
        rows.append(BucketRow(low, high, n_fakes, int(mask.sum()) - n_fakes,
                              _auc_or_none(scores[mask], truth[mask])))
    return BucketedAUC(buckets=rows, overall_auc=_auc_or_none(scores, truth))


def best_of(first, second):
    """Per-bucket maximum of two results (undefined stays undefined)."""
    def pick(a, b):
        if a is None:
            return b
        return a if b is None else max(a, b)

    rows = [BucketRow(a.low, a.high, a.n_fakes, a.n_reals, pick(a.auc, b.auc))
            for a, b in zip(first.buckets, second.buckets)]
    return BucketedAUC(buckets=rows, overall_auc=pick(first.overall_auc, second.overall_auc))


# -------------------- Methods --------------------

@dataclass(frozen=True)
class MethodParams:
    sigma: float = Config.SIGMA
    phi: float = Config.PHI
    clamp_eps: float = Config.CLAMP_EPS
    prior: Optional[float] = None  # None = training fake fraction

    def to_dict(self):
        return {"sigma": self.sigma, "phi": self.phi, "clamp_eps": self.clamp_eps, "prior": self.prior}


def score_method(graph, training_labels, method, test_nodes, params=MethodParams(),
                 rates=None, monitor=None):
    """
    Fake-likeness scores of one method for `test_nodes` (which must be the
    unknown nodes of training_labels for the SybilEdge variants).

    Returns:
        np.ndarray aligned with test_nodes
    """
    test_nodes = np.asarray(test_nodes, dtype=np.int64)
    if method in (SYBIL_EDGE, SYBIL_EDGE_TR):
        if rates is None:
            rates = build_rate_table(graph, training_labels, params.sigma, params.phi, params.clamp_eps)
        variant = Variant.FULL if method == SYBIL_EDGE else Variant.RESPONSE_ONLY
        table = score_all(graph, rates, training_labels,
                          ScoringConfig(prior=params.prior, variant=variant, clamp_eps=params.clamp_eps),
                          monitor=monitor)
        lookup = table.score_map()
        return np.array([lookup[int(v)] for v in test_nodes])
    return score_baseline(graph, training_labels, method, nodes=test_nodes).scores


def evaluate_methods(graph, training_labels, true_labels, methods, buckets,
                     params=MethodParams(), monitor=None):
    """BucketedAUC per method on the unknown nodes of training_labels."""
    test_nodes = np.flatnonzero(~training_labels.known_mask)
    truth = true_labels.values[test_nodes] == 1.0

    rates = None
    if SYBIL_EDGE in methods or SYBIL_EDGE_TR in methods:
        rates = build_rate_table(graph, training_labels, params.sigma, params.phi, params.clamp_eps)

    results = {}
    cache = {}

    def run(name):
        if name not in cache:
            scores = score_method(graph, training_labels, name, test_nodes, params, rates, monitor)
            cache[name] = bucketed_auc(graph, test_nodes, scores, truth, buckets)
        return cache[name]

    for method in methods:
        if method not in METHODS:
            raise InvalidParameter(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
        if method == SYBIL_SCAR:
            results[method] = best_of(run(BaselineMethod.SYBIL_SCAR_C.value),
                                      run(BaselineMethod.SYBIL_SCAR_D.value))
        else:
            results[method] = run(method)
    return results


# -------------------- Reports --------------------

@dataclass(frozen=True)
class PointResult:
    params: dict
    seed: int
    method: str
    result: BucketedAUC


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    seeds: List[int]
    points: List[PointResult] = field(default_factory=list)
    runtime: dict = field(default_factory=dict)  # kept out of to_json()

    def to_dict(self):
        return {
            "kind": self.kind,
            "config": self.config,
            "seeds": list(self.seeds),
            "points": [{"params": p.params, "seed": p.seed, "method": p.method, **p.result.to_dict()}
                       for p in self.points],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_frame(self):
        """One row per point, seed, method and bucket (bucket 'all' = overall)."""
        rows = []
        for p in self.points:
            base = {**p.params, "seed": p.seed, "method": p.method}
            for b in p.result.buckets:
                rows.append({**base, "bucket": b.label, "n_fakes": b.n_fakes,
                             "n_reals": b.n_reals, "auc": b.auc})
            rows.append({**base, "bucket": "all",
                         "n_fakes": sum(b.n_fakes for b in p.result.buckets),
                         "n_reals": sum(b.n_reals for b in p.result.buckets),
                         "auc": p.result.overall_auc})
        return pd.DataFrame(rows)

    def summary_frame(self):
        """Mean / stdev / count of AUC over seeds per grid point, method and bucket."""
        frame = self.to_frame()
        if frame.empty:
            return frame
        keys = [c for c in frame.columns if c not in ("seed", "n_fakes", "n_reals", "auc")]
        frame["auc"] = frame["auc"].astype(float)
        grouped = frame.groupby(keys, sort=False, dropna=False)["auc"]
        summary = grouped.agg(auc_mean="mean", auc_std="std", n_seeds="count").reset_index()
        summary["auc_std"] = summary["auc_std"].fillna(0.0)
        return summary

    def to_tsv(self):
        return self.summary_frame().to_csv(sep='\t', index=False, lineterminator='\n', na_rep='NA')

    def mean_auc(self, method, **params):
        """Mean overall AUC across seeds for the points matching `params`."""
        values = [p.result.overall_auc for p in self.points
                  if p.method == method and all(p.params.get(k) == v for k, v in params.items())
                  and p.result.overall_auc is not None]
        return float(np.mean(values)) if values else math.nan

    def series(self, method, parameter):
        """parameter value -> mean overall AUC."""
        values = sorted({p.params[parameter] for p in self.points if parameter in p.params},
                        key=lambda v: (str(type(v)), v))
        return {v: self.mean_auc(method, **{parameter: v}) for v in values}


def _run_points(tasks, threads):
    if threads <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(task) for task in tasks]
        return [f.result() for f in futures]


def _noise_seed(seed, index):
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def run_noise_sweep(scenario_config, methods, flip_probs, seeds, buckets=None,
                    params=MethodParams(), threads=1, monitor=None):
    """
    For each seed: build the scenario once, then for each flip probability
    flip training labels, retrain, rescore and compare against clean truth.
    """
    buckets = buckets or parse_buckets(FINE_BUCKETS)

    def task(seed, flip_index, flip_prob):
        def run():
            scenario = build_scenario(scenario_config.with_overrides(rng_seed=seed))
            noisy = inject_label_noise(scenario.training_labels, flip_prob, _noise_seed(seed, flip_index))
            results = evaluate_methods(scenario.graph, noisy, scenario.true_labels, methods,
                                       buckets, params, monitor)
            logger.info(f"🧪 noise={flip_prob} seed={seed} done")
            return [PointResult({"flip_prob": flip_prob}, seed, m, results[m]) for m in methods]
        return run

    tasks = [task(seed, i, p) for i, p in enumerate(flip_probs) for seed in seeds]
    points = [pt for batch in _run_points(tasks, threads) for pt in batch]
    report = ExperimentReport(kind="noise",
                              config={"scenario": scenario_config.to_dict(), "methods": list(methods),
                                      "flip_probs": list(flip_probs), "params": params.to_dict(),
                                      "buckets": [bucket_label(b) for b in buckets]},
                              seeds=list(seeds), points=points)
    logger.info(f"📊 Noise sweep: {len(flip_probs)} levels x {len(seeds)} seeds")
    return report


def run_generator_sweep(scenario_config, generators, mean_degrees, fake_fractions, methods, seeds,
                        buckets=None, params=MethodParams(), threads=1, monitor=None):
    """Full cross product generator x mean degree x fake fraction, repeated per seed."""
    buckets = buckets or parse_buckets(FINE_BUCKETS)
    grid = list(product([Generator(g) for g in generators], mean_degrees, fake_fractions))

    def task(generator, degree, fraction, seed):
        def run():
            config = scenario_config.with_overrides(generator=generator, mean_degree=degree,
                                                    fraction_fake=fraction, rng_seed=seed)
            scenario = build_scenario(config)
            results = evaluate_methods(scenario.graph, scenario.training_labels, scenario.true_labels,
                                       methods, buckets, params, monitor)
            point = {"generator": generator.value, "mean_degree": degree, "fraction_fake": fraction}
            return [PointResult(point, seed, m, results[m]) for m in methods]
        return run

    tasks = [task(g, d, f, s) for g, d, f in grid for s in seeds]
    points = [pt for batch in _run_points(tasks, threads) for pt in batch]
    report = ExperimentReport(kind="grid",
                              config={"scenario": scenario_config.to_dict(), "methods": list(methods),
                                      "generators": [Generator(g).value for g in generators],
                                      "mean_degrees": list(mean_degrees),
                                      "fake_fractions": list(fake_fractions),
                                      "params": params.to_dict(),
                                      "buckets": [bucket_label(b) for b in buckets]},
                              seeds=list(seeds), points=points)
    logger.info(f"📊 Generator sweep: {len(grid)} grid points x {len(seeds)} seeds")
    return report


# -------------------- Sweep configuration files --------------------

SWEEP_KEYS = ("sweep", "methods", "seeds", "flip_probs", "generators", "mean_degrees",
              "fake_fractions", "buckets", "sigma", "phi", "clamp_eps", "prior")


@dataclass
class SweepSpec:
    kind: str
    scenario: SynthConfig
    methods: List[str]
    seeds: List[int]
    buckets: list
    params: MethodParams
    flip_probs: List[float] = field(default_factory=list)
    generators: List[str] = field(default_factory=list)
    mean_degrees: List[float] = field(default_factory=list)
    fake_fractions: List[float] = field(default_factory=list)


def parse_sweep_config(entries):
    """
    Sweep description from load_kv_file() entries: `sweep` (noise | grid)
    plus the scenario keys understood by SynthConfig.from_mapping.
    """
    kind = require(entries, "sweep")
    if kind not in ("noise", "grid"):
        raise ConfigError(f"sweep must be 'noise' or 'grid', got {kind!r}", key="sweep",
                          line=entries["sweep"][1])

    scenario_entries = dict(entries)
    if "generator" not in scenario_entries:
        scenario_entries["generator"] = (Generator.ERDOS_RENYI.value, 0)
    scenario = SynthConfig.from_mapping(scenario_entries, extra_keys=SWEEP_KEYS)

    methods = get_list(entries, "methods", list(DEFAULT_METHODS))
    for method in methods:
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}", key="methods", line=entries["methods"][1])

    try:
        buckets = parse_buckets(get_str(entries, "buckets", Config.BUCKETS))
    except InvalidParameter as e:
        raise ConfigError(str(e), key="buckets", line=entries.get("buckets", (None, None))[1])

    spec = SweepSpec(
        kind=kind,
        scenario=scenario,
        methods=methods,
        seeds=get_list(entries, "seeds", list(Config.SEEDS), item=int),
        buckets=buckets,
        params=MethodParams(sigma=get_float(entries, "sigma", Config.SIGMA),
                            phi=get_float(entries, "phi", Config.PHI),
                            clamp_eps=get_float(entries, "clamp_eps", Config.CLAMP_EPS),
                            prior=get_float(entries, "prior", None)),
    )
    if kind == "noise":
        spec.flip_probs = get_list(entries, "flip_probs", [0.0, 0.1, 0.2, 0.3], item=float)
    else:
        spec.generators = get_list(entries, "generators", [scenario.generator.value])
        for g in spec.generators:
            if g not in {x.value for x in Generator}:
                raise ConfigError(f"unknown generator {g!r}", key="generators",
                                  line=entries["generators"][1])
        spec.mean_degrees = get_list(entries, "mean_degrees", [scenario.mean_degree], item=float)
        spec.fake_fractions = get_list(entries, "fake_fractions", [scenario.fraction_fake], item=float)
    return spec


def run_sweep(spec, threads=1, monitor=None):
    if spec.kind == "noise":
        return run_noise_sweep(spec.scenario, spec.methods, spec.flip_probs, spec.seeds,
                               spec.buckets, spec.params, threads, monitor)
    return run_generator_sweep(spec.scenario, spec.generators, spec.mean_degrees, spec.fake_fractions,
                               spec.methods, spec.seeds, spec.buckets, spec.params, threads, monitor)
