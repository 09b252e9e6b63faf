#!/usr/bin/env python3
"""
synthgraphs.py

Synthetic labeled friend-request networks: four request generators
(Erdos-Renyi, configuration model, two-class SBM, k-out preferential
attachment), parametric response profiles and Bernoulli accept/reject
simulation, assembled by build_scenario into (graph, true labels, training
labels).

Every random step draws from its own numpy Generator spawned from one
SeedSequence, so changing one stage (say the generator) does not shift the
draws of the others. The networkx generators (Erdos-Renyi, SBM) take an
integer seed drawn from the edge stream.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import networkx as nx
import numpy as np
from scipy.optimize import brentq

from utils.config import (Config, get_bool, get_float, get_int, get_list, get_str, require)
from utils.errors import (ConfigError, DegenerateSequence, InsufficientTargets, InvalidParameter)
from utils.graph_model import LabelTable, build_graph

logger = logging.getLogger(__name__)

FAKE, REAL = 0, 1  # block matrix / attraction weight indices
HOTSPOT_POOLS = ("any", "indiscriminate")


class Generator(str, Enum):
    ERDOS_RENYI = "erdos_renyi"
    CONFIGURATION = "configuration"
    SBM = "sbm"
    PREFERENTIAL_ATTACHMENT = "preferential_attachment"


# -------------------- Classes --------------------

@dataclass(frozen=True, eq=False)
class ClassAssignment:
    is_fake: np.ndarray
    fraction_fake: float

    @classmethod
    def exact(cls, n, fraction_fake, rng):
        """round(fraction_fake * n) fakes chosen uniformly."""
        if not 0.0 <= fraction_fake <= 1.0:
            raise InvalidParameter(f"fraction_fake must lie in [0, 1], got {fraction_fake}")
        is_fake = np.zeros(n, dtype=bool)
        is_fake[rng.permutation(n)[:int(round(fraction_fake * n))]] = True
        return cls(is_fake=is_fake, fraction_fake=fraction_fake)

    @property
    def n(self):
        return int(self.is_fake.shape[0])

    @property
    def fakes(self):
        return np.flatnonzero(self.is_fake)

    @property
    def reals(self):
        return np.flatnonzero(~self.is_fake)

    def class_index(self):
        """FAKE (0) or REAL (1) per node."""
        return np.where(self.is_fake, FAKE, REAL)

    def as_labels(self):
        return LabelTable(self.is_fake.astype(float))


# -------------------- Response profiles --------------------

@dataclass(frozen=True)
class BetaSpec:
    """Beta(alpha, beta), or a point mass when `point` is set."""
    alpha: float = 1.0
    beta: float = 1.0
    point: Optional[float] = None

    def __post_init__(self):
        if self.point is not None:
            if not 0.0 <= self.point <= 1.0:
                raise InvalidParameter(f"point rate must lie in [0, 1], got {self.point}")
        elif not (self.alpha > 0 and self.beta > 0):
            raise InvalidParameter(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self):
        return self.point if self.point is not None else self.alpha / (self.alpha + self.beta)

    def sample(self, rng, size):
        if self.point is not None:
            return np.full(size, float(self.point))
        return rng.beta(self.alpha, self.beta, size)

    @classmethod
    def parse(cls, text):
        """'beta:8,2' or 'const:0.5'."""
        kind, _, args = text.partition(':')
        try:
            if kind.strip() == 'beta':
                alpha, beta = (float(v) for v in args.split(','))
                return cls(alpha, beta)
            if kind.strip() == 'const':
                return cls(point=float(args))
        except ValueError:
            pass
        raise ValueError(f"expected 'beta:a,b' or 'const:c', got {text!r}")

    def __str__(self):
        return f"const:{self.point:g}" if self.point is not None else f"beta:{self.alpha:g},{self.beta:g}"


@dataclass(frozen=True)
class ProfileParams:
    """
    Accept-rate distributions per node class.

    Real nodes fall into three groups: cautious (real_a_b / real_a_s, accept
    reals, turn fakes down), gullible (gullible_a_b / gullible_a_s, the other
    way round) and indiscriminate (one common rate for both classes).
    """
    real_a_b: BetaSpec
    real_a_s: BetaSpec
    fake_a_b: BetaSpec
    fake_a_s: BetaSpec
    indiscriminate_fraction: float = 0.0
    indiscriminate_rate: BetaSpec = BetaSpec(5.0, 5.0)
    gullible_fraction: float = 0.0
    gullible_a_b: BetaSpec = BetaSpec(1.0, 9.0)
    gullible_a_s: BetaSpec = BetaSpec(79.0, 1.0)

    def __post_init__(self):
        for name in ("indiscriminate_fraction", "gullible_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameter(f"{name} must lie in [0, 1], got {value}")
        if self.indiscriminate_fraction + self.gullible_fraction > 1.0:
            raise InvalidParameter("indiscriminate_fraction + gullible_fraction must not exceed 1, got "
                                   f"{self.indiscriminate_fraction} + {self.gullible_fraction}")

    @classmethod
    def discriminating(cls, indiscriminate_fraction=0.3, gullible_fraction=0.35):
        # 30% of the reals indiscriminate, the rest split evenly between
        # near-deterministic cautious and gullible targets
        return cls(real_a_b=BetaSpec(79, 1), real_a_s=BetaSpec(1, 79),
                   fake_a_b=BetaSpec(2, 2), fake_a_s=BetaSpec(8, 2),
                   indiscriminate_fraction=indiscriminate_fraction,
                   gullible_fraction=gullible_fraction)

    @classmethod
    def uniform(cls):
        flat = BetaSpec(1, 1)
        return cls(flat, flat, flat, flat)

    def to_dict(self):
        return {
            "real_a_b": str(self.real_a_b), "real_a_s": str(self.real_a_s),
            "fake_a_b": str(self.fake_a_b), "fake_a_s": str(self.fake_a_s),
            "indiscriminate_fraction": self.indiscriminate_fraction,
            "indiscriminate_rate": str(self.indiscriminate_rate),
            "gullible_fraction": self.gullible_fraction,
            "gullible_a_b": str(self.gullible_a_b), "gullible_a_s": str(self.gullible_a_s),
        }


PROFILE_PRESETS = {
    "discriminating": ProfileParams.discriminating,
    "uniform": ProfileParams.uniform,
}


@dataclass(frozen=True, eq=False)
class ResponseProfile:
    a_b: np.ndarray  # accept probability for requests from reals
    a_s: np.ndarray  # accept probability for requests from fakes


def assign_profiles(classes, profile_params, rng):
    """
    Draw (a_B, a_S) per node from its class's distribution pair. Exactly
    round(indiscriminate_fraction * reals) real nodes then get a_B = a_S,
    and round(gullible_fraction * reals) others the gullible pair.
    """
    n = classes.n
    a_b = np.empty(n)
    a_s = np.empty(n)
    reals, fakes = classes.reals, classes.fakes
    a_b[reals] = profile_params.real_a_b.sample(rng, reals.size)
    a_s[reals] = profile_params.real_a_s.sample(rng, reals.size)
    a_b[fakes] = profile_params.fake_a_b.sample(rng, fakes.size)
    a_s[fakes] = profile_params.fake_a_s.sample(rng, fakes.size)

    n_same = int(round(profile_params.indiscriminate_fraction * reals.size))
    n_gullible = min(int(round(profile_params.gullible_fraction * reals.size)), reals.size - n_same)
    if n_same + n_gullible == 0:
        return ResponseProfile(a_b=a_b, a_s=a_s)

    order = rng.permutation(reals)
    same = np.sort(order[:n_same])
    gullible = np.sort(order[n_same:n_same + n_gullible])
    common = profile_params.indiscriminate_rate.sample(rng, same.size)
    a_b[same] = common
    a_s[same] = common
    a_b[gullible] = profile_params.gullible_a_b.sample(rng, gullible.size)
    a_s[gullible] = profile_params.gullible_a_s.sample(rng, gullible.size)
    return ResponseProfile(a_b=a_b, a_s=a_s)


def simulate_responses(edges, classes, profiles, rng):
    """
    Accept edge (i, j) with probability a_B[j] if i is real, a_S[j] if fake.

    Returns:
        RequestGraph
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    src, tgt = edges[:, 0], edges[:, 1]
    p_accept = np.where(classes.is_fake[src], profiles.a_s[tgt], profiles.a_b[tgt])
    responses = (rng.random(src.shape[0]) < p_accept).astype(np.int64)
    return build_graph(classes.n, np.column_stack([src, tgt, responses]))


# -------------------- Erdos-Renyi and SBM --------------------

def _sorted_edges(src, tgt):
    order = np.lexsort((tgt, src))
    return np.column_stack([src[order], tgt[order]]).astype(np.int64)


def _nx_seed(rng):
    """Integer seed for networkx generators, drawn from the stage's stream."""
    return int(rng.integers(0, 2**31))


def _edge_array(digraph):
    edges = np.array(list(digraph.edges()), dtype=np.int64).reshape(-1, 2)
    return _sorted_edges(edges[:, 0], edges[:, 1])


def gen_erdos_renyi(n, edge_prob, rng):
    """Every ordered pair (i, j), i != j, independently with probability edge_prob."""
    if not 0.0 < edge_prob <= 1.0:
        raise InvalidParameter(f"edge_prob must lie in (0, 1], got {edge_prob}")
    # geometric skipping, O(n + m)
    digraph = nx.fast_gnp_random_graph(n, edge_prob, seed=_nx_seed(rng), directed=True)
    return _edge_array(digraph)


def default_block_matrix(classes, k, real_ratio=4.0, fake_ratio=4.0):
    """
    2x2 request probabilities (rows = sender class, cols = target class,
    index 0 = fake, 1 = real) giving expected out-degree k for both classes.

    Reals send real_ratio times more requests to reals than to fakes; fakes
    send fake_ratio times more to reals than to fakes.
    """
    n_f, n_r = int(classes.is_fake.sum()), int((~classes.is_fake).sum())

    def p(mass, pool):
        return min(1.0, mass / pool) if pool > 0 else 0.0

    matrix = np.zeros((2, 2))
    matrix[REAL, REAL] = p(k * real_ratio / (real_ratio + 1.0), n_r - 1)
    matrix[REAL, FAKE] = p(k / (real_ratio + 1.0), n_f)
    matrix[FAKE, REAL] = p(k * fake_ratio / (fake_ratio + 1.0), n_r)
    matrix[FAKE, FAKE] = p(k / (fake_ratio + 1.0), n_f - 1)
    return matrix


def gen_sbm(n, class_assignment, block_matrix, rng):
    """Pair (i, j) with probability block_matrix[class(i)][class(j)]."""
    block_matrix = np.asarray(block_matrix, dtype=float)
    if block_matrix.shape != (2, 2) or block_matrix.min() < 0 or block_matrix.max() > 1:
        raise InvalidParameter("block matrix must be 2x2 with entries in [0, 1]")
    if class_assignment.n != n:
        raise InvalidParameter(f"class assignment sized {class_assignment.n}, expected {n}")

    # blocks in FAKE, REAL order, nodelist maps them back to node ids
    fakes, reals = class_assignment.fakes, class_assignment.reals
    digraph = nx.stochastic_block_model([fakes.size, reals.size], block_matrix.tolist(),
                                        nodelist=np.concatenate([fakes, reals]).tolist(),
                                        seed=_nx_seed(rng), directed=True, selfloops=False, sparse=True)
    return _edge_array(digraph)


# -------------------- Configuration model --------------------

def _truncated_power_law(exponent, low, high):
    support = np.arange(low, high + 1, dtype=float)
    log_w = -exponent * np.log(support)
    weights = np.exp(log_w - log_w.max())
    return support, weights / weights.sum()


def powerlaw_degree_sampler(exponent=2.5, cap=50, minimum=1, mean=None):
    """
    Discrete power law P(d) ~ d^-exponent on [minimum, cap].

    When `mean` is given the exponent is solved for so that the expected
    degree equals it (brentq on the truncated mean).
    """
    if not 0 <= minimum <= cap:
        raise InvalidParameter(f"degree range [{minimum}, {cap}] is empty")

    if mean is not None:
        low = max(minimum, 1)
        if not low <= mean <= cap:
            raise InvalidParameter(f"mean degree {mean} outside [{low}, {cap}]")
        if mean in (low, cap):
            constant = int(mean)
            return lambda n, rng: np.full(n, constant, dtype=np.int64)

        def gap(gamma):
            support, probs = _truncated_power_law(gamma, low, cap)
            return float(support @ probs) - mean

        exponent = brentq(gap, -100.0, 100.0, xtol=1e-10)
        logger.debug(f"Power-law exponent calibrated to {exponent:.4f} for mean degree {mean}")

    support, probs = _truncated_power_law(exponent, max(minimum, 1), cap)
    if minimum == 0:
        # d^-gamma is undefined at 0; zero-degree nodes keep the weight of degree 1
        support = np.concatenate(([0.0], support))
        probs = np.concatenate(([probs[0]], probs))
        probs = probs / probs.sum()

    def sample(n, rng):
        return rng.choice(support.astype(np.int64), size=n, p=probs)

    sample.exponent = exponent
    return sample


def histogram_degree_sampler(degrees, counts):
    """Empirical sampler: degree d drawn with probability counts[d] / sum(counts)."""
    degrees = np.asarray(degrees, dtype=np.int64)
    counts = np.asarray(counts, dtype=float)
    if degrees.size == 0 or degrees.min() < 0 or counts.min() < 0 or counts.sum() <= 0:
        raise InvalidParameter("degree histogram needs non-negative degrees and a positive count")
    probs = counts / counts.sum()

    def sample(n, rng):
        return rng.choice(degrees, size=n, p=probs)

    return sample


def gen_configuration(n, degree_sampler, rng, max_retries=Config.MAX_STUB_RETRIES):
    """
    Directed configuration model with d_i used as both out- and in-degree.

    Stubs are matched by a random permutation. A self-loop or repeated pair is
    repaired by swapping its in-stub with a random other pairing (up to
    max_retries attempts), then dropped.

    Returns:
        tuple: (edges as an (m, 2) array, number of dropped pairings)

    Raises:
        DegenerateSequence: total stub count is 0
    """
    degrees = np.asarray(degree_sampler(n, rng), dtype=np.int64)
    if degrees.shape != (n,) or degrees.min(initial=0) < 0:
        raise InvalidParameter("degree sampler must return n non-negative integers")
    if degrees.sum() == 0:
        raise DegenerateSequence("degree sequence has no stubs")

    out_stubs = np.repeat(np.arange(n, dtype=np.int64), degrees)
    in_stubs = rng.permutation(out_stubs)
    m = out_stubs.size

    keys = out_stubs * n + in_stubs
    _, first = np.unique(keys, return_index=True)
    valid = np.zeros(m, dtype=bool)
    valid[first] = True
    valid &= out_stubs != in_stubs
    existing = set(keys[valid].tolist())
    dropped = np.zeros(m, dtype=bool)

    for c in np.flatnonzero(~valid).tolist():
        if valid[c]:
            continue  # repaired as the partner of an earlier swap
        for _ in range(max_retries):
            o = int(rng.integers(m))
            if o == c or dropped[o]:
                continue
            new_c = int(out_stubs[c]) * n + int(in_stubs[o])
            new_o = int(out_stubs[o]) * n + int(in_stubs[c])
            if out_stubs[c] == in_stubs[o] or out_stubs[o] == in_stubs[c] or new_c == new_o:
                continue
            old_o = int(keys[o]) if valid[o] else None
            if (new_c in existing and new_c != old_o) or (new_o in existing and new_o != old_o):
                continue
            if old_o is not None:
                existing.discard(old_o)
            existing.update((new_c, new_o))
            in_stubs[c], in_stubs[o] = in_stubs[o], in_stubs[c]
            keys[c], keys[o] = new_c, new_o
            valid[c] = valid[o] = True
            break
        else:
            dropped[c] = True

    n_dropped = int(dropped.sum())
    if n_dropped:
        logger.info(f"⚠️  Configuration model dropped {n_dropped} of {m} stub pairings")
    return _sorted_edges(out_stubs[valid], in_stubs[valid]), n_dropped


# -------------------- Preferential attachment --------------------

def default_attraction_weights(n, rng, popularity_shape=1.0, hotspot_fraction=0.1, hotspot_boost=10.0,
                               candidates=None):
    """
    Per-target (alpha_fake, alpha_real) weights: a Gamma popularity shared by
    both classes; a random hotspot subset has its fake-sender weight boosted.

    Hotspots are drawn from `candidates` when given (all of them if there are
    fewer than round(hotspot_fraction * n)), from every node otherwise.
    """
    base = rng.gamma(popularity_shape, 1.0, n)
    fake = base.copy()
    pool = np.arange(n) if candidates is None else np.asarray(candidates, dtype=np.int64)
    hot = rng.choice(pool, min(pool.size, int(round(hotspot_fraction * n))), replace=False)
    fake[hot] *= hotspot_boost
    return np.column_stack([fake, base])


def _weighted_subset(cdf, total, k, exclude, rng, weights, rounds=8):
    """
    k distinct indices drawn proportional to weight among the remaining ones.

    Repeated draws with replacement, dropping repeats, follow the same law as
    successive sampling without replacement. If repeats dominate, the
    remainder is completed with the Gumbel top-k trick on the leftover weights.
    """
    chosen = []
    seen = {exclude}
    for _ in range(rounds):
        need = k - len(chosen)
        if need == 0:
            return chosen
        draws = np.searchsorted(cdf, rng.random(2 * need + 4) * total, side='right')
        for t in draws[draws < cdf.size].tolist():
            if t not in seen:
                seen.add(t)
                chosen.append(t)
                if len(chosen) == k:
                    return chosen

    left = weights.copy()
    left[list(seen)] = 0.0
    positive = np.flatnonzero(left > 0)
    keys = np.log(left[positive]) - np.log(-np.log(rng.random(positive.size)))
    need = k - len(chosen)
    top = positive[np.argsort(-keys, kind='stable')[:need]]
    chosen.extend(top.tolist())
    return chosen


def gen_preferential_attachment(n, class_assignment, k, attraction_weights, rng):
    """
    Each node sends exactly k requests to distinct targets drawn proportional
    to attraction_weights[:, class(sender)] (column 0 = fake senders,
    column 1 = real senders), never to itself.

    Raises:
        InsufficientTargets: a sender has fewer than k eligible targets
    """
    if k < 1:
        raise InvalidParameter(f"k must be at least 1, got {k}")
    if k > n - 1:
        raise InsufficientTargets(f"k={k} exceeds the {n - 1} possible targets")
    weights = np.asarray(attraction_weights, dtype=float)
    if weights.shape != (n, 2) or weights.min() < 0:
        raise InvalidParameter("attraction weights must be a non-negative (n, 2) array")

    cls = class_assignment.class_index()
    cdfs = [np.cumsum(weights[:, c]) for c in (FAKE, REAL)]
    positives = [weights[:, c] > 0 for c in (FAKE, REAL)]
    counts = [int(p.sum()) for p in positives]

    sources = np.repeat(np.arange(n, dtype=np.int64), k)
    targets = np.empty(n * k, dtype=np.int64)
    for i in range(n):
        c = cls[i]
        eligible = counts[c] - int(positives[c][i])
        if eligible < k:
            raise InsufficientTargets(f"node {i} has {eligible} eligible targets, needs {k}")
        if eligible == k:
            picks = np.flatnonzero(positives[c])
            picks = picks[picks != i]
        else:
            picks = _weighted_subset(cdfs[c], cdfs[c][-1], k, i, rng, weights[:, c])
        targets[i * k:(i + 1) * k] = picks
    return _sorted_edges(sources, targets)


# -------------------- Scenario --------------------

@dataclass
class SynthConfig:
    generator: Generator = Generator.ERDOS_RENYI
    n: int = 10000
    fraction_fake: float = 0.05
    fraction_known: float = 0.8
    mean_degree: float = 20.0
    edge_prob: Optional[float] = None           # erdos_renyi; default mean_degree / (n - 1)
    degree_exponent: float = 2.5                # configuration
    degree_min: Optional[int] = None            # default max(1, mean_degree // 4)
    degree_cap: Optional[int] = None            # default min(n - 1, 4 * mean_degree)
    calibrate_degree: bool = True
    degree_histogram: Optional[str] = None
    sbm_matrix: Optional[list] = None           # [ff, fr, rf, rr]
    sbm_real_ratio: float = 4.0
    sbm_fake_ratio: float = 4.0
    pa_popularity_shape: float = 1.0
    pa_hotspot_fraction: float = 0.1
    pa_hotspot_boost: float = 10.0
    pa_hotspot_pool: str = "indiscriminate"     # any | indiscriminate (reals with a_B = a_S)
    profiles: ProfileParams = field(default_factory=ProfileParams.discriminating)
    stratified: bool = False
    max_stub_retries: int = Config.MAX_STUB_RETRIES
    rng_seed: int = 0

    def __post_init__(self):
        self.generator = Generator(self.generator)
        if self.n < 2:
            raise InvalidParameter(f"n must be at least 2, got {self.n}")
        for name in ("fraction_fake", "fraction_known", "pa_hotspot_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameter(f"{name} must lie in [0, 1], got {value}")
        if self.edge_prob is not None and not 0.0 < self.edge_prob <= 1.0:
            raise InvalidParameter(f"edge_prob must lie in (0, 1], got {self.edge_prob}")
        if self.mean_degree <= 0:
            raise InvalidParameter(f"mean_degree must be positive, got {self.mean_degree}")
        if self.pa_hotspot_pool not in HOTSPOT_POOLS:
            raise InvalidParameter(f"pa_hotspot_pool must be one of {HOTSPOT_POOLS}, got {self.pa_hotspot_pool!r}")

    def with_overrides(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, Enum):
                value = value.value
            elif isinstance(value, ProfileParams):
                value = value.to_dict()
            out[name] = value
        return out

    # key=value file keys (besides the dataclass field names)
    PROFILE_KEYS = ("profile_real_a_b", "profile_real_a_s", "profile_fake_a_b", "profile_fake_a_s")
    MIX_KEYS = ("indiscriminate_fraction", "indiscriminate_rate", "gullible_fraction",
                "gullible_a_b", "gullible_a_s")

    @classmethod
    def from_mapping(cls, entries, extra_keys=()):
        """
        Build from load_kv_file() entries. `generator` is required; unknown
        keys are rejected unless listed in extra_keys.
        """
        known = set(cls.__dataclass_fields__) | {"seed", "profile", "split"} | set(cls.MIX_KEYS)
        known |= set(cls.PROFILE_KEYS) | set(extra_keys)
        known -= {"profiles", "stratified", "rng_seed"}
        for key, (_, line_no) in entries.items():
            if key not in known:
                raise ConfigError(f"unknown key '{key}'", key=key, line=line_no)

        generator = require(entries, "generator")
        try:
            generator = Generator(generator)
        except ValueError:
            raise ConfigError(f"unknown generator {generator!r}", key="generator",
                              line=entries["generator"][1])

        preset_name = get_str(entries, "profile", "discriminating")
        if preset_name not in PROFILE_PRESETS:
            raise ConfigError(f"unknown profile preset {preset_name!r}", key="profile",
                              line=entries["profile"][1])
        preset = PROFILE_PRESETS[preset_name]()
        specs = {}
        for key in cls.PROFILE_KEYS:
            attr = key[len("profile_"):]
            specs[attr] = _get_beta(entries, key, getattr(preset, attr))
        profiles = ProfileParams(
            indiscriminate_fraction=get_float(entries, "indiscriminate_fraction",
                                              preset.indiscriminate_fraction),
            indiscriminate_rate=_get_beta(entries, "indiscriminate_rate", preset.indiscriminate_rate),
            gullible_fraction=get_float(entries, "gullible_fraction", preset.gullible_fraction),
            gullible_a_b=_get_beta(entries, "gullible_a_b", preset.gullible_a_b),
            gullible_a_s=_get_beta(entries, "gullible_a_s", preset.gullible_a_s),
            **specs)

        split = get_str(entries, "split", "uniform")
        if split not in ("uniform", "stratified"):
            raise ConfigError(f"split must be 'uniform' or 'stratified', got {split!r}",
                              key="split", line=entries["split"][1])

        defaults = cls.__dataclass_fields__
        kwargs = dict(
            generator=generator,
            n=get_int(entries, "n", defaults["n"].default),
            fraction_fake=get_float(entries, "fraction_fake", defaults["fraction_fake"].default),
            fraction_known=get_float(entries, "fraction_known", defaults["fraction_known"].default),
            mean_degree=get_float(entries, "mean_degree", defaults["mean_degree"].default),
            edge_prob=get_float(entries, "edge_prob", None),
            degree_exponent=get_float(entries, "degree_exponent", defaults["degree_exponent"].default),
            degree_min=get_int(entries, "degree_min", None),
            degree_cap=get_int(entries, "degree_cap", None),
            calibrate_degree=get_bool(entries, "calibrate_degree", True),
            degree_histogram=get_str(entries, "degree_histogram", None),
            sbm_matrix=get_list(entries, "sbm_matrix", None, item=float),
            sbm_real_ratio=get_float(entries, "sbm_real_ratio", defaults["sbm_real_ratio"].default),
            sbm_fake_ratio=get_float(entries, "sbm_fake_ratio", defaults["sbm_fake_ratio"].default),
            pa_popularity_shape=get_float(entries, "pa_popularity_shape",
                                          defaults["pa_popularity_shape"].default),
            pa_hotspot_fraction=get_float(entries, "pa_hotspot_fraction",
                                          defaults["pa_hotspot_fraction"].default),
            pa_hotspot_boost=get_float(entries, "pa_hotspot_boost", defaults["pa_hotspot_boost"].default),
            pa_hotspot_pool=get_str(entries, "pa_hotspot_pool", defaults["pa_hotspot_pool"].default),
            profiles=profiles,
            stratified=(split == "stratified"),
            max_stub_retries=get_int(entries, "max_stub_retries", Config.MAX_STUB_RETRIES),
            rng_seed=get_int(entries, "seed", 0),
        )
        if kwargs["sbm_matrix"] is not None and len(kwargs["sbm_matrix"]) != 4:
            raise ConfigError("sbm_matrix expects four values ff,fr,rf,rr", key="sbm_matrix",
                              line=entries["sbm_matrix"][1])
        return cls(**kwargs)


def _get_beta(entries, key, default):
    if key not in entries:
        return default
    value, line_no = entries[key]
    try:
        return BetaSpec.parse(value)
    except (ValueError, InvalidParameter) as e:
        raise ConfigError(f"key '{key}': {e}", key=key, line=line_no)


@dataclass(eq=False)
class Scenario:
    config: SynthConfig
    graph: object
    true_labels: LabelTable
    training_labels: LabelTable
    classes: ClassAssignment
    profiles: ResponseProfile
    dropped_stubs: int = 0

    @property
    def test_nodes(self):
        return np.flatnonzero(~self.training_labels.known_mask)


def _known_mask(classes, fraction_known, stratified, rng):
    n = classes.n
    known = np.zeros(n, dtype=bool)
    if stratified:
        for members in (classes.fakes, classes.reals):
            picked = rng.permutation(members)[:int(round(fraction_known * members.size))]
            known[picked] = True
    else:
        known[rng.permutation(n)[:int(round(fraction_known * n))]] = True
    return known


def _generate_edges(config, classes, profiles, rng, aux_rng):
    n, k = config.n, config.mean_degree
    if config.generator == Generator.ERDOS_RENYI:
        prob = config.edge_prob if config.edge_prob is not None else min(1.0, k / (n - 1))
        return gen_erdos_renyi(n, prob, rng), 0

    if config.generator == Generator.CONFIGURATION:
        if config.degree_histogram:
            from utils.tsv_io import read_degree_histogram
            sampler = histogram_degree_sampler(*read_degree_histogram(config.degree_histogram))
        else:
            low = config.degree_min if config.degree_min is not None else max(1, int(k // 4))
            cap = config.degree_cap if config.degree_cap is not None else int(min(n - 1, 4 * k))
            sampler = powerlaw_degree_sampler(config.degree_exponent, cap, low,
                                              mean=k if config.calibrate_degree else None)
        return gen_configuration(n, sampler, rng, config.max_stub_retries)

    if config.generator == Generator.SBM:
        if config.sbm_matrix is not None:
            matrix = np.asarray(config.sbm_matrix, dtype=float).reshape(2, 2)
        else:
            matrix = default_block_matrix(classes, k, config.sbm_real_ratio, config.sbm_fake_ratio)
        return gen_sbm(n, classes, matrix, rng), 0

    candidates = None
    if config.pa_hotspot_pool == "indiscriminate":
        candidates = np.flatnonzero(~classes.is_fake & (profiles.a_b == profiles.a_s))
        if candidates.size == 0:
            logger.warning("⚠️  No indiscriminate real node, PA hotspots drawn from all nodes")
            candidates = None
    weights = default_attraction_weights(n, aux_rng, config.pa_popularity_shape,
                                         config.pa_hotspot_fraction, config.pa_hotspot_boost, candidates)
    return gen_preferential_attachment(n, classes, int(round(k)), weights, rng), 0


def build_scenario(config):
    """
    Full pipeline: classes, profiles, edges, responses, then hide the labels
    of a (1 - fraction_known) share of the nodes.

    Returns:
        Scenario: graph, true_labels and training_labels plus the intermediates
    """
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(config.rng_seed).spawn(6)]
    class_rng, edge_rng, profile_rng, response_rng, split_rng, aux_rng = streams

    classes = ClassAssignment.exact(config.n, config.fraction_fake, class_rng)
    profiles = assign_profiles(classes, config.profiles, profile_rng)
    edges, dropped = _generate_edges(config, classes, profiles, edge_rng, aux_rng)
    graph = simulate_responses(edges, classes, profiles, response_rng)

    true_labels = classes.as_labels()
    known = _known_mask(classes, config.fraction_known, config.stratified, split_rng)
    training_labels = true_labels.restricted_to(known)

    logger.info(f"🧪 Scenario {config.generator.value} n={config.n} seed={config.rng_seed}: "
                f"{graph.num_edges} requests, {int(classes.is_fake.sum())} fakes, "
                f"{int((~known).sum())} unknown")
    return Scenario(config=config, graph=graph, true_labels=true_labels,
                    training_labels=training_labels, classes=classes,
                    profiles=profiles, dropped_stubs=dropped)
