#!/usr/bin/env python3
"""
rate_estimator.py

Per-target selection rates (how often fakes / reals pick a target) and
accept rates (how often the target accepts fakes / reals), estimated from the
requests sent by labeled users and shrunk toward the target's overall rate by
the confidence priors sigma (selection) and phi (response).

Counts are real-valued so probabilistic labels need no separate code path:
a sender labeled 0.25 counts as 0.25 of a fake plus 0.75 of a real.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from utils.errors import EmptyTrainingSet, InvalidParameter

logger = logging.getLogger(__name__)


# -------------------- Counts --------------------

@dataclass(frozen=True, eq=False)
class TargetCounts:
    """Per-target request/accept mass from known senders, plus sender totals."""
    rho_s: np.ndarray
    rho_b: np.ndarray
    f_s: np.ndarray
    f_b: np.ndarray
    rho_L_s: float
    rho_L_b: float

    @property
    def n(self):
        return int(self.rho_s.shape[0])

    @property
    def rho(self):
        return self.rho_s + self.rho_b

    @property
    def f(self):
        return self.f_s + self.f_b

    @property
    def rho_L(self):
        return self.rho_L_s + self.rho_L_b

    def merge(self, other):
        """Associative merge of two partial accumulations."""
        return TargetCounts(rho_s=self.rho_s + other.rho_s, rho_b=self.rho_b + other.rho_b,
                            f_s=self.f_s + other.f_s, f_b=self.f_b + other.f_b,
                            rho_L_s=self.rho_L_s + other.rho_L_s,
                            rho_L_b=self.rho_L_b + other.rho_L_b)


def _gather_slice(graph, label_values, known, start, stop):
    src = graph.sources[start:stop]
    sel = known[src]
    return (graph.targets[start:stop][sel], label_values[src[sel]],
            graph.responses[start:stop][sel] == 1)


def _reduce(n, tgt, w_s, acc):
    w_b = 1.0 - w_s
    return TargetCounts(
        rho_s=np.bincount(tgt, weights=w_s, minlength=n).astype(float),
        rho_b=np.bincount(tgt, weights=w_b, minlength=n).astype(float),
        f_s=np.bincount(tgt[acc], weights=w_s[acc], minlength=n).astype(float),
        f_b=np.bincount(tgt[acc], weights=w_b[acc], minlength=n).astype(float),
        rho_L_s=float(w_s.sum()),
        rho_L_b=float(w_b.sum()))


def accumulate_counts(graph, labels, shards=1, threads=1):
    """
    Count requests (rho) and acceptances (f) each target received from
    known fakes and known reals. Edges from unknown senders are ignored.

    Args:
        graph (RequestGraph): Friend requests
        labels (LabelTable): Training labels sized for the graph
        shards (int): Number of contiguous edge shards gathered separately
        threads (int): Worker count for the shards

    Returns:
        TargetCounts: reduced once over the shards concatenated in edge order,
        so the floating-point sums do not depend on the shard count
    """
    if labels.n != graph.n:
        raise InvalidParameter(f"labels sized {labels.n} for a graph of {graph.n} nodes")

    known = labels.known_mask
    values = np.nan_to_num(labels.values, nan=0.0)
    m = graph.num_edges
    shards = max(1, min(int(shards), max(m, 1)))
    bounds = np.linspace(0, m, shards + 1).astype(np.int64)

    def work(k):
        return _gather_slice(graph, values, known, bounds[k], bounds[k + 1])

    if shards == 1:
        return _reduce(graph.n, *work(0))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        parts = list(executor.map(work, range(shards)))
    tgt, w_s, acc = (np.concatenate(column) for column in zip(*parts))
    return _reduce(graph.n, tgt, w_s, acc)


# -------------------- Priors --------------------

@dataclass(frozen=True, eq=False)
class ConfidencePriors:
    """sigma (selection) and phi (response) pseudo-counts, scalar or per target.

    math.inf is legal and selects the exact limit: both per-class rates equal
    the target's overall rate.
    """
    sigma: object = 0.0
    phi: object = 0.0

    @staticmethod
    def _resolve(value, n, name):
        arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
        if np.any(np.isnan(arr)) or np.any(arr < 0):
            raise InvalidParameter(f"{name} must be non-negative")
        return arr

    def sigma_for(self, n):
        return self._resolve(self.sigma, n, "sigma")

    def phi_for(self, n):
        return self._resolve(self.phi, n, "phi")


# -------------------- Estimators --------------------

def _shrink(num, den, prior, overall):
    """
    (num + prior * overall) / (den + prior), with the limits resolved:
    prior = inf gives overall; a zero denominator gives overall.
    """
    out = overall.copy()
    finite = np.isfinite(prior)
    denom = den + np.where(finite, prior, 0.0)
    ok = finite & (denom > 0)
    out[ok] = (num[ok] + prior[ok] * overall[ok]) / denom[ok]
    return out


def mean_accept_rate(counts):
    """Share of labeled requests accepted, over all targets (0.5 with no data)."""
    total_rho = float(counts.rho.sum())
    return float(counts.f.sum()) / total_rho if total_rho > 0 else 0.5


def estimate_accept_rates(counts, phi, clamp_eps):
    """
    Accept rates a_s (toward fakes) and a_b (toward reals) per target.

    Non-informative targets (no labeled request received) get the global
    mean accept rate for both classes, so they cancel in the posterior.

    Args:
        counts (TargetCounts): Accumulated counts
        phi: ConfidencePriors or scalar / per-target array of phi values
        clamp_eps (float): Rates are clamped into [eps, 1 - eps]

    Returns:
        tuple: (a_s, a_b) arrays
    """
    if isinstance(phi, ConfidencePriors):
        phi = phi.phi_for(counts.n)
    else:
        phi = ConfidencePriors(phi=phi).phi_for(counts.n)

    rho, f = counts.rho, counts.f
    informative = rho > 0
    mean_rate = mean_accept_rate(counts)

    overall = np.full(counts.n, mean_rate)
    overall[informative] = f[informative] / rho[informative]

    a_s = _shrink(counts.f_s, counts.rho_s, phi, overall)
    a_b = _shrink(counts.f_b, counts.rho_b, phi, overall)
    a_s[~informative] = mean_rate
    a_b[~informative] = mean_rate
    return _clamp(a_s, clamp_eps, 1.0 - clamp_eps), _clamp(a_b, clamp_eps, 1.0 - clamp_eps)


def estimate_selection_rates(counts, sigma, clamp_eps):
    """
    Selection rates r_s, r_b: probability that a fake / real request lands on
    each target. With uniform sigma the unclamped rates of each class sum to 1.

    Raises:
        EmptyTrainingSet: no request was sent by a labeled user
    """
    if isinstance(sigma, ConfidencePriors):
        sigma = sigma.sigma_for(counts.n)
    else:
        sigma = ConfidencePriors(sigma=sigma).sigma_for(counts.n)

    rho_L = counts.rho_L
    if rho_L <= 0:
        raise EmptyTrainingSet("no request sent by a labeled user")

    overall = counts.rho / rho_L
    r_s = _shrink(counts.rho_s, np.full(counts.n, counts.rho_L_s), sigma, overall)
    r_b = _shrink(counts.rho_b, np.full(counts.n, counts.rho_L_b), sigma, overall)

    # Both stay at 0 before clamping, hence equal after it
    informative = counts.rho > 0
    r_s[~informative] = 0.0
    r_b[~informative] = 0.0
    return _clamp(r_s, clamp_eps, 1.0), _clamp(r_b, clamp_eps, 1.0)


def _clamp(values, low, high):
    return np.clip(values, max(low, 0.0), min(high, 1.0))


# -------------------- Rate table --------------------

@dataclass(frozen=True, eq=False)
class RateTable:
    r_s: np.ndarray
    r_b: np.ndarray
    a_s: np.ndarray
    a_b: np.ndarray
    informative: np.ndarray
    rho_L: float
    rho_L_s: float
    rho_L_b: float
    clamp_eps: float = 1e-6
    prior_fake_fraction: float = float('nan')
    mean_accept_rate: float = 0.5  # rate given to non-informative targets

    @property
    def n(self):
        return int(self.r_s.shape[0])

    @property
    def n_targets(self):
        return int(self.informative.sum())

    def entry(self, target):
        return (float(self.r_s[target]), float(self.r_b[target]),
                float(self.a_s[target]), float(self.a_b[target]), bool(self.informative[target]))

    def globals(self):
        return {
            "n_targets": self.n_targets,
            "rho_L": self.rho_L,
            "rho_L_s": self.rho_L_s,
            "rho_L_b": self.rho_L_b,
            "clamp_eps": self.clamp_eps,
            "prior_fake_fraction": self.prior_fake_fraction,
            "mean_accept_rate": self.mean_accept_rate,
        }


def build_rate_table(graph, labels, sigma, phi, clamp_eps=1e-6, shards=1, threads=1):
    """
    Train the per-target rates: one pass over edges, one pass over targets.

    A clamp_eps of 0 leaves the rates unclamped (scoring then needs eps > 0).
    """
    if not 0.0 <= clamp_eps < 0.5:
        raise InvalidParameter(f"clamp_eps must lie in [0, 0.5), got {clamp_eps}")

    counts = accumulate_counts(graph, labels, shards=shards, threads=threads)
    r_s, r_b = estimate_selection_rates(counts, sigma, clamp_eps)
    a_s, a_b = estimate_accept_rates(counts, phi, clamp_eps)

    table = RateTable(r_s=r_s, r_b=r_b, a_s=a_s, a_b=a_b,
                      informative=counts.rho > 0,
                      rho_L=counts.rho_L, rho_L_s=counts.rho_L_s, rho_L_b=counts.rho_L_b,
                      clamp_eps=clamp_eps, prior_fake_fraction=labels.fake_fraction(),
                      mean_accept_rate=mean_accept_rate(counts))
    logger.info(f"✅ Rate table built: {table.n_targets} informative targets, "
                f"{counts.rho_L:.0f} labeled requests")
    return table
