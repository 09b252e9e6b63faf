#!/usr/bin/env python3
"""
scorer.py

Posterior fake probability of new users from their outgoing requests.

Each informative target j contributes two log-likelihood ratios:
    selection: log r_s[j] - log r_b[j]
    response:  log A(x, S) - log A(x, B),  A(1, .) = a[j],  A(0, .) = 1 - a[j]
and the posterior log-odds are logit(prior) plus their sum. Sums use
math.fsum (correctly rounded), so the result does not depend on edge order or
thread count.
"""

import decimal
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy.special import expit

from utils.errors import InvalidParameter, ProductFormOverflow, UnknownNode
from utils.graph_model import split_known_unknown

logger = logging.getLogger(__name__)

ORACLE_MAX_EDGES = 200
ORACLE_PRECISION = 60


class Variant(str, Enum):
    FULL = "full"
    SELECTION_ONLY = "selection_only"
    RESPONSE_ONLY = "response_only"  # SybilEdgeTR


@dataclass
class ScoringConfig:
    """
    prior: global fake prior or one value per node (None = use the rate
    table's training fake fraction).
    """
    prior: object = None
    variant: Variant = Variant.FULL
    clamp_eps: float = 1e-6
    explain: bool = False

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if not 0.0 <= self.clamp_eps < 0.5:
            raise InvalidParameter(f"clamp_eps must lie in [0, 0.5), got {self.clamp_eps}")

    def priors_for(self, n, fallback=None):
        prior = self.prior if self.prior is not None else fallback
        if prior is None or (np.isscalar(prior) and math.isnan(prior)):
            raise InvalidParameter("no prior given and none recorded in the rate table")
        values = np.broadcast_to(np.asarray(prior, dtype=float), (n,))
        if np.any(np.isnan(values)) or values.min(initial=0.0) < 0.0 or values.max(initial=0.0) > 1.0:
            raise InvalidParameter("prior must lie in [0, 1]")
        return values


@dataclass(frozen=True)
class EdgeContribution:
    target: int
    response: int
    delta_selection: float
    delta_response: float


@dataclass(frozen=True)
class ScoreEntry:
    node: int
    p_fake: float
    log_odds: float
    n_edges_used: int
    contributions: Optional[List[EdgeContribution]] = None


CONTRIBUTION_COLUMNS = ["node_id", "target_id", "response", "delta_selection", "delta_response"]


@dataclass(eq=False)
class ScoreTable:
    nodes: np.ndarray
    p_fake: np.ndarray
    log_odds: np.ndarray
    n_edges_used: np.ndarray
    contributions: Optional[pd.DataFrame] = None
    edges_visited: int = 0
    variant: Variant = Variant.FULL
    _index: dict = field(default=None, repr=False)

    def __len__(self):
        return int(self.nodes.shape[0])

    def position(self, node):
        if self._index is None:
            self._index = {int(v): i for i, v in enumerate(self.nodes.tolist())}
        return self._index[int(node)]

    def entry(self, node):
        i = self.position(node)
        contributions = None
        if self.contributions is not None:
            rows = self.contributions[self.contributions["node_id"] == int(node)]
            contributions = [EdgeContribution(int(r.target_id), int(r.response),
                                              float(r.delta_selection), float(r.delta_response))
                             for r in rows.itertuples(index=False)]
        return ScoreEntry(node=int(node), p_fake=float(self.p_fake[i]),
                          log_odds=float(self.log_odds[i]),
                          n_edges_used=int(self.n_edges_used[i]),
                          contributions=contributions)

    def score_map(self):
        return dict(zip(self.nodes.tolist(), self.p_fake.tolist()))

    def to_frame(self):
        return pd.DataFrame({
            "node_id": self.nodes,
            "p_fake": self.p_fake,
            "log_odds": self.log_odds,
            "n_edges_used": self.n_edges_used,
        })

    @classmethod
    def concat(cls, parts, variant):
        if not parts:
            return cls.empty(variant)
        frames = [p.contributions for p in parts if p.contributions is not None]
        return cls(nodes=np.concatenate([p.nodes for p in parts]),
                   p_fake=np.concatenate([p.p_fake for p in parts]),
                   log_odds=np.concatenate([p.log_odds for p in parts]),
                   n_edges_used=np.concatenate([p.n_edges_used for p in parts]),
                   contributions=pd.concat(frames, ignore_index=True) if frames else None,
                   edges_visited=sum(p.edges_visited for p in parts),
                   variant=variant)

    @classmethod
    def empty(cls, variant=Variant.FULL, explain=False):
        return cls(nodes=np.zeros(0, dtype=np.int64), p_fake=np.zeros(0),
                   log_odds=np.zeros(0), n_edges_used=np.zeros(0, dtype=np.int64),
                   contributions=pd.DataFrame(columns=CONTRIBUTION_COLUMNS) if explain else None,
                   variant=variant)


# -------------------- Per-edge evidence --------------------

def _clamped(rates, targets, eps):
    r_s = np.clip(rates.r_s[targets], eps, 1.0)
    r_b = np.clip(rates.r_b[targets], eps, 1.0)
    a_s = np.clip(rates.a_s[targets], eps, 1.0 - eps)
    a_b = np.clip(rates.a_b[targets], eps, 1.0 - eps)
    return r_s, r_b, a_s, a_b


def _deltas(rates, targets, responses, variant, eps):
    """Vectorized (delta_selection, delta_response) for a batch of edges."""
    r_s, r_b, a_s, a_b = _clamped(rates, targets, eps)
    with np.errstate(divide='ignore'):
        if variant == Variant.RESPONSE_ONLY:
            d_sel = np.zeros(targets.shape[0])
        else:
            d_sel = np.log(r_s) - np.log(r_b)
        if variant == Variant.SELECTION_ONLY:
            d_resp = np.zeros(targets.shape[0])
        else:
            accepted = responses == 1
            d_resp = np.where(accepted,
                              np.log(a_s) - np.log(a_b),
                              np.log1p(-a_s) - np.log1p(-a_b))
    informative = rates.informative[targets]
    d_sel[~informative] = 0.0
    d_resp[~informative] = 0.0
    return d_sel, d_resp, informative


def edge_log_odds(rates, target, response, variant=Variant.FULL, clamp_eps=1e-6):
    """
    Evidence carried by one request to `target`.

    Returns:
        tuple: (delta_selection, delta_response); (0, 0) for a non-informative target
    """
    d_sel, d_resp, _ = _deltas(rates, np.array([target]), np.array([response]),
                               Variant(variant), clamp_eps)
    return float(d_sel[0]), float(d_resp[0])


# -------------------- Scoring --------------------

def _gather(ptr, order, users):
    """Edge ids of `users` concatenated in user order, plus the per-user lengths."""
    starts = ptr[users]
    lens = ptr[users + 1] - starts
    offsets = np.repeat(starts - (np.cumsum(lens) - lens), lens)
    return order[offsets + np.arange(int(lens.sum()), dtype=np.int64)], lens


def _score_block(graph, rates, users, priors, config):
    """Score a block of users; all per-edge work is vectorized over the block."""
    users = np.asarray(users, dtype=np.int64)
    ids, lens = _gather(graph.out_ptr, graph.out_order_by_target, users)
    targets = graph.targets[ids]
    responses = graph.responses[ids]
    d_sel, d_resp, informative = _deltas(rates, targets, responses, config.variant, config.clamp_eps)

    sel_list, resp_list = d_sel.tolist(), d_resp.tolist()
    log_odds = np.empty(users.shape[0])
    used = np.zeros(users.shape[0], dtype=np.int64)
    bounds = np.concatenate(([0], np.cumsum(lens))).tolist()
    keep = np.zeros(ids.shape[0], dtype=bool)

    for k, user in enumerate(users.tolist()):
        pi = float(priors[user])
        if pi <= 0.0 or pi >= 1.0:
            # The prior decides alone
            log_odds[k] = math.inf if pi >= 1.0 else -math.inf
            continue
        a, b = bounds[k], bounds[k + 1]
        log_odds[k] = math.fsum([math.log(pi) - math.log1p(-pi), *sel_list[a:b], *resp_list[a:b]])
        used[k] = int(informative[a:b].sum())
        keep[a:b] = informative[a:b]

    contributions = None
    if config.explain:
        owner = np.repeat(users, lens)
        contributions = pd.DataFrame({
            "node_id": owner[keep],
            "target_id": targets[keep],
            "response": responses[keep].astype(np.int64),
            "delta_selection": d_sel[keep],
            "delta_response": d_resp[keep],
        }, columns=CONTRIBUTION_COLUMNS)

    return ScoreTable(nodes=users, p_fake=expit(log_odds), log_odds=log_odds,
                      n_edges_used=used, contributions=contributions,
                      edges_visited=int(lens.sum()), variant=config.variant)


def score_user(graph, rates, user, config):
    """
    Posterior for one user.

    Raises:
        UnknownNode: user is not a node of the graph
    """
    if not 0 <= int(user) < graph.n:
        raise UnknownNode(f"node {user} not in graph of {graph.n} nodes")
    priors = config.priors_for(graph.n, rates.prior_fake_fraction)
    table = _score_block(graph, rates, [int(user)], priors, config)
    return table.entry(int(user))


def score_all(graph, rates, labels, config, threads=1, monitor=None):
    """
    Score every unknown node of `labels`, in ascending node id.

    Args:
        graph (RequestGraph): Friend requests
        rates (RateTable): Trained per-target rates
        labels (LabelTable): Training labels; absent labels mark the users to score
        config (ScoringConfig): Prior, variant, clamp and explain settings
        threads (int): Worker count; blocks are reassembled in user order
        monitor (PerformanceMonitor): Optional, receives the edges_visited counter

    Returns:
        ScoreTable
    """
    _, unknown = split_known_unknown(labels)
    if unknown.size == 0:
        logger.warning("⚠️  No unknown users to score")
        return ScoreTable.empty(config.variant, config.explain)

    priors = config.priors_for(graph.n, rates.prior_fake_fraction)
    n_blocks = max(1, min(int(threads), unknown.size))
    blocks = np.array_split(unknown, n_blocks)

    if n_blocks == 1:
        table = _score_block(graph, rates, blocks[0], priors, config)
    else:
        with ThreadPoolExecutor(max_workers=n_blocks) as executor:
            parts = list(executor.map(lambda b: _score_block(graph, rates, b, priors, config), blocks))
        table = ScoreTable.concat(parts, config.variant)

    if monitor is not None:
        monitor.count("edges_visited", table.edges_visited)
        monitor.count("users_scored", len(table))
    logger.info(f"✅ Scored {len(table)} users ({config.variant.value}), "
                f"{table.edges_visited} edges visited")
    return table


# -------------------- Product-form reference --------------------

def product_form_oracle(graph, rates, user, config):
    """
    The posterior evaluated literally as a ratio of products, in extended
    precision decimal arithmetic. Reference for tests only.

    Raises:
        UnknownNode: user is not a node of the graph
        InvalidParameter: more than ORACLE_MAX_EDGES requests
        ProductFormOverflow: a product left the representable range
    """
    if not 0 <= int(user) < graph.n:
        raise UnknownNode(f"node {user} not in graph of {graph.n} nodes")
    ids = graph.out_edge_ids(int(user))
    if ids.size > ORACLE_MAX_EDGES:
        raise InvalidParameter(f"product form limited to {ORACLE_MAX_EDGES} edges, user has {ids.size}")

    pi = float(config.priors_for(graph.n, rates.prior_fake_fraction)[int(user)])
    targets = graph.targets[ids]
    responses = graph.responses[ids]
    keep = rates.informative[targets]
    r_s, r_b, a_s, a_b = _clamped(rates, targets[keep], config.clamp_eps)
    responses = responses[keep]

    ctx = decimal.Context(prec=ORACLE_PRECISION, Emin=-999999, Emax=999999,
                          traps=[decimal.Overflow, decimal.Underflow,
                                 decimal.InvalidOperation, decimal.DivisionByZero])
    try:
        with decimal.localcontext(ctx):
            D = decimal.Decimal
            one = D(1)
            fake = D(pi)
            real = one - D(pi)
            for x, rs, rb, as_, ab in zip(responses.tolist(), r_s.tolist(), r_b.tolist(),
                                          a_s.tolist(), a_b.tolist()):
                if config.variant != Variant.RESPONSE_ONLY:
                    fake *= D(rs)
                    real *= D(rb)
                if config.variant != Variant.SELECTION_ONLY:
                    fake *= D(as_) if x == 1 else one - D(as_)
                    real *= D(ab) if x == 1 else one - D(ab)
            return float(fake / (fake + real))
    except decimal.DecimalException as e:
        raise ProductFormOverflow(f"product form out of range for node {user}: {e!r}") from e
