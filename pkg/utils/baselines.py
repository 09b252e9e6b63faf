#!/usr/bin/env python3
"""
baselines.py

Comparison detectors scored on the same graphs as SybilEdge:
RejectRate, SybilRank-style trust propagation and the SybilSCAR local rule
(-C: one global weight, -D: weight from the receiving node's degree).

SybilRank and SybilSCAR run on the undirected graph of accepted requests.
Every score is oriented so that higher means more fake-like.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from scipy import sparse

from utils.config import Config
from utils.errors import EmptySeedSet, InvalidParameter, UnknownNode
from utils.graph_model import split_known_unknown

logger = logging.getLogger(__name__)

SCAR_MAX_ITERATIONS = 20


class BaselineMethod(str, Enum):
    REJECT_RATE = "reject_rate"
    SYBIL_RANK = "sybil_rank"
    SYBIL_SCAR_C = "sybil_scar_c"
    SYBIL_SCAR_D = "sybil_scar_d"


@dataclass(eq=False)
class BaselineScore:
    method: BaselineMethod
    nodes: np.ndarray
    scores: np.ndarray

    def __len__(self):
        return int(self.nodes.shape[0])

    def score_map(self):
        return dict(zip(self.nodes.tolist(), self.scores.tolist()))

    def to_frame(self):
        return pd.DataFrame({
            "node_id": self.nodes,
            "score": self.scores,
            "method": self.method.value,
        })


# -------------------- RejectRate --------------------

def reject_rate(graph, user):
    """Share of the user's sent requests that were rejected (0 when none sent)."""
    if not 0 <= int(user) < graph.n:
        raise UnknownNode(f"node {user} not in graph of {graph.n} nodes")
    ids = graph.out_edge_ids(int(user))
    if ids.size == 0:
        return 0.0
    return float(np.count_nonzero(graph.responses[ids] == 0)) / ids.size


def reject_rate_all(graph):
    rejected = np.bincount(graph.sources[graph.responses == 0], minlength=graph.n)
    sent = graph.out_degree
    out = np.zeros(graph.n)
    np.divide(rejected, sent, out=out, where=sent > 0)
    return out


# -------------------- Accepted-edge graph --------------------

def accepted_adjacency(graph):
    """
    Symmetric 0/1 CSR matrix of accepted requests; a pair accepted in both
    directions is one undirected edge.
    """
    mask = graph.accepted_mask()
    src, tgt = graph.sources[mask], graph.targets[mask]
    rows = np.concatenate([src, tgt])
    cols = np.concatenate([tgt, src])
    adj = sparse.coo_matrix((np.ones(rows.shape[0]), (rows, cols)), shape=(graph.n, graph.n)).tocsr()
    adj.sum_duplicates()
    adj.data[:] = 1.0
    return adj


def _degrees(adj):
    return np.asarray(adj.sum(axis=1)).ravel()


# -------------------- SybilRank --------------------

def default_iterations(n):
    return int(math.ceil(math.log2(n))) if n > 1 else 0


def propagate_trust(adj, trusted_seeds, iterations=None):
    """
    Raw trust vector after power iteration (before degree normalization).

    Total trust 1.0 starts evenly on the seeds; each round a node splits its
    trust equally among its neighbors. Isolated nodes keep theirs, so the
    total stays 1.0.

    Raises:
        EmptySeedSet: no trusted seed
    """
    n = adj.shape[0]
    seeds = np.unique(np.asarray(list(trusted_seeds), dtype=np.int64))
    if seeds.size == 0:
        raise EmptySeedSet("trust propagation needs at least one trusted seed")
    if seeds.min() < 0 or seeds.max() >= n:
        raise UnknownNode(f"seed outside 0..{n - 1}")
    if iterations is None:
        iterations = default_iterations(n)

    degree = _degrees(adj)
    isolated = degree == 0
    inv_degree = np.zeros(n)
    inv_degree[~isolated] = 1.0 / degree[~isolated]

    trust = np.zeros(n)
    trust[seeds] = 1.0 / seeds.size
    adj_t = adj.T.tocsr()
    for _ in range(int(iterations)):
        trust = adj_t @ (trust * inv_degree) + np.where(isolated, trust, 0.0)
    return trust


def sybil_rank(adj, trusted_seeds, iterations=None):
    """
    Degree-normalized trust (isolated nodes get 0). Higher = more trusted;
    score_baseline negates it.
    """
    trust = propagate_trust(adj, trusted_seeds, iterations)
    degree = _degrees(adj)
    out = np.zeros(adj.shape[0])
    np.divide(trust, degree, out=out, where=degree > 0)
    return out


# -------------------- SybilSCAR --------------------

def _scar_prior(labels, theta_fake, theta_real, theta_unknown):
    q = np.full(labels.n, theta_unknown)
    known = labels.known_mask
    q[known] = theta_real + labels.values[known] * (theta_fake - theta_real)
    return q


def _scar_iterate(adj, q, weights, iterations, tol):
    p = q.copy()
    for step in range(int(iterations)):
        new = np.clip(q + weights * (adj @ (p - 0.5)), 0.0, 1.0)
        delta = float(np.max(np.abs(new - p))) if p.size else 0.0
        p = new
        if delta < tol:
            logger.debug(f"SybilSCAR converged after {step + 1} iterations")
            break
    return p


def sybil_scar_c(adj, labels, weight=None, iterations=SCAR_MAX_ITERATIONS,
                 theta_fake=Config.SCAR_THETA_FAKE, theta_real=Config.SCAR_THETA_REAL,
                 theta_unknown=Config.SCAR_THETA_UNKNOWN, tol=Config.SCAR_TOL):
    """
    Local rule p <- clip(q + w * A (p - 0.5), 0, 1) with one weight for all
    edges, by default half the inverse of the average degree.

    Returns:
        np.ndarray: posterior fake probability per node
    """
    if weight is None:
        avg_degree = float(_degrees(adj).mean()) if adj.shape[0] else 0.0
        weight = 0.5 / avg_degree if avg_degree > 0 else 0.5
    if not weight > 0:
        raise InvalidParameter(f"SybilSCAR weight must be positive, got {weight}")

    q = _scar_prior(labels, theta_fake, theta_real, theta_unknown)
    return _scar_iterate(adj, q, float(weight), iterations, tol)


def sybil_scar_d(adj, labels, iterations=SCAR_MAX_ITERATIONS,
                 theta_fake=Config.SCAR_THETA_FAKE, theta_real=Config.SCAR_THETA_REAL,
                 theta_unknown=Config.SCAR_THETA_UNKNOWN, tol=Config.SCAR_TOL):
    """Degree-weighted variant: node i weighs its neighbors by 0.5 / deg(i)."""
    degree = _degrees(adj)
    weights = np.zeros(adj.shape[0])
    weights[degree > 0] = 0.5 / degree[degree > 0]
    q = _scar_prior(labels, theta_fake, theta_real, theta_unknown)
    return _scar_iterate(adj, q, weights, iterations, tol)


# -------------------- Dispatcher --------------------

def score_baseline(graph, labels, method, nodes=None, **params):
    """
    Run one baseline and return fake-likeness scores for `nodes`
    (default: the unknown nodes of `labels`).

    SybilRank seeds are the known nodes with fake-probability below 0.5.
    """
    method = BaselineMethod(method)
    if nodes is None:
        nodes = split_known_unknown(labels)[1]
    nodes = np.asarray(nodes, dtype=np.int64)

    if method == BaselineMethod.REJECT_RATE:
        values = reject_rate_all(graph)
    else:
        adj = accepted_adjacency(graph)
        if method == BaselineMethod.SYBIL_RANK:
            seeds = np.flatnonzero(labels.known_mask & (np.nan_to_num(labels.values, nan=1.0) < 0.5))
            values = -sybil_rank(adj, seeds, params.get("iterations"))
        elif method == BaselineMethod.SYBIL_SCAR_C:
            values = sybil_scar_c(adj, labels, **params)
        else:
            values = sybil_scar_d(adj, labels, **params)

    logger.info(f"📊 Baseline {method.value} scored {nodes.size} nodes")
    return BaselineScore(method=method, nodes=nodes, scores=values[nodes])
