#!/usr/bin/env python3
"""
graph_model.py

Directed friend-request graph with accept/reject responses, per-node labels
and the known/unknown partition.

Nodes are dense integer ids 0..n-1; the mapping from external node names
lives in utils/tsv_io.py. Graphs and label tables are immutable once built and
can be shared read-only between workers.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from utils.errors import (DuplicateEdge, InvalidLabel, InvalidParameter, InvalidResponse,
                          NodeOutOfRange, NonBinaryLabel, SelfLoop)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RequestEdge:
    source: int
    target: int
    response: int  # 1 = accepted, 0 = rejected


def _csr(keys, n):
    """Group edge ids by `keys`, keeping insertion order inside each group."""
    order = np.argsort(keys, kind='stable')
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=ptr[1:])
    return ptr, order


@dataclass(frozen=True, eq=False)
class RequestGraph:
    """
    Friend requests as parallel edge arrays plus CSR views.

    out_ptr/out_order: edge ids grouped by source (insertion order).
    in_ptr/in_order: edge ids grouped by target (insertion order).
    """
    n: int
    sources: np.ndarray
    targets: np.ndarray
    responses: np.ndarray
    out_ptr: np.ndarray
    out_order: np.ndarray
    in_ptr: np.ndarray
    in_order: np.ndarray

    @property
    def num_edges(self):
        return int(self.sources.shape[0])

    @property
    def edges(self):
        return [RequestEdge(int(s), int(t), int(x))
                for s, t, x in zip(self.sources, self.targets, self.responses)]

    @cached_property
    def out_degree(self):
        return np.diff(self.out_ptr)

    @cached_property
    def in_degree(self):
        return np.diff(self.in_ptr)

    @cached_property
    def out_order_by_target(self):
        """Edge ids grouped by source, ascending target id inside each group."""
        return np.lexsort((self.targets, self.sources))

    def out_edge_ids(self, node):
        return self.out_order[self.out_ptr[node]:self.out_ptr[node + 1]]

    def in_edge_ids(self, node):
        return self.in_order[self.in_ptr[node]:self.in_ptr[node + 1]]

    def out_adjacency(self, node):
        """[(target, response), ...] for the requests `node` sent."""
        ids = self.out_edge_ids(node)
        return list(zip(self.targets[ids].tolist(), self.responses[ids].tolist()))

    def in_adjacency(self, node):
        """[(source, response), ...] for the requests `node` received."""
        ids = self.in_edge_ids(node)
        return list(zip(self.sources[ids].tolist(), self.responses[ids].tolist()))

    def accepted_mask(self):
        return self.responses == 1


def build_graph(n, edges):
    """
    Build a RequestGraph from (source, target, response) triples.

    Args:
        n (int): Node count
        edges: Sequence of (source, target, response) or an (m, 3) integer array

    Returns:
        RequestGraph: both adjacency views populated, insertion order kept

    Raises:
        NodeOutOfRange, SelfLoop, DuplicateEdge, InvalidResponse
    """
    if n < 0:
        raise InvalidParameter(f"node count must be non-negative, got {n}")

    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        arr = np.zeros((0, 3), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidParameter(f"edges must be (source, target, response) triples, got shape {arr.shape}")
    sources, targets, responses = arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy()

    bad = np.flatnonzero((sources < 0) | (sources >= n) | (targets < 0) | (targets >= n))
    if bad.size:
        raise NodeOutOfRange(f"endpoint outside 0..{n - 1}", arr[bad[0]])

    loops = np.flatnonzero(sources == targets)
    if loops.size:
        raise SelfLoop("node sends a request to itself", arr[loops[0]])

    bad = np.flatnonzero((responses != 0) & (responses != 1))
    if bad.size:
        raise InvalidResponse("response must be 0 or 1", arr[bad[0]])

    if arr.shape[0]:
        keys = sources * n + targets
        order = np.argsort(keys, kind='stable')
        repeated = np.flatnonzero(keys[order][1:] == keys[order][:-1])
        if repeated.size:
            raise DuplicateEdge("request sent twice", arr[order[repeated[0] + 1]])

    out_ptr, out_order = _csr(sources, n)
    in_ptr, in_order = _csr(targets, n)
    return RequestGraph(n=int(n), sources=sources, targets=targets,
                        responses=responses.astype(np.int8),
                        out_ptr=out_ptr, out_order=out_order,
                        in_ptr=in_ptr, in_order=in_order)


# -------------------- Labels --------------------

@dataclass(frozen=True, eq=False)
class LabelTable:
    """
    Fake-probability per node: 1.0 = known sybil, 0.0 = known benign,
    fractional = probabilistic label, NaN = unknown (new user).
    """
    values: np.ndarray

    def __post_init__(self):
        present = self.values[~np.isnan(self.values)]
        if present.size and (present.min() < 0.0 or present.max() > 1.0):
            raise InvalidLabel("labels must lie in [0, 1]")

    @classmethod
    def unknown(cls, n):
        return cls(np.full(n, np.nan))

    @classmethod
    def from_mapping(cls, n, mapping):
        values = np.full(n, np.nan)
        for node, p_fake in mapping.items():
            if not 0 <= node < n:
                raise InvalidLabel(f"label for node {node} outside 0..{n - 1}")
            values[node] = float(p_fake)
        return cls(values)

    @property
    def n(self):
        return int(self.values.shape[0])

    @cached_property
    def known_mask(self):
        return ~np.isnan(self.values)

    def get(self, node):
        value = self.values[node]
        return None if np.isnan(value) else float(value)

    def is_binary(self):
        present = self.values[self.known_mask]
        return bool(np.all((present == 0.0) | (present == 1.0)))

    def fake_fraction(self):
        """Mean fake-probability over known nodes (NaN if none)."""
        present = self.values[self.known_mask]
        return float(present.mean()) if present.size else float('nan')

    def restricted_to(self, keep_mask):
        """Copy where nodes outside `keep_mask` become unknown."""
        values = self.values.copy()
        values[~np.asarray(keep_mask, dtype=bool)] = np.nan
        return LabelTable(values)


def split_known_unknown(labels):
    """
    Partition nodes into labeled and new users.

    Returns:
        tuple: (known ids, unknown ids), each an ascending int array
    """
    mask = labels.known_mask
    return np.flatnonzero(mask), np.flatnonzero(~mask)


def inject_label_noise(labels, flip_prob, rng_seed):
    """
    Flip each known binary label to its complement with probability flip_prob.

    One uniform draw per node (known or not) keeps the flip pattern of a node
    independent of the others, so the same seed is bit-identical across runs.
    """
    if not 0.0 <= flip_prob <= 1.0:
        raise InvalidParameter(f"flip_prob must lie in [0, 1], got {flip_prob}")
    if not labels.is_binary():
        raise NonBinaryLabel("label noise applies to binary labels only")

    rng = np.random.default_rng(rng_seed)
    draws = rng.random(labels.n)
    flip = labels.known_mask & (draws < flip_prob)
    values = labels.values.copy()
    values[flip] = 1.0 - values[flip]
    logger.debug(f"🔀 Flipped {int(flip.sum())} of {int(labels.known_mask.sum())} known labels")
    return LabelTable(values)
