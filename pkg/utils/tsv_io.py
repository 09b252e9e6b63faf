#!/usr/bin/env python3
"""
tsv_io.py

Tab-separated files for edges, labels, rates and scores, and the node-name
dictionary. This is the only module that sees node names; everything below
it works on dense ids.

Every written file starts with '#' header lines (tool version, command line,
seed, resolved config) followed by a column-name row.
"""

import csv
import json
import logging
import os
import re

import numpy as np
import pandas as pd

from utils import __version__
from utils.config import dumps_config
from utils.errors import DataError, UnknownNode
from utils.graph_model import LabelTable, build_graph
from utils.rate_estimator import RateTable

logger = logging.getLogger(__name__)

EDGE_COLUMNS = ["source", "target", "response"]
LABEL_COLUMNS = ["node", "p_fake"]
RATE_COLUMNS = ["target_id", "r_s", "r_b", "a_s", "a_b", "informative"]
SCORE_COLUMNS = ["node_id", "p_fake", "log_odds", "n_edges_used"]
CONTRIBUTION_COLUMNS = ["node_id", "target_id", "response", "delta_selection", "delta_response"]
BASELINE_COLUMNS = ["node_id", "score", "method"]
HISTOGRAM_COLUMNS = ["degree", "count"]

_INT_TOKEN = re.compile(r"^\d+$")


class NodeIndex:
    """Node name <-> dense id. Numeric names keep their numeric order."""

    def __init__(self, tokens):
        unique = list(dict.fromkeys(str(t) for t in tokens))
        if unique and all(_INT_TOKEN.match(t) for t in unique):
            unique.sort(key=int)
        self.tokens = unique
        self.ids = {t: i for i, t in enumerate(unique)}

    def __len__(self):
        return len(self.tokens)

    def id_of(self, token):
        try:
            return self.ids[str(token)]
        except KeyError:
            raise UnknownNode(f"unknown node {token!r}")

    def ids_of(self, tokens):
        return np.array([self.id_of(t) for t in tokens], dtype=np.int64)

    def token_of(self, node_id):
        return self.tokens[int(node_id)]

    def tokens_of(self, node_ids):
        return [self.tokens[int(i)] for i in node_ids]


# -------------------- Headers --------------------

def header_lines(command, seed=None, config=None, extra=None):
    lines = [f"# tool=sybiledge version={__version__}",
             f"# command={command}",
             f"# seed={seed if seed is not None else 'none'}",
             f"# config={dumps_config(config or {})}"]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}={value}")
    return lines


def read_header(path):
    """`# key=value` header lines as a dict of raw strings."""
    header = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if not line.startswith('#'):
                break
            key, sep, value = line[1:].strip().partition('=')
            if sep:
                header[key.strip()] = value
    return header


def _write(path, frame, header):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        for line in header:
            f.write(line + '\n')
        frame.to_csv(f, sep='\t', index=False, lineterminator='\n')
    logger.debug(f"Wrote {len(frame)} rows to {path}")


# -------------------- Reading --------------------

def read_table(path, columns, min_columns=None):
    """
    Rows of a TSV file as strings, read with pandas. '#' starts a comment
    (header lines), blank lines and a leading column-name row are skipped.
    Rows are numbered among the non-comment, non-blank lines.

    Raises:
        DataError: missing file or a row with the wrong field count (names file and row)
    """
    min_columns = min_columns or len(columns)
    if not os.path.exists(path):
        raise DataError(f"{path}: no such file")
    try:
        raw = pd.read_csv(path, sep='\t', header=None, comment='#', dtype=str, keep_default_na=False,
                          quoting=csv.QUOTE_NONE, encoding='utf-8')
    except pd.errors.EmptyDataError:
        return pd.DataFrame({c: pd.Series(dtype=str) for c in columns})
    except pd.errors.ParserError as e:
        raise DataError(f"{path}: {e}")

    if len(raw) and raw.iat[0, 0] == columns[0]:
        raw = raw.iloc[1:]  # column names
    n_fields = raw.notna().sum(axis=1)
    bad = (n_fields < min_columns) | (n_fields > len(columns))
    if bad.any():
        row = bad.idxmax()
        raise DataError(f"{path} row {row + 1}: expected {len(columns)} fields, got {n_fields[row]}")

    frame = raw.reindex(columns=range(len(columns))).fillna('')
    frame.columns = columns
    return frame.reset_index(drop=True)


def _as_numbers(frame, column, path, kind=float):
    try:
        return frame[column].map(kind).to_numpy()
    except ValueError as e:
        raise DataError(f"{path}: column '{column}' holds a non-numeric value ({e})")


def read_edges(path):
    frame = read_table(path, EDGE_COLUMNS)
    frame["response"] = _as_numbers(frame, "response", path, int)
    return frame


def read_labels(path):
    """node name -> fake probability."""
    frame = read_table(path, LABEL_COLUMNS)
    values = _as_numbers(frame, "p_fake", path)
    return dict(zip(frame["node"].tolist(), values.tolist()))


def read_scores(path):
    """node name -> score, from a score file (p_fake) or a baseline file (score)."""
    frame = read_table(path, SCORE_COLUMNS, min_columns=2)
    values = _as_numbers(frame, "p_fake", path)
    return dict(zip(frame["node_id"].tolist(), values.tolist()))


def read_node_values(path, index, default):
    """Per-node values (e.g. per-target sigma) aligned with `index`; absent nodes get `default`."""
    frame = read_table(path, ["node", "value"])
    values = np.full(len(index), float(default))
    parsed = _as_numbers(frame, "value", path)
    for token, value in zip(frame["node"].tolist(), parsed.tolist()):
        if token in index.ids:
            values[index.ids[token]] = value
    return values


def read_degree_histogram(path):
    frame = read_table(path, HISTOGRAM_COLUMNS)
    return _as_numbers(frame, "degree", path, int), _as_numbers(frame, "count", path)


def load_graph(edges_path, labels_path=None, extra_tokens=()):
    """
    Read an edge file (and optionally a label file) into dense structures.

    Returns:
        tuple: (NodeIndex, RequestGraph, LabelTable or None, raw label dict or None)
    """
    edges = read_edges(edges_path)
    raw_labels = read_labels(labels_path) if labels_path else None
    tokens = (edges["source"].tolist() + edges["target"].tolist()
              + (list(raw_labels) if raw_labels else []) + list(extra_tokens))
    index = NodeIndex(tokens)

    triples = np.column_stack([index.ids_of(edges["source"]), index.ids_of(edges["target"]),
                               edges["response"].to_numpy(dtype=np.int64)]) if len(edges) else []
    graph = build_graph(len(index), triples)

    labels = None
    if raw_labels is not None:
        labels = LabelTable.from_mapping(len(index), {index.id_of(t): v for t, v in raw_labels.items()})
    logger.info(f"✅ Loaded {graph.num_edges} requests over {len(index)} nodes from {edges_path}")
    return index, graph, labels, raw_labels


# -------------------- Writers --------------------

def write_edges(path, graph, index, header):
    frame = pd.DataFrame({
        "source": index.tokens_of(graph.sources),
        "target": index.tokens_of(graph.targets),
        "response": graph.responses.astype(np.int64),
    }, columns=EDGE_COLUMNS)
    _write(path, frame, header)


def write_labels(path, labels, index, header):
    known = np.flatnonzero(labels.known_mask)
    frame = pd.DataFrame({
        "node": index.tokens_of(known),
        "p_fake": labels.values[known],
    }, columns=LABEL_COLUMNS)
    _write(path, frame, header)


def write_rates(path, rates, index, header):
    frame = pd.DataFrame({
        "target_id": index.tokens,
        "r_s": rates.r_s,
        "r_b": rates.r_b,
        "a_s": rates.a_s,
        "a_b": rates.a_b,
        "informative": rates.informative.astype(np.int64),
    }, columns=RATE_COLUMNS)
    globals_line = f"# globals={json.dumps(rates.globals(), sort_keys=True)}"
    _write(path, frame, list(header) + [globals_line])


def read_rates(path, index):
    """
    Rate table aligned with `index`; nodes missing from the file get
    non-informative entries.
    """
    frame = read_table(path, RATE_COLUMNS)
    header = read_header(path)
    try:
        glob = json.loads(header.get("globals", "{}"))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: malformed globals line ({e})")

    n = len(index)
    r_s, r_b = np.zeros(n), np.zeros(n)
    mean_accept = glob.get("mean_accept_rate", 0.5)
    a_s, a_b = np.full(n, mean_accept), np.full(n, mean_accept)
    informative = np.zeros(n, dtype=bool)
    if len(frame):
        ids = np.array([index.ids.get(t, -1) for t in frame["target_id"]], dtype=np.int64)
        present = ids >= 0
        if not present.all():
            logger.warning(f"⚠️  {int((~present).sum())} rated targets do not occur in the graph")
        ids = ids[present]
        for column, target in (("r_s", r_s), ("r_b", r_b), ("a_s", a_s), ("a_b", a_b)):
            target[ids] = _as_numbers(frame, column, path)[present]
        informative[ids] = _as_numbers(frame, "informative", path, int)[present] == 1

    prior = glob.get("prior_fake_fraction")
    return RateTable(r_s=r_s, r_b=r_b, a_s=a_s, a_b=a_b, informative=informative,
                     rho_L=float(glob.get("rho_L", 0.0)), rho_L_s=float(glob.get("rho_L_s", 0.0)),
                     rho_L_b=float(glob.get("rho_L_b", 0.0)),
                     clamp_eps=float(glob.get("clamp_eps", 1e-6)),
                     prior_fake_fraction=float(prior) if prior is not None else float('nan'),
                     mean_accept_rate=float(mean_accept))


def write_scores(path, table, index, header):
    frame = table.to_frame()
    frame["node_id"] = index.tokens_of(table.nodes)
    _write(path, frame[SCORE_COLUMNS], header)


def write_contributions(path, contributions, index, header):
    frame = contributions.copy()
    frame["node_id"] = index.tokens_of(frame["node_id"])
    frame["target_id"] = index.tokens_of(frame["target_id"])
    _write(path, frame[CONTRIBUTION_COLUMNS], header)


def write_baseline_scores(path, baseline, index, header):
    frame = baseline.to_frame()
    frame["node_id"] = index.tokens_of(baseline.nodes)
    _write(path, frame[BASELINE_COLUMNS], header)
