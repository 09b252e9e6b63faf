"""Shared fixtures for the SybilEdge test suite."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from utils.graph_model import LabelTable, build_graph  # noqa: E402
from utils.rate_estimator import RateTable  # noqa: E402


def make_rates(n, entries, mean_accept_rate=0.5, prior=0.05):
    """
    RateTable with explicit rates for some targets.

    entries: {target: (r_s, r_b, a_s, a_b)}; every other node is non-informative.
    """
    r_s, r_b = np.zeros(n), np.zeros(n)
    a_s, a_b = np.full(n, mean_accept_rate), np.full(n, mean_accept_rate)
    informative = np.zeros(n, dtype=bool)
    for target, (rs, rb, as_, ab) in entries.items():
        r_s[target], r_b[target], a_s[target], a_b[target] = rs, rb, as_, ab
        informative[target] = True
    return RateTable(r_s=r_s, r_b=r_b, a_s=a_s, a_b=a_b, informative=informative,
                     rho_L=1.0, rho_L_s=0.5, rho_L_b=0.5, clamp_eps=1e-6,
                     prior_fake_fraction=prior, mean_accept_rate=mean_accept_rate)


def random_graph(n, m, rng, accept_prob=0.6):
    """m distinct random requests (no self-loops) with Bernoulli responses."""
    pairs = set()
    while len(pairs) < m:
        s, t = (int(v) for v in rng.integers(n, size=2))
        if s != t:
            pairs.add((s, t))
    pairs = sorted(pairs)
    responses = (rng.random(len(pairs)) < accept_prob).astype(int)
    return build_graph(n, [(s, t, int(x)) for (s, t), x in zip(pairs, responses)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_world(rng):
    """60-node random graph, 25% fakes, two thirds of the nodes labeled."""
    n = 60
    graph = random_graph(n, 600, rng)
    truth = (rng.random(n) < 0.25).astype(float)
    known = rng.random(n) < 0.67
    training = LabelTable(np.where(known, truth, np.nan))
    return graph, LabelTable(truth), training


@pytest.fixture
def write_text(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return str(path)
    return write
