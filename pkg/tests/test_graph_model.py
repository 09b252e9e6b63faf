import numpy as np
import pytest

from utils.errors import (DuplicateEdge, InvalidLabel, InvalidParameter, InvalidResponse,
                          NodeOutOfRange, NonBinaryLabel, SelfLoop)
from utils.graph_model import LabelTable, build_graph, inject_label_noise, split_known_unknown

from tests.conftest import random_graph


def test_single_edge_graph():
    graph = build_graph(2, [(0, 1, 1)])
    assert graph.out_adjacency(0) == [(1, 1)]
    assert graph.in_adjacency(1) == [(0, 1)]
    assert graph.out_adjacency(1) == []
    assert graph.num_edges == 1


def test_duplicate_edge_names_the_edge():
    with pytest.raises(DuplicateEdge) as err:
        build_graph(3, [(0, 1, 1), (0, 1, 0)])
    assert err.value.edge == (0, 1, 0)
    assert "(0, 1, 0)" in str(err.value)


def test_self_loop_rejected():
    with pytest.raises(SelfLoop) as err:
        build_graph(1, [(0, 0, 1)])
    assert err.value.edge == (0, 0, 1)


def test_endpoint_out_of_range():
    with pytest.raises(NodeOutOfRange):
        build_graph(2, [(0, 2, 1)])
    with pytest.raises(NodeOutOfRange):
        build_graph(2, [(-1, 1, 1)])


def test_response_must_be_binary():
    with pytest.raises(InvalidResponse):
        build_graph(3, [(0, 1, 2)])


def test_reverse_pair_is_not_a_duplicate():
    graph = build_graph(2, [(0, 1, 1), (1, 0, 0)])
    assert graph.num_edges == 2


def test_adjacency_keeps_insertion_order():
    graph = build_graph(4, [(0, 3, 1), (0, 1, 0), (2, 1, 1), (0, 2, 1)])
    assert graph.out_adjacency(0) == [(3, 1), (1, 0), (2, 1)]
    assert graph.in_adjacency(1) == [(0, 0), (2, 1)]


def test_views_are_transposes(rng):
    graph = random_graph(40, 300, rng)
    rebuilt = {j: [] for j in range(graph.n)}
    for i in range(graph.n):
        for j, x in graph.out_adjacency(i):
            rebuilt[j].append((i, x))
    for j in range(graph.n):
        assert sorted(rebuilt[j]) == sorted(graph.in_adjacency(j))
    assert int(graph.out_degree.sum()) == graph.num_edges
    assert all(len(graph.out_adjacency(i)) == graph.out_degree[i] for i in range(graph.n))


def test_empty_graph():
    graph = build_graph(3, [])
    assert graph.num_edges == 0
    assert list(graph.out_degree) == [0, 0, 0]


def test_labels_outside_unit_interval():
    with pytest.raises(InvalidLabel):
        LabelTable(np.array([0.0, 1.5]))
    with pytest.raises(InvalidLabel):
        LabelTable.from_mapping(2, {5: 1.0})


def test_split_known_unknown():
    labels = LabelTable.from_mapping(3, {0: 1.0, 1: 0.0})
    known, unknown = split_known_unknown(labels)
    assert list(known) == [0, 1]
    assert list(unknown) == [2]

    known, unknown = split_known_unknown(LabelTable(np.array([1.0, 0.0])))
    assert list(unknown) == []
    known, unknown = split_known_unknown(LabelTable.unknown(4))
    assert list(known) == []
    assert list(unknown) == [0, 1, 2, 3]


def test_noise_zero_and_one():
    labels = LabelTable(np.array([1.0, 0.0, np.nan, 0.0]))
    same = inject_label_noise(labels, 0.0, rng_seed=3)
    np.testing.assert_array_equal(same.values, labels.values)

    flipped = inject_label_noise(labels, 1.0, rng_seed=3)
    np.testing.assert_array_equal(flipped.values, np.array([0.0, 1.0, np.nan, 1.0]))


def test_noise_rate_concentrates():
    n = 100000
    labels = LabelTable((np.arange(n) % 2).astype(float))
    noisy = inject_label_noise(labels, 0.3, rng_seed=7)
    flips = int(np.sum(noisy.values != labels.values))
    sigma = np.sqrt(n * 0.3 * 0.7)
    assert abs(flips - 30000) <= 3 * sigma


def test_noise_is_reproducible_and_skips_unknown():
    values = np.where(np.arange(1000) % 3 == 0, np.nan, (np.arange(1000) % 2).astype(float))
    labels = LabelTable(values)
    a = inject_label_noise(labels, 0.4, rng_seed=11)
    b = inject_label_noise(labels, 0.4, rng_seed=11)
    assert a.values.tobytes() == b.values.tobytes()
    assert np.all(np.isnan(a.values[np.isnan(values)]))


def test_noise_needs_binary_labels():
    with pytest.raises(NonBinaryLabel):
        inject_label_noise(LabelTable(np.array([0.25, 1.0])), 0.1, rng_seed=1)
    with pytest.raises(InvalidParameter):
        inject_label_noise(LabelTable(np.array([0.0, 1.0])), 1.5, rng_seed=1)
