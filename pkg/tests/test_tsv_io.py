import numpy as np
import pytest

from utils.errors import DataError, DuplicateEdge, UnknownNode
from utils.graph_model import LabelTable
from utils.rate_estimator import build_rate_table
from utils.tsv_io import (RATE_COLUMNS, NodeIndex, header_lines, load_graph, read_header, read_rates,
                          read_scores, read_table, write_rates)

from tests.conftest import random_graph


def test_node_index_orders_numeric_names():
    index = NodeIndex(["10", "2", "1", "2"])
    assert index.tokens == ["1", "2", "10"]
    assert index.id_of("10") == 2
    assert index.id_of(10) == 2


def test_node_index_keeps_first_appearance_for_names():
    index = NodeIndex(["bob", "alice", "3", "bob"])
    assert index.tokens == ["bob", "alice", "3"]
    with pytest.raises(UnknownNode):
        index.id_of("carol")


def test_read_table_skips_comments_and_column_row(write_text):
    path = write_text("edges.tsv", "# tool=sybiledge\nsource\ttarget\tresponse\na\tb\t1\n\nb\ta\t0\n")
    frame = read_table(path, ["source", "target", "response"])
    assert frame.values.tolist() == [["a", "b", "1"], ["b", "a", "0"]]


def test_bad_row_names_file_and_row(write_text):
    path = write_text("edges.tsv", "a\tb\t1\na\tc\n")
    with pytest.raises(DataError) as err:
        read_table(path, ["source", "target", "response"])
    assert "row 2" in str(err.value) and path in str(err.value)
    with pytest.raises(DataError):
        read_table(path + ".missing", ["source", "target", "response"])


def test_long_rows_are_data_errors(write_text):
    first = write_text("first.tsv", "a\tb\t1\t9\na\tc\t0\n")
    with pytest.raises(DataError) as err:
        read_table(first, ["source", "target", "response"])
    assert "row 1" in str(err.value)
    later = write_text("later.tsv", "a\tb\t1\na\tc\t0\t9\n")
    with pytest.raises(DataError) as err:
        read_table(later, ["source", "target", "response"])
    assert later in str(err.value)


def test_header_only_file_reads_empty(write_text):
    path = write_text("labels.tsv", "# tool=sybiledge\n# seed=none\n")
    frame = read_table(path, ["node", "p_fake"])
    assert list(frame.columns) == ["node", "p_fake"] and frame.empty
    assert read_table(write_text("names.tsv", "node\tp_fake\n"), ["node", "p_fake"]).empty


def test_load_graph_maps_names(write_text):
    edges = write_text("edges.tsv", "u1\tu2\t1\nu2\tu3\t0\n")
    labels = write_text("labels.tsv", "node\tp_fake\nu1\t1\nu4\t0\n")
    index, graph, table, raw = load_graph(edges, labels)
    assert len(index) == 4
    assert graph.out_adjacency(index.id_of("u1")) == [(index.id_of("u2"), 1)]
    assert table.get(index.id_of("u4")) == 0.0
    assert table.get(index.id_of("u3")) is None
    assert raw == {"u1": 1.0, "u4": 0.0}


def test_load_graph_rejects_duplicates(write_text):
    edges = write_text("edges.tsv", "1\t2\t1\n1\t2\t0\n")
    with pytest.raises(DuplicateEdge):
        load_graph(edges)


def test_non_numeric_response(write_text):
    edges = write_text("edges.tsv", "1\t2\tyes\n")
    with pytest.raises(DataError):
        load_graph(edges)


def test_rates_survive_a_file(tmp_path, rng):
    graph = random_graph(30, 200, rng)
    labels = LabelTable(np.where(rng.random(30) < 0.7, (rng.random(30) < 0.3).astype(float), np.nan))
    rates = build_rate_table(graph, labels, sigma=3.0, phi=1.0)
    index = NodeIndex(range(30))
    path = str(tmp_path / "rates.tsv")
    write_rates(path, rates, index, header_lines("sybiledge train", None, {"sigma": 3.0}))

    again = read_rates(path, index)
    for name in ("r_s", "r_b", "a_s", "a_b", "informative"):
        np.testing.assert_array_equal(getattr(again, name), getattr(rates, name))
    assert again.globals() == pytest.approx(rates.globals())

    header = read_header(path)
    assert header["tool"].startswith("sybiledge")
    assert header["config"] == '{"sigma":3.0}'
    assert read_table(path, RATE_COLUMNS).shape == (30, len(RATE_COLUMNS))


def test_targets_missing_from_rate_file_are_neutral(write_text):
    path = write_text("rates.tsv", '# globals={"mean_accept_rate": 0.7}\n'
                                   "target_id\tr_s\tr_b\ta_s\ta_b\tinformative\n"
                                   "1\t0.2\t0.1\t0.5\t0.9\t1\n")
    rates = read_rates(path, NodeIndex(["1", "2"]))
    assert rates.entry(0) == (0.2, 0.1, 0.5, 0.9, True)
    assert rates.entry(1) == (0.0, 0.0, 0.7, 0.7, False)
    assert np.isnan(rates.prior_fake_fraction)


def test_read_scores_accepts_baseline_files(write_text):
    path = write_text("rank.tsv", "node_id\tscore\tmethod\n7\t0.25\tsybil_rank\n8\t-0.5\tsybil_rank\n")
    assert read_scores(path) == {"7": 0.25, "8": -0.5}
