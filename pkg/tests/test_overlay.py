import json

import pytest
from hypothesis import given, settings, strategies as st

from delayleader.overlay import (
    OverlayError,
    OverlayGraph,
    generate_overlay,
    graph_from_dict,
    graph_to_dict,
    load_graph,
    save_graph,
)


def test_minimal_generator_is_forced():
    g = generate_overlay(2, 1, (5, 5), seed=0)
    assert g.nodes() == [0, 1]
    assert g.edges() == [(0, 1, 5)]


def test_generator_edge_budget_and_connectivity():
    g = generate_overlay(50, 2, (1, 20), seed=7)
    assert len(g) == 50
    assert g.is_connected()
    assert g.edge_count() <= 97  # 1 + 2 * 48 when every attachment is distinct


def test_generator_rejects_tiny_networks():
    with pytest.raises(OverlayError):
        generate_overlay(1, 1, (1, 5), seed=0)
    with pytest.raises(OverlayError):
        generate_overlay(5, 0, (1, 5), seed=0)
    with pytest.raises(OverlayError):
        generate_overlay(5, 1, (7, 3), seed=0)


def test_generator_deterministic_per_seed():
    a = generate_overlay(30, 3, (1, 50), seed=42)
    b = generate_overlay(30, 3, (1, 50), seed=42)
    c = generate_overlay(30, 3, (1, 50), seed=43)
    assert a == b
    assert a != c


@settings(derandomize=True, max_examples=30, deadline=None)
@given(n=st.integers(2, 40), degree=st.integers(1, 5), seed=st.integers(0, 10**6))
def test_generator_always_connected(n, degree, seed):
    g = generate_overlay(n, degree, (1, 9), seed)
    assert g.is_connected()
    assert len(g) == n


def test_graph_rules():
    g = OverlayGraph()
    g.add_edge(0, 1, 3)
    with pytest.raises(OverlayError):
        g.add_edge(0, 0, 1)
    with pytest.raises(OverlayError):
        g.add_edge(1, 0, 4)  # duplicate pair
    with pytest.raises(OverlayError):
        g.add_edge(0, 2, -1)
    with pytest.raises(OverlayError):
        g.add_node(1 << 16)


def test_remove_node_updates_both_sides():
    g = OverlayGraph()
    g.add_edge(0, 1, 3)
    g.add_edge(1, 2, 4)
    g.remove_node(1)
    assert g.nodes() == [0, 2]
    assert g.edge_count() == 0


def test_json_round_trip(tmp_path):
    g = generate_overlay(12, 2, (1, 30), seed=3)
    doc = graph_to_dict(g)
    assert set(doc) == {"nodes", "edges"}
    assert graph_from_dict(doc) == g

    path = tmp_path / "graph.json"
    save_graph(g, path)
    assert load_graph(path) == g
    raw = json.loads(path.read_text())
    assert raw["edges"][0].keys() == {"a", "b", "delay_us"}


def test_graph_from_dict_rejects_malformed():
    with pytest.raises(OverlayError):
        graph_from_dict({"nodes": [0, 1]})
