import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imapmcmc.bits import mask_of, members, popcount
from imapmcmc.dag import Dag, complete_dag, read_dag
from imapmcmc.errors import DataError


@given(st.sets(st.integers(0, 40)))
def test_bits_roundtrip(nodes):
    m = mask_of(nodes)
    assert members(m) == sorted(nodes)
    assert popcount(m) == len(nodes)


def test_edges_and_parents_consistent():
    d = Dag.from_edges(4, [(0, 1), (2, 1), (1, 3)])
    assert d.edges == [(0, 1), (1, 3), (2, 1)]
    assert d.parent_list(1) == [0, 2]
    assert d.n_edges == 3
    assert d.adjacency()[2, 1] == 1
    assert Dag.from_adjacency(d.adjacency()) == d


def test_cycle_detection_and_self_loop():
    d = Dag.from_edges(3, [(0, 1), (1, 2)])
    assert d.topological_order() == [0, 1, 2]
    d.add_edge(2, 0)
    assert not d.is_acyclic()
    with pytest.raises(ValueError):
        Dag(2).add_edge(1, 1)


def test_ancestors_and_consistency():
    d = Dag.from_edges(4, [(0, 1), (1, 2)])
    anc = d.ancestor_masks()
    assert members(anc[2]) == [0, 1]
    assert anc[3] == 0
    assert d.consistent_with((3, 0, 1, 2))
    assert not d.consistent_with((1, 0, 2, 3))


def test_complete_dag():
    d = complete_dag((2, 0, 1))
    assert d.edges == [(0, 1), (2, 0), (2, 1)]


def test_file_roundtrips(tmp_path):
    d = Dag.from_edges(3, [(0, 2), (1, 2)])
    names = ["a", "b", "c"]
    d.write_edge_csv(tmp_path / "e.csv", names)
    assert (tmp_path / "e.csv").read_text().splitlines() == ["a,c", "b,c"]
    assert read_dag(tmp_path / "e.csv", names) == d
    import json
    (tmp_path / "d.json").write_text(json.dumps(d.to_json()))
    assert read_dag(tmp_path / "d.json") == d
    (tmp_path / "bad.csv").write_text("a,zz\n")
    with pytest.raises(DataError):
        read_dag(tmp_path / "bad.csv", names)


@given(st.integers(0, 10**6))
@settings(max_examples=50)
def test_hash_and_key_identify_graph(seed):
    rng = np.random.default_rng(seed)
    a = Dag.from_adjacency(np.triu(rng.random((5, 5)) < 0.4, 1).astype(int))
    b = Dag.from_edges(5, a.edges)
    assert a == b and hash(a) == hash(b) and a.key() == b.key()
