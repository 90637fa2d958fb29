import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imapmcmc.ci import CiCache, SuffStats
from imapmcmc.dag import Dag, complete_dag
from imapmcmc.errors import NotAdjacent
from imapmcmc.imap import (FIRST_LAST, apply_transposition, build_min_imap, check_permutation,
                           find_transposition, moves, position, umi_apply, umi_update)
from imapmcmc.oracle import d_separated

from conftest import make_sem, oracle_cache, sem_stats


def dsep_cache(truth):
    """Cache whose outcomes are the d-separation statements of ``truth``."""
    test = lambda stats, i, j, cond: not d_separated(truth, i, j, cond)
    return CiCache(SuffStats(np.eye(truth.p), 1000), 0.05, test)


def const_cache(p, value):
    return CiCache(SuffStats(np.eye(p), 1000), 0.05, lambda *a: value)


@pytest.mark.parametrize("p", [3, 4, 6, 8])
def test_star_graph(p):
    # hub 0 with arrows from every other node
    star = Dag.from_edges(p, [(v, 0) for v in range(1, p)])
    cache = dsep_cache(star)
    tau = (0, *range(2, p), 1)
    assert build_min_imap(tau, cache) == complete_dag(tau)
    pi = (*range(1, p), 0)
    assert build_min_imap(pi, cache) == star


def test_star_graph_population_oracle():
    p = 6
    star = Dag.from_edges(p, [(v, 0) for v in range(1, p)])
    from imapmcmc.synth import SemSpec
    spec = SemSpec(star, {e: 0.7 for e in star.edges}, np.ones(p))
    cache = oracle_cache(spec)
    assert build_min_imap((*range(1, p), 0), cache) == star
    tau = (0, *range(2, p), 1)
    assert build_min_imap(tau, cache) == complete_dag(tau)


def test_constant_oracles():
    perm = (3, 1, 0, 2)
    assert build_min_imap(perm, const_cache(4, False)).n_edges == 0
    assert build_min_imap(perm, const_cache(4, True)) == complete_dag(perm)


def test_query_budget():
    _, s = sem_stats(9, 200, 1)
    cache = CiCache(s, 0.05)
    build_min_imap(tuple(range(9)), cache)
    assert cache.n_queries == comb(9, 2)


def test_umi_query_budget_and_k1():
    _, s = sem_stats(9, 200, 2)
    cache = CiCache(s, 0.05)
    perm = tuple(np.random.default_rng(0).permutation(9).tolist())
    dag = build_min_imap(perm, cache)
    for k in range(1, 9):
        before = cache.n_queries
        umi_apply(perm, dag, k, cache)
        assert cache.n_queries - before <= 2 * (k - 1) + 1
    before = cache.n_queries
    new, nd = umi_apply(perm, dag, 1, cache)
    assert cache.n_queries == before
    x, y = perm[0], perm[1]
    for u, v in dag.edges:
        if {u, v} != {x, y}:
            assert nd.has_edge(u, v)


@given(seed=st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_umi_equals_rebuild(seed):
    _, s = sem_stats(7, 60, seed % 50)
    cache = CiCache(s, 0.05)
    rng = np.random.default_rng(seed)
    perm = tuple(rng.permutation(7).tolist())
    dag = build_min_imap(perm, cache)
    for t in moves(7):
        new = apply_transposition(perm, t)
        assert umi_update(new, perm, dag, cache) == build_min_imap(new, cache)


def test_umi_leaves_input_untouched():
    _, s = sem_stats(5, 100, 3)
    cache = CiCache(s, 0.05)
    perm = (4, 3, 2, 1, 0)
    dag = build_min_imap(perm, cache)
    snap = dag.copy()
    umi_apply(perm, dag, 3, cache)
    assert dag == snap


def test_not_adjacent():
    perm = (0, 1, 2, 3, 4)
    with pytest.raises(NotAdjacent):
        find_transposition(perm, perm)
    with pytest.raises(NotAdjacent):
        find_transposition((1, 0, 2, 4, 3), perm)
    with pytest.raises(NotAdjacent):
        find_transposition((2, 1, 0, 3, 4), perm)
    assert find_transposition((4, 1, 2, 3, 0), perm) == FIRST_LAST


def test_apply_transposition_examples():
    assert apply_transposition((1, 2, 3, 4), 2) == (1, 3, 2, 4)
    assert apply_transposition((1, 2, 3, 4), FIRST_LAST) == (4, 2, 3, 1)
    rng = np.random.default_rng(0)
    for _ in range(10**4):
        p = int(rng.integers(2, 12))
        perm = tuple(rng.permutation(p).tolist())
        mv = moves(p)
        t = mv[int(rng.integers(len(mv)))]
        assert apply_transposition(apply_transposition(perm, t), t) == perm


def test_moves_and_positions():
    assert moves(2) == [1]
    assert moves(4) == [1, 2, 3, FIRST_LAST]
    perm = (2, 0, 1)
    pos = position(perm)
    assert all(perm[pos[v]] == v for v in range(3))
    with pytest.raises(ValueError):
        check_permutation((0, 0, 1))


@given(seed=st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_consistent_and_minimal(seed):
    spec, _ = make_sem(5, seed % 200, edge_prob=0.5)
    cache = dsep_cache(spec.dag)
    perm = tuple(np.random.default_rng(seed).permutation(5).tolist())
    g = build_min_imap(perm, cache)
    assert g.is_acyclic() and g.consistent_with(perm)
    pos = position(perm)
    for u, v in g.edges:
        pred = [w for w in perm[:pos[v]] if w != u]
        reduced = g.copy()
        reduced.remove_edge(u, v)
        # the reduced graph would assert u _||_ v | pred, which the oracle denies
        assert d_separated(reduced, u, v, pred)
        assert not d_separated(spec.dag, u, v, pred)


def test_true_order_recovers_truth():
    for seed in range(20):
        spec, _ = make_sem(6, seed)
        order = tuple(spec.dag.topological_order())
        assert build_min_imap(order, dsep_cache(spec.dag)) == spec.dag
