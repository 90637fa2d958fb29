import json
import math
from math import factorial

import numpy as np
import pytest

from imapmcmc.ci import CiCache, Dataset, SuffStats, compute_suffstats
from imapmcmc.dag import Dag
from imapmcmc.errors import TooLarge
from imapmcmc.imap import build_min_imap
from imapmcmc.oracle import (d_separated, edge_probs_of, enumerate_dags, equivalence_classes,
                             exact_full_dag_posterior, exact_min_imap_posterior,
                             min_imap_support, total_variation)
from imapmcmc.scoring import Posterior, PriorSpec

from conftest import sem_stats


@pytest.mark.parametrize("p,count", [(0, 1), (1, 1), (2, 3), (3, 25), (4, 543)])
def test_dag_counts(p, count):
    assert sum(1 for _ in enumerate_dags(p)) == count


@pytest.mark.slow
def test_dag_count_p5():
    assert sum(1 for _ in enumerate_dags(5)) == 29281


def test_equivalence_class_counts():
    # known numbers of Markov equivalence classes: 2, 11, 185
    assert [len(equivalence_classes(p)) for p in (2, 3, 4)] == [2, 11, 185]


def test_d_separation_examples():
    chain = Dag.from_edges(3, [(0, 1), (1, 2)])
    collider = Dag.from_edges(3, [(0, 2), (1, 2)])
    assert d_separated(chain, 0, 2, [1]) and not d_separated(chain, 0, 2, [])
    assert d_separated(collider, 0, 1, []) and not d_separated(collider, 0, 1, [2])
    desc = Dag.from_edges(4, [(0, 2), (1, 2), (2, 3)])
    assert not d_separated(desc, 0, 1, [3])


def test_p2_dependence_ties():
    corr = np.array([[1.0, 0.6], [0.6, 1.0]])
    post = exact_min_imap_posterior(SuffStats(corr, 200))
    assert {d.key() for d in post.support} == {"0>1", "1>0"}
    for prob in post.support.values():
        assert prob == pytest.approx(0.5, abs=1e-12)
    ep = edge_probs_of(post).values
    assert ep[0, 1] == pytest.approx(0.5) and ep[1, 0] == pytest.approx(0.5)


def test_p2_independence_point_mass():
    post = exact_min_imap_posterior(SuffStats(np.eye(2), 200))
    assert list(post.support.values()) == [1.0]
    assert next(iter(post.support)).n_edges == 0
    assert np.array_equal(edge_probs_of(post).values, np.zeros((2, 2)))


def test_normalization_p5():
    for seed in range(50):
        _, s = sem_stats(5, 100, seed)
        post = exact_min_imap_posterior(s)
        assert sum(post.support.values()) == pytest.approx(1.0, abs=1e-10)
        assert sum(post.multiplicity.values()) == factorial(5)
        ep = edge_probs_of(post).values
        assert ep.min() >= 0 and ep.max() <= 1


def test_dedup_consistency():
    import itertools
    _, s = sem_stats(5, 100, 3)
    cache = CiCache(s, 0.05)
    post = exact_min_imap_posterior(s, cache=cache)
    score = Posterior(s)
    for perm in itertools.permutations(range(5)):
        g = build_min_imap(perm, cache)
        assert g in post.support
        assert score(g) == post.log_scores[g]


def test_weightings_differ_only_by_multiplicity():
    _, s = sem_stats(4, 100, 4)
    a = exact_min_imap_posterior(s, weighting="restricted")
    b = exact_min_imap_posterior(s, weighting="permutation")
    za = sum(a.support[g] * b.multiplicity[g] for g in a.support)
    for g in a.support:
        assert b.support[g] == pytest.approx(a.support[g] * b.multiplicity[g] / za)
    with pytest.raises(ValueError):
        exact_min_imap_posterior(s, weighting="other")


def test_full_posterior():
    _, s = sem_stats(3, 100, 5)
    post = exact_full_dag_posterior(s)
    assert len(post.support) == 25
    assert sum(post.support.values()) == pytest.approx(1.0, abs=1e-10)
    one = exact_full_dag_posterior(SuffStats(np.eye(1), 10))
    assert list(one.support.values()) == [1.0]


def test_guards():
    with pytest.raises(TooLarge):
        exact_full_dag_posterior(SuffStats(np.eye(5), 10))
    with pytest.raises(TooLarge):
        exact_min_imap_posterior(SuffStats(np.eye(9), 10))
    with pytest.raises(TooLarge):
        next(enumerate_dags(6))


def test_point_mass_edge_probs_and_dump(tmp_path):
    _, s = sem_stats(3, 50, 6)
    g = Dag.from_edges(3, [(0, 1)])
    from imapmcmc.oracle import ExactPosterior
    post = ExactPosterior({g: 1.0}, 0.0)
    assert np.array_equal(edge_probs_of(post).values, g.adjacency().astype(float))
    post.write(tmp_path / "post.json")
    assert json.loads((tmp_path / "post.json").read_text()) == {"0>1": 1.0}


def test_total_variation():
    assert total_variation({"a": 1.0}, {"b": 1.0}) == 1.0
    assert total_variation({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}) == 0.0
