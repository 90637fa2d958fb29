import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imapmcmc.ci import (CiCache, CiKey, Dataset, SuffStats, ci_query, compute_suffstats,
                         critical_value, fisher_z_statistic, fisher_z_test, partial_correlation)
from imapmcmc.dag import Dag
from imapmcmc.errors import DataError, SingularSubmatrix, ZeroVarianceColumn
from imapmcmc.synth import SemSpec, population_covariance

from conftest import sem_stats


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset.from_array(np.zeros((5, 1)))
    with pytest.raises(DataError):
        Dataset.from_array(np.zeros((1, 3)))
    with pytest.raises(DataError):
        Dataset.from_array([[0.0, np.nan], [1.0, 2.0]])
    with pytest.raises(DataError):
        Dataset(np.zeros((3, 2)), ("a", "a"))


def test_csv_roundtrip(tmp_path):
    d = Dataset.from_array(np.random.default_rng(0).normal(size=(7, 3)), ["a", "b", "c"])
    d.write_csv(tmp_path / "d.csv")
    back = Dataset.read_csv(tmp_path / "d.csv")
    assert back.names == d.names
    assert np.array_equal(back.values, d.values)


def test_identical_columns_correlate_fully():
    x = np.random.default_rng(1).normal(size=50)
    s = compute_suffstats(Dataset.from_array(np.column_stack([x, x])))
    assert s.corr[0, 1] == pytest.approx(1.0)


def test_independent_columns_near_zero():
    x = np.random.default_rng(2).normal(size=(10**5, 3))
    s = compute_suffstats(Dataset.from_array(x))
    off = s.corr[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off) < 0.02)


def test_zero_variance_column_named():
    x = np.column_stack([np.arange(5.0), np.ones(5)])
    with pytest.raises(ZeroVarianceColumn, match="X2"):
        compute_suffstats(Dataset.from_array(x))


def test_identity_partial_correlation_zero():
    s = SuffStats(np.eye(4), 100)
    assert partial_correlation(s, CiKey.make(0, 3, {1, 2})) == 0.0


def test_empty_set_is_pearson():
    _, s = sem_stats(5, 200, 3)
    for i in range(5):
        for j in range(i + 1, 5):
            assert partial_correlation(s, CiKey.make(i, j)) == pytest.approx(s.corr[i, j], abs=1e-12)


def test_chain_population_partial_correlation():
    chain = Dag.from_edges(3, [(0, 1), (1, 2)])
    spec = SemSpec(chain, {(0, 1): 1.0, (1, 2): 1.0}, np.ones(3))
    s = SuffStats.from_covariance(population_covariance(spec), 1000)
    assert abs(partial_correlation(s, CiKey.make(0, 2, {1}))) < 1e-10


def test_key_canonical_and_validated():
    assert CiKey.make(3, 1, [2]) == CiKey.make(1, 3, {2})
    with pytest.raises(ValueError):
        CiKey.make(1, 1)
    with pytest.raises(ValueError):
        CiKey.make(1, 2, {2})


@given(seed=st.integers(0, 10**5), size=st.integers(0, 4))
@settings(max_examples=50, deadline=None)
def test_symmetric_and_bounded(seed, size):
    _, s = sem_stats(6, 30, seed)
    rng = np.random.default_rng(seed)
    nodes = rng.permutation(6).tolist()
    i, j, S = nodes[0], nodes[1], set(nodes[2:2 + size])
    a = partial_correlation(s, CiKey.make(i, j, S))
    b = partial_correlation(s, CiKey.make(j, i, S))
    assert a == b
    assert -1 + 1e-12 <= a <= 1 - 1e-12


def test_fisher_closed_form():
    assert critical_value(0.05) == pytest.approx(1.959964, abs=1e-6)
    stat = fisher_z_statistic(0.5, 100, 0)
    assert math.atanh(0.5) == pytest.approx(0.5493, abs=1e-4)
    assert stat == pytest.approx(5.41, abs=0.005)
    corr = np.array([[1.0, 0.5], [0.5, 1.0]])
    assert fisher_z_test(SuffStats(corr, 100), CiKey.make(0, 1), 0.05)


def test_zero_correlation_never_rejects():
    s = SuffStats(np.eye(3), 50)
    for alpha in (0.01, 0.5, 0.99):
        assert not fisher_z_test(s, CiKey.make(0, 1, {2}), alpha)


def test_degenerate_sample_keeps_dependence():
    s = SuffStats(np.eye(10), 10)
    assert fisher_z_test(s, CiKey.make(0, 1, range(2, 10)), 0.05)


def test_alpha_domain():
    s = SuffStats(np.eye(2), 10)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            fisher_z_test(s, CiKey.make(0, 1), bad)


def test_singular_submatrix_raises():
    x = np.random.default_rng(0).normal(size=(20, 2))
    data = Dataset.from_array(np.column_stack([x, x[:, 0] + x[:, 1]]))
    s = compute_suffstats(data)
    with pytest.raises(SingularSubmatrix):
        partial_correlation(s, CiKey.make(0, 1, {2}))
    ridge = compute_suffstats(data, ridge=True)
    partial_correlation(ridge, CiKey.make(0, 1, {2}))


def test_cache_idempotent_and_symmetric():
    _, s = sem_stats(6, 100, 4)
    cache = CiCache(s, 0.05)
    key = CiKey.make(1, 4, {0, 2})
    first = ci_query(cache, key)
    tests = cache.n_tests
    assert ci_query(cache, key) == first
    assert cache.n_tests == tests
    assert cache.query(4, 1, key.mask) == first
    assert cache.n_tests == tests


def test_cache_matches_direct_test():
    _, s = sem_stats(8, 150, 5)
    cache = CiCache(s, 0.05)
    rng = np.random.default_rng(0)
    for _ in range(1000):
        nodes = rng.permutation(8).tolist()
        key = CiKey.make(nodes[0], nodes[1], nodes[2:2 + rng.integers(0, 7)])
        assert ci_query(cache, key) is fisher_z_test(s, key, 0.05)


def test_cache_alpha_immutable():
    cache = CiCache(SuffStats(np.eye(2), 10), 0.05)
    with pytest.raises(AttributeError):
        cache.alpha = 0.1
