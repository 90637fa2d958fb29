import numpy as np
import pytest

from imapmcmc import _pykernels
from imapmcmc.ci import CiCache, SuffStats, compute_suffstats, population_test
from imapmcmc.synth import population_covariance, random_dag, random_weights, sample_sem

try:
    from imapmcmc import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


@pytest.fixture(scope="module", params=BACKENDS, ids=lambda m: m.BACKEND)
def backend(request):
    return request.param


def make_sem(p, seed, max_indegree=3, edge_prob=None):
    rng = np.random.default_rng(seed)
    dag = random_dag(p, max_indegree, edge_prob, rng)
    return random_weights(dag, rng), rng


def sem_data(p, n, seed, **kw):
    spec, rng = make_sem(p, seed, **kw)
    return spec, sample_sem(spec, n, rng)


def sem_stats(p, n, seed, **kw):
    spec, data = sem_data(p, n, seed, **kw)
    return spec, compute_suffstats(data)


def oracle_cache(spec, n=10**6):
    """CI cache answering from the exact population covariance."""
    stats = SuffStats.from_covariance(population_covariance(spec), n)
    return CiCache(stats, 0.05, population_test())


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
