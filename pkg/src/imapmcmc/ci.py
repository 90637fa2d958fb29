"""Gaussian sufficient statistics and Fisher-z conditional independence tests."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .bits import mask_of, members
from .errors import DataError, SingularSubmatrix, ZeroVarianceColumn

CLAMP_EPS = 1e-12
RCOND_MIN = 1e-12
RIDGE = 1e-8


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``n x p`` matrix of observations with one name per column."""

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError("data must be a 2-d array")
        n, p = values.shape
        if n < 2:
            raise DataError(f"need at least 2 observations, got {n}")
        if p < 2:
            raise DataError(f"need at least 2 variables, got {p}")
        if not np.all(np.isfinite(values)):
            raise DataError("data contain non-finite entries")
        names = tuple(str(s) for s in self.names)
        if len(names) != p:
            raise DataError(f"{len(names)} names for {p} columns")
        if len(set(names)) != p:
            raise DataError("column names must be distinct")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values, names=None) -> "Dataset":
        values = np.asarray(values, dtype=float)
        if names is None and values.ndim == 2:
            names = [f"X{v + 1}" for v in range(values.shape[1])]
        return cls(values, tuple(names or ()))

    @classmethod
    def read_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise DataError(f"{path}: empty file")
        header, body = rows[0], [r for r in rows[1:] if r]
        try:
            values = np.array([[float(x) for x in r] for r in body], dtype=float)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
        if values.ndim != 2 or values.shape[1] != len(header):
            raise DataError(f"{path}: ragged rows or header/column mismatch")
        return cls(values, tuple(h.strip() for h in header))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.names)
            for row in self.values:
                w.writerow([repr(float(x)) for x in row])


@dataclass(frozen=True, eq=False)
class SuffStats:
    """Sample correlation matrix and sample size; immutable and shareable."""

    corr: np.ndarray
    n: int

    @property
    def p(self) -> int:
        return self.corr.shape[0]

    @classmethod
    def from_covariance(cls, cov, n) -> "SuffStats":
        """Statistics for a known covariance, e.g. a population oracle."""
        cov = np.asarray(cov, dtype=float)
        sd = np.sqrt(np.diag(cov))
        corr = cov / np.outer(sd, sd)
        np.fill_diagonal(corr, 1.0)
        return cls(np.ascontiguousarray(np.clip(corr, -1.0, 1.0)), int(n))


def compute_suffstats(data: Dataset, ridge: bool = False) -> SuffStats:
    """Correlation matrix of the centered data.

    With ``ridge=True`` a ridge of ``1e-8 * I`` is added and the matrix is
    rescaled back to unit diagonal.
    """
    x = data.values - data.values.mean(axis=0)
    sd = np.sqrt((x * x).sum(axis=0) / (data.n - 1))
    for v, s in enumerate(sd):
        if not s > 0.0:
            raise ZeroVarianceColumn(data.names[v])
    z = x / sd
    corr = (z.T @ z) / (data.n - 1)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    corr = np.clip(corr, -1.0, 1.0)
    if ridge:
        corr = (corr + RIDGE * np.eye(data.p)) / (1.0 + RIDGE)
    return SuffStats(np.ascontiguousarray(corr), data.n)


class CiKey(NamedTuple):
    """Canonical test triple: ``i < j`` and neither in ``S``."""

    i: int
    j: int
    S: frozenset

    @classmethod
    def make(cls, i, j, S=()) -> "CiKey":
        S = frozenset(int(v) for v in S)
        i, j = int(i), int(j)
        if i == j:
            raise ValueError("CI key needs two distinct nodes")
        if i in S or j in S:
            raise ValueError("conditioning set contains a tested node")
        return cls(min(i, j), max(i, j), S)

    @property
    def mask(self) -> int:
        return mask_of(self.S)


def _pcorr(stats: SuffStats, i, j, cond) -> float:
    rho, rcond = kernels.partial_corr(stats.corr, i, j, cond)
    if not rcond >= RCOND_MIN or math.isnan(rho):
        raise SingularSubmatrix([*cond, i, j], rcond)
    return min(max(rho, -1.0 + CLAMP_EPS), 1.0 - CLAMP_EPS)


def partial_correlation(stats: SuffStats, key: CiKey) -> float:
    """Sample partial correlation of ``key.i`` and ``key.j`` given ``key.S``.

    Clamped to ``[-1 + 1e-12, 1 - 1e-12]``. Raises ``SingularSubmatrix`` when
    the correlation submatrix over ``{i, j} | S`` is numerically singular.
    """
    if len(key.S) > stats.p - 2:
        raise ValueError("conditioning set too large")
    return _pcorr(stats, key.i, key.j, sorted(key.S))


def fisher_z_statistic(rho: float, n: int, size: int) -> float:
    return math.sqrt(n - size - 3) * abs(math.atanh(rho))


def critical_value(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return NormalDist().inv_cdf(1.0 - alpha / 2.0)


def _fisher(stats, i, j, cond, crit) -> bool:
    if stats.n - len(cond) - 3 <= 0:
        # Too few samples for the statistic; keep the edge.
        return True
    rho = _pcorr(stats, i, j, cond)
    return fisher_z_statistic(rho, stats.n, len(cond)) > crit


def fisher_z_test(stats: SuffStats, key: CiKey, alpha: float) -> bool:
    """Two-sided Fisher-z test; True means dependence (independence rejected)."""
    return _fisher(stats, key.i, key.j, sorted(key.S), critical_value(alpha))


# (stats, i, j, sorted conditioning list) -> dependent?
CiTest = Callable[[SuffStats, int, int, Sequence[int]], bool]


def population_test(tol: float = 1e-9) -> CiTest:
    """Exact-zero test for statistics built from a population covariance."""

    def test(stats, i, j, cond):
        rho, rcond = kernels.partial_corr(stats.corr, i, j, cond)
        if math.isnan(rho):
            raise SingularSubmatrix([*cond, i, j], rcond)
        return abs(rho) > tol

    return test


@dataclass(eq=False)
class CiCache:
    """Memoized CI outcomes for one dataset and significance level.

    Keys are ``(i, j, mask)`` with ``i < j`` and the conditioning set as a
    bitmask. Concurrent inserts of the same key store the same value.
    """

    stats: SuffStats
    alpha: float = 0.05
    test: CiTest | None = None
    entries: dict = field(default_factory=dict, repr=False)
    n_tests: int = field(default=0, repr=False)
    n_queries: int = field(default=0, repr=False)

    def __post_init__(self):
        self._crit = critical_value(self.alpha)
        if self.test is None:
            crit = self._crit
            self.test = lambda stats, i, j, cond: _fisher(stats, i, j, cond, crit)

    def __setattr__(self, name, value):
        if name == "alpha" and "alpha" in self.__dict__:
            raise AttributeError("alpha is fixed once the cache is built")
        super().__setattr__(name, value)

    def __len__(self):
        return len(self.entries)

    def query(self, i: int, j: int, mask: int) -> bool:
        if i > j:
            i, j = j, i
        self.n_queries += 1
        key = (i, j, mask)
        hit = self.entries.get(key)
        if hit is not None:
            return hit
        self.n_tests += 1
        out = bool(self.test(self.stats, i, j, members(mask)))
        self.entries[key] = out
        return out


def ci_query(cache: CiCache, key: CiKey) -> bool:
    """Cached CI outcome for ``key``; computes and stores it on a miss."""
    return cache.query(key.i, key.j, key.mask)
