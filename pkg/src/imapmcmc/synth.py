"""Random DAGs and linear Gaussian structural equation models."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bits import members
from .ci import Dataset
from .dag import Dag

WEIGHT_LOW = 0.25
WEIGHT_HIGH = 1.0


def default_edge_prob(p: int) -> float:
    """Edge probability giving about ``p`` edges in expectation before pruning."""
    return min(1.0, 2.0 / (p - 1))


def random_dag(p: int, max_indegree: int | None = None, edge_prob: float | None = None,
               rng=None) -> Dag:
    """Random DAG over a uniformly random topological order.

    Each forward edge is kept with probability ``edge_prob``; nodes with more
    than ``max_indegree`` parents then keep a uniformly random subset of them.
    """
    rng = np.random.default_rng(rng)
    if p < 2:
        raise ValueError("p must be at least 2")
    if edge_prob is None:
        edge_prob = default_edge_prob(p)
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must lie in [0, 1]")
    if max_indegree is not None and max_indegree < 1:
        raise ValueError("max_indegree must be at least 1")
    order = rng.permutation(p)
    dag = Dag(p)
    for j in range(1, p):
        keep = rng.random(j) < edge_prob
        pa = [int(order[i]) for i in np.flatnonzero(keep)]
        if max_indegree is not None and len(pa) > max_indegree:
            pa = sorted(int(u) for u in rng.choice(pa, size=max_indegree, replace=False))
        for u in pa:
            dag.add_edge(u, int(order[j]))
    return dag


@dataclass
class SemSpec:
    """Linear SEM ``X_v = sum_u w[u, v] X_u + e_v`` with ``e_v ~ N(0, noise_var[v])``."""

    dag: Dag
    weights: dict
    noise_var: np.ndarray

    def __post_init__(self):
        self.noise_var = np.asarray(self.noise_var, dtype=float)
        if set(self.weights) != set(self.dag.edges):
            raise ValueError("weights must be keyed exactly by the DAG's edges")
        if self.noise_var.shape != (self.dag.p,) or not np.all(self.noise_var > 0):
            raise ValueError("need one positive noise variance per node")

    @property
    def p(self) -> int:
        return self.dag.p

    def weight_matrix(self) -> np.ndarray:
        w = np.zeros((self.p, self.p))
        for (u, v), val in self.weights.items():
            w[u, v] = val
        return w

    def to_json(self, names=None) -> dict:
        obj = {
            "p": self.p,
            "edges": [[u, v, float(self.weights[(u, v)])] for u, v in self.dag.edges],
            "noise_var": [float(x) for x in self.noise_var],
        }
        if names is not None:
            obj["names"] = list(names)
        return obj

    @classmethod
    def from_json(cls, obj) -> "SemSpec":
        p = int(obj["p"])
        edges = [(int(u), int(v)) for u, v, _ in obj["edges"]]
        weights = {(int(u), int(v)): float(w) for u, v, w in obj["edges"]}
        noise = obj.get("noise_var") or [1.0] * p
        return cls(Dag.from_edges(p, edges), weights, np.asarray(noise, dtype=float))

    def write(self, path, names=None):
        with open(path, "w") as fh:
            json.dump(self.to_json(names), fh, indent=2)


def random_weights(dag: Dag, rng=None, noise_var=1.0) -> SemSpec:
    """Edge weights uniform on ``[-1, -0.25] U [0.25, 1]``."""
    rng = np.random.default_rng(rng)
    weights = {}
    for e in dag.edges:
        sign = 1.0 if rng.random() < 0.5 else -1.0
        weights[e] = sign * rng.uniform(WEIGHT_LOW, WEIGHT_HIGH)
    return SemSpec(dag, weights, np.full(dag.p, float(noise_var)))


def sample_sem(spec: SemSpec, n: int, rng=None, names=None) -> Dataset:
    """Draw ``n`` i.i.d. rows, filling nodes in topological order."""
    rng = np.random.default_rng(rng)
    if n < 1:
        raise ValueError("n must be positive")
    order = spec.dag.topological_order()
    x = np.zeros((n, spec.p))
    sd = np.sqrt(spec.noise_var)
    for v in order:
        col = rng.normal(0.0, sd[v], size=n)
        for u in members(spec.dag.parents[v]):
            col += spec.weights[(u, v)] * x[:, u]
        x[:, v] = col
    if names is None:
        names = [f"X{v + 1}" for v in range(spec.p)]
    return Dataset(x, tuple(names))


def population_covariance(spec: SemSpec) -> np.ndarray:
    """``(I - W)^{-T} diag(noise) (I - W)^{-1}`` with ``W[u, v]`` the weight of u -> v."""
    assert spec.dag.is_acyclic(), "I - W is singular only for cyclic graphs"
    p = spec.p
    a = np.eye(p) - spec.weight_matrix()
    inv = np.linalg.solve(a, np.eye(p))
    cov = inv.T @ np.diag(spec.noise_var) @ inv
    return 0.5 * (cov + cov.T)
