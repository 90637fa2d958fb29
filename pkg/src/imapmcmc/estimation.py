"""Edge-feature posteriors from traces, CPDAGs, and ROC evaluation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .bits import members
from .dag import Dag
from .errors import DegenerateTruth, EmptyTrace, ZeroVariance

KINDS = ("directed", "undirected", "compelled")


@dataclass(frozen=True)
class Cpdag:
    """Completed partially directed graph.

    ``directed`` holds the compelled edges ``(u, v)``; ``undirected`` holds the
    reversible ones as ``(min, max)`` pairs.
    """

    p: int
    directed: frozenset
    undirected: frozenset

    def skeleton(self):
        return {(min(u, v), max(u, v)) for u, v in self.directed} | set(self.undirected)

    def write_csv(self, path, names):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["from", "to", "type"])
            for u, v in sorted(self.directed):
                w.writerow([names[u], names[v], "directed"])
            for u, v in sorted(self.undirected):
                w.writerow([names[u], names[v], "undirected"])


def _order_edges(dag: Dag):
    """Edges sorted for labeling: child rank ascending, then parent rank descending."""
    rank = {v: k for k, v in enumerate(dag.topological_order())}
    return sorted(dag.edges, key=lambda e: (rank[e[1]], -rank[e[0]]))


def cpdag_of(dag: Dag) -> Cpdag:
    """CPDAG of ``dag`` by compelled-edge labeling over an edge ordering.

    An edge is compelled iff it has the same orientation in every DAG in the
    Markov equivalence class of ``dag``.
    """
    par = dag.parents
    compelled, reversible = set(), set()

    def unknown(e):
        return e not in compelled and e not in reversible

    for x, y in _order_edges(dag):
        if not unknown((x, y)):
            continue
        done = False
        for w in members(par[x]):
            if (w, x) not in compelled:
                continue
            if not par[y] >> w & 1:
                for z in members(par[y]):
                    reversible.discard((z, y))
                    compelled.add((z, y))
                done = True
                break
            compelled.add((w, y))
        if done:
            continue
        into_y = [(z, y) for z in members(par[y])]
        if any(z != x and not par[x] >> z & 1 for z in members(par[y])):
            target = compelled
        else:
            target = reversible
        for e in into_y:
            if unknown(e):
                target.add(e)
    return Cpdag(
        dag.p,
        frozenset(compelled),
        frozenset((min(u, v), max(u, v)) for u, v in reversible),
    )


@dataclass
class FeatureEstimate:
    kind: str
    values: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        self.values = np.asarray(self.values, dtype=float)
        if not self.names:
            self.names = tuple(f"X{v + 1}" for v in range(self.values.shape[0]))

    @property
    def p(self):
        return self.values.shape[0]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["", *self.names])
            for name, row in zip(self.names, self.values):
                w.writerow([name, *(f"{x:.10g}" for x in row)])


def _indicator(dag_or_cpdag, kind, p):
    m = np.zeros((p, p))
    if kind == "directed":
        for u, v in dag_or_cpdag.edges:
            m[u, v] = 1.0
    elif kind == "undirected":
        for u, v in dag_or_cpdag.edges:
            m[u, v] = m[v, u] = 1.0
    else:
        cp = dag_or_cpdag if isinstance(dag_or_cpdag, Cpdag) else cpdag_of(dag_or_cpdag)
        for u, v in cp.directed:
            m[u, v] = 1.0
    return m


def feature_posterior(samples, kind: str, names=()) -> FeatureEstimate:
    """Monte Carlo edge-feature probabilities over sampled DAGs.

    ``samples`` is a :class:`~imapmcmc.sampler.Trace` or an iterable of
    :class:`Dag`. ``compelled`` counts samples whose CPDAG has ``u -> v``
    compelled.
    """
    if hasattr(samples, "dags"):
        names = names or samples.names
        samples = samples.dags()
    samples = list(samples)
    if not samples:
        raise EmptyTrace("no samples to estimate from")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    p = samples[0].p
    acc = np.zeros((p, p))
    seen = {}
    for dag in samples:
        key = tuple(dag.parents)
        m = seen.get(key)
        if m is None:
            m = seen[key] = _indicator(dag, kind, p)
        acc += m
    return FeatureEstimate(kind, acc / len(samples), tuple(names))


def cross_run_correlation(a: FeatureEstimate, b: FeatureEstimate) -> float:
    """Pearson correlation of two estimates over off-diagonal entries."""
    if a.kind != b.kind or a.p != b.p:
        raise ValueError("estimates differ in kind or size")
    off = ~np.eye(a.p, dtype=bool)
    x, y = a.values[off], b.values[off]
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ZeroVariance("a constant estimate has no correlation")
    return float(np.corrcoef(x, y)[0, 1])


@dataclass
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auroc: float

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "fpr", "tpr"])
            for t, f, r in zip(self.thresholds, self.fpr, self.tpr):
                w.writerow([f"{t:.10g}", f"{f:.10g}", f"{r:.10g}"])

    def write_metrics(self, path):
        with open(path, "w") as fh:
            json.dump({"auroc": self.auroc}, fh)
            fh.write("\n")


def _scores_and_labels(estimate: FeatureEstimate, truth):
    p = estimate.p
    if truth.p != p:
        raise ValueError("truth and estimate differ in size")
    if estimate.kind == "compelled" and isinstance(truth, Dag):
        truth = cpdag_of(truth)
    if isinstance(truth, Cpdag) and estimate.kind != "compelled":
        if estimate.kind == "directed":
            lab = np.zeros((p, p))
            for u, v in truth.directed:
                lab[u, v] = 1.0
            for u, v in truth.undirected:
                lab[u, v] = lab[v, u] = 1.0
        else:
            lab = np.zeros((p, p))
            for u, v in truth.skeleton():
                lab[u, v] = lab[v, u] = 1.0
    else:
        lab = _indicator(truth, estimate.kind, p)
    if estimate.kind == "undirected":
        mask = np.triu(np.ones((p, p), dtype=bool), 1)
    else:
        mask = ~np.eye(p, dtype=bool)
    return estimate.values[mask], lab[mask].astype(bool)


def roc_curve(estimate: FeatureEstimate, truth, eps: float = 1e-9) -> RocCurve:
    """ROC over all thresholds in the estimate; ties form a single step.

    Undirected estimates are scored over unordered pairs, the others over
    ordered pairs. For compelled estimates a DAG truth is converted to its
    CPDAG first.
    """
    scores, labels = _scores_and_labels(estimate, truth)
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise DegenerateTruth(f"truth has {pos} positives and {neg} negatives")
    thresholds = np.concatenate([[1.0 + eps], np.unique(np.append(scores, 0.0))[::-1]])
    tpr = np.array([(scores[labels] >= t).sum() / pos for t in thresholds])
    fpr = np.array([(scores[~labels] >= t).sum() / neg for t in thresholds])
    auroc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(thresholds, fpr, tpr, auroc)
