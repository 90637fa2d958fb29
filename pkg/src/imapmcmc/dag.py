"""Directed acyclic graphs stored as per-node parent bitmasks."""

from __future__ import annotations

import csv
import json

import numpy as np

from .bits import members
from .errors import DataError


class Dag:
    """Directed graph over nodes ``0..p-1``.

    ``parents[v]`` is a bitmask of the parents of ``v``. The edge set is
    derived from it, so the two views cannot disagree. Acyclicity is checked
    by :meth:`is_acyclic`, not on every mutation.
    """

    __slots__ = ("p", "parents")

    def __init__(self, p: int, parents=None):
        self.p = int(p)
        self.parents = list(parents) if parents is not None else [0] * self.p
        if len(self.parents) != self.p:
            raise ValueError("need one parent mask per node")

    @classmethod
    def from_edges(cls, p, edges) -> "Dag":
        dag = cls(p)
        for u, v in edges:
            dag.add_edge(int(u), int(v))
        return dag

    @classmethod
    def from_adjacency(cls, adj) -> "Dag":
        adj = np.asarray(adj)
        return cls.from_edges(adj.shape[0], zip(*np.nonzero(adj)))

    def copy(self) -> "Dag":
        return Dag(self.p, self.parents)

    def add_edge(self, u, v):
        if u == v:
            raise ValueError("self-loops are not allowed")
        self.parents[v] |= 1 << u

    def remove_edge(self, u, v):
        self.parents[v] &= ~(1 << u)

    def has_edge(self, u, v) -> bool:
        return bool(self.parents[v] >> u & 1)

    def parent_list(self, v):
        return members(self.parents[v])

    def children_masks(self):
        out = [0] * self.p
        for v, pa in enumerate(self.parents):
            for u in members(pa):
                out[u] |= 1 << v
        return out

    @property
    def edges(self):
        """Sorted list of ``(parent, child)`` pairs."""
        return sorted((u, v) for v, pa in enumerate(self.parents) for u in members(pa))

    @property
    def n_edges(self) -> int:
        return sum(pa.bit_count() for pa in self.parents)

    def skeleton(self):
        return {(min(u, v), max(u, v)) for u, v in self.edges}

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.p, self.p), dtype=bool)
        for u, v in self.edges:
            a[u, v] = True
        return a

    def topological_order(self):
        """A topological order, or None if the graph has a cycle."""
        remaining = list(self.parents)
        placed = 0
        order = []
        todo = set(range(self.p))
        while todo:
            ready = [v for v in sorted(todo) if remaining[v] & ~placed == 0]
            if not ready:
                return None
            for v in ready:
                order.append(v)
                placed |= 1 << v
                todo.discard(v)
        return order

    def is_acyclic(self) -> bool:
        return self.topological_order() is not None

    def ancestor_masks(self):
        """``out[v]`` is the bitmask of proper ancestors of ``v``."""
        order = self.topological_order()
        if order is None:
            raise ValueError("graph has a cycle")
        anc = [0] * self.p
        for v in order:
            a = self.parents[v]
            for u in members(self.parents[v]):
                a |= anc[u]
            anc[v] = a
        return anc

    def consistent_with(self, perm) -> bool:
        pos = {v: k for k, v in enumerate(perm)}
        return all(pos[u] < pos[v] for u, v in self.edges)

    def key(self) -> str:
        """Canonical string of the sorted edge list."""
        return ";".join(f"{u}>{v}" for u, v in self.edges)

    def __eq__(self, other):
        return isinstance(other, Dag) and self.p == other.p and self.parents == other.parents

    def __hash__(self):
        return hash((self.p, tuple(self.parents)))

    def __repr__(self):
        return f"Dag(p={self.p}, edges={self.edges})"

    # -- serialization -------------------------------------------------

    def to_json(self) -> dict:
        return {"p": self.p, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, obj) -> "Dag":
        return cls.from_edges(obj["p"], obj["edges"])

    def write_edge_csv(self, path, names):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for u, v in self.edges:
                w.writerow([names[u], names[v]])

    @classmethod
    def read_edge_csv(cls, path, names) -> "Dag":
        index = {name: k for k, name in enumerate(names)}
        dag = cls(len(names))
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                if len(row) != 2:
                    raise DataError(f"{path}: expected 'parent,child' rows")
                try:
                    dag.add_edge(index[row[0].strip()], index[row[1].strip()])
                except KeyError as exc:
                    raise DataError(f"{path}: unknown node {exc}") from None
        return dag


def read_dag(path, names=None) -> Dag:
    """Load a DAG from JSON (``{"p", "edges"}``) or a name-based edge CSV."""
    if str(path).endswith(".json"):
        with open(path) as fh:
            obj = json.load(fh)
        edges = [e[:2] for e in obj["edges"]]
        if names is not None and edges and isinstance(edges[0][0], str):
            index = {name: k for k, name in enumerate(names)}
            edges = [(index[u], index[v]) for u, v in edges]
        return Dag.from_edges(obj["p"], edges)
    if names is None:
        raise DataError("edge CSV needs node names")
    return Dag.read_edge_csv(path, names)


def complete_dag(perm) -> Dag:
    dag = Dag(len(perm))
    seen = 0
    for v in perm:
        dag.parents[v] = seen
        seen |= 1 << v
    return dag

