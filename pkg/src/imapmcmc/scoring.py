"""BGe marginal likelihood, structural priors and the unnormalized posterior.

The BGe score uses the Gaussian-Wishart prior with isotropic parameter
matrix ``T = t_scale * I`` and prior mean zero on standardized, centered
data, so the posterior scatter matrix is ``R = T + (n - 1) * corr``. The
local score of a node with parent set ``Pa`` is the ratio of the marginal
likelihoods of the column sets ``Pa + {node}`` and ``Pa``, which makes the
total score equal across Markov-equivalent DAGs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bits import mask_of, members
from .ci import SuffStats
from .dag import Dag
from .errors import SingularSubmatrix


@dataclass(frozen=True)
class BgeHyper:
    """BGe hyperparameters; ``None`` fields take their defaults for a given p.

    Defaults: ``alpha_mu = 1``, ``alpha_w = p + 2`` and
    ``t_scale = alpha_mu * (alpha_w - p - 1) / (alpha_mu + 1)``.
    """

    alpha_mu: float = 1.0
    alpha_w: float | None = None
    t_scale: float | None = None

    def resolve(self, p: int) -> "BgeHyper":
        aw = float(p + 2) if self.alpha_w is None else float(self.alpha_w)
        am = float(self.alpha_mu)
        t = am * (aw - p - 1) / (am + 1) if self.t_scale is None else float(self.t_scale)
        if am <= 0:
            raise ValueError("alpha_mu must be positive")
        if aw <= p - 1:
            raise ValueError(f"alpha_w must exceed p - 1 = {p - 1}")
        if t <= 0:
            raise ValueError("t_scale must be positive")
        return BgeHyper(am, aw, t)

    def to_json(self) -> dict:
        return {"alpha_mu": self.alpha_mu, "alpha_w": self.alpha_w, "t_scale": self.t_scale}


class BgeScore:
    """Memoized BGe local scores for one set of sufficient statistics."""

    def __init__(self, stats: SuffStats, hyper: BgeHyper | None = None):
        self.stats = stats
        p, n = stats.p, stats.n
        self.hyper = (hyper or BgeHyper()).resolve(p)
        am, aw, t = self.hyper.alpha_mu, self.hyper.alpha_w, self.hyper.t_scale
        self.R = np.ascontiguousarray(t * np.eye(p) + (n - 1) * stats.corr)
        self._log_t = math.log(t)
        self._const = 0.5 * (math.log(am) - math.log(n + am)) - 0.5 * n * math.log(math.pi)
        self._aw_p = aw - p
        self.memo: dict = {}

    def _logdet(self, idx):
        val, rcond = kernels.logdet_sub(self.R, idx)
        if math.isnan(val):
            raise SingularSubmatrix(idx, rcond, what="posterior scatter")
        return val

    def local_uncached(self, node: int, parents) -> float:
        pa = sorted(int(u) for u in parents)
        if node in pa:
            raise ValueError("a node cannot be its own parent")
        n = self.stats.n
        l = len(pa) + 1
        a = self._aw_p + l
        return (
            self._const
            + math.lgamma(0.5 * (n + a))
            - math.lgamma(0.5 * a)
            + 0.5 * (self._aw_p + 2 * l - 1) * self._log_t
            - 0.5 * (n + a) * self._logdet(pa + [node])
            + 0.5 * (n + a - 1) * self._logdet(pa)
        )

    def local(self, node: int, parent_mask: int) -> float:
        key = (node, parent_mask)
        hit = self.memo.get(key)
        if hit is None:
            hit = self.local_uncached(node, members(parent_mask))
            self.memo[key] = hit
        return hit

    def total(self, dag: Dag) -> float:
        local = self.local
        return sum(local(v, pa) for v, pa in enumerate(dag.parents))


def bge_local_score(node, parents, stats: SuffStats, hyper: BgeHyper | None = None) -> float:
    """Log marginal likelihood contribution of ``node`` given ``parents``."""
    return BgeScore(stats, hyper).local_uncached(node, parents)


def bge_log_marginal(dag: Dag, stats: SuffStats, hyper: BgeHyper | None = None,
                     score: BgeScore | None = None) -> float:
    """Sum of local scores. Pass ``score`` to reuse its memo."""
    if score is None:
        score = BgeScore(stats, hyper)
    return score.total(dag)


# -- priors -------------------------------------------------------------


@dataclass(frozen=True)
class OrderClass:
    label: str
    nodes: frozenset
    weight: float = 1.0


@dataclass(frozen=True)
class PathBonus:
    sources: frozenset
    targets: frozenset
    weight: float = 1.0


@dataclass(frozen=True)
class PriorSpec:
    """Log-prior ``-gamma * |edges|`` plus optional order-class and path bonuses.

    ``order_classes`` are listed in precedence order. A node of class ``c``
    (other than the last class) earns the class weight when none of its
    ancestors belongs to a later class. A path constraint pays its weight
    once per source node with a directed path into the target set.
    """

    gamma: float = 0.0
    order_classes: tuple = ()
    paths: tuple = ()
    _masks: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.gamma >= 0 or not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite and non-negative")
        seen = set()
        for c in self.order_classes:
            if seen & c.nodes:
                raise ValueError(f"order class {c.label!r} overlaps an earlier class")
            seen |= c.nodes
        for w in [c.weight for c in self.order_classes] + [b.weight for b in self.paths]:
            if not math.isfinite(w):
                raise ValueError("prior weights must be finite")
        later = []
        acc = 0
        for c in reversed(self.order_classes):
            later.append(acc)
            acc |= mask_of(c.nodes)
        later.reverse()
        classes = tuple(
            (members(mask_of(c.nodes)), later[k], c.weight)
            for k, c in enumerate(self.order_classes[:-1])
        )
        paths = tuple((members(mask_of(b.sources)), members(mask_of(b.targets)), b.weight)
                      for b in self.paths)
        object.__setattr__(self, "_masks", (classes, paths))

    @property
    def structural(self) -> bool:
        return bool(self.order_classes or self.paths)

    @classmethod
    def from_json(cls, obj, names) -> "PriorSpec":
        index = {name: k for k, name in enumerate(names)}

        def nodes(seq):
            try:
                return frozenset(index[s] if isinstance(s, str) else int(s) for s in seq)
            except KeyError as exc:
                raise ValueError(f"unknown node {exc} in prior") from None

        classes = tuple(
            OrderClass(str(c.get("label", k)), nodes(c["nodes"]), float(c.get("weight", 1.0)))
            for k, c in enumerate(obj.get("order_classes", []))
        )
        paths = tuple(
            PathBonus(nodes(b["from"]), nodes(b["to"]), float(b.get("weight", 1.0)))
            for b in obj.get("paths", [])
        )
        return cls(float(obj.get("gamma", 0.0)), classes, paths)

    def to_json(self, names) -> dict:
        return {
            "gamma": self.gamma,
            "order_classes": [
                {"label": c.label, "nodes": [names[v] for v in sorted(c.nodes)], "weight": c.weight}
                for c in self.order_classes
            ],
            "paths": [
                {"from": [names[v] for v in sorted(b.sources)],
                 "to": [names[v] for v in sorted(b.targets)], "weight": b.weight}
                for b in self.paths
            ],
        }


def log_prior(dag: Dag, spec: PriorSpec) -> float:
    out = -spec.gamma * dag.n_edges
    if not spec.structural:
        return out
    anc = dag.ancestor_masks()
    classes, paths = spec._masks
    for nodes, later, weight in classes:
        for v in nodes:
            if anc[v] & later == 0:
                out += weight
    for sources, targets, weight in paths:
        for s in sources:
            if any(anc[t] >> s & 1 for t in targets):
                out += weight
    return out


def log_posterior_unnorm(dag: Dag, stats: SuffStats, hyper: BgeHyper | None, spec: PriorSpec,
                         score: BgeScore | None = None) -> float:
    return bge_log_marginal(dag, stats, hyper, score) + log_prior(dag, spec)


class Posterior:
    """Unnormalized log-posterior over DAGs for fixed data, hyperparameters and prior."""

    def __init__(self, stats: SuffStats, hyper: BgeHyper | None = None,
                 prior: PriorSpec | None = None):
        self.bge = BgeScore(stats, hyper)
        self.prior = prior or PriorSpec()

    def __call__(self, dag: Dag) -> float:
        local = self.bge.local
        total = 0.0
        for v, pa in enumerate(dag.parents):
            total += local(v, pa)
        if self.prior.structural:
            return total + log_prior(dag, self.prior)
        return total - self.prior.gamma * dag.n_edges
