"""Brute-force exact computations for small graphs.

Everything here enumerates: permutations (p <= 8), labeled DAGs (p <= 4 for
posteriors, p <= 5 for enumeration), and d-separation statements. These
serve as independent references for the sampler, the CPDAG labeling and
the BGe score.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .bits import members
from .ci import CiCache, Dataset, SuffStats, compute_suffstats
from .dag import Dag
from .errors import TooLarge
from .estimation import FeatureEstimate
from .imap import build_min_imap
from .scoring import BgeHyper, Posterior, PriorSpec

MAX_PERM_P = 8
MAX_DAG_P = 4


def enumerate_dags(p: int):
    """All labeled DAGs on ``p`` nodes (1, 1, 3, 25, 543, 29281 for p = 0..5)."""
    if p > 5:
        raise TooLarge(f"DAG enumeration is limited to p <= 5, got {p}")
    pairs = list(itertools.combinations(range(p), 2))
    for pattern in itertools.product((0, 1, 2), repeat=len(pairs)):
        dag = Dag(p)
        for (u, v), c in zip(pairs, pattern):
            if c == 1:
                dag.parents[v] |= 1 << u
            elif c == 2:
                dag.parents[u] |= 1 << v
        if dag.is_acyclic():
            yield dag


def d_separated(dag: Dag, x: int, y: int, given) -> bool:
    """d-separation via the moralized ancestral graph of ``{x, y} | given``."""
    given = set(given)
    anc = dag.ancestor_masks()
    keep = (1 << x) | (1 << y)
    for z in given:
        keep |= 1 << z
    for v in members(keep):
        keep |= anc[v]
    nbrs = defaultdict(set)
    for v in members(keep):
        pa = members(dag.parents[v])
        for u in pa:
            nbrs[u].add(v)
            nbrs[v].add(u)
        for a, b in itertools.combinations(pa, 2):
            nbrs[a].add(b)
            nbrs[b].add(a)
    seen = {x}
    stack = [x]
    while stack:
        u = stack.pop()
        for w in nbrs[u]:
            if w == y:
                return False
            if w not in seen and w not in given:
                seen.add(w)
                stack.append(w)
    return True


def dsep_signature(dag: Dag) -> frozenset:
    """All d-separation statements ``(i, j, S)`` with ``i < j`` that hold in ``dag``."""
    p = dag.p
    out = []
    for i, j in itertools.combinations(range(p), 2):
        rest = [v for v in range(p) if v != i and v != j]
        for r in range(len(rest) + 1):
            for S in itertools.combinations(rest, r):
                if d_separated(dag, i, j, S):
                    out.append((i, j, S))
    return frozenset(out)


def equivalence_classes(p: int):
    """Markov equivalence classes of all DAGs on ``p`` nodes, grouped by
    identical d-separation statements."""
    groups = defaultdict(list)
    for dag in enumerate_dags(p):
        groups[dsep_signature(dag)].append(dag)
    return list(groups.values())


@dataclass
class ExactPosterior:
    """Normalized posterior over an explicit DAG support."""

    support: dict
    log_normalizer: float
    log_scores: dict = field(default_factory=dict)
    multiplicity: dict = field(default_factory=dict)

    @property
    def p(self):
        return next(iter(self.support)).p

    def to_json(self) -> dict:
        return {dag.key(): prob for dag, prob in sorted(self.support.items(), key=lambda kv: -kv[1])}

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def _logsumexp(xs):
    m = max(xs)
    return m + math.log(sum(math.exp(x - m) for x in xs))


def _normalize(log_w: dict, log_scores, multiplicity=None) -> ExactPosterior:
    z = _logsumexp(list(log_w.values()))
    support = {dag: math.exp(lw - z) for dag, lw in log_w.items()}
    return ExactPosterior(support, z, dict(log_scores), dict(multiplicity or {}))


def _as_stats(data):
    if isinstance(data, SuffStats):
        return data
    if isinstance(data, Dataset):
        return compute_suffstats(data)
    raise TypeError("expected a Dataset or SuffStats")


def min_imap_support(stats: SuffStats, cache: CiCache):
    """Map each distinct minimal I-MAP to the number of permutations producing it."""
    if stats.p > MAX_PERM_P:
        raise TooLarge(f"permutation enumeration is limited to p <= {MAX_PERM_P}")
    counts = defaultdict(int)
    for perm in itertools.permutations(range(stats.p)):
        counts[build_min_imap(perm, cache)] += 1
    return counts


def exact_min_imap_posterior(data, alpha=0.05, hyper: BgeHyper | None = None,
                             prior: PriorSpec | None = None, weighting: str = "restricted",
                             test=None, cache: CiCache | None = None) -> ExactPosterior:
    """Exact posterior over the minimal I-MAPs of all ``p!`` permutations.

    ``weighting="restricted"`` normalizes score times prior over the distinct
    DAGs. ``weighting="permutation"`` additionally weights each DAG by the
    number of permutations that produce it; this is the DAG marginal of a
    chain whose permutation target is proportional to the score of its
    minimal I-MAP.
    """
    if weighting not in ("restricted", "permutation"):
        raise ValueError("weighting must be 'restricted' or 'permutation'")
    stats = _as_stats(data)
    if stats.p > MAX_PERM_P:
        raise TooLarge(f"exact minimal I-MAP posterior is limited to p <= {MAX_PERM_P}")
    if cache is None:
        cache = CiCache(stats, alpha, test)
    counts = min_imap_support(stats, cache)
    post = Posterior(stats, hyper, prior)
    log_scores = {dag: post(dag) for dag in counts}
    if weighting == "permutation":
        log_w = {dag: s + math.log(counts[dag]) for dag, s in log_scores.items()}
    else:
        log_w = log_scores
    return _normalize(log_w, log_scores, counts)


def exact_full_dag_posterior(data, hyper: BgeHyper | None = None,
                             prior: PriorSpec | None = None) -> ExactPosterior:
    """Exact posterior over every labeled DAG (p <= 4)."""
    stats = _as_stats(data)
    if stats.p > MAX_DAG_P:
        raise TooLarge(f"full DAG posterior is limited to p <= {MAX_DAG_P}")
    post = Posterior(stats, hyper, prior)
    log_scores = {dag: post(dag) for dag in enumerate_dags(stats.p)}
    return _normalize(log_scores, log_scores)


def edge_probs_of(post: ExactPosterior, names=()) -> FeatureEstimate:
    """Exact directed-edge probabilities under ``post``."""
    p = post.p
    m = np.zeros((p, p))
    for dag, prob in post.support.items():
        for u, v in dag.edges:
            m[u, v] += prob
    return FeatureEstimate("directed", np.clip(m, 0.0, 1.0), tuple(names))


def total_variation(a: dict, b: dict) -> float:
    """Total variation between two distributions given as ``{item: prob}``."""
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
