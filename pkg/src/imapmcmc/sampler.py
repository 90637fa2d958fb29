"""Metropolis-Hastings over permutations with minimal I-MAP states."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .bits import members
from .ci import CiCache, Dataset, SuffStats, compute_suffstats
from .dag import Dag
from .imap import (FIRST_LAST, apply_transposition, build_min_imap, check_permutation, moves,
                   umi_apply)
from .scoring import BgeHyper, Posterior, PriorSpec

BLOCK = 4096


@dataclass(frozen=True)
class RandomInit:
    pass


@dataclass(frozen=True)
class GivenPermutation:
    perm: tuple


@dataclass(frozen=True)
class BestOfM:
    m: int


@dataclass(frozen=True)
class ChainConfig:
    """Chain settings. ``kappa`` is the thinning rate: every ``ceil(1 / kappa)``-th
    post-burn-in iteration is stored."""

    iters: int = 100_000
    burn_in: int = 20_000
    kappa: float = 0.01
    self_loop: float = 0.1
    alpha: float = 0.05
    seed: int = 0
    init: RandomInit | GivenPermutation | BestOfM = RandomInit()
    ridge: bool = False
    debug: bool = False

    def __post_init__(self):
        if self.iters < 0 or self.burn_in < 0:
            raise ValueError("iters and burn_in must be non-negative")
        if not 0.0 < self.kappa <= 1.0:
            raise ValueError("kappa must lie in (0, 1]")
        if not 0.0 < self.self_loop < 1.0:
            raise ValueError("self_loop must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if isinstance(self.init, BestOfM) and self.init.m < 1:
            raise ValueError("best-of-m needs m >= 1")

    @property
    def thin(self) -> int:
        return max(1, math.ceil(1.0 / self.kappa - 1e-9))

    def to_json(self) -> dict:
        out = asdict(self)
        if isinstance(self.init, GivenPermutation):
            out["init"] = {"kind": "given", "perm": list(self.init.perm)}
        elif isinstance(self.init, BestOfM):
            out["init"] = {"kind": "best-of", "m": self.init.m}
        else:
            out["init"] = {"kind": "random"}
        return out

    @classmethod
    def from_json(cls, obj) -> "ChainConfig":
        obj = dict(obj)
        init = obj.pop("init", {"kind": "random"})
        kind = init.get("kind", "random")
        if kind == "given":
            init = GivenPermutation(tuple(init["perm"]))
        elif kind == "best-of":
            init = BestOfM(int(init["m"]))
        else:
            init = RandomInit()
        return cls(init=init, **obj)


class MinImapModel:
    """CI cache plus scorer: maps permutations to minimal I-MAPs and scores them."""

    def __init__(self, stats: SuffStats, alpha=0.05, hyper: BgeHyper | None = None,
                 prior: PriorSpec | None = None, test=None, cache: CiCache | None = None):
        self.stats = stats
        self.cache = cache if cache is not None else CiCache(stats, alpha, test)
        self.posterior = Posterior(stats, hyper, prior)

    @property
    def p(self):
        return self.stats.p

    def dag(self, perm) -> Dag:
        return build_min_imap(perm, self.cache)

    def score(self, dag: Dag) -> float:
        return self.posterior(dag)


class ChainState(NamedTuple):
    perm: tuple
    dag: Dag
    log_score: float


@dataclass
class Sample:
    iter: int
    parents: tuple
    log_score: float

    @property
    def edges(self):
        return sorted((u, v) for v, pa in enumerate(self.parents) for u in members(pa))

    def dag(self) -> Dag:
        return Dag(len(self.parents), self.parents)


@dataclass
class Trace:
    p: int
    names: tuple
    config: ChainConfig
    samples: list = field(default_factory=list)
    accepted: int = 0
    stays: int = 0
    proposals: int = 0
    init_perm: tuple = ()
    init_log_score: float = math.nan
    final_perm: tuple = ()
    final_log_score: float = math.nan
    timings: dict = field(default_factory=dict)
    ci_tests: int = 0

    @property
    def acceptance_rate(self) -> float:
        """Accepted moves over all iterations, counting stays as accepted."""
        return (self.accepted + self.stays) / self.proposals if self.proposals else math.nan

    @property
    def move_acceptance_rate(self) -> float:
        moved = self.proposals - self.stays
        return self.accepted / moved if moved else math.nan

    def dags(self):
        return [s.dag() for s in self.samples]

    def summary(self) -> dict:
        return {
            "p": self.p,
            "names": list(self.names),
            "n_samples": len(self.samples),
            "iterations": self.proposals,
            "accepted": self.accepted,
            "stays": self.stays,
            "acceptance_rate": _finite_or_none(self.acceptance_rate),
            "move_acceptance_rate": _finite_or_none(self.move_acceptance_rate),
            "init_perm": list(self.init_perm),
            "init_log_score": _finite_or_none(self.init_log_score),
            "final_perm": list(self.final_perm),
            "final_log_score": _finite_or_none(self.final_log_score),
            "ci_tests": self.ci_tests,
            "timings": self.timings,
            "config": self.config.to_json(),
        }

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for s in self.samples:
                rec = {"iter": s.iter, "log_score": s.log_score, "edges": [list(e) for e in s.edges]}
                fh.write(json.dumps(rec) + "\n")


def _finite_or_none(x):
    return x if isinstance(x, (int, float)) and math.isfinite(x) else None


def read_trace_jsonl(path, p):
    """Load ``(iter, Dag, log_score)`` records written by :meth:`Trace.write_jsonl`."""
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = json.loads(line)
                out.append(Sample(rec["iter"], tuple(Dag.from_edges(p, rec["edges"]).parents),
                                  rec["log_score"]))
    return out


# -- proposal --------------------------------------------------------------


def _pick(u, s, mv):
    if u < s:
        return None
    k = int((u - s) / (1.0 - s) * len(mv))
    return mv[min(k, len(mv) - 1)]


def proposal_probabilities(p, s):
    """Map from move (``None`` = stay) to its proposal probability."""
    mv = moves(p)
    out = {None: s}
    for t in mv:
        out[t] = (1.0 - s) / len(mv)
    return out


def propose(perm, s, rng):
    """Stay with probability ``s``; otherwise one of the ``p`` moves uniformly.

    Returns ``(new_perm, move)`` with ``move`` None for a stay.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    t = _pick(rng.random(), s, moves(len(perm)))
    if t is None:
        return tuple(perm), None
    return apply_transposition(perm, t), t


# -- chain -----------------------------------------------------------------


def _step(state: ChainState, t, u_acc, model: MinImapModel):
    if t is None:
        return state, True
    perm, dag = umi_apply(state.perm, state.dag, t, model.cache)
    new_score = model.score(dag)
    diff = new_score - state.log_score
    if diff >= 0.0 or u_acc < math.exp(diff):
        return ChainState(perm, dag, new_score), True
    return state, False


def mh_step(state: ChainState, config: ChainConfig, model: MinImapModel, rng):
    """One Metropolis-Hastings iteration; returns ``(state, accepted)``.

    A rejected proposal leaves the state unchanged. Stays count as accepted.
    """
    t = _pick(rng.random(), config.self_loop, moves(len(state.perm)))
    u_acc = rng.random()
    return _step(state, t, u_acc, model)


def seed_best_of_m(model: MinImapModel, m: int, rng):
    """Best of ``m`` random permutations by minimal I-MAP score (first wins ties)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    best = None
    for _ in range(m):
        perm = tuple(int(v) for v in rng.permutation(model.p))
        score = model.score(model.dag(perm))
        if best is None or score > best[1]:
            best = (perm, score)
    return best[0]


def _initial_perm(config, model, rng):
    init = config.init
    if isinstance(init, GivenPermutation):
        return check_permutation(init.perm, model.p)
    if isinstance(init, BestOfM):
        return seed_best_of_m(model, init.m, rng)
    return tuple(int(v) for v in rng.permutation(model.p))


def run_chain(data: Dataset | SuffStats, config: ChainConfig, hyper: BgeHyper | None = None,
              prior: PriorSpec | None = None, model: MinImapModel | None = None,
              names=None) -> Trace:
    """Run one chain and return its thinned post-burn-in trace.

    ``data`` may be a :class:`Dataset` or precomputed :class:`SuffStats`.
    Pass ``model`` to share a CI cache and score memo across chains; it
    must have been built with ``config.alpha``.
    """
    if isinstance(data, Dataset):
        names = data.names
        stats = compute_suffstats(data, ridge=config.ridge)
    else:
        stats = data
    if names is None:
        names = tuple(f"X{v + 1}" for v in range(stats.p))
    if model is None:
        model = MinImapModel(stats, config.alpha, hyper, prior)
    p = stats.p
    if p < 2:
        raise ValueError("need at least two variables")
    rng = np.random.default_rng(config.seed)
    trace = Trace(p, tuple(names), config)

    t0 = time.perf_counter()
    perm = _initial_perm(config, model, rng)
    dag = model.dag(perm)
    state = ChainState(perm, dag, model.score(dag))
    t1 = time.perf_counter()
    trace.init_perm = perm
    trace.init_log_score = state.log_score

    mv = moves(p)
    s = config.self_loop
    thin = config.thin
    samples = trace.samples
    accepted = stays = 0
    tests_before = model.cache.n_tests
    i = 0
    while i < config.iters:
        block = min(BLOCK, config.iters - i)
        u = rng.random(2 * block)
        for b in range(block):
            i += 1
            t = _pick(u[2 * b], s, mv)
            if t is None:
                stays += 1
            else:
                state, ok = _step(state, t, u[2 * b + 1], model)
                accepted += ok
            if i > config.burn_in and i % thin == 0:
                samples.append(Sample(i, tuple(state.dag.parents), state.log_score))
            if config.debug and i % 1000 == 0:
                _check_state(state, model)
    t2 = time.perf_counter()

    trace.accepted = accepted
    trace.stays = stays
    trace.proposals = config.iters
    trace.final_perm = state.perm
    trace.final_log_score = state.log_score
    trace.ci_tests = model.cache.n_tests - tests_before
    trace.timings = {
        "init_seconds": t1 - t0,
        "loop_seconds": t2 - t1,
        "mean_iter_seconds": (t2 - t1) / config.iters if config.iters else None,
    }
    return trace


def _check_state(state, model):
    fresh = model.dag(state.perm)
    if fresh != state.dag:
        raise AssertionError(f"stored DAG differs from minimal I-MAP of {state.perm}")
    if not math.isclose(model.score(fresh), state.log_score, rel_tol=1e-12, abs_tol=1e-9):
        raise AssertionError("stored log score does not match recomputation")


def max_workers():
    env = os.environ.get("MINIMAP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_one(args):
    return run_chain(*args)


def run_chains(data, configs, hyper=None, prior=None):
    """Run independent chains, in parallel up to ``MINIMAP_THREADS`` workers."""
    jobs = [(data, c, hyper, prior) for c in configs]
    workers = min(max_workers(), len(jobs))
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_run_one, jobs))


__all__ = [
    "BestOfM", "ChainConfig", "ChainState", "FIRST_LAST", "GivenPermutation", "MinImapModel",
    "RandomInit", "Sample", "Trace", "mh_step", "propose", "proposal_probabilities",
    "read_trace_jsonl", "run_chain", "run_chains", "seed_best_of_m",
]
