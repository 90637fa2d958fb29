"""Minimal I-MAP construction and its incremental update under swaps.

A permutation is a tuple of node indices. A transposition is either an
integer ``k`` in ``1..p-1`` (swap positions ``k`` and ``k + 1``, counting
from 1) or :data:`FIRST_LAST`, the wrap-around swap of the first and last
positions.
"""

from __future__ import annotations

from .ci import CiCache
from .dag import Dag
from .errors import NotAdjacent

FIRST_LAST = "first-last"


def check_permutation(perm, p=None):
    perm = tuple(int(v) for v in perm)
    if sorted(perm) != list(range(len(perm))) or (p is not None and len(perm) != p):
        raise ValueError(f"not a permutation of 0..{(p or len(perm)) - 1}: {perm}")
    return perm


def position(perm):
    """Inverse lookup: ``position(perm)[v]`` is the index of ``v`` in ``perm``."""
    pos = [0] * len(perm)
    for k, v in enumerate(perm):
        pos[v] = k
    return pos


def moves(p):
    """All distinct transpositions for ``p`` nodes."""
    if p == 2:
        return [1]
    return list(range(1, p)) + [FIRST_LAST]


def apply_transposition(perm, t):
    out = list(perm)
    if t == FIRST_LAST:
        out[0], out[-1] = out[-1], out[0]
    else:
        if not 1 <= t < len(perm):
            raise ValueError(f"invalid transposition {t!r} for p={len(perm)}")
        out[t - 1], out[t] = out[t], out[t - 1]
    return tuple(out)


def find_transposition(new, old):
    """The transposition taking ``old`` to ``new``; raises ``NotAdjacent``."""
    if len(new) != len(old) or sorted(new) != sorted(old):
        raise NotAdjacent("permutations are over different node sets")
    diff = [k for k, (a, b) in enumerate(zip(new, old)) if a != b]
    if len(diff) == 2:
        a, b = diff
        if new[a] == old[b] and new[b] == old[a]:
            if b == a + 1:
                return a + 1
            if a == 0 and b == len(new) - 1:
                return FIRST_LAST
    raise NotAdjacent(f"{old} -> {new} is not a single adjacent transposition")


def build_min_imap(perm, cache: CiCache) -> Dag:
    """Minimal I-MAP of ``perm``: ``perm[i] -> perm[j]`` (i < j) iff the CI test
    of the pair given all other predecessors of ``perm[j]`` rejects.

    Issues exactly ``p (p - 1) / 2`` queries.
    """
    dag = Dag(len(perm))
    prefix = 0
    for j, v in enumerate(perm):
        pa = 0
        for u in perm[:j]:
            bu = 1 << u
            if cache.query(u, v, prefix & ~bu):
                pa |= bu
        dag.parents[v] = pa
        prefix |= 1 << v
    return dag


def umi_apply(perm, dag: Dag, t, cache: CiCache):
    """Apply ``t`` to ``perm`` and update its minimal I-MAP.

    Returns ``(new_perm, new_dag)``; ``dag`` is not modified. The wrap-around
    swap rebuilds from scratch. An adjacent swap at ``k`` reverses the edge
    between the swapped nodes, if any, then re-tests the edges from the
    ``k - 1`` predecessors into the two swapped nodes.
    """
    new = apply_transposition(perm, t)
    p = len(perm)
    if t == FIRST_LAST and p > 2:
        return new, build_min_imap(new, cache)
    a = t - 1 if t != FIRST_LAST else 0
    x, y = perm[a], perm[a + 1]
    out = dag.copy()
    par = out.parents
    bx, by = 1 << x, 1 << y
    if par[y] & bx:
        par[y] &= ~bx
        par[x] |= by
    prefix = 0
    for s in range(a):
        prefix |= 1 << new[s]
    pa_y = par[y] & ~prefix
    pa_x = par[x] & ~prefix
    for s in range(a):
        u = new[s]
        bu = 1 << u
        if cache.query(u, y, prefix & ~bu):
            pa_y |= bu
        if cache.query(u, x, (prefix | by) & ~bu):
            pa_x |= bu
    par[y] = pa_y
    par[x] = pa_x
    return new, out


def umi_update(new, old, old_dag: Dag, cache: CiCache) -> Dag:
    """Minimal I-MAP of ``new`` from that of ``old``, which must differ from it by
    one transposition. Equals ``build_min_imap(new, cache)``."""
    t = find_transposition(tuple(new), tuple(old))
    return umi_apply(tuple(old), old_dag, t, cache)[1]
