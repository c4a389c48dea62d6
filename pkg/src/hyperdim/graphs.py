"""Exact and greedy combinatorial search on conflict graphs.

Maximum independent set is solved as maximum clique in the complement graph
with a bitset branch-and-bound in the style of MCQ/BBMC: candidates are
bounded by a greedy partition into cliques of the conflict graph (colour
classes of the complement).  Minimum set cover uses branch-and-bound on the
hardest uncovered element with a disjoint-element packing bound, after
row and column dominance reductions.
"""

from __future__ import annotations

import numpy as np


class SearchError(RuntimeError):
    pass


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def conflict_masks(conflict: np.ndarray) -> list:
    """Adjacency bitmasks (self excluded) from a boolean matrix."""
    out = []
    for i, row in enumerate(np.asarray(conflict, dtype=bool)):
        row = row.copy()
        row[i] = False
        out.append(_row_mask(row))
    return out


def _row_mask(row: np.ndarray) -> int:
    """Bit i of the result is row[i]."""
    return int.from_bytes(np.packbits(row[::-1]).tobytes(), "big") >> ((-row.size) % 8)


def greedy_independent(conflict: np.ndarray, order=None) -> list:
    """First-fit maximal independent set in the given order (default: index)."""
    n = conflict.shape[0]
    order = range(n) if order is None else order
    blocked = np.zeros(n, dtype=bool)
    chosen = []
    for v in order:
        if not blocked[v]:
            chosen.append(int(v))
            blocked |= conflict[v]
            blocked[v] = True
    return chosen


def max_independent_set(conflict: np.ndarray, node_limit: int = 5_000_000) -> list:
    """Maximum-cardinality independent set, returned sorted by index.

    Vertices are relabelled by non-decreasing conflict degree (ties by index)
    so low-degree vertices are tried first.  The warm start is the better of
    first-fit in index order and first-fit in degree order.
    """
    conflict = np.asarray(conflict, dtype=bool)
    n = conflict.shape[0]
    if n == 0:
        return []
    deg = conflict.sum(axis=1) - conflict.diagonal()
    perm = np.lexsort((np.arange(n), deg))  # new label -> old index
    c = conflict[np.ix_(perm, perm)]
    adj = conflict_masks(c)

    warm_a = greedy_independent(conflict)
    inv = np.empty(n, dtype=int)
    inv[perm] = np.arange(n)
    warm_b = [int(perm[v]) for v in greedy_independent(c)]
    best = list(max((sorted(warm_a), sorted(warm_b)), key=len))
    state = {"best": len(best), "sol": [int(inv[v]) for v in best], "nodes": 0}

    def colour(P: int):
        """Greedy clique partition of P in the conflict graph.

        Returns vertices in partition order with their class number.
        """
        order, bounds = [], []
        U, k = P, 0
        while U:
            k += 1
            Q = U
            while Q:
                low = Q & -Q
                v = low.bit_length() - 1
                Q &= adj[v]  # keep only vertices in conflict with v
                U ^= low
                order.append(v)
                bounds.append(k)
            # vertices left in U start the next class
        return order, bounds

    def expand(P: int, cur: list):
        state["nodes"] += 1
        if state["nodes"] > node_limit:
            raise SearchError(f"branch-and-bound exceeded {node_limit} nodes")
        order, bounds = colour(P)
        for idx in range(len(order) - 1, -1, -1):
            if len(cur) + bounds[idx] <= state["best"]:
                return
            v = order[idx]
            cur.append(v)
            nxt = P & ~adj[v] & ~(1 << v)
            if nxt:
                expand(nxt, cur)
            elif len(cur) > state["best"]:
                state["best"] = len(cur)
                state["sol"] = list(cur)
            cur.pop()
            P &= ~(1 << v)

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * n + 100))
    try:
        expand((1 << n) - 1, [])
    finally:
        sys.setrecursionlimit(old)
    return sorted(int(perm[v]) for v in state["sol"])


def is_independent(conflict: np.ndarray, family) -> bool:
    f = np.asarray(list(family), dtype=int)
    if f.size < 2:
        return True
    sub = conflict[np.ix_(f, f)].copy()
    np.fill_diagonal(sub, False)
    return not sub.any()


# --------------------------------------------------------------------------
# set cover


def greedy_cover(cover: np.ndarray) -> list:
    """Largest-new-coverage-first; ties go to the lowest pool index.

    ``cover[i, t]`` is True when pool member i covers target t.
    """
    cover = np.asarray(cover, dtype=bool)
    uncovered = np.ones(cover.shape[1], dtype=bool)
    chosen = []
    while uncovered.any():
        gains = (cover & uncovered).sum(axis=1)
        i = int(np.argmax(gains))  # argmax returns the first maximum
        if gains[i] == 0:
            t = int(np.flatnonzero(uncovered)[0])
            raise SearchError(f"target {t} is not covered by any pool member")
        chosen.append(i)
        uncovered &= ~cover[i]
    return chosen


def reduce_cover(cover: np.ndarray):
    """Dominance reductions that preserve the minimum cover size.

    A pool member whose coverage is contained in another's is dropped (the
    lower index survives among equals); a target whose coverers include all
    coverers of another target is implied by it and dropped.  Repeats to a
    fixed point.  Returns (kept pool indices, kept target indices).
    """
    cover = np.asarray(cover, dtype=bool)
    rows = np.arange(cover.shape[0])
    cols = np.arange(cover.shape[1])
    while True:
        sub = cover[np.ix_(rows, cols)].astype(np.int32)
        # inter[i, j] = |S_i & S_j|; S_i subset of S_j iff inter == |S_i|
        inter = sub @ sub.T
        size = np.diag(inter)
        contained = inter == size[:, None]
        np.fill_diagonal(contained, False)
        equal = contained & contained.T
        later_dup = np.triu(equal, 1).any(axis=0)  # equal to an earlier row
        strictly = (contained & ~equal).any(axis=1)
        keep_r = ~(strictly | later_dup)
        rows = rows[keep_r]
        sub = cover[np.ix_(rows, cols)].astype(np.int32)
        inter = sub.T @ sub
        size = np.diag(inter)
        # target t is implied by u when coverers(u) is a subset of coverers(t)
        implied_by = inter == size[None, :]  # [t, u]: coverers(u) within coverers(t)
        np.fill_diagonal(implied_by, False)
        equal = implied_by & implied_by.T
        later_dup = np.triu(equal, 1).any(axis=0)
        strictly = (implied_by & ~equal).any(axis=1)
        keep_c = ~(strictly | later_dup)
        cols = cols[keep_c]
        if keep_r.all() and keep_c.all():
            return rows, cols


def min_set_cover(cover: np.ndarray, node_limit: int = 2_000_000) -> list:
    """Minimum-cardinality cover, returned sorted by pool index."""
    cover = np.asarray(cover, dtype=bool)
    n_pool, n_t = cover.shape
    if n_t == 0:
        return []
    missing = ~cover.any(axis=0)
    if missing.any():
        t = int(np.flatnonzero(missing)[0])
        raise SearchError(f"target {t} is not covered by any pool member")
    rows, cols = reduce_cover(cover)
    red = cover[np.ix_(rows, cols)]
    n_t = red.shape[1]
    set_masks = conflict_masks_rows(red)
    # for each target, the pool members covering it (as index lists and bitmask)
    coverers = [np.flatnonzero(red[:, t]).tolist() for t in range(n_t)]
    cov_masks = conflict_masks_rows(red.T)
    max_size = max(bin(m).count("1") for m in set_masks)
    # packing bound visits scarce targets first
    scarce = sorted(range(n_t), key=lambda t: (len(coverers[t]), t))

    best = sorted(greedy_cover(red))
    state = {"best": best, "nodes": 0}
    full = (1 << n_t) - 1

    def lower_bound(U: int) -> int:
        # targets whose coverer sets are pairwise disjoint need distinct sets
        used, packed = 0, 0
        for t in scarce:
            if U >> t & 1 and not (cov_masks[t] & used):
                used |= cov_masks[t]
                packed += 1
        size_lb = -(-bin(U).count("1") // max_size)
        return max(packed, size_lb)

    def search(U: int, chosen: list):
        state["nodes"] += 1
        if state["nodes"] > node_limit:
            raise SearchError(f"set-cover search exceeded {node_limit} nodes")
        if U == 0:
            if len(chosen) < len(state["best"]):
                state["best"] = sorted(chosen)
            return
        if len(chosen) + lower_bound(U) >= len(state["best"]):
            return
        # branch on the uncovered target with fewest coverers
        t = min(_bits(U), key=lambda j: (len(coverers[j]), j))
        cands = sorted(coverers[t], key=lambda i: (-bin(set_masks[i] & U).count("1"), i))
        for i in cands:
            chosen.append(i)
            search(U & ~set_masks[i], chosen)
            chosen.pop()

    search(full, [])
    return sorted(int(rows[i]) for i in state["best"])


def conflict_masks_rows(mat: np.ndarray) -> list:
    return [_row_mask(row) for row in np.asarray(mat, dtype=bool)]


def covers_all(cover: np.ndarray, family) -> bool:
    f = list(family)
    if not f:
        return cover.shape[1] == 0
    return bool(np.asarray(cover, dtype=bool)[f].any(axis=0).all())
