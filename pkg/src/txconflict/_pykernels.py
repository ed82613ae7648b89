"""Pure-Python graph kernels.

Reference backend, and the fallback when the compiled ``_ckernels`` module
is unavailable. Every function here has a twin in ``_ckernels.pyx`` with
the same signature and the same results (including the random stream), so
either backend can serve any caller.

Graphs are passed as CSR arrays ``(n, indptr, indices)`` with each
neighbor list sorted ascending.
"""

from __future__ import annotations

import heapq
import sys
from collections import deque

MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 generator; the compiled backend reproduces the exact stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


def _lists(indptr, indices):
    return [int(x) for x in indptr], [int(x) for x in indices]


def component_labels(n, indptr, indices):
    """Label components 0, 1, ... in order of their lowest-numbered node."""
    indptr, indices = _lists(indptr, indices)
    labels = [-1] * n
    nxt = 0
    for s in range(n):
        if labels[s] >= 0:
            continue
        labels[s] = nxt
        q = deque([s])
        while q:
            v = q.popleft()
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if labels[u] < 0:
                    labels[u] = nxt
                    q.append(u)
        nxt += 1
    return labels


def max_eccentricity(n, indptr, indices, sources):
    """Largest BFS distance reached from any of ``sources``."""
    indptr, indices = _lists(indptr, indices)
    dist = [-1] * n
    best = 0
    for s in sources:
        s = int(s)
        touched = [s]
        dist[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            dv = dist[v] + 1
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if dist[u] < 0:
                    dist[u] = dv
                    if dv > best:
                        best = dv
                    touched.append(u)
                    q.append(u)
        for v in touched:
            dist[v] = -1
    return best


def dsatur(n, indptr, indices):
    """DSATUR coloring; ties on saturation go to higher degree, then lower index."""
    indptr, indices = _lists(indptr, indices)
    deg = [indptr[v + 1] - indptr[v] for v in range(n)]
    colors = [-1] * n
    seen = [set() for _ in range(n)]
    heap = [(0, -deg[v], v) for v in range(n)]
    heapq.heapify(heap)
    while heap:
        neg_sat, _, v = heapq.heappop(heap)
        if colors[v] >= 0 or -neg_sat != len(seen[v]):
            continue
        used = {colors[indices[k]] for k in range(indptr[v], indptr[v + 1])}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if colors[u] < 0 and c not in seen[u]:
                seen[u].add(c)
                heapq.heappush(heap, (-len(seen[u]), -deg[u], u))
    return colors


def degeneracy_order(n, indptr, indices):
    """Smallest-last order: repeatedly remove a min-degree node (lowest index on ties)."""
    indptr, indices = _lists(indptr, indices)
    deg = [indptr[v + 1] - indptr[v] for v in range(n)]
    removed = [False] * n
    heap = [(deg[v], v) for v in range(n)]
    heapq.heapify(heap)
    order = []
    while heap:
        d, v = heapq.heappop(heap)
        if removed[v] or d != deg[v]:
            continue
        removed[v] = True
        order.append(v)
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if not removed[u]:
                deg[u] -= 1
                heapq.heappush(heap, (deg[u], u))
    return order


class _Abort(Exception):
    pass


def max_clique(n, indptr, indices, budget):
    """Exact maximum clique by branch and bound with greedy-coloring bounds.

    Returns ``(clique, expansions, exact)``; ``exact`` is False when the
    expansion budget ran out, in which case ``clique`` is the best found.
    """
    if n == 0:
        return [], 0, True
    indptr, indices = _lists(indptr, indices)
    order = degeneracy_order(n, indptr, indices)
    pos = [0] * n
    for i, v in enumerate(order):
        pos[v] = i

    # incumbent: greedy clique from the densest end of the degeneracy order
    seed: list[int] = []
    for v in reversed(order):
        nbrs = set(indices[indptr[v] : indptr[v + 1]])
        if all(u in nbrs for u in seed):
            seed.append(v)
    best = [len(seed)]
    best_clique = list(seed)
    count = [0]

    for i, v in enumerate(order):
        later = [indices[k] for k in range(indptr[v], indptr[v + 1]) if pos[indices[k]] > i]
        if len(later) + 1 <= best[0]:
            continue
        later.sort(key=pos.__getitem__)
        d = len(later)
        local = {u: j for j, u in enumerate(later)}
        adj = [0] * d
        for j, u in enumerate(later):
            m = 0
            for k in range(indptr[u], indptr[u + 1]):
                w = local.get(indices[k])
                if w is not None:
                    m |= 1 << w
            adj[j] = m
        cur = [v]

        def expand(size, cand):
            count[0] += 1
            if count[0] > budget:
                raise _Abort
            # greedy coloring of the candidates gives the upper bound
            class_masks: list[int] = []
            classes: list[list[int]] = []
            for u in cand:
                au = adj[u]
                c = 0
                while c < len(class_masks) and au & class_masks[c]:
                    c += 1
                if c == len(class_masks):
                    class_masks.append(0)
                    classes.append([])
                class_masks[c] |= 1 << u
                classes[c].append(u)
            sorted_c: list[int] = []
            bounds: list[int] = []
            for c, members in enumerate(classes):
                sorted_c.extend(members)
                bounds.extend([c + 1] * len(members))
            for idx in range(len(sorted_c) - 1, -1, -1):
                if size + bounds[idx] <= best[0]:
                    return
                u = sorted_c[idx]
                au = adj[u]
                cur.append(later[u])
                nxt = [w for w in sorted_c[:idx] if (au >> w) & 1]
                if nxt:
                    expand(size + 1, nxt)
                elif size + 1 > best[0]:
                    best[0] = size + 1
                    best_clique[:] = cur
                cur.pop()

        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old_limit, d + 200))
        try:
            expand(1, list(range(d)))
        except _Abort:
            return sorted(best_clique), count[0], False
        finally:
            sys.setrecursionlimit(old_limit)
    return sorted(best_clique), count[0], True


def longest_path_mc(n, indptr, indices, comp_nodes, comp_ptr, starts, seed):
    """Monte Carlo lower bound on the longest simple path, in edges.

    Components are visited in the given order (largest first). From each
    random start a path is grown by stepping to a uniformly chosen unvisited
    neighbor until stuck.
    """
    indptr, indices = _lists(indptr, indices)
    comp_nodes = [int(x) for x in comp_nodes]
    comp_ptr = [int(x) for x in comp_ptr]
    rng = SplitMix64(seed)
    stamp = [0] * n
    tick = 0
    best = 0
    best_nodes = 0
    for c in range(len(comp_ptr) - 1):
        lo, hi = comp_ptr[c], comp_ptr[c + 1]
        size = hi - lo
        if size <= best_nodes:
            break
        for _ in range(starts):
            cur = comp_nodes[lo + rng.next() % size]
            tick += 1
            stamp[cur] = tick
            length = 0
            while True:
                cand = [indices[k] for k in range(indptr[cur], indptr[cur + 1]) if stamp[indices[k]] != tick]
                if not cand:
                    break
                cur = cand[rng.next() % len(cand)]
                stamp[cur] = tick
                length += 1
            if length > best:
                best = length
            if best + 1 == size:
                break
        best_nodes = best + 1
    return best
