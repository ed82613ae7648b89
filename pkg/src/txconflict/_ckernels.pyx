# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled graph kernels.

Same signatures and results as ``_pykernels`` (including the splitmix64
random stream), so the two backends are interchangeable.
"""

from libc.stdint cimport int64_t, uint64_t, uint8_t
from libcpp.vector cimport vector
from libcpp.set cimport set as cset
from libcpp.pair cimport pair
from libcpp.unordered_set cimport unordered_set
from cython.operator cimport dereference as deref


cdef inline uint64_t _sm_next(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def splitmix64_stream(uint64_t seed, int count):
    cdef uint64_t state = seed
    return [_sm_next(&state) for _ in range(count)]


def component_labels(int64_t n, const int64_t[::1] indptr, const int64_t[::1] indices):
    cdef vector[int64_t] labels = vector[int64_t](n, -1)
    cdef vector[int64_t] queue
    cdef int64_t s, v, u, k, head, nxt = 0
    with nogil:
        queue.reserve(n)
        for s in range(n):
            if labels[s] >= 0:
                continue
            labels[s] = nxt
            queue.clear()
            queue.push_back(s)
            head = 0
            while head < <int64_t>queue.size():
                v = queue[head]
                head += 1
                for k in range(indptr[v], indptr[v + 1]):
                    u = indices[k]
                    if labels[u] < 0:
                        labels[u] = nxt
                        queue.push_back(u)
            nxt += 1
    return [labels[i] for i in range(n)]


def max_eccentricity(int64_t n, const int64_t[::1] indptr, const int64_t[::1] indices, sources):
    cdef vector[int64_t] src = [int(x) for x in sources]
    cdef vector[int64_t] dist = vector[int64_t](n, -1)
    cdef vector[int64_t] queue
    cdef int64_t i, s, v, u, k, head, dv, best = 0
    with nogil:
        queue.reserve(n)
        for i in range(<int64_t>src.size()):
            s = src[i]
            queue.clear()
            queue.push_back(s)
            dist[s] = 0
            head = 0
            while head < <int64_t>queue.size():
                v = queue[head]
                head += 1
                dv = dist[v] + 1
                for k in range(indptr[v], indptr[v + 1]):
                    u = indices[k]
                    if dist[u] < 0:
                        dist[u] = dv
                        if dv > best:
                            best = dv
                        queue.push_back(u)
            for k in range(<int64_t>queue.size()):
                dist[queue[k]] = -1
    return best


ctypedef pair[pair[int64_t, int64_t], int64_t] Prio


def dsatur(int64_t n, const int64_t[::1] indptr, const int64_t[::1] indices):
    cdef vector[int64_t] colors = vector[int64_t](n, -1)
    cdef vector[int64_t] sat = vector[int64_t](n, 0)
    cdef vector[int64_t] deg = vector[int64_t](n, 0)
    cdef vector[uint8_t] used
    cdef unordered_set[int64_t] seen
    cdef cset[Prio] queue
    cdef Prio top
    cdef int64_t v, u, k, c, width = n + 1
    with nogil:
        for v in range(n):
            deg[v] = indptr[v + 1] - indptr[v]
            queue.insert(Prio(pair[int64_t, int64_t](0, -deg[v]), v))
        while not queue.empty():
            top = deref(queue.begin())
            queue.erase(queue.begin())
            v = top.second
            used.assign(deg[v] + 2, 0)
            for k in range(indptr[v], indptr[v + 1]):
                c = colors[indices[k]]
                if 0 <= c <= deg[v]:
                    used[c] = 1
            c = 0
            while used[c]:
                c += 1
            colors[v] = c
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if colors[u] < 0 and seen.count(u * width + c) == 0:
                    seen.insert(u * width + c)
                    queue.erase(Prio(pair[int64_t, int64_t](-sat[u], -deg[u]), u))
                    sat[u] += 1
                    queue.insert(Prio(pair[int64_t, int64_t](-sat[u], -deg[u]), u))
    return [colors[i] for i in range(n)]


ctypedef pair[int64_t, int64_t] DegNode


def degeneracy_order(int64_t n, const int64_t[::1] indptr, const int64_t[::1] indices):
    cdef vector[int64_t] order
    cdef vector[int64_t] deg = vector[int64_t](n, 0)
    cdef vector[uint8_t] removed = vector[uint8_t](n, 0)
    _degeneracy(n, indptr, indices, order, deg, removed)
    return [order[i] for i in range(n)]


cdef void _degeneracy(int64_t n, const int64_t[::1] indptr, const int64_t[::1] indices,
                      vector[int64_t]& order, vector[int64_t]& deg, vector[uint8_t]& removed) nogil:
    cdef cset[DegNode] queue
    cdef DegNode top
    cdef int64_t v, u, k
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        queue.insert(DegNode(deg[v], v))
    while not queue.empty():
        top = deref(queue.begin())
        queue.erase(queue.begin())
        v = top.second
        removed[v] = 1
        order.push_back(v)
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if not removed[u]:
                queue.erase(DegNode(deg[u], u))
                deg[u] -= 1
                queue.insert(DegNode(deg[u], u))


cdef struct CliqueCtx:
    int64_t d
    uint8_t* adj
    int64_t best
    int64_t count
    int64_t budget
    bint aborted


cdef void _expand(CliqueCtx* ctx, int64_t size, vector[int64_t]& cand,
                  vector[int64_t]& cur, vector[int64_t]& best_local) nogil:
    cdef vector[vector[int64_t]] classes
    cdef vector[int64_t] sorted_c
    cdef vector[int64_t] bounds
    cdef vector[int64_t] nxt
    cdef int64_t i, j, c, u, w, idx, nclass
    cdef int64_t d = ctx.d
    cdef bint clash
    ctx.count += 1
    if ctx.count > ctx.budget:
        ctx.aborted = True
        return
    for i in range(<int64_t>cand.size()):
        u = cand[i]
        c = 0
        nclass = classes.size()
        while c < nclass:
            clash = False
            for j in range(<int64_t>classes[c].size()):
                if ctx.adj[u * d + classes[c][j]]:
                    clash = True
                    break
            if not clash:
                break
            c += 1
        if c == nclass:
            classes.push_back(vector[int64_t]())
        classes[c].push_back(u)
    for c in range(<int64_t>classes.size()):
        for j in range(<int64_t>classes[c].size()):
            sorted_c.push_back(classes[c][j])
            bounds.push_back(c + 1)
    idx = <int64_t>sorted_c.size() - 1
    while idx >= 0:
        if size + bounds[idx] <= ctx.best:
            return
        u = sorted_c[idx]
        cur.push_back(u)
        nxt.clear()
        for j in range(idx):
            w = sorted_c[j]
            if ctx.adj[u * d + w]:
                nxt.push_back(w)
        if nxt.size() > 0:
            _expand(ctx, size + 1, nxt, cur, best_local)
            if ctx.aborted:
                return
        elif size + 1 > ctx.best:
            ctx.best = size + 1
            best_local.assign(cur.begin(), cur.end())
        cur.pop_back()
        idx -= 1


def max_clique(int64_t n, const int64_t[::1] indptr, const int64_t[::1] indices, int64_t budget):
    if n == 0:
        return [], 0, True
    cdef vector[int64_t] order
    cdef vector[int64_t] deg = vector[int64_t](n, 0)
    cdef vector[uint8_t] removed = vector[uint8_t](n, 0)
    cdef vector[int64_t] pos = vector[int64_t](n, 0)
    cdef vector[int64_t] local = vector[int64_t](n, -1)
    cdef vector[int64_t] later
    cdef vector[int64_t] cand
    cdef vector[int64_t] cur
    cdef vector[int64_t] best_local
    cdef vector[int64_t] best_clique
    cdef vector[uint8_t] adj
    cdef CliqueCtx ctx
    cdef int64_t i, j, k, v, u, w, d
    cdef bint exact = True

    cdef vector[int64_t] mark = vector[int64_t](n, -1)
    cdef bint ok

    ctx.count = 0
    ctx.budget = budget
    ctx.aborted = False

    with nogil:
        _degeneracy(n, indptr, indices, order, deg, removed)
        for i in range(n):
            pos[order[i]] = i
        # incumbent: greedy clique from the densest end of the degeneracy order
        for i in range(n - 1, -1, -1):
            v = order[i]
            for k in range(indptr[v], indptr[v + 1]):
                mark[indices[k]] = v
            ok = True
            for j in range(<int64_t>best_clique.size()):
                if mark[best_clique[j]] != v:
                    ok = False
                    break
            if ok:
                best_clique.push_back(v)
        ctx.best = best_clique.size()
        for i in range(n):
            v = order[i]
            later.clear()
            for k in range(indptr[v], indptr[v + 1]):
                if pos[indices[k]] > i:
                    later.push_back(indices[k])
            d = later.size()
            if d + 1 <= ctx.best:
                continue
            _sort_by_pos(later, pos)
            for j in range(d):
                local[later[j]] = j
            adj.assign(d * d, 0)
            for j in range(d):
                u = later[j]
                for k in range(indptr[u], indptr[u + 1]):
                    w = local[indices[k]]
                    if w >= 0:
                        adj[j * d + w] = 1
            ctx.d = d
            ctx.adj = adj.data()
            cand.clear()
            for j in range(d):
                cand.push_back(j)
            cur.clear()
            best_local.clear()
            _expand(&ctx, 1, cand, cur, best_local)
            if best_local.size() > 0:
                best_clique.clear()
                best_clique.push_back(v)
                for j in range(<int64_t>best_local.size()):
                    best_clique.push_back(later[best_local[j]])
            for j in range(d):
                local[later[j]] = -1
            if ctx.aborted:
                exact = False
                break
    return sorted([best_clique[i] for i in range(<int64_t>best_clique.size())]), ctx.count, exact


cdef extern from *:
    """
    #include <algorithm>
    #include <vector>
    #include <cstdint>
    static inline void _sort_by_pos(std::vector<int64_t>& xs, std::vector<int64_t>& pos) {
        std::sort(xs.begin(), xs.end(), [&](int64_t a, int64_t b) { return pos[a] < pos[b]; });
    }
    """
    void _sort_by_pos(vector[int64_t]& xs, vector[int64_t]& pos) nogil


def longest_path_mc(int64_t n, const int64_t[::1] indptr, const int64_t[::1] indices,
                    const int64_t[::1] comp_nodes, const int64_t[::1] comp_ptr,
                    int64_t starts, uint64_t seed):
    cdef uint64_t state = seed
    cdef vector[int64_t] stamp = vector[int64_t](n, 0)
    cdef vector[int64_t] cand
    cdef int64_t tick = 0, best = 0, best_nodes = 0
    cdef int64_t c, lo, hi, size, s, cur, length, k, u
    cdef int64_t ncomp = comp_ptr.shape[0] - 1
    with nogil:
        for c in range(ncomp):
            lo = comp_ptr[c]
            hi = comp_ptr[c + 1]
            size = hi - lo
            if size <= best_nodes:
                break
            for s in range(starts):
                cur = comp_nodes[lo + <int64_t>(_sm_next(&state) % <uint64_t>size)]
                tick += 1
                stamp[cur] = tick
                length = 0
                while True:
                    cand.clear()
                    for k in range(indptr[cur], indptr[cur + 1]):
                        u = indices[k]
                        if stamp[u] != tick:
                            cand.push_back(u)
                    if cand.size() == 0:
                        break
                    cur = cand[<int64_t>(_sm_next(&state) % <uint64_t>cand.size())]
                    stamp[cur] = tick
                    length += 1
                if length > best:
                    best = length
                if best + 1 == size:
                    break
            best_nodes = best + 1
    return best
