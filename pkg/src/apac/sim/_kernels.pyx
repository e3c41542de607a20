# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled graph kernels; same contracts as ``_kernels_py``."""
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t


cdef struct Csr:
    int n
    int* ptr
    int* idx
    int* indeg


cdef Csr _csr(int n, preds, succs):
    cdef Csr g
    cdef int i, k, m = 0
    for i in range(n):
        m += len(succs[i])
    g.n = n
    g.ptr = <int*>malloc((n + 1) * sizeof(int))
    g.idx = <int*>malloc((m + 1) * sizeof(int))
    g.indeg = <int*>malloc((n + 1) * sizeof(int))
    k = 0
    for i in range(n):
        g.ptr[i] = k
        g.indeg[i] = len(preds[i])
        for j in succs[i]:
            g.idx[k] = j
            k += 1
    g.ptr[n] = k
    return g


cdef void _release(Csr g):
    free(g.ptr)
    free(g.idx)
    free(g.indeg)


cdef inline uint64_t _mix(uint64_t* state):
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def topological_order(int n, succs):
    cdef Csr g = _csr(n, [[]] * n, succs)
    cdef int i, j, k, head = 0, tail = 0
    cdef int* queue = <int*>malloc((n + 1) * sizeof(int))
    try:
        for i in range(n):
            g.indeg[i] = 0
        for i in range(n):
            for k in range(g.ptr[i], g.ptr[i + 1]):
                g.indeg[g.idx[k]] += 1
        for i in range(n):
            if g.indeg[i] == 0:
                queue[tail] = i
                tail += 1
        while head < tail:
            i = queue[head]
            head += 1
            for k in range(g.ptr[i], g.ptr[i + 1]):
                j = g.idx[k]
                g.indeg[j] -= 1
                if g.indeg[j] == 0:
                    queue[tail] = j
                    tail += 1
        if tail != n:
            return None
        return [queue[i] for i in range(n)]
    finally:
        free(queue)
        _release(g)


cdef int _count(Csr* g, int* ready, int nready, int placed, long long cap, long long* count):
    cdef int k, v, s, e, added
    if count[0] >= cap:
        return 0
    if placed == g.n:
        count[0] += 1
        return 0
    for k in range(nready):
        v = ready[k]
        if v < 0:
            continue
        ready[k] = -1
        added = 0
        for e in range(g.ptr[v], g.ptr[v + 1]):
            s = g.idx[e]
            g.indeg[s] -= 1
            if g.indeg[s] == 0:
                ready[nready + added] = s
                added += 1
        _count(g, ready, nready + added, placed + 1, cap, count)
        for e in range(g.ptr[v], g.ptr[v + 1]):
            g.indeg[g.idx[e]] += 1
        ready[k] = v
        if count[0] >= cap:
            return 0
    return 0


def count_linear_extensions(int n, preds, succs, long long limit):
    cdef Csr g = _csr(n, preds, succs)
    # ready slots are never reused within a frame, so n * (n + 1) is enough
    cdef int* ready = <int*>malloc((n * (n + 1) + 1) * sizeof(int))
    cdef int i, nready = 0
    cdef long long count = 0
    try:
        for i in range(n):
            if g.indeg[i] == 0:
                ready[nready] = i
                nready += 1
        _count(&g, ready, nready, 0, limit + 1, &count)
        return count
    finally:
        free(ready)
        _release(g)


def enumerate_linear_extensions(int n, preds, succs, long long limit):
    cdef Csr g = _csr(n, preds, succs)
    cdef int* ready = <int*>malloc((n * (n + 1) + 1) * sizeof(int))
    cdef int* cur = <int*>malloc((n + 1) * sizeof(int))
    cdef int i, nready = 0
    out = []
    try:
        for i in range(n):
            if g.indeg[i] == 0:
                ready[nready] = i
                nready += 1
        _enum(&g, ready, nready, cur, 0, limit + 1, out)
        return out
    finally:
        free(ready)
        free(cur)
        _release(g)


cdef int _enum(Csr* g, int* ready, int nready, int* cur, int placed, long long cap, list out) except -1:
    cdef int k, v, s, e, added
    if len(out) >= cap:
        return 0
    if placed == g.n:
        out.append([cur[k] for k in range(g.n)])
        return 0
    for k in range(nready):
        v = ready[k]
        if v < 0:
            continue
        ready[k] = -1
        cur[placed] = v
        added = 0
        for e in range(g.ptr[v], g.ptr[v + 1]):
            s = g.idx[e]
            g.indeg[s] -= 1
            if g.indeg[s] == 0:
                ready[nready + added] = s
                added += 1
        _enum(g, ready, nready + added, cur, placed + 1, cap, out)
        for e in range(g.ptr[v], g.ptr[v + 1]):
            g.indeg[g.idx[e]] += 1
        ready[k] = v
        if len(out) >= cap:
            return 0
    return 0


def random_linear_extension(int n, preds, succs, seed):
    cdef Csr g = _csr(n, preds, succs)
    cdef int* ready = <int*>malloc((n + 1) * sizeof(int))
    cdef int i, v, s, e, nready = 0
    cdef uint64_t state = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t r
    out = []
    try:
        for i in range(n):
            if g.indeg[i] == 0:
                ready[nready] = i
                nready += 1
        while nready > 0:
            r = _mix(&state)
            i = <int>(r % <uint64_t>nready)
            v = ready[i]
            ready[i] = ready[nready - 1]
            nready -= 1
            out.append(v)
            for e in range(g.ptr[v], g.ptr[v + 1]):
                s = g.idx[e]
                g.indeg[s] -= 1
                if g.indeg[s] == 0:
                    ready[nready] = s
                    nready += 1
        return out
    finally:
        free(ready)
        _release(g)


def list_schedule(int n, preds, succs, costs, int workers):
    cdef Csr g = _csr(n, preds, succs)
    cdef int* queue = <int*>malloc((n + 1) * sizeof(int))
    cdef double* fin = <double*>malloc((n + 1) * sizeof(double))
    cdef int* run = <int*>malloc((n + 1) * sizeof(int))
    cdef double* c = <double*>malloc((n + 1) * sizeof(double))
    cdef int i, k, v, s, e, head = 0, tail = 0, nrun = 0, free_w = workers, finished = 0, best
    cdef double t = 0.0
    try:
        for i in range(n):
            c[i] = costs[i]
            if g.indeg[i] == 0:
                queue[tail] = i
                tail += 1
        while finished < n:
            while free_w > 0 and head < tail:
                v = queue[head]
                head += 1
                run[nrun] = v
                fin[nrun] = t + c[v]
                nrun += 1
                free_w -= 1
            if nrun == 0:
                raise ValueError("graph has a cycle")
            # earliest finish; ties go to the lower node index, as in the heap version
            best = 0
            for k in range(1, nrun):
                if fin[k] < fin[best] or (fin[k] == fin[best] and run[k] < run[best]):
                    best = k
            t = fin[best]
            v = run[best]
            nrun -= 1
            run[best] = run[nrun]
            fin[best] = fin[nrun]
            free_w += 1
            finished += 1
            for e in range(g.ptr[v], g.ptr[v + 1]):
                s = g.idx[e]
                g.indeg[s] -= 1
                if g.indeg[s] == 0:
                    queue[tail] = s
                    tail += 1
        return t
    finally:
        free(queue)
        free(fin)
        free(run)
        free(c)
        _release(g)


def longest_path(int n, preds, succs, costs):
    order = topological_order(n, succs)
    if order is None:
        raise ValueError("graph has a cycle")
    cdef double* fin = <double*>malloc((n + 1) * sizeof(double))
    cdef double best = 0.0, start
    cdef int v
    try:
        for v in order:
            start = 0.0
            for p in preds[v]:
                if fin[<int>p] > start:
                    start = fin[<int>p]
            fin[v] = start + costs[v]
            if fin[v] > best:
                best = fin[v]
        return best
    finally:
        free(fin)
