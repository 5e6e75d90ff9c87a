# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Mirrors ``_pykernels`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY
from libcpp.vector cimport vector

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline i64 _linear(const i64[:] coords, const i64[:] strides, Py_ssize_t d) noexcept nogil:
    cdef i64 lin = 0
    cdef Py_ssize_t k
    for k in range(d):
        lin += coords[k] * strides[k]
    return lin


def grid_pairs(const double[:, :] pts, const i64[:, :] cells, const i64[:] cell_start,
               const i64[:] shape, const i64[:, :] offsets, double r):
    """All pairs (i, j), i < j, of cell-sorted points with distance strictly below r."""
    cdef Py_ssize_t n = pts.shape[0], d = pts.shape[1], m = offsets.shape[0]
    cdef Py_ssize_t i, j, k, o
    cdef i64 c, lin, lo, hi
    cdef double r2 = r * r, dist2, diff
    cdef bint inside
    cdef vector[i64] out_i, out_j
    cdef i64[:] strides = np.empty(d, dtype=np.int64)
    cdef i64[:] nb = np.empty(d, dtype=np.int64)
    strides[d - 1] = 1
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    with nogil:
        for i in range(n):
            for o in range(m):
                inside = True
                for k in range(d):
                    c = cells[i, k] + offsets[o, k]
                    if c < 0 or c >= shape[k]:
                        inside = False
                        break
                    nb[k] = c
                if not inside:
                    continue
                lin = _linear(nb, strides, d)
                lo = cell_start[lin]
                hi = cell_start[lin + 1]
                for j in range(lo, hi):
                    if j <= i:
                        continue
                    dist2 = 0.0
                    for k in range(d):
                        diff = pts[i, k] - pts[j, k]
                        dist2 += diff * diff
                    if dist2 < r2:
                        out_i.push_back(i)
                        out_j.push_back(j)
    cdef Py_ssize_t ne = out_i.size()
    I = np.empty(ne, dtype=np.int64)
    J = np.empty(ne, dtype=np.int64)
    cdef i64[:] Iv = I
    cdef i64[:] Jv = J
    for i in range(ne):
        Iv[i] = out_i[i]
        Jv[i] = out_j[i]
    return I, J


# binary min-heap on (key, value) pairs, lazy deletion
cdef inline void _heap_push(double* keys, i64* vals, Py_ssize_t* size, double key, i64 val) noexcept nogil:
    cdef Py_ssize_t pos = size[0]
    cdef Py_ssize_t parent
    size[0] += 1
    while pos > 0:
        parent = (pos - 1) >> 1
        if keys[parent] <= key:
            break
        keys[pos] = keys[parent]
        vals[pos] = vals[parent]
        pos = parent
    keys[pos] = key
    vals[pos] = val


cdef inline void _heap_pop(double* keys, i64* vals, Py_ssize_t* size) noexcept nogil:
    cdef Py_ssize_t n = size[0] - 1
    cdef double key = keys[n]
    cdef i64 val = vals[n]
    cdef Py_ssize_t pos = 0, child
    size[0] = n
    if n == 0:
        return
    while True:
        child = 2 * pos + 1
        if child >= n:
            break
        if child + 1 < n and keys[child + 1] < keys[child]:
            child += 1
        if keys[child] >= key:
            break
        keys[pos] = keys[child]
        vals[pos] = vals[child]
        pos = child
    keys[pos] = key
    vals[pos] = val


def dijkstra(const i64[:] indptr, const i64[:] indices, const double[:] weights,
             i64 source, const i64[:] targets, double t_max=INFINITY):
    """Single-source first-passage times; unreached vertices stay at +inf.

    Stops early once every vertex in ``targets`` is settled (empty = run to
    completion) or the frontier passes ``t_max``.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t nnz = indices.shape[0]
    T = np.full(n, np.inf)
    cdef double[:] Tv = T
    cdef cnp.uint8_t[:] done = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[:] is_target = np.zeros(n, dtype=np.uint8)
    cdef double[:] keys = np.empty(nnz + 1, dtype=np.float64)
    cdef i64[:] vals = np.empty(nnz + 1, dtype=np.int64)
    cdef Py_ssize_t size = 0, p, remaining = 0, t
    cdef i64 u, v
    cdef double key, cand
    for t in range(targets.shape[0]):
        if not is_target[targets[t]]:
            is_target[targets[t]] = 1
            remaining += 1
    cdef bint stop_on_targets = remaining > 0
    with nogil:
        Tv[source] = 0.0
        _heap_push(&keys[0], &vals[0], &size, 0.0, source)
        while size > 0:
            key = keys[0]
            u = vals[0]
            _heap_pop(&keys[0], &vals[0], &size)
            if done[u]:
                continue
            if key > t_max:
                break
            done[u] = 1
            if is_target[u]:
                remaining -= 1
                if stop_on_targets and remaining == 0:
                    break
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                if done[v]:
                    continue
                cand = key + weights[p]
                if cand < Tv[v]:
                    Tv[v] = cand
                    _heap_push(&keys[0], &vals[0], &size, cand, v)
    # vertices touched but never settled carry tentative labels; clear them
    for p in range(n):
        if not done[p]:
            Tv[p] = INFINITY
    return T


def count_saw(const i64[:] indptr, const i64[:] indices, i64 source, int n):
    """Number of self-avoiding paths with exactly n edges starting at source."""
    cdef Py_ssize_t nv = indptr.shape[0] - 1
    if n == 0:
        return 1
    cdef cnp.uint8_t[:] on_path = np.zeros(nv, dtype=np.uint8)
    cdef i64[:] path = np.empty(n + 1, dtype=np.int64)
    cdef i64[:] cursor = np.empty(n + 1, dtype=np.int64)
    cdef Py_ssize_t depth = 0
    cdef i64 u, v, total = 0
    path[0] = source
    cursor[0] = indptr[source]
    on_path[source] = 1
    with nogil:
        while depth >= 0:
            u = path[depth]
            if cursor[depth] >= indptr[u + 1]:
                on_path[u] = 0
                depth -= 1
                continue
            v = indices[cursor[depth]]
            cursor[depth] += 1
            if on_path[v]:
                continue
            if depth + 1 == n:
                total += 1
                continue
            depth += 1
            path[depth] = v
            cursor[depth] = indptr[v]
            on_path[v] = 1
    return total


cdef inline i64 _find(i64* parent, i64 a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def grid_components(const double[:, :] pts, const i64[:, :] cells, const i64[:] cell_start,
                    const i64[:] shape, const i64[:, :] offsets, double r):
    """Union-find component roots for cell-sorted points without materialising edges.

    Cells must have diameter below r so each cell is a clique; ``offsets`` is
    the positive half of the cell offsets that can hold a pair within r.
    """
    cdef Py_ssize_t n = pts.shape[0], d = pts.shape[1], m = offsets.shape[0]
    cdef Py_ssize_t ncell = cell_start.shape[0] - 1
    cdef Py_ssize_t a, b, i, j, k, o
    cdef i64 c, ra, rb
    cdef double r2 = r * r, dist2, diff
    cdef bint inside, found
    parent_arr = np.arange(n, dtype=np.int64)
    cdef i64[:] parent = parent_arr
    cdef i64[:] strides = np.empty(d, dtype=np.int64)
    cdef i64[:] coord = np.empty(d, dtype=np.int64)
    cdef i64[:] nb = np.empty(d, dtype=np.int64)
    strides[d - 1] = 1
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    if n == 0:
        return parent_arr
    with nogil:
        for a in range(ncell):
            for i in range(cell_start[a] + 1, cell_start[a + 1]):
                parent[i] = cell_start[a]
        for a in range(ncell):
            if cell_start[a] == cell_start[a + 1]:
                continue
            c = a
            for k in range(d - 1, -1, -1):
                coord[k] = c % shape[k]
                c = c // shape[k]
            for o in range(m):
                inside = True
                for k in range(d):
                    c = coord[k] + offsets[o, k]
                    if c < 0 or c >= shape[k]:
                        inside = False
                        break
                    nb[k] = c
                if not inside:
                    continue
                b = _linear(nb, strides, d)
                if cell_start[b] == cell_start[b + 1]:
                    continue
                ra = _find(&parent[0], cell_start[a])
                rb = _find(&parent[0], cell_start[b])
                if ra == rb:
                    continue
                found = False
                for i in range(cell_start[a], cell_start[a + 1]):
                    for j in range(cell_start[b], cell_start[b + 1]):
                        dist2 = 0.0
                        for k in range(d):
                            diff = pts[i, k] - pts[j, k]
                            dist2 += diff * diff
                        if dist2 < r2:
                            found = True
                            break
                    if found:
                        break
                if found:
                    if ra < rb:
                        parent[rb] = ra
                    else:
                        parent[ra] = rb
        for i in range(n):
            parent[i] = _find(&parent[0], i)
    return parent_arr
