"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels.pyx``.

Same signatures and outputs; used when the extension is not built or when
``RGGFPP_PURE_PYTHON=1`` is set.
"""

import heapq

import numpy as np


def _strides(shape):
    d = len(shape)
    strides = np.ones(d, dtype=np.int64)
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    return strides


def _occupied_cells(cell_start):
    counts = np.diff(cell_start)
    return np.flatnonzero(counts)


def _unravel(lin, shape):
    return np.array(np.unravel_index(lin, tuple(int(s) for s in shape)), dtype=np.int64)


def grid_pairs(pts, cells, cell_start, shape, offsets, r):
    pts = np.asarray(pts, dtype=np.float64)
    shape = np.asarray(shape, dtype=np.int64)
    cell_start = np.asarray(cell_start, dtype=np.int64)
    strides = _strides(shape)
    r2 = r * r
    out_i, out_j = [], []
    for a in _occupied_cells(cell_start):
        ca = _unravel(a, shape)
        lo_a, hi_a = cell_start[a], cell_start[a + 1]
        block_a = pts[lo_a:hi_a]
        for off in offsets:
            cb = ca + off
            if np.any(cb < 0) or np.any(cb >= shape):
                continue
            b = int(cb @ strides)
            if b < a:
                continue
            lo_b, hi_b = cell_start[b], cell_start[b + 1]
            if lo_b == hi_b:
                continue
            diff = block_a[:, None, :] - pts[lo_b:hi_b][None, :, :]
            dist2 = np.einsum("ijk,ijk->ij", diff, diff)
            ii, jj = np.nonzero(dist2 < r2)
            gi = ii + lo_a
            gj = jj + lo_b
            keep = gj > gi
            out_i.append(gi[keep])
            out_j.append(gj[keep])
    if not out_i:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return (
        np.concatenate(out_i).astype(np.int64),
        np.concatenate(out_j).astype(np.int64),
    )


def dijkstra(indptr, indices, weights, source, targets, t_max=np.inf):
    n = len(indptr) - 1
    indptr = np.asarray(indptr)
    T = np.full(n, np.inf)
    done = np.zeros(n, dtype=bool)
    pending = set(int(t) for t in targets)
    stop_on_targets = bool(pending)
    T[source] = 0.0
    heap = [(0.0, int(source))]
    while heap:
        key, u = heapq.heappop(heap)
        if done[u]:
            continue
        if key > t_max:
            break
        done[u] = True
        if u in pending:
            pending.discard(u)
            if stop_on_targets and not pending:
                break
        lo, hi = indptr[u], indptr[u + 1]
        for v, w in zip(indices[lo:hi].tolist(), weights[lo:hi].tolist()):
            if done[v]:
                continue
            cand = key + w
            if cand < T[v]:
                T[v] = cand
                heapq.heappush(heap, (cand, v))
    T[~done] = np.inf
    return T


def count_saw(indptr, indices, source, n):
    if n == 0:
        return 1
    indptr = np.asarray(indptr)
    adj = [indices[indptr[u]:indptr[u + 1]].tolist() for u in range(len(indptr) - 1)]

    def extend(u, depth, on_path):
        if depth == n:
            return 1
        total = 0
        for v in adj[u]:
            if v in on_path:
                continue
            on_path.add(v)
            total += extend(v, depth + 1, on_path)
            on_path.discard(v)
        return total

    return extend(int(source), 0, {int(source)})


def grid_components(pts, cells, cell_start, shape, offsets, r):
    pts = np.asarray(pts, dtype=np.float64)
    shape = np.asarray(shape, dtype=np.int64)
    cell_start = np.asarray(cell_start, dtype=np.int64)
    n = len(pts)
    parent = np.arange(n, dtype=np.int64)
    if n == 0:
        return parent
    strides = _strides(shape)
    r2 = r * r

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    occupied = _occupied_cells(cell_start)
    for a in occupied:
        parent[cell_start[a] + 1:cell_start[a + 1]] = cell_start[a]
    for a in occupied:
        ca = _unravel(a, shape)
        for off in offsets:
            cb = ca + off
            if np.any(cb < 0) or np.any(cb >= shape):
                continue
            b = int(cb @ strides)
            if cell_start[b] == cell_start[b + 1]:
                continue
            ra, rb = find(cell_start[a]), find(cell_start[b])
            if ra == rb:
                continue
            block_a = pts[cell_start[a]:cell_start[a + 1]]
            block_b = pts[cell_start[b]:cell_start[b + 1]]
            diff = block_a[:, None, :] - block_b[None, :, :]
            if np.any(np.einsum("ijk,ijk->ij", diff, diff) < r2):
                parent[max(ra, rb)] = min(ra, rb)
    for i in range(n):
        parent[i] = find(i)
    return parent
