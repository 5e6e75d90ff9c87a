"""Gilbert disk graph on a point sample and its giant-component observables."""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import kernels
from .errors import GuardError, ParameterError, SubcriticalError
from .point_process import PointSet

MAX_SAW_LENGTH = 6
DEFAULT_MARGIN = 0.1


@dataclass(frozen=True)
class CellGrid:
    """Points bucketed into cubic cells, stored sorted by linear cell index."""

    order: np.ndarray  # sorted position -> original index
    points: np.ndarray  # coordinates in sorted order
    cells: np.ndarray  # integer cell coordinates in sorted order
    cell_start: np.ndarray  # CSR offsets, length n_cells + 1
    shape: np.ndarray
    side: float

    @classmethod
    def build(cls, points, lower, extent, side):
        points = np.asarray(points, dtype=np.float64)
        d = points.shape[1]
        shape = np.maximum(np.ceil(np.asarray(extent) / side).astype(np.int64), 1)
        shape = np.broadcast_to(shape, (d,)).copy()
        cells = np.floor((points - lower) / side).astype(np.int64)
        np.clip(cells, 0, shape - 1, out=cells)
        lin = np.ravel_multi_index(tuple(cells.T), tuple(shape)) if len(points) else np.empty(0, np.int64)
        order = np.argsort(lin, kind="stable")
        n_cells = int(np.prod(shape))
        cell_start = np.zeros(n_cells + 1, dtype=np.int64)
        np.cumsum(np.bincount(lin, minlength=n_cells), out=cell_start[1:])
        return cls(
            order=order.astype(np.int64),
            points=np.ascontiguousarray(points[order]),
            cells=np.ascontiguousarray(cells[order]),
            cell_start=cell_start,
            shape=shape,
            side=float(side),
        )


def _neighbor_offsets(d):
    return np.array(list(itertools.product((-1, 0, 1), repeat=d)), dtype=np.int64)


def _component_offsets(d):
    """Positive-half offsets between cells of side r/sqrt(d) that can hold a pair within r."""
    reach = math.isqrt(d) + 2
    out = []
    for off in itertools.product(range(-reach, reach + 1), repeat=d):
        if off <= (0,) * d:
            continue
        gap = sum(max(abs(o) - 1, 0) ** 2 for o in off)
        if gap < d:
            out.append(off)
    out.sort(key=lambda o: (sum(x * x for x in o), o))
    return np.array(out, dtype=np.int64).reshape(-1, d)


def rgg_edges(ps, r):
    """Canonical edge array (E, 2), rows sorted, u < v, for the strict rule |u - v| < r."""
    grid = CellGrid.build(ps.points, ps.box.lower, 2 * ps.box.L, r)
    I, J = kernels.grid_pairs(
        grid.points, grid.cells, grid.cell_start, grid.shape, _neighbor_offsets(ps.d), float(r)
    )
    a, b = grid.order[I], grid.order[J]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    order = np.argsort(lo * len(ps) + hi)
    return np.stack([lo[order], hi[order]], axis=1)


def brute_force_edges(points, r):
    """O(n^2) reference for the edge rule."""
    points = np.asarray(points, dtype=np.float64)
    diff = points[:, None, :] - points[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    i, j = np.nonzero(np.triu(dist2 < r * r, k=1))
    return np.stack([i, j], axis=1).astype(np.int64).reshape(-1, 2)


def grid_component_labels(ps, r):
    """Component labels without building the edge list (cells of diameter < r are cliques).

    Labels are the smallest original vertex index in each component.
    """
    d = ps.d
    side = r / math.sqrt(d) * (1.0 - 1e-9)
    grid = CellGrid.build(ps.points, ps.box.lower, 2 * ps.box.L, side)
    roots = kernels.grid_components(
        grid.points, grid.cells, grid.cell_start, grid.shape, _component_offsets(d), float(r)
    )
    labels_sorted = roots
    comp_min = np.full(len(ps), np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(comp_min, labels_sorted, grid.order)
    labels = np.empty(len(ps), dtype=np.int64)
    labels[grid.order] = comp_min[labels_sorted]
    return labels


class Geograph:
    """Disk graph with CSR adjacency, component labels and a giant-component proxy."""

    def __init__(self, ps, r, edges):
        self.ps = ps
        self.r = float(r)
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        n = len(ps)
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(len(self.edges))] * 2)
        order = np.argsort(src * max(n, 1) + dst)
        self.indices = dst[order].astype(np.int64)
        self.edge_of = eid[order].astype(np.int64)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        self.labels, self.sizes = self._components()
        self.giant = int(np.argmax(self.sizes)) if n else -1

    @classmethod
    def from_edges(cls, ps, r, edges):
        """Graph with explicitly given edges (handcrafted test graphs)."""
        edges = np.sort(np.asarray(edges, dtype=np.int64).reshape(-1, 2), axis=1)
        edges = np.unique(edges, axis=0)
        return cls(ps, r, edges)

    def _components(self):
        n = len(self.ps)
        if n == 0:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        adj = csr_matrix((np.ones(len(self.indices)), self.indices, self.indptr), shape=(n, n))
        _, raw = connected_components(adj, directed=False)
        # relabel by order of each component's smallest vertex
        first = np.full(raw.max() + 1, n, dtype=np.int64)
        np.minimum.at(first, raw, np.arange(n))
        rank = np.empty_like(first)
        rank[np.argsort(first, kind="stable")] = np.arange(len(first))
        labels = rank[raw]
        return labels, np.bincount(labels)

    @property
    def n(self):
        return len(self.ps)

    @property
    def points(self):
        return self.ps.points

    def neighbors(self, u):
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    @cached_property
    def giant_vertices(self):
        if self.giant < 0:
            return np.empty(0, dtype=np.int64)
        return np.flatnonzero(self.labels == self.giant)

    @property
    def giant_fraction(self):
        return len(self.giant_vertices) / self.n if self.n else 0.0

    @cached_property
    def _giant_tree(self):
        return cKDTree(self.points[self.giant_vertices])

    def giant_edges(self):
        mask = self.labels[self.edges[:, 0]] == self.giant
        return self.edges[mask]

    def _check_vertex(self, u):
        if not (0 <= int(u) < self.n) or int(u) != u:
            raise ParameterError(f"invalid vertex id {u}")
        return int(u)

    def nearest_giant_distance(self, x):
        if not len(self.giant_vertices):
            raise SubcriticalError("subcritical sample: giant component is empty")
        dist, _ = self._giant_tree.query(np.atleast_2d(x))
        return dist

    def to_ndjson(self, path=None):
        lines = []
        for i, (x, c) in enumerate(zip(self.points.tolist(), self.labels.tolist())):
            lines.append(json.dumps({"id": i, "x": x, "component": c, "giant": c == self.giant}))
        lines.extend(json.dumps({"u": int(u), "v": int(v)}) for u, v in self.edges)
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def build_rgg(ps, r):
    """Disk graph on ``ps`` with edges {u, v} iff 0 < |u - v| < r."""
    if not (r > 0 and math.isfinite(r)):
        raise ParameterError(f"radius must be positive, got {r}")
    if r > ps.box.L / 10:
        warnings.warn(f"radius {r} exceeds a tenth of the box half-width {ps.box.L}", stacklevel=2)
    return Geograph(ps, r, rgg_edges(ps, r))


def components(g):
    """(labels, giant id). Labels are ranked by each component's smallest vertex."""
    return g.labels, g.giant


def nearest_giant_vertex(g, x):
    """q(x): closest giant vertex; exact-distance ties go to the lexicographically smallest point.

    Accepts one point or an (m, d) array; returns an int or an index array accordingly.
    """
    gv = g.giant_vertices
    if not len(gv):
        raise SubcriticalError("subcritical sample: giant component is empty")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    k = min(4, len(gv))
    dist, idx = g._giant_tree.query(X, k=k)
    dist = dist.reshape(len(X), k)
    idx = idx.reshape(len(X), k)
    out = gv[idx[:, 0]]
    if k > 1:
        for row in np.flatnonzero(dist[:, 1] == dist[:, 0]):
            cand = g._giant_tree.query_ball_point(X[row], dist[row, 0] * (1 + 1e-12) + 1e-300)
            cand = gv[np.asarray(cand, dtype=np.int64)]
            d_c = np.linalg.norm(g.points[cand] - X[row], axis=1)
            cand = cand[d_c == d_c.min()]
            pts = g.points[cand]
            out[row] = cand[np.lexsort(pts.T[::-1])[0]]
    return int(out[0]) if single else out


def hop_distances(g, source, targets=()):
    """BFS hop counts from ``source`` (float array, +inf where unreachable)."""
    w = np.ones(len(g.indices))
    return kernels.dijkstra(g.indptr, g.indices, w, int(source), np.asarray(targets, dtype=np.int64))


def graph_distance(g, u, v):
    """Hop distance, or None when v is not reachable from u."""
    u, v = g._check_vertex(u), g._check_vertex(v)
    if u == v:
        return 0
    dist = hop_distances(g, u, [v])[v]
    return None if math.isinf(dist) else int(dist)


@dataclass(frozen=True)
class ThetaEstimate:
    vertex_density: float  # giant vertices per unit volume in the inner box
    vertex_density_halfwidth: float
    vertex_fraction: float  # vertex_density / lambda
    ball_hit: float  # fraction of probes x with a giant vertex in B_r(x)
    ball_hit_halfwidth: float
    n_probes: int
    inner_volume: float


def probe_grid(box, pitch):
    """Regular grid of probe points covering ``box`` at spacing ``pitch`` (cell centres)."""
    m = max(int(math.floor(2 * box.L / pitch)), 1)
    axis = (np.arange(m) + 0.5) * (2 * box.L / m) - box.L
    mesh = np.meshgrid(*[axis + c for c in box.center], indexing="ij")
    return np.stack([a.ravel() for a in mesh], axis=1), (2 * box.L / m) ** box.d


def estimate_theta(g, inner_fraction=1 - DEFAULT_MARGIN, probe_pitch=None, probe_radius=None):
    """Two labelled estimators of theta_r on the inner box: vertex density and ball-hit frequency."""
    if not 0 < inner_fraction < 1:
        raise ParameterError("inner_fraction must lie in (0, 1)")
    if not len(g.giant_vertices):
        raise SubcriticalError("subcritical sample: giant component is empty")
    inner = g.ps.box.shrink(inner_fraction)
    inside = inner.contains(g.points[g.giant_vertices])
    count = int(inside.sum())
    vol = inner.volume
    density = count / vol
    probes, _ = probe_grid(inner, probe_pitch or g.r / 2)
    rad = g.r if probe_radius is None else probe_radius
    hit = g.nearest_giant_distance(probes) < rad
    p = float(hit.mean())
    return ThetaEstimate(
        vertex_density=density,
        vertex_density_halfwidth=1.96 * math.sqrt(count) / vol,
        vertex_fraction=density / g.ps.intensity,
        ball_hit=p,
        ball_hit_halfwidth=1.96 * math.sqrt(p * (1 - p) / len(probes)),
        n_probes=len(probes),
        inner_volume=vol,
    )


def giant_misses_ball(g, x, s):
    """True iff B_s(x) contains no giant vertex."""
    return bool(g.nearest_giant_distance(x)[0] >= s)


@dataclass(frozen=True)
class StretchEstimate:
    rho: float  # mean ratio at the largest radius
    table: np.ndarray  # (n_directions, n_radii) ratios dist(q(o), q(s u)) / s
    radii: np.ndarray
    means: np.ndarray  # per-radius mean over directions
    lower_bound: float  # 1 / r

    @property
    def bound_ok(self):
        return bool(np.all(self.table >= self.lower_bound - 1e-9))


def estimate_stretch_factor(g, directions, radii, inner_fraction=1 - DEFAULT_MARGIN):
    """Hop distance per unit Euclidean distance from q(o) towards each direction."""
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    radii = np.asarray(radii, dtype=np.float64)
    if np.any(np.diff(radii) <= 0):
        raise ParameterError("radii must be increasing")
    inner = g.ps.box.shrink(inner_fraction)
    if radii.max() > inner.L:
        raise ParameterError("largest radius leaves the inner box")
    origin = np.zeros(g.ps.d)
    src = nearest_giant_vertex(g, origin)
    targets = np.concatenate([s * directions for s in radii])
    qt = nearest_giant_vertex(g, targets)
    hops = hop_distances(g, src, qt)[qt]
    if np.any(np.isinf(hops)):
        raise SubcriticalError("target outside the source component")
    table = (hops.reshape(len(radii), len(directions)) / radii[:, None]).T
    return StretchEstimate(
        rho=float(table[:, -1].mean()),
        table=table,
        radii=radii,
        means=table.mean(axis=0),
        lower_bound=1.0 / g.r,
    )


def count_self_avoiding_paths(g, source, n):
    """Exact number of self-avoiding paths with n edges starting at ``source``."""
    source = g._check_vertex(source)
    if n < 0 or int(n) != n:
        raise ParameterError("path length must be a non-negative integer")
    if n > MAX_SAW_LENGTH:
        raise GuardError(f"path length {n} exceeds the enumeration guard {MAX_SAW_LENGTH}")
    return int(kernels.count_saw(g.indptr, g.indices, source, int(n)))


def unit_directions(d, count):
    """Equally spaced directions: angles on the circle for d=2, a Fibonacci sphere for d=3."""
    if d == 2:
        ang = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if d == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        phi = np.pi * (1 + 5**0.5) * k
        rho = np.sqrt(1 - z * z)
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    raise ParameterError("direction sets are provided for d = 2 and d = 3")
