"""Time constant, limiting-shape error and bond percolation at time zero."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ParameterError, SubcriticalError, SubcriticalQuotaError
from .fpp import (
    PassageSpec,
    assign_passage_times,
    check_A1,
    check_A2,
    edge_uniforms,
    first_passage,
    probe_times,
)
from .geograph import DEFAULT_MARGIN, build_rgg, nearest_giant_vertex, probe_grid
from .io import write_csv
from .parallel import map_ordered
from .point_process import Box, PointSet, derive_seed, sample_ppp, unit_ball_volume

FAILURE_QUOTA = 0.2


@dataclass(frozen=True)
class ModelConfig:
    lam: float = 1.0
    r: float = 2.0
    d: int = 2
    L: float = 80.0
    passage: PassageSpec = field(default_factory=PassageSpec.exponential)
    margin: float = DEFAULT_MARGIN
    min_giant_fraction: float = 0.5

    @property
    def box(self):
        return Box(self.d, self.L)

    @property
    def inner(self):
        return self.box.shrink(1 - self.margin)

    def hypothesis_warnings(self):
        out = []
        a1 = check_A1(self.passage, self.lam, self.r, self.d)
        if not a1["satisfied"]:
            out.append(f"A1 violated: P(tau=0)={a1['atom']} >= {a1['threshold']}")
        a2 = check_A2(self.passage, self.d)
        if not a2["satisfied"]:
            out.append(f"A2 violated: eta={a2['eta']} <= {a2['required']}")
        return out


def _rotated_sample(cfg, seed, rotation):
    """PPP on cfg.box obtained by rotating a PPP on a covering box (isometry invariance)."""
    big = Box(cfg.d, cfg.L * math.sqrt(cfg.d) * (1 + 1e-9))
    raw = sample_ppp(cfg.lam, big, seed)
    pts = raw.points @ np.asarray(rotation).T
    pts = pts[cfg.box.contains(pts)]
    return PointSet(pts, cfg.box, cfg.lam, seed)


def _sample_graph(cfg, seed, rotation=None):
    ps = sample_ppp(cfg.lam, cfg.box, seed) if rotation is None else _rotated_sample(cfg, seed, rotation)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = build_rgg(ps, cfg.r)
    if g.giant_fraction < cfg.min_giant_fraction:
        return None
    return g


@dataclass
class ShapeProfile:
    directions: np.ndarray
    s_list: np.ndarray
    ratios: np.ndarray  # (n_dir, n_seeds, n_s): T(o, s u) / s, NaN for failed replicas
    failures: int = 0
    warnings: list = field(default_factory=list)

    @property
    def mu(self):
        """Per-direction time-constant estimates at the largest s."""
        return np.nanmean(self.ratios[:, :, -1], axis=1)

    @property
    def se(self):
        r = self.ratios[:, :, -1]
        n = np.sum(~np.isnan(r), axis=1)
        return np.nanstd(r, axis=1, ddof=1) / np.sqrt(n)

    @property
    def table(self):
        """(n_s, n_dir) directional means for every s."""
        return np.nanmean(self.ratios, axis=1).T

    def spread(self, s_index=-1, ratios=None):
        """Isotropy statistic (max - min) / median of the directional means."""
        ratios = self.ratios if ratios is None else ratios
        m = np.nanmean(ratios[:, :, s_index], axis=1)
        med = np.median(m)
        return float((m.max() - m.min()) / med) if med > 0 else math.nan

    @property
    def isotropy(self):
        return self.spread(-1)

    @property
    def phi(self):
        med = np.median(self.mu)
        return float(1.0 / med) if med > 0 else math.inf  # instantaneous growth when A1 fails

    def bootstrap_spread_decrease(self, small=0, large=-1, n_boot=1000, seed=0):
        """Fraction of seed resamples where spread at s_list[large] < spread at s_list[small]."""
        rng = np.random.default_rng(seed)
        n = self.ratios.shape[1]
        wins = 0
        for _ in range(n_boot):
            idx = rng.integers(0, n, n)
            sub = self.ratios[:, idx, :]
            wins += self.spread(large, sub) < self.spread(small, sub)
        return wins / n_boot

    def to_csv(self, path=None):
        header = ["direction", "u0", "u1", "s", "mu", "se", "n"]
        header = header[:1] + [f"u{k}" for k in range(self.directions.shape[1])] + header[3:]
        rows = []
        for si, s in enumerate(self.s_list):
            vals = self.ratios[:, :, si]
            n = np.sum(~np.isnan(vals), axis=1)
            mean = np.nanmean(vals, axis=1)
            se = np.nanstd(vals, axis=1, ddof=1) / np.sqrt(n)
            for i, u in enumerate(self.directions):
                rows.append([i, *u.tolist(), float(s), float(mean[i]), float(se[i]), int(n[i])])
        return write_csv(path, header, rows)


def _directional_task(cfg, directions, s_list, ps_seed, tau_seed, rotation, u_index):
    g = _sample_graph(cfg, ps_seed, rotation)
    if g is None:
        return None
    src = nearest_giant_vertex(g, np.zeros(cfg.d))
    targets = nearest_giant_vertex(g, np.outer(s_list, directions[u_index]))
    w = assign_passage_times(g, cfg.passage, tau_seed)
    T = first_passage(g, w, src, targets=targets).T[targets]
    return T / s_list


def directional_constants(
    cfg, directions, s_list, n_seeds, root_seed=0, quenched=False, rotation=None, threads=1
):
    """Annealed estimate of T(o, s u) / s per direction u; each (u, seed) gets a fresh sample.

    With ``quenched`` a single point sample is shared and only the passage
    times are redrawn.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    s_list = np.asarray(s_list, dtype=np.float64)
    if np.any(np.diff(s_list) <= 0):
        raise ParameterError("s_list must be increasing")
    if s_list.max() > cfg.inner.L:
        raise ParameterError("largest s leaves the inner box")
    tasks = []
    for i in range(len(directions)):
        for j in range(n_seeds):
            ps_seed = derive_seed(root_seed, "ppp") if quenched else derive_seed(root_seed, "ppp", i, j)
            tasks.append((cfg, directions, s_list, ps_seed, derive_seed(root_seed, "tau", i, j), rotation, i))
    results = map_ordered(lambda a: _directional_task(*a), tasks, threads)
    ratios = np.full((len(directions), n_seeds, len(s_list)), np.nan)
    failures = 0
    for (i, j), res in zip(((i, j) for i in range(len(directions)) for j in range(n_seeds)), results):
        if res is None:
            failures += 1
        else:
            ratios[i, j] = res
    if failures > FAILURE_QUOTA * len(tasks):
        raise SubcriticalQuotaError(
            f"{failures} of {len(tasks)} samples had giant fraction below {cfg.min_giant_fraction}"
        )
    return ShapeProfile(directions, s_list, ratios, failures, cfg.hypothesis_warnings())


@dataclass(frozen=True)
class ShapeError:
    eps: float
    eps_in: float
    eps_out: float
    radius: float
    truncated: bool  # reached set touches the probe window, so eps_out is a lower bound


def shape_error_from_probes(probes, reached, radius):
    """eps = max(eps_in, eps_out) for a probed reached set against the ball B_radius(o)."""
    reached = np.asarray(reached, dtype=bool)
    if not reached.any():
        raise ParameterError("reached set is empty")
    norm = np.linalg.norm(probes, axis=1)
    eps_out = float(np.max(np.maximum(norm[reached] / radius - 1.0, 0.0), initial=0.0))
    holes = ~reached & (norm < radius)
    eps_in = float(np.max(1.0 - norm[holes] / radius, initial=0.0))
    return max(eps_in, eps_out), eps_in, eps_out


def shape_error(field, phi, t, pitch=None, inner_fraction=1 - DEFAULT_MARGIN):
    """Smallest eps with (1-eps) B_{phi t} <= H_t <= (1+eps) B_{phi t} on the probe grid."""
    g = field.graph
    radius = phi * t
    inner = g.ps.box.shrink(inner_fraction)
    if radius >= inner.L:
        raise ParameterError(f"ball radius {radius} does not fit in the inner box")
    probes, _ = probe_grid(inner, pitch or g.r / 4)
    reached = probe_times(field, probes) <= t
    eps, eps_in, eps_out = shape_error_from_probes(probes, reached, radius)
    edge = np.max(np.abs(probes), axis=1) >= np.max(np.abs(probes)) - (pitch or g.r / 4)
    return ShapeError(eps, eps_in, eps_out, radius, bool(np.any(reached & edge)))


def pc_lower_bound(lam, r, d):
    """1 / (v_d r^d lam): below it the zero-time clusters are finite."""
    if not (lam > 0 and r > 0 and d >= 1):
        raise ParameterError("parameters must be positive")
    return 1.0 / (unit_ball_volume(d) * r**d * lam)


def _largest_open_fraction(g, u, p):
    """Largest open cluster inside the giant component, as a fraction of giant vertices."""
    gv = g.giant_vertices
    ge_mask = g.labels[g.edges[:, 0]] == g.giant
    open_mask = ge_mask & (u < p)
    e = g.edges[open_mask]
    local = np.full(g.n, -1, dtype=np.int64)
    local[gv] = np.arange(len(gv))
    m = len(gv)
    adj = coo_matrix((np.ones(len(e)), (local[e[:, 0]], local[e[:, 1]])), shape=(m, m))
    _, lab = connected_components(adj, directed=False)
    largest = np.bincount(lab).max()
    return largest / m, bool(open_mask.sum() == ge_mask.sum())


@dataclass
class PercolationReport:
    p: float
    box_sizes: list
    fractions: np.ndarray  # (n_boxes, n_seeds)
    open_is_giant: np.ndarray  # (n_boxes, n_seeds) open subgraph equals the giant component
    threshold: float

    @property
    def medians(self):
        return np.nanmedian(self.fractions, axis=1)


def bond_percolation(cfg, p, box_sizes, n_seeds, root_seed=0, threads=1):
    """Largest zero-passage-time cluster of the giant component; edges open with probability p."""
    if not 0 <= p <= 1:
        raise ParameterError("p must lie in [0, 1]")
    tasks = [(li, L, j) for li, L in enumerate(box_sizes) for j in range(n_seeds)]

    def run(task):
        li, L, j = task
        sub = ModelConfig(cfg.lam, cfg.r, cfg.d, L, cfg.passage, cfg.margin, 0.0)
        g = _sample_graph(sub, derive_seed(root_seed, "ppp", li, j))
        if not len(g.giant_vertices):
            return math.nan, False
        u = edge_uniforms(derive_seed(root_seed, "tau", li, j), g.edges[:, 0], g.edges[:, 1])
        return _largest_open_fraction(g, u, p)

    out = map_ordered(run, tasks, threads)
    frac = np.array([o[0] for o in out]).reshape(len(box_sizes), n_seeds)
    same = np.array([o[1] for o in out]).reshape(len(box_sizes), n_seeds)
    return PercolationReport(p, list(box_sizes), frac, same, pc_lower_bound(cfg.lam, cfg.r, cfg.d))


def percolation_snapshot(cfg, p, L, root_seed=0):
    """(graph, open-edge mask) for the first replica of ``bond_percolation`` at box size L."""
    sub = ModelConfig(cfg.lam, cfg.r, cfg.d, L, cfg.passage, cfg.margin, 0.0)
    g = _sample_graph(sub, derive_seed(root_seed, "ppp", 0, 0))
    u = edge_uniforms(derive_seed(root_seed, "tau", 0, 0), g.edges[:, 0], g.edges[:, 1])
    return g, (g.labels[g.edges[:, 0]] == g.giant) & (u < p)


def percolation_sweep(cfg, p_grid, n_seeds, root_seed=0, threads=1):
    """Coupled sweep: one uniform per edge, edge open iff u < p, so clusters grow with p.

    Returns an array (n_seeds, len(p_grid)) of largest-open-cluster fractions.
    """
    p_grid = np.asarray(p_grid, dtype=np.float64)

    def run(j):
        g = _sample_graph(cfg, derive_seed(root_seed, "ppp", j))
        if g is None:
            raise SubcriticalError("sweep sample is subcritical")
        u = edge_uniforms(derive_seed(root_seed, "tau", j), g.edges[:, 0], g.edges[:, 1])
        return [_largest_open_fraction(g, u, p)[0] for p in p_grid]

    return np.array(map_ordered(run, range(n_seeds), threads))


def far_growth_frequency(cfg, delta, t_list, n_seeds, root_seed=0, pitch=None):
    """Frequency over seeds of {sup over probes y in B_{delta t}(o) of T(o, y) >= t}, per t."""
    hits = np.zeros(len(t_list))
    for j in range(n_seeds):
        g = _sample_graph(cfg, derive_seed(root_seed, "ppp", j))
        if g is None:
            raise SubcriticalError("sample is subcritical")
        w = assign_passage_times(g, cfg.passage, derive_seed(root_seed, "tau", j))
        src = nearest_giant_vertex(g, np.zeros(cfg.d))
        t_max = max(t_list)
        field_ = first_passage(g, w, src, t_max=t_max)
        probes, _ = probe_grid(Box(cfg.d, delta * t_max), pitch or cfg.r / 2)
        T = probe_times(field_, probes)
        norm = np.linalg.norm(probes, axis=1)
        for k, t in enumerate(t_list):
            inside = norm < delta * t
            hits[k] += np.any(T[inside] >= t)
    return hits / n_seeds
