"""Rescaled Richardson growth at high density and its spatial branching limit.

Positions live in the original units: the point sample has intensity
``alpha * lam`` and Richardson edge clocks have rate ``lam_I / alpha``.
Neighbourhoods here use the closed rule ``|x - y| <= r``; the disk graph uses
the open rule, and the two agree except on a null set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from .errors import IntegrityError, NoNeighborError, ParameterError
from .fpp import PassageSpec, edge_uniforms
from .geograph import grid_component_labels
from .io import write_csv
from .parallel import map_ordered
from .point_process import Box, derive_seed, sample_ppp, unit_ball_volume

PROVENANCE = ("empirical", "limit")


# --- neighbour counts -------------------------------------------------------


def _member_indices(ps, S):
    """Indices of the points of S inside ps; ParameterError if any is missing."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if S.shape[1] != ps.d:
        raise ParameterError("S has the wrong dimension")
    if not len(ps):
        raise ParameterError("S is not a subset of an empty sample")
    dist, idx = cKDTree(ps.points).query(S)
    if np.any(dist > 0):
        raise ParameterError("S is not a subset of the sample")
    return np.unique(idx)


def _multiplicities(points, members, r):
    """For every point: number of members within distance r (members themselves set to 0)."""
    counts = np.zeros(len(points), dtype=np.int64)
    for m in members:
        diff = points - points[m]
        counts += np.einsum("ij,ij->i", diff, diff) <= r * r
    counts[members] = 0
    return counts


def n_alpha(ps, S, r):
    """Number of sample points outside S within r of S, counted with multiplicity.

    Evaluated as a sum over S and as a sum over outside points; the two must agree.
    """
    members = _member_indices(ps, S)
    tree = cKDTree(ps.points)
    inside = set(members.tolist())
    by_source = 0
    for m in members:
        near = tree.query_ball_point(ps.points[m], r)
        by_source += sum(1 for y in near if y not in inside)
    by_target = int(_multiplicities(ps.points, members, r).sum())
    if by_source != by_target:
        raise IntegrityError(f"neighbour count mismatch: {by_source} != {by_target}")
    return by_target


# --- cube kernels -----------------------------------------------------------


def cube_index(y, delta):
    """Index z of the cube delta*z + [-delta/2, delta/2)^d holding each row of y."""
    return np.floor(np.asarray(y, dtype=np.float64) / delta + 0.5).astype(np.int64)


@dataclass(frozen=True)
class KernelEstimate:
    """Cube-grained spatial kernel plus the rate of the exponential waiting time."""

    delta: float
    cubes: np.ndarray  # (m, d) integer cube indices, lexicographically sorted
    masses: np.ndarray
    se: np.ndarray
    rate: float
    S: np.ndarray
    provenance: str

    def __post_init__(self):
        if self.provenance not in PROVENANCE:
            raise ParameterError(f"unknown provenance {self.provenance!r}")
        if not self.rate > 0:
            raise ParameterError("temporal rate must be positive")
        if abs(self.masses.sum() - 1.0) > 1e-9:
            raise IntegrityError(f"kernel masses sum to {self.masses.sum()!r}")

    def as_dict(self):
        return {tuple(z): m for z, m in zip(self.cubes.tolist(), self.masses.tolist())}

    def to_csv(self, path=None):
        d = self.cubes.shape[1]
        header = [f"cube_index{k}" for k in range(d)] + ["mass", "se"]
        rows = [[*z, float(m), float(s)] for z, m, s in zip(self.cubes.tolist(), self.masses, self.se)]
        return write_csv(path, header, rows)


def _collect(cubes, weights):
    uniq, inv = np.unique(cubes, axis=0, return_inverse=True)
    return uniq, np.bincount(inv.ravel(), weights=weights, minlength=len(uniq))


def empirical_spatial_kernel(ps, S, r, delta, alpha=1.0, lam_I=1.0):
    """Next-infection kernel of the rescaled process given the infected set S."""
    if not delta > 0:
        raise ParameterError("delta must be positive")
    members = _member_indices(ps, S)
    mult = _multiplicities(ps.points, members, r)
    N = int(mult.sum())
    if N == 0:
        raise NoNeighborError("no sample point within r of S; the kernel is undefined")
    hit = np.flatnonzero(mult)
    cubes, weight = _collect(cube_index(ps.points[hit], delta), mult[hit].astype(np.float64))
    return KernelEstimate(
        float(delta), cubes, weight / N, np.zeros(len(cubes)), N * lam_I / alpha,
        ps.points[members], "empirical",
    )


def _stratified_unit_points(d, mc_samples, rng):
    """One uniform point per sub-cell of a regular split of [-1/2, 1/2)^d."""
    m = max(1, int(round(mc_samples ** (1.0 / d))))
    grid = np.stack(np.meshgrid(*[np.arange(m)] * d, indexing="ij"), -1).reshape(-1, d)
    return (grid + rng.random(grid.shape)) / m - 0.5


def limit_spatial_kernel(S, r, delta, mc_samples=4096, lam=1.0, lam_I=1.0, seed=0):
    """Cube masses of the uniform mixture over the balls B_r(x), x in S.

    Cubes wholly inside or outside a ball are handled exactly; cubes cut by a
    sphere are estimated with stratified Monte Carlo, then rescaled per ball
    so that each ball's boundary cubes carry exactly the remaining volume.
    """
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if not len(S):
        raise ParameterError("S must be non-empty")
    if not (r > 0 and delta > 0):
        raise ParameterError("r and delta must be positive")
    d = S.shape[1]
    rng = np.random.default_rng(seed)
    ball = unit_ball_volume(d) * r**d
    cell = delta**d
    unit = _stratified_unit_points(d, mc_samples, rng)
    n_mc = len(unit)
    acc = {}
    for x in S:
        lo = cube_index(x - r, delta)
        hi = cube_index(x + r, delta)
        axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
        Z = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
        centers = Z * delta
        near = np.clip(x, centers - delta / 2, centers + delta / 2)
        dmin = np.linalg.norm(near - x, axis=1)
        far = np.abs(centers - x) + delta / 2
        dmax = np.linalg.norm(far, axis=1)
        inside = dmax <= r
        cut = ~inside & (dmin < r)
        vol = np.where(inside, cell, 0.0)
        var = np.zeros(len(Z))
        if cut.any():
            pts = centers[cut][:, None, :] + delta * unit[None, :, :]
            frac = (np.linalg.norm(pts - x, axis=2) <= r).mean(axis=1)
            raw = frac * cell
            target = ball - inside.sum() * cell
            scale = target / raw.sum() if raw.sum() > 0 else 0.0
            vol[cut] = raw * scale
            var[cut] = (cell * scale) ** 2 * frac * (1 - frac) / n_mc
        for z, v, s2 in zip(map(tuple, Z[inside | cut].tolist()), vol[inside | cut], var[inside | cut]):
            a = acc.setdefault(z, [0.0, 0.0])
            a[0] += v
            a[1] += s2
    keys = sorted(acc)
    norm = len(S) * ball
    masses = np.array([acc[z][0] for z in keys]) / norm
    se = np.sqrt(np.array([acc[z][1] for z in keys])) / norm
    masses /= masses.sum()  # absorbs float round-off only
    rate = len(S) * ball * lam * lam_I
    return KernelEstimate(float(delta), np.array(keys, dtype=np.int64).reshape(-1, d), masses, se, rate, S, "limit")


def cube_tv_distance(k1, k2):
    """Sum over cubes of |mass1 - mass2| (ranges over [0, 2])."""
    if k1.delta != k2.delta:
        raise ParameterError("kernels use different cube sides")
    a, b = k1.as_dict(), k2.as_dict()
    return float(sum(abs(a.get(z, 0.0) - b.get(z, 0.0)) for z in set(a) | set(b)))


# --- regularity of the sample -----------------------------------------------


@dataclass(frozen=True)
class RegCheck:
    holds: bool
    worst: float
    n_cubes: int


def reg_check(ps, ell, delta):
    """Every delta-cube inside B_ell(o) holds alpha*lam*delta^d points up to relative error delta."""
    if np.any(np.abs(ps.box.center) + ell > ps.box.L):
        raise ParameterError("B_ell(o) must lie inside the sample box")
    d = ps.d
    zmax = int(math.ceil(ell / delta))
    axis = np.arange(-zmax, zmax + 1)
    Z = np.stack(np.meshgrid(*[axis] * d, indexing="ij"), -1).reshape(-1, d)
    far = np.linalg.norm(np.abs(Z * delta) + delta / 2, axis=1)
    Z = Z[far <= ell]
    if not len(Z):
        return RegCheck(True, 0.0, 0)
    found, counts = np.unique(cube_index(ps.points, delta), axis=0, return_counts=True)
    lookup = dict(zip(map(tuple, found.tolist()), counts.tolist()))
    n = np.array([lookup.get(tuple(z), 0) for z in Z.tolist()])
    dev = np.abs(n / (ps.intensity * delta**d) - 1.0)
    worst = float(dev.max())
    return RegCheck(worst < delta, worst, len(Z))


# --- jump chains ------------------------------------------------------------


def uniform_in_ball(rng, center, r, size=None):
    """Uniform point(s) in the closed ball B_r(center)."""
    center = np.asarray(center, dtype=np.float64)
    d = center.shape[-1]
    shape = (d,) if size is None else (size, d)
    g = rng.standard_normal(shape)
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    rad = r * rng.random(() if size is None else (size, 1)) ** (1.0 / d)
    return center + rad * g


@dataclass
class RescaledRun:
    """First k jumps of the rescaled process started at Z_0 = q(o)."""

    alpha: float
    Z: np.ndarray  # (j + 1, d) jump locations, j <= k
    T: np.ndarray  # (j,) waiting times
    rates: np.ndarray  # (j,) conditional rate of each waiting time
    seed: int
    mode: str
    k: int
    giant_fraction: float = 1.0
    excluded: bool = False  # sample judged subcritical; not part of the statistics
    laws: list = field(default_factory=list)  # per step: (atoms, weights) of the next-location law

    @property
    def complete(self):
        return not self.excluded and len(self.T) == self.k

    @property
    def halted(self):
        return not self.excluded and len(self.T) < self.k


def _rescaled_sample(alpha, lam, r, k, d, seed):
    box = Box(d, (k + 2) * r)
    return sample_ppp(alpha * lam, box, derive_seed(seed, "points"))


def _root(ps, r, min_giant_fraction):
    """(q(o), giant fraction) using grid-based components; q(o) is None if subcritical."""
    labels = grid_component_labels(ps, r)
    uniq, counts = np.unique(labels, return_counts=True)
    giant = uniq[np.argmax(counts)]  # labels are component minima, so ties go to the smallest
    fraction = counts.max() / len(ps)
    if fraction < min_giant_fraction:
        return None, fraction
    gv = np.flatnonzero(labels == giant)
    dist = np.linalg.norm(ps.points[gv], axis=1)
    cand = gv[dist == dist.min()]
    q = cand[np.lexsort(ps.points[cand].T[::-1])[0]]
    return int(q), float(fraction)


def _near(points, x, r, strict):
    diff = points - x
    d2 = np.einsum("ij,ij->i", diff, diff)
    return np.flatnonzero(d2 < r * r if strict else d2 <= r * r)


def rescaled_richardson_run(
    alpha, lam=1.0, lam_I=1.0, r=1.0, k=1, seed=0, mode="direct", d=2,
    max_atoms=0, min_giant_fraction=0.5,
):
    """One trajectory of the rescaled Richardson process on a fresh sample.

    ``direct`` runs first passage with Exp(lam_I / alpha) edge clocks from q(o),
    exploring neighbourhoods lazily. ``kernel-chain`` samples each jump from
    the empirical spatial and temporal kernels of the current infected set.
    With ``max_atoms`` > 0 each step also records the conditional law of the
    next location: exact weighted atoms, or ``max_atoms`` draws from an
    independent stream when there are more candidates than that.
    """
    if k < 1:
        raise ParameterError("k must be at least 1")
    if mode not in ("direct", "kernel-chain"):
        raise ParameterError(f"unknown mode {mode!r}")
    ps = _rescaled_sample(alpha, lam, r, k, d, seed)
    if not len(ps):
        return RescaledRun(alpha, np.empty((0, d)), np.empty(0), np.empty(0), seed, mode, k, 0.0, True)
    q, frac = _root(ps, r, min_giant_fraction)
    if q is None:
        return RescaledRun(alpha, np.empty((0, d)), np.empty(0), np.empty(0), seed, mode, k, frac, True)
    aux = np.random.default_rng(derive_seed(seed, "draws"))
    if mode == "direct":
        return _direct_run(ps, q, frac, alpha, lam_I, r, k, seed, max_atoms, aux)
    return _chain_run(ps, q, frac, alpha, lam_I, r, k, seed, max_atoms, aux)


def _record_law(aux, max_atoms, points, mult, N, laws):
    if not max_atoms:
        return
    cand = np.flatnonzero(mult)
    if len(cand) <= max_atoms:
        laws.append((points[cand], mult[cand] / N))
    else:
        pick = aux.choice(cand, size=max_atoms, p=mult[cand] / N)
        laws.append((points[pick], np.full(max_atoms, 1.0 / max_atoms)))


def _direct_run(ps, q, frac, alpha, lam_I, r, k, seed, max_atoms, aux):
    pts = ps.points
    clock = PassageSpec.exponential(lam_I / alpha)
    w_seed = derive_seed(seed, "weights")
    tent = np.full(len(pts), np.inf)
    mult = np.zeros(len(pts), dtype=np.int64)
    settled = np.zeros(len(pts), dtype=bool)
    order, times, rates, laws = [q], [0.0], [], []
    v, t_v = q, 0.0
    settled[q] = True
    for _ in range(k):
        nb = _near(pts, pts[v], r, strict=True)
        nb = nb[~settled[nb]]
        if len(nb):
            w = clock.quantile(edge_uniforms(w_seed, np.full(len(nb), v), nb))
            np.minimum.at(tent, nb, t_v + w)
            mult[nb] += 1
        N = int(mult.sum())
        if N == 0:
            break
        rates.append(N * lam_I / alpha)
        _record_law(aux, max_atoms, pts, mult, N, laws)
        v = int(np.argmin(tent))
        t_v = float(tent[v])
        settled[v] = True
        tent[v] = np.inf
        mult[v] = 0
        order.append(v)
        times.append(t_v)
    return RescaledRun(
        alpha, pts[order], np.diff(times), np.array(rates), seed, "direct", k, frac, False, laws
    )


def _chain_run(ps, q, frac, alpha, lam_I, r, k, seed, max_atoms, aux):
    pts = ps.points
    rng = np.random.default_rng(derive_seed(seed, "chain"))
    mult = np.zeros(len(pts), dtype=np.int64)
    members = [q]
    waits, rates, laws = [], [], []
    for _ in range(k):
        mult[_near(pts, pts[members[-1]], r, strict=False)] += 1
        mult[members] = 0
        N = int(mult.sum())
        if N == 0:
            break
        rate = N * lam_I / alpha
        rates.append(rate)
        _record_law(aux, max_atoms, pts, mult, N, laws)
        waits.append(rng.exponential(1.0 / rate))
        cand = np.flatnonzero(mult)
        members.append(int(rng.choice(cand, p=mult[cand] / N)))
    return RescaledRun(
        alpha, pts[members], np.array(waits), np.array(rates), seed, "kernel-chain", k, frac, False, laws
    )


@dataclass
class BranchingTree:
    """Spatial branching process: every node gives birth at a constant rate, forever."""

    points: np.ndarray
    parents: np.ndarray  # -1 for the root
    births: np.ndarray
    laws: list = field(default_factory=list)  # per step: (draws, weights) of the next-birth location

    @property
    def Z(self):
        return self.points

    @property
    def T(self):
        return np.diff(self.births)

    def trace(self):
        from .fpp import GrowthTrace

        return GrowthTrace(s=self.births.copy(), z=self.points.copy(), vertices=np.arange(len(self.points)))


def _node_rate(lam, lam_I, r, d):
    return unit_ball_volume(d) * r**d * lam * lam_I


def branching_run(lam=1.0, lam_I=1.0, r=1.0, k=1, seed=0, d=2, n_draws=0):
    """First k births of the branching process rooted at the origin at time 0."""
    if k < 1:
        raise ParameterError("k must be at least 1")
    rng = np.random.default_rng(derive_seed(seed, "branching"))
    aux = np.random.default_rng(derive_seed(seed, "draws"))
    c = _node_rate(lam, lam_I, r, d)
    pts = [np.zeros(d)]
    parents = [-1]
    births = [0.0]
    laws = []
    for _ in range(k):
        m = len(pts)
        if n_draws:
            anchors = np.asarray(pts)[aux.integers(0, m, n_draws)]
            laws.append((anchors + uniform_in_ball(aux, np.zeros(d), r, n_draws), np.full(n_draws, 1.0 / n_draws)))
        births.append(births[-1] + rng.exponential(1.0 / (m * c)))
        parent = int(rng.integers(0, m))
        pts.append(uniform_in_ball(rng, pts[parent], r))
        parents.append(parent)
    return BranchingTree(np.array(pts), np.array(parents), np.array(births), laws)


def limit_chain_run(lam=1.0, lam_I=1.0, r=1.0, k=1, seed=0, d=2):
    """The same process sampled as a jump chain from the limit kernels of the infected set.

    Returns (Z, T). Uses the random stream of ``branching_run`` call for call.
    """
    rng = np.random.default_rng(derive_seed(seed, "branching"))
    S = [np.zeros(d)]
    waits = []
    for _ in range(k):
        rate = len(S) * _node_rate(lam, lam_I, r, d)
        waits.append(rng.exponential(1.0 / rate))
        anchor = S[int(rng.integers(0, len(S)))]
        S.append(uniform_in_ball(rng, anchor, r))
    return np.array(S), np.array(waits)


# --- convergence statistics -------------------------------------------------


def _mean_abs_projection(d):
    """E|theta_1| for theta uniform on the unit sphere in R^d."""
    return math.gamma(d / 2) / (math.sqrt(math.pi) * math.gamma((d + 1) / 2))


def projection_directions(d, count):
    if d == 2:
        ang = (np.arange(count) + 0.5) * math.pi / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    rng = np.random.default_rng(12345)
    g = rng.standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _sorted_sums(a, w):
    """Sorted values with prefix sums of weights and weighted values (leading zero)."""
    order = np.argsort(a)
    a, w = a[order], w[order]
    return a, np.r_[0.0, np.cumsum(w)], np.r_[0.0, np.cumsum(w * a)]


def _pair_abs_sum(a, w):
    """Sum over unordered pairs of w_i w_j |a_i - a_j| for 1-d data."""
    a, cw, cwa = _sorted_sums(a, w)
    return float(np.dot(np.diff(cw), a * cw[:-1] - cwa[:-1]))


def _grouped_pair_abs_sum(a, w, groups):
    """The same sum restricted to pairs that share a group."""
    n = len(a)
    rank = np.empty(n, dtype=np.int64)
    rank[np.argsort(a)] = np.arange(n)
    g = np.unique(groups, return_inverse=True)[1].astype(np.int64)
    order = np.argsort(g * n + rank)
    a, w, g = a[order], w[order], g[order]
    start = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
    first = np.repeat(start, np.diff(np.r_[start, len(a)]))
    cw = np.cumsum(w) - w
    cwa = np.cumsum(w * a) - w * a
    cw -= cw[first]
    cwa -= cwa[first]
    return float(np.dot(w, a * cw - cwa))


def _blocked_mean_abs(a, w, groups):
    """Weighted mean |a_i - a_j| over pairs drawn from different groups."""
    total = _pair_abs_sum(a, w)
    mass = (w.sum() ** 2 - np.dot(w, w)) / 2
    if groups is not None:
        total -= _grouped_pair_abs_sum(a, w, groups)
        inv = np.unique(groups, return_inverse=True)[1]
        gw = np.bincount(inv, weights=w)
        gw2 = np.bincount(inv, weights=w * w)
        mass -= np.sum(gw**2 - gw2) / 2
    return total / mass


def _cross_mean_abs(a, w, sb, cwb, cwab):
    """Weighted mean |a_i - b_j| given b sorted with its prefix sums."""
    k = np.searchsorted(sb, a)
    left_w, left_wa = cwb[k], cwab[k]
    per = a * left_w - left_wa + (cwab[-1] - left_wa) - a * (cwb[-1] - left_w)
    return float(np.dot(w, per) / (w.sum() * cwb[-1]))


def _sample(x, weights, groups):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    w = np.ones(len(x)) if weights is None else np.asarray(weights, dtype=np.float64)
    g = None if groups is None else np.asarray(groups)
    return x, w, g


def energy_distances(samples, reference, n_proj=32):
    """Energy distance of each (x, weights, groups) sample to one reference sample.

    Unbiased form 2E|X-Y| - E|X-X'| - E|Y-Y'|: within-sample terms use only
    pairs from different groups, so points sharing a group (for instance the
    atoms of one simulated run) may be dependent. Distances in R^d come from
    |v| = E|<theta, v>| / E|theta_1| over unit theta, evaluated on ``n_proj``
    projection directions; the reference is sorted once per direction.
    """
    y, wy, gy = _sample(*reference)
    xs = [_sample(*smp) for smp in samples]
    d = y.shape[1]
    dirs = np.ones((1, 1)) if d == 1 else projection_directions(d, n_proj)
    acc = np.zeros(len(xs))
    for u in dirs:
        b = y @ u
        sb, cwb, cwab = _sorted_sums(b, wy)
        within_y = _blocked_mean_abs(b, wy, gy)
        for n, (x, wx, gx) in enumerate(xs):
            a = x @ u
            acc[n] += 2 * _cross_mean_abs(a, wx, sb, cwb, cwab) - _blocked_mean_abs(a, wx, gx) - within_y
    scale = 1.0 if d == 1 else _mean_abs_projection(d)
    return (acc / len(dirs) / scale).tolist()


def energy_distance(x, y, n_proj=32, groups_x=None, groups_y=None, weights_x=None, weights_y=None):
    """Energy distance between two weighted, grouped samples (see ``energy_distances``)."""
    return energy_distances([(x, weights_x, groups_x)], (y, weights_y, groups_y), n_proj)[0]


def energy_distance_pairwise(x, y, groups_x=None, groups_y=None, weights_x=None, weights_y=None):
    """Direct O(n m) evaluation of the same estimator (reference implementation)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    wx = np.ones(len(x)) if weights_x is None else np.asarray(weights_x, dtype=np.float64)
    wy = np.ones(len(y)) if weights_y is None else np.asarray(weights_y, dtype=np.float64)

    def within(a, w, g):
        g = np.arange(len(a)) if g is None else np.asarray(g)
        dist = np.linalg.norm(a[:, None, :] - a[None, :, :], axis=2)
        ww = np.outer(w, w) * (g[:, None] != g[None, :])
        return (dist * ww).sum() / ww.sum()

    cross = (np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2) * np.outer(wx, wy)).sum() / (wx.sum() * wy.sum())
    return float(2 * cross - within(x, wx, groups_x) - within(y, wy, groups_y))


def smoothed_ks_exponential(rates, limit_rate, grid_size=4096):
    """sup_t |mean_i (1 - exp(-rates_i t)) - (1 - exp(-limit_rate t))|.

    Compares the mixture of conditional exponential laws against the limit law.
    """
    rates = np.asarray(rates, dtype=np.float64)
    t = np.linspace(0.0, 20.0 / min(limit_rate, rates.min()), grid_size)
    F = -np.expm1(-np.outer(t, rates)).mean(axis=1)
    G = -np.expm1(-limit_rate * t)
    coarse = int(np.argmax(np.abs(F - G)))
    lo, hi = t[max(coarse - 1, 0)], t[min(coarse + 1, grid_size - 1)]
    fine = np.linspace(lo, hi, 257)
    Ff = -np.expm1(-np.outer(fine, rates)).mean(axis=1)
    Gf = -np.expm1(-limit_rate * fine)
    return float(max(np.abs(F - G).max(), np.abs(Ff - Gf).max()))


def bump(z, center, width=0.5):
    z = np.atleast_2d(z)
    return np.exp(-np.sum((z - center) ** 2, axis=1) / (2 * width**2))


STATISTICS = (
    "z0_norm_median", "z0_mean_norm", "ks", "ks_sample", "energy", "test_function",
    "halt_rate", "excluded_rate", "giant_fraction",
)


@dataclass
class ConvergenceTable:
    rows: list  # (alpha, statistic, coordinate, value)

    def value(self, alpha, statistic, coordinate=0):
        for a, s, c, v in self.rows:
            if a == alpha and s == statistic and c == coordinate:
                return v
        raise KeyError((alpha, statistic, coordinate))

    def series(self, statistic, coordinate=0):
        return [v for a, s, c, v in self.rows if s == statistic and c == coordinate]

    def to_csv(self, path=None):
        return write_csv(path, ["alpha", "statistic", "coordinate", "value"], self.rows)


def convergence_experiment(
    alpha_grid, lam=1.0, lam_I=1.0, r=1.0, k=1, n_runs=500, root_seed=0, d=2,
    mode="direct", max_atoms=4096, limit_draws=4096, n_proj=32, threads=1,
):
    """Distances between the first k jumps of the rescaled process and the branching limit.

    Per alpha and jump i: ``ks`` compares the law of T_{alpha,i} with the
    limit Exp(i * v_d r^d lam lam_I) through the conditional waiting-time
    rates; ``energy`` compares the pooled conditional laws of Z_{alpha,i}
    with pooled draws from the limit; ``ks_sample`` is the plain two-sample
    statistic on raw waiting times.
    """
    alpha_grid = [float(a) for a in alpha_grid]
    if any(b <= a for a, b in zip(alpha_grid, alpha_grid[1:])):
        raise ParameterError("alpha grid must be increasing")
    c = _node_rate(lam, lam_I, r, d)
    trees = map_ordered(
        lambda j: branching_run(lam, lam_I, r, k, derive_seed(root_seed, "limit", j), d, limit_draws),
        range(n_runs), threads,
    )
    f_center = np.full(d, 0.5 * r / math.sqrt(d))
    kept, summary = {}, {}
    for alpha in alpha_grid:
        runs = map_ordered(
            lambda j: rescaled_richardson_run(
                alpha, lam, lam_I, r, k, derive_seed(root_seed, "run", alpha, j), mode, d, max_atoms
            ),
            range(n_runs), threads,
        )
        kept[alpha] = [u for u in runs if not u.excluded]
        summary[alpha] = (
            sum(u.halted for u in kept[alpha]) / max(len(kept[alpha]), 1),
            1 - len(kept[alpha]) / n_runs,
            float(np.mean([u.giant_fraction for u in runs])),
        )
    per_jump = {}
    for i in range(1, k + 1):
        live = {a: [u for u in kept[a] if len(u.T) >= i] for a in alpha_grid}
        per_jump[i] = _jump_statistics(live, trees, i, c, f_center, n_proj)
    rows = []
    for alpha in alpha_grid:
        z0 = np.array([u.Z[0] for u in kept[alpha]]).reshape(-1, d)
        norms = np.linalg.norm(z0, axis=1)
        rows.append((alpha, "z0_norm_median", 0, float(np.median(norms)) if len(z0) else math.nan))
        rows.append((alpha, "z0_mean_norm", 0, float(np.linalg.norm(z0.mean(axis=0))) if len(z0) else math.nan))
        for i in range(1, k + 1):
            rows.extend((alpha, stat, i, value) for stat, value in per_jump[i][alpha])
        halt, excluded, giant = summary[alpha]
        rows.append((alpha, "halt_rate", 0, halt))
        rows.append((alpha, "excluded_rate", 0, excluded))
        rows.append((alpha, "giant_fraction", 0, giant))
    return ConvergenceTable(rows)


def _pool(laws):
    pts = np.concatenate([p for p, _ in laws])
    w = np.concatenate([w for _, w in laws])
    groups = np.repeat(np.arange(len(laws)), [len(p) for p, _ in laws])
    return pts, w, groups


def _jump_statistics(live, trees, i, c, f_center, n_proj):
    """{alpha: [(statistic, value), ...]} for jump i."""
    out = {}
    t_lim = np.array([tr.T[i - 1] for tr in trees])
    for alpha, runs in live.items():
        if not runs:
            out[alpha] = [("ks", math.nan), ("ks_sample", math.nan)]
            continue
        rates = np.array([u.rates[i - 1] for u in runs])
        t_emp = np.array([u.T[i - 1] for u in runs])
        out[alpha] = [
            ("ks", smoothed_ks_exponential(rates, i * c)),
            ("ks_sample", float(stats.ks_2samp(t_emp, t_lim).statistic)),
        ]
    with_laws = [a for a, runs in live.items() if runs and runs[0].laws]
    if not (with_laws and trees[0].laws):
        for a in live:
            out[a] += [("energy", math.nan), ("test_function", math.nan)]
        return out
    # each run's law has total weight one, so runs count equally
    reference = _pool([tr.laws[i - 1] for tr in trees])
    energies = energy_distances([_pool([u.laws[i - 1] for u in live[a]]) for a in with_laws], reference, n_proj)
    f_lim = np.mean([np.dot(w, bump(p, f_center)) for p, w in (tr.laws[i - 1] for tr in trees)])
    rhs = f_lim * i * c / (i * c + 1.0)
    for a in live:
        if a not in with_laws:
            out[a] += [("energy", math.nan), ("test_function", math.nan)]
            continue
        rates = np.array([u.rates[i - 1] for u in live[a]])
        f_emp = np.array([np.dot(w, bump(p, f_center)) for p, w in (u.laws[i - 1] for u in live[a])])
        lhs = np.mean(f_emp * rates / (rates + 1.0))
        out[a] += [("energy", energies[with_laws.index(a)]), ("test_function", float(abs(lhs - rhs)))]
    return out
