"""I.i.d. first-passage percolation on a disk graph: passage times, growth sets, traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import IntegrityError, ParameterError
from .geograph import DEFAULT_MARGIN, nearest_giant_vertex, probe_grid
from .io import UNREACHED, write_csv
from .point_process import unit_ball_volume

FAMILIES = ("bernoulli", "exponential", "constant", "uniform")

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix64(z):
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def edge_uniforms(seed, u, v):
    """Counter-based U[0,1) per undirected edge, keyed on (seed, min id, max id).

    Independent of edge enumeration order, so a lazily explored graph sees
    the same weights as a fully built one.
    """
    u = np.asarray(u, dtype=np.uint64)
    v = np.asarray(v, dtype=np.uint64)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    with np.errstate(over="ignore"):
        key = (lo << np.uint64(32)) | hi
        s = _mix64(np.array([int(seed) & (2**64 - 1)], dtype=np.uint64) + _GOLDEN)
        h = _mix64(_mix64(key ^ s) + _GOLDEN)
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class PassageSpec:
    """Law of tau. Bernoulli(p) here means P(tau = 0) = p, tau = 1 otherwise (tau ~ Ber(1 - p))."""

    family: str
    params: dict = field(default_factory=dict)
    eta: float = math.inf  # declared moment order; all four families have every moment

    def __post_init__(self):
        fam = self.family.lower()
        object.__setattr__(self, "family", fam)
        p = self.params
        if fam not in FAMILIES:
            raise ParameterError(f"unknown passage family {self.family!r}")
        need = {"bernoulli": {"p"}, "exponential": {"rate"}, "constant": {"c"}, "uniform": {"a", "b"}}[fam]
        if set(p) != need:
            raise ParameterError(f"{fam} expects parameters {sorted(need)}, got {sorted(p)}")
        if fam == "bernoulli" and not 0 <= p["p"] <= 1:
            raise ParameterError("bernoulli p must lie in [0, 1]")
        if fam == "exponential" and not p["rate"] > 0:
            raise ParameterError("exponential rate must be positive")
        if fam == "constant" and not p["c"] >= 0:
            raise ParameterError("constant passage time must be non-negative")
        if fam == "uniform" and not 0 <= p["a"] <= p["b"]:
            raise ParameterError("uniform law needs 0 <= a <= b")

    @classmethod
    def exponential(cls, rate=1.0):
        return cls("exponential", {"rate": float(rate)})

    @classmethod
    def bernoulli(cls, p):
        return cls("bernoulli", {"p": float(p)})

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", {"c": float(c)})

    @classmethod
    def uniform(cls, a, b):
        return cls("uniform", {"a": float(a), "b": float(b)})

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        family = data.pop("family")
        params = {k: float(v) for k, v in data.pop("params", {}).items()}
        eta = float(data.pop("eta", math.inf))
        if data:
            raise ParameterError(f"unknown passage fields {sorted(data)}")
        return cls(family, params, eta)

    def to_dict(self):
        out = {"family": self.family, "params": dict(self.params)}
        if math.isfinite(self.eta):
            out["eta"] = self.eta
        return out

    def quantile(self, u):
        u = np.asarray(u, dtype=np.float64)
        p = self.params
        if self.family == "exponential":
            return -np.log1p(-u) / p["rate"]
        if self.family == "bernoulli":
            return np.where(u < p["p"], 0.0, 1.0)
        if self.family == "constant":
            return np.full_like(u, p["c"])
        return p["a"] + (p["b"] - p["a"]) * u

    @property
    def mean(self):
        p = self.params
        return {
            "exponential": lambda: 1.0 / p["rate"],
            "bernoulli": lambda: 1.0 - p["p"],
            "constant": lambda: p["c"],
            "uniform": lambda: 0.5 * (p["a"] + p["b"]),
        }[self.family]()

    @property
    def zero_atom(self):
        """P(tau = 0), from the law's closed form."""
        p = self.params
        if self.family == "bernoulli":
            return p["p"]
        if self.family == "constant":
            return 1.0 if p["c"] == 0 else 0.0
        if self.family == "uniform":
            return 1.0 if p["b"] == 0 else 0.0
        return 0.0

    @property
    def atomless(self):
        if self.family == "exponential":
            return True
        return self.family == "uniform" and self.params["b"] > self.params["a"]


def assign_passage_times(g, spec, seed):
    """One i.i.d. draw per canonical edge; weights[i] belongs to g.edges[i]."""
    if not isinstance(spec, PassageSpec):
        raise ParameterError("spec must be a PassageSpec")
    return spec.quantile(edge_uniforms(seed, g.edges[:, 0], g.edges[:, 1]))


@dataclass
class PassageField:
    graph: object
    weights: np.ndarray
    source: int
    T: np.ndarray  # +inf marks unreached (serialised as "unreached")
    complete: bool = True

    @property
    def reached(self):
        return np.isfinite(self.T)

    def to_csv(self, path=None):
        d = self.graph.ps.d
        header = ["vertex_id"] + [f"x{k}" for k in range(d)] + ["T"]
        rows = []
        for v, (x, t) in enumerate(zip(self.graph.points.tolist(), self.T.tolist())):
            rows.append([v, *x, t if math.isfinite(t) else UNREACHED])
        return write_csv(path, header, rows)


def first_passage(g, weights, source, targets=(), t_max=math.inf):
    """Exact single-source passage times (Dijkstra) over non-negative edge weights.

    With ``targets`` or a finite ``t_max`` the search stops early and the field
    is marked incomplete.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(g.edges),):
        raise ParameterError("need exactly one weight per edge")
    if len(weights) and (weights.min() < 0 or np.isnan(weights).any()):
        raise IntegrityError("negative or NaN passage time")
    source = g._check_vertex(source)
    targets = np.asarray(targets, dtype=np.int64).ravel()
    T = kernels.dijkstra(g.indptr, g.indices, weights[g.edge_of], source, targets, float(t_max))
    return PassageField(g, weights, source, T, complete=not len(targets) and math.isinf(t_max))


def passage_from_origin(g, weights, **kwargs):
    """First passage from q(o)."""
    return first_passage(g, weights, nearest_giant_vertex(g, np.zeros(g.ps.d)), **kwargs)


def passage_between(g, weights, x, y):
    """T(x, y) = passage time between q(x) and q(y)."""
    qx = nearest_giant_vertex(g, np.asarray(x, dtype=np.float64))
    qy = nearest_giant_vertex(g, np.asarray(y, dtype=np.float64))
    if qx == qy:
        return 0.0
    # search from the smaller id so the float sum is accumulated in one fixed order
    a, b = min(qx, qy), max(qx, qy)
    return float(first_passage(g, weights, a, targets=[b]).T[b])


def probe_times(field, probes):
    """T(q(x)) for each probe x."""
    return field.T[nearest_giant_vertex(field.graph, probes)]


@dataclass(frozen=True)
class ReachedSet:
    t: float
    vertices: np.ndarray
    volume: float
    probes: np.ndarray
    probe_reached: np.ndarray
    cell_volume: float


def ball_at_time(field, t, pitch=None, inner_fraction=1 - DEFAULT_MARGIN):
    """Vertices with T <= t and the probe-grid volume of H_t within the inner box."""
    if t < 0:
        raise ParameterError("time must be non-negative")
    g = field.graph
    vertices = np.flatnonzero(field.T <= t)
    probes, cell_vol = probe_grid(g.ps.box.shrink(inner_fraction), pitch or g.r / 4)
    hit = probe_times(field, probes) <= t
    return ReachedSet(t, vertices, float(hit.sum() * cell_vol), probes, hit, cell_vol)


@dataclass(frozen=True)
class GrowthTrace:
    """Jump times s_0 = 0 < s_1 < ... and jump locations z_k of a D_0 trajectory."""

    s: np.ndarray
    z: np.ndarray
    vertices: np.ndarray = None
    ties: int = 0

    def __len__(self):
        return len(self.s)

    def phi(self, k):
        return self.z[k]

    def psi(self, k):
        if k < 1:
            raise ParameterError("psi is defined for k >= 1")
        return self.s[k] - self.s[k - 1]

    @property
    def strict(self):
        return self.ties == 0

    def to_csv(self, path=None):
        d = self.z.shape[1]
        header = ["k", "s_k", "psi_k"] + [f"z{j}" for j in range(d)]
        rows = []
        for k in range(len(self)):
            psi = float(self.s[k] - self.s[k - 1]) if k else None
            rows.append([k, float(self.s[k]), psi, *self.z[k].tolist()])
        return write_csv(path, header, rows)


def growth_trace(field):
    """Reached vertices ordered by (T, vertex id); equal times are counted as ties."""
    reached = np.flatnonzero(field.reached)
    order = reached[np.lexsort((reached, field.T[reached]))]
    s = field.T[order]
    ties = int(np.sum(s[1:] == s[:-1]))
    return GrowthTrace(s=s, z=field.graph.points[order], vertices=order, ties=ties)


def check_A1(spec, lam, r, d):
    """Zero-atom condition P(tau = 0) < 1 / (v_d r^d lam)."""
    threshold = 1.0 / (unit_ball_volume(d) * r**d * lam)
    atom = spec.zero_atom
    return {"satisfied": atom < threshold, "atom": atom, "threshold": threshold}


def check_A2(spec, d):
    """Moment condition E[tau^eta] < inf for some eta > 2d + 2."""
    required = 2 * d + 2
    return {"satisfied": spec.eta > required, "required": required, "eta": spec.eta}
