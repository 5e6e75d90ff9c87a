"""Experiment configuration, orchestration and reproducibility manifests."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParameterError
from .fpp import (
    PassageSpec,
    assign_passage_times,
    ball_at_time,
    check_A1,
    check_A2,
    growth_trace,
    passage_from_origin,
    first_passage,
)
from .geograph import build_rgg, nearest_giant_vertex, unit_directions
from .io import CSV_SCHEMA_VERSION, digest, write_csv
from .point_process import Box, derive_seed, sample_ppp
from .scaling import (
    convergence_experiment,
    cube_tv_distance,
    empirical_spatial_kernel,
    limit_spatial_kernel,
    n_alpha,
    reg_check,
)
from .shape import (
    ModelConfig,
    bond_percolation,
    directional_constants,
    pc_lower_bound,
    percolation_snapshot,
    percolation_sweep,
    shape_error,
)
from .svg import graph_svg

KINDS = ("ppp", "rgg", "fpp", "shape", "perc", "scale")
TASKS = {
    "ppp": ("sample",),
    "rgg": ("build",),
    "fpp": ("run",),
    "shape": ("profile", "error"),
    "perc": ("sweep", "bond"),
    "scale": ("kernels", "converge", "reg"),
}
JSON_NAMES = {"lam": "lambda", "lam_I": "lambda_I", "L": "box"}
FIELD_NAMES = {v: k for k, v in JSON_NAMES.items()}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    task: str = ""
    # model
    lam: float = 1.0
    r: float = 2.0
    d: int = 2
    L: float = 80.0
    lam_I: float = 1.0
    passage: dict = field(default_factory=lambda: {"family": "exponential", "params": {"rate": 1.0}})
    margin: float = 0.1
    # run
    seed: int = 0
    threads: int = 1
    source: object = "origin"
    t: float | None = None
    directions: int | None = None
    s_list: tuple = (20.0, 60.0)
    n_seeds: int = 40
    quenched: bool = False
    t_list: tuple = (10.0, 40.0)
    phi: float | None = None
    probe_pitch: float | None = None
    p_grid: tuple = ()
    p: float = 0.0
    box_sizes: tuple = (50.0, 100.0, 200.0)
    alpha: float = 1000.0
    alphas: tuple = (100.0, 1000.0, 10000.0)
    delta: float = 0.25
    S: object = "origin"
    k: int = 5
    runs: int = 500
    mode: str = "direct"
    mc_samples: int = 4096
    ell: float = 2.0
    svg: bool = False
    out: str = "out"

    def __post_init__(self):
        for name in ("s_list", "t_list", "p_grid", "box_sizes", "alphas"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not self.task:
            object.__setattr__(self, "task", TASKS.get(self.kind, ("",))[0])
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown experiment kind {self.kind!r}")
        if self.task not in TASKS[self.kind]:
            raise ParameterError(f"kind {self.kind} has no task {self.task!r}")
        positive = {"lambda": self.lam, "r": self.r, "box": self.L, "lambda_I": self.lam_I,
                    "alpha": self.alpha, "delta": self.delta, "ell": self.ell}
        for name, value in positive.items():
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ParameterError(f"{name} must be positive and finite, got {value!r}")
        if int(self.d) != self.d or self.d < 2:
            raise ParameterError("d must be an integer >= 2")
        if not 0 <= self.margin < 1:
            raise ParameterError("margin must lie in [0, 1)")
        if self.threads < 1 or self.n_seeds < 1 or self.runs < 1 or self.k < 1:
            raise ParameterError("threads, n_seeds, runs and k must be positive")
        if not 0 <= self.p <= 1 or any(not 0 <= p <= 1 for p in self.p_grid):
            raise ParameterError("percolation parameters must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise ParameterError("alphas must be increasing")
        if any(b <= a for a, b in zip(self.s_list, self.s_list[1:])):
            raise ParameterError("s_list must be increasing")
        if self.mode not in ("direct", "kernel-chain"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
        self.passage_spec  # validates the passage law

    @property
    def passage_spec(self):
        return PassageSpec.from_dict(self.passage)

    @property
    def model(self):
        return ModelConfig(self.lam, self.r, self.d, self.L, self.passage_spec, self.margin)

    @property
    def n_directions(self):
        return self.directions or (16 if self.d == 2 else 26)

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            out[JSON_NAMES.get(f.name, f.name)] = list(value) if isinstance(value, tuple) else value
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = FIELD_NAMES.get(key, key)
            if name not in known:
                raise ParameterError(f"unknown config field {key!r}")
            kwargs[name] = value
        if "kind" not in kwargs:
            raise ParameterError("config needs a 'kind'")
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ParameterError(str(exc)) from exc

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ParameterError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text())

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def hash(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()


@dataclass
class RunManifest:
    config: dict
    config_hash: str
    root_seed: int
    derived_seeds: list
    version: str
    started: str
    wall_clock: float
    outputs: dict  # file name -> sha256
    warnings: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    csv_schema: int = CSV_SCHEMA_VERSION

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True, default=_json_default)

    def write(self, path):
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path):
        return cls(**json.loads(Path(path).read_text()))


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


class _Outputs:
    """Output paths of one run. ``out`` is a directory, or a file path for the main output."""

    def __init__(self, out, default_name):
        out = Path(out)
        if out.suffix:
            self.dir, self.main = out.parent, out
        else:
            self.dir, self.main = out, out / default_name
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, name=None):
        p = self.main if name is None else self.dir / name
        self.files.append(p)
        return p

    @property
    def manifest(self):
        return self.dir / f"{self.main.stem}.manifest.json"


DEFAULT_OUTPUT = {
    ("ppp", "sample"): "points.ndjson",
    ("rgg", "build"): "graph.ndjson",
    ("fpp", "run"): "passage.csv",
    ("shape", "profile"): "profile.csv",
    ("shape", "error"): "shape_error.csv",
    ("perc", "sweep"): "perc_sweep.csv",
    ("perc", "bond"): "perc_bond.csv",
    ("scale", "kernels"): "kernels.csv",
    ("scale", "converge"): "conv.csv",
    ("scale", "reg"): "reg.csv",
}


def run_experiment(cfg, out=None):
    """Dispatch ``cfg`` to its module, write outputs and a manifest; returns the manifest."""
    outputs = _Outputs(out or cfg.out, DEFAULT_OUTPUT[(cfg.kind, cfg.task)])
    started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    t0 = time.perf_counter()
    runner = _RUNNERS[(cfg.kind, cfg.task)]
    seeds, warnings_, summary = runner(cfg, outputs)
    manifest = RunManifest(
        config=cfg.to_dict(),
        config_hash=cfg.hash,
        root_seed=int(cfg.seed),
        derived_seeds=[int(s) for s in seeds],
        version=__version__,
        started=started,
        wall_clock=time.perf_counter() - t0,
        outputs={p.name: digest(p) for p in outputs.files},
        warnings=list(warnings_),
        summary=_plain(summary),
    )
    manifest.write(outputs.manifest)
    return manifest


def replay(manifest_path, out=None):
    """Re-run a manifest's configuration; returns (new manifest, digests identical?)."""
    old = RunManifest.load(manifest_path)
    cfg = ExperimentConfig.from_dict(old.config)
    new = run_experiment(cfg, out or Path(manifest_path).parent)
    return new, new.outputs == old.outputs


# --- runners: each returns (derived seeds, warnings, summary) ------------------


def _run_ppp(cfg, out):
    seed = derive_seed(cfg.seed, "ppp")
    ps = sample_ppp(cfg.lam, Box(cfg.d, cfg.L), seed)
    ps.to_ndjson(out.path())
    return [seed], [], {"count": len(ps)}


def _graph(cfg):
    seed = derive_seed(cfg.seed, "ppp")
    g = build_rgg(sample_ppp(cfg.lam, Box(cfg.d, cfg.L), seed), cfg.r)
    return seed, g


def _run_rgg(cfg, out):
    seed, g = _graph(cfg)
    g.to_ndjson(out.path())
    if cfg.svg and cfg.d == 2:
        graph_svg(g, out.path("graph.svg"))
    return [seed], [], {"vertices": g.n, "edges": len(g.edges), "giant_fraction": g.giant_fraction}


def _run_fpp(cfg, out):
    spec = cfg.passage_spec
    seed, g = _graph(cfg)
    w_seed = derive_seed(cfg.seed, "tau")
    w = assign_passage_times(g, spec, w_seed)
    if cfg.source == "origin":
        pf = passage_from_origin(g, w)
    else:
        pf = first_passage(g, w, int(cfg.source))
    pf.to_csv(out.path())
    growth_trace(pf).to_csv(out.path("trace.csv"))
    warnings_ = ModelConfig(cfg.lam, cfg.r, cfg.d, cfg.L, spec).hypothesis_warnings()
    summary = {
        "source": pf.source,
        "reached": int(pf.reached.sum()),
        "A1": check_A1(spec, cfg.lam, cfg.r, cfg.d),
        "A2": check_A2(spec, cfg.d),
    }
    if cfg.t is not None:
        summary["reached_volume"] = ball_at_time(pf, cfg.t, cfg.probe_pitch).volume
        if cfg.svg and cfg.d == 2:
            graph_svg(g, out.path("reached.svg"), reached=pf.T <= cfg.t)
    return [seed, w_seed], warnings_, summary


def _shape_seeds(cfg, n_dir):
    keys = ("ppp",) if cfg.quenched else None
    seeds = []
    for i in range(n_dir):
        for j in range(cfg.n_seeds):
            seeds.append(derive_seed(cfg.seed, *(keys or ("ppp", i, j))))
            seeds.append(derive_seed(cfg.seed, "tau", i, j))
    return seeds


def _profile(cfg):
    directions = unit_directions(cfg.d, cfg.n_directions)
    return directional_constants(
        cfg.model, directions, cfg.s_list, cfg.n_seeds, cfg.seed, cfg.quenched, threads=cfg.threads
    )


def _run_shape_profile(cfg, out):
    profile = _profile(cfg)
    profile.to_csv(out.path())
    summary = {"phi": profile.phi, "isotropy": profile.isotropy, "failures": profile.failures}
    if len(cfg.s_list) > 1:
        summary["spread_decrease"] = profile.bootstrap_spread_decrease(seed=derive_seed(cfg.seed, "bootstrap"))
    return _shape_seeds(cfg, cfg.n_directions), profile.warnings, summary


def _run_shape_error(cfg, out):
    model = cfg.model
    warnings_ = model.hypothesis_warnings()
    summary = {}
    phi = cfg.phi
    if phi is None:
        profile = _profile(cfg)
        phi = profile.phi
        summary["phi_from_profile"] = phi
    rows, seeds = [], []
    t_max = max(cfg.t_list)
    for j in range(cfg.n_seeds):
        ps_seed, tau_seed = derive_seed(cfg.seed, "ppp", j), derive_seed(cfg.seed, "tau", j)
        seeds += [ps_seed, tau_seed]
        g = build_rgg(sample_ppp(cfg.lam, model.box, ps_seed), cfg.r)
        w = assign_passage_times(g, model.passage, tau_seed)
        src = nearest_giant_vertex(g, np.zeros(cfg.d))
        pf = first_passage(g, w, src, t_max=t_max * (1 + 1e-12))
        for t in cfg.t_list:
            e = shape_error(pf, phi, t, cfg.probe_pitch, 1 - cfg.margin)
            rows.append([j, t, e.eps, e.eps_in, e.eps_out, e.radius, e.truncated])
        if cfg.svg and cfg.d == 2 and j == 0:
            e = shape_error(pf, phi, t_max, cfg.probe_pitch, 1 - cfg.margin)
            graph_svg(g, out.path("shape.svg"), reached=pf.T <= t_max,
                      circles=((1 - e.eps) * phi * t_max, (1 + e.eps) * phi * t_max))
    write_csv(out.path(), ["seed_index", "t", "eps", "eps_in", "eps_out", "radius", "truncated"], rows)
    summary["phi"] = phi
    return seeds, warnings_, summary


def _run_perc_sweep(cfg, out):
    grid = cfg.p_grid or tuple(np.round(np.arange(0, 0.2 + 1e-9, 0.01), 10))
    fractions = percolation_sweep(cfg.model, grid, cfg.n_seeds, cfg.seed, cfg.threads)
    rows = [[j, p, float(fractions[j, i])] for j in range(cfg.n_seeds) for i, p in enumerate(grid)]
    write_csv(out.path(), ["seed_index", "p", "largest_open_fraction"], rows)
    seeds = [s for j in range(cfg.n_seeds) for s in (derive_seed(cfg.seed, "ppp", j), derive_seed(cfg.seed, "tau", j))]
    return seeds, [], {"threshold": pc_lower_bound(cfg.lam, cfg.r, cfg.d)}


def _run_perc_bond(cfg, out):
    report = bond_percolation(cfg.model, cfg.p, cfg.box_sizes, cfg.n_seeds, cfg.seed, cfg.threads)
    rows = []
    for li, L in enumerate(report.box_sizes):
        for j in range(cfg.n_seeds):
            rows.append([L, j, float(report.fractions[li, j]), bool(report.open_is_giant[li, j])])
    write_csv(out.path(), ["L", "seed_index", "largest_open_fraction", "open_is_giant"], rows)
    if cfg.svg and cfg.d == 2:
        g, open_edges = percolation_snapshot(cfg.model, cfg.p, cfg.box_sizes[0], cfg.seed)
        graph_svg(g, out.path("perc.svg"), open_edges=open_edges)
    seeds = [derive_seed(cfg.seed, key, li, j) for li in range(len(cfg.box_sizes))
             for j in range(cfg.n_seeds) for key in ("ppp", "tau")]
    summary = {"threshold": report.threshold, "medians": report.medians.tolist()}
    return seeds, [], summary


def _source_set(cfg):
    if cfg.S == "origin":
        return np.zeros((1, cfg.d))
    S = np.atleast_2d(np.asarray(cfg.S, dtype=np.float64))
    if S.shape[1] != cfg.d:
        raise ParameterError("S points must have dimension d")
    return S


def _run_scale_kernels(cfg, out):
    S = _source_set(cfg)
    half = float(np.abs(S).max()) + cfg.r + cfg.delta
    seed = derive_seed(cfg.seed, "kernels")
    ps = sample_ppp(cfg.alpha * cfg.lam, Box(cfg.d, half), seed)
    for x in S:
        ps, _ = ps.with_point(x)
    emp = empirical_spatial_kernel(ps, S, cfg.r, cfg.delta, cfg.alpha, cfg.lam_I)
    lim = limit_spatial_kernel(S, cfg.r, cfg.delta, cfg.mc_samples, cfg.lam, cfg.lam_I, derive_seed(cfg.seed, "mc"))
    emp.to_csv(out.path())
    lim.to_csv(out.path(f"{out.main.stem}_limit.csv"))
    summary = {
        "n_alpha": n_alpha(ps, S, cfg.r),
        "empirical_rate": emp.rate,
        "limit_rate": lim.rate,
        "tv": cube_tv_distance(emp, lim),
    }
    return [seed], [], summary


def _run_scale_converge(cfg, out):
    table = convergence_experiment(
        cfg.alphas, cfg.lam, cfg.lam_I, cfg.r, cfg.k, cfg.runs, cfg.seed, cfg.d, cfg.mode, threads=cfg.threads
    )
    table.to_csv(out.path())
    seeds = [derive_seed(cfg.seed, "run", a, j) for a in cfg.alphas for j in range(cfg.runs)]
    seeds += [derive_seed(cfg.seed, "limit", j) for j in range(cfg.runs)]
    return seeds, [], {}


def _run_scale_reg(cfg, out):
    rows, seeds = [], []
    for a in cfg.alphas:
        for j in range(cfg.n_seeds):
            seed = derive_seed(cfg.seed, "reg", a, j)
            seeds.append(seed)
            ps = sample_ppp(a * cfg.lam, Box(cfg.d, cfg.ell + cfg.delta), seed)
            res = reg_check(ps, cfg.ell, cfg.delta)
            rows.append([a, j, res.holds, res.worst])
    write_csv(out.path(), ["alpha", "seed_index", "holds", "worst_deviation"], rows)
    return seeds, [], {}


def _plain(value):
    """JSON-safe copy; non-finite floats become strings."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    return value


_RUNNERS = {
    ("ppp", "sample"): _run_ppp,
    ("rgg", "build"): _run_rgg,
    ("fpp", "run"): _run_fpp,
    ("shape", "profile"): _run_shape_profile,
    ("shape", "error"): _run_shape_error,
    ("perc", "sweep"): _run_perc_sweep,
    ("perc", "bond"): _run_perc_bond,
    ("scale", "kernels"): _run_scale_kernels,
    ("scale", "converge"): _run_scale_converge,
    ("scale", "reg"): _run_scale_reg,
}
