"""Homogeneous Poisson point processes restricted to axis-aligned boxes."""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class Box:
    """Axis-aligned cube ``center + [-L, L]^d``."""

    d: int
    L: float
    center: tuple = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ParameterError(f"dimension must be an integer >= 2, got {self.d}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ParameterError(f"half-width must be positive and finite, got {self.L}")
        center = (0.0,) * self.d if self.center is None else tuple(float(c) for c in self.center)
        if len(center) != self.d:
            raise ParameterError("center dimension does not match d")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "center", center)

    @property
    def volume(self):
        return (2.0 * self.L) ** self.d

    @property
    def lower(self):
        return np.asarray(self.center) - self.L

    @property
    def upper(self):
        return np.asarray(self.center) + self.L

    def contains(self, x):
        x = np.atleast_2d(x)
        return np.all((x >= self.lower) & (x <= self.upper), axis=1)

    def shrink(self, fraction):
        """Concentric box with half-width scaled by ``fraction``."""
        return Box(self.d, self.L * fraction, self.center)

    def scaled(self, factor):
        return Box(self.d, self.L * factor, tuple(c * factor for c in self.center))


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray
    box: Box
    intensity: float
    seed: int = field(default=0)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, self.box.d)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def d(self):
        return self.box.d

    def with_point(self, x):
        """Copy with ``x`` appended (Palm-style insertion); returns (PointSet, index)."""
        x = np.asarray(x, dtype=np.float64).reshape(1, self.d)
        pts = np.vstack([self.points, x])
        return PointSet(pts, self.box, self.intensity, self.seed), len(pts) - 1

    def validate(self):
        """Check the box and distinctness invariants; raise ParameterError if broken."""
        if len(self) and not np.all(self.box.contains(self.points)):
            raise ParameterError("point outside box")
        if len(np.unique(self.points, axis=0)) != len(self):
            raise ParameterError("duplicate points")
        return self

    def header(self):
        return {
            "d": self.d,
            "L": self.box.L,
            "center": list(self.box.center),
            "lambda": self.intensity,
            "seed": int(self.seed),
            "count": len(self),
        }

    def to_ndjson(self, path=None):
        lines = [json.dumps(self.header())]
        lines.extend(json.dumps({"x": p}) for p in self.points.tolist())
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def read_ndjson(cls, path):
        return cls.from_ndjson(Path(path).read_text())

    @classmethod
    def from_ndjson(cls, text):
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        head, body = rows[0], rows[1:]
        if head["count"] != len(body):
            raise ParameterError("NDJSON count does not match number of point records")
        box = Box(head["d"], head["L"], tuple(head["center"]))
        pts = np.array([row["x"] for row in body], dtype=np.float64).reshape(-1, head["d"])
        return cls(pts, box, float(head["lambda"]), int(head["seed"]))


def derive_seed(root, *keys):
    """Counter-based child seed: depends only on (root, keys), not on call order."""
    words = []
    for key in keys:
        if isinstance(key, str):
            words.append(int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little"))
        elif isinstance(key, float):
            words.append(int.from_bytes(struct.pack("<d", key), "little"))
        else:
            words.append(int(key))
    ss = np.random.SeedSequence(int(root) & (2**64 - 1), spawn_key=tuple(words))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _duplicate_rows(pts):
    """Indices of rows repeating an earlier row."""
    if len(pts) < 2:
        return np.empty(0, dtype=np.int64)
    order = np.argsort(pts[:, 0], kind="stable")
    tie = np.flatnonzero(pts[order[1:], 0] == pts[order[:-1], 0])
    if not len(tie):
        return np.empty(0, dtype=np.int64)
    suspects = np.unique(np.concatenate([order[tie], order[tie + 1]]))
    _, first = np.unique(pts[suspects], axis=0, return_index=True)
    return np.setdiff1d(suspects, suspects[first])


def _uniform_in_box(rng, n, box):
    return box.lower + rng.random((n, box.d)) * (2.0 * box.L)


def sample_ppp(lam, box, seed):
    """Poisson(lam * vol) many i.i.d. uniform points in ``box``; pure in (lam, box, seed)."""
    if not (lam > 0 and math.isfinite(lam)):
        raise ParameterError(f"intensity must be positive, got {lam}")
    if not isinstance(box, Box):
        raise ParameterError("box must be a Box")
    rng = np.random.default_rng(int(seed) & (2**64 - 1))
    n = int(rng.poisson(lam * box.volume))
    pts = _uniform_in_box(rng, n, box)
    # duplicates have probability zero; resample any that occur
    while len(dup := _duplicate_rows(pts)):
        pts[dup] = _uniform_in_box(rng, len(dup), box)
    return PointSet(pts, box, float(lam), int(seed))


def rescale(ps, factor):
    """Multiply coordinates by ``factor``; intensity becomes lam / factor^d."""
    if not (factor > 0 and math.isfinite(factor)):
        raise ParameterError(f"rescale factor must be positive, got {factor}")
    if factor == 1:
        return ps
    return PointSet(
        ps.points * factor,
        ps.box.scaled(factor),
        ps.intensity / factor**ps.d,
        ps.seed,
    )


def unit_ball_volume(d):
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)
