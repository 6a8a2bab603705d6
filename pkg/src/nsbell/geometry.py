"""Local state-space geometry: balls, truncated balls and inner cubes.

All coordinates here are canonical moments m = 2p - 1 unless a name says
otherwise. Region scans return a :class:`FeasibilityRegion` that serializes
to a small CSV format (see :meth:`FeasibilityRegion.to_csv`).
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_TOL, MomentVector
from .measurements import MeasurementFamily, operator_set, outcome_values, p4_quadratic


@dataclass(frozen=True)
class BallSpec:
    radius: float
    clipped: bool = True

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    @classmethod
    def for_family(cls, family: MeasurementFamily) -> BallSpec:
        if family.ball_radius is None:
            raise ValueError(f"{family} has no ball-shaped state space")
        return cls(family.ball_radius, True)


@dataclass(frozen=True)
class CuboidSpec:
    """Inner cube with vertices (+-l, +-l, +-h)."""

    l: float
    h: float

    def __post_init__(self):
        if not (0 <= self.l <= 1 and 0 <= self.h <= 1):
            raise ValueError(f"cube half-widths ({self.l}, {self.h}) outside [0, 1]")

    def vertices(self) -> np.ndarray:
        return np.array([(sx * self.l, sy * self.l, sz * self.h) for sx, sy, sz in itertools.product((1, -1), repeat=3)])


def in_ball(m: np.ndarray, radius: float, clipped: bool = True, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorized ball membership over the last axis of ``m``."""
    m = np.asarray(m, dtype=float)
    ok = np.einsum("...i,...i->...", m, m) <= radius**2 + tol
    if clipped:
        ok &= np.all(np.abs(m) <= 1 + tol, axis=-1)
    return ok


def ball_contains(spec: BallSpec, m: MomentVector, tol: float = DEFAULT_TOL) -> bool:
    return bool(in_ball(m.as_array(), spec.radius, spec.clipped, tol))


def sample_ball(radius: float, n: int, rng: np.random.Generator, clipped: bool = True) -> np.ndarray:
    """``n`` points uniform in the ball of ``radius`` (intersected with [-1, 1]^3)."""
    out = []
    have = 0
    while have < n:
        k = max(2 * (n - have), 64)
        d = rng.standard_normal((k, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        pts = d * (radius * rng.random(k) ** (1 / 3))[:, None]
        if clipped:
            pts = pts[np.all(np.abs(pts) <= 1, axis=1)]
        out.append(pts)
        have += len(pts)
    return np.concatenate(out)[:n]


@dataclass(frozen=True)
class EquivalenceReport:
    grid_n: int
    points: int
    disagreements: int
    max_abs_p4_at_disagreement: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_abs_p4_at_disagreement <= self.tol


def ball_equivalence_check(grid_n: int, tol: float = DEFAULT_TOL) -> EquivalenceReport:
    """Compare sign(p4 of the self-product) with unit-ball membership on a lattice."""
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    g = np.linspace(0.0, 1.0, grid_n)
    px, py, pz = np.meshgrid(g, g, g, indexing="ij")
    p4 = p4_quadratic(px, py, pz)
    m = np.stack([2 * px - 1, 2 * py - 1, 2 * pz - 1], axis=-1)
    inside = in_ball(m, 1.0, True, tol)
    bad = (p4 >= 0) != inside
    worst = float(np.abs(p4[bad]).max()) if bad.any() else 0.0
    return EquivalenceReport(grid_n, p4.size, int(bad.sum()), worst, tol)


def tightness_check(family: MeasurementFamily, trials: int, seed: int = 0) -> float:
    """Minimum outcome value over ``trials`` product pairs drawn from the family's ball."""
    if family.kind == "nonmax" and family.param != 0.0:
        raise ValueError("tightness_check needs the ideal or noisy family")
    radius = family.ball_radius if family.ball_radius is not None else 1.0
    rng = np.random.default_rng(seed)
    m_a = sample_ball(radius, trials, rng)
    m_b = sample_ball(radius, trials, rng)
    return float(outcome_values(operator_set(family), m_a, m_b).min())


@dataclass(frozen=True, eq=False)
class FeasibilityRegion:
    axes: tuple[str, ...]
    coords: tuple[np.ndarray, ...]
    feasible: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.axes) != len(self.coords):
            raise ValueError("one coordinate array per axis")
        shape = tuple(len(c) for c in self.coords)
        if self.feasible.shape != shape:
            raise ValueError(f"feasible has shape {self.feasible.shape}, expected {shape}")
        for c in self.coords:
            if len(c) > 1 and not np.all(np.diff(c) > 0):
                raise ValueError("grid coordinates must be strictly increasing")

    def points(self):
        """Yield ``(coords, feasible)`` in lexicographic grid-index order."""
        for idx in itertools.product(*(range(len(c)) for c in self.coords)):
            yield tuple(float(c[i]) for c, i in zip(self.coords, idx)), bool(self.feasible[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        params = ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        buf.write(f"# axes: {','.join(self.axes)}; params: {params}\n")
        for xs, ok in self.points():
            buf.write(",".join(_fmt(x) for x in xs) + f",{int(ok)}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def read_region_csv(text: str) -> FeasibilityRegion:
    """Inverse of :meth:`FeasibilityRegion.to_csv` (for full-grid regions)."""
    lines = text.strip().splitlines()
    head = lines[0]
    if not head.startswith("# axes:"):
        raise ValueError("missing '# axes:' header")
    axes_part, _, params_part = head[len("# axes:"):].partition("; params:")
    axes = tuple(a.strip() for a in axes_part.split(","))
    params = {}
    for item in filter(None, (s.strip() for s in params_part.split(","))):
        k, _, v = item.partition("=")
        params[k] = v
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    coords = tuple(np.unique(rows[:, i]) for i in range(len(axes)))
    shape = tuple(len(c) for c in coords)
    if rows.shape[0] != math.prod(shape):
        raise ValueError("CSV does not cover a full grid")
    feasible = rows[:, -1].astype(bool).reshape(shape)
    return FeasibilityRegion(axes, coords, feasible, params)


def scan_local_region(
    lam: float,
    grid_n: int,
    tol: float = DEFAULT_TOL,
    slice_z: float | None = None,
) -> FeasibilityRegion:
    """Feasible local states (p_X, p_Y, p_Z) for the noisy Bell measurement.

    With ``slice_z`` only the plane p_Z = slice_z is scanned.
    """
    family = MeasurementFamily.noisy(lam)
    radius = family.ball_radius
    g = np.linspace(0.0, 1.0, grid_n)
    params = {"lambda": float(lam), "radius": radius, "grid": grid_n}
    if slice_z is None:
        px, py, pz = np.meshgrid(g, g, g, indexing="ij")
        m = np.stack([2 * px - 1, 2 * py - 1, 2 * pz - 1], axis=-1)
        return FeasibilityRegion(("p_x", "p_y", "p_z"), (g, g, g), in_ball(m, radius, True, tol), params)
    if not (0.0 <= slice_z <= 1.0):
        raise ValueError("slice_z must lie in [0, 1]")
    px, py = np.meshgrid(g, g, indexing="ij")
    m = np.stack([2 * px - 1, 2 * py - 1, np.full_like(px, 2 * slice_z - 1)], axis=-1)
    params["p_z"] = float(slice_z)
    return FeasibilityRegion(("p_x", "p_y"), (g, g), in_ball(m, radius, True, tol), params)


def _cube_vertices(l, h) -> np.ndarray:
    """Vertices for arrays of (l, h); output (..., 8, 3)."""
    l = np.asarray(l, dtype=float)[..., None]
    h = np.asarray(h, dtype=float)[..., None]
    s = np.array(list(itertools.product((1.0, -1.0), repeat=3)))
    return np.stack([s[:, 0] * l, s[:, 1] * l, s[:, 2] * h], axis=-1)


def _cuboid_min_values(family: MeasurementFamily, l, h) -> np.ndarray:
    if family.kind == "noisy":
        raise ValueError("cube criterion applies to the ideal or nonmax family")
    v = _cube_vertices(l, h)
    ext = np.concatenate([v, np.ones(v.shape[:-1] + (1,))], axis=-1)
    # all ordered vertex pairs, all outcomes
    vals = np.einsum("...ai,kij,...bj->...kab", ext, operator_set(family).matrices, ext)
    return vals.reshape(vals.shape[:-3] + (-1,)).min(axis=-1)


def cuboid_feasible(family: MeasurementFamily, spec: CuboidSpec, tol: float = DEFAULT_TOL) -> bool:
    """Whether every product of cube vertices gives nonnegative outcome values.

    Outcome values are bilinear, so the vertices of the cube suffice.
    """
    return bool(_cuboid_min_values(family, spec.l, spec.h) >= -tol)


def scan_lh_region(alpha: float, grid_n: int, tol: float = DEFAULT_TOL) -> FeasibilityRegion:
    family = MeasurementFamily.nonmax(alpha)
    g = np.linspace(0.0, 1.0, grid_n)
    hh, ll = np.meshgrid(g, g, indexing="ij")
    ok = _cuboid_min_values(family, ll, hh) >= -tol
    return FeasibilityRegion(("h", "l"), (g, g), ok, {"alpha": float(alpha), "grid": grid_n})
