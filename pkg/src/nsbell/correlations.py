"""CHSH values, the three nested membership levels, LP optimization and sampling.

Level 1 is the no-signaling polytope. Level 2 adds positivity of the joint
measurement's outcome probabilities. Level 3 additionally requires every
marginal and steered local state to lie in the family's (clipped) ball.
Levels 1 and 2 are polytopes in the 15 compact coordinates; Level 3 is a
convex set cut out by second-order cone constraints.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import simplex
from .core import (
    DEFAULT_TOL,
    SETTINGS,
    BellProbabilities,
    CompactState,
    JointBox,
    Violation,
    compact_affine_map,
    correlator,
    expand,
    setting_index,
    uniform_box,
    validate_joint_box,
    compact_from_box,
)
from .measurements import MeasurementFamily, family_probs

TSIRELSON = 2 * math.sqrt(2)
STEERING_EPS = 1e-12


@dataclass(frozen=True)
class ChshSpec:
    a1: int
    a2: int
    b1: int
    b2: int

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2"):
            object.__setattr__(self, name, setting_index(getattr(self, name)))
        if self.a1 == self.a2 or self.b1 == self.b2:
            raise ValueError("CHSH needs two distinct settings per party")

    def __str__(self):
        a1, a2, b1, b2 = (SETTINGS[i] for i in (self.a1, self.a2, self.b1, self.b2))
        return f"({a1},{a2};{b1},{b2})"

    def coefficients(self) -> np.ndarray:
        """3x3 weights w with CHSH = sum_ij w[i, j] E(ij)."""
        w = np.zeros((3, 3))
        w[self.a1, self.b1] += 1
        w[self.a1, self.b2] += 1
        w[self.a2, self.b1] += 1
        w[self.a2, self.b2] -= 1
        return w


def all_chsh_specs() -> list[ChshSpec]:
    pairs = [(i, j) for i, j in itertools.permutations(range(3), 2)]
    return [ChshSpec(a1, a2, b1, b2) for (a1, a2), (b1, b2) in itertools.product(pairs, pairs)]


def chsh_value(box: JointBox, spec: ChshSpec) -> float:
    return (
        correlator(box, spec.a1, spec.b1)
        + correlator(box, spec.a1, spec.b2)
        + correlator(box, spec.a2, spec.b1)
        - correlator(box, spec.a2, spec.b2)
    )


def max_chsh_over_specs(correlations: np.ndarray) -> np.ndarray:
    """Max CHSH over all 36 specs for stacked 3x3 correlator matrices (..., 3, 3)."""
    w = np.stack([s.coefficients() for s in all_chsh_specs()])
    return np.einsum("sij,...ij->...s", w, correlations).max(axis=-1)


@dataclass(frozen=True)
class MembershipReport:
    level: int
    family: MeasurementFamily
    violations: list[Violation]
    outcome_probs: BellProbabilities | None = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "family": str(self.family),
            "passed": self.passed,
            "outcome_probs": None if self.outcome_probs is None else list(self.outcome_probs),
            "violations": [v.as_dict() for v in self.violations],
        }


def steering_violations(
    m: np.ndarray,
    radius: float,
    tol: float = DEFAULT_TOL,
    eps: float = STEERING_EPS,
) -> list[Violation]:
    """Ball constraints on marginal and steered local states of a moment matrix.

    Conditioned on B measuring y with outcome s, Alice's moments are
    ``(a + s T[:, y]) / (1 + s b_y)``; the ball condition is imposed in the
    equivalent homogeneous form so small conditioning probabilities stay
    well scaled.
    """
    out = []
    corr, a, b = m[:3, :3], m[:3, 3], m[3, :3]
    for name, vec in (("A", a), ("B", b)):
        excess = float(vec @ vec - radius**2)
        if excess > tol:
            out.append(Violation("ball", f"marginal {name}", excess))
        clip = float(np.abs(vec).max() - 1)
        if clip > tol:
            out.append(Violation("cube", f"marginal {name}", clip))

    # columns of corr steer A, rows steer B
    for steered, local, other, mat in (("A", a, b, corr), ("B", b, a, corr.T)):
        for y in range(3):
            for s, sym in ((1.0, "+"), (-1.0, "-")):
                weight = 1 + s * other[y]  # twice the conditioning probability
                if weight / 2 <= eps:
                    continue
                v = local + s * mat[:, y]
                excess = float((v @ v - (radius * weight) ** 2) / weight**2)
                party = "B" if steered == "A" else "A"
                where = f"{steered} steered by {SETTINGS[y]}_{party}={sym}"
                if excess > tol:
                    out.append(Violation("ball", where, excess))
                clip = float((np.abs(v).max() - weight) / weight)
                if clip > tol:
                    out.append(Violation("cube", where, clip))
    return out


def steering_ok(m: np.ndarray, radius: float, tol: float = 0.0, eps: float = STEERING_EPS) -> bool:
    """Boolean form of :func:`steering_violations` for hot loops.

    Works on plain floats; numpy call overhead dominates on 3-vectors.
    """
    rows = m.tolist()
    corr = [r[:3] for r in rows[:3]]
    a = [r[3] for r in rows[:3]]
    b = rows[3][:3]
    r2 = radius * radius + tol
    if a[0] ** 2 + a[1] ** 2 + a[2] ** 2 > r2 or b[0] ** 2 + b[1] ** 2 + b[2] ** 2 > r2:
        return False
    lim = 1 + tol
    for y in range(3):
        col = (corr[0][y], corr[1][y], corr[2][y])
        row = corr[y]
        for s in (1.0, -1.0):
            # A steered by B's setting y
            w = 1 + s * b[y]
            if w > 2 * eps:
                v0, v1, v2 = a[0] + s * col[0], a[1] + s * col[1], a[2] + s * col[2]
                if v0 * v0 + v1 * v1 + v2 * v2 > r2 * w * w:
                    return False
                if max(abs(v0), abs(v1), abs(v2)) > lim * w:
                    return False
            # B steered by A's setting y
            w = 1 + s * a[y]
            if w > 2 * eps:
                v0, v1, v2 = b[0] + s * row[0], b[1] + s * row[1], b[2] + s * row[2]
                if v0 * v0 + v1 * v1 + v2 * v2 > r2 * w * w:
                    return False
                if max(abs(v0), abs(v1), abs(v2)) > lim * w:
                    return False
    return True


def membership(
    box: JointBox,
    level: int,
    family: MeasurementFamily | None = None,
    tol: float = DEFAULT_TOL,
) -> MembershipReport:
    family = MeasurementFamily.ideal() if family is None else family
    if level not in (1, 2, 3):
        raise ValueError(f"membership level must be 1, 2 or 3, got {level}")
    violations = list(validate_joint_box(box, tol))
    probs = None
    if level >= 2:
        probs = family_probs(box, family)
        for k, p in enumerate(probs, start=1):
            if p < -tol:
                violations.append(Violation("outcome", f"p_{k}", -p))
    if level >= 3:
        if family.ball_radius is None:
            raise ValueError(f"level 3 is defined only for ball-shaped families, not {family}")
        violations.extend(steering_violations(box.moment_matrix(), family.ball_radius, tol))
    return MembershipReport(level, family, violations, probs)


# Linear programs over the compact coordinates


@dataclass(frozen=True, eq=False)
class LpProblem:
    """``max c.x + const`` over ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""

    c: np.ndarray
    const: float
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None


@dataclass(frozen=True)
class LpResult:
    value: float
    witness: CompactState

    def box(self) -> JointBox:
        return expand(self.witness)


def level_constraints(level: int, family: MeasurementFamily | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(A, b)`` with ``A x <= b`` describing the Level-1 or Level-2 polytope.

    Rows are the 36 table-positivity constraints, 15 upper bounds and, for
    Level 2, four outcome-positivity constraints.
    """
    family = MeasurementFamily.ideal() if family is None else family
    if level not in (1, 2):
        raise ValueError("only levels 1 and 2 are polytopes")
    Q, q = compact_affine_map(lambda b: b.table.ravel())
    rows = [-Q, np.eye(15)]
    rhs = [q, np.ones(15)]
    if level == 2:
        P, p = compact_affine_map(lambda b: np.array(family_probs(b, family)))
        rows.append(-P)
        rhs.append(p)
    return np.vstack(rows), np.concatenate(rhs)


def lp_problem(
    objective: Callable[[JointBox], float],
    level: int,
    family: MeasurementFamily | None = None,
    fix_marginals: float | None = None,
) -> LpProblem:
    c, const = compact_affine_map(objective)
    A, b = level_constraints(level, family)
    A_eq = b_eq = None
    if fix_marginals is not None:
        A_eq = np.zeros((6, 15))
        A_eq[np.arange(6), 9 + np.arange(6)] = 1.0
        b_eq = np.full(6, float(fix_marginals))
    return LpProblem(c.ravel(), float(const[0]), A, b, A_eq, b_eq)


def lp_maximize(
    objective: Callable[[JointBox], float],
    level: int,
    family: MeasurementFamily | None = None,
    fix_marginals: float | None = None,
) -> LpResult:
    """Maximize an affine function of the box over the Level-1/2 polytope."""
    prob = lp_problem(objective, level, family, fix_marginals)
    try:
        sol = simplex.maximize(prob.c, prob.A_ub, prob.b_ub, prob.A_eq, prob.b_eq)
    except simplex.LPError as exc:
        raise RuntimeError(f"internal error: level-{level} LP failed: {exc}") from exc
    return LpResult(sol.value + prob.const, CompactState.from_vector(sol.x))


def lp_max_chsh(spec: ChshSpec, level: int, family: MeasurementFamily | None = None) -> LpResult:
    return lp_maximize(lambda b: chsh_value(b, spec), level, family)


# Level-3 sampling


@dataclass
class SamplerStats:
    steps: int = 0
    proposals: int = 0
    first_try_accepts: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.first_try_accepts / self.steps if self.steps else 1.0


@dataclass
class Level3Sample:
    boxes: list[JointBox]
    compact: np.ndarray
    stats: list[SamplerStats] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def correlation_matrices(self) -> np.ndarray:
        return np.stack([b.moment_matrix()[:3, :3] for b in self.boxes])


class Level3Walker:
    """Hit-and-run walk on the Level-3 set of a ball-shaped family.

    Each step draws a random direction, intersects the line with the
    Level-2 polytope in closed form, and samples the chord uniformly,
    shrinking the chord toward the current point whenever a proposal fails
    the steering constraints. The stationary law is uniform on Level 3.
    """

    def __init__(self, family: MeasurementFamily | None = None, seed: int = 0, tol: float = DEFAULT_TOL):
        self.family = MeasurementFamily.ideal() if family is None else family
        if self.family.ball_radius is None:
            raise ValueError("the sampler needs a ball-shaped family")
        self.radius = self.family.ball_radius
        self.tol = tol
        self.rng = np.random.default_rng(seed)
        self.A, self.b = level_constraints(2, self.family)
        self.R, self.r = compact_affine_map(lambda bx: bx.moment_matrix().ravel())
        self.x = compact_from_box(uniform_box()).as_vector()
        self.stats = SamplerStats()

    def _inside(self, x: np.ndarray) -> bool:
        return steering_ok((self.R @ x + self.r).reshape(4, 4), self.radius)

    def step(self) -> np.ndarray:
        d = self.rng.standard_normal(15)
        d /= np.linalg.norm(d)
        ad = self.A @ d
        slack = self.b - self.A @ self.x
        pos, neg = ad > 1e-14, ad < -1e-14
        hi = np.min(slack[pos] / ad[pos]) if pos.any() else 0.0
        lo = np.max(slack[neg] / ad[neg]) if neg.any() else 0.0
        hi, lo = max(hi, 0.0), min(lo, 0.0)
        self.stats.steps += 1
        first = True
        while True:
            t = lo + (hi - lo) * self.rng.random()
            self.stats.proposals += 1
            cand = self.x + t * d
            if self._inside(cand):
                if first:
                    self.stats.first_try_accepts += 1
                self.x = cand
                return cand
            first = False
            if t > 0:
                hi = t
            else:
                lo = t
            if hi - lo < 1e-15:
                return self.x

    def run(self, n: int, warmup: int = 1000, thin: int = 10) -> np.ndarray:
        for _ in range(warmup):
            self.step()
        out = np.empty((n, 15))
        for i in range(n):
            for _ in range(thin):
                self.step()
            out[i] = self.x
        return out


def iter_level3(
    family: MeasurementFamily | None = None,
    seed: int = 0,
    warmup: int = 1000,
    thin: int = 10,
) -> Iterator[JointBox]:
    """Endless stream of Level-3 boxes from a single walker."""
    walker = Level3Walker(family, seed)
    walker.run(0, warmup, thin)
    while True:
        yield expand(CompactState.from_vector(walker.run(1, 0, thin)[0]))


def sample_level3(
    family: MeasurementFamily | None = None,
    trials: int = 10_000,
    seed: int = 0,
    warmup: int = 1000,
    thin: int = 10,
    walkers: int = 1,
) -> Level3Sample:
    """Draw ``trials`` Level-3 boxes from ``walkers`` independent chains.

    Walker ``w`` uses seed ``seed + w``; output is ordered by (walker, step),
    so results depend only on the arguments.
    """
    if walkers < 1:
        raise ValueError("need at least one walker")
    counts = [trials // walkers + (w < trials % walkers) for w in range(walkers)]
    chunks, stats, warnings = [], [], []
    for w, n in enumerate(counts):
        walker = Level3Walker(family, seed + w)
        chunks.append(walker.run(n, warmup, thin))
        stats.append(walker.stats)
        if walker.stats.acceptance_rate < 1e-3:
            warnings.append(f"walker {w}: acceptance rate {walker.stats.acceptance_rate:.2e} below 1e-3")
    compact = np.concatenate(chunks) if chunks else np.empty((0, 15))
    boxes = [expand(CompactState.from_vector(v)) for v in compact]
    return Level3Sample(boxes, compact, stats, warnings)
