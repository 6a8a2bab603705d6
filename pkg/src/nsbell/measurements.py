"""Joint measurements added on top of the no-signaling box.

Outcomes are ordered phi+, phi-, psi+, psi- (k = 1..4). Every outcome
probability is a bilinear form ``m_A^T T_k m_B`` in extended moment vectors
``(m_x, m_y, m_z, 1)``; for a general box the same operators act on the
moment matrix, which is how a local-tomographic measurement is defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_TOL,
    BellProbabilities,
    JointBox,
    LocalState,
    MomentVector,
)

# sign patterns on the (xx, yy, zz) diagonal for the ideal Bell operators
IDEAL_SIGNS = np.array(
    [
        [1.0, -1.0, 1.0],
        [-1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0],
        [-1.0, -1.0, -1.0],
    ]
)

NORMALIZATION = np.diag([0.0, 0.0, 0.0, 1.0])


@dataclass(frozen=True)
class MeasurementFamily:
    """Ideal, noisy (``lam``) or non-maximally entangled (``alpha``) Bell measurement."""

    kind: str = "ideal"
    param: float = 0.0

    def __post_init__(self):
        if self.kind == "ideal":
            if self.param != 0.0:
                raise ValueError("ideal family takes no parameter")
        elif self.kind == "noisy":
            if not (0.0 <= self.param < 1.0):
                raise ValueError(f"noise lambda={self.param} outside [0, 1)")
        elif self.kind == "nonmax":
            if not (0.0 <= self.param <= math.pi / 4 + 1e-15):
                raise ValueError(f"alpha={self.param} outside [0, pi/4]")
        else:
            raise ValueError(f"unknown measurement family {self.kind!r}")

    @classmethod
    def ideal(cls) -> MeasurementFamily:
        return cls("ideal", 0.0)

    @classmethod
    def noisy(cls, lam: float) -> MeasurementFamily:
        return cls("noisy", float(lam))

    @classmethod
    def nonmax(cls, alpha: float) -> MeasurementFamily:
        return cls("nonmax", float(alpha))

    @property
    def ball_radius(self) -> float | None:
        """Radius of the local state space in canonical moments; None for nonmax."""
        if self.kind == "ideal":
            return 1.0
        if self.kind == "noisy":
            return 1.0 / math.sqrt(1.0 - self.param)
        return None

    def __str__(self):
        if self.kind == "ideal":
            return "ideal"
        name = "lambda" if self.kind == "noisy" else "alpha"
        return f"{self.kind}({name}={self.param:g})"


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Four real 4x4 matrices, ``matrices[k - 1]`` is T_k."""

    matrices: np.ndarray

    def __post_init__(self):
        t = np.array(self.matrices, dtype=float)
        if t.shape != (4, 4, 4):
            raise ValueError(f"expected shape (4, 4, 4), got {t.shape}")
        t.flags.writeable = False
        object.__setattr__(self, "matrices", t)

    def __getitem__(self, k: int) -> np.ndarray:
        if k not in (1, 2, 3, 4):
            raise IndexError(f"outcome index {k} not in 1..4")
        return self.matrices[k - 1]

    def total(self) -> np.ndarray:
        return self.matrices.sum(axis=0)


def _ideal_matrices() -> np.ndarray:
    t = np.zeros((4, 4, 4))
    for k in range(4):
        t[k] = np.diag(np.append(IDEAL_SIGNS[k], 1.0)) / 4
    return t


def _nonmax_matrices(alpha: float) -> np.ndarray:
    # basis a|00>+b|11>, b|00>-a|11>, a|01>+b|10>, b|01>-a|10>
    # with a = sin(pi/4 + alpha), b = cos(pi/4 + alpha): 2ab = cos 2a, a^2-b^2 = sin 2a
    c, s = math.cos(2 * alpha), math.sin(2 * alpha)
    t = np.zeros((4, 4, 4))
    zz = (1.0, 1.0, -1.0, -1.0)
    xx = (c, -c, c, -c)
    yy = (-c, c, c, -c)
    za = (s, -s, s, -s)  # coefficient of m_z^A
    zb = (s, -s, -s, s)  # coefficient of m_z^B
    for k in range(4):
        t[k, 0, 0] = xx[k]
        t[k, 1, 1] = yy[k]
        t[k, 2, 2] = zz[k]
        t[k, 2, 3] = za[k]
        t[k, 3, 2] = zb[k]
        t[k, 3, 3] = 1.0
    return t / 4


def operator_set(family: MeasurementFamily) -> OperatorSet:
    if family.kind == "ideal":
        return OperatorSet(_ideal_matrices())
    if family.kind == "noisy":
        lam = family.param
        return OperatorSet((1 - lam) * _ideal_matrices() + lam / 4 * NORMALIZATION[None])
    return OperatorSet(_nonmax_matrices(family.param))


def bell_probs(box: JointBox) -> BellProbabilities:
    """Unique solution of the three parity relations plus normalization.

    Negative components are returned as-is; they flag boxes that the joint
    measurement rules out.
    """
    t = box.table
    c_xx, c_yy, c_zz = (t[i, i, 0, 0] + t[i, i, 1, 1] for i in range(3))
    return BellProbabilities(
        (c_xx - c_yy + c_zz) / 2,
        (-c_xx + c_yy + c_zz) / 2,
        (c_xx + c_yy - c_zz) / 2,
        1 - (c_xx + c_yy + c_zz) / 2,
    )


def noisy_bell_probs(box: JointBox, lam: float) -> BellProbabilities:
    if not (0.0 <= lam < 1.0):
        raise ValueError(f"noise lambda={lam} outside [0, 1)")
    return BellProbabilities(*((1 - lam) * p + lam / 4 for p in bell_probs(box)))


def family_probs(box: JointBox, family: MeasurementFamily) -> BellProbabilities:
    """Outcome probabilities of ``family`` on an arbitrary box."""
    if family.kind == "ideal":
        return bell_probs(box)
    if family.kind == "noisy":
        return noisy_bell_probs(box, family.param)
    return operator_probs(operator_set(family), box)


def operator_probs(ops: OperatorSet, box: JointBox) -> BellProbabilities:
    """``p_k = sum_ij T_k[i, j] M[i, j]`` with M the box's moment matrix."""
    m = box.moment_matrix()
    return BellProbabilities(*(float(v) for v in np.einsum("kij,ij->k", ops.matrices, m)))


def _extended(m) -> np.ndarray:
    if isinstance(m, MomentVector):
        return m.extended()
    m = np.asarray(m, dtype=float)
    if m.shape[-1] == 3:
        m = np.concatenate([m, np.ones(m.shape[:-1] + (1,))], axis=-1)
    return m


def outcome_value(ops: OperatorSet, k: int, m_a, m_b) -> float:
    return float(_extended(m_a) @ ops[k] @ _extended(m_b))


def outcome_values(ops: OperatorSet, m_a, m_b) -> np.ndarray:
    """Vectorized ``<m_a|T_k|m_b>`` for all k; inputs (..., 3), output (..., 4)."""
    return np.einsum("...i,kij,...j->...k", _extended(m_a), ops.matrices, _extended(m_b))


@dataclass(frozen=True)
class PositivityReport:
    values: tuple[float, float, float, float]
    tol: float

    @property
    def minimum(self) -> float:
        return min(self.values)

    @property
    def passed(self) -> bool:
        return self.minimum >= -self.tol


def positivity_report(family: MeasurementFamily, m_a, m_b, tol: float = DEFAULT_TOL) -> PositivityReport:
    vals = outcome_values(operator_set(family), m_a, m_b)
    return PositivityReport(tuple(float(v) for v in vals), tol)


def p4_quadratic(p_x, p_y, p_z):
    """``p(4|Bell)`` of the self-product state, in outcome probabilities. Vectorizes."""
    return p_x + p_y + p_z - p_x**2 - p_y**2 - p_z**2 - 0.5


def p4_product(p: LocalState) -> float:
    return float(p4_quadratic(p.p_x, p.p_y, p.p_z))
