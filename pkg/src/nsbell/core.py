"""Elementary and bipartite boxes with three dichotomic settings per party.

Settings are indexed 0, 1, 2 for X, Y, Z; outcome index 0 is "+" and 1 is "-".
A :class:`JointBox` stores the full table ``p(ab|x_A x_B)`` as an array of
shape ``(3, 3, 2, 2)`` indexed ``[x_A, x_B, a, b]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

SETTINGS = ("X", "Y", "Z")
OUTCOMES = ("p", "m")
SIGNS = np.array([1.0, -1.0])

# row-major off-diagonal order of the 3x3 "++" block
OFF_DIAG_PAIRS = ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))

EXACT_TOL = 1e-12
DEFAULT_TOL = 1e-9


def setting_index(s: int | str) -> int:
    if isinstance(s, str):
        try:
            return SETTINGS.index(s.upper())
        except ValueError:
            raise ValueError(f"unknown setting {s!r}") from None
    if s not in (0, 1, 2):
        raise ValueError(f"unknown setting {s!r}")
    return int(s)


@dataclass(frozen=True)
class LocalState:
    """Probabilities of outcome "+" for X, Y and Z on one elementary system."""

    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self):
        for name in ("p_x", "p_y", "p_z"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_x, self.p_y, self.p_z])


@dataclass(frozen=True)
class MomentVector:
    """Mean values m = 2p - 1 of X, Y, Z. The implicit fourth component is 1."""

    m_x: float
    m_y: float
    m_z: float

    def __post_init__(self):
        for name in ("m_x", "m_y", "m_z"):
            v = getattr(self, name)
            if not (-1.0 <= v <= 1.0):
                raise ValueError(f"{name}={v} outside [-1, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.m_x, self.m_y, self.m_z])

    def extended(self) -> np.ndarray:
        return np.array([self.m_x, self.m_y, self.m_z, 1.0])


def moments_from_local(state: LocalState) -> MomentVector:
    return MomentVector(2 * state.p_x - 1, 2 * state.p_y - 1, 2 * state.p_z - 1)


def local_from_moments(m: MomentVector) -> LocalState:
    return LocalState((m.m_x + 1) / 2, (m.m_y + 1) / 2, (m.m_z + 1) / 2)


class BellProbabilities(NamedTuple):
    """Outcome probabilities of the joint measurement, ordered phi+, phi-, psi+, psi-."""

    p1: float
    p2: float
    p3: float
    p4: float


@dataclass(frozen=True, eq=False)
class JointBox:
    """Conditional probability table ``p(ab|x_A x_B)``.

    Construction only checks the shape; entries may be negative or
    unnormalized (use :func:`validate_joint_box` to check them).
    """

    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.shape != (3, 3, 2, 2):
            raise ValueError(f"table must have shape (3, 3, 2, 2), got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError("table has non-finite entries")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    def block(self, x_a: int | str, x_b: int | str) -> np.ndarray:
        return self.table[setting_index(x_a), setting_index(x_b)]

    def marginals_a(self) -> np.ndarray:
        """p(+|x_A) computed from every x_B; shape (3 x_A, 3 x_B)."""
        return self.table[:, :, 0, :].sum(axis=-1)

    def marginals_b(self) -> np.ndarray:
        """p(+|x_B) computed from every x_A; shape (3 x_A, 3 x_B)."""
        return self.table[:, :, :, 0].sum(axis=-1)

    def moment_matrix(self) -> np.ndarray:
        """4x4 matrix of correlators with local moments in the last row/column.

        ``M[i, j] = E(A_i B_j)``, ``M[i, 3] = <A_i>``, ``M[3, j] = <B_j>``,
        ``M[3, 3] = 1``. Local moments are averaged over the other party's
        setting, which is exact for non-signaling boxes.
        """
        st = np.multiply.outer(SIGNS, SIGNS)
        m = np.empty((4, 4))
        m[:3, :3] = np.einsum("ijab,ab->ij", self.table, st)
        m[:3, 3] = np.einsum("ijab,a->ij", self.table, SIGNS).mean(axis=1)
        m[3, :3] = np.einsum("ijab,b->ij", self.table, SIGNS).mean(axis=0)
        m[3, 3] = 1.0
        return m

    def __eq__(self, other):
        if not isinstance(other, JointBox):
            return NotImplemented
        return bool(np.array_equal(self.table, other.table))

    def allclose(self, other: JointBox, atol: float = EXACT_TOL) -> bool:
        return bool(np.allclose(self.table, other.table, rtol=0.0, atol=atol))


@dataclass(frozen=True)
class CompactState:
    """The 15-number description: nine "++" probabilities and six marginals."""

    diag: tuple[float, float, float]
    off_diag: tuple[float, float, float, float, float, float]
    marg_a: tuple[float, float, float]
    marg_b: tuple[float, float, float]

    def __post_init__(self):
        for name, n in (("diag", 3), ("off_diag", 6), ("marg_a", 3), ("marg_b", 3)):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != n:
                raise ValueError(f"{name} needs {n} entries, got {len(v)}")
            object.__setattr__(self, name, v)

    def as_vector(self) -> np.ndarray:
        return np.array(self.diag + self.off_diag + self.marg_a + self.marg_b)

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> CompactState:
        v = [float(x) for x in v]
        if len(v) != 15:
            raise ValueError(f"compact state needs 15 numbers, got {len(v)}")
        return cls(tuple(v[0:3]), tuple(v[3:9]), tuple(v[9:12]), tuple(v[12:15]))

    def pp_matrix(self) -> np.ndarray:
        """p(++|x_A x_B) as a 3x3 matrix (rows x_A)."""
        pp = np.diag(self.diag)
        for (i, j), v in zip(OFF_DIAG_PAIRS, self.off_diag):
            pp[i, j] = v
        return pp


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    magnitude: float

    def as_dict(self) -> dict:
        return {"kind": self.kind, "where": self.where, "magnitude": self.magnitude}


def validate_joint_box(box: JointBox, tol: float = EXACT_TOL) -> list[Violation]:
    """Check positivity, normalization and the 12 independent non-signaling equalities.

    Returns the violated constraints; an empty list means the box is a
    valid no-signaling box.
    """
    out = []
    t = box.table
    for i in range(3):
        for j in range(3):
            pair = SETTINGS[i] + SETTINGS[j]
            for a in range(2):
                for b in range(2):
                    v = t[i, j, a, b]
                    if v < -tol:
                        out.append(Violation("positivity", f"{pair}:{OUTCOMES[a]}{OUTCOMES[b]}", -v))
                    elif v > 1 + tol:
                        out.append(Violation("positivity", f"{pair}:{OUTCOMES[a]}{OUTCOMES[b]}", v - 1))
            s = t[i, j].sum()
            if abs(s - 1) > tol:
                out.append(Violation("normalization", pair, abs(s - 1)))

    ma, mb = box.marginals_a(), box.marginals_b()
    for i in range(3):
        for j in (1, 2):
            d = abs(ma[i, j] - ma[i, 0])
            if d > tol:
                out.append(Violation("no-signaling", f"p(+|{SETTINGS[i]}_A) from {SETTINGS[i]}{SETTINGS[j]} vs {SETTINGS[i]}X", d))
            d = abs(mb[j, i] - mb[0, i])
            if d > tol:
                out.append(Violation("no-signaling", f"p(+|{SETTINGS[i]}_B) from {SETTINGS[j]}{SETTINGS[i]} vs X{SETTINGS[i]}", d))
    return out


def is_valid(box: JointBox, tol: float = EXACT_TOL) -> bool:
    return not validate_joint_box(box, tol)


def product_box(alice: LocalState, bob: LocalState) -> JointBox:
    pa = np.stack([alice.as_array(), 1 - alice.as_array()], axis=-1)
    pb = np.stack([bob.as_array(), 1 - bob.as_array()], axis=-1)
    return JointBox(np.einsum("ia,jb->ijab", pa, pb))


def uniform_box() -> JointBox:
    return JointBox(np.full((3, 3, 2, 2), 0.25))


def box_from_moments(m: np.ndarray) -> JointBox:
    """Inverse of :meth:`JointBox.moment_matrix`."""
    m = np.asarray(m, dtype=float)
    sa = SIGNS[None, None, :, None]
    sb = SIGNS[None, None, None, :]
    t = 0.25 * (
        1
        + sa * m[:3, 3, None, None, None]
        + sb * m[None, 3, :3, None, None]
        + sa * sb * m[:3, :3, None, None]
    )
    return JointBox(t)


def mixture(boxes: Iterable[JointBox], weights: Sequence[float]) -> JointBox:
    boxes = list(boxes)
    w = np.asarray(weights, dtype=float)
    if len(boxes) != len(w) or len(w) == 0:
        raise ValueError("need one weight per box")
    if np.any(w < 0) or abs(w.sum() - 1) > EXACT_TOL:
        raise ValueError("weights must be a probability vector")
    return JointBox(np.einsum("k,kijab->ijab", w, np.stack([b.table for b in boxes])))


def compact_from_box(box: JointBox, tol: float = EXACT_TOL) -> CompactState:
    problems = validate_joint_box(box, tol)
    if problems:
        raise ValueError(f"invalid box: {problems[0]}")
    t = box.table
    pp = t[:, :, 0, 0]
    # p(+|x_A) = p(++|x_A X) + p(+-|x_A X), and symmetrically for B
    marg_a = t[:, 0, 0, :].sum(axis=-1)
    marg_b = t[0, :, :, 0].sum(axis=-1)
    return CompactState(
        tuple(np.diag(pp)),
        tuple(pp[i, j] for i, j in OFF_DIAG_PAIRS),
        tuple(marg_a),
        tuple(marg_b),
    )


def expand(state: CompactState) -> JointBox:
    pp = state.pp_matrix()
    ma = np.asarray(state.marg_a)[:, None]
    mb = np.asarray(state.marg_b)[None, :]
    t = np.empty((3, 3, 2, 2))
    t[:, :, 0, 0] = pp
    t[:, :, 0, 1] = ma - pp
    t[:, :, 1, 0] = mb - pp
    t[:, :, 1, 1] = 1 - ma - mb + pp
    return JointBox(t)


def correlator(box: JointBox, x_a: int | str, x_b: int | str) -> float:
    blk = box.block(x_a, x_b)
    return float(blk[0, 0] + blk[1, 1] - blk[0, 1] - blk[1, 0])


def compact_affine_map(fn, n: int = 15) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of an affine function of the compact coordinates.

    ``fn`` maps a :class:`JointBox` to a scalar or array and must be affine in
    the table (all quantities used here are). Returns ``(Q, q)`` with
    ``fn(expand(x)) == Q @ x + q``.
    """
    zero = np.atleast_1d(np.asarray(fn(expand(CompactState.from_vector(np.zeros(n)))), dtype=float))
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        cols.append(np.atleast_1d(np.asarray(fn(expand(CompactState.from_vector(e))), dtype=float)) - zero)
    return np.stack(cols, axis=-1), zero


# JSON box format


def box_to_json(box: JointBox, include_compact: bool = True) -> dict:
    blocks = {}
    for i in range(3):
        for j in range(3):
            blk = box.table[i, j]
            blocks[SETTINGS[i] + SETTINGS[j]] = {
                "pp": float(blk[0, 0]),
                "pm": float(blk[0, 1]),
                "mp": float(blk[1, 0]),
                "mm": float(blk[1, 1]),
            }
    doc = {"blocks": blocks}
    if include_compact and is_valid(box, DEFAULT_TOL):
        doc["compact"] = [float(v) for v in compact_from_box(box, DEFAULT_TOL).as_vector()]
    return doc


def box_from_json(doc: dict) -> JointBox:
    """Parse the JSON box format. Raises ValueError on any schema problem."""
    if not isinstance(doc, dict):
        raise ValueError("box document must be a JSON object")
    compact = None
    if "compact" in doc:
        c = doc["compact"]
        if not isinstance(c, list) or len(c) != 15 or not all(isinstance(v, (int, float)) for v in c):
            raise ValueError("'compact' must be an array of 15 numbers")
        compact = CompactState.from_vector(c)

    if "blocks" not in doc:
        if compact is None:
            raise ValueError("box document needs 'blocks' or 'compact'")
        return expand(compact)

    blocks = doc["blocks"]
    if not isinstance(blocks, dict):
        raise ValueError("'blocks' must be an object")
    t = np.empty((3, 3, 2, 2))
    for i in range(3):
        for j in range(3):
            key = SETTINGS[i] + SETTINGS[j]
            if key not in blocks:
                raise ValueError(f"missing block {key}")
            blk = blocks[key]
            for a, oa in enumerate(OUTCOMES):
                for b, ob in enumerate(OUTCOMES):
                    v = blk.get(oa + ob) if isinstance(blk, dict) else None
                    if not isinstance(v, (int, float)) or isinstance(v, bool):
                        raise ValueError(f"block {key} needs numeric '{oa + ob}'")
                    t[i, j, a, b] = v
    box = JointBox(t)
    if compact is not None and not expand(compact).allclose(box, DEFAULT_TOL):
        raise ValueError("'blocks' and 'compact' disagree")
    return box


def load_box(path) -> JointBox:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed JSON: {exc}") from None
    return box_from_json(doc)
