"""Two-qubit ground truth: Born-rule statistics for Pauli and Bell-type measurements."""

from __future__ import annotations

import math

import numpy as np

from .core import EXACT_TOL, SETTINGS, BellProbabilities, JointBox, setting_index

I2 = np.eye(2, dtype=complex)
PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# PROJECTORS[x, a] = (I + s_a sigma_x) / 2, so P^{Z,+} = |0><0|
PROJECTORS = np.stack([np.stack([(I2 + s * PAULI[x]) / 2 for s in (1, -1)]) for x in range(3)])

# PAIR_PROJECTORS[x_A, x_B, a, b] = P_A^{x_A,a} (x) P_B^{x_B,b}
PAIR_PROJECTORS = np.einsum("iapq,jbrs->ijabprqs", PROJECTORS, PROJECTORS).reshape(3, 3, 2, 2, 4, 4)


def check_density_matrix(rho: np.ndarray, tol: float = EXACT_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"density matrix must be 4x4, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density matrix trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def box_from_state(rho: np.ndarray) -> JointBox:
    rho = check_density_matrix(rho)
    return JointBox(np.einsum("ijabpq,qp->ijab", PAIR_PROJECTORS, rho).real)


def bell_basis(a: float = 1 / math.sqrt(2), b: float = 1 / math.sqrt(2)) -> np.ndarray:
    """Rows phi+, phi-, psi+, psi- of the (possibly non-maximally) entangled basis."""
    if abs(a * a + b * b - 1) > EXACT_TOL:
        raise ValueError("basis parameters need a^2 + b^2 = 1")
    e = np.eye(4, dtype=complex)  # |00>, |01>, |10>, |11>
    return np.stack(
        [
            a * e[0] + b * e[3],
            b * e[0] - a * e[3],
            a * e[1] + b * e[2],
            b * e[1] - a * e[2],
        ]
    )


def nonmax_basis(alpha: float) -> np.ndarray:
    return bell_basis(math.sin(math.pi / 4 + alpha), math.cos(math.pi / 4 + alpha))


def bell_probs_quantum(rho: np.ndarray, basis: np.ndarray | None = None) -> BellProbabilities:
    basis = bell_basis() if basis is None else basis
    p = np.einsum("kp,pq,kq->k", basis.conj(), np.asarray(rho, dtype=complex), basis).real
    return BellProbabilities(*(float(v) for v in p))


def projector_identity_check() -> dict[str, float]:
    """Max entrywise deviation of the three parity identities, keyed by setting."""
    phi_p, phi_m, psi_p, psi_m = (np.outer(v, v.conj()) for v in bell_basis())
    lhs = {"X": phi_p + psi_p, "Y": phi_m + psi_p, "Z": phi_p + phi_m}
    out = {}
    for x, name in enumerate(SETTINGS):
        rhs = np.kron(PROJECTORS[x, 0], PROJECTORS[x, 0]) + np.kron(PROJECTORS[x, 1], PROJECTORS[x, 1])
        out[name] = float(np.abs(lhs[name] - rhs).max())
    return out


def jacobi_symmetric(a: np.ndarray, tol: float = 1e-13, max_sweeps: int = 100):
    """Cyclic Jacobi eigen-decomposition of a real symmetric matrix.

    Returns eigenvalues (ascending) and eigenvectors as columns.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.abs(a).max(), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    w = np.diag(a)
    order = np.argsort(w)
    return w[order], v[:, order]


def jacobi_eigh(h: np.ndarray, tol: float = 1e-13):
    """Eigen-decomposition of a complex Hermitian matrix via its real embedding.

    ``[[Re, -Im], [Im, Re]]`` carries every eigenvalue twice; complex
    eigenvectors are recovered as ``u + i v`` and orthonormalized within
    degenerate groups.
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    big = np.block([[h.real, -h.imag], [h.imag, h.real]])
    w, vecs = jacobi_symmetric(big, tol)
    basis: list[np.ndarray] = []
    values: list[float] = []
    for k in range(2 * n):
        z = vecs[:n, k] + 1j * vecs[n:, k]
        for b in basis:
            z = z - (b.conj() @ z) * b
        norm = np.linalg.norm(z)
        if norm > 1e-6:
            z = z / norm
            basis.append(z)
            values.append(float((z.conj() @ h @ z).real))
        if len(basis) == n:
            break
    return np.array(values), np.stack(basis, axis=1)


def chsh_operator(a1, a2, b1, b2) -> np.ndarray:
    a1, a2, b1, b2 = (setting_index(s) for s in (a1, a2, b1, b2))
    A1, A2, B1, B2 = PAULI[a1], PAULI[a2], PAULI[b1], PAULI[b2]
    return np.kron(A1, B1) + np.kron(A1, B2) + np.kron(A2, B1) - np.kron(A2, B2)


def chsh_operator_max(spec) -> tuple[float, np.ndarray]:
    """Top eigenvalue of the CHSH operator and the projector onto its eigenvector."""
    w, v = jacobi_eigh(chsh_operator(spec.a1, spec.a2, spec.b1, spec.b2))
    top = int(np.argmax(w))
    psi = v[:, top]
    return float(w[top]), np.outer(psi, psi.conj())


def random_state(seed: int, rank: int = 4) -> np.ndarray:
    if rank not in (1, 2, 3, 4):
        raise ValueError("rank must be in 1..4")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def qubit_state(m) -> np.ndarray:
    """Single-qubit density matrix with Bloch vector ``m``."""
    m = np.asarray(m, dtype=float)
    return (I2 + np.einsum("i,ipq->pq", m, PAULI)) / 2
