"""Two-phase dense tableau simplex with Bland's anti-cycling rule.

Solves ``max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass(frozen=True)
class LPSolution:
    x: np.ndarray
    value: float
    iterations: int


class _Tableau:
    def __init__(self, rows: np.ndarray, rhs: np.ndarray, basis: list[int], tol: float):
        self.T = np.hstack([rows, rhs[:, None]])
        self.basis = basis
        self.tol = tol
        self.iterations = 0

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j
        self.iterations += 1

    def run(self, cost: np.ndarray, allowed: int, max_iter: int = 100_000) -> None:
        """Maximize ``cost`` using only the first ``allowed`` columns as entering candidates."""
        tol = self.tol
        while True:
            if self.iterations > max_iter:
                raise LPError("iteration limit reached")
            A = self.T[:, :-1]
            reduced = cost[self.basis] @ A - cost
            candidates = np.flatnonzero(reduced[:allowed] < -tol)
            if candidates.size == 0:
                return
            j = int(candidates[0])  # Bland: lowest index
            col = A[:, j]
            rows = np.flatnonzero(col > tol)
            if rows.size == 0:
                raise Unbounded("objective is unbounded")
            ratios = self.T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol]
            r = int(min(ties, key=lambda i: self.basis[i]))  # Bland: lowest basic index
            self.pivot(r, j)

    def value(self, cost: np.ndarray) -> float:
        return float(cost[self.basis] @ self.T[:, -1])


def maximize(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    tol: float = 1e-9,
) -> LPSolution:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq

    # columns: original | slacks | artificials
    rows = np.zeros((m, n + m_ub))
    rhs = np.concatenate([b_ub, b_eq])
    rows[:m_ub, :n] = A_ub
    rows[:m_ub, n:] = np.eye(m_ub)
    rows[m_ub:, :n] = A_eq
    neg = rhs < 0
    rows[neg] *= -1
    rhs = np.abs(rhs)

    basis = [-1] * m
    need_art = []
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis[i] = n + i
        else:
            need_art.append(i)
    n_main = n + m_ub
    art = np.zeros((m, len(need_art)))
    for k, i in enumerate(need_art):
        art[i, k] = 1.0
        basis[i] = n_main + k
    tab = _Tableau(np.hstack([rows, art]), rhs, basis, tol)

    if need_art:
        phase1 = np.zeros(n_main + len(need_art))
        phase1[n_main:] = -1.0
        tab.run(phase1, allowed=n_main + len(need_art))
        if tab.value(phase1) < -tol * max(1.0, np.abs(rhs).max()):
            raise Infeasible("constraints are infeasible")
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(m):
            if tab.basis[r] >= n_main:
                nz = np.flatnonzero(np.abs(tab.T[r, :n_main]) > tol)
                if nz.size == 0:
                    continue
                tab.pivot(r, int(nz[0]))
            keep.append(r)
        tab.T = np.hstack([tab.T[keep, :n_main], tab.T[keep, -1:]])
        tab.basis = [tab.basis[r] for r in keep]

    cost = np.concatenate([c, np.zeros(m_ub)])
    tab.run(cost, allowed=n_main)
    x = np.zeros(n_main)
    x[tab.basis] = tab.T[:, -1]
    return LPSolution(x[:n], tab.value(cost), tab.iterations)
