"""Dense two-phase revised simplex with Bland's rule.

Only meant for the small LPs that arise from tabular occupancy formulations
(a few hundred variables, a few dozen rows).  Solves

    max c^T x   s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0

and returns the primal solution together with dual multipliers for both row
blocks (y_ub >= 0 at optimality).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None = None
    value: float | None = None
    y_ub: np.ndarray | None = None
    y_eq: np.ndarray | None = None
    iterations: int = 0


def _as2d(A, n):
    if A is None:
        return np.zeros((0, n))
    A = np.asarray(A, dtype=np.float64)
    return A.reshape(-1, n)


class _Basis:
    def __init__(self, A, b, basis):
        self.A = A
        self.b = b
        self.basis = list(basis)

    def solve(self):
        B = self.A[:, self.basis]
        return np.linalg.solve(B, self.b), B

    def duals(self, c):
        B = self.A[:, self.basis]
        return np.linalg.solve(B.T, c[self.basis])


def _run(A, b, c, basis, allowed, max_iter, tol):
    """Primal simplex from a feasible basis.  Returns (status, basis, iterations)."""
    st = _Basis(A, b, basis)
    for it in range(max_iter):
        xB, B = st.solve()
        y = st.duals(c)
        reduced = c - y @ A
        reduced[st.basis] = 0.0
        enter = -1
        for j in range(A.shape[1]):  # Bland: lowest improving index
            if allowed[j] and reduced[j] > tol:
                enter = j
                break
        if enter < 0:
            return OPTIMAL, st.basis, it
        d = np.linalg.solve(B, A[:, enter])
        best = None
        for i in range(len(d)):
            if d[i] > tol:
                ratio = max(xB[i], 0.0) / d[i]
                key = (ratio, st.basis[i])
                if best is None or key[0] < best[0] - 1e-14 or (
                        abs(key[0] - best[0]) <= 1e-14 and key[1] < best[1]):
                    best = (key[0], key[1], i)
        if best is None:
            return UNBOUNDED, st.basis, it
        st.basis[best[2]] = enter
    return ITERATION_LIMIT, st.basis, max_iter


def simplex_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter: int = 50_000,
                tol: float = 1e-10) -> SimplexResult:
    c = np.asarray(c, dtype=np.float64).ravel()
    n = c.size
    A_ub = _as2d(A_ub, n)
    A_eq = _as2d(A_eq, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64).ravel()
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    rows = m_ub + m_eq
    # standard form: [A_ub I; A_eq 0] [x; s] = b, then flip rows with b < 0
    A = np.zeros((rows, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    flip = np.where(b < 0, -1.0, 1.0)
    A = A * flip[:, None]
    b = b * flip
    nv = n + m_ub
    # phase 1 with one artificial per row
    A1 = np.hstack([A, np.eye(rows)])
    c1 = np.concatenate([np.zeros(nv), -np.ones(rows)])
    allowed = np.ones(nv + rows, dtype=bool)
    basis = list(range(nv, nv + rows))
    status, basis, it1 = _run(A1, b, c1, basis, allowed, max_iter, tol)
    if status != OPTIMAL:
        return SimplexResult(status, iterations=it1)
    xB = np.linalg.solve(A1[:, basis], b)
    infeas = sum(xB[i] for i, j in enumerate(basis) if j >= nv)
    if infeas > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
        return SimplexResult(INFEASIBLE, iterations=it1)
    # drive remaining (zero-level) artificials out of the basis, dropping redundant rows
    keep = np.ones(rows, dtype=bool)
    for i in range(rows):
        j = basis[i]
        if j < nv:
            continue
        Binv_row = np.linalg.solve(A1[:, basis].T, np.eye(rows)[i])
        alpha = Binv_row @ A
        cand = [k for k in range(nv) if k not in basis and abs(alpha[k]) > 1e-9]
        if cand:
            basis[i] = cand[0]
        else:
            keep[i] = False
    rows_kept = np.nonzero(keep)[0]
    A2 = A[rows_kept]
    b2 = b[rows_kept]
    basis2 = [basis[i] for i in rows_kept]
    c2 = np.concatenate([c, np.zeros(m_ub)])
    status, basis2, it2 = _run(A2, b2, c2, basis2, np.ones(nv, dtype=bool), max_iter, tol)
    if status != OPTIMAL:
        return SimplexResult(status, iterations=it1 + it2)
    xB = np.linalg.solve(A2[:, basis2], b2)
    x = np.zeros(nv)
    x[basis2] = np.maximum(xB, 0.0)
    y_std = np.zeros(rows)
    y_std[rows_kept] = np.linalg.solve(A2[:, basis2].T, c2[basis2])
    y = y_std * flip
    return SimplexResult(OPTIMAL, x=x[:n], value=float(c @ x[:n]), y_ub=y[:m_ub],
                         y_eq=y[m_ub:], iterations=it1 + it2)


def kkt_residuals(c, A_ub, b_ub, A_eq, b_eq, res: SimplexResult) -> dict:
    """Primal feasibility, dual feasibility and complementary slackness residuals."""
    c = np.asarray(c, dtype=np.float64)
    n = c.size
    A_ub = _as2d(A_ub, n)
    A_eq = _as2d(A_eq, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64)
    x, yu, ye = res.x, res.y_ub, res.y_eq
    slack_ub = b_ub - A_ub @ x
    primal = max(float(np.max(-slack_ub, initial=0.0)),
                 float(np.max(np.abs(A_eq @ x - b_eq), initial=0.0)),
                 float(np.max(-x, initial=0.0)))
    reduced = A_ub.T @ yu + A_eq.T @ ye - c  # >= 0 for dual feasibility of a max problem
    dual = max(float(np.max(-reduced, initial=0.0)), float(np.max(-yu, initial=0.0)))
    comp = max(float(np.max(np.abs(yu * slack_ub), initial=0.0)),
               float(np.max(np.abs(x * reduced), initial=0.0)))
    return {"primal": primal, "dual": dual, "complementarity": comp}
