"""Small dense linear-program solver.

Two-phase primal simplex on an explicit tableau with Bland's anti-cycling
rule.  Problems here have at most a few dozen variables (road flows), so a
dense textbook implementation is plenty and keeps results bit-reproducible.

Solves::

    minimize    objective . x
    subject to  eq_matrix @ x == eq_rhs
                ub_matrix @ x <= ub_rhs
                x >= 0
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LPResult", "solve_lp"]


@dataclass(frozen=True)
class LPResult:
    """Outcome of a solve: ``status`` is optimal, infeasible, or unbounded."""

    status: str
    x: np.ndarray | None = None
    objective: float | None = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _pivot(tableau: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and tableau[r, col] != 0.0:
            tableau[r] -= tableau[r, col] * tableau[row]
    basis[row] = col


def _simplex(
    tableau: np.ndarray, basis: list[int], cost: np.ndarray, tol: float, max_iter: int
) -> str:
    """Run simplex iterations on a reduced tableau (last column is the rhs)."""
    m = tableau.shape[0]
    n = tableau.shape[1] - 1
    for _ in range(max_iter):
        reduced = cost[:n] - cost[basis] @ tableau[:, :n]
        entering = -1
        for j in range(n):  # Bland: smallest eligible index enters
            if reduced[j] < -tol:
                entering = j
                break
        if entering < 0:
            return "optimal"
        leaving = -1
        best = np.inf
        for i in range(m):
            coeff = tableau[i, entering]
            if coeff > tol:
                ratio = tableau[i, -1] / coeff
                # Bland again: break ratio ties toward the smallest basis variable.
                if ratio < best - 1e-12 or (
                    ratio <= best + 1e-12 and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    best = ratio
                    leaving = i
        if leaving < 0:
            return "unbounded"
        _pivot(tableau, basis, leaving, entering)
    raise RuntimeError("simplex failed to terminate; iteration cap reached")


def solve_lp(
    objective,
    eq_matrix=None,
    eq_rhs=None,
    ub_matrix=None,
    ub_rhs=None,
    *,
    tol: float = 1e-9,
    max_iter: int = 10000,
) -> LPResult:
    """Solve a small LP; returns an optimal basic solution or a verdict.

    Matrices may be ``None`` when a constraint family is absent.  Variables
    are implicitly nonnegative.  The value in ``LPResult.x`` covers only the
    original variables, not the internal slacks.
    """
    c = np.atleast_1d(np.asarray(objective, dtype=float))
    n = len(c)

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    n_ub = 0
    if ub_matrix is not None:
        ub_a = np.atleast_2d(np.asarray(ub_matrix, dtype=float))
        ub_b = np.atleast_1d(np.asarray(ub_rhs, dtype=float))
        if ub_a.shape != (len(ub_b), n):
            raise ValueError(f"ub_matrix shape {ub_a.shape} does not match {len(ub_b)}x{n}")
        n_ub = len(ub_b)
    if eq_matrix is not None:
        eq_a = np.atleast_2d(np.asarray(eq_matrix, dtype=float))
        eq_b = np.atleast_1d(np.asarray(eq_rhs, dtype=float))
        if eq_a.shape != (len(eq_b), n):
            raise ValueError(f"eq_matrix shape {eq_a.shape} does not match {len(eq_b)}x{n}")

    # Standard form: append one slack per inequality row.
    width = n + n_ub
    if n_ub:
        for i in range(n_ub):
            row = np.zeros(width)
            row[:n] = ub_a[i]
            row[n + i] = 1.0
            rows.append(row)
            rhs.append(float(ub_b[i]))
    if eq_matrix is not None:
        for i in range(len(eq_b)):
            row = np.zeros(width)
            row[:n] = eq_a[i]
            rows.append(row)
            rhs.append(float(eq_b[i]))

    m = len(rows)
    if m == 0:
        # Unconstrained besides x >= 0: optimum at 0 unless some cost is negative.
        if np.any(c < -tol):
            return LPResult("unbounded")
        return LPResult("optimal", np.zeros(n), 0.0)

    a_full = np.vstack(rows)
    b_full = np.asarray(rhs, dtype=float)
    flip = b_full < 0.0
    a_full[flip] *= -1.0
    b_full[flip] *= -1.0

    # Phase 1: artificial basis, minimize total artificial volume.
    tableau = np.zeros((m, width + m + 1))
    tableau[:, :width] = a_full
    tableau[:, width : width + m] = np.eye(m)
    tableau[:, -1] = b_full
    basis = [width + i for i in range(m)]
    cost1 = np.concatenate([np.zeros(width), np.ones(m)])
    status = _simplex(tableau, basis, cost1, tol, max_iter)
    if status != "optimal":  # phase 1 is bounded below by zero, so this is defensive
        return LPResult("infeasible")
    if float(cost1[basis] @ tableau[:, -1]) > tol:
        return LPResult("infeasible")

    # Swap lingering zero-level artificials for real columns; drop rows that
    # turn out to be redundant.
    drop: list[int] = []
    for i in range(m):
        if basis[i] >= width:
            for j in range(width):
                if abs(tableau[i, j]) > tol:
                    _pivot(tableau, basis, i, j)
                    break
            else:
                drop.append(i)
    if drop:
        keep = [i for i in range(m) if i not in drop]
        tableau = tableau[keep]
        basis = [basis[i] for i in keep]

    # Phase 2 on the real objective, artificial columns removed.
    tableau = np.hstack([tableau[:, :width], tableau[:, -1:]])
    cost2 = np.concatenate([c, np.zeros(n_ub)])
    status = _simplex(tableau, basis, cost2, tol, max_iter)
    if status == "unbounded":
        return LPResult("unbounded")

    x_full = np.zeros(width)
    for i, var in enumerate(basis):
        x_full[var] = tableau[i, -1]
    x = np.clip(x_full[:n], 0.0, None)  # scrub tol-level negative residues
    return LPResult("optimal", x, float(c @ x))
