"""Small dense tableau simplex with anti-cycling pivoting.

Solves  max c.x  subject to  A x <= b, x >= 0  with b >= 0, so the all-slack
basis is feasible and no phase-1 is needed.  Pivoting is Dantzig's rule until
a long degenerate streak, then Bland's rule, which guarantees termination.

This is the benchmark-grade solver for tiny programs; the LP oracle uses it
to cross-check the default HiGHS engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-10
DEGENERATE_STREAK = 64


class UnboundedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimplexResult:
    value: float
    x: np.ndarray
    iterations: int
    residual: float


def solve_max(c, A, b, maxiter: int | None = None) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if b.min(initial=0.0) < 0.0:
        raise ValueError("solve_max needs b >= 0 (all-slack start)")
    if maxiter is None:
        maxiter = 50 * (m + n + 1)

    # Tableau: n structural columns, m slacks, rhs.  Last row is the
    # objective with negated reduced costs.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = list(range(n, n + m))

    bland = False
    streak = 0
    last_obj = 0.0
    for it in range(maxiter):
        row = T[m, : n + m]
        if bland:
            neg = np.nonzero(row < -PIVOT_TOL)[0]
            if neg.size == 0:
                break
            col = int(neg[0])
        else:
            col = int(np.argmin(row))
            if row[col] >= -PIVOT_TOL:
                break
        ratios = np.full(m, np.inf)
        pos = T[:m, col] > PIVOT_TOL
        ratios[pos] = T[:m, -1][pos] / T[:m, col][pos]
        pivot_row = int(np.argmin(ratios))
        if not np.isfinite(ratios[pivot_row]):
            raise UnboundedError("objective unbounded above")
        # Tie-break the ratio test toward the smallest basis index.
        best = ratios[pivot_row]
        ties = np.nonzero(np.isclose(ratios, best, rtol=0.0, atol=PIVOT_TOL))[0]
        if ties.size > 1:
            pivot_row = int(min(ties, key=lambda r: basis[r]))

        piv = T[pivot_row, col]
        T[pivot_row] /= piv
        col_vals = T[:, col].copy()
        col_vals[pivot_row] = 0.0
        T -= np.outer(col_vals, T[pivot_row])
        basis[pivot_row] = col

        obj = T[m, -1]
        streak = streak + 1 if obj <= last_obj + PIVOT_TOL else 0
        last_obj = obj
        if streak > DEGENERATE_STREAK:
            bland = True
    else:
        raise RuntimeError(f"simplex did not converge in {maxiter} pivots")

    x = np.zeros(n + m)
    for r, bv in enumerate(basis):
        x[bv] = T[r, -1]
    x = x[:n]
    residual = max(
        0.0,
        float(-T[m, : n + m].min(initial=0.0)),
        float(np.max(A @ x - b, initial=0.0)),
        float(-x.min(initial=0.0)),
    )
    return SimplexResult(value=float(T[m, -1]), x=x, iterations=it + 1, residual=residual)
