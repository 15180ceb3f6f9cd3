"""Small linear-program interface with a built-in dense simplex.

``solve`` minimizes ``c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
and per-variable bounds.  The built-in path is a two-phase tableau simplex with a
deterministic pivot rule (Dantzig pricing with least-index tie breaks, falling back
to Bland's least-index rule after a run of degenerate pivots).  Large sparse
problems (the clairvoyant horizon LPs) go through HiGHS via scipy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

PIVOT_TOL = 1e-9
_BLAND_AFTER = 50
_AUTO_DENSE_LIMIT = 400_000  # tableau entries


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    c: np.ndarray
    A_ub: Optional[object] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[object] = None
    b_eq: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    names: Sequence[str] = field(default_factory=tuple)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n, "inequality")
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "equality")
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, float).ravel().copy()
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float).ravel().copy()
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(np.isnan(self.c)) or np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("NaN in linear program data")
        if self.names and len(self.names) != n:
            raise ValueError("names must have one entry per variable")

    @property
    def n_vars(self) -> int:
        return self.c.size

    def constraint_residuals(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(b_ub - A_ub x, b_eq - A_eq x)."""
        return self.b_ub - self.A_ub @ x, self.b_eq - self.A_eq @ x

    def is_feasible(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        r_ub, r_eq = self.constraint_residuals(x)
        return bool(np.all(r_ub >= -tol) and np.all(np.abs(r_eq) <= tol)
                    and np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


def _rows(A, b, n, kind):
    if A is None:
        if b is not None and np.size(b):
            raise ValueError(f"{kind} right-hand side given without matrix")
        return np.zeros((0, n)), np.zeros(0)
    if not sp.issparse(A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.size == 0:
            A = A.reshape(0, n)
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[1] != n:
        raise ValueError(f"{kind} rows have {A.shape[1]} columns, objective has {n}")
    if A.shape[0] != b.size:
        raise ValueError(f"{kind} matrix has {A.shape[0]} rows but rhs has {b.size}")
    return A, b


@dataclass
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray]
    objective: float
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def solve(lp: LinearProgram, method: str = "auto") -> LpSolution:
    """Solve ``lp``; ``method`` is ``"simplex"`` (built-in), ``"highs"`` or ``"auto"``."""
    if method == "auto":
        m = lp.A_ub.shape[0] + lp.A_eq.shape[0]
        method = "simplex" if (m + lp.n_vars) * (2 * lp.n_vars + m) <= _AUTO_DENSE_LIMIT else "highs"
    if method == "simplex":
        return _simplex(lp)
    if method == "highs":
        return _highs(lp)
    raise ValueError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------- built-in simplex

def _dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def _standard_form(lp: LinearProgram):
    """Map x = shift + M y with y >= 0; finite two-sided boxes become extra <= rows."""
    n = lp.n_vars
    cols, shift, box_rows = [], np.zeros(n), []
    M_entries = []  # (x index, y index, sign)
    for k in range(n):
        lo, hi = lp.lower[k], lp.upper[k]
        if np.isfinite(lo):
            shift[k] = lo
            M_entries.append((k, len(cols), 1.0))
            if np.isfinite(hi):
                box_rows.append((len(cols), hi - lo))
            cols.append(k)
        elif np.isfinite(hi):
            shift[k] = hi
            M_entries.append((k, len(cols), -1.0))
            cols.append(k)
        else:
            M_entries.append((k, len(cols), 1.0))
            cols.append(k)
            M_entries.append((k, len(cols), -1.0))
            cols.append(k)
    ny = len(cols)
    M = np.zeros((n, ny))
    for k, j, s in M_entries:
        M[k, j] = s
    A_ub, A_eq = _dense(lp.A_ub), _dense(lp.A_eq)
    ub_A = A_ub @ M
    ub_b = lp.b_ub - A_ub @ shift
    if box_rows:
        extra = np.zeros((len(box_rows), ny))
        for r, (j, width) in enumerate(box_rows):
            extra[r, j] = 1.0
        ub_A = np.vstack([ub_A, extra])
        ub_b = np.concatenate([ub_b, [w for _, w in box_rows]])
    eq_A = A_eq @ M
    eq_b = lp.b_eq - A_eq @ shift
    c_y = lp.c @ M
    return c_y, ub_A, ub_b, eq_A, eq_b, M, shift


def _choose_entering(cost_row, n_cols, bland):
    r = cost_row[:n_cols]
    if bland:
        cand = np.nonzero(r < -PIVOT_TOL)[0]
        return int(cand[0]) if cand.size else -1
    k = int(np.argmin(r))  # argmin returns the least index among ties
    return k if r[k] < -PIVOT_TOL else -1


def _choose_leaving(T, col, basis):
    column = T[:-1, col]
    rhs = T[:-1, -1]
    pos = np.nonzero(column > PIVOT_TOL)[0]
    if pos.size == 0:
        return -1
    ratios = rhs[pos] / column[pos]
    best = ratios.min()
    tied = pos[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
    # least basic-variable index among ties
    return int(tied[np.argmin(basis[tied])])


def _pivot(T, row, col):
    T[row] /= T[row, col]
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= np.outer(colv, T[row])


def _run(T, basis, n_cols, max_iter):
    """Iterate pivots on tableau T whose last row holds reduced costs (minimization)."""
    degenerate, it = 0, 0
    while True:
        col = _choose_entering(T[-1], n_cols, degenerate >= _BLAND_AFTER)
        if col < 0:
            return "optimal", it
        row = _choose_leaving(T, col, basis)
        if row < 0:
            return "unbounded", it
        degenerate = degenerate + 1 if T[row, -1] <= PIVOT_TOL else 0
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it > max_iter:
            raise RuntimeError("simplex iteration limit exceeded")


def _simplex(lp: LinearProgram) -> LpSolution:
    c_y, ub_A, ub_b, eq_A, eq_b, M, shift = _standard_form(lp)
    ny = c_y.size
    m_ub, m_eq = ub_b.size, eq_b.size
    m = m_ub + m_eq
    if m == 0:
        if np.any(c_y < -PIVOT_TOL):
            return LpSolution(LpStatus.UNBOUNDED, None, -np.inf)
        x = shift.copy()
        return LpSolution(LpStatus.OPTIMAL, x, float(lp.c @ x))

    # columns: y (ny) | slacks (m_ub) | artificials (n_art) | rhs
    A = np.zeros((m, ny + m_ub))
    A[:m_ub, :ny] = ub_A
    A[:m_ub, ny:] = np.eye(m_ub)
    A[m_ub:, :ny] = eq_A
    b = np.concatenate([ub_b, eq_b])
    neg = b < 0
    A[neg] *= -1.0
    b = np.where(neg, -b, b)
    need_art = np.ones(m, dtype=bool)
    need_art[:m_ub] = neg[:m_ub]
    art_rows = np.nonzero(need_art)[0]
    n_art = art_rows.size
    n_real = ny + m_ub
    T = np.zeros((m + 1, n_real + n_art + 1))
    T[:m, :n_real] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=int)
    basis[:m_ub] = ny + np.arange(m_ub)
    for k, r in enumerate(art_rows):
        T[r, n_real + k] = 1.0
        basis[r] = n_real + k
    max_iter = 50 * (m + n_real + n_art) + 1000
    iters = 0

    if n_art:
        T[-1, :] = 0.0
        T[-1, n_real:n_real + n_art] = 1.0
        for r in art_rows:
            T[-1] -= T[r]
        _, it = _run(T, basis, n_real + n_art, max_iter)
        iters += it
        if -T[-1, -1] > 1e-7 * max(1.0, np.abs(b).max()):
            return LpSolution(LpStatus.INFEASIBLE, None, np.nan, iters)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for r in range(m):
            if basis[r] >= n_real:
                cand = np.nonzero(np.abs(T[r, :n_real]) > PIVOT_TOL)[0]
                if cand.size:
                    _pivot(T, r, int(cand[0]))
                    basis[r] = int(cand[0])
                else:
                    keep[r] = False
        T = np.delete(T[keep], np.s_[n_real:n_real + n_art], axis=1)
        basis = basis[keep[:-1]]

    T[-1, :] = 0.0
    T[-1, :ny] = c_y
    for r, bv in enumerate(basis):
        if T[-1, bv] != 0.0:
            T[-1] -= T[-1, bv] * T[r]
    status, it = _run(T, basis, n_real, max_iter)
    iters += it
    if status == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, None, -np.inf, iters)

    z = np.zeros(n_real)
    z[basis] = T[:-1, -1]
    z = _refine(A, b, basis, z)
    x = shift + M @ z[:ny]
    # snap round-off onto the bounds
    x = np.minimum(np.maximum(x, lp.lower), lp.upper)
    return LpSolution(LpStatus.OPTIMAL, x, float(lp.c @ x), iters)


def _refine(A, b, basis, z):
    """Recompute basic values from the original rows to shed accumulated tableau error."""
    B = A[:, basis]
    if B.shape[0] != B.shape[1]:
        return np.maximum(z, 0.0)
    try:
        zb = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        return np.maximum(z, 0.0)
    if np.all(np.isfinite(zb)) and np.allclose(zb, z[basis], atol=1e-6, rtol=1e-6):
        z = z.copy()
        z[basis] = zb
    return np.maximum(z, 0.0)


# ---------------------------------------------------------------- HiGHS adapter

# tight tolerances so long trajectories replay within the 1e-9 feasibility tolerance
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}

def _highs(lp: LinearProgram) -> LpSolution:
    from scipy.optimize import linprog as _scipy_linprog

    kw = {}
    if lp.A_ub.shape[0]:
        kw.update(A_ub=lp.A_ub, b_ub=lp.b_ub)
    if lp.A_eq.shape[0]:
        kw.update(A_eq=lp.A_eq, b_eq=lp.b_eq)
    bounds = np.column_stack([np.where(np.isfinite(lp.lower), lp.lower, -np.inf),
                              np.where(np.isfinite(lp.upper), lp.upper, np.inf)])
    res = _scipy_linprog(lp.c, bounds=bounds, method="highs", options=HIGHS_OPTIONS, **kw)
    if res.status == 0:
        x = np.minimum(np.maximum(res.x, lp.lower), lp.upper)
        return LpSolution(LpStatus.OPTIMAL, x, float(lp.c @ x), int(res.nit))
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, None, np.nan, int(res.nit))
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, None, -np.inf, int(res.nit))
    raise RuntimeError(f"HiGHS failed: {res.message}")


# ---------------------------------------------------------------- debug dump

def _fmt_row(coefs, names):
    terms = []
    for k, v in coefs:
        if v == 0:
            continue
        sign = "-" if v < 0 else "+"
        terms.append(f"{sign} {abs(v):.17g} {names[k]}")
    s = " ".join(terms) if terms else "0 " + names[0]
    return s[2:] if s.startswith("+ ") else s


def to_lp_text(lp: LinearProgram) -> str:
    """CPLEX-LP style text of ``lp`` for cross-checking with external solvers."""
    names = list(lp.names) if lp.names else [f"x{k}" for k in range(lp.n_vars)]
    lines = ["Minimize", " obj: " + _fmt_row(enumerate(lp.c), names), "Subject To"]
    for kind, A, b, op in (("ub", lp.A_ub, lp.b_ub, "<="), ("eq", lp.A_eq, lp.b_eq, "=")):
        A = sp.csr_matrix(A)
        for r in range(A.shape[0]):
            row = A.getrow(r)
            coefs = zip(row.indices, row.data)
            lines.append(f" {kind}{r}: {_fmt_row(coefs, names)} {op} {b[r]:.17g}")
    lines.append("Bounds")
    for k, nm in enumerate(names):
        lo, hi = lp.lower[k], lp.upper[k]
        lo_s = "-inf" if not np.isfinite(lo) else f"{lo:.17g}"
        hi_s = "+inf" if not np.isfinite(hi) else f"{hi:.17g}"
        lines.append(f" {lo_s} <= {nm} <= {hi_s}")
    lines.append("End")
    return "\n".join(lines) + "\n"
