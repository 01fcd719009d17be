"""Dense-tableau two-phase simplex for the internal solver.

Scope is deliberately desk scale: the tableau is a dense numpy array, bounds
are handled by shifting variables to zero lower bounds plus explicit upper
bound rows, and pricing is Dantzig with a switch to Bland's rule after a
degenerate stall (the anti-cycling guarantee).  Feasibility tolerance 1e-7,
pivot tolerance 1e-9.

The per-pivot work runs through the kernels in ``fuelbound._kernels``
(compiled) or ``fuelbound._kernels_py`` (pure numpy), chosen at import.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:  # compiled extension, if built
    from . import _kernels as _K

    KERNEL_BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _kernels_py as _K

    KERNEL_BACKEND = "python"

from .model import INF, Model

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9


@dataclass
class LPSolution:
    status: str  # 'optimal' | 'infeasible' | 'unbounded' | 'limit'
    value: float | None
    x: np.ndarray | None
    iterations: int = 0


def model_arrays(m: Model):
    """Dense (c, const, A, senses, b, lb, ub) for a sealed model."""
    n = len(m.variables)
    rows = len(m.constraints)
    c = np.zeros(n)
    for vid, coef in m.objective.terms.items():
        c[vid] = coef
    A = np.zeros((rows, n))
    b = np.empty(rows)
    senses = []
    for i, con in enumerate(m.constraints):
        for vid, coef in con.expr.terms.items():
            A[i, vid] = coef
        b[i] = con.rhs
        senses.append(con.sense)
    lb = np.array([v.lb for v in m.variables])
    ub = np.array([v.ub for v in m.variables])
    return c, m.objective.const, A, senses, b, lb, ub


def solve_model_lp(m: Model, bound_overrides: dict | None = None) -> LPSolution:
    """LP relaxation of a sealed model (integrality dropped).

    ``bound_overrides`` maps variable id -> (lb, ub); used by branch and bound.
    """
    c, const, A, senses, b, lb, ub = model_arrays(m)
    if bound_overrides:
        lb = lb.copy()
        ub = ub.copy()
        for vid, (lo, hi) in bound_overrides.items():
            lb[vid] = max(lb[vid], lo)
            ub[vid] = min(ub[vid], hi)
        if np.any(lb > ub + 1e-12):
            return LPSolution("infeasible", None, None)
    return solve_arrays(c, const, A, senses, b, lb, ub)


def solve_arrays(c, const, A, senses, b, lb, ub) -> LPSolution:
    """min c'x + const s.t. A x (senses) b, lb <= x <= ub."""
    n = len(c)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)

    fixed = lb == ub
    free_idx = np.nonzero(~fixed)[0]
    xfix = np.where(fixed, lb, 0.0)
    if A.size:
        b = b - A @ xfix
    const = const + float(c @ xfix)

    Af = A[:, free_idx] if A.size else np.zeros((len(b), len(free_idx)))
    cf = c[free_idx]
    lbf = lb[free_idx]
    ubf = ub[free_idx]

    # shift to x' = x - lb >= 0
    if Af.size:
        b = b - Af @ lbf
    const = const + float(cf @ lbf)
    ubs = ubf - lbf

    # finite upper bounds become rows x'_j <= ubs_j
    ub_rows = [(j, u) for j, u in enumerate(ubs) if u != INF]
    m_rows = len(b) + len(ub_rows)
    nf = len(free_idx)

    if nf == 0:
        ok = _constant_rows_feasible(b, senses)
        return LPSolution("optimal" if ok else "infeasible", const if ok else None,
                          xfix if ok else None)

    Afull = np.zeros((m_rows, nf))
    Afull[: len(b), :] = Af
    bfull = np.concatenate([b, np.array([u for _, u in ub_rows])]) if ub_rows else b.copy()
    senses_full = list(senses) + ["<="] * len(ub_rows)
    for r, (j, _) in enumerate(ub_rows):
        Afull[len(b) + r, j] = 1.0

    res = _two_phase(cf, Afull, senses_full, bfull)
    if res.status != "optimal":
        return LPSolution(res.status, None, None, res.iterations)
    x = xfix.copy()
    x[free_idx] = lbf + res.x
    return LPSolution("optimal", res.value + const, x, res.iterations)


def _constant_rows_feasible(b, senses) -> bool:
    for bi, s in zip(b, senses):
        if s == "<=" and bi < -FEAS_TOL:
            return False
        if s == ">=" and bi > FEAS_TOL:
            return False
        if s == "==" and abs(bi) > FEAS_TOL:
            return False
    return True


def _two_phase(c, A, senses, b) -> LPSolution:
    """Standard-form two-phase simplex on x >= 0 (rows already materialized)."""
    m, n = A.shape
    # to equalities: slack +1 for <=, -1 for >=
    slack_cols = []
    for i, s in enumerate(senses):
        if s == "<=":
            slack_cols.append((i, 1.0))
        elif s == ">=":
            slack_cols.append((i, -1.0))
    ns = len(slack_cols)
    ncols = n + ns
    Aeq = np.zeros((m, ncols))
    Aeq[:, :n] = A
    for j, (i, sign) in enumerate(slack_cols):
        Aeq[i, n + j] = sign
    beq = b.copy()
    neg = beq < 0
    Aeq[neg, :] *= -1.0
    beq[neg] *= -1.0

    # rows whose slack survived sign-normalization with +1 start basic;
    # everything else gets an artificial
    basis = -np.ones(m, dtype=np.int64)
    for j, (i, _) in enumerate(slack_cols):
        if Aeq[i, n + j] == 1.0:
            basis[i] = n + j
    art_rows = np.nonzero(basis < 0)[0]
    na = len(art_rows)
    total = ncols + na
    tab = np.zeros((m + 1, total + 1))
    tab[:m, :ncols] = Aeq
    tab[:m, total] = beq
    for j, i in enumerate(art_rows):
        tab[i, ncols + j] = 1.0
        basis[i] = ncols + j

    iters = 0
    if na:
        # phase 1: minimize artificial sum. cost row = -sum of artificial rows
        tab[m, :] = 0.0
        tab[m, ncols:total] = 1.0
        for i in art_rows:
            tab[m, :] -= tab[i, :]
        status, it = _iterate(tab, basis, m, ncols, allow_cols=ncols)
        iters += it
        if status == "limit":
            return LPSolution("limit", None, None, iters)
        if -tab[m, total] > FEAS_TOL:  # phase-1 optimum is -tab[m, total]
            return LPSolution("infeasible", None, None, iters)
        # drive surviving artificials out of the basis where possible
        for i in range(m):
            if basis[i] >= ncols:
                row = tab[i, :ncols]
                cand = np.nonzero(np.abs(row) > PIVOT_TOL)[0]
                if cand.size:
                    _K.pivot(tab, i, int(cand[0]))
                    basis[i] = int(cand[0])

    # phase 2 objective: price out the basic columns
    tab[m, :] = 0.0
    tab[m, :n] = c
    for i in range(m):
        bj = basis[i]
        if bj < ncols and tab[m, bj] != 0.0:
            tab[m, :] -= tab[m, bj] * tab[i, :]
    status, it = _iterate(tab, basis, m, ncols, allow_cols=ncols)
    iters += it
    if status != "optimal":
        return LPSolution(status, None, None, iters)
    x = np.zeros(ncols)
    for i in range(m):
        if basis[i] < ncols:
            x[basis[i]] = tab[i, total]
    return LPSolution("optimal", -tab[m, total], x[:n], iters)


def _iterate(tab, basis, m, ncols, allow_cols):
    """Pivot until optimal/unbounded.  Dantzig pricing, falling back to
    Bland's rule while degenerate (the anti-cycling safeguard)."""
    total = tab.shape[1] - 1
    max_iters = 200 * (m + ncols) + 2000
    stall = 0
    use_bland = False
    last_obj = tab[m, total]
    for it in range(max_iters):
        if use_bland:
            col = _K.price_bland(tab[m, :], allow_cols, PIVOT_TOL)
        else:
            col = _K.price_dantzig(tab[m, :], allow_cols, PIVOT_TOL)
        if col < 0:
            return "optimal", it
        row = _K.ratio_test(tab, m, col, total, basis, PIVOT_TOL)
        if row < 0:
            return "unbounded", it
        _K.pivot(tab, row, col)
        basis[row] = col
        obj = tab[m, total]
        if obj > last_obj - 1e-12:
            stall += 1
            if stall > m + 10:
                use_bland = True
        else:
            stall = 0
            use_bland = False
        last_obj = obj
    return "limit", max_iters


def check_lp_optimality(m: Model, sol: LPSolution) -> float:
    """Max primal violation of an LP solution over rows and bounds."""
    if sol.x is None:
        return math.inf
    _, _, A, senses, b, lb, ub = model_arrays(m)
    worst = max(float(np.max(lb - sol.x, initial=0.0)), float(np.max(sol.x - ub, initial=0.0)))
    if len(b):
        lhs = A @ sol.x
        for i, s in enumerate(senses):
            if s == "<=":
                worst = max(worst, lhs[i] - b[i])
            elif s == ">=":
                worst = max(worst, b[i] - lhs[i])
            else:
                worst = max(worst, abs(lhs[i] - b[i]))
    return worst
