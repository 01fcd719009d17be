"""LP-based branch and bound with valid dual bounds at any truncation point.

Node selection is best-bound (ties by insertion order), branching picks the
most fractional binary with outage step variables preferred and lowest index
breaking remaining ties.  Truncated searches (node or time limits) report the
best bound over open nodes, which is a certified lower bound of the optimum;
this is exactly how truncated runs are used to produce dual bounds.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

from .model import Model
from .simplex import solve_model_lp

INT_TOL = 1e-6


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | unbounded | limit_reached
    value: float | None  # incumbent objective (primal)
    bound: float  # certified dual (lower) bound
    solution: dict | None  # variable name -> value
    nodes: int = 0
    elapsed: float = 0.0
    provenance: str = "internal"

    def gap(self) -> float | None:
        if self.value is None or not math.isfinite(self.bound):
            return None
        denom = max(1.0, abs(self.value))
        return (self.value - self.bound) / denom


def _named_solution(m: Model, x) -> dict:
    return {v.name: float(x[v.vid]) for v in m.variables}


def solve_lp(m: Model) -> SolveResult:
    """The LP relaxation as a SolveResult (integrality dropped)."""
    t0 = time.perf_counter()
    sol = solve_model_lp(m)
    dt = time.perf_counter() - t0
    if sol.status == "optimal":
        return SolveResult("optimal", sol.value, sol.value, _named_solution(m, sol.x), 1, dt)
    if sol.status == "infeasible":
        return SolveResult("infeasible", None, math.inf, None, 1, dt)
    if sol.status == "unbounded":
        return SolveResult("unbounded", None, -math.inf, None, 1, dt)
    return SolveResult("limit_reached", None, -math.inf, None, 1, dt)


def _branch_var(m: Model, x) -> int:
    """Most fractional unfixed binary; step variables first, lowest id ties."""
    best = -1
    best_step = False
    best_frac = -1.0
    for v in m.variables:
        if v.kind != "B" or v.fixed:
            continue
        val = x[v.vid]
        if abs(val - round(val)) <= INT_TOL:
            continue
        score = 0.5 - abs(val - math.floor(val) - 0.5)  # closeness to 0.5
        if v.is_step and not best_step:
            better = True
        elif best_step and not v.is_step:
            better = False
        else:
            better = score > best_frac + 1e-15
        if best < 0 or better:
            best, best_step, best_frac = v.vid, v.is_step, score
    return best


def solve_mip(m: Model, node_limit: int | None = None, time_limit: float | None = None) -> SolveResult:
    """Exact optimum when limits are not hit; otherwise a valid dual bound."""
    t0 = time.perf_counter()
    root = solve_model_lp(m)
    nodes = 1
    if root.status == "infeasible":
        return SolveResult("infeasible", None, math.inf, None, nodes, time.perf_counter() - t0)
    if root.status in ("unbounded", "limit"):
        status = "unbounded" if root.status == "unbounded" else "limit_reached"
        return SolveResult(status, None, -math.inf, None, nodes, time.perf_counter() - t0)

    incumbent = None
    incumbent_x = None
    heap = []  # (bound, seq, overrides dict)
    seq = 0

    def push(bound, overrides):
        nonlocal seq
        heapq.heappush(heap, (bound, seq, overrides))
        seq += 1

    def handle(sol, overrides):
        nonlocal incumbent, incumbent_x
        j = _branch_var(m, sol.x)
        if j < 0:  # integral
            if incumbent is None or sol.value < incumbent - 1e-12:
                incumbent = sol.value
                incumbent_x = sol.x.copy()
            return
        val = sol.x[j]
        lo = dict(overrides)
        lo[j] = (0.0, math.floor(val))
        hi = dict(overrides)
        hi[j] = (math.ceil(val), 1.0)
        push(sol.value, lo)
        push(sol.value, hi)

    handle(root, {})

    def open_bound():
        return heap[0][0] if heap else math.inf

    truncated = False
    while heap:
        if incumbent is not None and open_bound() >= incumbent - 1e-9:
            heap.clear()
            break
        if node_limit is not None and nodes >= node_limit:
            truncated = True
            break
        if time_limit is not None and time.perf_counter() - t0 >= time_limit:
            truncated = True
            break
        bound, _, overrides = heapq.heappop(heap)
        sol = solve_model_lp(m, overrides)
        nodes += 1
        if sol.status == "infeasible":
            continue
        if sol.status in ("unbounded", "limit"):
            # abandon the search but keep this subtree's bound in the open set
            # so the reported dual bound stays valid
            push(bound, overrides)
            truncated = True
            break
        if incumbent is not None and sol.value >= incumbent - 1e-9:
            continue
        handle(sol, overrides)

    elapsed = time.perf_counter() - t0
    if truncated:
        bound = min(open_bound(), incumbent if incumbent is not None else math.inf)
        status = "limit_reached"
        sol_dict = _named_solution(m, incumbent_x) if incumbent_x is not None else None
        return SolveResult(status, incumbent, bound, sol_dict, nodes, elapsed)
    if incumbent is None:
        return SolveResult("infeasible", None, math.inf, None, nodes, elapsed)
    return SolveResult("optimal", incumbent, incumbent, _named_solution(m, incumbent_x), nodes, elapsed)
