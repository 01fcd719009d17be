"""Exact, value-preserving reductions applied before building any model.

Three reductions live here:

* minimal campaign lengths implied by refuel floors and the residual-stock
  ceiling required to start the next outage,
* time-window tightening by forward/backward propagation of those lengths
  (outages whose earliest completion falls past the horizon are removed,
  i.e. pinned to "never operated"),
* closed-form elimination of the per-cycle stock variables: each
  campaign-start and campaign-end stock is an affine expression over refuel
  quantities and production variables of earlier cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .instance import Instance, T2Unit


class StructuralInfeasibility(Exception):
    """The instance cannot be scheduled no matter the decisions."""


# ---------------------------------------------------------------------------
# minimal campaign lengths and window tightening
# ---------------------------------------------------------------------------


def compute_lmin(inst: Instance) -> dict:
    """Minimal campaign length, in weeks, per (unit id, k).

    A campaign starts with at least the cycle's minimal refuel on board and
    must end below the residual ceiling ``amax`` before the next outage, so
    it needs at least ceil((rmin - amax) / weekly burn capacity) weeks,
    clamped at 0.  The initial cycle uses the (fixed) initial stock as its
    refuel floor.
    """
    dw = inst.grid.max_week_fuel()
    out = {}
    for u in inst.t2_units:
        p_i = max(u.pmax)
        for c in u.cycles:
            need = c.rmin - c.amax
            if need <= 0:
                out[(u.uid, c.k)] = 0
                continue
            if dw * p_i <= 0:
                raise StructuralInfeasibility(
                    f"unit {u.uid} cycle {c.k}: mandatory fuel {need:g} can never be burnt"
                )
            out[(u.uid, c.k)] = max(0, math.ceil(need / (dw * p_i)))
    return out


@dataclass(frozen=True)
class TightenedWindows:
    to: dict  # (uid, k) -> tightened first start week
    ta: dict  # (uid, k) -> tightened last start week
    removed: frozenset  # (uid, k) never operated (earliest completion past W)
    lmin: dict
    infeasible: tuple = ()  # (uid, k) with an empty window but not removable

    def window(self, uid: str, k: int):
        return self.to[(uid, k)], self.ta[(uid, k)]

    def is_removed(self, uid: str, k: int) -> bool:
        return (uid, k) in self.removed


def raw_windows(inst: Instance) -> TightenedWindows:
    """The untightened windows, in the same container (nothing removed)."""
    to, ta = {}, {}
    for u in inst.t2_units:
        for c in u.cycles:
            to[(u.uid, c.k)] = c.to
            ta[(u.uid, c.k)] = c.ta
    return TightenedWindows(to, ta, frozenset(), {k: 0 for k in to})


def tighten_time_windows(inst: Instance) -> TightenedWindows:
    """Forward/backward window propagation.

    Forward, with k increasing:  to~_k = max(to_k, to~_{k-1} + da_{k-1} + lmin_k).
    Backward, with k decreasing: ta~_k = min(ta_k, ta~_{k+1} - da_k - lmin_k),
    applied only when outage k+1 is forced within the horizon (an optional or
    removed successor imposes nothing on ta_k).  Outages that cannot complete
    within the horizon are moved to ``removed`` and their successors with them.
    """
    lmin = compute_lmin(inst)
    W = inst.grid.W
    to, ta, removed, infeasible = {}, {}, set(), []
    for u in inst.t2_units:
        K = u.K
        # forward pass
        prev_to = None
        prev_da = 0
        for c in u.cycles:
            t = c.to
            if prev_to is not None:
                t = max(t, prev_to + prev_da + lmin[(u.uid, c.k)])
            to[(u.uid, c.k)] = t
            prev_to, prev_da = t, c.da
        # removal: earliest completion past the horizon
        for c in u.cycles:
            start = to[(u.uid, c.k)]
            if start > W or start + max(c.da, 1) - 1 > W:
                removed.add((u.uid, c.k))
        # backward pass
        next_ta = None
        next_removed = True
        for c in reversed(u.cycles):
            t = c.ta
            if next_ta is not None and not next_removed and next_ta <= W:
                t = min(t, next_ta - c.da - lmin[(u.uid, c.k)])
            ta[(u.uid, c.k)] = t
            next_ta = t
            next_removed = (u.uid, c.k) in removed
        for c in u.cycles:
            key = (u.uid, c.k)
            if key not in removed and to[key] > ta[key]:
                infeasible.append(key)
    return TightenedWindows(to, ta, frozenset(removed), lmin, tuple(infeasible))


def free_binary_count(inst: Instance, windows: TightenedWindows) -> int:
    """Number of unfixed outage step variables under the given windows."""
    W = inst.grid.W
    total = 0
    for u in inst.t2_units:
        for c in u.cycles:
            if windows.is_removed(u.uid, c.k):
                continue
            lo, hi = windows.window(u.uid, c.k)
            if hi <= W:
                total += max(0, hi - lo)  # d fixed to 1 from ta~ on
            else:
                total += max(0, min(hi, W) - lo + 1)  # optional outage
    return total


def preprocess_report(inst: Instance) -> str:
    """Human-readable before/after table for the preprocess CLI subcommand."""
    raw = raw_windows(inst)
    tight = tighten_time_windows(inst)
    lines = ["unit\tk\tto\tta\tto~\tta~\tlmin\tstatus"]
    for u in inst.t2_units:
        for c in u.cycles:
            key = (u.uid, c.k)
            status = "removed" if key in tight.removed else ""
            if key in tight.infeasible:
                status = "infeasible"
            lines.append(
                f"{u.uid}\t{c.k}\t{c.to}\t{c.ta}\t{tight.to[key]}\t{tight.ta[key]}"
                f"\t{tight.lmin[key]}\t{status}"
            )
    nb0 = free_binary_count(inst, raw)
    nb2 = free_binary_count(inst, tight)
    lines.append(f"binaries\t{nb0}\t->\t{nb2}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# stock-variable elimination
# ---------------------------------------------------------------------------


@dataclass
class AffineExpr:
    """Affine expression over named symbols, used for eliminated stocks.

    Symbols are ``('r', uid, k)`` for refuels and ``('p', uid, k, sid, t)``
    for cycle-duplicated production.
    """

    terms: dict = field(default_factory=dict)
    const: float = 0.0

    def add(self, key, coef: float):
        if coef != 0.0:
            new = self.terms.get(key, 0.0) + coef
            if new == 0.0:
                self.terms.pop(key, None)
            else:
                self.terms[key] = new
        return self

    def scaled(self, factor: float) -> "AffineExpr":
        return AffineExpr({k: factor * v for k, v in self.terms.items()}, factor * self.const)

    def plus(self, other: "AffineExpr", factor: float = 1.0) -> "AffineExpr":
        out = AffineExpr(dict(self.terms), self.const)
        for k, v in other.terms.items():
            out.add(k, factor * v)
        out.const += factor * other.const
        return out

    def evaluate(self, values: dict) -> float:
        return self.const + sum(c * values.get(k, 0.0) for k, c in self.terms.items())


def retention_product(unit: T2Unit, m: int, n: int) -> float:
    """Product of (q_l - 1)/q_l over cycles l = m..n (1 when m > n)."""
    out = 1.0
    for l in range(m, n + 1):
        q = unit.cycle(l).q
        if q == 0.0:
            raise ZeroDivisionError(f"unit {unit.uid} cycle {l}: q = 0")
        out *= (q - 1.0) / q
    return out


@dataclass(frozen=True)
class StockEliminationPlan:
    """Closed-form campaign-start/end stocks per (unit, k) for one scenario."""

    sid: str
    xinit: dict  # (uid, k) -> AffineExpr
    xfin: dict  # (uid, k) -> AffineExpr


def _burn_expr(inst: Instance, uid: str, k: int, sid: str) -> AffineExpr:
    e = AffineExpr()
    for t in range(inst.grid.T):
        e.add(("p", uid, k, sid, t), inst.grid.fuel_factors[t])
    return e


def stock_elimination_coefficients(inst: Instance, sid: str) -> StockEliminationPlan:
    """Affine expressions for every campaign-start/end stock of scenario ``sid``.

    Unrolling the refueling recursion (start stock of cycle k = threshold +
    refuel + retention-loss term on the previous campaign-end excess) gives

        xinit_k = q_{1,k} xi
                + sum_{l=0}^{k-1} q_{l+2,k} (bo_{l+1} + r_{l+1}
                                             - q_{l+1,l+1} (burn_l + bo_l))

    with q_{m,n} the product of (q-1)/q over cycles m..n.  The published
    closed form misses the bo constants (it agrees only when every threshold
    is zero); the version here is the one that satisfies the recursion
    identically, checked against forward simulation.
    """
    xinit, xfin = {}, {}
    for u in inst.t2_units:
        for c in u.cycles:
            k = c.k
            e = AffineExpr(const=retention_product(u, 1, k) * u.xi)
            for l in range(0, k):
                outer = retention_product(u, l + 2, k)
                qll = retention_product(u, l + 1, l + 1)
                nxt = u.cycle(l + 1)
                e.const += outer * nxt.bo
                e.add(("r", u.uid, l + 1), outer)
                burn = _burn_expr(inst, u.uid, l, sid)
                e = e.plus(burn, -outer * qll)
                e.const -= outer * qll * u.cycle(l).bo
            xinit[(u.uid, k)] = e
            xfin[(u.uid, k)] = e.plus(_burn_expr(inst, u.uid, k, sid), -1.0)
    return StockEliminationPlan(sid, xinit, xfin)


def simulate_stocks(inst: Instance, uid: str, sid: str, refuels: dict, production: dict):
    """Forward simulation of the stock recursion; the oracle for the closed form.

    ``refuels``: k -> r value (k >= 1); ``production``: (k, t) -> power.
    Returns (xinit list, xfin list) indexed by k.
    """
    u = inst.t2_by_id(uid)
    ff = inst.grid.fuel_factors
    xinit, xfin = [], []
    for c in u.cycles:
        if c.k == 0:
            start = u.xi
        else:
            prev = u.cycle(c.k - 1)
            start = c.bo + refuels.get(c.k, 0.0) + c.loss_ratio * (xfin[-1] - prev.bo)
        burn = sum(ff[t] * production.get((c.k, t), 0.0) for t in range(inst.grid.T))
        xinit.append(start)
        xfin.append(start - burn)
    return xinit, xfin
