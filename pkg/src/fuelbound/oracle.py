"""Independent ground truth at micro scale.

The oracle enumerates every outage schedule (start weeks within the tightened
windows, cycle order respected, scheduling rules checked by direct
evaluation), solves the inner continuous problem for each schedule with
scipy's LP solver, and takes the minimum.  It shares no model-building or
simplex code with the primary solver, which is the point: agreement between
``solve_mip(build_v0(...))`` and ``oracle_optimum(ct6='off')`` certifies both.

``ct6='exact'`` additionally enforces the decreasing production profile:
during each campaign either the stock never falls below the threshold, or it
crosses it at an enumerated step, from which production follows the profile
deterministically (forward simulation) until the outage.  The profile is
absorbing: once below the threshold it governs to the end of the campaign.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .instance import Instance
from .preprocess import TightenedWindows, tighten_time_windows


class OracleCapExceeded(Exception):
    pass


class OracleInfeasible(Exception):
    pass


# ---------------------------------------------------------------------------
# schedule enumeration
# ---------------------------------------------------------------------------


def _unit_choices(inst, windows, uid, K):
    """Per-cycle start-week choices (None = not operated)."""
    W = inst.grid.W
    out = []
    for k in range(0, K + 1):
        if windows.is_removed(uid, k):
            out.append([None])
            continue
        lo, hi = windows.window(uid, k)
        weeks = list(range(lo, min(hi, W) + 1))
        if hi > W:
            weeks.append(None)  # window extends past the horizon: optional
        out.append(weeks)
    return out


def enumerate_schedules(inst: Instance, windows: TightenedWindows | None = None, cap: int = 10**6):
    """Yield every schedule assignment {(uid, k) -> start week or None}.

    Start weeks range over the (tightened) windows; the cycle order is
    enforced (an outage needs its predecessor finished, and operating k+1
    requires operating k); scheduling rules CT14..CT21 are evaluated directly
    on the induced step values.  Refuses when the raw product of window
    widths exceeds ``cap``.
    """
    if windows is None:
        windows = tighten_time_windows(inst)
    per_unit = []
    total = 1
    for u in inst.t2_units:
        choices = _unit_choices(inst, windows, u.uid, u.K)
        for c in choices:
            total *= len(c)
        if total > cap:
            raise OracleCapExceeded(f"schedule space {total} exceeds cap {cap}")
        per_unit.append((u, choices))

    def unit_chains(u, choices):
        chains = []

        def rec(k, prefix):
            if k > u.K:
                chains.append(tuple(prefix))
                return
            for start in choices[k]:
                if start is None:
                    # not operated: every later cycle must be unoperated too
                    chains.append(tuple(prefix + [None] * (u.K - k + 1)))
                    continue
                if k > 0:
                    prev = prefix[-1]
                    if prev is None or start < prev + u.cycle(k - 1).da:
                        continue
                rec(k + 1, prefix + [start])

        rec(0, [])
        return chains

    all_chains = [unit_chains(u, choices) for u, choices in per_unit]
    for combo in itertools.product(*all_chains):
        schedule = {}
        for (u, _), chain in zip(per_unit, combo):
            for k, start in enumerate(chain):
                schedule[(u.uid, k)] = start
        if _schedule_rules_ok(inst, schedule):
            yield schedule


def _dval(schedule, uid, k, w) -> int:
    """Step value of the induced schedule (0 outside, saturating monotone)."""
    start = schedule.get((uid, k))
    if start is None:
        return 0
    return 1 if start <= w else 0


def _schedule_rules_ok(inst: Instance, schedule) -> bool:
    """Direct evaluation of the scheduling rules on fixed start weeks."""
    W = inst.grid.W
    for c in inst.constraints:
        da = {m: inst.t2_by_id(m[0]).cycle(m[1]).da for m in c.members}
        if c.kind in ("CT15", "CT21") and c.window:
            weeks = range(c.window[0], c.window[1] + 1)
        else:
            weeks = range(1, W + 1)
        for w in weeks:
            if c.kind in ("CT14", "CT15"):
                lhs = 0
                for uid, k in c.members:
                    off = max(0, da[(uid, k)] + c.spacing)
                    if off:
                        lhs += _dval(schedule, uid, k, w) - _dval(schedule, uid, k, w - off)
                if lhs > 1:
                    return False
            elif c.kind == "CT16":
                lhs = sum(
                    _dval(schedule, uid, k, w) - _dval(schedule, uid, k, w - c.spacing)
                    for uid, k in c.members
                )
                if lhs > 1:
                    return False
            elif c.kind == "CT17":
                lhs = sum(
                    _dval(schedule, uid, k, w - da[(uid, k)])
                    - _dval(schedule, uid, k, w - da[(uid, k)] - c.spacing)
                    for uid, k in c.members
                )
                if lhs > 1:
                    return False
            elif c.kind == "CT18":
                lhs = 0
                for uid, k in c.members:
                    lhs += _dval(schedule, uid, k, w) - _dval(schedule, uid, k, w - c.spacing)
                    lhs += _dval(schedule, uid, k, w - da[(uid, k)]) - _dval(
                        schedule, uid, k, w - da[(uid, k)] - c.spacing
                    )
                if lhs > 1:
                    return False
            elif c.kind == "CT19":
                lhs = 0
                for idx, (uid, k) in enumerate(c.members):
                    off, use = c.offsets[idx], c.lengths[idx]
                    lhs += _dval(schedule, uid, k, w - off) - _dval(
                        schedule, uid, k, w - off - use
                    )
                if lhs > c.capacity:
                    return False
            elif c.kind == "CT20":
                lhs = sum(
                    _dval(schedule, uid, k, w) - _dval(schedule, uid, k, w - da[(uid, k)])
                    for uid, k in c.members
                )
                if lhs > c.weekly_cap[w - 1]:
                    return False
            elif c.kind == "CT21":
                lhs = 0.0
                for uid, k in c.members:
                    coef = sum(
                        inst.t2_by_id(uid).pmax[t] for t in inst.grid.week_steps(w)
                    )
                    lhs += coef * (
                        _dval(schedule, uid, k, w) - _dval(schedule, uid, k, w - da[(uid, k)])
                    )
                if lhs > c.max_offline[w - c.window[0]] + 1e-9:
                    return False
    return True


def campaign_steps(inst: Instance, schedule, uid: str, k: int) -> list[int]:
    """Production steps of cycle k under the fixed schedule (empty if idle)."""
    start = schedule.get((uid, k))
    if start is None:
        return []
    u = inst.t2_by_id(uid)
    first_week = start + u.cycle(k).da
    nxt = schedule.get((uid, k + 1))
    last_week = inst.grid.W if nxt is None else nxt - 1
    return [
        t
        for t in range(inst.grid.T)
        if first_week <= inst.grid.step_week[t] <= last_week
    ]


# ---------------------------------------------------------------------------
# inner continuous problem for one schedule
# ---------------------------------------------------------------------------


class _Affine:
    __slots__ = ("terms", "const")

    def __init__(self, const=0.0, terms=None):
        self.const = const
        self.terms = dict(terms or {})

    def plus(self, other, scale=1.0):
        out = _Affine(self.const + scale * other.const, self.terms)
        for j, c in other.terms.items():
            out.terms[j] = out.terms.get(j, 0.0) + scale * c
        return out

    def shift(self, c):
        return _Affine(self.const + c, self.terms)

    def scale(self, f):
        return _Affine(f * self.const, {j: f * c for j, c in self.terms.items()})


def _profile_cap(profile, stock: float) -> float:
    """Concave piecewise-linear cap ratio at a stock level, clamped to [0,1]."""
    cap = math.inf
    for m in range(1, len(profile)):
        f0, c0 = profile[m - 1]
        f1, c1 = profile[m]
        slope = (c0 - c1) / (f0 - f1)
        cap = min(cap, slope * (stock - f1) + c1)
    return max(0.0, min(1.0, cap))


def _simulate_tail(inst, u, cyc, steps, start_stock):
    """Deterministic profile-following production from a crossing point."""
    prods, stock = [], start_stock
    for t in steps:
        ff = inst.grid.fuel_factors[t]
        p = u.pmax[t] * _profile_cap(cyc.profile, stock)
        if ff > 0:
            p = min(p, stock / ff)
        p = max(p, 0.0)
        stock -= ff * p
        prods.append(p)
    return prods, stock


@dataclass
class _LP:
    nvar: int = 0
    cost: list = field(default_factory=list)
    lo: list = field(default_factory=list)
    hi: list = field(default_factory=list)
    A_ub: list = field(default_factory=list)
    b_ub: list = field(default_factory=list)
    A_eq: list = field(default_factory=list)
    b_eq: list = field(default_factory=list)

    def var(self, cost=0.0, lo=0.0, hi=math.inf) -> int:
        self.cost.append(cost)
        self.lo.append(lo)
        self.hi.append(hi)
        self.nvar += 1
        return self.nvar - 1

    def le(self, aff: _Affine, rhs: float):
        self.A_ub.append(dict(aff.terms))
        self.b_ub.append(rhs - aff.const)

    def ge(self, aff: _Affine, rhs: float):
        self.le(aff.scale(-1.0), -rhs)

    def eq(self, aff: _Affine, rhs: float):
        self.A_eq.append(dict(aff.terms))
        self.b_eq.append(rhs - aff.const)

    def solve(self):
        def dense(rows):
            M = np.zeros((len(rows), self.nvar))
            for i, row in enumerate(rows):
                for j, c in row.items():
                    M[i, j] = c
            return M

        res = linprog(
            np.array(self.cost) if self.nvar else np.zeros(1),
            A_ub=dense(self.A_ub) if self.A_ub else None,
            b_ub=np.array(self.b_ub) if self.A_ub else None,
            A_eq=dense(self.A_eq) if self.A_eq else None,
            b_eq=np.array(self.b_eq) if self.A_eq else None,
            bounds=list(zip(self.lo, self.hi)) if self.nvar else [(0, 0)],
            method="highs",
        )
        if res.status == 0:
            return float(res.fun)
        if res.status == 2:
            return None
        raise RuntimeError(f"oracle inner LP ended with status {res.status}")


def _inner_value(inst: Instance, schedule, ct6: str, policy=None) -> float | None:
    """Cost of the inner continuous problem at a fixed schedule.

    ``policy`` maps (uid, k, sid) to 'never' or a crossing position within
    the campaign (only for ct6='exact').  Returns None when infeasible.
    """
    g = inst.grid
    wt1 = inst.weight_sum
    lp = _LP()

    rvar = {}
    for u in inst.t2_units:
        for k in range(1, u.K + 1):
            if schedule.get((u.uid, k)) is not None:
                c = u.cycle(k)
                rvar[(u.uid, k)] = lp.var(
                    cost=wt1 * c.refuel_cost, lo=c.rmin, hi=c.rmax
                )

    # thermal production with energy cost
    p1 = {}
    for u in inst.t1_units:
        for si, s in enumerate(inst.scenarios):
            for t in range(g.T):
                p1[(u.uid, s.sid, t)] = lp.var(
                    cost=s.weight * u.cost[si][t] * g.durations[t],
                    lo=u.pmin[si][t],
                    hi=u.pmax[si][t],
                )

    forced = {}  # (sid, t) -> forced production constant
    stock_value_terms = []  # (affine, weight) for the end-stock valuation

    feasible = True
    p2 = {}
    for u in inst.t2_units:
        k_last = max(
            (k for k in range(0, u.K + 1) if schedule.get((u.uid, k)) is not None),
            default=None,
        )
        for s in inst.scenarios:
            xinit = _Affine(const=u.xi)
            for k in range(0, u.K + 1):
                cyc = u.cycle(k)
                steps = campaign_steps(inst, schedule, u.uid, k)
                burn = _Affine()
                cross = policy.get((u.uid, k, s.sid)) if policy else None
                if ct6 == "exact" and steps and schedule.get((u.uid, k)) is not None:
                    if cross == "never":
                        run = xinit
                        for t in steps:
                            lp.ge(run, cyc.bo)
                            j = lp.var(hi=u.pmax[t])
                            p2[(u.uid, k, s.sid, t)] = j
                            run = run.plus(_Affine(terms={j: g.fuel_factors[t]}), -1.0)
                            burn = burn.plus(_Affine(terms={j: g.fuel_factors[t]}))
                        lp.ge(run, cyc.bo)  # stock stays above threshold throughout
                    else:
                        pos = int(cross)
                        run = xinit
                        for t in steps[:pos]:
                            lp.ge(run, cyc.bo)
                            j = lp.var(hi=u.pmax[t])
                            p2[(u.uid, k, s.sid, t)] = j
                            run = run.plus(_Affine(terms={j: g.fuel_factors[t]}), -1.0)
                            burn = burn.plus(_Affine(terms={j: g.fuel_factors[t]}))
                        lp.eq(run, cyc.bo)  # crossing pinned at the threshold
                        prods, _ = _simulate_tail(inst, u, cyc, steps[pos:], cyc.bo)
                        for t, pconst in zip(steps[pos:], prods):
                            forced[(s.sid, t)] = forced.get((s.sid, t), 0.0) + pconst
                            burn = burn.shift(g.fuel_factors[t] * pconst)
                else:
                    for t in steps:
                        j = lp.var(hi=u.pmax[t])
                        p2[(u.uid, k, s.sid, t)] = j
                        burn = burn.plus(_Affine(terms={j: g.fuel_factors[t]}))
                xfin = xinit.plus(burn, -1.0)
                lp.le(xinit, cyc.smax)
                lp.ge(xinit, 0.0)
                lp.ge(xfin, 0.0)
                if k < u.K and schedule.get((u.uid, k + 1)) is not None:
                    lp.le(xfin, cyc.amax)
                if k == k_last:
                    stock_value_terms.append((xfin, s.weight * u.stock_value, u.uid, s.sid))
                if k < u.K:
                    nxt = u.cycle(k + 1)
                    r_aff = _Affine()
                    if (u.uid, k + 1) in rvar:
                        r_aff = _Affine(terms={rvar[(u.uid, k + 1)]: 1.0})
                    xinit = (
                        xfin.plus(_Affine(const=-cyc.bo))
                        .scale(nxt.loss_ratio)
                        .plus(r_aff)
                        .shift(nxt.bo)
                    )

    # end-stock valuation enters the objective through its affine expression
    for aff, weight, _, _ in stock_value_terms:
        for j, coef in aff.terms.items():
            lp.cost[j] -= weight * coef

    const_cost = -sum(weight * aff.const for aff, weight, _, _ in stock_value_terms)

    # demand covering, net of any profile-forced production
    for s in inst.scenarios:
        for t in range(g.T):
            aff = _Affine()
            for u in inst.t2_units:
                for k in range(0, u.K + 1):
                    j = p2.get((u.uid, k, s.sid, t))
                    if j is not None:
                        aff = aff.plus(_Affine(terms={j: 1.0}))
            for u in inst.t1_units:
                aff = aff.plus(_Affine(terms={p1[(u.uid, s.sid, t)]: 1.0}))
            rhs = s.demand[t] - forced.get((s.sid, t), 0.0)
            if not aff.terms and abs(rhs) > 1e-9:
                return None
            lp.eq(aff, rhs)

    val = lp.solve()
    if val is None:
        return None
    return val + const_cost


def _crossing_policies(inst, schedule, cap=200000):
    """All crossing-policy combinations for ct6='exact'."""
    keys, options = [], []
    for u in inst.t2_units:
        for k in range(0, u.K + 1):
            steps = campaign_steps(inst, schedule, u.uid, k)
            if not steps:
                continue
            for s in inst.scenarios:
                keys.append((u.uid, k, s.sid))
                options.append(["never"] + list(range(len(steps))))
    total = 1
    for o in options:
        total *= len(o)
        if total > cap:
            raise OracleCapExceeded(f"crossing policies {total} exceed cap {cap}")
    for combo in itertools.product(*options):
        yield dict(zip(keys, combo))


@dataclass
class OracleResult:
    value: float
    schedule: dict
    evaluated: int


def oracle_search(
    inst: Instance,
    ct6: str = "off",
    windows: TightenedWindows | None = None,
    cap: int = 10**6,
) -> OracleResult:
    if ct6 not in ("off", "exact"):
        raise ValueError(f"unknown ct6 mode {ct6!r}")
    best, best_schedule, n = math.inf, None, 0
    for schedule in enumerate_schedules(inst, windows, cap):
        n += 1
        if ct6 == "off":
            val = _inner_value(inst, schedule, "off")
            if val is not None and val < best:
                best, best_schedule = val, dict(schedule)
        else:
            for policy in _crossing_policies(inst, schedule):
                val = _inner_value(inst, schedule, "exact", policy)
                if val is not None and val < best:
                    best, best_schedule = val, dict(schedule)
    if best_schedule is None:
        raise OracleInfeasible(f"all {n} schedules infeasible")
    return OracleResult(best, best_schedule, n)


def oracle_optimum(inst, ct6="off", windows=None, cap=10**6) -> float:
    """Minimum cost over all schedules; exact stretch simulation when asked."""
    return oracle_search(inst, ct6, windows, cap).value


# ---------------------------------------------------------------------------
# the repo's core regression gate: every proved ordering, one instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainCheck:
    name: str
    ok: bool
    lhs: float
    rhs: float
    note: str = ""


@dataclass(frozen=True)
class ChainReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def render(self) -> str:
        lines = []
        for c in self.checks:
            status = "ok" if c.ok else "VIOLATED"
            note = f"  ({c.note})" if c.note else ""
            lines.append(f"{c.name}: {c.lhs:.10g} <= {c.rhs:.10g}  {status}{note}")
        return "\n".join(lines) + "\n"


def _leq(a, b, tol=1e-8):
    return a <= b + tol * max(1.0, abs(a), abs(b))


def check_relaxation_chain(inst: Instance, cap: int = 10**6) -> ChainReport:
    """Solve every relaxation of one micro instance and assert the proved
    orderings: aggregate-outage bounds, weekly aggregation (skipped when its
    hypothesis fails), scenario decomposition, and oracle equivalence."""
    from .bnb import solve_mip
    from .formulations import build_v0, build_v3, build_v3_k0
    from .transforms import (
        ScenarioPartition,
        aggregate_time_steps,
        check_weekly_cost_hypothesis,
        partition_scenarios,
    )

    windows = tighten_time_windows(inst)
    checks = []
    v0 = solve_mip(build_v0(inst, windows=windows))
    if v0.status != "optimal":
        return ChainReport((ChainCheck("v0 solve", False, math.nan, math.nan, v0.status),))
    vsto = v0.value

    v3 = solve_mip(build_v3(inst))
    checks.append(ChainCheck("v3 <= v0", _leq(v3.value, vsto), v3.value, vsto))
    for k0 in range(0, inst.t2_units[0].K + 1 if inst.t2_units else 0):
        vk = solve_mip(build_v3_k0(inst, k0, windows=windows))
        checks.append(
            ChainCheck(f"v3(k0={k0}) <= v0", _leq(vk.value, vsto), vk.value, vsto)
        )

    cert = check_weekly_cost_hypothesis(inst)
    if cert.holds:
        va = solve_mip(build_v0(aggregate_time_steps(inst)))
        checks.append(ChainCheck("aggregated <= v0", _leq(va.value, vsto), va.value, vsto))
    else:
        checks.append(
            ChainCheck("aggregated <= v0", True, math.nan, vsto, "skipped: " + cert.describe())
        )

    subs = partition_scenarios(inst, ScenarioPartition.singletons(inst))
    dets = sum(solve_mip(build_v0(s)).value for s in subs)
    checks.append(ChainCheck("sum det <= v0", _leq(dets, vsto), dets, vsto))
    if inst.S > 1:
        half = ScenarioPartition(
            (
                tuple(s.sid for s in inst.scenarios[: inst.S // 2]),
                tuple(s.sid for s in inst.scenarios[inst.S // 2 :]),
            )
        )
        mid = sum(
            solve_mip(build_v0(s)).value for s in partition_scenarios(inst, half)
        )
        checks.append(ChainCheck("sum det <= partition", _leq(dets, mid), dets, mid))
        checks.append(ChainCheck("partition <= v0", _leq(mid, vsto), mid, vsto))

    ov = oracle_optimum(inst, "off", windows=windows, cap=cap)
    agree = abs(ov - vsto) <= 1e-7 * max(1.0, abs(ov))
    checks.append(ChainCheck("oracle == v0", agree, vsto, ov))
    return ChainReport(tuple(checks))
