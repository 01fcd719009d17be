"""Builders translating an Instance into the relaxation MIPs.

Four formulations are built here, all minimizing expected production cost
(refuel cost plus thermal energy cost minus the value of residual fuel):

* ``v0``   - step binaries d[i,k,w] for outage starts, cycle-duplicated
  production, explicit stock recursion; the stretch and modulation
  restrictions stay relaxed.
* ``v0`` + light stretch caps - extra continuous stock-level variables and
  concave cap rows bounding production once the stock falls below the
  threshold (per-cycle rows, or shared rows when the profile does not depend
  on the cycle).
* ``v3``   - every outage aggregated to a single operated/not binary; no
  null-production phases, fuel accounting collapsed to one inequality per
  unit and scenario.
* ``v3(k0)`` - cycles up to k0 modeled exactly as in v0, later cycles
  aggregated as in v3.

Every constraint row carries its family tag, so models can be audited row
count by row count.  Builders are pure: same instance, config and windows
give bit-identical models.
"""

from __future__ import annotations

from dataclasses import dataclass

from .instance import Instance
from .model import LinExpr, Model
from .preprocess import (
    StockEliminationPlan,
    TightenedWindows,
    stock_elimination_coefficients,
    tighten_time_windows,
)


class BuildError(Exception):
    pass


@dataclass(frozen=True)
class RelaxationConfig:
    formulation: str = "v0"  # v0 | v3 | v3k
    k0: int | None = None
    ct6_mode: str = "off"  # off | per_cycle | shared
    eliminate_stocks: bool = False

    def check(self, inst: Instance):
        if self.formulation not in ("v0", "v3", "v3k"):
            raise BuildError(f"unknown formulation {self.formulation!r}")
        if self.formulation == "v3k":
            K = inst.t2_units[0].K if inst.t2_units else 0
            if self.k0 is None or not (0 <= self.k0 <= K):
                raise BuildError(f"k0 must lie in [0, {K}]")
        if self.ct6_mode not in ("off", "per_cycle", "shared"):
            raise BuildError(f"unknown ct6 mode {self.ct6_mode!r}")
        if self.ct6_mode != "off" and self.formulation != "v0":
            raise BuildError("light stretch caps extend the v0 formulation only")
        if self.eliminate_stocks and self.formulation != "v0":
            raise BuildError("stock elimination applies to the v0 formulation only")


@dataclass
class BuildInfo:
    """Builder scratch kept on the model for post-hoc extensions and tests."""

    windows: TightenedWindows
    spans: dict  # (uid, k) -> tuple of steps
    dvars: dict  # (uid, k, w) -> vid
    k0: int | None = None
    plans: dict | None = None  # sid -> StockEliminationPlan when eliminated


# ---------------------------------------------------------------------------
# step-variable access with the out-of-range extension conventions
# ---------------------------------------------------------------------------


class _StepRef:
    """Evaluate d[i,k,w] as either a fixed constant or a model variable."""

    def __init__(self, inst, windows, dvars, k_max):
        self.inst = inst
        self.windows = windows
        self.dvars = dvars
        self.k_max = k_max  # step variables exist for k <= k_max

    def get(self, uid: str, k: int, w: int):
        """Returns ('const', 0|1) or ('var', vid)."""
        u = self.inst.t2_by_id(uid)
        if k > u.K or k > self.k_max:
            return ("const", 0)
        if k < 0:
            return ("const", 1 if w >= 0 else 0)
        if w < 1:
            return ("const", 0)
        if w > self.inst.grid.W:
            raise BuildError(f"step reference beyond horizon: ({uid},{k},{w})")
        if self.windows.is_removed(uid, k):
            return ("const", 0)
        lo, hi = self.windows.window(uid, k)
        if w < lo:
            return ("const", 0)
        if hi <= self.inst.grid.W and w >= hi:
            return ("const", 1)
        key = (uid, k, w)
        if key in self.dvars:
            return ("var", self.dvars[key])
        raise BuildError(f"missing step variable d[{uid},{k},{w}]")

    def add(self, expr: LinExpr, uid, k, w, coef: float):
        kind, val = self.get(uid, k, w)
        if kind == "const":
            expr.add_const(coef * val)
        else:
            expr.add(val, coef)

    def value(self, uid, k, w, solution: dict) -> float:
        kind, val = self.get(uid, k, w)
        if kind == "const":
            return float(val)
        name = f"d[{uid},{k},{w}]"
        return float(solution.get(name, 0.0))


def step_free_range(inst: Instance, windows: TightenedWindows, uid: str, k: int):
    """Weeks whose step variable is genuinely binary under the windows."""
    if windows.is_removed(uid, k):
        return range(0)
    W = inst.grid.W
    lo, hi = windows.window(uid, k)
    if hi <= W:
        return range(lo, hi)  # d fixed to 1 from hi on
    return range(lo, W + 1)  # optional outage: free through the horizon


def production_spans(inst: Instance, windows: TightenedWindows, k_cap: int | None = None) -> dict:
    """Steps where each cycle's campaign can be live.

    Weeks below the earliest campaign start or at/after the point where both
    the campaign-start step and the successor step are fixed contribute
    structurally zero production variables and are pruned.  When ``k_cap`` is
    given, cycle ``k_cap`` absorbs all later production and its span runs to
    the horizon.
    """
    W = inst.grid.W
    spans = {}
    for u in inst.t2_units:
        top = u.K if k_cap is None else min(u.K, k_cap)
        for c in u.cycles:
            k = c.k
            if k > top:
                continue
            if windows.is_removed(u.uid, k):
                spans[(u.uid, k)] = ()
                continue
            lo_w = windows.to[(u.uid, k)] + c.da
            if k == top and (k_cap is not None or k == u.K):
                hi_w = W
            else:
                succ = u.cycle(k + 1)
                ta_succ = windows.ta[(u.uid, k + 1)]
                if windows.is_removed(u.uid, k + 1) or ta_succ > W:
                    hi_w = W
                else:
                    ta_k = min(windows.ta[(u.uid, k)], W)
                    hi_w = min(W, max(ta_succ - 1, ta_k + c.da - 1))
            spans[(u.uid, k)] = tuple(
                t for t in range(inst.grid.T) if lo_w <= inst.grid.step_week[t] <= hi_w
            )
    return spans


# ---------------------------------------------------------------------------
# shared row emitters
# ---------------------------------------------------------------------------


def _emit(m: Model, expr: LinExpr, sense: str, rhs: float, tag: str):
    """Add a row unless it is a satisfied constant (violated constants stay:
    the solver reports them as infeasibility)."""
    if not expr.terms:
        lhs = expr.const
        ok = (
            (sense == "<=" and lhs <= rhs + 1e-12)
            or (sense == ">=" and lhs >= rhs - 1e-12)
            or (sense == "==" and abs(lhs - rhs) <= 1e-12)
        )
        if ok:
            return None
    return m.add_constraint(expr, sense, rhs, tag)


def schedule_constraint_rows(inst: Instance, dref: _StepRef, k_cap: int | None = None):
    """Rows of the common scheduling-constraint family, one per (c, w).

    Yields (expr, sense, rhs, tag).  Members with cycle index above ``k_cap``
    are dropped (their step terms are nonnegative, so dropping keeps the rows
    valid for the truncated variable set).
    """
    W = inst.grid.W
    for c in inst.constraints:
        members = [(uid, k) for uid, k in c.members if k_cap is None or k <= k_cap]
        da = {m: inst.t2_by_id(m[0]).cycle(m[1]).da for m in members}
        if c.kind in ("CT15", "CT21") and c.window:
            weeks = range(c.window[0], c.window[1] + 1)
        else:
            weeks = range(1, W + 1)
        for w in weeks:
            expr = LinExpr()
            if c.kind in ("CT14", "CT15"):
                for mem in members:
                    off = max(0, da[mem] + c.spacing)
                    if off == 0:
                        continue
                    dref.add(expr, mem[0], mem[1], w, 1.0)
                    dref.add(expr, mem[0], mem[1], w - off, -1.0)
                rhs = 1.0
            elif c.kind == "CT16":
                for mem in members:
                    dref.add(expr, mem[0], mem[1], w, 1.0)
                    dref.add(expr, mem[0], mem[1], w - c.spacing, -1.0)
                rhs = 1.0
            elif c.kind == "CT17":
                for mem in members:
                    dref.add(expr, mem[0], mem[1], w - da[mem], 1.0)
                    dref.add(expr, mem[0], mem[1], w - da[mem] - c.spacing, -1.0)
                rhs = 1.0
            elif c.kind == "CT18":
                for mem in members:
                    dref.add(expr, mem[0], mem[1], w, 1.0)
                    dref.add(expr, mem[0], mem[1], w - c.spacing, -1.0)
                    dref.add(expr, mem[0], mem[1], w - da[mem], 1.0)
                    dref.add(expr, mem[0], mem[1], w - da[mem] - c.spacing, -1.0)
                rhs = 1.0
            elif c.kind == "CT19":
                for idx, (uid, k) in enumerate(c.members):
                    if k_cap is not None and k > k_cap:
                        continue
                    off, use = c.offsets[idx], c.lengths[idx]
                    dref.add(expr, uid, k, w - off, 1.0)
                    dref.add(expr, uid, k, w - off - use, -1.0)
                rhs = float(c.capacity)
            elif c.kind == "CT20":
                for mem in members:
                    dref.add(expr, mem[0], mem[1], w, 1.0)
                    dref.add(expr, mem[0], mem[1], w - da[mem], -1.0)
                rhs = float(c.weekly_cap[w - 1])
            elif c.kind == "CT21":
                for mem in members:
                    coef = sum(
                        inst.t2_by_id(mem[0]).pmax[t]
                        for t in inst.grid.week_steps(w)
                    )
                    dref.add(expr, mem[0], mem[1], w, coef)
                    dref.add(expr, mem[0], mem[1], w - da[mem], -coef)
                rhs = float(c.max_offline[w - c.window[0]])
            else:
                raise BuildError(f"unknown scheduling kind {c.kind}")
            yield expr, "<=", rhs, c.kind


# ---------------------------------------------------------------------------
# the step-variable formulations: v0 and v3(k0)
# ---------------------------------------------------------------------------


def _objective(inst: Instance, m: Model, rvars, t1vars, xfvars) -> LinExpr:
    # first-stage refuel costs scale with the total scenario mass so that
    # scenario-subset instances price their share of stage-1 cost exactly
    wt1 = inst.weight_sum
    obj = LinExpr()
    for (uid, k), vid in rvars.items():
        cost = inst.t2_by_id(uid).cycle(k).refuel_cost
        obj.add(vid, wt1 * cost)
    for u in inst.t1_units:
        for si, s in enumerate(inst.scenarios):
            for t in range(inst.grid.T):
                obj.add(
                    t1vars[(u.uid, s.sid, t)],
                    s.weight * u.cost[si][t] * inst.grid.durations[t],
                )
    for u in inst.t2_units:
        for s in inst.scenarios:
            obj.add(xfvars[(u.uid, s.sid)], -s.weight * u.stock_value)
    return obj


class _StockAccess:
    """Campaign stock terms, either as model variables or eliminated
    closed-form expressions over refuels and production."""

    def __init__(self, m, inst, rvars, pvars, eliminate: bool):
        self.m = m
        self.inst = inst
        self.rvars = rvars
        self.pvars = pvars
        self.eliminate = eliminate
        self.vars_init = {}
        self.vars_fin = {}
        self.plans = {}
        if eliminate:
            for s in inst.scenarios:
                self.plans[s.sid] = stock_elimination_coefficients(inst, s.sid)

    def declare_init(self, uid, k, sid):
        if not self.eliminate:
            self.vars_init[(uid, k, sid)] = self.m.add_variable(f"xinit[{uid},{k},{sid}]")

    def declare_fin(self, uid, k, sid):
        if not self.eliminate:
            self.vars_fin[(uid, k, sid)] = self.m.add_variable(f"xfin[{uid},{k},{sid}]")

    def _lin(self, affine) -> LinExpr:
        e = LinExpr(const=affine.const)
        for key, coef in affine.terms.items():
            if key[0] == "r":
                e.add(self.rvars[(key[1], key[2])], coef)
            else:
                vid = self.pvars.get((key[1], key[2], key[3], key[4]))
                if vid is not None:  # pruned production vars are identically 0
                    e.add(vid, coef)
        return e

    def init(self, uid, k, sid) -> LinExpr:
        if self.eliminate:
            return self._lin(self.plans[sid].xinit[(uid, k)])
        return LinExpr({self.vars_init[(uid, k, sid)]: 1.0})

    def fin(self, uid, k, sid) -> LinExpr:
        if self.eliminate:
            return self._lin(self.plans[sid].xfin[(uid, k)])
        return LinExpr({self.vars_fin[(uid, k, sid)]: 1.0})


def _build_stepwise(inst, cfg, windows, k0: int | None, seal: bool) -> Model:
    """Common construction for v0 (k0 is None) and v3(k0)."""
    if windows is None:
        windows = tighten_time_windows(inst)
    g = inst.grid
    W, T = g.W, g.T
    name = "v0" if k0 is None else f"v3k{k0}"
    m = Model(
        name,
        meta={
            "formulation": "v0" if k0 is None else "v3k",
            "k0": k0,
            "ct6_mode": cfg.ct6_mode,
            "eliminate_stocks": cfg.eliminate_stocks,
            "scenarios": [s.sid for s in inst.scenarios],
        },
    )

    k_step = (10**9) if k0 is None else k0
    dvars = {}
    for u in inst.t2_units:
        for c in u.cycles:
            if c.k > k_step:
                continue
            for w in step_free_range(inst, windows, u.uid, c.k):
                dvars[(u.uid, c.k, w)] = m.add_variable(
                    f"d[{u.uid},{c.k},{w}]", kind="B", ub=1.0, is_step=True
                )
    dref = _StepRef(inst, windows, dvars, k_step)

    dkvars = {}
    if k0 is not None:
        for u in inst.t2_units:
            for k in range(k0 + 1, u.K + 1):
                dkvars[(u.uid, k)] = m.add_variable(f"dk[{u.uid},{k}]", kind="B", ub=1.0)

    def agg(expr, uid, k, coef):
        """Add the 'outage k operated' indicator to expr."""
        u = inst.t2_by_id(uid)
        if k > u.K:
            return
        if k0 is not None and k > k0:
            expr.add(dkvars[(uid, k)], coef)
        else:
            dref.add(expr, uid, k, W, coef)

    rvars = {}
    for u in inst.t2_units:
        for k in range(1, u.K + 1):
            rvars[(u.uid, k)] = m.add_variable(f"r[{u.uid},{k}]")

    spans = production_spans(inst, windows, k_cap=k0)
    pvars = {}
    for u in inst.t2_units:
        for c in u.cycles:
            if (u.uid, c.k) not in spans:
                continue
            for s in inst.scenarios:
                for t in spans[(u.uid, c.k)]:
                    pvars[(u.uid, c.k, s.sid, t)] = m.add_variable(
                        f"p[{u.uid},{c.k},{s.sid},{t}]"
                    )

    t1vars = {}
    for u in inst.t1_units:
        for s in inst.scenarios:
            for t in range(T):
                t1vars[(u.uid, s.sid, t)] = m.add_variable(f"p1[{u.uid},{s.sid},{t}]")

    stocks = _StockAccess(m, inst, rvars, pvars, cfg.eliminate_stocks)
    k_stock = {u.uid: (u.K if k0 is None else min(u.K, k0)) for u in inst.t2_units}
    # the aggregated cycle k0 carries all later production, so its end stock
    # is neither defined nor sign-constrained (positivity holds for k < k0)
    fin_top = {
        u.uid: (u.K if k0 is None else min(u.K, k0) - 1) for u in inst.t2_units
    }
    for u in inst.t2_units:
        for k in range(0, k_stock[u.uid] + 1):
            for s in inst.scenarios:
                stocks.declare_init(u.uid, k, s.sid)
                if k <= fin_top[u.uid]:
                    stocks.declare_fin(u.uid, k, s.sid)

    xfvars = {}
    for u in inst.t2_units:
        for s in inst.scenarios:
            xfvars[(u.uid, s.sid)] = m.add_variable(f"xf[{u.uid},{s.sid}]")

    # --- rows ---------------------------------------------------------------

    # monotone step variables
    for u in inst.t2_units:
        for c in u.cycles:
            if c.k > k_step:
                continue
            ws = list(step_free_range(inst, windows, u.uid, c.k))
            for a, b in zip(ws, ws[1:]):
                if b == a + 1:
                    e = LinExpr()
                    dref.add(e, u.uid, c.k, a, 1.0)
                    dref.add(e, u.uid, c.k, b, -1.0)
                    _emit(m, e, "<=", 0.0, "PANprecedence")
    # ordering of aggregate indicators (v3(k0) tail)
    if k0 is not None:
        for u in inst.t2_units:
            for k in range(k0, u.K):
                e = LinExpr()
                agg(e, u.uid, k + 1, 1.0)
                agg(e, u.uid, k, -1.0)
                _emit(m, e, "<=", 0.0, "PANprecedence")

    # production coupled to campaign intervals
    coupling_tag = "PANcoupling" if k0 is None else "bornesAprouver02"
    for u in inst.t2_units:
        for c in u.cycles:
            key = (u.uid, c.k)
            if key not in spans:
                continue
            last_exact = k_stock[u.uid]
            for s in inst.scenarios:
                for t in spans[key]:
                    w = g.step_week[t]
                    e = LinExpr({pvars[(u.uid, c.k, s.sid, t)]: 1.0})
                    dref.add(e, u.uid, c.k, w - c.da, -u.pmax[t])
                    if not (k0 is not None and c.k == last_exact):
                        dref.add(e, u.uid, c.k + 1, w, u.pmax[t])
                    _emit(m, e, "<=", 0.0, coupling_tag)

    # demand covering
    demand_tag = "PANdemand" if k0 is None else "agregPowCycle"
    for si, s in enumerate(inst.scenarios):
        for t in range(T):
            e = LinExpr()
            for u in inst.t2_units:
                for c in u.cycles:
                    if (u.uid, c.k, s.sid, t) in pvars:
                        e.add(pvars[(u.uid, c.k, s.sid, t)], 1.0)
            for u in inst.t1_units:
                e.add(t1vars[(u.uid, s.sid, t)], 1.0)
            m.add_constraint(e, "==", s.demand[t], demand_tag)

    # thermal bounds
    for u in inst.t1_units:
        for si, s in enumerate(inst.scenarios):
            for t in range(T):
                vid = t1vars[(u.uid, s.sid, t)]
                m.add_constraint(LinExpr({vid: 1.0}), ">=", u.pmin[si][t], "PANflexPower")
                m.add_constraint(LinExpr({vid: 1.0}), "<=", u.pmax[si][t], "PANflexPower")

    # refuel bounds tied to operation
    for u in inst.t2_units:
        for k in range(1, u.K + 1):
            c = u.cycle(k)
            rv = rvars[(u.uid, k)]
            e = LinExpr({rv: 1.0})
            agg(e, u.uid, k, -c.rmin)
            _emit(m, e, ">=", 0.0, "PANrefuel")
            e = LinExpr({rv: 1.0})
            agg(e, u.uid, k, -c.rmax)
            _emit(m, e, "<=", 0.0, "PANrefuel")

    # stock recursion (skipped under elimination where it holds identically)
    if not cfg.eliminate_stocks:
        for u in inst.t2_units:
            for s in inst.scenarios:
                e = stocks.init(u.uid, 0, s.sid)
                m.add_constraint(e, "==", u.xi, "PANfuelInit")
        for u in inst.t2_units:
            for k in range(0, fin_top[u.uid] + 1):
                for s in inst.scenarios:
                    e = stocks.fin(u.uid, k, s.sid)
                    e.add_expr(stocks.init(u.uid, k, s.sid), -1.0)
                    for t in spans.get((u.uid, k), ()):
                        e.add(pvars[(u.uid, k, s.sid, t)], g.fuel_factors[t])
                    m.add_constraint(e, "==", 0.0, "PANconso")
        for u in inst.t2_units:
            for k in range(1, k_stock[u.uid] + 1):
                c = u.cycle(k)
                prev = u.cycle(k - 1)
                for s in inst.scenarios:
                    e = stocks.init(u.uid, k, s.sid)
                    e.add_expr(stocks.fin(u.uid, k - 1, s.sid), -c.loss_ratio)
                    e.add(rvars[(u.uid, k)], -1.0)
                    m.add_constraint(
                        e, "==", c.bo - c.loss_ratio * prev.bo, "PANpertes"
                    )

    # stock capacity (plus positivity rows when the variables are eliminated)
    for u in inst.t2_units:
        for k in range(0, k_stock[u.uid] + 1):
            c = u.cycle(k)
            for s in inst.scenarios:
                _emit(m, stocks.init(u.uid, k, s.sid), "<=", c.smax, "PANmaxStock")
                if cfg.eliminate_stocks:
                    _emit(m, stocks.init(u.uid, k, s.sid), ">=", 0.0, "PANmaxStock")
                    _emit(m, stocks.fin(u.uid, k, s.sid), ">=", 0.0, "PANmaxStock")

    # residual ceiling before the next outage
    anticip_top = {
        u.uid: (u.K - 1 if k0 is None else min(u.K - 1, k0 - 1)) for u in inst.t2_units
    }
    for u in inst.t2_units:
        for k in range(0, anticip_top[u.uid] + 1):
            c = u.cycle(k)
            for s in inst.scenarios:
                e = stocks.fin(u.uid, k, s.sid)
                agg(e, u.uid, k + 1, c.smax - c.amax)
                _emit(m, e, "<=", c.smax, "PANanticip")

    # final stock linearization: xf matches the last operated cycle's end stock
    # (for v3(k0) only exact cycles take part; the aggregated tail is capped
    # by the fuel-accounting row below)
    for u in inst.t2_units:
        sbar = u.smax_global
        for k in range(0, fin_top[u.uid] + 1):
            for s in inst.scenarios:
                e = LinExpr({xfvars[(u.uid, s.sid)]: 1.0})
                e.add_expr(stocks.fin(u.uid, k, s.sid), -1.0)
                agg(e, u.uid, k, sbar)
                agg(e, u.uid, k + 1, -sbar)
                _emit(m, e, "<=", sbar, "PANfuelFinal")

    # aggregated tail: fuel accounting for cycles beyond k0
    if k0 is not None:
        for u in inst.t2_units:
            bo0 = u.cycle(k0).bo
            delta = max(u.cycle(k).bo - bo0 for k in range(k0, u.K + 1))
            sbar = u.smax_global
            for s in inst.scenarios:
                e = LinExpr({xfvars[(u.uid, s.sid)]: 1.0})
                e.add_expr(stocks.init(u.uid, k0, s.sid), -1.0)
                for t in spans.get((u.uid, k0), ()):
                    e.add(pvars[(u.uid, k0, s.sid, t)], g.fuel_factors[t])
                for k in range(k0 + 1, u.K + 1):
                    e.add(rvars[(u.uid, k)], -1.0)
                agg(e, u.uid, k0, sbar)
                _emit(m, e, "<=", delta + sbar, "bornesAprouver2")

    # scheduling constraints (truncated to k <= k0 for v3(k0))
    for expr, sense, rhs, tag in schedule_constraint_rows(inst, dref, k_cap=k0):
        _emit(m, expr, sense, rhs, tag)

    m.set_objective(_objective(inst, m, rvars, t1vars, xfvars))
    m.build_info = BuildInfo(
        windows=windows,
        spans=spans,
        dvars=dvars,
        k0=k0,
        plans=stocks.plans if cfg.eliminate_stocks else None,
    )
    if cfg.ct6_mode != "off":
        add_light_ct6(m, inst, cfg.ct6_mode)
    if seal:
        m.seal()
    return m


def build_v0(inst, cfg: RelaxationConfig | None = None, windows=None, seal=True) -> Model:
    cfg = cfg or RelaxationConfig()
    cfg.check(inst)
    if cfg.formulation != "v0":
        raise BuildError("build_v0 requires a v0 config")
    return _build_stepwise(inst, cfg, windows, k0=None, seal=seal)


def build_v3_k0(inst, k0: int, windows=None) -> Model:
    cfg = RelaxationConfig(formulation="v3k", k0=k0)
    cfg.check(inst)
    return _build_stepwise(inst, cfg, windows, k0=k0, seal=True)


# ---------------------------------------------------------------------------
# light stretch caps (concave upper bounds on production below the threshold)
# ---------------------------------------------------------------------------


def _segments(profile):
    """(slope, f, c) per linear piece between consecutive profile points."""
    out = []
    for mth in range(1, len(profile)):
        f0, c0 = profile[mth - 1]
        f1, c1 = profile[mth]
        out.append(((c0 - c1) / (f0 - f1), f1, c1))
    return out


def add_light_ct6(m: Model, inst: Instance, mode: str) -> Model:
    """Add residual-stock variables and the concave production cap rows.

    ``per_cycle`` writes one cap row per cycle and profile piece;
    ``shared`` requires the profile to be cycle-independent and writes the
    caps once per unit on the summed production.  Applies to refuel cycles
    (k >= 1); the initial campaign starts at the known initial stock.
    """
    if m.sealed:
        raise BuildError("light stretch caps must be added before sealing")
    if m.build_info is None or m.build_info.k0 is not None:
        raise BuildError("light stretch caps extend a v0 model")
    if mode not in ("per_cycle", "shared"):
        raise BuildError(f"unknown ct6 mode {mode!r}")
    info = m.build_info
    g = inst.grid
    windows, spans = info.windows, info.spans
    dref = _StepRef(inst, windows, info.dvars, 10**9)
    eliminated = info.plans is not None

    def stock_init_expr(uid, k, sid) -> LinExpr:
        if eliminated:
            plan = info.plans[sid]
            e = LinExpr(const=plan.xinit[(uid, k)].const)
            for key, coef in plan.xinit[(uid, k)].terms.items():
                if key[0] == "r":
                    e.add(m.var_by_name(f"r[{key[1]},{key[2]}]"), coef)
                else:
                    name = f"p[{key[1]},{key[2]},{key[3]},{key[4]}]"
                    if m.has_var(name):
                        e.add(m.var_by_name(name), coef)
            return e
        return LinExpr({m.var_by_name(f"xinit[{uid},{k},{sid}]"): 1.0})

    xs = {}
    for u in inst.t2_units:
        for s in inst.scenarios:
            for t in range(g.T):
                xs[(u.uid, s.sid, t)] = m.add_variable(f"xs[{u.uid},{s.sid},{t}]")

    for u in inst.t2_units:
        m_i = u.smax_global
        if mode == "shared":
            profiles = {u.cycle(k).profile for k in range(1, u.K + 1)}
            if len(profiles) > 1:
                raise BuildError(
                    f"unit {u.uid}: shared stretch caps need a cycle-independent profile"
                )
        for k in range(1, u.K + 1):
            c = u.cycle(k)
            for s in inst.scenarios:
                for t in range(g.T):
                    w = g.step_week[t]
                    # residual-stock link, active only during campaign k; the
                    # cap applies to the stock entering the step, so the
                    # consumption sum runs over strictly earlier steps
                    e = LinExpr({xs[(u.uid, s.sid, t)]: 1.0})
                    e.add_expr(stock_init_expr(u.uid, k, s.sid), -1.0)
                    for tp in spans.get((u.uid, k), ()):
                        if tp < t:
                            e.add(m.var_by_name(f"p[{u.uid},{k},{s.sid},{tp}]"), g.fuel_factors[tp])
                    dref.add(e, u.uid, k, w - c.da, m_i)
                    dref.add(e, u.uid, k + 1, w, -m_i)
                    m.add_constraint(e, "<=", m_i, "defVarStretch")
                if mode == "per_cycle":
                    for t in range(g.T):
                        pname = f"p[{u.uid},{k},{s.sid},{t}]"
                        for slope, f1, c1 in _segments(c.profile):
                            e = LinExpr()
                            if m.has_var(pname):
                                e.add(m.var_by_name(pname), 1.0)
                            e.add(xs[(u.uid, s.sid, t)], -u.pmax[t] * slope)
                            m.add_constraint(
                                e, "<=", u.pmax[t] * (c1 - slope * f1), "ctStretch1"
                            )
        if mode == "shared" and u.K >= 1:
            prof = u.cycle(1).profile
            for s in inst.scenarios:
                for t in range(g.T):
                    for slope, f1, c1 in _segments(prof):
                        e = LinExpr()
                        for k in range(1, u.K + 1):
                            pname = f"p[{u.uid},{k},{s.sid},{t}]"
                            if m.has_var(pname):
                                e.add(m.var_by_name(pname), 1.0)
                        e.add(xs[(u.uid, s.sid, t)], -u.pmax[t] * slope)
                        m.add_constraint(
                            e, "<=", u.pmax[t] * (c1 - slope * f1), "ctStretch2"
                        )
    return m


# ---------------------------------------------------------------------------
# v3: every outage aggregated
# ---------------------------------------------------------------------------


def build_v3(inst: Instance) -> Model:
    m = Model("v3", meta={"formulation": "v3", "scenarios": [s.sid for s in inst.scenarios]})
    g = inst.grid
    dk, rvars, p2, t1vars, xfvars = {}, {}, {}, {}, {}
    for u in inst.t2_units:
        for k in range(1, u.K + 1):
            dk[(u.uid, k)] = m.add_variable(f"dk[{u.uid},{k}]", kind="B", ub=1.0)
    for u in inst.t2_units:
        for k in range(1, u.K + 1):
            rvars[(u.uid, k)] = m.add_variable(f"r[{u.uid},{k}]")
    for u in inst.t2_units:
        for s in inst.scenarios:
            for t in range(g.T):
                p2[(u.uid, s.sid, t)] = m.add_variable(f"p2[{u.uid},{s.sid},{t}]")
    for u in inst.t1_units:
        for s in inst.scenarios:
            for t in range(g.T):
                t1vars[(u.uid, s.sid, t)] = m.add_variable(f"p1[{u.uid},{s.sid},{t}]")
    for u in inst.t2_units:
        for s in inst.scenarios:
            xfvars[(u.uid, s.sid)] = m.add_variable(f"xf[{u.uid},{s.sid}]")

    for u in inst.t2_units:
        for k in range(1, u.K):
            e = LinExpr({dk[(u.uid, k + 1)]: 1.0, dk[(u.uid, k)]: -1.0})
            m.add_constraint(e, "<=", 0.0, "PANprecedence")
    for u in inst.t2_units:
        for k in range(1, u.K + 1):
            c = u.cycle(k)
            rv = rvars[(u.uid, k)]
            m.add_constraint(
                LinExpr({rv: 1.0, dk[(u.uid, k)]: -c.rmin}), ">=", 0.0, "PANrefuel"
            )
            m.add_constraint(
                LinExpr({rv: 1.0, dk[(u.uid, k)]: -c.rmax}), "<=", 0.0, "PANrefuel"
            )
    for si, s in enumerate(inst.scenarios):
        for t in range(g.T):
            e = LinExpr()
            for u in inst.t2_units:
                e.add(p2[(u.uid, s.sid, t)], 1.0)
            for u in inst.t1_units:
                e.add(t1vars[(u.uid, s.sid, t)], 1.0)
            m.add_constraint(e, "==", s.demand[t], "PANdemand")
    for u in inst.t1_units:
        for si, s in enumerate(inst.scenarios):
            for t in range(g.T):
                vid = t1vars[(u.uid, s.sid, t)]
                m.add_constraint(LinExpr({vid: 1.0}), ">=", u.pmin[si][t], "PANflexPower")
                m.add_constraint(LinExpr({vid: 1.0}), "<=", u.pmax[si][t], "PANflexPower")

    for u in inst.t2_units:
        delta = max(c.bo - u.cycle(0).bo for c in u.cycles)
        for s in inst.scenarios:
            e = LinExpr({xfvars[(u.uid, s.sid)]: 1.0})
            for t in range(g.T):
                e.add(p2[(u.uid, s.sid, t)], g.fuel_factors[t])
            for k in range(1, u.K + 1):
                e.add(rvars[(u.uid, k)], -1.0)
            m.add_constraint(e, "<=", delta + u.xi, "bornesAprouver")

    # the end stock lives within the capacity of the last operated cycle:
    # xf <= sum_k smax_k (dk_k - dk_{k+1}) with dk_0 = 1 and dk_{K+1} = 0
    for u in inst.t2_units:
        for s in inst.scenarios:
            e = LinExpr({xfvars[(u.uid, s.sid)]: 1.0})
            for k in range(1, u.K + 1):
                e.add(dk[(u.uid, k)], u.cycle(k - 1).smax - u.cycle(k).smax)
            m.add_constraint(e, "<=", u.cycle(0).smax, "stockMaxFin")

    m.set_objective(_objective(inst, m, rvars, t1vars, xfvars))
    return m.seal()


def build_model(inst, cfg: RelaxationConfig, windows=None) -> Model:
    cfg.check(inst)
    if cfg.formulation == "v0":
        return build_v0(inst, cfg, windows)
    if cfg.formulation == "v3":
        return build_v3(inst)
    return build_v3_k0(inst, cfg.k0, windows)


# ---------------------------------------------------------------------------
# constructive mappings used in the relaxation-ordering proofs
# ---------------------------------------------------------------------------


def map_v0_solution_to_v3(inst, windows, sol: dict) -> dict:
    """Image of a v0 solution in the v3 variable space (feasible, same cost)."""
    W = inst.grid.W
    out = {}
    for u in inst.t2_units:
        for k in range(1, u.K + 1):
            out[f"dk[{u.uid},{k}]"] = _step_value(inst, windows, sol, u.uid, k, W)
            out[f"r[{u.uid},{k}]"] = sol.get(f"r[{u.uid},{k}]", 0.0)
        for s in inst.scenarios:
            out[f"xf[{u.uid},{s.sid}]"] = sol.get(f"xf[{u.uid},{s.sid}]", 0.0)
            for t in range(inst.grid.T):
                total = 0.0
                for k in range(0, u.K + 1):
                    total += sol.get(f"p[{u.uid},{k},{s.sid},{t}]", 0.0)
                out[f"p2[{u.uid},{s.sid},{t}]"] = total
    for u in inst.t1_units:
        for s in inst.scenarios:
            for t in range(inst.grid.T):
                name = f"p1[{u.uid},{s.sid},{t}]"
                out[name] = sol.get(name, 0.0)
    return out


def map_v0_solution_to_v3k(inst, windows, sol: dict, k0: int) -> dict:
    """Image of a v0 solution in the v3(k0) variable space."""
    W = inst.grid.W
    out = {}
    for u in inst.t2_units:
        for k in range(0, min(k0, u.K) + 1):
            for w in step_free_range(inst, windows, u.uid, k):
                name = f"d[{u.uid},{k},{w}]"
                out[name] = sol.get(name, 0.0)
        for k in range(k0 + 1, u.K + 1):
            out[f"dk[{u.uid},{k}]"] = _step_value(inst, windows, sol, u.uid, k, W)
        for k in range(1, u.K + 1):
            out[f"r[{u.uid},{k}]"] = sol.get(f"r[{u.uid},{k}]", 0.0)
        for s in inst.scenarios:
            out[f"xf[{u.uid},{s.sid}]"] = sol.get(f"xf[{u.uid},{s.sid}]", 0.0)
            for k in range(0, min(k0, u.K) + 1):
                name = f"xinit[{u.uid},{k},{s.sid}]"
                if name in sol:
                    out[name] = sol[name]
                if k < k0:  # the aggregated cycle k0 has no end-stock variable
                    name = f"xfin[{u.uid},{k},{s.sid}]"
                    if name in sol:
                        out[name] = sol[name]
            for t in range(inst.grid.T):
                tail = sum(
                    sol.get(f"p[{u.uid},{k},{s.sid},{t}]", 0.0)
                    for k in range(k0, u.K + 1)
                )
                out[f"p[{u.uid},{k0},{s.sid},{t}]"] = tail
                for k in range(0, k0):
                    name = f"p[{u.uid},{k},{s.sid},{t}]"
                    if name in sol:
                        out[name] = sol[name]
    for u in inst.t1_units:
        for s in inst.scenarios:
            for t in range(inst.grid.T):
                name = f"p1[{u.uid},{s.sid},{t}]"
                out[name] = sol.get(name, 0.0)
    return out


def _step_value(inst, windows, sol, uid, k, w) -> float:
    u = inst.t2_by_id(uid)
    if k > u.K:
        return 0.0
    if windows.is_removed(uid, k):
        return 0.0
    lo, hi = windows.window(uid, k)
    if w < lo:
        return 0.0
    if hi <= inst.grid.W and w >= hi:
        return 1.0
    return float(sol.get(f"d[{uid},{k},{w}]", 0.0))
