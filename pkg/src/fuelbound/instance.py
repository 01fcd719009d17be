"""Problem data for the two-tier maintenance/production scheduling problem.

An :class:`Instance` gathers everything a formulation builder needs:

- the production time grid (fine steps ``t`` grouped into weeks ``w``),
- flexible thermal units (T1) with per-scenario costs and power bounds,
- refuelable units (T2) with their cycles: outage windows, refuel bounds,
  stock capacities, refuel retention factor and the decreasing power profile
  active below the threshold stock,
- demand scenarios with probabilities,
- coupling scheduling constraints (CT14..CT21) on outage dates.

Instances are immutable after construction and safe to share between
concurrently running builders/solvers.

The canonical on-disk format is a UTF-8 text document: a ``fbinst/1`` header
line followed by a YAML body with top-level keys ``grid``, ``t1``, ``t2``,
``scenarios`` and ``constraints``.  ``parse_instance`` reports syntax errors
with line/column and collects *all* semantic violations before aborting.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np
import yaml

FORMAT_HEADER = "fbinst/1"

SCHEDULE_KINDS = ("CT14", "CT15", "CT16", "CT17", "CT18", "CT19", "CT20", "CT21")


class InstanceError(Exception):
    """Syntax or semantic error in instance data."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeGrid:
    durations: tuple  # D^t, hours
    step_week: tuple  # w_t, 1-based week of step t
    fuel_factors: tuple  # F_t, power->fuel conversion (defaults to D^t)

    @property
    def T(self) -> int:
        return len(self.durations)

    @property
    def W(self) -> int:
        return max(self.step_week) if self.step_week else 0

    def week_steps(self, w: int) -> list[int]:
        return [t for t in range(self.T) if self.step_week[t] == w]

    def week_first_step(self, w: int) -> int:
        return self.step_week.index(w)

    def weeks(self):
        return range(1, self.W + 1)

    def week_duration(self, w: int) -> float:
        return sum(self.durations[t] for t in self.week_steps(w))

    def max_week_fuel(self) -> float:
        """Largest weekly sum of fuel factors (the D^w of the campaign-length bound)."""
        return max(sum(self.fuel_factors[t] for t in self.week_steps(w)) for w in self.weeks())


@dataclass(frozen=True)
class CycleSpec:
    k: int
    da: int  # outage duration, weeks (0 allowed for the initial cycle)
    to: int  # first allowed outage start week
    ta: int  # last allowed outage start week; ta > W makes the outage optional
    rmin: float
    rmax: float
    smax: float  # max stock at campaign start
    amax: float  # max residual stock allowed before the next outage
    bo: float  # threshold stock activating the decreasing profile
    q: float  # refuel retention factor, 0 < q < 1
    refuel_cost: float
    profile: tuple  # ((fuel, ratio), ...) with strictly decreasing fuel

    @property
    def loss_ratio(self) -> float:
        """Coefficient (q-1)/q of the refueling stock recursion."""
        return (self.q - 1.0) / self.q


@dataclass(frozen=True)
class T2Unit:
    uid: str
    xi: float  # initial fuel stock
    stock_value: float  # value of residual fuel at the horizon end
    pmax: tuple  # per step
    cycles: tuple  # CycleSpec for k = 0..K

    @property
    def K(self) -> int:
        return len(self.cycles) - 1

    def cycle(self, k: int) -> CycleSpec:
        return self.cycles[k]

    @property
    def smax_global(self) -> float:
        return max(c.smax for c in self.cycles)


@dataclass(frozen=True)
class T1Unit:
    uid: str
    cost: tuple  # [s][t]
    pmin: tuple  # [s][t]
    pmax: tuple  # [s][t]


@dataclass(frozen=True)
class Scenario:
    sid: str
    weight: float
    demand: tuple  # per step


@dataclass(frozen=True)
class ScheduleConstraint:
    kind: str
    name: str
    members: tuple  # ((unit id, k), ...)
    spacing: int = 0  # Se for CT14..CT18 (CT14/CT15 allow <= 0)
    window: tuple | None = None  # (U, V) for CT15/CT21
    offsets: tuple = ()  # L19 per member
    lengths: tuple = ()  # Tu19 per member
    capacity: int = 1  # Q19
    weekly_cap: tuple = ()  # N20(w), length W
    max_offline: tuple = ()  # Imax_w over the window weeks (CT21)


@dataclass(frozen=True)
class Instance:
    grid: TimeGrid
    t1_units: tuple
    t2_units: tuple
    scenarios: tuple
    constraints: tuple

    @property
    def S(self) -> int:
        return len(self.scenarios)

    @property
    def weight_sum(self) -> float:
        return sum(s.weight for s in self.scenarios)

    def t2_by_id(self, uid: str) -> T2Unit:
        for u in self.t2_units:
            if u.uid == uid:
                return u
        raise KeyError(uid)

    def dims(self):
        K = self.t2_units[0].K if self.t2_units else 0
        return (len(self.t2_units), len(self.t1_units), K, self.S, self.grid.T, self.grid.W)


# ---------------------------------------------------------------------------
# canonical format
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        raise InstanceError("boolean not representable")
    if isinstance(x, int):
        return str(x)
    s = f"{float(x):.12g}"
    return s


def _fmt_list(xs) -> str:
    return "[" + ", ".join(_fmt(x) for x in xs) + "]"


def dump_instance(inst: Instance) -> str:
    """Serialize to the canonical text format (reals at <= 12 significant digits)."""
    g = inst.grid
    out = io.StringIO()
    w = out.write
    w(FORMAT_HEADER + "\n")
    w("grid:\n")
    w(f"  T: {g.T}\n")
    w(f"  W: {g.W}\n")
    w(f"  step_duration: {_fmt_list(g.durations)}\n")
    w(f"  step_to_week: {_fmt_list(g.step_week)}\n")
    w(f"  fuel_factor: {_fmt_list(g.fuel_factors)}\n")
    w("t1:\n")
    for u in inst.t1_units:
        w(f"- id: {u.uid}\n")
        for key, rows in (("cost", u.cost), ("pmin", u.pmin), ("pmax", u.pmax)):
            w(f"  {key}:\n")
            for row in rows:
                w(f"  - {_fmt_list(row)}\n")
    w("t2:\n")
    for u in inst.t2_units:
        w(f"- id: {u.uid}\n")
        w(f"  xi: {_fmt(u.xi)}\n")
        w(f"  stock_value: {_fmt(u.stock_value)}\n")
        w(f"  pmax: {_fmt_list(u.pmax)}\n")
        w("  cycles:\n")
        for c in u.cycles:
            w(
                "  - {"
                + f"k: {c.k}, da: {c.da}, to: {c.to}, ta: {c.ta}, "
                + f"rmin: {_fmt(c.rmin)}, rmax: {_fmt(c.rmax)}, smax: {_fmt(c.smax)}, "
                + f"amax: {_fmt(c.amax)}, bo: {_fmt(c.bo)}, q: {_fmt(c.q)}, "
                + f"refuel_cost: {_fmt(c.refuel_cost)}, "
                + "profile: ["
                + ", ".join(f"[{_fmt(f)}, {_fmt(r)}]" for f, r in c.profile)
                + "]}\n"
            )
    w("scenarios:\n")
    for s in inst.scenarios:
        w(f"- id: {s.sid}\n")
        w(f"  weight: {_fmt(s.weight)}\n")
        w(f"  demand: {_fmt_list(s.demand)}\n")
    w("constraints:\n")
    for c in inst.constraints:
        w(f"- kind: {c.kind}\n")
        w(f"  name: {c.name}\n")
        w("  members: [" + ", ".join(f"[{u}, {k}]" for u, k in c.members) + "]\n")
        if c.kind in ("CT14", "CT15", "CT16", "CT17", "CT18"):
            w(f"  spacing: {c.spacing}\n")
        if c.window is not None:
            w(f"  window: [{c.window[0]}, {c.window[1]}]\n")
        if c.kind == "CT19":
            w(f"  offsets: {_fmt_list(c.offsets)}\n")
            w(f"  lengths: {_fmt_list(c.lengths)}\n")
            w(f"  capacity: {c.capacity}\n")
        if c.kind == "CT20":
            w(f"  weekly_cap: {_fmt_list(c.weekly_cap)}\n")
        if c.kind == "CT21":
            w(f"  max_offline: {_fmt_list(c.max_offline)}\n")
    return out.getvalue()


def write_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_instance(inst))


def _req(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise InstanceError(f"{where}: missing key {key!r}")
    return mapping[key]


def _floats(xs, where) -> tuple:
    try:
        return tuple(float(x) for x in xs)
    except (TypeError, ValueError):
        raise InstanceError(f"{where}: expected a list of numbers") from None


def _grid_from_doc(doc) -> TimeGrid:
    g = _req(doc, "grid", "document")
    T = int(_req(g, "T", "grid"))
    W = int(_req(g, "W", "grid"))
    dur = _floats(_req(g, "step_duration", "grid"), "grid.step_duration")
    s2w = tuple(int(x) for x in _req(g, "step_to_week", "grid"))
    ff = _floats(g.get("fuel_factor", dur), "grid.fuel_factor")
    if len(dur) != T or len(s2w) != T or len(ff) != T:
        raise InstanceError("grid: array lengths disagree with T")
    if s2w and max(s2w) != W:
        raise InstanceError("grid: step_to_week does not reach W")
    return TimeGrid(dur, s2w, ff)


def _t1_matrix(val, S, T, where) -> tuple:
    """Accept either a full S x T matrix or a single T row broadcast to all scenarios."""
    if val and isinstance(val[0], (int, float)):
        row = _floats(val, where)
        if len(row) != T:
            raise InstanceError(f"{where}: row length != T")
        return tuple(row for _ in range(S))
    rows = tuple(_floats(r, where) for r in val)
    if len(rows) != S or any(len(r) != T for r in rows):
        raise InstanceError(f"{where}: expected {S} rows of length {T}")
    return rows


def parse_instance_text(text: str, source: str = "<string>") -> Instance:
    """Parse the canonical format; validates and raises on any violation."""
    lines = text.split("\n", 1)
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise InstanceError(f"{source}:1:1: missing '{FORMAT_HEADER}' header line")
    body = lines[1] if len(lines) > 1 else ""
    loader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)
    try:
        doc = yaml.load(body, Loader=loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line = (mark.line + 2) if mark else "?"
        col = (mark.column + 1) if mark else "?"
        raise InstanceError(f"{source}:{line}:{col}: syntax error: {exc.problem}") from None
    if not isinstance(doc, dict):
        raise InstanceError(f"{source}: body is not a mapping")
    try:
        return _materialize(doc, source)
    except (ValueError, TypeError) as exc:
        raise InstanceError(f"{source}: malformed field: {exc}") from None


def _materialize(doc, source) -> Instance:
    grid = _grid_from_doc(doc)
    T = grid.T
    scen_docs = doc.get("scenarios") or []
    S = len(scen_docs)
    scenarios = []
    default_w = 1.0 / S if S else 0.0
    for s in scen_docs:
        sid = str(_req(s, "id", "scenario"))
        weight = float(s.get("weight", default_w))
        demand = _floats(_req(s, "demand", f"scenario {sid}"), f"scenario {sid}.demand")
        if len(demand) != T:
            raise InstanceError(f"scenario {sid}: demand length != T")
        scenarios.append(Scenario(sid, weight, demand))

    overrides = doc.get("t1_overrides") or {}
    t1_units = []
    for u in doc.get("t1") or []:
        uid = str(_req(u, "id", "t1 unit"))
        cost = _t1_matrix(_req(u, "cost", f"t1 {uid}"), S, T, f"t1 {uid}.cost")
        pmin = _t1_matrix(_req(u, "pmin", f"t1 {uid}"), S, T, f"t1 {uid}.pmin")
        pmax = _t1_matrix(_req(u, "pmax", f"t1 {uid}"), S, T, f"t1 {uid}.pmax")
        if uid in overrides:
            ov = overrides[uid]
            cost = list(cost)
            for si, sdoc in enumerate(scen_docs):
                key = str(sdoc["id"])
                if key in ov.get("cost", {}):
                    cost[si] = _floats(ov["cost"][key], f"t1_overrides {uid}")
            cost = tuple(cost)
        t1_units.append(T1Unit(uid, cost, pmin, pmax))

    t2_units = []
    for u in doc.get("t2") or []:
        uid = str(_req(u, "id", "t2 unit"))
        pmax = _floats(_req(u, "pmax", f"t2 {uid}"), f"t2 {uid}.pmax")
        if len(pmax) != T:
            raise InstanceError(f"t2 {uid}: pmax length != T")
        cycles = []
        for c in _req(u, "cycles", f"t2 {uid}"):
            where = f"t2 {uid} cycle"
            profile = tuple((float(p[0]), float(p[1])) for p in _req(c, "profile", where))
            cycles.append(
                CycleSpec(
                    k=int(_req(c, "k", where)),
                    da=int(_req(c, "da", where)),
                    to=int(_req(c, "to", where)),
                    ta=int(_req(c, "ta", where)),
                    rmin=float(_req(c, "rmin", where)),
                    rmax=float(_req(c, "rmax", where)),
                    smax=float(_req(c, "smax", where)),
                    amax=float(_req(c, "amax", where)),
                    bo=float(_req(c, "bo", where)),
                    q=float(_req(c, "q", where)),
                    refuel_cost=float(c.get("refuel_cost", 0.0)),
                    profile=profile,
                )
            )
        t2_units.append(
            T2Unit(
                uid,
                float(_req(u, "xi", f"t2 {uid}")),
                float(_req(u, "stock_value", f"t2 {uid}")),
                pmax,
                tuple(cycles),
            )
        )

    constraints = []
    for i, c in enumerate(doc.get("constraints") or []):
        kind = str(_req(c, "kind", "constraint"))
        members = tuple((str(m[0]), int(m[1])) for m in _req(c, "members", f"constraint {i}"))
        constraints.append(
            ScheduleConstraint(
                kind=kind,
                name=str(c.get("name", f"c{i}")),
                members=members,
                spacing=int(c.get("spacing", 0)),
                window=tuple(int(x) for x in c["window"]) if c.get("window") else None,
                offsets=tuple(int(x) for x in c.get("offsets", ())),
                lengths=tuple(int(x) for x in c.get("lengths", ())),
                capacity=int(c.get("capacity", 1)),
                weekly_cap=tuple(int(x) for x in c.get("weekly_cap", ())),
                max_offline=_floats(c.get("max_offline", ()), "max_offline"),
            )
        )

    inst = Instance(grid, tuple(t1_units), tuple(t2_units), tuple(scenarios), tuple(constraints))
    violations = validate_instance(inst)
    if violations:
        raise InstanceError(f"{source}: semantic errors:\n  " + "\n  ".join(violations))
    return inst


def parse_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return parse_instance_text(text, source=str(path))


# ---------------------------------------------------------------------------
# validator
# ---------------------------------------------------------------------------


def _check_profile(prefix, profile, out):
    if len(profile) < 2:
        out.append(f"{prefix}: profile needs at least 2 points")
        return
    fuels = [p[0] for p in profile]
    ratios = [p[1] for p in profile]
    for m in range(1, len(profile)):
        if not fuels[m] < fuels[m - 1]:
            out.append(f"{prefix}: profile fuel levels not strictly decreasing at point {m}")
            return
    if any(r < 0 for r in ratios):
        out.append(f"{prefix}: negative profile ratio")
    slopes = [
        (ratios[m - 1] - ratios[m]) / (fuels[m - 1] - fuels[m]) for m in range(1, len(profile))
    ]
    for m in range(1, len(slopes)):
        # concavity: slopes non-increasing going from low fuel to high fuel,
        # i.e. non-decreasing along the stored (decreasing-fuel) order
        if slopes[m] < slopes[m - 1] - 1e-12:
            out.append(f"{prefix}: profile not concave at point {m + 1}")


def validate_instance(inst: Instance) -> list[str]:
    """All invariant violations, as human-readable strings (empty iff valid)."""
    out: list[str] = []
    g = inst.grid
    T = g.T
    if T == 0:
        out.append("grid: empty time grid")
        return out
    if any(d <= 0 for d in g.durations):
        out.append("grid: non-positive step duration")
    if any(f <= 0 for f in g.fuel_factors):
        out.append("grid: non-positive fuel factor")
    last = 0
    seen = set()
    for t, w in enumerate(g.step_week):
        if w < last:
            out.append(f"grid: step_to_week decreases at t={t}")
            break
        last = w
        seen.add(w)
    if seen != set(range(1, g.W + 1)):
        out.append("grid: step_to_week not surjective onto [1,W]")

    S = inst.S
    if S == 0:
        out.append("scenarios: at least one scenario required")
    wsum = inst.weight_sum
    if S and abs(wsum - 1.0) > 1e-9:
        out.append(f"scenarios: scenario weights do not sum to 1 (got {wsum!r})")
    for s in inst.scenarios:
        if s.weight < 0:
            out.append(f"scenario {s.sid}: negative weight")
        if len(s.demand) != T:
            out.append(f"scenario {s.sid}: demand length != T")

    ids = [u.uid for u in inst.t1_units] + [u.uid for u in inst.t2_units]
    if len(set(ids)) != len(ids):
        out.append("units: duplicate unit ids")

    for u in inst.t1_units:
        for mat in (u.cost, u.pmin, u.pmax):
            if len(mat) != S or any(len(row) != T for row in mat):
                out.append(f"t1 {u.uid}: matrix shape != S x T")
                break
        else:
            for si in range(S):
                for t in range(T):
                    if u.pmin[si][t] > u.pmax[si][t]:
                        out.append(f"t1 {u.uid}: pmin > pmax at (s={si},t={t})")
                        break
                else:
                    continue
                break

    for u in inst.t2_units:
        pre = f"t2 {u.uid}"
        if u.xi < 0:
            out.append(f"{pre}: negative initial stock")
        if len(u.pmax) != T:
            out.append(f"{pre}: pmax length != T")
        elif any(p <= 0 for p in u.pmax):
            out.append(f"{pre}: non-positive max power")
        if not u.cycles:
            out.append(f"{pre}: no cycles")
            continue
        for pos, c in enumerate(u.cycles):
            cp = f"{pre} cycle k={c.k}"
            if c.k != pos:
                out.append(f"{pre}: cycles not ordered by k at position {pos}")
            if c.da < 0:
                out.append(f"{cp}: negative outage duration")
            if c.to > c.ta:
                out.append(f"{cp}: to > ta")
            if c.to < 1:
                out.append(f"{cp}: to < 1")
            if not (0 <= c.rmin <= c.rmax):
                out.append(f"{cp}: refuel bounds violated (rmin={c.rmin!r}, rmax={c.rmax!r})")
            if not (0.0 < c.q < 1.0):
                out.append(f"{cp}: retention factor q outside (0,1)")
            if not (0 <= c.bo <= c.smax):
                out.append(f"{cp}: bo outside [0, smax]")
            if c.amax < 0 or c.smax <= 0:
                out.append(f"{cp}: negative stock bound")
            _check_profile(cp, c.profile, out)
        c0 = u.cycles[0]
        if c0.to != c0.ta:
            out.append(f"{pre}: initial cycle must have a fixed start week")
        if not (c0.rmin == c0.rmax == u.xi):
            out.append(f"{pre}: initial cycle refuel must equal the initial stock")

    t2_ids = {u.uid: u for u in inst.t2_units}
    W = g.W
    for c in inst.constraints:
        pre = f"constraint {c.name} ({c.kind})"
        if c.kind not in SCHEDULE_KINDS:
            out.append(f"{pre}: unknown kind")
            continue
        for uid, k in c.members:
            if uid not in t2_ids:
                out.append(f"{pre}: member references unknown unit {uid}")
            elif not (0 <= k <= t2_ids[uid].K):
                out.append(f"{pre}: member references unknown cycle ({uid},{k})")
        if c.kind in ("CT16", "CT17", "CT18") and c.spacing <= 0:
            out.append(f"{pre}: spacing must be positive")
        if c.kind in ("CT15", "CT21"):
            if c.window is None:
                out.append(f"{pre}: window required")
            elif not (1 <= c.window[0] <= c.window[1] <= W):
                out.append(f"{pre}: window outside [1,W]")
        if c.kind == "CT19":
            if len(c.offsets) != len(c.members) or len(c.lengths) != len(c.members):
                out.append(f"{pre}: offsets/lengths must match members")
            if c.capacity < 0:
                out.append(f"{pre}: negative capacity")
        if c.kind == "CT20" and len(c.weekly_cap) != W:
            out.append(f"{pre}: weekly_cap must have length W")
        if c.kind == "CT21":
            span = (c.window[1] - c.window[0] + 1) if c.window else 0
            if len(c.max_offline) != span:
                out.append(f"{pre}: max_offline must cover the window")
    return out


# ---------------------------------------------------------------------------
# synthetic generator
# ---------------------------------------------------------------------------


def _round6(x) -> float:
    return float(np.round(x, 6))


def generate_synthetic(seed: int, dims, bo_frac: float = 0.0) -> Instance:
    """Deterministic random instance with the given (I, J, K, S, T, W).

    The output always validates, keeps the thermal fleet able to cover peak
    demand on its own, uses per-week-constant thermal costs and a constant
    step duration (so weekly aggregation applies exactly), and places outage
    windows so that every combination of in-window start weeks respecting the
    cycle order is schedulable within the horizon.

    ``bo_frac`` sets the profile-threshold stock as a fraction of capacity.
    The default 0 keeps campaign-end stocks at or above the threshold by
    plain nonnegativity, which is the regime the aggregate-outage relaxation
    orderings require once the stretch restriction is relaxed; raise it to
    make the decreasing-profile machinery bind (stretch-cap tests).
    """
    I, J, K, S, T, W = dims
    if min(I, J, K, S, T, W) < 0 or J < 1 or S < 1 or T < 1 or W < 1:
        raise InstanceError(f"infeasible dims {dims!r}")
    if T % W != 0:
        raise InstanceError(f"infeasible dims: T={T} not divisible by W={W}")
    if W < 2 * K:
        raise InstanceError(f"infeasible dims: W={W} too small for K={K} outages")
    rng = np.random.default_rng(seed)
    n = T // W
    grid = TimeGrid((1.0,) * T, tuple(1 + t // n for t in range(T)), (1.0,) * T)

    t1_units = []
    t1_pmax_total = 0.0
    for j in range(J):
        base_cap = _round6(rng.uniform(18.0, 30.0))
        t1_pmax_total += base_cap
        cost = []
        for _ in range(S):
            weekly = [_round6(rng.uniform(10.0, 20.0)) for _ in range(W)]
            cost.append(tuple(weekly[w] for w in range(W) for _ in range(n)))
        pmax = tuple(tuple([base_cap] * T) for _ in range(S))
        pmin = tuple(tuple([0.0] * T) for _ in range(S))
        t1_units.append(T1Unit(f"t1_{j}", tuple(cost), pmin, pmax))

    t2_units = []
    spacing = max(2, W // K) if K else W
    for i in range(I):
        cap = _round6(rng.uniform(4.0, 7.0))
        smax = _round6(rng.uniform(30.0, 50.0))
        amax = _round6(0.5 * smax)
        bo = _round6(bo_frac * smax)
        xi = _round6(rng.uniform(0.3, 0.45) * smax)
        profile = ((bo, 1.0), (0.0, 0.0)) if bo > 0 else ((_round6(0.25 * smax), 1.0), (0.0, 0.0))
        cycles = [
            CycleSpec(
                k=0, da=0, to=1, ta=1, rmin=xi, rmax=xi, smax=smax, amax=amax,
                bo=bo, q=0.9, refuel_cost=0.0, profile=profile,
            )
        ]
        for k in range(1, K + 1):
            anchor = 1 + (k - 1) * spacing
            width = min(3, spacing - 1, W - anchor + 1 - (K - k) * spacing)
            width = max(1, width)
            ta = min(anchor + width - 1, W - (K - k) * spacing)
            cycles.append(
                CycleSpec(
                    k=k, da=1, to=anchor, ta=max(anchor, ta),
                    rmin=0.0, rmax=_round6(rng.uniform(0.15, 0.3) * smax),
                    smax=smax, amax=amax, bo=bo, q=0.9,
                    refuel_cost=_round6(rng.uniform(5.0, 9.0)), profile=profile,
                )
            )
        t2_units.append(
            T2Unit(f"t2_{i}", xi, _round6(rng.uniform(1.0, 4.0)), (cap,) * T, tuple(cycles))
        )

    weight = float(np.round(1.0 / S, 12))
    scenarios = []
    for s in range(S):
        demand = tuple(
            _round6(rng.uniform(0.35, 0.75) * t1_pmax_total) for _ in range(T)
        )
        scenarios.append(Scenario(f"s{s}", weight, demand))

    # a simultaneity cap calibrated on the earliest-start witness schedule,
    # so the instance always stays schedulable
    constraints = []
    if I >= 2 and K >= 1:
        members = tuple((f"t2_{i}", 1) for i in range(min(I, 3)))
        overlap = [0] * (W + 1)
        for uid, k in members:
            u = next(x for x in t2_units if x.uid == uid)
            start = 1
            for kk in range(1, k + 1):
                start = max(u.cycle(kk).to, start + u.cycle(kk - 1).da)
            for w in range(start, min(W, start + u.cycle(k).da - 1) + 1):
                overlap[w] += 1
        cap = max(1, max(overlap))
        constraints.append(
            ScheduleConstraint(
                kind="CT20", name="c0", members=members, weekly_cap=(cap,) * W
            )
        )

    inst = Instance(grid, tuple(t1_units), tuple(t2_units), tuple(scenarios), tuple(constraints))
    bad = validate_instance(inst)
    if bad:
        raise InstanceError("generator produced an invalid instance: " + "; ".join(bad))
    return inst


def subset_scenarios(inst: Instance, sids) -> Instance:
    """Instance restricted to the given scenario ids, weights unchanged.

    The weight-sum invariant intentionally does not apply to sub-instances:
    builders scale first-stage costs by the total scenario mass, so the
    optimum of a subset instance is exactly the partition term of the
    decomposition bound.
    """
    keep = [i for i, s in enumerate(inst.scenarios) if s.sid in set(sids)]
    if len(keep) != len(set(sids)):
        missing = set(sids) - {s.sid for s in inst.scenarios}
        raise InstanceError(f"unknown scenario ids {sorted(missing)}")
    t1 = tuple(
        T1Unit(
            u.uid,
            tuple(u.cost[i] for i in keep),
            tuple(u.pmin[i] for i in keep),
            tuple(u.pmax[i] for i in keep),
        )
        for u in inst.t1_units
    )
    scen = tuple(inst.scenarios[i] for i in keep)
    return replace(inst, t1_units=t1, scenarios=scen)
