"""Solver-agnostic MIP representation.

A ``Model`` is a plain container of variables, sparse linear constraints and a
linear objective.  Every constraint carries a ``tag`` naming the constraint
family it belongs to (demand covering, fuel losses, spacing rules, ...), so
tests can count rows per family and reports can break models down the same
way.  Sealed models are immutable and can be fingerprinted or written to
fixed-format MPS for an external solver.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field

INF = math.inf

# Closed set of constraint tags.  Anything else is a modelling bug and is
# rejected at add_constraint time.
ALLOWED_TAGS = frozenset(
    {
        # step-variable formulation
        "PANprecedence",
        "PANtw0",
        "PANtw1",
        "PANdemand",
        "PANflexPower",
        "PANcoupling",
        "PANrefuel",
        "PANfuelInit",
        "PANconso",
        "PANpertes",
        "PANmaxStock",
        "PANanticip",
        "PANfuelFinal",
        # scheduling constraint family (PANordo instances keep their kind)
        "CT14",
        "CT15",
        "CT16",
        "CT17",
        "CT18",
        "CT19",
        "CT20",
        "CT21",
        # light stretch-cap rows
        "ctStretch1",
        "defVarStretch",
        "ctStretch2",
        # aggregate-outage relaxations
        "bornesAprouver",
        "stockMaxFin",
        "bornesAprouver02",
        "agregPowCycle",
        "bornesAprouver2",
    }
)


class ModelError(Exception):
    """Raised on malformed model construction."""


@dataclass
class Variable:
    vid: int
    name: str
    kind: str  # 'B' binary, 'C' continuous
    lb: float
    ub: float
    is_step: bool = False  # outage step variable (preferred branching)

    @property
    def fixed(self) -> bool:
        return self.lb == self.ub


class LinExpr:
    """Sparse linear expression: sum of coef*var plus a constant."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.const = float(const)

    def add(self, vid: int, coef: float) -> "LinExpr":
        if coef != 0.0:
            new = self.terms.get(vid, 0.0) + coef
            if new == 0.0:
                self.terms.pop(vid, None)
            else:
                self.terms[vid] = new
        return self

    def add_const(self, c: float) -> "LinExpr":
        self.const += c
        return self

    def add_expr(self, other: "LinExpr", scale: float = 1.0) -> "LinExpr":
        for vid, coef in other.terms.items():
            self.add(vid, scale * coef)
        self.const += scale * other.const
        return self

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def value(self, x) -> float:
        return self.const + sum(c * x[v] for v, c in self.terms.items())

    def sorted_items(self):
        return sorted(self.terms.items())

    def __repr__(self):
        parts = [f"{c:+g}*x{v}" for v, c in self.sorted_items()]
        if self.const:
            parts.append(f"{self.const:+g}")
        return " ".join(parts) if parts else "0"


@dataclass
class Constraint:
    cid: int
    expr: LinExpr
    sense: str  # '<=', '>=', '=='
    rhs: float
    tag: str

    def violation(self, x) -> float:
        lhs = self.expr.value(x)
        if self.sense == "<=":
            return lhs - self.rhs
        if self.sense == ">=":
            return self.rhs - lhs
        return abs(lhs - self.rhs)


_SENSES = ("<=", ">=", "==")


class Model:
    """A MIP under construction; ``seal()`` freezes it."""

    def __init__(self, name: str = "model", meta: dict | None = None):
        self.name = name
        self.meta = dict(meta or {})
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective = LinExpr()
        self._by_name: dict[str, int] = {}
        self._sealed = False
        self.build_info = None  # builder scratch (var maps etc.), not part of identity

    # -- construction -----------------------------------------------------

    def _check_open(self):
        if self._sealed:
            raise ModelError("model is sealed")

    def add_variable(self, name, kind="C", lb=0.0, ub=INF, is_step=False) -> int:
        self._check_open()
        if name in self._by_name:
            raise ModelError(f"duplicate variable name {name!r}")
        if not (lb <= ub):
            raise ModelError(f"variable {name!r}: lb {lb} > ub {ub}")
        if kind not in ("B", "C"):
            raise ModelError(f"variable {name!r}: bad kind {kind!r}")
        if kind == "B" and not (0.0 <= lb and ub <= 1.0):
            raise ModelError(f"binary {name!r}: bounds outside [0,1]")
        vid = len(self.variables)
        self.variables.append(Variable(vid, name, kind, float(lb), float(ub), is_step))
        self._by_name[name] = vid
        return vid

    def add_constraint(self, expr: LinExpr, sense: str, rhs: float, tag: str) -> int:
        self._check_open()
        if sense not in _SENSES:
            raise ModelError(f"bad sense {sense!r}")
        if tag not in ALLOWED_TAGS:
            raise ModelError(f"unknown constraint tag {tag!r}")
        n = len(self.variables)
        for vid, coef in expr.terms.items():
            if not (0 <= vid < n):
                raise ModelError(f"constraint references unknown variable id {vid}")
            if not math.isfinite(coef):
                raise ModelError(f"non-finite coefficient on x{vid}")
        if not math.isfinite(rhs) or not math.isfinite(expr.const):
            raise ModelError("non-finite rhs/constant")
        cid = len(self.constraints)
        # fold the expression constant into the rhs so rows are normalized
        row = expr.copy()
        rhs = float(rhs) - row.const
        row.const = 0.0
        self.constraints.append(Constraint(cid, row, sense, rhs, tag))
        return cid

    def set_objective(self, expr: LinExpr):
        self._check_open()
        n = len(self.variables)
        for vid in expr.terms:
            if not (0 <= vid < n):
                raise ModelError(f"objective references unknown variable id {vid}")
        self.objective = expr.copy()

    def seal(self) -> "Model":
        self._sealed = True
        return self

    @property
    def sealed(self) -> bool:
        return self._sealed

    # -- queries -----------------------------------------------------------

    def var_by_name(self, name: str) -> int:
        return self._by_name[name]

    def has_var(self, name: str) -> bool:
        return name in self._by_name

    def binary_count(self) -> int:
        return sum(1 for v in self.variables if v.kind == "B" and not v.fixed)

    def rows_by_tag(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.tag] = out.get(c.tag, 0) + 1
        return out

    def evaluate_point(self, values: dict[str, float]):
        """Max constraint/bound violation of a named assignment.

        Missing names default to 0; names absent from the model are ignored
        when their value is 0 (structurally pruned variables) and rejected
        otherwise.  Returns (max_violation, worst_description).
        """
        x = [0.0] * len(self.variables)
        for name, val in values.items():
            if name not in self._by_name:
                if abs(float(val)) > 1e-12:
                    raise ModelError(f"nonzero value for unknown variable {name!r}")
                continue
            x[self._by_name[name]] = float(val)
        worst, desc = 0.0, "feasible"
        for v in self.variables:
            viol = max(v.lb - x[v.vid], x[v.vid] - v.ub)
            if viol > worst:
                worst, desc = viol, f"bound on {v.name}"
        for c in self.constraints:
            viol = c.violation(x)
            if viol > worst:
                worst, desc = viol, f"row {c.cid} [{c.tag}]"
        return worst, desc

    def objective_value(self, values: dict[str, float]) -> float:
        x = [0.0] * len(self.variables)
        for name, val in values.items():
            if name in self._by_name:
                x[self._by_name[name]] = float(val)
        return self.objective.value(x)


# -- fingerprint -----------------------------------------------------------


def model_fingerprint(m: Model) -> int:
    """64-bit digest of a sealed model, invariant to variable naming and to
    the insertion order of constraints."""
    if not m.sealed:
        raise ModelError("fingerprint requires a sealed model")
    h = hashlib.sha256()
    for v in m.variables:
        h.update(f"V {v.kind} {v.lb.hex()} {v.ub.hex()}\n".encode())
    rows = []
    for c in m.constraints:
        terms = " ".join(f"{vid}:{coef.hex()}" for vid, coef in c.expr.sorted_items())
        rows.append(f"R {c.sense} {c.rhs.hex()} {terms}")
    for row in sorted(rows):
        h.update(row.encode())
        h.update(b"\n")
    terms = " ".join(f"{vid}:{coef.hex()}" for vid, coef in m.objective.sorted_items())
    h.update(f"O {m.objective.const.hex()} {terms}\n".encode())
    return int.from_bytes(h.digest()[:8], "big")


# -- MPS writer --------------------------------------------------------------

_NAME_RE = re.compile(r"[^A-Za-z0-9_]")


def _short_names(prefix: str, items) -> list[str]:
    """Deterministic MPS-safe (<= 8 chars) names, collision-free."""
    used: set[str] = set()
    out = []
    for i, raw in enumerate(items):
        cand = _NAME_RE.sub("_", raw)[:8]
        if not cand or cand[0].isdigit() or cand in used:
            cand = f"{prefix}{i}"
        used.add(cand)
        out.append(cand)
    return out


def _num(x: float) -> str:
    """Format a number into <= 12 characters."""
    for prec in (11, 10, 8, 6, 5):
        s = f"{x:.{prec}G}"
        if len(s) <= 12:
            return s
    return f"{x:.3G}"


def _mps_line(f1, f2, f3="", f4="", f5="", f6=""):
    # classic fixed-format field starts: 2, 5, 15, 25, 40, 50
    line = " " + f1.ljust(2) + " " + f2.ljust(9) + " " + f3.ljust(9) + " " + f4.ljust(14) + " " + f5.ljust(9) + " " + f6
    return line.rstrip()


def write_mps(m: Model, path) -> None:
    """Fixed-format MPS dump: NAME/ROWS/COLUMNS/RHS/BOUNDS/ENDATA.

    Binaries are wrapped in INTORG/INTEND markers and given explicit bounds.
    Output is byte-identical for identical models.  A nonzero objective
    constant is emitted, negated, as the RHS of the objective row.
    """
    if not m.sealed:
        raise ModelError("write_mps requires a sealed model")
    vnames = _short_names("V", (v.name for v in m.variables))
    rnames = _short_names("R", (f"c{c.cid}" for c in m.constraints))
    lines = ["NAME          " + _NAME_RE.sub("_", m.name)[:8]]
    lines.append("ROWS")
    lines.append(" N  OBJ")
    sense_code = {"<=": "L", ">=": "G", "==": "E"}
    for c in m.constraints:
        lines.append(f" {sense_code[c.sense]}  {rnames[c.cid]}")
    lines.append("COLUMNS")
    cols: list[list[tuple[str, float]]] = [[] for _ in m.variables]
    for vid, coef in m.objective.sorted_items():
        cols[vid].append(("OBJ", coef))
    for c in m.constraints:
        for vid, coef in c.expr.sorted_items():
            cols[vid].append((rnames[c.cid], coef))
    in_int = False
    marker = 0
    for v in m.variables:
        if (v.kind == "B") != in_int:
            tag = "'INTORG'" if not in_int else "'INTEND'"
            lines.append(_mps_line("", f"M{marker}", "'MARKER'", "", tag))
            marker += 1
            in_int = not in_int
        entries = cols[v.vid]
        if not entries:
            entries = [("OBJ", 0.0)]  # keep empty columns declared
        for j in range(0, len(entries), 2):
            pair = entries[j : j + 2]
            if len(pair) == 2:
                (r1, a1), (r2, a2) = pair
                lines.append(_mps_line("", vnames[v.vid], r1, _num(a1), r2, _num(a2)))
            else:
                (r1, a1) = pair[0]
                lines.append(_mps_line("", vnames[v.vid], r1, _num(a1)))
    if in_int:
        lines.append(_mps_line("", f"M{marker}", "'MARKER'", "", "'INTEND'"))
    lines.append("RHS")
    if m.objective.const != 0.0:
        lines.append(_mps_line("", "RHS", "OBJ", _num(-m.objective.const)))
    for c in m.constraints:
        if c.rhs != 0.0:
            lines.append(_mps_line("", "RHS", rnames[c.cid], _num(c.rhs)))
    lines.append("BOUNDS")
    for v in m.variables:
        nm = vnames[v.vid]
        if v.fixed:
            lines.append(_mps_line("FX", "BND", nm, _num(v.lb)))
            continue
        if v.lb != 0.0:
            lines.append(_mps_line("LO", "BND", nm, _num(v.lb)))
        if v.ub != INF:
            lines.append(_mps_line("UP", "BND", nm, _num(v.ub)))
    lines.append("ENDATA")
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="ascii") as f:
        f.write(text)


def write_debug(m: Model) -> str:
    """One constraint per line, with tag, using real variable names."""
    name = {v.vid: v.name for v in m.variables}

    def fmt(expr: LinExpr) -> str:
        parts = [f"{c:+g} {name[v]}" for v, c in expr.sorted_items()]
        return " ".join(parts) if parts else "0"

    out = [f"# model {m.name}: {len(m.variables)} vars, {len(m.constraints)} rows"]
    out.append(f"min: {fmt(m.objective)} {m.objective.const:+g}")
    for c in m.constraints:
        out.append(f"[{c.tag}] {fmt(c.expr)} {c.sense} {c.rhs:g}")
    return "\n".join(out) + "\n"
