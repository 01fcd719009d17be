"""Combination of per-scenario / per-subset dual bounds into one ledger.

Each entry carries the scenario scope it covers, a weight, the proved bound
and its provenance.  The combined figure is the weighted sum; it lower-bounds
the full stochastic problem whenever the scopes partition the scenario set
(entries may mix formulations, since each is independently a lower bound of
its sub-problem).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass


class LedgerError(Exception):
    pass


@dataclass(frozen=True)
class BoundEntry:
    scope: tuple  # scenario ids covered
    weight: float
    bound: float  # dual bound of the sub-problem (commonly per unit weight)
    formulation: str = "v0"
    k0: int | None = None
    provenance: str = "internal"
    status: str = "optimal"
    nodes: int = 0
    elapsed: float = 0.0

    @property
    def contribution(self) -> float:
        return self.weight * self.bound


@dataclass(frozen=True)
class BoundLedger:
    entries: tuple
    combined: float

    def to_json(self) -> str:
        doc = {
            "combined": self.combined,
            "entries": [asdict(e) for e in self.entries],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "BoundLedger":
        doc = json.loads(text)
        entries = tuple(
            BoundEntry(
                scope=tuple(e["scope"]),
                weight=e["weight"],
                bound=e["bound"],
                formulation=e.get("formulation", "v0"),
                k0=e.get("k0"),
                provenance=e.get("provenance", "internal"),
                status=e.get("status", "optimal"),
                nodes=e.get("nodes", 0),
                elapsed=e.get("elapsed", 0.0),
            )
            for e in doc["entries"]
        )
        return BoundLedger(entries, doc["combined"])


def combine_bounds(entries, scenario_ids) -> BoundLedger:
    """Weighted sum of the entries, after checking they partition the
    scenario set exactly once."""
    covered = []
    for e in entries:
        covered.extend(e.scope)
    if sorted(covered) != sorted(set(covered)):
        dup = sorted({s for s in covered if covered.count(s) > 1})
        raise LedgerError(f"scenario(s) covered more than once: {dup}")
    if set(covered) != set(scenario_ids):
        missing = sorted(set(scenario_ids) - set(covered))
        extra = sorted(set(covered) - set(scenario_ids))
        parts = []
        if missing:
            parts.append(f"uncovered scenarios {missing}")
        if extra:
            parts.append(f"unknown scenarios {extra}")
        raise LedgerError("; ".join(parts))
    if any(not math.isfinite(e.bound) for e in entries):
        combined = -math.inf
    else:
        combined = sum(e.contribution for e in entries)
    return BoundLedger(tuple(entries), combined)


def render_table(ledger: BoundLedger, primal_ref: float | None = None, with_timing=True) -> str:
    """Tab-separated bound report; one row per entry plus the combination."""
    rows = ["scope\tweight\tdual_bound\tcontribution\tformulation\tk0\tstatus\tnodes"
            + ("\telapsed_s" if with_timing else "")]
    for e in ledger.entries:
        row = (
            f"{','.join(e.scope)}\t{e.weight:.6g}\t{e.bound:.10g}\t{e.contribution:.10g}"
            f"\t{e.formulation}\t{'' if e.k0 is None else e.k0}\t{e.status}\t{e.nodes}"
        )
        if with_timing:
            row += f"\t{e.elapsed:.3f}"
        rows.append(row)
    rows.append(f"COMBINED\t\t{ledger.combined:.10g}\t{ledger.combined:.10g}\t\t\t\t"
                + ("\t" if with_timing else ""))
    if primal_ref is not None:
        gap = (primal_ref - ledger.combined) / primal_ref if primal_ref else math.nan
        rows.append(f"PRIMAL_REF\t\t{primal_ref:.10g}\tgap\t{100.0 * gap:.4f}%\t\t\t"
                    + ("\t" if with_timing else ""))
    return "\n".join(rows) + "\n"
