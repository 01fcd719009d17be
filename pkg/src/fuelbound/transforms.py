"""Bound-preserving problem reductions: weekly aggregation and scenario splits.

Aggregating production time steps to weeks keeps every formulation built on
the output a valid lower bound of the original problem *provided* the step
duration is constant and thermal production costs are constant within each
week.  Both hypotheses are checked exactly (bitwise) before the transform
runs; a violation refuses with the counterexample rather than warning,
because the bound guarantee genuinely fails without them.

Scenario decomposition splits the scenario set into disjoint subsets; each
sub-instance keeps the original scenario weights, and because builders scale
first-stage costs by the total scenario mass, the optimum of a sub-instance
is exactly its additive term of the decomposition bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Instance, Scenario, T1Unit, T2Unit, TimeGrid, subset_scenarios


class AggregationError(Exception):
    pass


class PartitionError(Exception):
    pass


@dataclass(frozen=True)
class AggregationCertificate:
    holds: bool
    step_duration: float | None  # the common step duration when it holds
    witness: tuple | None  # ('duration', t, t') or ('cost', t, t', j_uid, sid)
                           # or ('fuel_factor', t, t')

    def describe(self) -> str:
        if self.holds:
            return "weekly aggregation hypotheses hold"
        kind = self.witness[0]
        if kind == "duration":
            return f"step durations differ at t={self.witness[1]} vs t={self.witness[2]}"
        if kind == "fuel_factor":
            return f"fuel factors differ at t={self.witness[1]} vs t={self.witness[2]}"
        _, t, tp, j, s = self.witness
        return f"thermal cost varies within a week: unit {j}, scenario {s}, t={t} vs t={tp}"


def check_weekly_cost_hypothesis(inst: Instance) -> AggregationCertificate:
    """Exact check of the aggregation hypotheses.

    Required: constant step duration over the whole horizon, and thermal
    costs constant within each week (per unit and scenario).  Fuel factors
    must also be week-constant for the fuel bookkeeping to aggregate exactly.
    Comparisons are bitwise: equal means equal.
    """
    g = inst.grid
    d0 = g.durations[0]
    for t in range(1, g.T):
        if g.durations[t] != d0:
            return AggregationCertificate(False, None, ("duration", 0, t))
    for w in g.weeks():
        steps = g.week_steps(w)
        f0 = g.fuel_factors[steps[0]]
        for t in steps[1:]:
            if g.fuel_factors[t] != f0:
                return AggregationCertificate(False, None, ("fuel_factor", steps[0], t))
    for u in inst.t1_units:
        for si, s in enumerate(inst.scenarios):
            row = u.cost[si]
            for w in g.weeks():
                steps = g.week_steps(w)
                c0 = row[steps[0]]
                for t in steps[1:]:
                    if row[t] != c0:
                        return AggregationCertificate(
                            False, None, ("cost", steps[0], t, u.uid, s.sid)
                        )
    return AggregationCertificate(True, d0, None)


def aggregate_time_steps(inst: Instance) -> Instance:
    """Weekly instance: durations/fuel factors summed, per-step data averaged.

    The averaging weight is 1/n_w (steps per week): the bound proof needs the
    weekly energy D^w * y_w to equal the summed step energies, which forces
    alpha = D / D^w.  Refuses when the hypotheses fail.
    """
    cert = check_weekly_cost_hypothesis(inst)
    if not cert.holds:
        raise AggregationError("aggregation refused: " + cert.describe())
    g = inst.grid
    W = g.W
    if g.T == W:
        return inst  # already weekly
    week_steps = [g.week_steps(w) for w in g.weeks()]

    def avg(row):
        return tuple(float(np.mean([row[t] for t in steps])) for steps in week_steps)

    grid = TimeGrid(
        durations=tuple(sum(g.durations[t] for t in steps) for steps in week_steps),
        step_week=tuple(range(1, W + 1)),
        fuel_factors=tuple(sum(g.fuel_factors[t] for t in steps) for steps in week_steps),
    )
    t1 = tuple(
        T1Unit(
            u.uid,
            cost=tuple(avg(row) for row in u.cost),
            pmin=tuple(avg(row) for row in u.pmin),
            pmax=tuple(avg(row) for row in u.pmax),
        )
        for u in inst.t1_units
    )
    t2 = tuple(
        T2Unit(u.uid, u.xi, u.stock_value, avg(u.pmax), u.cycles) for u in inst.t2_units
    )
    scen = tuple(Scenario(s.sid, s.weight, avg(s.demand)) for s in inst.scenarios)
    return Instance(grid, t1, t2, scen, inst.constraints)


@dataclass(frozen=True)
class ScenarioPartition:
    parts: tuple  # tuple of tuples of scenario ids, disjoint and covering

    @staticmethod
    def singletons(inst: Instance) -> "ScenarioPartition":
        return ScenarioPartition(tuple((s.sid,) for s in inst.scenarios))

    @staticmethod
    def whole(inst: Instance) -> "ScenarioPartition":
        return ScenarioPartition((tuple(s.sid for s in inst.scenarios),))

    @staticmethod
    def parse(spec: str, inst: Instance) -> "ScenarioPartition":
        """Partition spec: 'singletons', 'whole', or blocks like '1,2|3'
        where tokens are scenario ids or 1-based positions."""
        spec = spec.strip()
        if spec == "singletons":
            return ScenarioPartition.singletons(inst)
        if spec == "whole":
            return ScenarioPartition.whole(inst)
        ids = {s.sid for s in inst.scenarios}

        def resolve(tok: str) -> str:
            if tok in ids:
                return tok
            if tok.isdigit() and 1 <= int(tok) <= len(inst.scenarios):
                return inst.scenarios[int(tok) - 1].sid
            return tok  # left as-is; validate() reports it

        parts = tuple(
            tuple(resolve(tok.strip()) for tok in group.split(",") if tok.strip())
            for group in spec.split("|")
        )
        return ScenarioPartition(parts)

    def validate(self, inst: Instance):
        seen = []
        for part in self.parts:
            if not part:
                raise PartitionError("empty partition block")
            seen.extend(part)
        ids = [s.sid for s in inst.scenarios]
        if sorted(seen) != sorted(set(seen)):
            dup = sorted({x for x in seen if seen.count(x) > 1})
            raise PartitionError(f"overlapping partition: {dup}")
        if set(seen) != set(ids):
            missing = sorted(set(ids) - set(seen))
            unknown = sorted(set(seen) - set(ids))
            msg = []
            if missing:
                msg.append(f"uncovered scenarios {missing}")
            if unknown:
                msg.append(f"unknown scenarios {unknown}")
            raise PartitionError("; ".join(msg))


def partition_scenarios(inst: Instance, partition: ScenarioPartition) -> list[Instance]:
    """One sub-instance per partition block, scenario weights unchanged."""
    partition.validate(inst)
    return [subset_scenarios(inst, part) for part in partition.parts]


def scenario_weight(inst: Instance, sids) -> float:
    by_id = {s.sid: s.weight for s in inst.scenarios}
    return sum(by_id[s] for s in sids)
