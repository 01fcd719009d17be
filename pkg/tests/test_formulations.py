import dataclasses

import pytest

from fuelbound.bnb import solve_lp, solve_mip
from fuelbound.formulations import (
    BuildError,
    RelaxationConfig,
    build_model,
    build_v0,
    build_v3,
    build_v3_k0,
    add_light_ct6,
    map_v0_solution_to_v3,
    map_v0_solution_to_v3k,
    production_spans,
    schedule_constraint_rows,
    _StepRef,
)
from fuelbound.instance import ScheduleConstraint, generate_synthetic
from fuelbound.model import model_fingerprint
from fuelbound.preprocess import tighten_time_windows
from conftest import close, leq


# ---------------------------------------------------------------------------
# row counts per family
# ---------------------------------------------------------------------------


def test_v0_row_counts_micro():
    # 1 T2 (K=1), 1 T1, S=1, T=4, W=4; windows: k=1 free on [1,3]
    inst = generate_synthetic(7, (1, 1, 1, 1, 4, 4))
    windows = tighten_time_windows(inst)
    m = build_v0(inst, windows=windows)
    I, J, K, S, T, W = inst.dims()
    rows = m.rows_by_tag()
    assert rows["PANdemand"] == S * T == 4
    assert rows["PANflexPower"] == 2 * J * S * T
    assert rows["PANrefuel"] == 2 * I * K
    assert rows["PANfuelInit"] == I * S
    assert rows["PANconso"] == I * (K + 1) * S
    assert rows["PANpertes"] == I * K * S
    assert rows["PANmaxStock"] == I * (K + 1) * S
    assert rows["PANanticip"] == I * K * S  # cycles with a successor
    assert rows["PANfuelFinal"] == I * (K + 1) * S
    # coupling: one row per production variable
    spans = production_spans(inst, windows)
    assert rows["PANcoupling"] == S * sum(len(v) for v in spans.values())
    # free steps 1..2 -> one monotonicity row
    assert rows["PANprecedence"] == 1


def test_zero_t2_reduces_to_dispatch():
    inst = generate_synthetic(2, (0, 2, 1, 1, 8, 4))
    m = build_v0(inst)
    assert m.binary_count() == 0
    r = solve_lp(m)
    assert r.status == "optimal"
    # greedy merit order per step equals the LP
    expected = 0.0
    s = inst.scenarios[0]
    for t in range(inst.grid.T):
        units = sorted(inst.t1_units, key=lambda u: u.cost[0][t])
        left = s.demand[t]
        for u in units:
            take = min(left, u.pmax[0][t])
            expected += take * u.cost[0][t] * inst.grid.durations[t]
            left -= take
        assert left <= 1e-9
    assert close(r.value, expected)


def test_build_determinism_fingerprint(micro):
    inst, windows = micro
    cfg = RelaxationConfig(ct6_mode="per_cycle")
    a = build_v0(inst, cfg, windows=windows)
    b = build_v0(inst, cfg, windows=windows)
    assert model_fingerprint(a) == model_fingerprint(b)


# ---------------------------------------------------------------------------
# stock elimination
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_stock_elimination_value_preserving(seed):
    inst = generate_synthetic(seed, (1, 2, 2, 1, 12, 4), bo_frac=0.15)
    windows = tighten_time_windows(inst)
    plain = solve_mip(build_v0(inst, windows=windows))
    elim = solve_mip(build_v0(inst, RelaxationConfig(eliminate_stocks=True), windows=windows))
    assert plain.status == elim.status == "optimal"
    assert close(plain.value, elim.value)


def test_elimination_drops_stock_variables(micro):
    inst, windows = micro
    m = build_v0(inst, RelaxationConfig(eliminate_stocks=True), windows=windows)
    assert not any(v.name.startswith(("xinit[", "xfin[")) for v in m.variables)
    assert "PANconso" not in m.rows_by_tag()
    assert "PANpertes" not in m.rows_by_tag()


# ---------------------------------------------------------------------------
# light stretch caps
# ---------------------------------------------------------------------------


def _light_counts(inst, mode):
    windows = tighten_time_windows(inst)
    base = build_v0(inst, windows=windows)
    lit = build_v0(inst, RelaxationConfig(ct6_mode=mode), windows=windows)
    added_rows = len(lit.constraints) - len(base.constraints)
    added_vars = len(lit.variables) - len(base.variables)
    return added_rows, added_vars


@pytest.mark.parametrize("dims", [(1, 1, 1, 1, 4, 4), (2, 1, 2, 2, 8, 4), (1, 2, 2, 3, 12, 4)])
def test_light_ct6_row_and_variable_counts(dims):
    inst = generate_synthetic(11, dims, bo_frac=0.2)
    I, J, K, S, T, W = inst.dims()
    M = len(inst.t2_units[0].cycles[1].profile) - 1 if K else 0
    rows_pc, vars_pc = _light_counts(inst, "per_cycle")
    assert vars_pc == I * S * T
    assert rows_pc == I * S * T * (M + 1) * K
    rows_sh, vars_sh = _light_counts(inst, "shared")
    assert vars_sh == I * S * T
    assert rows_sh == I * S * T * (K + M)


def test_single_segment_cap_arithmetic():
    """Profile f=(10,0), c=(1,0): stock 5 caps the ratio at 0.5."""
    from fuelbound.formulations import _segments

    segs = _segments(((10.0, 1.0), (0.0, 0.0)))
    assert segs == [(0.1, 0.0, 0.0)]
    slope, f1, c1 = segs[0]
    assert slope * (5.0 - f1) + c1 == pytest.approx(0.5)
    assert slope * (12.0 - f1) + c1 > 1.0  # above the threshold the cap is slack


def test_shared_mode_requires_uniform_profiles():
    inst = generate_synthetic(3, (1, 1, 2, 1, 8, 4), bo_frac=0.2)
    u = inst.t2_units[0]
    cycles = list(u.cycles)
    cycles[2] = dataclasses.replace(cycles[2], profile=((5.0, 1.0), (0.0, 0.0)))
    inst = dataclasses.replace(
        inst, t2_units=(dataclasses.replace(u, cycles=tuple(cycles)),)
    )
    with pytest.raises(BuildError, match="cycle-independent"):
        build_v0(inst, RelaxationConfig(ct6_mode="shared"))


def test_light_ct6_needs_unsealed_v0():
    inst = generate_synthetic(3, (1, 1, 1, 1, 4, 4))
    sealed = build_v0(inst)
    with pytest.raises(BuildError, match="seal"):
        add_light_ct6(sealed, inst, "per_cycle")


def test_config_validation():
    inst = generate_synthetic(1, (1, 1, 1, 1, 4, 4))
    with pytest.raises(BuildError, match="k0"):
        build_model(inst, RelaxationConfig(formulation="v3k", k0=9))
    with pytest.raises(BuildError, match="v0"):
        build_model(inst, RelaxationConfig(formulation="v3", ct6_mode="shared"))


# ---------------------------------------------------------------------------
# relaxation orderings and constructive mappings
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("seed", [3, 8, 13])
def test_v3_mapping_feasible_and_cost_preserving(seed):
    inst = generate_synthetic(seed, (2, 2, 2, 2, 16, 4))
    windows = tighten_time_windows(inst)
    v0 = solve_mip(build_v0(inst, windows=windows))
    m3 = build_v3(inst)
    mapped = map_v0_solution_to_v3(inst, windows, v0.solution)
    viol, desc = m3.evaluate_point(mapped)
    assert viol <= 1e-6, desc
    assert close(m3.objective_value(mapped), v0.value)
    v3 = solve_mip(m3)
    assert leq(v3.value, v0.value)


@pytest.mark.parametrize("k0", [0, 1, 2])
def test_v3k_mapping_feasible_and_cost_preserving(k0):
    inst = generate_synthetic(4, (2, 2, 2, 2, 16, 4))
    windows = tighten_time_windows(inst)
    v0 = solve_mip(build_v0(inst, windows=windows))
    mk = build_v3_k0(inst, k0, windows=windows)
    mapped = map_v0_solution_to_v3k(inst, windows, v0.solution, k0)
    viol, desc = mk.evaluate_point(mapped)
    assert viol <= 1e-6, desc
    assert close(mk.objective_value(mapped), v0.value)
    vk = solve_mip(mk)
    assert leq(vk.value, v0.value)


def test_v3_strictly_below_v0_when_anticipation_binds():
    """A binding residual ceiling forces v0 to burn fuel it values; v3 has no
    such constraint and keeps it, so the bound is strictly weaker."""
    inst = generate_synthetic(1, (1, 1, 1, 1, 8, 4))
    u = inst.t2_units[0]
    cycles = [
        dataclasses.replace(u.cycles[0], amax=2.0, smax=40.0),
        dataclasses.replace(u.cycles[1], amax=2.0, smax=40.0, rmin=0.0, rmax=5.0),
    ]
    # high stock value: hoarding fuel pays, but the ceiling forces burning
    unit = dataclasses.replace(u, xi=20.0, stock_value=4.0, cycles=tuple(cycles))
    cycles = [dataclasses.replace(c, rmin=unit.xi, rmax=unit.xi) if c.k == 0 else c for c in unit.cycles]
    unit = dataclasses.replace(unit, cycles=tuple(cycles))
    inst = dataclasses.replace(inst, t2_units=(unit,))
    windows = tighten_time_windows(inst)
    v0 = solve_mip(build_v0(inst, windows=windows))
    v3 = solve_mip(build_v3(inst))
    assert v3.value < v0.value - 1e-6


def test_v3k_at_K_matches_v0(micro):
    inst, windows = micro
    K = inst.t2_units[0].K
    v0 = solve_mip(build_v0(inst, windows=windows))
    vk = solve_mip(build_v3_k0(inst, K, windows=windows))
    assert close(vk.value, v0.value, 1e-7)


def test_v3k_bound_improves_with_k0():
    inst = generate_synthetic(9, (2, 1, 2, 1, 12, 4))
    windows = tighten_time_windows(inst)
    vals = [solve_mip(build_v3_k0(inst, k0, windows=windows)).value for k0 in (0, 1, 2)]
    assert leq(vals[0], vals[1], 1e-9) and leq(vals[1], vals[2], 1e-9)


# ---------------------------------------------------------------------------
# scheduling constraint family
# ---------------------------------------------------------------------------


def _sched_eval(inst, constraint, schedule):
    """Evaluate the built rows of one constraint on fixed start weeks."""
    inst = dataclasses.replace(inst, constraints=(constraint,))
    windows = tighten_time_windows(inst)

    class _FixedRef(_StepRef):
        def get(self, uid, k, w):
            u = self.inst.t2_by_id(uid)
            if k > u.K:
                return ("const", 0)
            if k < 0:
                return ("const", 1 if w >= 0 else 0)
            start = schedule.get((uid, k))
            return ("const", 1 if start is not None and start <= w else 0)

    ref = _FixedRef(inst, windows, {}, 10**9)
    worst = 0.0
    for expr, sense, rhs, tag in schedule_constraint_rows(inst, ref):
        assert not expr.terms
        worst = max(worst, expr.const - rhs)
    return worst


def _two_unit_instance():
    return generate_synthetic(6, (2, 1, 1, 1, 16, 8))


def test_ct16_spacing_evaluation():
    inst = _two_unit_instance()
    c = ScheduleConstraint(
        kind="CT16", name="c", members=(("t2_0", 1), ("t2_1", 1)), spacing=2
    )
    # starts one week apart violate a 2-week start spacing; 2 apart is fine
    assert _sched_eval(inst, c, {("t2_0", 1): 3, ("t2_1", 1): 4}) > 0
    assert _sched_eval(inst, c, {("t2_0", 1): 3, ("t2_1", 1): 5}) == 0


def test_ct14_overlap_allowance():
    inst = _two_unit_instance()
    # spacing -1 with da=1: offset (da+se)^+ = 0, so members drop out: never binding
    c = ScheduleConstraint(
        kind="CT14", name="c", members=(("t2_0", 1), ("t2_1", 1)), spacing=-1
    )
    assert _sched_eval(inst, c, {("t2_0", 1): 3, ("t2_1", 1): 3}) == 0
    c = dataclasses.replace(c, spacing=1)
    assert _sched_eval(inst, c, {("t2_0", 1): 3, ("t2_1", 1): 4}) > 0


def test_ct20_overlap_cap_makes_model_infeasible():
    inst = _two_unit_instance()
    u0, u1 = inst.t2_units
    # force both outages into the same single week
    units = []
    for u in (u0, u1):
        cycles = list(u.cycles)
        cycles[1] = dataclasses.replace(cycles[1], to=3, ta=3, da=2)
        units.append(dataclasses.replace(u, cycles=tuple(cycles)))
    c = ScheduleConstraint(
        kind="CT20", name="c", members=(("t2_0", 1), ("t2_1", 1)),
        weekly_cap=(1,) * inst.grid.W,
    )
    inst = dataclasses.replace(inst, t2_units=tuple(units), constraints=(c,))
    r = solve_mip(build_v0(inst))
    assert r.status == "infeasible"


def test_ct21_offline_power_window():
    inst = _two_unit_instance()
    week_power = sum(inst.t2_units[0].pmax[t] for t in inst.grid.week_steps(3))
    c = ScheduleConstraint(
        kind="CT21", name="c", members=(("t2_0", 1), ("t2_1", 1)),
        window=(3, 3), max_offline=(week_power * 1.5,),
    )
    # both offline in week 3 exceeds 1.5x one unit's weekly power
    assert _sched_eval(inst, c, {("t2_0", 1): 3, ("t2_1", 1): 3}) > 0
    assert _sched_eval(inst, c, {("t2_0", 1): 3, ("t2_1", 1): 5}) == 0


def test_out_of_range_week_uses_extension_convention():
    inst = _two_unit_instance()
    c = ScheduleConstraint(
        kind="CT17", name="c", members=(("t2_0", 1), ("t2_1", 1)), spacing=3
    )
    # evaluating near w=1 hits w - da - spacing < 1, which contributes 0
    assert _sched_eval(inst, c, {("t2_0", 1): 1, ("t2_1", 1): 6}) == 0


def test_v3k_strictly_weaker_at_low_k0():
    inst = generate_synthetic(9, (2, 1, 2, 1, 12, 4))
    windows = tighten_time_windows(inst)
    v_lo = solve_mip(build_v3_k0(inst, 0, windows=windows)).value
    v_hi = solve_mip(build_v3_k0(inst, 2, windows=windows)).value
    assert v_lo < v_hi - 1e-6


def test_ct15_windowed_spacing_evaluation():
    inst = _two_unit_instance()
    c = ScheduleConstraint(
        kind="CT15", name="c", members=(("t2_0", 1), ("t2_1", 1)),
        spacing=2, window=(3, 5),
    )
    # overlap inside the window trips the rule; outside it does not
    assert _sched_eval(inst, c, {("t2_0", 1): 3, ("t2_1", 1): 4}) > 0
    c_late = dataclasses.replace(c, window=(7, 8))
    assert _sched_eval(inst, c_late, {("t2_0", 1): 3, ("t2_1", 1): 4}) == 0


def test_ct18_end_to_start_spacing_evaluation():
    # the start+end event windows of one outage overlap unless spacing <= da,
    # so use 2-week outages with a 2-week end-to-start rule
    inst = _two_unit_instance()
    units = []
    for u in inst.t2_units:
        cycles = (u.cycles[0], dataclasses.replace(u.cycles[1], da=2))
        units.append(dataclasses.replace(u, cycles=tuple(cycles)))
    inst = dataclasses.replace(inst, t2_units=tuple(units))
    c = ScheduleConstraint(
        kind="CT18", name="c", members=(("t2_0", 1), ("t2_1", 1)), spacing=2
    )
    # unit0 occupies weeks 3-4 (end event week 5); a start at week 6 is too close
    assert _sched_eval(inst, c, {("t2_0", 1): 3, ("t2_1", 1): 6}) > 0
    assert _sched_eval(inst, c, {("t2_0", 1): 3, ("t2_1", 1): 7}) == 0


def test_all_formulations_tagged(micro):
    from fuelbound.model import ALLOWED_TAGS

    inst, windows = micro
    models = [
        build_v0(inst, windows=windows),
        build_v0(inst, RelaxationConfig(ct6_mode="per_cycle"), windows=windows),
        build_v0(inst, RelaxationConfig(eliminate_stocks=True), windows=windows),
        build_v3(inst),
        build_v3_k0(inst, 0, windows=windows),
        build_v3_k0(inst, 1, windows=windows),
    ]
    for m in models:
        assert set(m.rows_by_tag()) <= ALLOWED_TAGS


def test_midscale_build_is_quick():
    import time

    t0 = time.time()
    inst = generate_synthetic(1, (4, 4, 2, 3, 84, 12))
    m = build_v0(inst, windows=tighten_time_windows(inst))
    assert len(m.variables) > 2000
    assert time.time() - t0 < 5.0
