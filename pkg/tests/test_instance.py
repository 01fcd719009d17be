import dataclasses
import pathlib

import pytest

from fuelbound.instance import (
    InstanceError,
    dump_instance,
    generate_synthetic,
    parse_instance,
    parse_instance_text,
    validate_instance,
    write_instance,
)

DATA = pathlib.Path(__file__).parent / "data"


def test_roundtrip_identity():
    inst = generate_synthetic(3, (2, 2, 2, 2, 16, 4))
    again = parse_instance_text(dump_instance(inst))
    assert again == inst


def test_golden_micro_byte_for_byte():
    path = DATA / "golden_micro.fbinst"
    raw = path.read_text(encoding="utf-8")
    inst = parse_instance(path)
    assert dump_instance(inst) == raw


def test_challenge_scale_cardinalities(tmp_path):
    # A1-sized grid: 10 T2, 11 T1, 6 cycles, 10 scenarios, 1750 steps, 250 weeks
    inst = generate_synthetic(1, (10, 11, 6, 10, 1750, 250))
    p = tmp_path / "a1.fbinst"
    write_instance(inst, p)
    again = parse_instance(p)
    assert again.dims() == (10, 11, 6, 10, 1750, 250)


def test_pure_thermal_instance_is_valid():
    inst = generate_synthetic(2, (0, 1, 1, 1, 8, 4))
    assert validate_instance(inst) == []
    assert len(inst.t2_units) == 0 and len(inst.t1_units) == 1


def test_weight_sum_violation_reported():
    inst = generate_synthetic(1, (1, 1, 1, 1, 4, 4))
    text = dump_instance(inst).replace("weight: 1", "weight: 0.9")
    with pytest.raises(InstanceError, match="do not sum to 1"):
        parse_instance_text(text)


def test_syntax_error_reports_position(tmp_path):
    p = tmp_path / "bad.fbinst"
    p.write_text("fbinst/1\ngrid: [unclosed\n", encoding="utf-8")
    with pytest.raises(InstanceError, match=r"bad.fbinst:\d+:\d+"):
        parse_instance(p)


def test_missing_header_rejected():
    with pytest.raises(InstanceError, match="header"):
        parse_instance_text("grid:\n  T: 1\n")


def test_generator_deterministic():
    a = generate_synthetic(1, (2, 2, 2, 2, 16, 4))
    b = generate_synthetic(1, (2, 2, 2, 2, 16, 4))
    assert a == b


def test_generator_seed_changes_demand():
    a = generate_synthetic(1, (2, 2, 2, 2, 16, 4))
    b = generate_synthetic(2, (2, 2, 2, 2, 16, 4))
    assert a.scenarios[0].demand != b.scenarios[0].demand


def test_generator_single_cycle_micro():
    inst = generate_synthetic(9, (1, 1, 1, 1, 4, 4))
    assert inst.dims() == (1, 1, 1, 1, 4, 4)
    assert validate_instance(inst) == []


def test_generator_infeasible_dims():
    with pytest.raises(InstanceError, match="not divisible"):
        generate_synthetic(1, (1, 1, 1, 1, 10, 4))
    with pytest.raises(InstanceError, match="too small"):
        generate_synthetic(1, (1, 1, 3, 1, 4, 4))


def _mutate_cycle(inst, **changes):
    u = inst.t2_units[0]
    cycles = list(u.cycles)
    cycles[1] = dataclasses.replace(cycles[1], **changes)
    new_u = dataclasses.replace(u, cycles=tuple(cycles))
    return dataclasses.replace(inst, t2_units=(new_u,) + inst.t2_units[1:])


@pytest.mark.parametrize(
    "changes,needle",
    [
        (dict(rmin=5.0, rmax=1.0), "refuel bounds"),
        (dict(q=0.0), "retention factor"),
        (dict(q=1.5), "retention factor"),
        (dict(to=4, ta=2), "to > ta"),
        (dict(da=-1), "outage duration"),
        (dict(bo=1e9), "bo outside"),
        (dict(profile=((1.0, 1.0), (2.0, 0.5))), "not strictly decreasing"),
        (dict(profile=((10.0, 1.0), (5.0, 0.2), (0.0, 0.1))), "not concave"),
    ],
)
def test_validator_catches_cycle_mutations(changes, needle):
    inst = generate_synthetic(4, (1, 1, 2, 1, 8, 4))
    bad = _mutate_cycle(inst, **changes)
    msgs = validate_instance(bad)
    assert any(needle in m for m in msgs), msgs


def test_validator_catches_grid_and_scenario_mutations():
    inst = generate_synthetic(4, (1, 1, 1, 2, 8, 4))
    g = inst.grid
    bad = dataclasses.replace(
        inst, grid=dataclasses.replace(g, durations=(-1.0,) + g.durations[1:])
    )
    assert any("duration" in m for m in validate_instance(bad))
    s = inst.scenarios[0]
    bad = dataclasses.replace(
        inst, scenarios=(dataclasses.replace(s, weight=-0.5),) + inst.scenarios[1:]
    )
    assert any("weight" in m or "sum" in m for m in validate_instance(bad))


def test_validator_dangling_constraint_member():
    inst = generate_synthetic(6, (2, 1, 1, 1, 8, 4))
    c = inst.constraints[0]
    bad_c = dataclasses.replace(c, members=(("nope", 1),))
    bad = dataclasses.replace(inst, constraints=(bad_c,))
    assert any("unknown unit" in m for m in validate_instance(bad))


def test_initial_cycle_must_be_fixed():
    inst = generate_synthetic(4, (1, 1, 1, 1, 8, 4))
    u = inst.t2_units[0]
    cycles = (dataclasses.replace(u.cycles[0], ta=3),) + u.cycles[1:]
    bad = dataclasses.replace(inst, t2_units=(dataclasses.replace(u, cycles=cycles),))
    assert any("fixed start week" in m for m in validate_instance(bad))
