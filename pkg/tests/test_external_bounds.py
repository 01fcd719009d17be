import json
import pathlib
import sys

import pytest

from fuelbound.bnb import solve_mip
from fuelbound.bounds import BoundEntry, BoundLedger, LedgerError, combine_bounds, render_table
from fuelbound.external import AdapterConfig, ExternalSolverError, external_solve
from fuelbound.formulations import build_v0
from fuelbound.instance import generate_synthetic
from fuelbound.model import write_mps
from fuelbound.preprocess import tighten_time_windows
from conftest import close

DATA = pathlib.Path(__file__).parent / "data"

STUB_ADAPTER = {
    "command": f"{sys.executable} {DATA / 'stub_lp_solver.py'} {{mps}}",
    "objective_pattern": r"objective:\s*(-?[\d.eE+]+)",
    "bound_pattern": r"best bound:\s*(-?[\d.eE+]+)",
    "status_patterns": [["status: infeasible", "infeasible"], ["status: optimal", "optimal"]],
}


def _adapter(tmp_path, **overrides) -> AdapterConfig:
    doc = dict(STUB_ADAPTER)
    doc.update(overrides)
    p = tmp_path / "adapter.json"
    p.write_text(json.dumps(doc))
    return AdapterConfig.load(p)


def test_stub_adapter_roundtrip(tmp_path):
    echo = f"{sys.executable} -c \"print('status: optimal'); print('objective: 42.5'); print('best bound: 41.0')\""
    adapter = _adapter(tmp_path, command=echo + " {mps}")
    res = external_solve(tmp_path / "ignored.mps", adapter)
    assert res.status == "optimal" and res.value == 42.5 and res.bound == 41.0
    assert res.provenance == "external"


def test_malformed_output_raises(tmp_path):
    adapter = _adapter(tmp_path, command=f"{sys.executable} -c \"print('nonsense')\" {{mps}}")
    with pytest.raises(ExternalSolverError, match="pattern"):
        external_solve(tmp_path / "x.mps", adapter)


def test_missing_executable_raises(tmp_path):
    adapter = _adapter(tmp_path, command="definitely-not-a-solver {mps}")
    with pytest.raises(ExternalSolverError, match="not found"):
        external_solve(tmp_path / "x.mps", adapter)


def test_nonzero_exit_raises(tmp_path):
    adapter = _adapter(tmp_path, command=f"{sys.executable} -c \"import sys; sys.exit(3)\" {{mps}}")
    with pytest.raises(ExternalSolverError, match="exited with 3"):
        external_solve(tmp_path / "x.mps", adapter)


def test_external_agrees_with_internal_on_fixed_binary_model(tmp_path):
    """Cross-solver check through the MPS file: all binaries are fixed by the
    windows, so the stub's LP solve is the exact optimum."""
    inst = generate_synthetic(1, (2, 2, 2, 2, 16, 4))
    windows = tighten_time_windows(inst)
    m = build_v0(inst, windows=windows)
    assert m.binary_count() == 0
    internal = solve_mip(m)
    mps = tmp_path / "model.mps"
    write_mps(m, mps)
    res = external_solve(mps, _adapter(tmp_path))
    assert res.status == "optimal"
    assert close(res.value, internal.value, 1e-6)


# ---------------------------------------------------------------------------
# bound ledger
# ---------------------------------------------------------------------------


def test_combine_weighted_sum():
    entries = [
        BoundEntry(scope=("s0",), weight=0.5, bound=10.0),
        BoundEntry(scope=("s1",), weight=0.5, bound=20.0),
    ]
    ledger = combine_bounds(entries, ["s0", "s1"])
    assert ledger.combined == 15.0


def test_combine_single_entry_covers_all():
    entries = [BoundEntry(scope=("s0", "s1"), weight=1.0, bound=33.0)]
    assert combine_bounds(entries, ["s0", "s1"]).combined == 33.0


def test_combine_rejects_gap_and_overlap():
    with pytest.raises(LedgerError, match="uncovered"):
        combine_bounds([BoundEntry(scope=("s0",), weight=1.0, bound=1.0)], ["s0", "s1"])
    with pytest.raises(LedgerError, match="more than once"):
        combine_bounds(
            [
                BoundEntry(scope=("s0",), weight=0.5, bound=1.0),
                BoundEntry(scope=("s0", "s1"), weight=0.5, bound=1.0),
            ],
            ["s0", "s1"],
        )


def test_ledger_json_roundtrip():
    entries = [
        BoundEntry(scope=("s0",), weight=0.25, bound=8.0, formulation="v3k", k0=1),
        BoundEntry(scope=("s1", "s2"), weight=1.0, bound=12.5, status="limit_reached"),
    ]
    ledger = combine_bounds(entries, ["s0", "s1", "s2"])
    again = BoundLedger.from_json(ledger.to_json())
    assert again == ledger


def test_render_table_gap_convention():
    ledger = combine_bounds([BoundEntry(scope=("s0",), weight=1.0, bound=90.0)], ["s0"])
    text = render_table(ledger, primal_ref=100.0, with_timing=False)
    assert "10.0000%" in text  # (primal - dual) / primal
    assert text.startswith("scope\t")


def test_mixed_formulation_combination_below_optimum():
    """Entries may mix formulations: each is a lower bound of its block."""
    from fuelbound.formulations import build_v3_k0
    from fuelbound.oracle import oracle_optimum
    from fuelbound.transforms import ScenarioPartition, partition_scenarios
    from conftest import leq

    inst = generate_synthetic(4, (1, 2, 1, 2, 8, 4))
    windows = tighten_time_windows(inst)
    subs = partition_scenarios(inst, ScenarioPartition.singletons(inst))
    weights = [s.scenarios[0].weight for s in subs]
    b0 = solve_mip(build_v0(subs[0], windows=tighten_time_windows(subs[0]))).bound
    b1 = solve_mip(build_v3_k0(subs[1], 1, windows=tighten_time_windows(subs[1]))).bound
    entries = [
        BoundEntry(scope=("s0",), weight=weights[0], bound=b0 / weights[0], formulation="v0"),
        BoundEntry(scope=("s1",), weight=weights[1], bound=b1 / weights[1],
                   formulation="v3k", k0=1),
    ]
    ledger = combine_bounds(entries, ["s0", "s1"])
    assert leq(ledger.combined, oracle_optimum(inst, windows=windows))
