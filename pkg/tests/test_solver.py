import math

import numpy as np
import pytest
from scipy.optimize import linprog

from fuelbound.bnb import solve_lp, solve_mip
from fuelbound.formulations import build_v0
from fuelbound.model import INF, LinExpr, Model
from fuelbound.oracle import oracle_optimum
from fuelbound.simplex import (
    FEAS_TOL,
    KERNEL_BACKEND,
    check_lp_optimality,
    model_arrays,
    solve_arrays,
    solve_model_lp,
)
from conftest import close, leq


def test_kernel_backend_reported():
    assert KERNEL_BACKEND in ("compiled", "python")


def test_min_x_geq_3():
    r = solve_arrays(
        np.array([1.0]), 0.0, np.array([[1.0]]), [">="], np.array([3.0]),
        np.array([0.0]), np.array([INF]),
    )
    assert r.status == "optimal" and close(r.value, 3.0)


def test_merit_order_dispatch():
    # demand 100, caps 60/60, costs 1/2 -> 60*1 + 40*2 = 140
    r = solve_arrays(
        np.array([1.0, 2.0]), 0.0, np.array([[1.0, 1.0]]), ["=="],
        np.array([100.0]), np.zeros(2), np.array([60.0, 60.0]),
    )
    assert r.status == "optimal" and close(r.value, 140.0)


def test_capacity_shortfall_infeasible():
    r = solve_arrays(
        np.array([1.0, 2.0]), 0.0, np.array([[1.0, 1.0]]), ["=="],
        np.array([100.0]), np.zeros(2), np.array([40.0, 40.0]),
    )
    assert r.status == "infeasible"


def test_unbounded_detected():
    r = solve_arrays(
        np.array([-1.0]), 0.0, np.zeros((0, 1)), [], np.zeros(0),
        np.array([0.0]), np.array([INF]),
    )
    assert r.status == "unbounded"


def test_degenerate_cycling_guard():
    # Beale's classic cycling example for Dantzig pricing
    c = np.array([-0.75, 150.0, -0.02, 6.0])
    A = np.array(
        [
            [0.25, -60.0, -0.04, 9.0],
            [0.5, -90.0, -0.02, 3.0],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )
    b = np.array([0.0, 0.0, 1.0])
    r = solve_arrays(c, 0.0, A, ["<="] * 3, b, np.zeros(4), np.full(4, INF))
    assert r.status == "optimal" and close(r.value, -0.05)


def _scipy_reference(c, A, senses, b, lb, ub):
    Au, bu, Ae, be = [], [], [], []
    for i, s in enumerate(senses):
        if s == "<=":
            Au.append(A[i]); bu.append(b[i])
        elif s == ">=":
            Au.append(-A[i]); bu.append(-b[i])
        else:
            Ae.append(A[i]); be.append(b[i])
    res = linprog(
        c,
        A_ub=np.array(Au) if Au else None, b_ub=np.array(bu) if Au else None,
        A_eq=np.array(Ae) if Ae else None, b_eq=np.array(be) if Ae else None,
        bounds=list(zip(lb, ub)), method="highs",
    )
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status, "?")
    return status, (float(res.fun) if res.status == 0 else None)


def test_random_lps_match_scipy():
    rng = np.random.default_rng(7)
    for _ in range(300):
        m, n = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        c = rng.normal(size=n)
        senses = [str(rng.choice(["<=", ">=", "=="])) for _ in range(m)]
        ub = np.where(rng.random(n) < 0.7, rng.uniform(0.5, 5.0, n), INF)
        lb = np.where(rng.random(n) < 0.3, rng.uniform(0.0, 0.4, n), 0.0)
        r = solve_arrays(c, 0.0, A, senses, b, lb, ub)
        status, val = _scipy_reference(c, A, senses, b, lb, ub)
        assert r.status == status, (r.status, status)
        if status == "optimal":
            assert close(r.value, val, 1e-6)


def test_lp_primal_feasibility_of_built_model(micro):
    inst, windows = micro
    m = build_v0(inst, windows=windows)
    sol = solve_model_lp(m)
    assert sol.status == "optimal"
    assert check_lp_optimality(m, sol) <= FEAS_TOL
    # cross-check the model LP against scipy on the same arrays
    c, const, A, senses, b, lb, ub = model_arrays(m)
    status, val = _scipy_reference(c, A, senses, b, lb, ub)
    assert status == "optimal" and close(sol.value, val + const, 1e-7)


# ---------------------------------------------------------------------------
# branch and bound
# ---------------------------------------------------------------------------


def _knapsack_model():
    # max 5a+4b+3c s.t. 2a+3b+c <= 4 -> min form; optimum -8 at a=c=1
    m = Model("knap")
    a = m.add_variable("a", kind="B", ub=1.0)
    b = m.add_variable("b", kind="B", ub=1.0)
    c = m.add_variable("c", kind="B", ub=1.0)
    m.add_constraint(LinExpr({a: 2.0, b: 3.0, c: 1.0}), "<=", 4.0, "PANdemand")
    m.set_objective(LinExpr({a: -5.0, b: -4.0, c: -3.0}))
    return m.seal()


def test_mip_knapsack_exact():
    r = solve_mip(_knapsack_model())
    assert r.status == "optimal" and close(r.value, -8.0)
    assert r.solution["a"] == pytest.approx(1.0)
    assert r.solution["c"] == pytest.approx(1.0)


def test_pure_lp_model_equals_solve_lp(micro):
    inst, windows = micro
    m = build_v0(inst, windows=windows)
    mip = solve_mip(m)
    lp = solve_lp(m)
    if m.binary_count() == 0:
        assert close(mip.value, lp.value)
    assert leq(lp.value, mip.value, 1e-9)


def test_node_limit_one_returns_root_bound():
    m = _knapsack_model()
    root = solve_lp(m)
    r = solve_mip(m, node_limit=1)
    assert r.status == "limit_reached"
    assert close(r.bound, root.value)
    assert leq(r.bound, -8.0, 1e-9)


def test_bounds_monotone_in_node_limit(micro):
    inst, windows = micro
    m = build_v0(inst, windows=windows)
    exact = solve_mip(m)
    prev = -math.inf
    for limit in (1, 2, 5, None):
        r = solve_mip(m, node_limit=limit)
        assert r.bound >= prev - 1e-9
        assert leq(r.bound, exact.value, 1e-9)
        prev = r.bound
    assert close(prev, exact.value)


def test_mip_determinism(micro):
    inst, windows = micro
    m = build_v0(inst, windows=windows)
    a = solve_mip(m)
    b = solve_mip(m)
    assert a.value == b.value and a.nodes == b.nodes
    assert a.solution == b.solution


def test_mip_matches_oracle_on_micro(micro):
    inst, windows = micro
    r = solve_mip(build_v0(inst, windows=windows))
    ov = oracle_optimum(inst, "off", windows=windows)
    assert close(r.value, ov, 1e-7)


def test_infeasible_mip_reported():
    m = Model("inf")
    a = m.add_variable("a", kind="B", ub=1.0)
    m.add_constraint(LinExpr({a: 1.0}), ">=", 2.0, "PANdemand")
    m.set_objective(LinExpr({a: 1.0}))
    m.seal()
    r = solve_mip(m)
    assert r.status == "infeasible" and r.bound == math.inf


def test_pure_python_kernels_agree(monkeypatch, micro):
    """The numpy fallback must solve identically to the compiled kernels."""
    import fuelbound._kernels_py as kpy
    import fuelbound.simplex as simplex

    inst, windows = micro
    m = build_v0(inst, windows=windows)
    with_compiled = solve_mip(m)
    monkeypatch.setattr(simplex, "_K", kpy)
    with_python = solve_mip(m)
    assert close(with_compiled.value, with_python.value, 1e-9)


def test_gap_closes_strictly_under_branching():
    """Root LP < truncated bound < optimum on a fractional-root instance."""
    from fuelbound.instance import generate_synthetic
    from fuelbound.preprocess import tighten_time_windows

    inst = generate_synthetic(1, (2, 2, 1, 2, 8, 4))
    m = build_v0(inst, windows=tighten_time_windows(inst))
    root = solve_lp(m).value
    mid = solve_mip(m, node_limit=3)
    full = solve_mip(m)
    assert root < mid.bound - 1e-9
    assert mid.bound < full.value - 1e-9 or close(mid.bound, full.value, 1e-9)
    assert leq(mid.bound, full.value, 1e-9)
