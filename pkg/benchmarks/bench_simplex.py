#!/usr/bin/env python3
"""Benchmark: compiled simplex kernels vs the pure-numpy fallback.

Times the LP relaxation and the full branch-and-bound on built models plus a
batch of random dense LPs, once per kernel backend.  Run from the repo root:

    python benchmarks/bench_simplex.py
"""

import time

import numpy as np

import fuelbound._kernels_py as kernels_py
import fuelbound.simplex as simplex
from fuelbound.bnb import solve_mip
from fuelbound.formulations import build_v0
from fuelbound.instance import generate_synthetic
from fuelbound.preprocess import tighten_time_windows

try:
    import fuelbound._kernels as kernels_c
except ImportError:
    kernels_c = None


def _bench(label, fn, repeat=3):
    best = min(_timed(fn) for _ in range(repeat))
    print(f"  {label:<42s} {best * 1e3:9.2f} ms")
    return best


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def _random_lp_batch():
    rng = np.random.default_rng(42)
    problems = []
    for _ in range(40):
        m, n = 60, 45
        A = rng.normal(size=(m, n))
        b = rng.uniform(1.0, 5.0, size=m)
        c = rng.normal(size=n)
        problems.append((c, A, ["<="] * m, b, np.zeros(n), np.full(n, np.inf)))
    def run():
        for c, A, senses, b, lb, ub in problems:
            simplex.solve_arrays(c, 0.0, A, senses, b, lb, ub)
    return run


def main():
    inst = generate_synthetic(1, (2, 2, 2, 2, 16, 4))
    windows = tighten_time_windows(inst)
    model = build_v0(inst, windows=windows)
    inst_b = generate_synthetic(3, (2, 2, 1, 2, 8, 4))
    model_b = build_v0(inst_b, windows=tighten_time_windows(inst_b))
    batch = _random_lp_batch()

    backends = [("python", kernels_py)]
    if kernels_c is not None:
        backends.insert(0, ("compiled", kernels_c))
    results = {}
    for name, mod in backends:
        simplex._K = mod
        print(f"backend: {name}")
        results[name, "lp"] = _bench("LP relaxation (2,2,2,2,16,4)", lambda: simplex.solve_model_lp(model))
        results[name, "bnb"] = _bench("branch&bound (2,2,1,2,8,4)", lambda: solve_mip(model_b))
        results[name, "batch"] = _bench("40 random dense LPs 60x45", batch)
    if kernels_c is not None:
        for key in ("lp", "bnb", "batch"):
            speedup = results["python", key] / results["compiled", key]
            print(f"speedup[{key}]: {speedup:.2f}x")
    else:
        print("compiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
