"""Batch command-line front-end.

Pipeline wiring only; no interactive prompts.  Subcommands:

  gen         write a seeded synthetic instance
  validate    parse + validate an instance file
  preprocess  window-tightening report (before/after, removed outages)
  build       build a formulation, write MPS, print per-tag row counts
  bound       the full dual-bound workflow: optional weekly aggregation,
              scenario partition, per-block build + solve, combination
  oracle      exhaustive enumeration optimum at micro scale
  report      re-render a saved ledger

Exit codes: 0 success, 2 infeasibility evidence, 1 error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor

from . import bounds as bounds_mod
from . import external as external_mod
from .bnb import solve_mip
from .formulations import BuildError, RelaxationConfig, build_model
from .instance import InstanceError, generate_synthetic, parse_instance, write_instance
from .model import model_fingerprint, write_debug, write_mps
from .oracle import OracleCapExceeded, OracleInfeasible, oracle_search
from .preprocess import preprocess_report, tighten_time_windows
from .transforms import (
    AggregationError,
    PartitionError,
    ScenarioPartition,
    aggregate_time_steps,
    partition_scenarios,
    scenario_weight,
)


def _parse_dims(text):
    parts = [int(x) for x in text.split(",")]
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("dims must be I,J,K,S,T,W")
    return tuple(parts)


def _add_formulation_flags(p):
    p.add_argument("--formulation", choices=["v0", "v3", "v3k"], default="v0")
    p.add_argument("--k0", type=int, default=None)
    p.add_argument("--ct6", choices=["off", "per-cycle", "shared"], default="off")
    p.add_argument("--eliminate-stocks", action="store_true")
    p.add_argument("--aggregate-weeks", action="store_true")


def _config(args) -> RelaxationConfig:
    return RelaxationConfig(
        formulation=args.formulation,
        k0=args.k0,
        ct6_mode=args.ct6.replace("-", "_"),
        eliminate_stocks=args.eliminate_stocks,
    )


def _write_out(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def make_parser():
    ap = argparse.ArgumentParser(prog="fbound", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="write a seeded synthetic instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--dims", type=_parse_dims, required=True, metavar="I,J,K,S,T,W")
    p.add_argument("--bo-frac", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("validate", help="parse and validate an instance file")
    p.add_argument("instance")

    p = sub.add_parser("preprocess", help="time-window tightening report")
    p.add_argument("instance")
    p.add_argument("--out")

    p = sub.add_parser("build", help="build a formulation and write MPS")
    p.add_argument("instance")
    _add_formulation_flags(p)
    p.add_argument("--mps")
    p.add_argument("--debug-dump")
    p.add_argument("--out")

    p = sub.add_parser("bound", help="full dual-bound workflow")
    p.add_argument("instance")
    _add_formulation_flags(p)
    p.add_argument("--partition", default="whole", metavar="singletons|whole|a,b|c")
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--time-limit-s", type=float, default=60.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--primal-ref", type=float, default=None)
    p.add_argument("--external", metavar="ADAPTER_JSON")
    p.add_argument("--no-timing", action="store_true")
    p.add_argument("--out")
    p.add_argument("--json", dest="json_out")

    p = sub.add_parser("oracle", help="exhaustive enumeration optimum")
    p.add_argument("instance")
    p.add_argument("--ct6", choices=["off", "exact"], default="off")
    p.add_argument("--cap", type=int, default=10**6)

    p = sub.add_parser("report", help="re-render a saved ledger")
    p.add_argument("ledger")
    p.add_argument("--primal-ref", type=float, default=None)
    p.add_argument("--no-timing", action="store_true")
    return ap


def _cmd_gen(args) -> int:
    inst = generate_synthetic(args.seed, args.dims, bo_frac=args.bo_frac)
    write_instance(inst, args.out)
    print(f"wrote {args.out}: dims (I,J,K,S,T,W) = {inst.dims()}")
    return 0


def _cmd_validate(args) -> int:
    parse_instance(args.instance)  # raises with all violations listed
    print("OK")
    return 0


def _cmd_preprocess(args) -> int:
    inst = parse_instance(args.instance)
    _write_out(preprocess_report(inst), args.out)
    return 0


def _build_one(inst, cfg, aggregate):
    if aggregate:
        inst = aggregate_time_steps(inst)
    windows = tighten_time_windows(inst)
    return build_model(inst, cfg, windows), inst, windows


def _cmd_build(args) -> int:
    inst = parse_instance(args.instance)
    model, inst, windows = _build_one(inst, _config(args), args.aggregate_weeks)
    if args.mps:
        write_mps(model, args.mps)
    if args.debug_dump:
        with open(args.debug_dump, "w", encoding="utf-8") as f:
            f.write(write_debug(model))
    lines = [
        f"formulation\t{model.name}",
        f"variables\t{len(model.variables)}",
        f"binaries\t{model.binary_count()}",
        f"constraints\t{len(model.constraints)}",
        f"fingerprint\t{model_fingerprint(model):016x}",
    ]
    for tag, n in sorted(model.rows_by_tag().items()):
        lines.append(f"rows[{tag}]\t{n}")
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _solve_block(inst, sub, cfg, args):
    model, _, _ = _build_one(sub, cfg, False)
    if args.external:
        import tempfile

        adapter = external_mod.AdapterConfig.load(args.external)
        with tempfile.NamedTemporaryFile(suffix=".mps", delete=False) as tmp:
            path = tmp.name
        write_mps(model, path)
        res = external_mod.external_solve(path, adapter)
    else:
        res = solve_mip(model, node_limit=args.node_limit, time_limit=args.time_limit_s)
    scope = tuple(s.sid for s in sub.scenarios)
    if len(scope) == 1:
        weight = scenario_weight(inst, scope)
        bound = res.bound / weight if weight > 0 else res.bound
    else:
        weight = 1.0
        bound = res.bound
    return bounds_mod.BoundEntry(
        scope=scope,
        weight=weight,
        bound=bound,
        formulation=cfg.formulation,
        k0=cfg.k0,
        provenance=res.provenance,
        status=res.status,
        nodes=res.nodes,
        elapsed=res.elapsed,
    )


def _cmd_bound(args) -> int:
    inst = parse_instance(args.instance)
    cfg = _config(args)
    if args.aggregate_weeks:
        inst = aggregate_time_steps(inst)
    partition = ScenarioPartition.parse(args.partition, inst)
    subs = partition_scenarios(inst, partition)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(lambda sub: _solve_block(inst, sub, cfg, args), subs))
    else:
        entries = [_solve_block(inst, sub, cfg, args) for sub in subs]
    ledger = bounds_mod.combine_bounds(entries, [s.sid for s in inst.scenarios])
    text = bounds_mod.render_table(ledger, args.primal_ref, with_timing=not args.no_timing)
    _write_out(text, args.out)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as f:
            f.write(ledger.to_json())
    if any(e.status == "infeasible" for e in ledger.entries):
        print("infeasibility evidence: a scenario block admits no schedule", file=sys.stderr)
        return 2
    return 0


def _cmd_oracle(args) -> int:
    inst = parse_instance(args.instance)
    try:
        res = oracle_search(inst, ct6=args.ct6, cap=args.cap)
    except OracleInfeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    print(f"optimum\t{res.value:.10g}")
    print(f"schedules_evaluated\t{res.evaluated}")
    for (uid, k), start in sorted(res.schedule.items()):
        print(f"start[{uid},{k}]\t{'-' if start is None else start}")
    return 0


def _cmd_report(args) -> int:
    with open(args.ledger, "r", encoding="utf-8") as f:
        ledger = bounds_mod.BoundLedger.from_json(f.read())
    sys.stdout.write(
        bounds_mod.render_table(ledger, args.primal_ref, with_timing=not args.no_timing)
    )
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "validate": _cmd_validate,
    "preprocess": _cmd_preprocess,
    "build": _cmd_build,
    "bound": _cmd_bound,
    "oracle": _cmd_oracle,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return _COMMANDS[args.cmd](args)
    except (
        InstanceError,
        BuildError,
        AggregationError,
        PartitionError,
        OracleCapExceeded,
        bounds_mod.LedgerError,
        external_mod.ExternalSolverError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
