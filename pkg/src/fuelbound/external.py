"""Escape hatch to an external MIP solver through MPS files.

The adapter is described by a small JSON config: the command to run (with
``{mps}`` substituted), regex patterns extracting the objective, the dual
bound and the status from the solver's stdout, and an optional status map.
Anything unexpected raises; an external run never silently produces a bound.
"""

from __future__ import annotations

import json
import os
import re
import shlex
import subprocess
import time
from dataclasses import dataclass

from .bnb import SolveResult

ENV_COMMAND = "FBOUND_SOLVER_CMD"


class ExternalSolverError(Exception):
    pass


@dataclass(frozen=True)
class AdapterConfig:
    command: str  # shell-split template, '{mps}' placeholder
    objective_pattern: str
    bound_pattern: str | None = None
    status_patterns: tuple = ()  # ((regex, status), ...) first match wins
    timeout: float = 600.0

    @staticmethod
    def load(path) -> "AdapterConfig":
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        try:
            return AdapterConfig(
                command=doc["command"],
                objective_pattern=doc["objective_pattern"],
                bound_pattern=doc.get("bound_pattern"),
                status_patterns=tuple((p, s) for p, s in doc.get("status_patterns", [])),
                timeout=float(doc.get("timeout", 600.0)),
            )
        except KeyError as exc:
            raise ExternalSolverError(f"adapter config {path}: missing key {exc}") from None


def external_solve(mps_path, adapter: AdapterConfig) -> SolveResult:
    """Run the configured solver on an MPS file and parse its report."""
    command = os.environ.get(ENV_COMMAND, adapter.command)
    argv = [arg.format(mps=str(mps_path)) for arg in shlex.split(command)]
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(
            argv, capture_output=True, text=True, timeout=adapter.timeout
        )
    except FileNotFoundError:
        raise ExternalSolverError(f"solver executable not found: {argv[0]}") from None
    except subprocess.TimeoutExpired:
        raise ExternalSolverError(f"solver timed out after {adapter.timeout}s") from None
    if proc.returncode != 0:
        raise ExternalSolverError(
            f"solver exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    out = proc.stdout

    status = "optimal"
    for pattern, name in adapter.status_patterns:
        if re.search(pattern, out):
            status = name
            break

    mobj = re.search(adapter.objective_pattern, out)
    if status in ("infeasible", "unbounded"):
        value = None
    elif mobj:
        value = float(mobj.group(1))
    else:
        raise ExternalSolverError(
            f"objective pattern {adapter.objective_pattern!r} not found in solver output"
        )

    if adapter.bound_pattern:
        mb = re.search(adapter.bound_pattern, out)
        if mb:
            bound = float(mb.group(1))
        elif status == "optimal" and value is not None:
            bound = value
        else:
            raise ExternalSolverError("bound pattern not found in solver output")
    else:
        if status == "infeasible":
            bound = float("inf")
        elif value is None:
            raise ExternalSolverError("no bound available from solver output")
        else:
            bound = value

    return SolveResult(
        status=status,
        value=value,
        bound=bound,
        solution=None,
        nodes=0,
        elapsed=time.perf_counter() - t0,
        provenance="external",
    )
