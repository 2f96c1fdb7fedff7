"""Benchmark harness: direct vs sequential vs learned on one problem family.

Timing covers the solve call only (problem generation and I/O excluded); the
cross-method objective-equality invariant is enforced on every report.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from time import perf_counter

from .errors import InvariantViolationError, ModelSpecError
from .lp import OPTIMAL
from .mip import solve_mip
from .scenario import UncertaintyModel, build_sampled_problem
from .sequential import solve_sequential
from .learn import solve_sequential_learned
from .serialize import canonical_dumps, famspec_to_dict

METHODS = ("direct", "seq", "learned")
OBJECTIVE_EQ_RTOL = 1e-7


@dataclass
class BenchRow:
    family: str
    spec_hash: str
    seed: int
    n_samples: int
    method: str
    wall_time_ms: float
    objective: float
    iterations: int
    max_constraints_per_solve: int
    fallback_count: int | None = None


def spec_hash(spec) -> str:
    digest = hashlib.sha256(canonical_dumps(famspec_to_dict(spec)).encode()).hexdigest()
    return digest[:12]


def run_benchmark(
    model: UncertaintyModel,
    spec,
    n_list,
    methods,
    seed: int,
    *,
    r: int = 10,
    net=None,
    dictionary=None,
) -> list[BenchRow]:
    """One report row per (N, method); methods run on the identical problem."""
    methods = list(methods)
    for m in methods:
        if m not in METHODS:
            raise ModelSpecError(f"unknown method '{m}'")
    if "learned" in methods and (net is None or dictionary is None):
        raise ModelSpecError("method 'learned' needs a trained classifier")
    fam = famspec_to_dict(spec)["family"]
    shash = spec_hash(spec)
    rows: list[BenchRow] = []
    for n in n_list:
        problem = build_sampled_problem(model, n, seed)
        group: list[BenchRow] = []
        for method in methods:
            if method == "direct":
                tick = perf_counter()
                out = solve_mip(problem.c, problem.stacked(), problem.vars)
                wall = (perf_counter() - tick) * 1e3
                if out.status != OPTIMAL:
                    raise InvariantViolationError(f"direct solve returned {out.status}")
                group.append(
                    BenchRow(fam, shash, seed, n, method, wall, out.objective, 0, problem.total_rows)
                )
            elif method == "seq":
                tick = perf_counter()
                sol, _, trace = solve_sequential(problem, r=r)
                wall = (perf_counter() - tick) * 1e3
                group.append(
                    BenchRow(
                        fam,
                        shash,
                        seed,
                        n,
                        method,
                        wall,
                        sol.objective,
                        trace.iterations,
                        max(rec.constraints_in_solve for rec in trace.records),
                    )
                )
            else:
                tick = perf_counter()
                sol, _, trace = solve_sequential_learned(problem, net, dictionary, model)
                wall = (perf_counter() - tick) * 1e3
                group.append(
                    BenchRow(
                        fam,
                        shash,
                        seed,
                        n,
                        method,
                        wall,
                        sol.objective,
                        trace.iterations,
                        max(rec.constraints_in_solve for rec in trace.records),
                        fallback_count=trace.fallback_count,
                    )
                )
        objs = [row.objective for row in group]
        ref = objs[0]
        for row in group:
            if abs(row.objective - ref) > OBJECTIVE_EQ_RTOL * max(1.0, abs(ref), abs(row.objective)):
                raise InvariantViolationError(
                    f"objective mismatch at N={n}: {row.method} gives {row.objective}, "
                    f"{group[0].method} gives {ref}"
                )
        rows.extend(group)
    return rows
