"""Command-line front end.

Exit codes: 0 success, 2 schema/spec error, 3 solver error, 4 invariant
violation.  All randomness flows from --seed; --tol overrides the feasibility
tolerance; --threads caps worker parallelism where an operation supports it
(training-data generation), other operations run single-threaded regardless.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import serialize
from .bench import run_benchmark
from .errors import (
    InvariantViolationError,
    ModelSpecError,
    OverflowSaturationError,
    SchemaError,
    SeqmipError,
    SolverError,
)
from .learn import TrainConfig, generate_training_data, solve_sequential_learned, train
from .lp import OPTIMAL
from .mip import solve_mip
from .model import FEASIBILITY_TOL, Solution, VariableSpec, combinatorial_dimension
from .problems import RandomMilpSpec, UnitCommitmentSpec, make_random_milp, make_unit_commitment
from .scenario import RobustnessSpec, build_sampled_problem, empirical_violation, sample_complexity
from .sequential import solve_sequential


def _model_for(spec):
    if isinstance(spec, RandomMilpSpec):
        return make_random_milp(spec)
    if isinstance(spec, UnitCommitmentSpec):
        return make_unit_commitment(spec)
    raise SchemaError(f"unknown spec type {type(spec).__name__}")


def _cmd_bound(args) -> int:
    vars = VariableSpec.box(args.dr, args.dz, 0.0, 1.0)
    try:
        d_comb = combinatorial_dimension(vars)
    except OverflowSaturationError:
        print("d_comb = overflow (exceeds 64-bit count)")
        return 0
    n = sample_complexity(RobustnessSpec(args.epsilon, args.delta), d_comb)
    print(f"d_comb = {d_comb}")
    print(f"N = {n}")
    return 0


def _cmd_generate(args) -> int:
    spec = serialize.read_famspec(args.spec)
    declared = serialize.famspec_to_dict(spec)["family"]
    if args.family is not None and args.family != declared:
        raise SchemaError(f"--family {args.family} contradicts the spec file ({declared})")
    model = _model_for(spec)
    problem = build_sampled_problem(model, args.n, args.seed)
    serialize.write_problem(problem, args.out)
    print(f"wrote {args.out}: {problem.n_samples} blocks, {problem.total_rows} rows")
    return 0


def _cmd_solve(args) -> int:
    problem = serialize.read_problem(args.problem)
    tol = args.tol if args.tol is not None else FEASIBILITY_TOL
    if args.method == "direct":
        out = solve_mip(problem.c, problem.stacked(), problem.vars)
        if out.status != OPTIMAL:
            raise SolverError(f"direct solve returned {out.status}")
        sol, trace = out.solution, None
        summary = {"method": "direct", "objective": sol.objective, "nodes": out.nodes_explored}
    elif args.method == "seq":
        sol, basis, trace = solve_sequential(problem, r=args.r, tol=tol)
        summary = {
            "method": "seq",
            "objective": sol.objective,
            "iterations": trace.iterations,
            "basis_size": len(basis),
            "wall_time_ms": trace.wall_time_ms,
        }
    elif args.method == "learned":
        if not args.model:
            raise SchemaError("--method learned requires --model")
        net, dictionary, _, famdict, _ = serialize.read_model(args.model)
        if famdict is None:
            raise SchemaError("model file carries no family spec; cannot recover classifier inputs")
        model = _model_for(serialize.famspec_from_dict(famdict))
        sol, basis, trace = solve_sequential_learned(problem, net, dictionary, model, tol=tol)
        summary = {
            "method": "learned",
            "objective": sol.objective,
            "iterations": trace.iterations,
            "fallbacks": trace.fallback_count,
            "basis_size": len(basis),
            "wall_time_ms": trace.wall_time_ms,
        }
    else:  # pragma: no cover - argparse restricts choices
        raise SchemaError(f"unknown method {args.method}")
    if args.trace and trace is not None:
        serialize.write_trace_csv(trace, args.trace)
    if args.out_solution:
        serialize.write_solution(sol, args.out_solution)
    print(serialize.canonical_dumps(summary))
    return 0


def _cmd_train(args) -> int:
    spec = serialize.read_famspec(args.model_family)
    model = _model_for(spec)
    cfg = TrainConfig(seed=args.seed)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = serialize.parse_json(fh.read())
        cfg = TrainConfig(
            hidden_layers=int(raw.get("hidden_layers", cfg.hidden_layers)),
            hidden_width=int(raw.get("hidden_width", cfg.hidden_width)),
            epochs=int(raw.get("epochs", cfg.epochs)),
            batch_size=int(raw.get("batch_size", cfg.batch_size)),
            learning_rate=float(raw.get("learning_rate", cfg.learning_rate)),
            adam_beta1=float(raw.get("adam_beta1", cfg.adam_beta1)),
            adam_beta2=float(raw.get("adam_beta2", cfg.adam_beta2)),
            adam_eps=float(raw.get("adam_eps", cfg.adam_eps)),
            seed=int(raw.get("seed", args.seed)),
        )
    ts, dictionary = generate_training_data(model, args.samples, args.seed, workers=args.threads)
    net, metrics = train(ts, dictionary, cfg)
    serialize.write_model(args.out, net, dictionary, cfg, serialize.famspec_to_dict(spec), metrics)
    print(
        serialize.canonical_dumps(
            {
                "train_acc": metrics["train_acc"],
                "test_acc": metrics["test_acc"],
                "dict_size": dictionary.size,
            }
        )
    )
    return 0


def _cmd_violation(args) -> int:
    problem = serialize.read_problem(args.problem)
    sol = serialize.read_solution(args.solution)
    spec = serialize.read_famspec(args.family)
    model = _model_for(spec)
    if model.vars.d != problem.vars.d:
        raise SchemaError("family spec and problem disagree on dimension")
    tol = args.tol if args.tol is not None else FEASIBILITY_TOL
    rate = empirical_violation(sol.x, model, args.samples, args.seed, tol=tol)
    print(rate)
    return 0


def _cmd_bench(args) -> int:
    spec = serialize.read_famspec(args.family)
    model = _model_for(spec)
    net = dictionary = None
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if "learned" in methods:
        if not args.model:
            raise SchemaError("bench with method 'learned' requires --model")
        net, dictionary, _, _, _ = serialize.read_model(args.model)
    n_list = [int(v) for v in args.n_list.split(",") if v.strip()]
    rows = run_benchmark(
        model, spec, n_list, methods, args.seed, r=args.r, net=net, dictionary=dictionary
    )
    if args.out:
        serialize.write_report_csv(rows, args.out)
    for row in rows:
        print(
            f"N={row.n_samples} {row.method}: {row.wall_time_ms:.1f} ms, "
            f"objective {row.objective:.9g}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqmip",
        description="Sequential and learning-accelerated solvers for sampled mixed-integer programs",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed for all randomness")
    common.add_argument("--threads", type=int, default=1, help="worker cap where supported")
    common.add_argument("--tol", type=float, default=None, help="feasibility tolerance override")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="sample complexity and combinatorial dimension")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--dr", type=int, required=True)
    p.add_argument("--dz", type=int, required=True)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("generate", parents=[common], help="sample a problem from a family spec")
    p.add_argument("--family", choices=["milp", "uc"], help="family kind (checked against --spec)")
    p.add_argument("--spec", required=True, help="family spec JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", parents=[common], help="solve a sampled problem")
    p.add_argument("--method", choices=["direct", "seq", "learned"], default="seq")
    p.add_argument("--problem", required=True)
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--model", help="trained model JSON (learned method)")
    p.add_argument("--trace", help="write per-iteration trace CSV here")
    p.add_argument("--out-solution", help="write the solution JSON here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("train", parents=[common], help="train a basis classifier for a family")
    p.add_argument("--model-family", required=True, help="family spec JSON")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--config", help="training config JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("violation", parents=[common], help="empirical violation of a solution")
    p.add_argument("--problem", required=True)
    p.add_argument("--solution", required=True)
    p.add_argument("--family", required=True, help="family spec JSON (fresh-sample source)")
    p.add_argument("--samples", type=int, required=True)
    p.set_defaults(func=_cmd_violation)

    p = sub.add_parser("bench", parents=[common], help="compare methods on one family")
    p.add_argument("--family", required=True, help="family spec JSON")
    p.add_argument("--n-list", required=True, help="comma-separated sample counts")
    p.add_argument("--methods", default="direct,seq")
    p.add_argument("--model", help="trained model JSON (learned method)")
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--out", help="write report CSV here")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (SchemaError, ModelSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    except SeqmipError as exc:  # pragma: no cover - catch-all for package errors
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
