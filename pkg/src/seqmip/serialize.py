"""Canonical file formats.

JSON is written by a small canonical serializer: fields in fixed schema
order, floats with 17 significant digits, so serialize -> parse -> serialize
is byte-identical.  Parsing validates shapes and cross-field consistency and
reports the offending field.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .errors import SchemaError
from .learn import MlpClassifier, StrategyDictionary, TrainConfig
from .model import ConstraintBlock, SampledProblem, Solution, VariableSpec
from .problems import RandomMilpSpec, UnitCommitmentSpec

FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# canonical JSON writer
# ---------------------------------------------------------------------------


def _format_number(x) -> str:
    if isinstance(x, bool):
        raise TypeError("bool is not a number here")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if math.isnan(x):
        return "NaN"
    return format(x, ".17g")


def canonical_dumps(obj) -> str:
    """Deterministic JSON text: insertion-ordered keys, 17-digit floats."""
    out = io.StringIO()

    def emit(o):
        if o is None:
            out.write("null")
        elif isinstance(o, bool):
            out.write("true" if o else "false")
        elif isinstance(o, (int, float, np.integer, np.floating)):
            out.write(_format_number(o))
        elif isinstance(o, str):
            out.write(json.dumps(o))
        elif isinstance(o, dict):
            out.write("{")
            for i, (k, v) in enumerate(o.items()):
                if i:
                    out.write(",")
                out.write(json.dumps(str(k)))
                out.write(":")
                emit(v)
            out.write("}")
        elif isinstance(o, (list, tuple, np.ndarray)):
            seq = o.tolist() if isinstance(o, np.ndarray) else o
            out.write("[")
            for i, v in enumerate(seq):
                if i:
                    out.write(",")
                emit(v)
            out.write("]")
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(obj)
    return out.getvalue()


def parse_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _require(data: dict, field: str, kind=None):
    if field not in data:
        raise SchemaError(f"missing field '{field}'")
    value = data[field]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"field '{field}' has wrong type {type(value).__name__}")
    return value


# ---------------------------------------------------------------------------
# SampledProblem
# ---------------------------------------------------------------------------


def problem_to_dict(problem: SampledProblem) -> dict:
    return {
        "d_r": problem.vars.d_r,
        "d_z": problem.vars.d_z,
        "lower": problem.vars.lower,
        "upper": problem.vars.upper,
        "c": problem.c,
        "blocks": [
            {
                "sample": blk.sample_index,
                "rows": [
                    {"a": blk.A[j], "b": blk.b[j]} for j in range(blk.n_rows)
                ],
            }
            for blk in problem.blocks
        ],
    }


def problem_from_dict(data: dict) -> SampledProblem:
    d_r = _require(data, "d_r", int)
    d_z = _require(data, "d_z", int)
    lower = np.asarray(_require(data, "lower", list), dtype=float)
    upper = np.asarray(_require(data, "upper", list), dtype=float)
    c = np.asarray(_require(data, "c", list), dtype=float)
    d = d_r + d_z
    if lower.shape != (d,):
        raise SchemaError(f"field 'lower' must have length d_r + d_z = {d}, got {lower.shape[0]}")
    if upper.shape != (d,):
        raise SchemaError(f"field 'upper' must have length d_r + d_z = {d}, got {upper.shape[0]}")
    if c.shape != (d,):
        raise SchemaError(f"field 'c' must have length d_r + d_z = {d}, got {c.shape[0]}")
    vars = VariableSpec(d_r, d_z, lower, upper)
    blocks = []
    for bi, bdata in enumerate(_require(data, "blocks", list), start=1):
        sample = _require(bdata, "sample", int)
        if sample != bi:
            raise SchemaError(f"field 'blocks[{bi - 1}].sample' must be {bi}, got {sample}")
        rows = _require(bdata, "rows", list)
        if not rows:
            raise SchemaError(f"field 'blocks[{bi - 1}].rows' must be nonempty")
        A = np.empty((len(rows), d))
        b = np.empty(len(rows))
        for j, row in enumerate(rows):
            a = np.asarray(_require(row, "a", list), dtype=float)
            if a.shape != (d,):
                raise SchemaError(
                    f"field 'blocks[{bi - 1}].rows[{j}].a' must have length {d}, got {a.shape[0]}"
                )
            A[j] = a
            b[j] = float(_require(row, "b", (int, float)))
        blocks.append(ConstraintBlock(sample, A, b))
    return SampledProblem(vars, c, blocks)


def write_problem(problem: SampledProblem, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(problem_to_dict(problem)))


def read_problem(path: str) -> SampledProblem:
    with open(path, encoding="utf-8") as fh:
        return problem_from_dict(parse_json(fh.read()))


# ---------------------------------------------------------------------------
# Solution
# ---------------------------------------------------------------------------


def solution_to_dict(sol: Solution) -> dict:
    return {"format_version": FORMAT_VERSION, "x": sol.x, "objective": sol.objective}


def solution_from_dict(data: dict) -> Solution:
    x = np.asarray(_require(data, "x", list), dtype=float)
    objective = float(_require(data, "objective", (int, float)))
    return Solution(x, objective)


def write_solution(sol: Solution, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(solution_to_dict(sol)))


def read_solution(path: str) -> Solution:
    with open(path, encoding="utf-8") as fh:
        return solution_from_dict(parse_json(fh.read()))


# ---------------------------------------------------------------------------
# family specs
# ---------------------------------------------------------------------------


def famspec_to_dict(spec) -> dict:
    if isinstance(spec, RandomMilpSpec):
        return {
            "family": "milp",
            "n_rows": spec.n_rows,
            "d_r": spec.d_r,
            "d_z": spec.d_z,
            "rho": spec.rho,
            "seed": spec.seed,
            "var_bound": spec.var_bound,
        }
    if isinstance(spec, UnitCommitmentSpec):
        return {
            "family": "uc",
            "n_g": spec.n_g,
            "t_horizon": spec.t_horizon,
            "p_max": spec.p_max,
            "p_min": spec.p_min,
            "q_cost": spec.q_cost,
            "c_cost": spec.c_cost,
            "tau_on": spec.tau_on.tolist(),
            "tau_off": spec.tau_off.tolist(),
            "ramp_max": spec.ramp_max,
            "demand_halfwidth": spec.demand_halfwidth,
            "pwl_segments": spec.pwl_segments,
            "min_down_printed_form": spec.min_down_printed_form,
        }
    raise SchemaError(f"unknown spec type {type(spec).__name__}")


def famspec_from_dict(data: dict):
    family = _require(data, "family", str)
    if family == "milp":
        return RandomMilpSpec(
            n_rows=int(_require(data, "n_rows", int)),
            d_r=int(_require(data, "d_r", int)),
            d_z=int(_require(data, "d_z", int)),
            rho=float(_require(data, "rho", (int, float))),
            seed=int(_require(data, "seed", int)),
            var_bound=float(data.get("var_bound", 10.0)),
        )
    if family == "uc":
        if "p_max" in data:
            return UnitCommitmentSpec(
                n_g=int(_require(data, "n_g", int)),
                t_horizon=int(_require(data, "t_horizon", int)),
                p_max=np.asarray(_require(data, "p_max", list), dtype=float),
                p_min=np.asarray(_require(data, "p_min", list), dtype=float),
                q_cost=np.asarray(_require(data, "q_cost", list), dtype=float),
                c_cost=np.asarray(_require(data, "c_cost", list), dtype=float),
                tau_on=np.asarray(_require(data, "tau_on", list), dtype=int),
                tau_off=np.asarray(_require(data, "tau_off", list), dtype=int),
                ramp_max=np.asarray(_require(data, "ramp_max", list), dtype=float),
                demand_halfwidth=float(data.get("demand_halfwidth", 1.0)),
                pwl_segments=int(data.get("pwl_segments", 8)),
                min_down_printed_form=bool(data.get("min_down_printed_form", False)),
            )
        return UnitCommitmentSpec.from_recipe(
            n_g=int(_require(data, "n_g", int)),
            t_horizon=int(_require(data, "t_horizon", int)),
            seed=int(_require(data, "seed", int)),
            demand_halfwidth=float(data.get("demand_halfwidth", 1.0)),
            pwl_segments=int(data.get("pwl_segments", 8)),
            min_down_printed_form=bool(data.get("min_down_printed_form", False)),
        )
    raise SchemaError(f"field 'family' must be 'milp' or 'uc', got '{family}'")


def read_famspec(path: str):
    with open(path, encoding="utf-8") as fh:
        return famspec_from_dict(parse_json(fh.read()))


# ---------------------------------------------------------------------------
# classifier models
# ---------------------------------------------------------------------------


def model_to_dict(
    net: MlpClassifier,
    dictionary: StrategyDictionary,
    cfg: TrainConfig,
    famspec_dict: dict | None = None,
    metrics: dict | None = None,
) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "layer_dims": list(net.layer_dims),
        "weights": [w.reshape(-1) for w in net.weights],  # row-major
        "biases": list(net.biases),
        "dictionary": [list(p) for p in dictionary.entries],
        "train_config": {
            "hidden_layers": cfg.hidden_layers,
            "hidden_width": cfg.hidden_width,
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "learning_rate": cfg.learning_rate,
            "adam_beta1": cfg.adam_beta1,
            "adam_beta2": cfg.adam_beta2,
            "adam_eps": cfg.adam_eps,
            "seed": cfg.seed,
        },
        "family": famspec_dict,
        "metrics": metrics or {},
    }


def model_from_dict(data: dict):
    """Returns (net, dictionary, cfg, famspec_dict, metrics)."""
    dims = [int(v) for v in _require(data, "layer_dims", list)]
    weights = []
    for l, flat in enumerate(_require(data, "weights", list)):
        w = np.asarray(flat, dtype=float)
        expect = dims[l] * dims[l + 1]
        if w.size != expect:
            raise SchemaError(f"field 'weights[{l}]' must have {expect} entries, got {w.size}")
        weights.append(w.reshape(dims[l], dims[l + 1]))
    biases = []
    for l, flat in enumerate(_require(data, "biases", list)):
        bvec = np.asarray(flat, dtype=float)
        if bvec.size != dims[l + 1]:
            raise SchemaError(f"field 'biases[{l}]' must have {dims[l + 1]} entries, got {bvec.size}")
        biases.append(bvec)
    net = MlpClassifier(dims, weights, biases)
    dictionary = StrategyDictionary()
    for p in _require(data, "dictionary", list):
        dictionary.intern(tuple(int(r) for r in p))
    if dictionary.size != dims[-1]:
        raise SchemaError(
            f"field 'dictionary' has {dictionary.size} entries but the output layer is {dims[-1]}"
        )
    cfgd = _require(data, "train_config", dict)
    cfg = TrainConfig(
        hidden_layers=int(cfgd.get("hidden_layers", 2)),
        hidden_width=int(cfgd.get("hidden_width", 128)),
        epochs=int(cfgd.get("epochs", 200)),
        batch_size=int(cfgd.get("batch_size", 128)),
        learning_rate=float(cfgd.get("learning_rate", 1e-3)),
        adam_beta1=float(cfgd.get("adam_beta1", 0.9)),
        adam_beta2=float(cfgd.get("adam_beta2", 0.999)),
        adam_eps=float(cfgd.get("adam_eps", 1e-8)),
        seed=int(cfgd.get("seed", 0)),
    )
    return net, dictionary, cfg, data.get("family"), data.get("metrics", {})


def write_model(path: str, net, dictionary, cfg, famspec_dict=None, metrics=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(model_to_dict(net, dictionary, cfg, famspec_dict, metrics)))


def read_model(path: str):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(parse_json(fh.read()))


# ---------------------------------------------------------------------------
# trace / report CSV
# ---------------------------------------------------------------------------

TRACE_COLUMNS = ["t", "J", "basis_size", "violations", "constraints_in_solve", "nodes", "millis"]


def write_trace_csv(trace, path: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in trace.records:
            writer.writerow(
                [
                    rec.t,
                    _format_number(rec.objective),
                    rec.basis_size,
                    rec.violations_found,
                    rec.constraints_in_solve,
                    rec.solver_nodes,
                    _format_number(rec.millis),
                ]
            )


REPORT_COLUMNS = [
    "family",
    "spec_hash",
    "seed",
    "n_samples",
    "method",
    "wall_time_ms",
    "objective",
    "iterations",
    "max_constraints_per_solve",
    "fallback_count",
]


def write_report_csv(rows, path: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.family,
                    row.spec_hash,
                    row.seed,
                    row.n_samples,
                    row.method,
                    _format_number(row.wall_time_ms),
                    _format_number(row.objective),
                    row.iterations,
                    row.max_constraints_per_solve,
                    "" if row.fallback_count is None else row.fallback_count,
                ]
            )
