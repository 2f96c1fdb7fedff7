"""Learning-accelerated solving.

Training data pairs each uncertainty draw q with the basis of the
single-sample problem it induces; distinct bases (as row-index patterns
within a block) become the classes of a multiclass MLP trained from scratch
with Adam.  The learned loop runs the same verify/re-optimize scheme as the
deterministic one with r = 1, but asks the classifier for the violating
sample's basis instead of re-deriving it; whenever the resulting objective
fails to increase, the step is redone the deterministic way, so the final
solution never depends on classifier quality.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from .errors import IterationLimitError, ModelSpecError, SolverError, TrainingDivergenceError
from .lp import OPTIMAL
from .mip import DEFAULT_NODE_LIMIT, SolveStats, find_basis_rows, solve_mip
from .model import (
    Basis,
    ConstraintId,
    FEASIBILITY_TOL,
    SampledProblem,
    Solution,
    combinatorial_dimension_capped,
)
from .rng import KIND_SHUFFLE, KIND_SPLIT, KIND_TRAINING, KIND_WEIGHTS, stream
from .scenario import UncertaintyModel
from .sequential import (
    IterationRecord,
    SeqTrace,
    _merge_rows,
    _scan,
    initial_row_count,
    strict_increase_tol,
)

# ---------------------------------------------------------------------------
# Strategy dictionary and training data
# ---------------------------------------------------------------------------


@dataclass
class StrategyDictionary:
    """Bijection between distinct bases (row-index patterns) and class labels.

    Label order is first-appearance order during generation, so the mapping
    is deterministic under a fixed seed.
    """

    entries: list[tuple[int, ...]] = field(default_factory=list)
    lookup: dict[tuple[int, ...], int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.entries)

    def intern(self, pattern: tuple[int, ...]) -> int:
        label = self.lookup.get(pattern)
        if label is None:
            label = len(self.entries)
            self.entries.append(pattern)
            self.lookup[pattern] = label
        return label

    def pattern(self, label: int) -> tuple[int, ...]:
        return self.entries[label]


@dataclass
class TrainingSet:
    """Uncertainty draws with basis labels and a fixed 80/20 split."""

    q: np.ndarray  # (M, dim_q)
    labels: np.ndarray  # (M,)
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def M(self) -> int:
        return self.q.shape[0]


def _training_pattern(model: UncertaintyModel, seed: int, i: int, node_limit: int):
    """(q, basis row pattern) for training draw i; pure function of its inputs."""
    q = model.sample(stream(seed, KIND_TRAINING, i + 1))
    rows = model.block_at(q, 1).rowset()
    out = solve_mip(model.c, rows, model.vars, node_limit=node_limit)
    if out.status != OPTIMAL:
        raise ModelSpecError(
            f"single-sample problem at draw {i + 1} is {out.status}; "
            "the model family must be feasible and bounded"
        )
    basis, _ = find_basis_rows(model.c, rows, model.vars, out, node_limit=node_limit)
    return q, tuple(sorted(row for _, row in basis.members))


def _training_chunk(args):
    model, seed, lo, hi, node_limit = args
    return [_training_pattern(model, seed, i, node_limit) for i in range(lo, hi)]


def generate_training_data(
    model: UncertaintyModel,
    M: int,
    seed: int,
    *,
    node_limit: int = DEFAULT_NODE_LIMIT,
    workers: int = 1,
) -> tuple[TrainingSet, StrategyDictionary]:
    """Solve M single-sample problems and intern their bases as labels.

    Sample i depends only on (seed, i), so the solves parallelize over a
    process pool; the dictionary is interned serially in index order, making
    the result independent of ``workers``.
    """
    if M < 1:
        raise ModelSpecError("M must be >= 1")
    if workers > 1 and M > 8:
        import multiprocessing as mp

        chunk = max(8, M // (workers * 8))
        spans = [(model, seed, lo, min(M, lo + chunk), node_limit) for lo in range(0, M, chunk)]
        with mp.Pool(workers) as pool:
            chunks = pool.map(_training_chunk, spans)
        results = [item for ch in chunks for item in ch]
    else:
        results = [_training_pattern(model, seed, i, node_limit) for i in range(M)]
    dictionary = StrategyDictionary()
    qs = np.empty((M, model.dim_q))
    labels = np.empty(M, dtype=int)
    for i, (q, pattern) in enumerate(results):
        qs[i] = q
        labels[i] = dictionary.intern(pattern)
    perm = stream(seed, KIND_SPLIT, 0).permutation(M)
    n_train = int(round(0.8 * M))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return TrainingSet(qs, labels, train_idx, test_idx), dictionary


# ---------------------------------------------------------------------------
# MLP classifier
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    hidden_layers: int = 2
    hidden_width: int = 128
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if min(self.hidden_layers, self.hidden_width, self.epochs, self.batch_size) < 0:
            raise ModelSpecError("config counts must be nonnegative")
        if self.batch_size < 1:
            raise ModelSpecError("batch_size must be >= 1")


@dataclass
class MlpClassifier:
    """ReLU hidden layers, softmax output, with Adam state for training."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    adam_m: list[np.ndarray] = field(default_factory=list)
    adam_v: list[np.ndarray] = field(default_factory=list)
    adam_t: int = 0

    @property
    def n_classes(self) -> int:
        return self.layer_dims[-1]


def init_classifier(layer_dims: list[int], seed: int) -> MlpClassifier:
    """He-uniform weights (limit sqrt(6 / fan_in)), zero biases, fresh Adam state."""
    weights, biases = [], []
    for layer, (fan_in, fan_out) in enumerate(zip(layer_dims[:-1], layer_dims[1:])):
        rng = stream(seed, KIND_WEIGHTS, layer)
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    m = [np.zeros_like(p) for p in weights + biases]
    return MlpClassifier(
        list(layer_dims),
        weights,
        biases,
        adam_m=m,
        adam_v=[np.zeros_like(p) for p in weights + biases],
        adam_t=0,
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_batch(net: MlpClassifier, X: np.ndarray):
    """Returns (list of layer activations incl. input, softmax outputs)."""
    acts = [X]
    h = X
    last = len(net.weights) - 1
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ W + b
        h = z if l == last else np.maximum(z, 0.0)
        acts.append(h)
    return acts, _softmax(acts[-1])


def forward(net: MlpClassifier, q: np.ndarray) -> np.ndarray:
    """Class probabilities for one input vector."""
    q = np.asarray(q, dtype=float)
    if q.shape != (net.layer_dims[0],):
        raise ModelSpecError(
            f"classifier expects input of length {net.layer_dims[0]}, got {q.shape}"
        )
    _, probs = _forward_batch(net, q[None, :])
    return probs[0]


def gradient(net: MlpClassifier, X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over the batch and its exact parameter gradient.

    Returns (loss, weight gradients, bias gradients), gradients ordered like
    the layers.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    B = X.shape[0]
    acts, probs = _forward_batch(net, X)
    logp = np.log(np.clip(probs[np.arange(B), y], 1e-300, None))
    loss = float(-logp.mean())
    delta = probs.copy()
    delta[np.arange(B), y] -= 1.0
    delta /= B
    dW = [None] * len(net.weights)
    db = [None] * len(net.biases)
    for l in range(len(net.weights) - 1, -1, -1):
        dW[l] = acts[l].T @ delta
        db[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ net.weights[l].T) * (acts[l] > 0.0)
    return loss, dW, db


def _adam_step(net: MlpClassifier, dW, db, cfg: TrainConfig):
    net.adam_t += 1
    t = net.adam_t
    grads = dW + db
    params = net.weights + net.biases
    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, net.adam_m, net.adam_v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + eps)


def _accuracy(net: MlpClassifier, X: np.ndarray, y: np.ndarray) -> float:
    if X.shape[0] == 0:
        return float("nan")
    _, probs = _forward_batch(net, X)
    return float(np.mean(np.argmax(probs, axis=1) == y))


def train(
    ts: TrainingSet,
    dictionary: StrategyDictionary,
    cfg: TrainConfig,
) -> tuple[MlpClassifier, dict[str, float]]:
    """Adam over shuffled mini-batches of the 80% split; deterministic per seed."""
    dims = [ts.q.shape[1]] + [cfg.hidden_width] * cfg.hidden_layers + [dictionary.size]
    net = init_classifier(dims, cfg.seed)
    Xtr, ytr = ts.q[ts.train_idx], ts.labels[ts.train_idx]
    Xte, yte = ts.q[ts.test_idx], ts.labels[ts.test_idx]
    n = Xtr.shape[0]
    if cfg.batch_size > n:
        raise ModelSpecError(f"batch_size {cfg.batch_size} exceeds train-set size {n}")
    step = 0
    for epoch in range(cfg.epochs):
        perm = stream(cfg.seed, KIND_SHUFFLE, epoch).permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            loss, dW, db = gradient(net, Xtr[idx], ytr[idx])
            step += 1
            if not np.isfinite(loss):
                raise TrainingDivergenceError(
                    f"loss became non-finite at optimisation step {step}", step
                )
            _adam_step(net, dW, db, cfg)
    metrics = {
        "train_acc": _accuracy(net, Xtr, ytr),
        "test_acc": _accuracy(net, Xte, yte),
    }
    return net, metrics


def predict_basis(
    net: MlpClassifier,
    dictionary: StrategyDictionary,
    q: np.ndarray,
    sample_index: int,
) -> Basis:
    """Argmax class mapped to constraint ids of the given sample (lowest label wins ties)."""
    probs = forward(net, q)
    label = int(np.argmax(probs))
    pattern = dictionary.pattern(label)
    return Basis(tuple(ConstraintId(sample_index, row) for row in pattern))


# ---------------------------------------------------------------------------
# Learning-accelerated sequential loop
# ---------------------------------------------------------------------------


def solve_sequential_learned(
    problem: SampledProblem,
    net: MlpClassifier,
    dictionary: StrategyDictionary,
    model: UncertaintyModel,
    *,
    tol: float = FEASIBILITY_TOL,
    node_limit: int = DEFAULT_NODE_LIMIT,
    iteration_guard_factor: int = 10,
    selection: str = "deepest",
) -> tuple[Solution, Basis, SeqTrace]:
    """Classifier-in-the-loop variant; r is fixed to 1.

    ``model`` must be the uncertainty family the problem was sampled from: it
    recovers classifier inputs from instantiated blocks.  Misclassification
    only costs time, never correctness: a step whose objective does not
    increase is redone with the violating sample's most violated row.
    ``selection`` as in :func:`seqmip.sequential.solve_sequential`.
    """
    if selection not in ("deepest", "first"):
        raise ValueError(f"unknown selection rule '{selection}'")
    c, vars = problem.c, problem.vars
    trace = SeqTrace()
    start = perf_counter()
    d_comb = combinatorial_dimension_capped(vars)

    # same lazy-reduction rule as the deterministic loop
    def solve_and_reduce(rows, stats):
        out = solve_mip(c, rows, vars, node_limit=node_limit)
        stats.add(out)
        if out.status != OPTIMAL:
            raise SolverError(f"subproblem solve returned {out.status}")
        if len(rows) > d_comb:
            basis, basis_rows = find_basis_rows(
                c, rows, vars, out, node_limit=node_limit, stats=stats, mode="light"
            )
            if len(basis_rows) > d_comb:
                basis, basis_rows = find_basis_rows(
                    c, basis_rows, vars, out, node_limit=node_limit, stats=stats
                )
        else:
            basis, basis_rows = Basis(tuple(rows.ids)), rows
        return out, basis, basis_rows

    stats = SolveStats()
    tick = perf_counter()
    m_rows = initial_row_count(problem)
    out, basis, basis_rows = solve_and_reduce(problem.stacked().take(range(m_rows)), stats)
    x, objective = out.solution.x, out.objective
    trace.records.append(
        IterationRecord(
            t=0,
            objective=objective,
            basis_size=len(basis),
            violations_found=0,
            constraints_in_solve=m_rows,
            solver_nodes=stats.nodes,
            millis=(perf_counter() - tick) * 1e3,
            basis_ids=basis.members,
        )
    )

    guard = max(iteration_guard_factor * problem.n_samples, 100)
    n_block_rows = {blk.sample_index: blk.n_rows for blk in problem.blocks}
    for t in range(1, guard + 1):
        result, worst = _scan(x, problem, 1, tol, select=selection)
        if result.feasible:
            trace.iterations = t - 1
            break
        tick = perf_counter()
        it_stats = SolveStats()
        s = result.violations[0]
        q = model.recover_q(problem.block(s))
        predicted = predict_basis(net, dictionary, q, s)
        if any(row >= n_block_rows[s] for _, row in predicted.members):
            raise ModelSpecError(
                "predicted basis refers to rows outside the block; classifier "
                "was trained on a different family"
            )
        pred_rows = problem.rows_for(predicted.members)
        solve_rows = _merge_rows(basis_rows, pred_rows)
        out, new_basis, new_rows = solve_and_reduce(solve_rows, it_stats)
        fallback = False
        if out.objective <= objective + strict_increase_tol(objective):
            # misclassification: redo the step the deterministic way
            fallback = True
            solve_rows = _merge_rows(basis_rows, problem.rows_for(worst))
            out, new_basis, new_rows = solve_and_reduce(solve_rows, it_stats)
            if out.objective <= objective + strict_increase_tol(objective):
                warnings.warn(
                    f"iteration {t}: objective failed to increase strictly after "
                    "fallback; continuing with the union of old and new bases",
                    RuntimeWarning,
                    stacklevel=2,
                )
                new_rows = _merge_rows(basis_rows, new_rows)
                new_basis = Basis(tuple(new_rows.ids))
        x, objective = out.solution.x, out.objective
        basis, basis_rows = new_basis, new_rows
        stats.solves += it_stats.solves
        stats.nodes += it_stats.nodes
        if fallback:
            trace.fallback_count += 1
        trace.records.append(
            IterationRecord(
                t=t,
                objective=objective,
                basis_size=len(basis),
                violations_found=len(result.violations),
                constraints_in_solve=len(solve_rows),
                solver_nodes=it_stats.nodes,
                millis=(perf_counter() - tick) * 1e3,
                fallback=fallback,
                basis_ids=basis.members,
            )
        )
    else:
        raise IterationLimitError(
            f"learned sequential loop exceeded {guard} iterations"
        )

    trace.total_solve_calls = stats.solves
    trace.total_nodes = stats.nodes
    trace.wall_time_ms = (perf_counter() - start) * 1e3
    return Solution(x, objective), basis, trace
