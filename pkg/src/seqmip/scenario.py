"""Scenario-approach machinery: sample complexity and seeded sampling.

``sample_complexity`` inverts the binomial-tail bound that links the number
of i.i.d. constraint samples N to an accuracy/confidence pair: N is the
smallest integer with

    sum_{l=0}^{d_comb - 1}  C(N, l) eps^l (1 - eps)^(N - l)  <=  delta.

The tail is evaluated in log space (logsumexp over terms built by the
binomial recurrence) so no intermediate quantity under- or overflows even at
N ~ 1e5, d_comb ~ 50.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import ModelSpecError
from .model import (
    FEASIBILITY_TOL,
    ConstraintBlock,
    RowSet,
    SampledProblem,
    VariableSpec,
)
from .rng import KIND_SCENARIO, KIND_VIOLATION, stream


@dataclass(frozen=True)
class RobustnessSpec:
    """Accuracy ``epsilon`` and confidence ``delta``, both in (0, 1)."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ModelSpecError(f"epsilon must lie in (0,1); got {self.epsilon}")
        if not (0.0 < self.delta < 1.0):
            raise ModelSpecError(f"delta must lie in (0,1); got {self.delta}")


class UncertaintyModel(ABC):
    """A family of uncertain constraint systems over a fixed decision space.

    ``sample`` draws one uncertainty vector q; ``instantiate`` maps q to the
    constraint rows it induces (a pure function of q).  ``recover_q`` inverts
    ``instantiate`` on an instantiated block, which is how the learned solver
    obtains classifier inputs from a serialized problem.
    """

    vars: VariableSpec
    c: np.ndarray

    @property
    @abstractmethod
    def dim_q(self) -> int: ...

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> np.ndarray: ...

    @abstractmethod
    def instantiate(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (A, b) of the rows induced by q."""

    def recover_q(self, block: ConstraintBlock) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} cannot recover q from a block")

    def block_at(self, q: np.ndarray, sample_index: int) -> ConstraintBlock:
        A, b = self.instantiate(np.asarray(q, dtype=float))
        return ConstraintBlock(sample_index, A, b)

    def sample_block(self, sample_index: int, seed: int) -> ConstraintBlock:
        q = self.sample(stream(seed, KIND_SCENARIO, sample_index))
        return self.block_at(q, sample_index)


def _log_tail(n: int, k: int, eps: float) -> float:
    """log of sum_{l=0}^{k-1} C(n,l) eps^l (1-eps)^(n-l), terms via recurrence."""
    log_eps = math.log(eps)
    log_1meps = math.log1p(-eps)
    terms = np.empty(min(k, n + 1))
    t = n * log_1meps
    for ell in range(terms.shape[0]):
        terms[ell] = t
        t += math.log(n - ell) - math.log(ell + 1) + log_eps - log_1meps
    m = terms.max()
    return m + math.log(math.fsum(np.exp(terms - m)))


def sample_complexity(spec: RobustnessSpec, d_comb: int) -> int:
    """Smallest N whose binomial tail at d_comb - 1 drops to delta."""
    if d_comb < 1:
        raise ModelSpecError("d_comb must be >= 1")
    log_delta = math.log(spec.delta)

    def ok(n: int) -> bool:
        return _log_tail(n, d_comb, spec.epsilon) <= log_delta

    lo = d_comb  # for n < d_comb the tail is the whole distribution (= 1)
    hi = max(2 * lo, 2)
    while not ok(hi):
        lo = hi
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def build_sampled_problem(model: UncertaintyModel, N: int, seed: int) -> SampledProblem:
    """Instantiate N i.i.d. samples of the model into a SampledProblem.

    Block i is a function of ``(seed, i)`` alone, so the first blocks of a
    larger draw coincide with a smaller one (prefix property).
    """
    if N < 1:
        raise ModelSpecError("N must be >= 1")
    blocks = [model.sample_block(i, seed) for i in range(1, N + 1)]
    return SampledProblem(model.vars, model.c, blocks)


def empirical_violation(
    x: np.ndarray,
    model: UncertaintyModel,
    M: int,
    seed: int,
    tol: float = FEASIBILITY_TOL,
) -> float:
    """Fraction of M fresh samples whose instantiated rows x violates."""
    if M < 1:
        raise ModelSpecError("M must be >= 1")
    x = np.asarray(x, dtype=float)
    violated = 0
    for i in range(1, M + 1):
        q = model.sample(stream(seed, KIND_VIOLATION, i))
        A, b = model.instantiate(q)
        if float(np.min(b - A @ x)) < -tol:
            violated += 1
    return violated / M
