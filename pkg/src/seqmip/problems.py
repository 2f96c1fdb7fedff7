"""Benchmark uncertainty models: random robust MILPs and robust unit commitment.

Both generators are pure functions of their spec (including the seed): the
same spec always produces the same matrices, and ``instantiate`` is a pure
function of the uncertainty vector q.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelSpecError
from .model import VariableSpec
from .rng import KIND_STRUCTURE, stream
from .scenario import UncertaintyModel

# ---------------------------------------------------------------------------
# Random robust MILP:  A x <= b + b_q,  b_q uniform in b * [-rho, rho]
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomMilpSpec:
    """Shape of a random interval-uncertain MILP (defaults: the full-size instance)."""

    n_rows: int = 500
    d_r: int = 25
    d_z: int = 5
    rho: float = 0.01
    seed: int = 0
    var_bound: float = 10.0

    def __post_init__(self):
        if self.n_rows < 1 or self.d_r < 0 or self.d_z < 0 or self.d_r + self.d_z < 1:
            raise ModelSpecError("n_rows and dimensions must be positive")
        if self.rho < 0:
            raise ModelSpecError("uncertainty fraction rho must be >= 0")


class RandomMilpModel(UncertaintyModel):
    """Feasible-by-construction dense MILP with interval uncertainty on the rhs.

    Rows of A are unit-normalized Gaussians; the rhs is anchored so a fixed
    mixed-integer point keeps a positive margin on every row even at the
    worst realization of the uncertainty (margin > rho * |b| per row).
    """

    def __init__(self, spec: RandomMilpSpec):
        self.spec = spec
        d = spec.d_r + spec.d_z
        rng = stream(spec.seed, KIND_STRUCTURE, 0)
        A = rng.standard_normal((spec.n_rows, d))
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        anchor = rng.uniform(-3.0, 3.0, d)
        anchor[spec.d_r :] = np.round(anchor[spec.d_r :])
        ax = A @ anchor
        margin = rng.uniform(0.1, 1.1, spec.n_rows)
        if spec.rho > 0:
            margin = margin + (spec.rho / (1.0 - spec.rho)) * np.abs(ax)
        self.A = A
        self.b0 = ax + margin
        self.anchor = anchor
        self.c = rng.standard_normal(d)
        self.vars = VariableSpec.box(spec.d_r, spec.d_z, -spec.var_bound, spec.var_bound)
        self._halfwidth = spec.rho * np.abs(self.b0)

    @property
    def dim_q(self) -> int:
        return self.spec.n_rows

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, self.spec.n_rows) * self._halfwidth

    def instantiate(self, q: np.ndarray):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.spec.n_rows,):
            raise ModelSpecError(f"q must have length {self.spec.n_rows}")
        return self.A, self.b0 + q

    def recover_q(self, block) -> np.ndarray:
        return np.asarray(block.b, dtype=float) - self.b0


def make_random_milp(spec: RandomMilpSpec) -> RandomMilpModel:
    return RandomMilpModel(spec)


# ---------------------------------------------------------------------------
# Robust unit commitment
# ---------------------------------------------------------------------------


def nominal_demand(t_horizon: int) -> np.ndarray:
    """150 sin(2 pi t / 24) for t = 1..T, clamped at zero from below."""
    t = np.arange(1, t_horizon + 1)
    return np.maximum(0.0, 150.0 * np.sin(2.0 * np.pi * t / 24.0))


@dataclass(frozen=True)
class UnitCommitmentSpec:
    """All parameters of one UC instance; ``from_recipe`` draws them from a seed."""

    n_g: int
    t_horizon: int
    p_max: np.ndarray  # (n_g, T)
    p_min: np.ndarray  # (n_g, T)
    q_cost: np.ndarray  # (n_g,) diagonal quadratic cost
    c_cost: np.ndarray  # (n_g,) linear cost
    tau_on: np.ndarray  # (n_g,) min up-time
    tau_off: np.ndarray  # (n_g,) min down-time
    ramp_max: np.ndarray  # (n_g, T)
    demand_halfwidth: float = 1.0
    pwl_segments: int = 8
    min_down_printed_form: bool = False

    def __post_init__(self):
        shape = (self.n_g, self.t_horizon)
        for name in ("p_max", "p_min", "ramp_max"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            if arr.shape != shape:
                raise ModelSpecError(f"{name} must have shape {shape}")
            object.__setattr__(self, name, arr)
        for name in ("q_cost", "c_cost"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            if arr.shape != (self.n_g,):
                raise ModelSpecError(f"{name} must have shape ({self.n_g},)")
            object.__setattr__(self, name, arr)
        for name in ("tau_on", "tau_off"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=int))
            if arr.shape != (self.n_g,):
                raise ModelSpecError(f"{name} must have shape ({self.n_g},)")
            if np.any(arr < 1) or np.any(arr > self.t_horizon):
                raise ModelSpecError(f"{name} entries must lie in [1, T]")
            object.__setattr__(self, name, arr)
        if np.any(self.p_min > self.p_max):
            raise ModelSpecError("p_min must not exceed p_max")
        if self.pwl_segments < 1:
            raise ModelSpecError("pwl_segments must be >= 1")
        if self.demand_halfwidth < 0:
            raise ModelSpecError("demand_halfwidth must be >= 0")

    @classmethod
    def from_recipe(
        cls,
        n_g: int,
        t_horizon: int,
        seed: int,
        demand_halfwidth: float = 1.0,
        pwl_segments: int = 8,
        min_down_printed_form: bool = False,
    ) -> "UnitCommitmentSpec":
        """Draw parameters per the reference recipe: randint p_max in [1,115],
        p_min = ceil(p_max / 2), randint costs in [1,50], randint tau in [1,T].

        The ramp limit defaults to ceil(p_max / 2) so a cold generator can
        always ramp up to its minimum output in one period.
        """
        rng = stream(seed, KIND_STRUCTURE, 1)
        p_max = rng.integers(1, 116, (n_g, t_horizon)).astype(float)
        p_min = np.ceil(p_max / 2.0)
        q_cost = rng.integers(1, 51, n_g).astype(float)
        c_cost = rng.integers(1, 51, n_g).astype(float)
        tau_on = rng.integers(1, t_horizon + 1, n_g)
        tau_off = rng.integers(1, t_horizon + 1, n_g)
        return cls(
            n_g=n_g,
            t_horizon=t_horizon,
            p_max=p_max,
            p_min=p_min,
            q_cost=q_cost,
            c_cost=c_cost,
            tau_on=tau_on,
            tau_off=tau_off,
            ramp_max=np.ceil(p_max / 2.0),
            demand_halfwidth=demand_halfwidth,
            pwl_segments=pwl_segments,
            min_down_printed_form=min_down_printed_form,
        )


class UnitCommitmentModel(UncertaintyModel):
    """UC as a mixed-integer model with uncertain demand.

    Variables, continuous first: P[i,t] (generation), W[i,t] (cost epigraph),
    then binary U[i,t] (commitment).  The quadratic running cost
    Q_ii P^2 + C_i P enters through W >= each secant of its piecewise-linear
    over-approximation, so the objective is simply sum(W).  Only the T demand
    rows depend on the uncertainty.
    """

    def __init__(self, spec: UnitCommitmentSpec):
        self.spec = spec
        n_g, T = spec.n_g, spec.t_horizon
        self.d0 = nominal_demand(T)
        nv = n_g * T
        d = 3 * nv
        self._nv = nv
        ip, iw, iu = self._ip, self._iw, self._iu

        lower = np.zeros(d)
        upper = np.empty(d)
        for i in range(n_g):
            for t in range(1, T + 1):
                pm = spec.p_max[i, t - 1]
                upper[ip(i, t)] = pm
                upper[iw(i, t)] = spec.q_cost[i] * pm * pm + spec.c_cost[i] * pm
                upper[iu(i, t)] = 1.0
        self.vars = VariableSpec(2 * nv, nv, lower, upper)

        c = np.zeros(d)
        c[nv : 2 * nv] = 1.0
        self.c = c

        rows: list[np.ndarray] = []
        rhs: list[float] = []

        def add(coeffs: dict[int, float], b: float):
            row = np.zeros(d)
            for idx, val in coeffs.items():
                row[idx] = val
            rows.append(row)
            rhs.append(b)

        # generation limits: U p_min <= P <= U p_max
        for i in range(n_g):
            for t in range(1, T + 1):
                add({iu(i, t): spec.p_min[i, t - 1], ip(i, t): -1.0}, 0.0)
        for i in range(n_g):
            for t in range(1, T + 1):
                add({ip(i, t): 1.0, iu(i, t): -spec.p_max[i, t - 1]}, 0.0)

        # demand coverage (uncertain rhs): sum_i P[i,t] >= D_t
        self.demand_offset = len(rows)
        for t in range(1, T + 1):
            add({ip(i, t): -1.0 for i in range(n_g)}, -self.d0[t - 1])

        # minimum up-time: U[i,tau] >= U[i,t] - U[i,t-1]
        for i in range(n_g):
            for t in range(2, T + 1):
                for tau in range(t, min(T, t + int(spec.tau_on[i]) - 1) + 1):
                    coeffs = {iu(i, t): 1.0}
                    coeffs[iu(i, t - 1)] = coeffs.get(iu(i, t - 1), 0.0) - 1.0
                    coeffs[iu(i, tau)] = coeffs.get(iu(i, tau), 0.0) - 1.0
                    if any(v != 0.0 for v in coeffs.values()):
                        add(coeffs, 0.0)

        # minimum down-time; the corrected standard form detects a shutdown,
        # the printed form is kept reachable for diagnosis
        for i in range(n_g):
            for t in range(2, T + 1):
                for tau in range(t, min(T, t + int(spec.tau_off[i]) - 1) + 1):
                    coeffs = {iu(i, tau): 1.0}
                    coeffs[iu(i, t - 1)] = coeffs.get(iu(i, t - 1), 0.0) + 1.0
                    sign = 1.0 if spec.min_down_printed_form else -1.0
                    coeffs[iu(i, t)] = coeffs.get(iu(i, t), 0.0) + sign
                    if any(v != 0.0 for v in coeffs.values()):
                        add(coeffs, 1.0)

        # one-sided ramp limit, cold start P[i,0] = 0
        for i in range(n_g):
            for t in range(1, T + 1):
                coeffs = {ip(i, t): 1.0}
                if t > 1:
                    coeffs[ip(i, t - 1)] = -1.0
                add(coeffs, spec.ramp_max[i, t - 1])

        # epigraph secants of the quadratic cost on [0, p_max]
        K = spec.pwl_segments
        for i in range(n_g):
            for t in range(1, T + 1):
                pm = spec.p_max[i, t - 1]
                qi, ci = spec.q_cost[i], spec.c_cost[i]
                bp = np.linspace(0.0, pm, K + 1)
                for k in range(K):
                    slope = qi * (bp[k] + bp[k + 1]) + ci
                    add({ip(i, t): slope, iw(i, t): -1.0}, qi * bp[k] * bp[k + 1])

        self._A = np.array(rows)
        self._b = np.array(rhs)
        self.n_rows = len(rows)

        if spec.min_down_printed_form and np.any(self.d0 - spec.demand_halfwidth > 0) and T >= 2:
            warnings.warn(
                "printed min-down form forbids any commitment after t=1; "
                "instances with positive demand are infeasible",
                RuntimeWarning,
                stacklevel=3,
            )

    def _ip(self, i, t):  # generation variable index, t in 1..T
        return i * self.spec.t_horizon + (t - 1)

    def _iw(self, i, t):  # cost-epigraph variable index
        return self._nv + i * self.spec.t_horizon + (t - 1)

    def _iu(self, i, t):  # commitment variable index
        return 2 * self._nv + i * self.spec.t_horizon + (t - 1)

    @property
    def dim_q(self) -> int:
        return self.spec.t_horizon

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        hw = self.spec.demand_halfwidth
        return rng.uniform(-1.0, 1.0, self.spec.t_horizon) * hw

    def instantiate(self, q: np.ndarray):
        q = np.asarray(q, dtype=float)
        T = self.spec.t_horizon
        if q.shape != (T,):
            raise ModelSpecError(f"q must have length {T}")
        b = self._b.copy()
        b[self.demand_offset : self.demand_offset + T] = -(self.d0 + q)
        return self._A, b

    def recover_q(self, block) -> np.ndarray:
        T = self.spec.t_horizon
        return -np.asarray(block.b[self.demand_offset : self.demand_offset + T]) - self.d0

    # ----- helpers for structural checks -------------------------------

    def commitment(self, x: np.ndarray) -> np.ndarray:
        """The U matrix (n_g x T) of a solution, rounded to 0/1."""
        n_g, T = self.spec.n_g, self.spec.t_horizon
        U = np.empty((n_g, T))
        for i in range(n_g):
            for t in range(1, T + 1):
                U[i, t - 1] = x[self._iu(i, t)]
        return np.round(U)

    def generation(self, x: np.ndarray) -> np.ndarray:
        n_g, T = self.spec.n_g, self.spec.t_horizon
        P = np.empty((n_g, T))
        for i in range(n_g):
            for t in range(1, T + 1):
                P[i, t - 1] = x[self._ip(i, t)]
        return P

    def true_quadratic_cost(self, x: np.ndarray) -> float:
        P = self.generation(x)
        return float(np.sum(self.spec.q_cost[:, None] * P * P + self.spec.c_cost[:, None] * P))

    def pwl_gap_bound(self) -> float:
        """Max over-approximation of the PWL cost vs the true quadratic."""
        seg = self.spec.p_max / self.spec.pwl_segments
        return float(np.sum(self.spec.q_cost[:, None] * seg * seg / 4.0))


def check_commitment_runs(U: np.ndarray, tau_on: np.ndarray, tau_off: np.ndarray) -> bool:
    """Combinatorial min up/down check: after a startup (shutdown) at t, the
    unit stays on (off) through min(T, t + tau - 1).  Independent of the
    inequality encoding."""
    U = np.asarray(U)
    n_g, T = U.shape
    for i in range(n_g):
        for t in range(2, T + 1):
            prev, cur = U[i, t - 2], U[i, t - 1]
            if cur == 1 and prev == 0:
                end = min(T, t + int(tau_on[i]) - 1)
                if not np.all(U[i, t - 1 : end] == 1):
                    return False
            if cur == 0 and prev == 1:
                end = min(T, t + int(tau_off[i]) - 1)
                if not np.all(U[i, t - 1 : end] == 0):
                    return False
    return True


def make_unit_commitment(spec: UnitCommitmentSpec) -> UnitCommitmentModel:
    """Build the model, rejecting specs that cannot serve the peak demand.

    The check simulates the all-on schedule at maximum ramp-feasible output
    and requires it to cover the nominal demand plus the uncertainty
    halfwidth at every period.
    """
    model = UnitCommitmentModel(spec)
    n_g, T = spec.n_g, spec.t_horizon
    max_out = np.zeros((n_g, T))
    for i in range(n_g):
        prev = 0.0
        for t in range(T):
            prev = min(spec.p_max[i, t], prev + spec.ramp_max[i, t])
            max_out[i, t] = prev
    deliverable = max_out.sum(axis=0)
    need = model.d0 + spec.demand_halfwidth
    if np.any(deliverable < need):
        t_bad = int(np.argmax(deliverable < need)) + 1
        raise ModelSpecError(
            f"spec cannot serve demand at t={t_bad}: max deliverable "
            f"{deliverable[t_bad-1]:.1f} < required {need[t_bad-1]:.1f}"
        )
    return model
