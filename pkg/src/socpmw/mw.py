"""Multiplicative-weights loop for unit-trace SOCP feasibility."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import kernels
from .instance import FeasibilityInstance
from .jordan import JordanOverflowError, MulticoneVector


@dataclass
class DualWeights:
    """Sparse non-negative dual vector whose entries are multiples of ``step``.

    Entries are kept as integer counts so the multiple-of-step invariant is
    exact; ``values`` are ``count * step``.
    """

    m: int
    step: float
    counts: dict = field(default_factory=dict)

    def add(self, j: int, times: int = 1) -> None:
        if not 0 <= j < self.m:
            raise IndexError(f"constraint index {j} outside [0, {self.m})")
        self.counts[j] = self.counts.get(j, 0) + times

    @property
    def entries(self) -> dict:
        return {j: c * self.step for j, c in sorted(self.counts.items())}

    @property
    def s(self) -> int:
        return len(self.counts)

    @property
    def beta(self) -> float:
        return sum(self.counts.values()) * self.step

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        js = np.array(sorted(self.counts), dtype=np.int64)
        return js, np.array([self.counts[j] * self.step for j in js.tolist()])

    def dense(self) -> np.ndarray:
        y = np.zeros(self.m)
        js, vals = self.support()
        y[js] = vals
        return y

    @classmethod
    def from_counts(cls, counts, step: float) -> "DualWeights":
        counts = np.asarray(counts, dtype=np.int64)
        return cls(counts.size, step, {int(j): int(c) for j, c in enumerate(counts) if c > 0})

    @classmethod
    def from_dense(cls, y, step: float) -> "DualWeights":
        """Round a dense vector onto the ``step`` lattice (entries must be multiples)."""
        y = np.asarray(y, dtype=np.float64)
        counts = np.rint(y / step).astype(np.int64)
        if np.any(counts < 0) or not np.allclose(counts * step, y, rtol=0, atol=1e-12):
            raise ValueError("entries are not non-negative multiples of step")
        return cls.from_counts(counts, step)


@dataclass(frozen=True)
class AllSatisfied:
    evidence: float = -math.inf  # largest (estimated) violation seen


@dataclass(frozen=True)
class Violated:
    j: int
    evidence: float


OracleOutcome = Union[AllSatisfied, Violated]
Oracle = Callable[[FeasibilityInstance, DualWeights, float], OracleOutcome]


class OracleFailure(RuntimeError):
    def __init__(self, iteration: int, cause: BaseException):
        super().__init__(f"oracle failed at iteration {iteration}: {cause}")
        self.iteration = iteration


def iteration_count(r: int, theta: float) -> int:
    """``ceil(36 ln(2r) / theta^2)``."""
    return math.ceil(36.0 * math.log(2 * r) / theta**2)


def dual_image(inst, y: DualWeights) -> np.ndarray:
    """``u = A^T y`` using only the support of ``y``."""
    js, vals = y.support()
    if js.size == 0:
        return np.zeros(inst.n)
    return vals @ inst.A[js]


def gibbs_from_exponent(partition, exponent: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalised ``exp(exponent) / Tr exp(exponent)`` and the shifted cone weights.

    The exponent is shifted by its largest spectral value, so every
    exponential is at most one. Returns ``(x, z)`` where ``z[k]`` is the
    shifted trace of the exponential of cone ``k``.
    """
    off, sizes = partition.offsets, partition.sizes
    scal, nrm = kernels.cone_parts(exponent, off, sizes)
    shift = float(np.max(scal + nrm))
    if not math.isfinite(shift):
        raise JordanOverflowError("non-finite exponent")
    ex = kernels.cone_exp(exponent, off, sizes, shift)
    z = 2.0 * ex[off]
    return ex / z.sum() + 0.0, z  # + 0.0 clears signed zeros


def build_x_from_y(inst: FeasibilityInstance, y: DualWeights) -> MulticoneVector:
    """Gibbs point ``exp(-A^T y) / sum_k Tr exp(-A^(k)T y)``."""
    x, _ = gibbs_from_exponent(inst.partition, -dual_image(inst, y))
    return MulticoneVector(inst.partition, x)


@dataclass
class FeasibilityResult:
    status: str  # "Feasible" or "Infeasible"
    y: DualWeights
    iterations: int  # violated iterations performed
    T: int
    xi: float
    log_j: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    log_evidence: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def log(self) -> list:
        """``(t, j, evidence)`` per oracle call; ``j`` is None for AllSatisfied."""
        return [
            (t, None if j < 0 else int(j), float(e))
            for t, (j, e) in enumerate(zip(self.log_j.tolist(), self.log_evidence.tolist()))
        ]

    @property
    def feasible(self) -> bool:
        return self.status == "Feasible"

    @property
    def oracle_calls(self) -> int:
        return self.iterations + (1 if self.feasible else 0)


def feasibility_solve(
    inst: FeasibilityInstance,
    oracle: Oracle | str = "direct",
    seed: int = 0,
    *,
    T: int | None = None,
    fused: bool = True,
) -> FeasibilityResult:
    """Run the multiplicative-weights loop against a violated-constraint oracle.

    ``oracle`` is a callable ``(inst, y, xi) -> OracleOutcome`` or a mode
    name accepted by :func:`socpmw.oracles.make_oracle`. For the exact
    direct oracle the whole loop runs inside :func:`kernels.mw_direct`
    unless ``fused=False``.
    """
    from .oracles import DirectOracle, make_oracle

    theta = inst.theta
    if not 0 < theta < 1:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if T is None:
        T = iteration_count(inst.r, theta)
    xi = 1.0 / (3 * T)
    if isinstance(oracle, str):
        oracle = make_oracle(oracle, seed)
    step = theta / 6.0

    if fused and isinstance(oracle, DirectOracle):
        status, counts, js, evid, iters = kernels.mw_direct(
            inst.A, inst.b, inst.partition.offsets, inst.partition.sizes, theta, T
        )
        y = DualWeights.from_counts(counts, step)
        status = "Feasible" if status == kernels.MW_FEASIBLE else "Infeasible"
        oracle.calls += len(js)
        return FeasibilityResult(status, y, int(iters), T, xi, np.asarray(js), np.asarray(evid))

    y = DualWeights(inst.m, step)
    log_j: list = []
    log_e: list = []
    status = "Infeasible"
    for t in range(T):
        try:
            out = oracle(inst, y, xi)
        except Exception as exc:
            raise OracleFailure(t, exc) from exc
        log_e.append(out.evidence)
        if isinstance(out, AllSatisfied):
            log_j.append(-1)
            status = "Feasible"
            break
        log_j.append(out.j)
        y.add(out.j)
    iters = len(log_j) - (status == "Feasible")
    return FeasibilityResult(
        status, y, iters, T, xi, np.array(log_j, dtype=np.int64), np.array(log_e, dtype=np.float64)
    )
