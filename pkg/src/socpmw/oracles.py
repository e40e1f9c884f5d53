"""Violated-constraint oracles: direct exact, and the two-step sampler + search.

An oracle is any callable ``oracle(inst, y, xi) -> OracleOutcome``. The
classes here keep a call counter; the randomised ones derive an
independent generator for every call from ``(seed, call index)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._random import derive_rng
from .instance import FeasibilityInstance
from .mw import AllSatisfied, DualWeights, Violated, build_x_from_y, dual_image, gibbs_from_exponent
from .sq import SqMatrix, build_sq, cone_state, sampled_search_sq

BACKENDS = ("exact", "sq")


def t_prime(m: int, theta: float, xi: float) -> int:
    """Number of cone samples, ``ceil(288 ln(8m/xi) / theta^2)``."""
    return math.ceil(288.0 * math.log(8.0 * m / xi) / theta**2)


def direct_oracle(inst: FeasibilityInstance, y: DualWeights, theta: float | None = None):
    """Exact violations of the Gibbs point; reports the argmax if it exceeds ``theta/2``."""
    theta = inst.theta if theta is None else theta
    if inst.m == 0:
        return AllSatisfied()
    x = build_x_from_y(inst, y)
    v = inst.A @ x.values - inst.b
    j = int(np.argmax(v))
    if v[j] > theta / 2:
        return Violated(j, float(v[j]))
    return AllSatisfied(float(v[j]))


@dataclass(frozen=True)
class GibbsSamples:
    indices: np.ndarray
    T_prime: int
    provenance: str  # "exact" or "sq"
    seed: int | None = None


def cone_weights(inst, y: DualWeights) -> tuple[np.ndarray, np.ndarray]:
    """Shifted ``Z^(k)`` for every cone and the unit-trace states ``p^(k)``.

    All ``Z^(k)`` share one positive factor, so ``Z^(k) / Z`` is exact.
    ``p`` is returned as one flat array holding every ``p^(k)`` in its block.
    """
    part = inst.partition
    neg_u = -dual_image(inst, y)
    ex_norm, z = gibbs_from_exponent(part, neg_u)
    live = z > 0
    scale = np.where(live, z.sum() / np.where(live, z, 1.0), 0.0)
    p = ex_norm * np.repeat(scale, part.sizes)
    for k in np.nonzero(~live)[0].tolist():  # weight underflowed; normalise the cone alone
        p[part.block(k)] = cone_state(neg_u[part.block(k)])
    return z, p


def cone_probabilities(inst, y: DualWeights) -> np.ndarray:
    z, _ = cone_weights(inst, y)
    return z / z.sum()


def _draw(probs: np.ndarray, T_prime: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, rng.random(T_prime) * cdf[-1], side="right")
    last = int(np.nonzero(probs > 0)[0][-1])
    return np.minimum(idx, last)


def cone_gibbs_sample_exact(inst, y: DualWeights, T_prime: int, seed=0) -> GibbsSamples:
    """``T_prime`` i.i.d. cone indices with probability ``Z^(k)/Z`` by inverse CDF."""
    if T_prime < 1:
        raise ValueError("T_prime must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, "gibbs")
    probs = cone_probabilities(inst, y)
    return GibbsSamples(_draw(probs, T_prime, rng), T_prime, "exact",
                        None if isinstance(seed, np.random.Generator) else seed)


def sampled_estimates(inst, y: DualWeights, samples: GibbsSamples) -> np.ndarray:
    """``vhat_j = mean_h A^(k_h)_{j,:} p^(k_h) - b_j`` computed exactly."""
    _, p = cone_weights(inst, y)
    idx = np.asarray(samples.indices, dtype=np.int64)
    ks, counts = np.unique(idx, return_counts=True)
    part = inst.partition
    acc = np.zeros(inst.m)
    for k, c in zip(ks.tolist(), counts.tolist()):
        blk = part.block(k)
        acc += c * (inst.A[:, blk] @ p[blk])
    return acc / idx.size - inst.b


def sampled_search_exact(inst, y: DualWeights, theta: float, samples: GibbsSamples):
    """Report the argmax of the sampled violations if it exceeds ``4 theta / 6``."""
    if inst.m == 0:
        return AllSatisfied()
    vhat = sampled_estimates(inst, y, samples)
    j = int(np.argmax(vhat))
    if vhat[j] > 4.0 * theta / 6.0:
        return Violated(j, float(vhat[j]))
    return AllSatisfied(float(vhat[j]))


def two_step_oracle(
    inst: FeasibilityInstance,
    y: DualWeights,
    theta: float,
    xi: float,
    backend: str = "exact",
    seed=0,
    sq: SqMatrix | None = None,
):
    """Gibbs-sample cones, then search the sampled violations.

    Uses ``eta = xi/2``, ``zeta = xi/4`` and ``T' = ceil(288 ln(8m/xi)/theta^2)``.
    The exact sampler has zero total-variation error, so ``zeta`` is not
    spent by either backend's sampler.
    """
    if not 0 < xi < 1:
        raise ValueError(f"xi must lie in (0, 1), got {xi}")
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if inst.m == 0:
        return AllSatisfied()
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, "two-step")
    eta = xi / 2.0
    T = t_prime(inst.m, theta, xi)
    if backend == "exact":
        samples = cone_gibbs_sample_exact(inst, y, T, rng)
        return sampled_search_exact(inst, y, theta, samples)
    if sq is None:
        sq = build_sq(inst.partition, inst.A)
    js, _ = y.support()
    sq.counters.entry_queries += int(js.size) * inst.n  # u = A^T y from queried entries
    probs = cone_probabilities(inst, y)
    samples = GibbsSamples(_draw(probs, T, rng), T, "sq")
    return sampled_search_sq(inst, sq, y, theta, eta, samples, rng)


class DirectOracle:
    deterministic = True

    def __init__(self):
        self.calls = 0

    def __call__(self, inst, y, xi=None):
        self.calls += 1
        return direct_oracle(inst, y)


class TwoStepOracle:
    deterministic = False

    def __init__(self, backend: str = "exact", seed: int = 0):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self.seed = seed
        self.calls = 0
        self.gibbs_draws = 0
        self._sq: dict = {}

    def sq_for(self, inst) -> SqMatrix:
        key = id(inst)
        if key not in self._sq:
            self._sq[key] = (inst, build_sq(inst.partition, inst.A))
        return self._sq[key][1]

    def __call__(self, inst, y, xi):
        rng = derive_rng(self.seed, "oracle", self.calls)
        self.calls += 1
        self.gibbs_draws += t_prime(inst.m, inst.theta, xi) if inst.m else 0
        sq = self.sq_for(inst) if self.backend == "sq" else None
        return two_step_oracle(inst, y, inst.theta, xi, self.backend, rng, sq)

    def batch_shapes(self) -> set:
        return set().union(*(sq.counters.batch_shapes for _, sq in self._sq.values()))

    def sq_counters(self) -> dict:
        total = {"entry_queries": 0, "row_samples": 0, "norm_queries": 0}
        for _, sq in self._sq.values():
            for key, val in sq.counters.as_dict().items():
                total[key] += val
        return total


MODES = {"direct": None, "two-step-exact": "exact", "sq": "sq"}


def make_oracle(mode: str, seed: int = 0):
    if mode not in MODES:
        raise ValueError(f"unknown oracle mode {mode!r}; expected one of {sorted(MODES)}")
    if mode == "direct":
        return DirectOracle()
    return TwoStepOracle(MODES[mode], seed)
