"""From a general SOCP to a sequence of unit-trace feasibility problems.

For a guess ``g`` of the optimum, :func:`embed` adds ``-c`` as an extra
constraint row with right-hand side ``-g/R`` and a size-1 slack cone that
absorbs the unused trace. A binary search over ``g`` in ``[-R, R]`` with a
feasibility engine at ``theta = epsilon / (4 R R_tilde)`` brackets the
optimum to width ``epsilon``.

The slack cone follows the same trace convention as every other cone
(``Tr = 2 x0``), so a lifted point puts ``(1 - Tr(x*)/R) / 2`` there and
the primal recovery divides by ``2 + sum_k Tr exp(...)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._random import derive_rng
from .instance import FeasibilityInstance, SocpInstance, normalize, objective_value, violation_vector
from .jordan import MulticoneVector, trace
from .mw import DualWeights, feasibility_solve, gibbs_from_exponent, iteration_count
from .oracles import make_oracle, t_prime

C_REP = 9
SUCCESS = "success"
PROMISE_VIOLATED = "promise_violated"


def theta_for(epsilon: float, R: float, R_tilde: float) -> float:
    return epsilon / (4.0 * R * R_tilde)


def bs_steps(R_tilde: float, theta: float) -> int:
    """``ceil(log_{4/3}(1 / (2 R_tilde theta)))``, at least zero."""
    val = math.log(1.0 / (2.0 * R_tilde * theta)) / math.log(4.0 / 3.0)
    return max(0, math.ceil(val))


def vote_repetitions(T_bs: int, c_rep: int = C_REP) -> int:
    zeta = 1.0 / (3 * max(T_bs, 1))
    return math.ceil(c_rep * math.log(1.0 / zeta))


def embed(P: SocpInstance, g: float, theta: float = 0.5) -> FeasibilityInstance:
    """Feasibility instance with ``m+1`` rows and ``r+1`` cones for the guess ``g``."""
    if not -P.R <= g <= P.R:
        raise ValueError(f"guess {g} outside [-R, R] = [{-P.R}, {P.R}]")
    blocks = [np.vstack((a, -P.c.cone(k)[None, :])) for k, a in enumerate(P.A_blocks)]
    blocks.append(np.zeros((P.m + 1, 1)))
    b = np.concatenate((P.b / P.R, [-g / P.R]))
    return FeasibilityInstance(P.partition.extend(1), tuple(blocks), b, theta)


def lift_point(x_star: MulticoneVector, P: SocpInstance) -> MulticoneVector:
    """``(x*/R ; s)`` with slack ``s`` chosen so the result has unit trace."""
    tr = trace(x_star)
    if tr > P.R * (1 + 1e-12):
        raise ValueError(f"trace {tr} exceeds R = {P.R}")
    slack = max(0.0, 1.0 - tr / P.R) / 2.0
    return MulticoneVector(P.partition.extend(1), np.concatenate((x_star.values / P.R, [slack])))


def extract_primal(y, P: SocpInstance) -> MulticoneVector:
    """``R exp(w^(k)) / (2 + sum_k Tr exp(w^(k)))`` with ``w^(k) = -A^(k)T y[:m] + c^(k) y[m]``.

    The constant 2 is the trace of the slack cone's exponential; the whole
    ratio is evaluated with one common shift so nothing overflows.
    """
    yv = y.dense() if isinstance(y, DualWeights) else np.asarray(y, dtype=np.float64)
    if yv.size != P.m + 1:
        raise ValueError(f"y must have m+1 = {P.m + 1} entries")
    if np.any(yv < 0):
        raise ValueError("y must be non-negative")
    w = -(yv[: P.m] @ P.A) + P.c.values * yv[P.m] if P.m else P.c.values * yv[P.m]
    x_hat, _ = gibbs_from_exponent(P.partition.extend(1), np.concatenate((w, [0.0])))
    return MulticoneVector(P.partition, P.R * x_hat[: P.n])


@dataclass
class SolveReport:
    status: str
    g: float
    y: DualWeights
    x: MulticoneVector
    objective: float
    constraint_margins: np.ndarray
    iterations: int
    oracle_calls: int
    counters: dict
    seed: int
    epsilon: float
    theta: float
    history: list = field(default_factory=list)


def _vote(P, g, theta, mode, seed, step_id, reps, T, counters):
    F = embed(P, g, theta)
    feasible_votes = 0
    first_y = None
    for rep in range(reps):
        oracle = make_oracle(mode, int(derive_rng(seed, "bs", step_id, rep).integers(2**62)))
        res = feasibility_solve(F, oracle, T=T)
        counters["oracle_calls"] += res.oracle_calls
        counters["mw_iterations"] += res.iterations
        if mode != "direct":
            counters["gibbs_draws"] += oracle.gibbs_draws
            for key, val in oracle.sq_counters().items():
                counters[key] += val
        if res.feasible:
            feasible_votes += 1
            if first_y is None:
                first_y = res.y
        if feasible_votes * 2 > reps or (rep + 1 - feasible_votes) * 2 > reps:
            break  # majority already decided
    return feasible_votes * 2 > reps, first_y, feasible_votes, rep + 1


def binary_search_solve(
    P: SocpInstance,
    epsilon: float,
    oracle_mode: str = "direct",
    seed: int = 0,
    c_rep: int = C_REP,
) -> SolveReport:
    """Bracket the optimum of a normalised SOCP to width ``epsilon``.

    Each step tests ``g`` = midpoint of ``[a, b]``; a feasible verdict moves
    ``a`` to ``g - R R_tilde theta`` and an infeasible one moves ``b`` to
    ``g``. The exact direct oracle is deterministic, so it votes once;
    randomised oracles take a majority over ``ceil(c_rep ln(1/zeta))``
    runs with ``zeta = 1/(3 T_bs)``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    R, Rt = P.R, P.R_tilde
    theta = min(theta_for(epsilon, R, Rt), 0.5)
    T_bs = bs_steps(Rt, theta)
    reps = 1 if oracle_mode == "direct" else vote_repetitions(T_bs, c_rep)
    T = iteration_count(P.r + 1, theta)
    counters = {
        "entry_queries": 0,
        "row_samples": 0,
        "norm_queries": 0,
        "gibbs_draws": 0,
        "oracle_calls": 0,
        "mw_iterations": 0,
        "bs_steps": 0,
    }
    a, b = -R, R
    width_stop = 4.0 * R * Rt * theta
    history = []
    step = 0
    while step < T_bs and (b - a) > width_stop:
        g = 0.5 * (a + b)
        ok, _, votes, runs = _vote(P, g, theta, oracle_mode, seed, step, reps, T, counters)
        history.append({"step": step, "g": g, "feasible": ok, "votes": votes, "runs": runs})
        if ok:
            a = max(-R, g - R * Rt * theta)
        else:
            b = g
        step += 1
    counters["bs_steps"] = step
    ok, y, votes, runs = _vote(P, a, theta, oracle_mode, seed, "final", reps, T, counters)
    history.append({"step": "final", "g": a, "feasible": ok, "votes": votes, "runs": runs})
    status = SUCCESS if ok else PROMISE_VIOLATED
    if y is None:
        y = DualWeights(P.m + 1, theta / 6.0)
    x = extract_primal(y, P)
    return SolveReport(
        status=status,
        g=a,
        y=y,
        x=x,
        objective=objective_value(P, x),
        constraint_margins=violation_vector(P, x),
        iterations=step,
        oracle_calls=counters["oracle_calls"],
        counters=counters,
        seed=seed,
        epsilon=epsilon,
        theta=theta,
        history=history,
    )


def solve(P: SocpInstance, epsilon: float, oracle_mode: str = "direct", seed: int = 0) -> SolveReport:
    """Normalise ``P``, run the binary search, and report in the original units.

    ``epsilon`` is the target accuracy of the original objective; the
    normalised problem is solved with ``epsilon / c_scale``.
    """
    Pn, rep = normalize(P)
    out = binary_search_solve(Pn, epsilon / rep.c_scale, oracle_mode, seed)
    out.g *= rep.c_scale
    out.epsilon = epsilon
    out.objective = objective_value(P, out.x)
    out.constraint_margins = violation_vector(P, out.x)
    return out


def predicted_bs_cost(P: SocpInstance, epsilon: float, oracle_mode: str = "direct") -> dict:
    theta = min(theta_for(epsilon, P.R, P.R_tilde), 0.5)
    T_bs = bs_steps(P.R_tilde, theta)
    T = iteration_count(P.r + 1, theta)
    return {
        "theta": theta,
        "T_bs": T_bs,
        "T": T,
        "repetitions": 1 if oracle_mode == "direct" else vote_repetitions(T_bs),
        "T_prime": t_prime(P.m + 1, theta, 1.0 / (3 * T)),
    }
