"""Instance generators with known ground truth and independent reference oracles.

Everything here is a pure function of its seed. The reference oracles
(grid search, dense matrix exponential, chi-square and binomial tails)
share no code with the algorithms they check.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._random import derive_rng
from .instance import FeasibilityInstance, SocpInstance, dumps, instance_to_dict, save_point
from .jordan import ConePartition, MulticoneVector, arrowhead_dense, row_soc_norm

WITNESS_MARGIN = 0.05  # per-cone lambda_minus >= WITNESS_MARGIN / r
GRID_DIM_CAP = 4
GRID_ROW_CAP = 4
EXP_SIZE_CAP = 16


@dataclass
class GeneratedInstance:
    instance: SocpInstance | FeasibilityInstance
    witness: MulticoneVector | None = None
    known_optimum: float | None = None
    seed: int = 0
    recipe: str = ""
    params: dict = field(default_factory=dict)


def _interior_point(rng, partition: ConePartition, total_trace: float, rho_max: float = 0.8):
    """Cone point with the given trace and every ``lambda_minus >= 0.1 total_trace / r``.

    Each cone gets trace ``t_k >= total_trace / (2r)`` and a vector part of
    relative length ``rho <= rho_max``.
    """
    r = partition.r
    t = total_trace * (0.5 / r + 0.5 * rng.dirichlet(np.ones(r)))
    vals = np.zeros(partition.n)
    for k in range(r):
        blk = partition.block(k)
        x0 = t[k] / 2.0
        vals[blk.start] = x0
        size = blk.stop - blk.start
        if size > 1:
            d = rng.standard_normal(size - 1)
            d /= max(np.linalg.norm(d), 1e-300)
            vals[blk.start + 1 : blk.stop] = rng.uniform(0.0, rho_max) * x0 * d
    return MulticoneVector(partition, vals)


def _random_rows(rng, partition: ConePartition, m: int) -> np.ndarray:
    """Gaussian rows, each divided by its largest per-cone soc-norm."""
    A = rng.standard_normal((m, partition.n))
    for j in range(m):
        scale = max(row_soc_norm(A[j, partition.block(k)]) for k in range(partition.r))
        A[j] /= scale
    return A


def _sizes(rng, r: int, size_range) -> np.ndarray:
    if isinstance(size_range, int):
        return np.full(r, size_range, dtype=np.int64)
    lo, hi = size_range
    return rng.integers(lo, hi + 1, size=r)


def gen_feasible(
    seed: int,
    r: int = 3,
    size_range=(1, 8),
    m: int = 5,
    slack_min: float = 0.0,
    theta: float = 0.05,
) -> GeneratedInstance:
    """Feasibility instance with a strictly interior unit-trace witness.

    ``b = A x* + u`` with ``u_j >= slack_min`` and ``b`` capped at 1; the
    cap never cuts the witness off because ``|A x*| <= 1/2``.
    """
    if slack_min < 0:
        raise ValueError("slack_min must be non-negative")
    rng = derive_rng(seed, "gen_feasible")
    part = ConePartition(_sizes(rng, r, size_range))
    x = _interior_point(rng, part, 1.0)
    A = _random_rows(rng, part, m)
    u = slack_min + np.abs(rng.normal(0.0, 0.01, size=m))
    b = np.minimum(A @ x.values + u, 1.0)
    inst = FeasibilityInstance.from_matrix(part, A, b, theta)
    params = {"r": r, "size_range": list(np.atleast_1d(size_range).tolist()), "m": m,
              "slack_min": slack_min, "theta": theta}
    return GeneratedInstance(inst, witness=x, seed=seed, recipe="feasible", params=params)


def gen_infeasible_uniform(theta: float, r: int = 4, sizes=3, m: int = 3) -> FeasibilityInstance:
    """Rows ``(1, 0...)`` in every cone with ``b_j = 1/2 - 2 theta``.

    Every unit-trace point has ``sum_k x0^(k) = 1/2``, so each constraint
    is violated by exactly ``2 theta``.
    """
    if not 0 < theta < 0.25:
        raise ValueError("theta must lie in (0, 1/4)")
    sizes = np.full(r, sizes, dtype=np.int64) if np.isscalar(sizes) else np.asarray(sizes)
    part = ConePartition(sizes)
    A = np.zeros((m, part.n))
    A[:, part.offsets] = 1.0
    return FeasibilityInstance.from_matrix(part, A, np.full(m, 0.5 - 2.0 * theta), theta)


TINY_SHAPES = ((1,), (2,), (3,), (4,), (1, 1), (1, 2), (2, 2), (1, 3), (1, 1, 1), (1, 1, 2))


def gen_tiny_socp(seed: int, R: float = 1.0, resolution: float = 1e-4) -> GeneratedInstance:
    """Normalised SOCP with total dimension at most 4 and at most 4 rows.

    Row 0 is ``(1, 0...)`` in every cone with ``b_0 = R/2``, so every feasible
    point has trace at most ``R``. The remaining rows are random and pass
    through an interior point with slack at least ``0.1``. The optimum comes
    from :func:`grid_optimum`; ``R_tilde`` is an upper bound on the dual
    weight taken from a secant of the concave value function.
    """
    rng = derive_rng(seed, "gen_tiny_socp")
    part = ConePartition(TINY_SHAPES[int(rng.integers(len(TINY_SHAPES)))])
    extra = int(rng.integers(1, GRID_ROW_CAP))
    xbar = _interior_point(rng, part, R / 2.0)
    trace_row = np.zeros(part.n)
    trace_row[part.offsets] = 1.0
    rows = _random_rows(rng, part, extra)
    b_rand = np.minimum(rows @ xbar.values + rng.uniform(0.1, 0.4, size=extra), R)
    A = np.vstack((trace_row, rows))
    b = np.concatenate(([R / 2.0], b_rand))
    c = rng.standard_normal(part.n)
    c /= max(row_soc_norm(c[part.block(k)]) for k in range(part.r))
    blocks = tuple(A[:, part.block(k)] for k in range(part.r))
    P = SocpInstance(part, blocks, b, c, R=R, R_tilde=1.0)
    g_star = grid_optimum(P, resolution)
    t = 0.05
    g_low = grid_optimum(SocpInstance(part, blocks, b - t, c, R=R, R_tilde=1.0), resolution)
    r_tilde = max(1.0, 1.25 * (g_star - g_low + 2 * resolution * R) / t + 0.05)
    P = SocpInstance(part, blocks, b, c, R=R, R_tilde=r_tilde)
    return GeneratedInstance(P, witness=None, known_optimum=g_star, seed=seed, recipe="tiny",
                             params={"R": R, "resolution": resolution})


def _param_box(P: SocpInstance) -> tuple[np.ndarray, np.ndarray]:
    """Bounds of the cone coordinates, one block of ``size`` parameters per cone.

    A cone of size ``s`` is parametrised by its trace ``t in [0, R]``, the
    radius fraction ``rho in [0, 1]`` and ``s - 2`` angles, so the cone
    boundary ``rho = 1`` is a coordinate face.
    """
    lo, hi = [], []
    for size in P.partition.sizes.tolist():
        lo.append(0.0)
        hi.append(P.R)
        if size == 2:
            lo.append(-1.0)
            hi.append(1.0)
        elif size >= 3:
            lo.append(0.0)
            hi.append(1.0)
            lo.append(-2.0 * math.pi)  # azimuth, doubled so windows never hit a seam
            hi.append(2.0 * math.pi)
            if size == 4:
                lo.append(0.0)
                hi.append(math.pi)
    return np.array(lo), np.array(hi)


def _to_points(P: SocpInstance, Q: np.ndarray) -> np.ndarray:
    X = np.empty_like(Q)
    for k, size in enumerate(P.partition.sizes.tolist()):
        o = int(P.partition.offsets[k])
        x0 = Q[:, o] / 2.0
        X[:, o] = x0
        if size == 2:
            X[:, o + 1] = Q[:, o + 1] * x0
        elif size == 3:
            rad = Q[:, o + 1] * x0
            X[:, o + 1] = rad * np.cos(Q[:, o + 2])
            X[:, o + 2] = rad * np.sin(Q[:, o + 2])
        elif size == 4:
            rad = Q[:, o + 1] * x0
            polar = np.sin(Q[:, o + 3])
            X[:, o + 1] = rad * polar * np.cos(Q[:, o + 2])
            X[:, o + 2] = rad * polar * np.sin(Q[:, o + 2])
            X[:, o + 3] = rad * np.cos(Q[:, o + 3])
    return X


def grid_optimum(P: SocpInstance, resolution: float = 1e-4, points: int = 17, keep: int = 8) -> float:
    """Brute-force ``max c.x`` over cone points with trace at most ``R`` and ``A x <= b``.

    The grid lives in cone coordinates (see :func:`_param_box`), so every
    grid point is in the cone. A uniform grid over the coordinate box is
    searched around the ``keep`` best feasible points, recentring while the
    best value improves, and the spacing then shrinks by 4 until it is
    below ``resolution`` (times the box width). The result is attained by
    a feasible point, so it never exceeds the optimum; when the feasible
    set has an interior point with slack ``rho`` in every constraint, the
    gap is ``O(R resolution / rho)``.
    """
    if P.n > GRID_DIM_CAP or P.m > GRID_ROW_CAP:
        raise ValueError(f"grid oracle supports n <= {GRID_DIM_CAP} and m <= {GRID_ROW_CAP}")
    lo, hi = _param_box(P)
    c = P.c.values
    offs = P.partition.offsets
    offsets = np.linspace(-1.0, 1.0, points)
    lattice = np.stack(np.meshgrid(*([offsets] * P.n), indexing="ij"), axis=-1).reshape(-1, P.n)
    centers = ((lo + hi) / 2.0)[None, :]
    half = (hi - lo) / 2.0
    best = -math.inf
    while True:
        # recentre at this spacing until the window stops improving, then shrink
        for _ in range(100):
            Q = np.clip((centers[:, None, :] + lattice[None, :, :] * half).reshape(-1, P.n), lo, hi)
            ok = Q[:, offs].sum(axis=1) <= P.R
            Q = Q[ok]
            X = _to_points(P, Q)
            if P.m:
                ok = np.all(X @ P.A.T <= P.b, axis=1)
                Q, X = Q[ok], X[ok]
            if Q.shape[0] == 0:
                break
            vals = X @ c
            order = np.argsort(-vals)[:keep]
            top = float(vals[order[0]])
            centers = Q[order]
            if top <= best:
                break
            best = top
        step = 2.0 * half / (points - 1)
        if Q.shape[0] == 0 or np.max(step / (hi - lo)) <= resolution:
            break
        half = 2.0 * step
    if best == -math.inf:
        raise ValueError("no feasible grid point found")
    return best


def hand_example_r2() -> tuple[FeasibilityInstance, "object"]:
    """Two size-1 cones with ``Z^(0) : Z^(1) = 1 : 2`` at the returned ``y``."""
    from .mw import DualWeights

    part = ConePartition([1, 1])
    F = FeasibilityInstance.from_matrix(part, [[math.log(2.0), 0.0]], [0.0], 0.5)
    return F, DualWeights(1, 1.0, {0: 1})


def gen_oracle_pair(seed: int, theta: float, kind: str, r: int = 4, m: int = 5):
    """``(F, y)`` whose exact violations have ``max v <= theta/4`` ("low") or ``>= 2 theta`` ("high").

    ``y`` is a random dual on a lattice of step ``theta/6``; ``b`` is set
    relative to the Gibbs point of ``y``.
    """
    from .mw import DualWeights, build_x_from_y

    if kind not in ("low", "high"):
        raise ValueError("kind must be 'low' or 'high'")
    rng = derive_rng(seed, "oracle_pair", kind)
    part = ConePartition(rng.integers(1, 6, size=r))
    A = _random_rows(rng, part, m)
    y = DualWeights.from_counts(rng.integers(0, 12, size=m), theta / 6.0)
    tmp = FeasibilityInstance.from_matrix(part, A, np.zeros(m), theta)
    Ax = A @ build_x_from_y(tmp, y).values
    if kind == "low":
        b = Ax + theta / 4.0 - rng.uniform(0.0, theta / 2.0, size=m)
    else:
        b = Ax + rng.uniform(-theta, theta, size=m)
        hot = rng.choice(m, size=int(rng.integers(1, m + 1)), replace=False)
        b[hot] = Ax[hot] - 2.0 * theta - rng.uniform(0.0, theta, size=hot.size)
    return FeasibilityInstance.from_matrix(part, A, np.clip(b, -1.0, 1.0), theta), y


# ------------------------------------------------------------ dense exponential


def matrix_exp_oracle(v: np.ndarray) -> np.ndarray:
    """``exp(Arw(v)) e`` for a single cone by Taylor scaling and squaring.

    The matrix is scaled so its infinity norm is at most 1/2, summed to 30
    Taylor terms (remainder below 1e-40 relative), then squared back.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size > EXP_SIZE_CAP:
        raise ValueError(f"cone size {v.size} exceeds {EXP_SIZE_CAP}")
    L = arrowhead_dense(MulticoneVector(ConePartition([v.size]), v))
    norm = float(np.abs(L).sum(axis=1).max())
    s = max(0, math.ceil(math.log2(norm)) + 1) if norm > 0 else 0
    X = L / 2.0**s
    E = np.eye(v.size)
    term = np.eye(v.size)
    for q in range(1, 31):
        term = term @ X / q
        E = E + term
    for _ in range(s):
        E = E @ E
    return E[:, 0].copy()


# ------------------------------------------------------------ statistical tests


def _lower_gamma_series(a: float, x: float) -> float:
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi2_sf(stat: float, df: int) -> float:
    """Upper tail ``Q(df/2, stat/2)`` of the chi-square distribution (relative accuracy ~1e-12)."""
    if df <= 0:
        raise ValueError("df must be positive")
    if stat <= 0:
        return 1.0
    a, x = df / 2.0, stat / 2.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _lower_gamma_series(a, x))
    return _upper_gamma_cf(a, x)


def _merge_bins(observed: np.ndarray, expected: np.ndarray, min_expected: float):
    obs_out, exp_out = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed.tolist(), expected.tolist()):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if not exp_out:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
        else:
            obs_out[-1] += o_acc
            exp_out[-1] += e_acc
    return np.array(obs_out), np.array(exp_out)


def chi_square_test(observed, expected_probs, min_expected: float = 5.0) -> tuple[float, float]:
    """Pearson goodness-of-fit statistic and p-value.

    Adjacent bins are merged until each expected count is at least
    ``min_expected``. Raises ``ValueError`` if fewer than two bins remain.
    """
    obs = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(expected_probs, dtype=np.float64)
    if obs.shape != probs.shape or obs.ndim != 1:
        raise ValueError("observed and expected must be 1-d arrays of equal length")
    if np.any(probs < 0) or np.any(obs < 0) or probs.sum() <= 0:
        raise ValueError("counts and probabilities must be non-negative")
    N = obs.sum()
    obs, exp = _merge_bins(obs, probs / probs.sum() * N, min_expected)
    if obs.size < 2:
        raise ValueError("degenerate test: fewer than two bins after merging")
    stat = float(((obs - exp) ** 2 / exp).sum())
    return stat, chi2_sf(stat, obs.size - 1)


def binomial_sf(k: int, n: int, p: float) -> float:
    """``P[X >= k]`` for ``X ~ Binomial(n, p)`` by exact summation in log space."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    lp, lq = math.log(p), math.log1p(-p)
    logs = [
        math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq
        for i in range(k, n + 1)
    ]
    top = max(logs)
    return min(1.0, math.exp(top) * sum(math.exp(v - top) for v in logs))


def failure_rate_ok(failures: int, trials: int, rate: float, confidence: float = 0.99) -> bool:
    """One-sided test: is ``failures`` consistent with a failure probability of at most ``rate``?"""
    return binomial_sf(failures, trials, rate) >= 1.0 - confidence


# ------------------------------------------------------------ corpus


def _entry_name(recipe: str, seed: int) -> str:
    return f"{recipe}-{seed}"


def write_generated(out_dir, gen: GeneratedInstance) -> dict:
    """Write one instance (and its witness) and merge its entry into ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = _entry_name(gen.recipe, gen.seed)
    inst_file = f"{name}.json"
    (out / inst_file).write_text(dumps(instance_to_dict(gen.instance)))
    entry = {"file": inst_file, "recipe": gen.recipe, "seed": gen.seed, "params": gen.params}
    if gen.witness is not None:
        entry["witness"] = f"{name}.witness.json"
        save_point(out / entry["witness"], gen.witness)
    if gen.known_optimum is not None:
        entry["known_optimum"] = gen.known_optimum
    manifest_path = out / "manifest.json"
    manifest = json.loads(manifest_path.read_text()) if manifest_path.exists() else {"entries": {}}
    manifest["entries"][name] = entry
    manifest["entries"] = dict(sorted(manifest["entries"].items()))
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return entry


def generate(recipe: str, seed: int, **params) -> GeneratedInstance:
    """Dispatch on recipe name: ``feasible``, ``infeasible`` or ``tiny``."""
    if recipe == "feasible":
        return gen_feasible(seed, **params)
    if recipe == "infeasible":
        theta = params.pop("theta", 0.1)
        inst = gen_infeasible_uniform(theta, **params)
        return GeneratedInstance(inst, seed=seed, recipe="infeasible", params={"theta": theta, **params})
    if recipe == "tiny":
        return gen_tiny_socp(seed, **params)
    raise ValueError(f"unknown recipe {recipe!r}")
