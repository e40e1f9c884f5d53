"""Hot numeric kernels.

Every kernel exists twice: a loop version compiled with numba and a
vectorised numpy version. The module-level names (``cone_parts``,
``cone_exp``, ``mw_direct``, ``mom_batch_means``) point at the numba
variant unless ``SOCPMW_NUMBA=0`` is set or numba is missing. Both variants
are importable under their explicit names so they can be compared.

Coordinates are concatenated cone blocks described by ``offsets`` and
``sizes``; slot ``offsets[k]`` holds the scalar part of cone ``k``.
"""
import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

# spectral frames with vector norm below DEGENERATE_REL * (1 + |v0|) are degenerate
DEGENERATE_REL = 1e-13

MW_FEASIBLE = 0
MW_INFEASIBLE = 1


# --------------------------------------------------------------------- numpy


def cone_parts_numpy(values, offsets, sizes):
    """Return ``(scalars, vector_norms)`` for every cone."""
    sq = values * values
    sq[offsets] = 0.0
    return values[offsets].copy(), np.sqrt(np.add.reduceat(sq, offsets))


def _sinh_ratio_numpy(a, nu, ep, em, shift):
    # (ep - em) / (2 nu) cancels badly for small nu; use e^(a-shift) sinh(nu)/nu there
    small = nu < 1.0
    safe = np.where(nu > 0.0, nu, 1.0)
    near = np.exp(a - shift) * np.where(nu > 0.0, np.sinh(np.where(small, nu, 0.0)) / safe, 1.0)
    return np.where(small, near, 0.5 * (ep - em) / safe)


def cone_exp_numpy(values, offsets, sizes, shift):
    scal, nrm = cone_parts_numpy(values, offsets, sizes)
    ep = np.exp(scal + nrm - shift)
    em = np.exp(scal - nrm - shift)
    ratio = _sinh_ratio_numpy(scal, nrm, ep, em, shift)
    out = values * np.repeat(ratio, sizes)
    out[offsets] = 0.5 * (ep + em)
    return out


def _gibbs_numpy(neg_u, offsets, sizes):
    scal, nrm = cone_parts_numpy(neg_u, offsets, sizes)
    shift = np.max(scal + nrm)
    x = cone_exp_numpy(neg_u, offsets, sizes, shift)
    return x / (2.0 * np.sum(x[offsets]))


def mw_direct_numpy(A, b, offsets, sizes, theta, T):
    """Multiplicative weights with the exact direct oracle, numpy per step.

    Returns ``(status, counts, js, evidence, iterations)``; ``js`` and
    ``evidence`` hold one entry per oracle call (the last call is the
    AllSatisfied one when ``status == MW_FEASIBLE``).
    """
    m, n = A.shape
    step = theta / 6.0
    half = theta / 2.0
    u = np.zeros(n)
    counts = np.zeros(m, dtype=np.int64)
    js = np.empty(T + 1, dtype=np.int64)
    evid = np.empty(T + 1)
    for t in range(T):
        x = _gibbs_numpy(-u, offsets, sizes)
        v = A @ x - b
        j = int(np.argmax(v)) if m else 0
        vj = v[j] if m else -np.inf
        js[t] = j
        evid[t] = vj
        if not vj > half:
            js[t] = -1
            return MW_FEASIBLE, counts, js[: t + 1], evid[: t + 1], t
        counts[j] += 1
        u += step * A[j]
    return MW_INFEASIBLE, counts, js[:T], evid[:T], T


def mom_batch_means_numpy(row, cum, p, norm2, last, u):
    """Batch means of the importance-sampled estimator ``norm2 * p_i / row_i``.

    ``u`` is a ``(batches, B)`` array of uniforms on [0, 1); index ``i`` is
    drawn by inverse CDF over the cumulative squared-entry table ``cum``.
    """
    idx = np.searchsorted(cum, u * norm2, side="right")
    np.minimum(idx, last, out=idx)
    draws = norm2 * p[idx] / row[idx]
    return draws.mean(axis=1)


# --------------------------------------------------------------------- numba


@njit
def cone_parts_numba(values, offsets, sizes):
    r = offsets.shape[0]
    scal = np.empty(r)
    nrm = np.empty(r)
    for k in range(r):
        o = offsets[k]
        s = 0.0
        for i in range(o + 1, o + sizes[k]):
            s += values[i] * values[i]
        scal[k] = values[o]
        nrm[k] = np.sqrt(s)
    return scal, nrm


@njit
def _sinh_ratio(a, nu, ep, em, shift):
    if nu >= 1.0:
        return 0.5 * (ep - em) / nu
    if nu == 0.0:
        return np.exp(a - shift)
    return np.exp(a - shift) * np.sinh(nu) / nu


@njit
def cone_exp_numba(values, offsets, sizes, shift):
    out = np.empty_like(values)
    for k in range(offsets.shape[0]):
        o = offsets[k]
        s = 0.0
        for i in range(o + 1, o + sizes[k]):
            s += values[i] * values[i]
        a = values[o]
        nu = np.sqrt(s)
        ep = np.exp(a + nu - shift)
        em = np.exp(a - nu - shift)
        out[o] = 0.5 * (ep + em)
        ratio = _sinh_ratio(a, nu, ep, em, shift)
        for i in range(o + 1, o + sizes[k]):
            out[i] = ratio * values[i]
    return out


@njit
def _gibbs_into(neg_u, offsets, sizes, x):
    r = offsets.shape[0]
    shift = -np.inf
    for k in range(r):
        o = offsets[k]
        s = 0.0
        for i in range(o + 1, o + sizes[k]):
            s += neg_u[i] * neg_u[i]
        lp = neg_u[o] + np.sqrt(s)
        if lp > shift:
            shift = lp
    z = 0.0
    for k in range(r):
        o = offsets[k]
        s = 0.0
        for i in range(o + 1, o + sizes[k]):
            s += neg_u[i] * neg_u[i]
        a = neg_u[o]
        nu = np.sqrt(s)
        ep = np.exp(a + nu - shift)
        em = np.exp(a - nu - shift)
        x[o] = 0.5 * (ep + em)
        z += ep + em
        ratio = _sinh_ratio(a, nu, ep, em, shift)
        for i in range(o + 1, o + sizes[k]):
            x[i] = ratio * neg_u[i]
    for i in range(x.shape[0]):
        x[i] /= z


@njit
def mw_direct_numba(A, b, offsets, sizes, theta, T):
    m, n = A.shape
    step = theta / 6.0
    half = theta / 2.0
    neg_u = np.zeros(n)
    x = np.empty(n)
    counts = np.zeros(m, dtype=np.int64)
    js = np.empty(T + 1, dtype=np.int64)
    evid = np.empty(T + 1)
    for t in range(T):
        _gibbs_into(neg_u, offsets, sizes, x)
        best = -np.inf
        j = 0
        for row in range(m):
            acc = 0.0
            for i in range(n):
                acc += A[row, i] * x[i]
            acc -= b[row]
            if acc > best:
                best = acc
                j = row
        js[t] = j
        evid[t] = best
        if not best > half:
            js[t] = -1
            return MW_FEASIBLE, counts, js[: t + 1], evid[: t + 1], t
        counts[j] += 1
        for i in range(n):
            neg_u[i] -= step * A[j, i]
    return MW_INFEASIBLE, counts, js[:T], evid[:T], T


@njit
def mom_batch_means_numba(row, cum, p, norm2, last, u):
    nb, bsz = u.shape
    size = cum.shape[0]
    out = np.empty(nb)
    for a in range(nb):
        acc = 0.0
        for c in range(bsz):
            t = u[a, c] * norm2
            lo = 0
            hi = size
            while lo < hi:  # first index with cum > t
                mid = (lo + hi) >> 1
                if cum[mid] > t:
                    hi = mid
                else:
                    lo = mid + 1
            if lo > last:
                lo = last
            acc += norm2 * p[lo] / row[lo]
        out[a] = acc / bsz
    return out


if USE_NUMBA:
    cone_parts = cone_parts_numba
    cone_exp = cone_exp_numba
    mw_direct = mw_direct_numba
    mom_batch_means = mom_batch_means_numba
else:
    cone_parts = cone_parts_numpy
    cone_exp = cone_exp_numpy
    mw_direct = mw_direct_numpy
    mom_batch_means = mom_batch_means_numpy

__all__ = [
    "HAVE_NUMBA",
    "USE_NUMBA",
    "MW_FEASIBLE",
    "MW_INFEASIBLE",
    "cone_parts",
    "cone_exp",
    "mw_direct",
    "mom_batch_means",
]
