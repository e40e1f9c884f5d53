"""Sample-and-query access to the constraint rows and the dequantised search oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .jordan import ConePartition

ZERO_MASS = 1e-300
CHUNK_DRAWS = 1 << 22


def batch_size(mu: float) -> int:
    """Samples per batch mean, ``ceil(6 / mu^2)``."""
    return math.ceil(6.0 / mu**2)


def batch_count(delta: float) -> int:
    """Batches per median, ``ceil(9 ln(1/delta))`` (at least one)."""
    return max(1, math.ceil(9.0 * math.log(1.0 / delta)))


@dataclass
class SqCounters:
    entry_queries: int = 0
    row_samples: int = 0
    norm_queries: int = 0
    batch_shapes: set = field(default_factory=set)  # distinct (B, M) used by the estimator

    def as_dict(self) -> dict:
        return {
            "entry_queries": self.entry_queries,
            "row_samples": self.row_samples,
            "norm_queries": self.norm_queries,
        }


@dataclass(eq=False)
class SqMatrix:
    """Per-row query, norm and squared-entry sampling access to ``[A^(0) ... A^(r-1)]``.

    ``cum[j]`` restarts at every cone boundary, so ``cum[j, block(k)]`` is the
    cumulative squared-entry table of row block ``A^(k)_{j,:}``.
    """

    partition: ConePartition
    rows: np.ndarray  # (m, n)
    cum: np.ndarray  # (m, n)
    norm2: np.ndarray  # (m, r)
    last: np.ndarray  # (m, r) local index of the last entry with mass, -1 for zero rows
    build_queries: int
    counters: SqCounters = field(default_factory=SqCounters)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    def _seg(self, k: int) -> slice:
        return self.partition.block(k)

    def query(self, j: int, k: int, i: int) -> float:
        self.counters.entry_queries += 1
        return float(self.rows[j, self.partition.offsets[k] + i])

    def query_block(self, js, k: int) -> np.ndarray:
        """Rows ``js`` of block ``k`` (counted as one query per entry)."""
        js = np.asarray(js, dtype=np.int64)
        blk = self.rows[js, self._seg(k)]
        self.counters.entry_queries += blk.size
        return blk

    def row_norm(self, j: int, k: int) -> float:
        self.counters.norm_queries += 1
        return math.sqrt(self.norm2[j, k])

    def sample(self, j: int, k: int, rng: np.random.Generator, size: int | None = None):
        """Index ``i`` of block ``k`` drawn with probability ``A_ji^2 / ||A_j||^2``."""
        n2 = self.norm2[j, k]
        if n2 == 0.0:
            raise ValueError(f"row {j} of block {k} is zero; sampling is undefined")
        count = 1 if size is None else int(size)
        u = rng.random(count)
        idx = np.searchsorted(self.cum[j, self._seg(k)], u * n2, side="right")
        np.minimum(idx, self.last[j, k], out=idx)
        self.counters.row_samples += count
        return int(idx[0]) if size is None else idx


def build_sq(partition: ConePartition, A) -> SqMatrix:
    """One pass over the data to build the cumulative sampling tables."""
    rows = np.ascontiguousarray(A, dtype=np.float64)
    if not np.all(np.isfinite(rows)):
        raise ValueError("sample-and-query data must be finite")
    sq = rows * rows
    sq[np.abs(rows) < ZERO_MASS] = 0.0
    m = rows.shape[0]
    cum = np.empty_like(sq)
    norm2 = np.zeros((m, partition.r))
    last = np.full((m, partition.r), -1, dtype=np.int64)
    for k in range(partition.r):
        seg = partition.block(k)
        c = np.cumsum(sq[:, seg], axis=1)
        cum[:, seg] = c
        norm2[:, k] = c[:, -1]
        pos = sq[:, seg] > 0
        has = pos.any(axis=1)
        last[has, k] = seg.stop - seg.start - 1 - np.argmax(pos[has, ::-1], axis=1)
    return SqMatrix(partition, rows, cum, norm2, last, build_queries=rows.size)


def _mom_chunks(sq: SqMatrix, j: int, k: int, p: np.ndarray, n_est: int, B: int, M: int, rng):
    """``n_est`` independent median-of-means estimates of ``A^(k)_{j,:} . p``."""
    seg = sq._seg(k)
    row = sq.rows[j, seg]
    cum = sq.cum[j, seg]
    n2 = float(sq.norm2[j, k])
    last = int(sq.last[j, k])
    p = np.ascontiguousarray(p, dtype=np.float64)
    out = np.empty(n_est)
    per_chunk = max(1, CHUNK_DRAWS // (B * M))
    for start in range(0, n_est, per_chunk):
        stop = min(n_est, start + per_chunk)
        u = rng.random(((stop - start) * M, B))
        means = kernels.mom_batch_means(row, cum, p, n2, last, u)
        out[start:stop] = np.median(means.reshape(stop - start, M), axis=1)
    sq.counters.row_samples += n_est * B * M
    sq.counters.entry_queries += n_est * B * M
    sq.counters.batch_shapes.add((B, M))
    return out


def inner_product_estimate(
    sq: SqMatrix, j: int, k: int, p, mu: float, delta: float, rng: np.random.Generator
) -> float:
    """Median-of-means estimate of ``A^(k)_{j,:} . p``.

    A single draw is ``||A_j||^2 p_i / A_ji`` with ``i`` sampled by squared
    entries, which is unbiased. ``ceil(9 ln(1/delta))`` batch means of
    ``ceil(6/mu^2)`` draws each are combined by their median, giving error
    at most ``mu ||A_j|| ||p||`` with probability at least ``1 - delta``.
    A zero row returns exactly 0 without sampling.
    """
    sq.counters.norm_queries += 1
    if sq.norm2[j, k] == 0.0:
        return 0.0
    p = np.asarray(p, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise ValueError("p must be finite")
    est = _mom_chunks(sq, j, k, p, 1, batch_size(mu), batch_count(delta), rng)[0]
    if not math.isfinite(est):
        raise FloatingPointError("non-finite inner-product estimate")
    return float(est)


def cone_state(neg_u_block: np.ndarray) -> np.ndarray:
    """Unit-trace ``exp(v) / Tr exp(v)`` of a single cone block."""
    v = np.ascontiguousarray(neg_u_block, dtype=np.float64)
    off = np.zeros(1, dtype=np.int64)
    size = np.array([v.size], dtype=np.int64)
    scal, nrm = kernels.cone_parts(v, off, size)
    ex = kernels.cone_exp(v, off, size, float(scal[0] + nrm[0]))
    return ex / (2.0 * ex[0])


def sampled_search_sq(inst, sq: SqMatrix, y, theta: float, eta: float, samples, rng):
    """Search for a violated constraint using only sample-and-query access.

    ``p^(k)`` is computed exactly for every distinct sampled cone from
    queried entries of ``A^(k)`` on the support of ``y``; every inner
    product ``A^(k_h)_{j,:} . p^(k_h)`` is then estimated with
    ``mu = theta/12`` and ``delta = eta/m``. Returns the first ``j`` whose
    averaged estimate exceeds ``3 theta / 4``.
    """
    from .mw import AllSatisfied, Violated

    m = inst.m
    if m == 0:
        return AllSatisfied()
    mu = theta / 12.0
    delta = eta / m
    B, M = batch_size(mu), batch_count(delta)
    idx = np.asarray(samples.indices, dtype=np.int64)
    T_prime = idx.size
    ks, counts = np.unique(idx, return_counts=True)
    js, vals = y.support()
    states = {}
    for k in ks.tolist():
        block = sq.query_block(js, k)
        states[k] = cone_state(-(vals @ block) if js.size else np.zeros(sq.partition.sizes[k]))

    est = np.empty(m)
    for j in range(m):
        total = 0.0
        for k, c in zip(ks.tolist(), counts.tolist()):
            sq.counters.norm_queries += c
            if sq.norm2[j, k] == 0.0:
                continue
            total += _mom_chunks(sq, j, k, states[k], c, B, M, rng).sum()
        sq.counters.entry_queries += 1  # b_j
        est[j] = total / T_prime - inst.b[j]
    hits = np.nonzero(est > 0.75 * theta)[0]
    if hits.size:
        return Violated(int(hits[0]), float(est[hits[0]]))
    return AllSatisfied(float(est.max()))
