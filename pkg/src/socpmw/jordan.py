"""Euclidean Jordan algebra of a product of second-order cones.

A point of the product space is stored as one flat float64 array holding
the cone blocks back to back; each block is ``(v0; vvec)``. Every cone,
including size-1 cones, has two spectral values ``v0 +- ||vvec||`` and
trace ``2 * v0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

EXP_LIMIT = 700.0
DENSE_SIZE_CAP = 512


class JordanOverflowError(ArithmeticError):
    """Raised when a shifted exponent exceeds the double-precision range."""


class PartitionMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConePartition:
    """Sizes of the cones and their offsets into the flat coordinate array."""

    sizes: np.ndarray
    offsets: np.ndarray = field(init=False)

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=np.int64).reshape(-1)
        if sizes.size == 0:
            raise ValueError("a cone partition needs at least one cone")
        if np.any(sizes < 1):
            raise ValueError(f"cone sizes must be positive, got {sizes.tolist()}")
        sizes.setflags(write=False)
        offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(np.int64)
        offsets.setflags(write=False)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "offsets", offsets)

    @property
    def n(self) -> int:
        return int(self.sizes.sum())

    @property
    def r(self) -> int:
        return int(self.sizes.size)

    def block(self, k: int) -> slice:
        o = int(self.offsets[k])
        return slice(o, o + int(self.sizes[k]))

    def cone_of(self) -> np.ndarray:
        """Cone index of every coordinate."""
        return np.repeat(np.arange(self.r), self.sizes)

    def extend(self, *sizes: int) -> "ConePartition":
        return ConePartition(np.concatenate((self.sizes, np.asarray(sizes, dtype=np.int64))))

    def __eq__(self, other):
        return isinstance(other, ConePartition) and np.array_equal(self.sizes, other.sizes)

    def __hash__(self):
        return hash(tuple(self.sizes.tolist()))

    def __repr__(self):
        return f"ConePartition({self.sizes.tolist()})"


@dataclass(frozen=True, eq=False)
class MulticoneVector:
    partition: ConePartition
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.size != self.partition.n:
            raise ValueError(
                f"vector has {values.size} entries, partition expects {self.partition.n}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def cone(self, k: int) -> np.ndarray:
        return self.values[self.partition.block(k)]

    def scalar_parts(self) -> np.ndarray:
        return self.values[self.partition.offsets]

    def vector_part(self, k: int) -> np.ndarray:
        return self.cone(k)[1:]

    def __add__(self, other: "MulticoneVector") -> "MulticoneVector":
        _check_same(self, other)
        return MulticoneVector(self.partition, self.values + other.values)

    def __sub__(self, other: "MulticoneVector") -> "MulticoneVector":
        _check_same(self, other)
        return MulticoneVector(self.partition, self.values - other.values)

    def __mul__(self, scale: float) -> "MulticoneVector":
        return MulticoneVector(self.partition, self.values * float(scale))

    __rmul__ = __mul__

    def __neg__(self) -> "MulticoneVector":
        return MulticoneVector(self.partition, -self.values)

    def __eq__(self, other):
        return (
            isinstance(other, MulticoneVector)
            and self.partition == other.partition
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"MulticoneVector({self.partition.sizes.tolist()}, {self.values.tolist()})"


@dataclass(frozen=True)
class SpectralData:
    """Per-cone Jordan frame.

    ``directions[k]`` is ``None`` when the vector part of cone ``k`` is
    numerically zero (or the cone has size 1); the frame is then
    degenerate and ``lambda_plus[k] == lambda_minus[k]``.
    """

    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    directions: tuple

    def frame(self, k: int) -> tuple[np.ndarray, np.ndarray] | None:
        d = self.directions[k]
        if d is None:
            return None
        return 0.5 * np.concatenate(([1.0], d)), 0.5 * np.concatenate(([1.0], -d))


def _check_same(v: MulticoneVector, w: MulticoneVector) -> None:
    if v.partition != w.partition:
        raise PartitionMismatchError(
            f"partitions differ: {v.partition.sizes.tolist()} vs {w.partition.sizes.tolist()}"
        )


def as_partition(sizes: ConePartition | Sequence[int]) -> ConePartition:
    return sizes if isinstance(sizes, ConePartition) else ConePartition(np.asarray(sizes))


def identity_element(partition: ConePartition | Sequence[int]) -> MulticoneVector:
    partition = as_partition(partition)
    e = np.zeros(partition.n)
    e[partition.offsets] = 1.0
    return MulticoneVector(partition, e)


def _parts(v: MulticoneVector) -> tuple[np.ndarray, np.ndarray]:
    p = v.partition
    return kernels.cone_parts(np.array(v.values), p.offsets, p.sizes)


def eigenvalues(v: MulticoneVector) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(lambda_plus, lambda_minus)`` arrays, one entry per cone."""
    scal, nrm = _parts(v)
    return scal + nrm, scal - nrm


def spectral_decompose(v: MulticoneVector, tol: float | None = None) -> SpectralData:
    """Jordan frame of every cone.

    With ``tol=None`` a vector part is degenerate when its norm is at most
    ``1e-13 * (1 + |v0|)``; a float ``tol`` is used as an absolute cut-off.
    """
    scal, nrm = _parts(v)
    lp = scal + nrm
    lm = scal - nrm
    dirs = []
    for k in range(v.partition.r):
        cut = kernels.DEGENERATE_REL * (1.0 + abs(scal[k])) if tol is None else tol
        if nrm[k] > cut:
            dirs.append(v.vector_part(k) / nrm[k])
        else:
            dirs.append(None)
            lp[k] = lm[k] = scal[k]
    return SpectralData(lp, lm, tuple(dirs))


def jordan_product(v: MulticoneVector, w: MulticoneVector) -> MulticoneVector:
    """Cone-wise ``(v.w ; v0 wvec + w0 vvec)``."""
    _check_same(v, w)
    p = v.partition
    cone_of = p.cone_of()
    v0 = v.values[p.offsets]
    w0 = w.values[p.offsets]
    out = v0[cone_of] * w.values + w0[cone_of] * v.values
    out[p.offsets] = np.add.reduceat(v.values * w.values, p.offsets)
    return MulticoneVector(p, out)


def arrowhead_dense(v: MulticoneVector, size_cap: int = DENSE_SIZE_CAP) -> np.ndarray:
    """Block-diagonal arrowhead matrix ``Arw(v)``; a dense test oracle."""
    p = v.partition
    if np.any(p.sizes > size_cap):
        raise ValueError(f"cone larger than the dense size cap {size_cap}")
    out = np.zeros((p.n, p.n))
    for k in range(p.r):
        blk = p.block(k)
        x = v.values[blk]
        arw = x[0] * np.eye(x.size)
        arw[0, 1:] = x[1:]
        arw[1:, 0] = x[1:]
        out[blk, blk] = arw
    return out


def jordan_exp(v: MulticoneVector, shift: float = 0.0) -> MulticoneVector:
    """``exp(lambda_+ - shift) c_+ + exp(lambda_- - shift) c_-`` per cone."""
    p = v.partition
    scal, nrm = _parts(v)
    top = float(np.max(scal + nrm)) - shift
    if top > EXP_LIMIT:
        raise JordanOverflowError(f"exponent {top:.6g} exceeds {EXP_LIMIT}")
    return MulticoneVector(p, kernels.cone_exp(np.array(v.values), p.offsets, p.sizes, float(shift)))


def trace(v: MulticoneVector) -> float:
    return float(2.0 * np.sum(v.scalar_parts()))


def cone_traces(v: MulticoneVector) -> np.ndarray:
    return 2.0 * v.scalar_parts()


def trace_exp(v: MulticoneVector, shift: float = 0.0) -> float:
    lp, lm = eigenvalues(v)
    top = float(np.max(lp)) - shift
    if top > EXP_LIMIT:
        raise JordanOverflowError(f"exponent {top:.6g} exceeds {EXP_LIMIT}")
    return float(np.sum(np.exp(lp - shift) + np.exp(lm - shift)))


def inner(v: MulticoneVector, w: MulticoneVector) -> float:
    _check_same(v, w)
    return float(v.values @ w.values)


def cone_soc_norms(v: MulticoneVector) -> np.ndarray:
    scal, nrm = _parts(v)
    return np.abs(scal) + nrm


def soc_norm(v: MulticoneVector) -> float:
    """max over cones of ``|v0| + ||vvec||`` (spectral norm of ``Arw(v)``)."""
    return float(np.max(cone_soc_norms(v)))


def row_soc_norm(row: np.ndarray) -> float:
    """soc-norm of a single block viewed as one cone."""
    row = np.asarray(row, dtype=np.float64)
    return float(abs(row[0]) + np.linalg.norm(row[1:]))


def cone_min_eigenvalue(v: MulticoneVector) -> float:
    return float(np.min(eigenvalues(v)[1]))


def is_in_cone(v: MulticoneVector, tol: float = 0.0) -> bool:
    return cone_min_eigenvalue(v) >= -tol
