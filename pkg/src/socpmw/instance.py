"""SOCP and unit-trace feasibility instances: validation, scaling, checks, files."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .jordan import (
    ConePartition,
    MulticoneVector,
    as_partition,
    cone_min_eigenvalue,
    cone_soc_norms,
    trace,
)

FORMAT_VERSION = 1
NORM_SLACK = 1e-9
DEFAULT_TOL = 1e-9


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be turned into an instance."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    code: str
    message: str
    cone: int | None = None
    row: int | None = None

    def __str__(self):
        return f"{self.severity}[{self.code}]: {self.message}"


def _blocks(A_blocks) -> tuple:
    return tuple(np.asarray(a, dtype=np.float64) for a in A_blocks)


class _BlockData:
    """Shared accessors for instances stored as per-cone constraint blocks."""

    partition: ConePartition
    A_blocks: tuple
    b: np.ndarray

    @property
    def m(self) -> int:
        return int(np.asarray(self.b).size)

    @property
    def r(self) -> int:
        return self.partition.r

    @property
    def n(self) -> int:
        return self.partition.n

    @cached_property
    def A(self) -> np.ndarray:
        """All blocks side by side, ``m x n``."""
        if not self.A_blocks:
            return np.zeros((self.m, 0))
        return np.ascontiguousarray(np.hstack(self.A_blocks))

    def row_soc_norms(self) -> np.ndarray:
        """``(m, r)`` array of soc-norms of every row block ``A^(k)_{j,:}``."""
        out = np.empty((self.m, self.r))
        for k, a in enumerate(self.A_blocks):
            out[:, k] = np.abs(a[:, 0]) + np.linalg.norm(a[:, 1:], axis=1)
        return out


@dataclass(frozen=True, eq=False)
class SocpInstance(_BlockData):
    """maximise ``c.x`` subject to ``sum_k A^(k) x^(k) <= b``, ``x^(k)`` in the cones."""

    partition: ConePartition
    A_blocks: tuple
    b: np.ndarray
    c: MulticoneVector
    R: float = 1.0
    R_tilde: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "partition", as_partition(self.partition))
        object.__setattr__(self, "A_blocks", _blocks(self.A_blocks))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64).reshape(-1))
        if not isinstance(self.c, MulticoneVector):
            object.__setattr__(self, "c", MulticoneVector(self.partition, self.c))
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "R_tilde", float(self.R_tilde))


@dataclass(frozen=True, eq=False)
class FeasibilityInstance(_BlockData):
    """Unit-trace feasibility problem with violation tolerance ``theta``."""

    partition: ConePartition
    A_blocks: tuple
    b: np.ndarray
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "partition", as_partition(self.partition))
        object.__setattr__(self, "A_blocks", _blocks(self.A_blocks))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "theta", float(self.theta))

    @classmethod
    def from_matrix(cls, partition, A, b, theta) -> "FeasibilityInstance":
        partition = as_partition(partition)
        A = np.asarray(A, dtype=np.float64)
        return cls(partition, tuple(A[:, partition.block(k)] for k in range(partition.r)), b, theta)


@dataclass(frozen=True)
class NormalizationReport:
    c_scale: float
    row_scales: np.ndarray
    b_clamped: list
    b_original: dict = field(default_factory=dict)
    R_tilde_in: float = 1.0
    R_tilde_out: float = 1.0


def validate(inst) -> list[Diagnostic]:
    """Structural and numerical diagnostics; never raises on bad data."""
    try:
        return _validate(inst)
    except Exception as exc:  # malformed object
        return [Diagnostic("error", "structure", f"cannot read instance: {exc}")]


def _validate(inst) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    part = inst.partition
    b = np.asarray(inst.b, dtype=np.float64)
    m = b.size
    if b.ndim != 1:
        diags.append(Diagnostic("error", "dimension", f"b must be a vector, got shape {b.shape}"))
    if len(inst.A_blocks) != part.r:
        diags.append(
            Diagnostic("error", "dimension", f"{len(inst.A_blocks)} blocks for {part.r} cones")
        )
    shape_ok = len(inst.A_blocks) == part.r
    for k, a in enumerate(inst.A_blocks):
        if a.ndim != 2:
            diags.append(Diagnostic("error", "dimension", f"block {k} is not a matrix", cone=k))
            shape_ok = False
            continue
        if a.shape[0] != m:
            diags.append(
                Diagnostic(
                    "error",
                    "dimension",
                    f"block {k} has {a.shape[0]} rows, expected m={m}",
                    cone=k,
                )
            )
            shape_ok = False
        if k < part.r and a.shape[1] != part.sizes[k]:
            diags.append(
                Diagnostic(
                    "error",
                    "dimension",
                    f"block {k} has {a.shape[1]} columns, cone size is {part.sizes[k]}",
                    cone=k,
                )
            )
            shape_ok = False
        if not np.all(np.isfinite(a)):
            diags.append(Diagnostic("error", "nonfinite", f"block {k} has NaN/Inf", cone=k))
            shape_ok = False
    if not np.all(np.isfinite(b)):
        diags.append(Diagnostic("error", "nonfinite", "b has NaN/Inf"))
        shape_ok = False

    is_socp = isinstance(inst, SocpInstance)
    if is_socp:
        c = inst.c.values
        if not np.all(np.isfinite(c)):
            diags.append(Diagnostic("error", "nonfinite", "c has NaN/Inf"))
        elif float(np.max(cone_soc_norms(inst.c))) > 1 + NORM_SLACK:
            diags.append(Diagnostic("warning", "norm", "c violates soc-norm <= 1 (normalize first)"))
        for name in ("R", "R_tilde"):
            val = getattr(inst, name)
            if not (math.isfinite(val) and val > 0):
                diags.append(Diagnostic("error", "parameter", f"{name} must be positive, got {val}"))
        b_cap = inst.R
    else:
        th = inst.theta
        if not (0 < th < 1):
            diags.append(Diagnostic("error", "parameter", f"theta must lie in (0, 1), got {th}"))
        b_cap = 1.0

    if shape_ok:
        norms = inst.row_soc_norms()
        for j, k in zip(*np.nonzero(norms > 1 + NORM_SLACK)):
            diags.append(
                Diagnostic(
                    "warning",
                    "norm",
                    f"row {j} of block {k} has soc-norm {norms[j, k]:.6g} > 1",
                    cone=int(k),
                    row=int(j),
                )
            )
        if math.isfinite(b_cap):
            for j in np.nonzero(np.abs(b) > b_cap + NORM_SLACK)[0]:
                diags.append(
                    Diagnostic("warning", "norm", f"|b[{j}]| = {abs(b[j]):.6g} > {b_cap:g}", row=int(j))
                )
    return diags


def has_errors(diags: Sequence[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diags)


def normalize(inst: SocpInstance) -> tuple[SocpInstance, NormalizationReport]:
    """Scale ``c`` and each constraint row to soc-norm at most one, clamp ``|b_j|`` to R.

    Row ``j`` of every block and ``b_j`` share one factor, so the feasible
    set is unchanged. ``R_tilde`` is rescaled to remain a dual bound:
    the dual weights grow by the row factors and shrink by ``c_scale``.
    """
    diags = [d for d in validate(inst) if d.severity == "error"]
    if diags:
        raise InstanceFormatError("; ".join(map(str, diags)), diags)
    c_scale = max(1.0, float(np.max(cone_soc_norms(inst.c))))
    row_scales = np.maximum(1.0, inst.row_soc_norms().max(axis=1)) if inst.m else np.ones(0)
    blocks = tuple(a / row_scales[:, None] for a in inst.A_blocks)
    b = inst.b / row_scales
    clamped = [int(j) for j in np.nonzero(np.abs(b) > inst.R)[0]]
    original = {j: float(b[j]) for j in clamped}
    b[clamped] = np.sign(b[clamped]) * inst.R
    r_tilde = inst.R_tilde * (float(row_scales.max()) if row_scales.size else 1.0) / c_scale
    out = replace(inst, A_blocks=blocks, b=b, c=inst.c * (1.0 / c_scale), R_tilde=r_tilde)
    report = NormalizationReport(c_scale, row_scales, clamped, original, inst.R_tilde, r_tilde)
    return out, report


def denormalize(inst: SocpInstance, report: NormalizationReport) -> SocpInstance:
    """Undo :func:`normalize` (clamped entries of b are restored)."""
    s = report.row_scales
    b = inst.b.copy()
    for j, val in report.b_original.items():
        b[j] = val
    return replace(
        inst,
        A_blocks=tuple(a * s[:, None] for a in inst.A_blocks),
        b=b * s,
        c=inst.c * report.c_scale,
        R_tilde=report.R_tilde_in,
    )


def violation_vector(inst, x: MulticoneVector) -> np.ndarray:
    """``v_j = sum_k A^(k)_{j,:} x^(k) - b_j``."""
    if x.partition != inst.partition:
        raise ValueError("point and instance have different cone partitions")
    return inst.A @ x.values - inst.b


def objective_value(inst: SocpInstance, x: MulticoneVector) -> float:
    if x.partition != inst.partition:
        raise ValueError("point and instance have different cone partitions")
    return float(inst.c.values @ x.values)


@dataclass(frozen=True)
class FeasibilityReport:
    min_eigenvalue: float
    trace: float
    margins: np.ndarray  # v_j = (A x - b)_j
    slack: float
    tol: float
    cone_ok: bool
    trace_ok: bool
    constraints_ok: bool

    @property
    def passed(self) -> bool:
        return self.cone_ok and self.trace_ok and self.constraints_ok

    @property
    def worst_violation(self) -> float:
        return float(self.margins.max()) if self.margins.size else -math.inf


def feasibility_check(
    inst: FeasibilityInstance,
    x: MulticoneVector,
    slack: float = 0.0,
    tol: float = DEFAULT_TOL,
    unit_trace: bool = True,
) -> FeasibilityReport:
    """Certify cone membership, unit trace and ``A x <= b + slack`` up to ``tol``.

    With ``unit_trace=False`` the trace condition is skipped; this is used
    for points of a general SOCP.
    """
    v = violation_vector(inst, x)
    lam = cone_min_eigenvalue(x)
    tr = trace(x)
    return FeasibilityReport(
        min_eigenvalue=lam,
        trace=tr,
        margins=v,
        slack=float(slack),
        tol=float(tol),
        cone_ok=bool(lam >= -tol),
        trace_ok=bool(abs(tr - 1.0) <= tol) if unit_trace else True,
        constraints_ok=bool(np.all(v <= slack + tol)),
    )


# ---------------------------------------------------------------- file format


def instance_to_dict(inst, extra: dict | None = None) -> dict:
    cones = []
    for k, a in enumerate(inst.A_blocks):
        cone: dict[str, Any] = {"size": int(inst.partition.sizes[k]), "A": a.tolist()}
        if isinstance(inst, SocpInstance):
            cone["c"] = inst.c.cone(k).tolist()
        cones.append(cone)
    out: dict[str, Any] = {"version": FORMAT_VERSION, "m": inst.m, "cones": cones, "b": inst.b.tolist()}
    if isinstance(inst, SocpInstance):
        out["R"] = inst.R
        out["R_tilde"] = inst.R_tilde
    else:
        out["theta"] = inst.theta
    if extra:
        out.update(extra)
    return out


def _reject_constant(name):
    raise InstanceFormatError(f"non-finite number {name} in file")


def instance_from_dict(data: dict):
    """Build a :class:`SocpInstance` (when ``R`` is present) or a :class:`FeasibilityInstance`."""
    if not isinstance(data, dict):
        raise InstanceFormatError("instance must be a JSON object")
    if data.get("version") != FORMAT_VERSION:
        raise InstanceFormatError(f"unsupported version {data.get('version')!r}")
    try:
        m = int(data["m"])
        cones = data["cones"]
        sizes = [int(c["size"]) for c in cones]
        part = ConePartition(np.asarray(sizes))
        blocks = []
        for k, c in enumerate(cones):
            a = np.asarray(c["A"], dtype=np.float64)
            if a.size == 0:
                a = a.reshape(0, sizes[k])
            blocks.append(a)
        b = np.asarray(data["b"], dtype=np.float64)
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed instance: {exc}") from exc
    if b.size != m:
        raise InstanceFormatError(f"b has {b.size} entries, m = {m}")
    if "R" in data:
        try:
            c = np.concatenate([np.asarray(cn.get("c", [0.0] * sizes[k]), dtype=np.float64)
                                for k, cn in enumerate(cones)])
        except (TypeError, ValueError) as exc:
            raise InstanceFormatError(f"malformed c: {exc}") from exc
        if c.size != part.n:
            raise InstanceFormatError(f"c has {c.size} entries, n = {part.n}")
        inst = SocpInstance(part, blocks, b, MulticoneVector(part, c), data["R"], data.get("R_tilde", 1.0))
    else:
        inst = FeasibilityInstance(part, blocks, b, data.get("theta", math.nan))
    errors = [d for d in validate(inst) if d.severity == "error" and d.code != "parameter"]
    if errors:
        raise InstanceFormatError("; ".join(map(str, errors)), errors)
    return inst


def dumps(obj: dict) -> str:
    return json.dumps(obj, allow_nan=False) + "\n"


def loads(text: str) -> dict:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc


def save_instance(path, inst, extra: dict | None = None) -> None:
    Path(path).write_text(dumps(instance_to_dict(inst, extra)))


def load_instance(path):
    return instance_from_dict(loads(Path(path).read_text()))


def save_point(path, x: MulticoneVector) -> None:
    Path(path).write_text(
        dumps({"version": FORMAT_VERSION, "sizes": x.partition.sizes.tolist(), "x": x.values.tolist()})
    )


def load_point(path) -> MulticoneVector:
    data = loads(Path(path).read_text())
    try:
        return MulticoneVector(ConePartition(np.asarray(data["sizes"])), data["x"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed point file: {exc}") from exc
