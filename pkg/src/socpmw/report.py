"""Versioned run-report files.

A report mirrors the instance file conventions: a JSON object with a
``version`` field and numbers written in shortest round-trip form.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .instance import InstanceFormatError, dumps, loads

REPORT_VERSION = 1


@dataclass
class RunReport:
    kind: str  # "socp" or "feasibility"
    status: str
    mode: str
    seed: int
    y: dict  # sparse {j: value}
    x: list
    margins: list
    cost: dict
    wall_ms: float
    g: float | None = None
    epsilon: float | None = None
    theta: float | None = None
    objective: float | None = None
    certified: bool | None = None
    threads: int = 1
    history: list = field(default_factory=list)
    version: int = REPORT_VERSION

    def to_dict(self) -> dict:
        out = asdict(self)
        out["y"] = {str(j): v for j, v in sorted(self.y.items())}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        if not isinstance(data, dict) or data.get("version") != REPORT_VERSION:
            raise InstanceFormatError("unsupported or missing report version")
        data = dict(data)
        try:
            data["y"] = {int(j): float(v) for j, v in data["y"].items()}
            return cls(**data)
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InstanceFormatError(f"malformed report: {exc}") from exc


def sparse_y(y) -> dict:
    js, vals = y.support()
    return {int(j): float(v) for j, v in zip(js.tolist(), vals.tolist())}


def floats(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=np.float64).tolist()]


def serialize(report: RunReport) -> str:
    return dumps(report.to_dict())


def parse(text: str) -> RunReport:
    return RunReport.from_dict(loads(text))


def save_report(path, report: RunReport) -> None:
    Path(path).write_text(serialize(report))


def load_report(path) -> RunReport:
    return parse(Path(path).read_text())


def summary_line(report: RunReport) -> str:
    head = {"status": report.status, "mode": report.mode}
    if report.g is not None:
        head["g"] = report.g
    return json.dumps(head)
