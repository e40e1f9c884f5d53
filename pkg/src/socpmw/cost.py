"""Closed-form query and sample counts for the feasibility engine and its oracles.

These are evaluated from the parameters alone, without solving, and are
compared with the counters recorded during a run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .mw import iteration_count
from .oracles import MODES, t_prime
from .sq import batch_count, batch_size

COUNTER_NAMES = (
    "entry_queries",
    "row_samples",
    "norm_queries",
    "gibbs_draws",
    "oracle_calls",
    "mw_iterations",
    "bs_steps",
)


def _item(value, formula: str) -> dict:
    return {"value": value, "formula": formula}


@dataclass
class CostReport:
    oracle_mode: str
    counts: dict = field(default_factory=lambda: {k: 0 for k in COUNTER_NAMES})
    predicted: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"oracle_mode": self.oracle_mode, "counts": dict(self.counts), "predicted": dict(self.predicted)}

    @classmethod
    def from_dict(cls, data: dict) -> "CostReport":
        return cls(data["oracle_mode"], dict(data["counts"]), dict(data["predicted"]))


def predict_costs(
    r: int,
    n: int,
    m: int,
    theta: float,
    xi: float | None = None,
    eta: float | None = None,
    mode: str = "sq",
) -> dict:
    """Evaluate every deterministic count of one feasibility solve.

    ``xi`` defaults to ``1/(3T)`` and ``eta`` to ``xi/2``. The per-call
    sample total ``m T' B M`` is exact when no row block ``A^(k)_{j,:}`` is
    identically zero (zero blocks are answered without sampling). The
    corollary bound ``n/theta^4 + m/theta^6`` is reported as a number, not
    a runtime.
    """
    if min(r, n, m) <= 0 or not 0 < theta < 1:
        raise ValueError("r, n, m must be positive and theta in (0, 1)")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    T = iteration_count(r, theta)
    xi = 1.0 / (3 * T) if xi is None else xi
    eta = xi / 2.0 if eta is None else eta
    out = {
        "T": _item(T, "ceil(36 ln(2r) / theta^2)"),
        "xi": _item(xi, "1 / (3T)" if xi == 1.0 / (3 * T) else "given"),
        "step": _item(theta / 6.0, "theta / 6"),
        "direct_threshold": _item(theta / 2.0, "theta / 2"),
    }
    if mode == "direct":
        return out
    Tp = t_prime(m, theta, xi)
    out.update(
        eta=_item(eta, "xi / 2"),
        zeta=_item(xi / 4.0, "xi / 4"),
        T_prime=_item(Tp, "ceil(288 ln(8m/xi) / theta^2)"),
        gibbs_draws_per_call=_item(Tp, "T'"),
        search_threshold=_item(4.0 * theta / 6.0 if mode == "two-step-exact" else 0.75 * theta,
                               "4 theta / 6" if mode == "two-step-exact" else "3 theta / 4"),
    )
    if mode == "sq":
        mu = theta / 12.0
        delta = eta / m
        B, M = batch_size(mu), batch_count(delta)
        out.update(
            mu=_item(mu, "theta / 12"),
            delta=_item(delta, "eta / m"),
            B=_item(B, "ceil(6 / mu^2)"),
            M=_item(M, "ceil(9 ln(1/delta))"),
            row_samples_per_call=_item(m * Tp * B * M, "m T' B M"),
            norm_queries_per_call=_item(m * Tp, "m T'"),
            build_queries=_item(m * n, "m n"),
            corollary_bound=_item(n / theta**4 + m / theta**6, "n / theta^4 + m / theta^6"),
            theorem_bound=_item(
                T * (2 * n + Tp + m * Tp * math.log(m / eta) / theta**2),
                "T (s n + T' + m T' ln(m/eta) / theta^2) at s = 1",
            ),
        )
    return out
