"""Apply a calibrated rule to held-out traces and summarise its behaviour."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import TraceSet, halt_times, losses_at

QUANTILES = (0.2, 0.5)


@dataclass(frozen=True)
class RiskReport:
    """Per-timestep curves and scalar metrics of a stopping rule on a test set.

    ``accumulated_gap[t-1]`` is ``None`` when nothing halted by ``t``. Early
    accuracy counts every halt, fallback halts at ``t_max`` included.
    """

    n: int
    t_max: int
    halt_histogram: list[int]
    accumulated_halts: list[int]
    accumulated_losses: list[int]
    accumulated_gap: list[Optional[float]]
    fallback_halts: int
    marginal_gap: float
    t_avg: float
    early_accuracy: float
    full_accuracy: float
    quantile_gaps: dict[float, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t_max": self.t_max,
            "marginal_gap": self.marginal_gap,
            "t_avg": self.t_avg,
            "early_accuracy": self.early_accuracy,
            "full_accuracy": self.full_accuracy,
            "fallback_halts": self.fallback_halts,
            "quantile_gaps": {f"{q:g}": v for q, v in self.quantile_gaps.items()},
            "curves": [
                {
                    "t": t,
                    "halts": self.halt_histogram[t - 1],
                    "accumulated_halts": self.accumulated_halts[t - 1],
                    "accumulated_losses": self.accumulated_losses[t - 1],
                    "accumulated_gap": self.accumulated_gap[t - 1],
                }
                for t in range(1, self.t_max + 1)
            ],
            "notes": {
                "early_accuracy": "includes samples that reached t_max without crossing a threshold",
                "accumulated_gap": "null where no sample halted by t",
            },
        }


def evaluate_rule(test: TraceSet, thresholds: np.ndarray) -> RiskReport:
    n, t_max = test.n, test.t_max
    if n == 0:
        raise ValueError("empty test set")
    halts, triggered = halt_times(test, thresholds, return_triggered=True)
    losses = losses_at(test, halts)
    hist = np.bincount(halts, minlength=t_max + 1)[1:]
    acc_halts = hist.cumsum()
    acc_losses = np.bincount(halts, weights=losses, minlength=t_max + 1)[1:].cumsum()
    acc_losses = np.rint(acc_losses).astype(np.int64)
    gaps = [int(k) / int(m) if m else None for k, m in zip(acc_losses, acc_halts)]

    order = np.argsort(halts, kind="stable")
    qgaps = {}
    for q in QUANTILES:
        m = math.ceil(q * n)
        qgaps[q] = float(losses[order[:m]].mean())

    early = test.correct[np.arange(n), halts - 1]
    return RiskReport(
        n=n,
        t_max=t_max,
        halt_histogram=hist.tolist(),
        accumulated_halts=acc_halts.tolist(),
        accumulated_losses=acc_losses.tolist(),
        accumulated_gap=gaps,
        fallback_halts=int((~triggered).sum()),
        marginal_gap=int(acc_losses[-1]) / n,
        t_avg=float(halts.mean() / t_max),
        early_accuracy=float(early.mean()),
        full_accuracy=float(test.full_correct.mean()),
        quantile_gaps=qgaps,
    )


@dataclass(frozen=True)
class GuaranteeCheck:
    marginal_violated: bool
    conditional_violated: bool
    first_violation_t: Optional[int]
    inconclusive: list[int] = field(default_factory=list)


def guarantee_check(report: RiskReport, alpha: float, min_halts: int = 1) -> GuaranteeCheck:
    """Compare the report's empirical gaps with ``alpha``.

    Timesteps with fewer than ``min_halts`` accumulated halts are skipped;
    those with some halts but fewer than ``min_halts`` are listed as
    inconclusive rather than judged.
    """
    first = None
    inconclusive = []
    for t, (gap, size) in enumerate(zip(report.accumulated_gap, report.accumulated_halts), 1):
        if gap is None:
            continue
        if size < min_halts:
            inconclusive.append(t)
            continue
        if gap > alpha and first is None:
            first = t
    marginal = report.accumulated_halts[-1] >= min_halts and report.marginal_gap > alpha
    return GuaranteeCheck(bool(marginal), first is not None, first, inconclusive)
