"""Single-threshold calibration with marginal accuracy-gap control.

Thresholds on the grid are tested from 1 downwards (fixed sequence testing);
the procedure stops at the first threshold whose binomial p-value exceeds
``delta`` and returns the last one that passed, or ``inf`` if none did.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import CalibConfig
from .domain import INF, TraceSet, constant_thresholds, early_losses
from .stats import binom_cdf


@dataclass(frozen=True)
class MarginalStep:
    lam: float
    k: int
    n: int
    p_value: float
    rejected: bool


@dataclass(frozen=True)
class MarginalResult:
    lambda_hat: float
    steps: list[MarginalStep] = field(default_factory=list)

    def thresholds(self, t_max: int) -> np.ndarray:
        return constant_thresholds(self.lambda_hat, t_max)


def empirical_marginal_gap(ts: TraceSet, thresholds: np.ndarray) -> float:
    """Mean gap loss over all traces under the given thresholds."""
    if ts.n == 0:
        raise ValueError("empty trace set")
    return float(early_losses(ts, thresholds).mean())


def calibrate_marginal(cal: TraceSet, cfg: CalibConfig) -> MarginalResult:
    n = cal.n
    lambda_hat = INF
    steps = []
    for i in range(cfg.grid_size - 1, -1, -1):
        lam = cfg.grid_value(i)
        k = int(early_losses(cal, constant_thresholds(lam, cal.t_max)).sum())
        p = binom_cdf(k, n, cfg.alpha)
        rejected = p <= cfg.delta
        steps.append(MarginalStep(lam, k, n, p, rejected))
        if not rejected:
            break
        lambda_hat = lam
    return MarginalResult(lambda_hat, steps)
