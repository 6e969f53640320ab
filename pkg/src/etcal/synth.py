"""Synthetic traces and Monte-Carlo checks of the calibration guarantees.

Generative law for one sample: a reveal time ``T`` is drawn (uniform on
``1..t_max`` or geometric, capped at ``t_max``). Before ``T`` confidences are
``Uniform(0, c_low)`` and correctness bits are independent
``Bernoulli(p_pre)``. At ``T`` a single ``Bernoulli(p_post)`` bit is drawn and
held for the rest of the sequence while confidences become
``Uniform(c_mid, 1)``.

Trial ``i`` of a Monte-Carlo run with master seed ``s`` draws everything from
``numpy.random.SeedSequence([s, i])``, spawned into (calibration, test pool,
split) streams, so any single trial can be rerun on its own.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy.stats import beta as beta_dist

from .conditional import calibrate_conditional
from .config import CalibConfig
from .domain import TraceSet
from .evaluation import evaluate_rule, guarantee_check
from .marginal import calibrate_marginal

Mode = Literal["marginal", "conditional"]
MIN_HALTS = 100


@dataclass(frozen=True)
class GenParams:
    t_max: int = 10
    n: int = 1000
    reveal: Literal["uniform", "geometric"] = "uniform"
    geom_p: float = 0.3
    p_pre: float = 0.3
    p_post: float = 0.95
    c_low: float = 0.4
    c_mid: float = 0.6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.t_max < 1 or self.n < 1:
            raise ValueError(f"t_max and n must be >= 1, got t_max={self.t_max}, n={self.n}")
        if self.reveal not in ("uniform", "geometric"):
            raise ValueError(f"reveal must be 'uniform' or 'geometric', got {self.reveal!r}")
        if self.reveal == "geometric" and not 0.0 < self.geom_p <= 1.0:
            raise ValueError(f"geom_p must be in (0, 1], got {self.geom_p}")
        if not 0.0 <= self.p_pre <= self.p_post <= 1.0:
            raise ValueError(f"need 0 <= p_pre <= p_post <= 1, got {self.p_pre}, {self.p_post}")
        if not 0.0 < self.c_low <= self.c_mid < 1.0:
            raise ValueError(f"need 0 < c_low <= c_mid < 1, got {self.c_low}, {self.c_mid}")

    @classmethod
    def from_dict(cls, d: dict) -> "GenParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown generator parameters: {sorted(unknown)}")
        return cls(**d)


def _draw(params: GenParams, n: int, rng: np.random.Generator) -> TraceSet:
    t_max = params.t_max
    if params.reveal == "uniform":
        reveal = rng.integers(1, t_max + 1, size=n)
    else:
        reveal = np.minimum(rng.geometric(params.geom_p, size=n), t_max)
    pre = np.arange(1, t_max + 1)[None, :] < reveal[:, None]
    conf = np.where(
        pre,
        rng.uniform(0.0, params.c_low, size=(n, t_max)),
        rng.uniform(params.c_mid, 1.0, size=(n, t_max)),
    )
    bits_pre = rng.random((n, t_max)) < params.p_pre
    bit_post = rng.random(n) < params.p_post
    correct = np.where(pre, bits_pre, bit_post[:, None]).astype(np.int8)
    return TraceSet(conf, correct)


def generate_traces(params: GenParams) -> TraceSet:
    return _draw(params, params.n, np.random.default_rng(params.seed))


@dataclass(frozen=True)
class TrialRecord:
    marginal_violated: bool
    conditional_violated: bool
    first_violation_t: Optional[int]
    t_avg: float
    nontrivial: bool
    lambda_hat: list[float]
    t_star: Optional[int]
    accumulated_gap: list[Optional[float]]
    accumulated_halts: list[int]


def _clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = 1.0 - level
    lo = 0.0 if k == 0 else float(beta_dist.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


@dataclass(frozen=True)
class MCReport:
    mode: str
    alpha: float
    delta: float
    min_halts: int
    records: list[TrialRecord] = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len(self.records)

    def _rate(self, attr: str) -> float:
        return float(np.mean([getattr(r, attr) for r in self.records]))

    @property
    def marginal_violation_rate(self) -> float:
        return self._rate("marginal_violated")

    @property
    def conditional_violation_rate(self) -> float:
        return self._rate("conditional_violated")

    @property
    def power(self) -> float:
        """Fraction of trials whose calibrator returned something other than all-``inf``.

        Marginal: finite threshold. Conditional: ``t_star <= t_max``.
        """
        if self.mode == "marginal":
            return float(np.mean([np.isfinite(r.lambda_hat[0]) for r in self.records]))
        return float(np.mean([r.t_star <= len(r.lambda_hat) for r in self.records]))

    @property
    def nontrivial_rate(self) -> float:
        return self._rate("nontrivial")

    def mean_gap_curve(self) -> list[Optional[float]]:
        """Trial-mean accumulated gap per timestep over conclusive trials only."""
        t_max = len(self.records[0].accumulated_gap)
        out = []
        for t in range(t_max):
            vals = [
                r.accumulated_gap[t]
                for r in self.records
                if r.accumulated_gap[t] is not None and r.accumulated_halts[t] >= self.min_halts
            ]
            out.append(float(np.mean(vals)) if vals else None)
        return out

    def to_dict(self) -> dict:
        n = self.trials
        mv = sum(r.marginal_violated for r in self.records)
        cv = sum(r.conditional_violated for r in self.records)
        return {
            "mode": self.mode,
            "alpha": self.alpha,
            "delta": self.delta,
            "trials": n,
            "min_halts": self.min_halts,
            "marginal_violation_rate": mv / n,
            "marginal_violation_ci95": list(_clopper_pearson(mv, n)),
            "conditional_violation_rate": cv / n,
            "conditional_violation_ci95": list(_clopper_pearson(cv, n)),
            "power": self.power,
            "nontrivial_rate": self.nontrivial_rate,
            "mean_t_avg": self._rate("t_avg"),
            "mean_gap_curve": self.mean_gap_curve(),
            "records": [
                {
                    **dataclasses.asdict(r),
                    "lambda_hat": [x if np.isfinite(x) else "inf" for x in r.lambda_hat],
                }
                for r in self.records
            ],
        }


def run_trial(
    params: GenParams,
    cfg: CalibConfig,
    trial: int,
    test_pool_size: int,
    mode: Mode,
    min_halts: int = MIN_HALTS,
) -> TrialRecord:
    cal_ss, pool_ss, split_ss = np.random.SeedSequence([params.seed, trial]).spawn(3)
    cal = _draw(params, params.n, np.random.default_rng(cal_ss))
    pool = _draw(params, test_pool_size, np.random.default_rng(pool_ss))
    if mode == "marginal":
        res = calibrate_marginal(cal, cfg)
        thresholds = res.thresholds(params.t_max)
        t_star = None
    elif mode == "conditional":
        trial_cfg = dataclasses.replace(cfg, seed=int(split_ss.generate_state(1)[0]))
        res = calibrate_conditional(cal, trial_cfg)
        thresholds = res.lambda_hat
        t_star = res.t_star
    else:
        raise ValueError(f"mode must be 'marginal' or 'conditional', got {mode!r}")
    report = evaluate_rule(pool, thresholds)
    check = guarantee_check(report, cfg.alpha, min_halts=min_halts)
    return TrialRecord(
        marginal_violated=check.marginal_violated,
        conditional_violated=check.conditional_violated,
        first_violation_t=check.first_violation_t,
        t_avg=report.t_avg,
        nontrivial=bool(np.isfinite(thresholds[:-1]).any()),
        lambda_hat=[float(x) for x in thresholds],
        t_star=t_star,
        accumulated_gap=report.accumulated_gap,
        accumulated_halts=report.accumulated_halts,
    )


def mc_validate(
    params: GenParams,
    cfg: CalibConfig,
    trials: int,
    test_pool_size: int,
    mode: Mode,
    min_halts: int = MIN_HALTS,
) -> MCReport:
    """Repeat calibrate-then-evaluate on fresh draws and record guarantee violations.

    The test pool stands in for the true distribution; a timestep only counts
    as violated when at least ``min_halts`` pool samples halted by then.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if test_pool_size < 1:
        raise ValueError(f"test_pool_size must be >= 1, got {test_pool_size}")
    records = [run_trial(params, cfg, i, test_pool_size, mode, min_halts) for i in range(trials)]
    return MCReport(mode, cfg.alpha, cfg.delta, min_halts, records)
