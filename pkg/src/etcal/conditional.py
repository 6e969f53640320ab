"""Two-stage calibration of a per-timestep threshold vector.

Stage 1 (screening) greedily picks, timestep by timestep, the lowest grid
threshold whose empirical accumulated gap on the first calibration split stays
below ``alpha``. Stage 2 (testing) reveals those candidates from the last
timestep backwards and keeps the longest suffix for which every accumulated
gap is certified by a binomial p-value on the second, independent split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import CalibConfig
from .domain import INF, TraceSet, all_inf, halt_times, losses_at, threshold_vector
from .stats import binom_cdf

EMPTY = "empty"
NOT_REJECTED = "not_rejected"


@dataclass(frozen=True)
class SuffixTest:
    t_prime: int
    size: int
    k: int
    p_value: float


@dataclass(frozen=True)
class OuterStep:
    """Record of testing the suffix configuration that starts at ``t``."""

    t: int
    tests: list[SuffixTest]
    break_reason: Optional[str] = None

    @property
    def accepted(self) -> bool:
        return self.break_reason is None


@dataclass(frozen=True)
class ConditionalResult:
    eta_hat: np.ndarray
    lambda_hat: np.ndarray
    t_star: int
    test_log: list[OuterStep] = field(default_factory=list)
    cal1_indices: Optional[np.ndarray] = None
    cal2_indices: Optional[np.ndarray] = None

    @property
    def t_max(self) -> int:
        return len(self.lambda_hat)

    @property
    def nontrivial(self) -> bool:
        """True when the rule can halt before ``t_max``."""
        return bool(np.isfinite(self.lambda_hat[:-1]).any())


def accumulated_gap(ts: TraceSet, thresholds: np.ndarray, t: int) -> Optional[float]:
    """Mean gap loss over the samples halting at or before ``t``; ``None`` if none do."""
    if not 1 <= t <= ts.t_max:
        raise ValueError(f"t must be in [1, {ts.t_max}], got {t}")
    halts = halt_times(ts, thresholds)
    members = halts <= t
    size = int(members.sum())
    if size == 0:
        return None
    return int(losses_at(ts, halts)[members].sum()) / size


def suffix_config(eta_hat: np.ndarray, t: int) -> np.ndarray:
    """Candidate thresholds from ``t`` onwards, ``inf`` before."""
    eta_hat = np.asarray(eta_hat, dtype=float)
    if not 1 <= t <= len(eta_hat):
        raise ValueError(f"t must be in [1, {len(eta_hat)}], got {t}")
    out = eta_hat.copy()
    out[: t - 1] = INF
    return threshold_vector(out)


def screen_candidates(cal1: TraceSet, cfg: CalibConfig) -> np.ndarray:
    """Greedy candidate screening on the first calibration split.

    Works incrementally: thresholds already fixed for earlier timesteps decide
    which samples have halted, so at step ``t`` only the still-running samples
    need testing against each grid value. Output is identical to re-running
    the halting rule from scratch for every candidate.
    """
    n, t_max = cal1.n, cal1.t_max
    grid = np.array(cfg.grid())
    full = cal1.full_correct == 1
    halted = np.zeros(n, dtype=bool)
    halted_loss = np.zeros(n, dtype=np.int64)
    eta = np.full(t_max, INF)

    for t in range(1, t_max + 1):
        base_size = int(halted.sum())
        base_k = int(halted_loss.sum())
        running = ~halted
        loss_t = (full & (cal1.correct[:, t - 1] == 0)).astype(np.int64)
        if t == t_max:
            # every running sample halts here, by crossing or by fallback, with zero loss
            sizes = np.full(grid.size, n)
            ks = np.full(grid.size, base_k)
        else:
            conf = cal1.confidences[running, t - 1]
            crosses = conf[None, :] >= grid[:, None]
            sizes = base_size + crosses.sum(axis=1)
            ks = base_k + crosses @ loss_t[running]
        for size, k, xi in zip(sizes, ks, grid):
            if size == 0:
                break
            if k / size <= cfg.alpha:
                eta[t - 1] = xi
                break
        if np.isfinite(eta[t - 1]) and t < t_max:
            newly = running & (cal1.confidences[:, t - 1] >= eta[t - 1])
            halted |= newly
            halted_loss[newly] = loss_t[newly]
    return threshold_vector(eta)


def _test_suffix(cal2: TraceSet, lam: np.ndarray, t: int, cfg: CalibConfig) -> OuterStep:
    halts = halt_times(cal2, lam)
    losses = losses_at(cal2, halts)
    t_max = cal2.t_max
    size_by_t = np.bincount(halts, minlength=t_max + 1)[1:].cumsum()
    k_by_t = np.bincount(halts, weights=losses, minlength=t_max + 1)[1:].cumsum()
    tests = []
    for tp in range(t, t_max + 1):
        size = int(size_by_t[tp - 1])
        if size == 0:
            return OuterStep(t, tests, EMPTY)
        k = int(round(k_by_t[tp - 1]))
        p = binom_cdf(k, size, cfg.alpha)
        tests.append(SuffixTest(tp, size, k, p))
        if p > cfg.delta:
            return OuterStep(t, tests, NOT_REJECTED)
    return OuterStep(t, tests)


def test_candidates(cal2: TraceSet, eta_hat: np.ndarray, cfg: CalibConfig) -> ConditionalResult:
    """Fixed sequence testing of the suffix configurations of ``eta_hat``.

    Configurations are tried for ``t = t_max, ..., 1``. A configuration is
    accepted when every accumulated gap from ``t`` to ``t_max`` has a p-value
    at most ``delta``; the first empty halting set or failed test ends the
    whole procedure. ``t_star`` is the start of the last accepted suffix, or
    ``t_max + 1`` if none was accepted.
    """
    eta_hat = threshold_vector(eta_hat)
    t_max = cal2.t_max
    if len(eta_hat) != t_max:
        raise ValueError(f"eta_hat has length {len(eta_hat)}, data has t_max={t_max}")
    lambda_hat = all_inf(t_max)
    t_star = t_max + 1
    log = []
    for t in range(t_max, 0, -1):
        lam = suffix_config(eta_hat, t)
        step = _test_suffix(cal2, lam, t, cfg)
        log.append(step)
        if not step.accepted:
            break
        lambda_hat, t_star = lam, t
    return ConditionalResult(eta_hat, lambda_hat, t_star, log)


test_candidates.__test__ = False  # not a pytest test despite the name


def split_calibration(n: int, cfg: CalibConfig) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform permutation split into (stage-1, stage-2) index arrays."""
    n1 = int(round(cfg.split_fraction * n))
    if n1 < 1 or n1 > n - 1:
        raise ValueError(
            f"split_fraction={cfg.split_fraction} on {n} samples leaves an empty calibration split"
        )
    perm = np.random.default_rng(cfg.seed).permutation(n)
    return np.sort(perm[:n1]), np.sort(perm[n1:])


def calibrate_split(cal1: TraceSet, cal2: TraceSet, cfg: CalibConfig) -> ConditionalResult:
    """Run both stages on an explicit split."""
    if cal1.t_max != cal2.t_max:
        raise ValueError(f"split horizons differ: {cal1.t_max} vs {cal2.t_max}")
    eta_hat = screen_candidates(cal1, cfg)
    return test_candidates(cal2, eta_hat, cfg)


def calibrate_conditional(cal: TraceSet, cfg: CalibConfig) -> ConditionalResult:
    if cal.n < 2:
        raise ValueError(f"conditional calibration needs at least 2 samples, got {cal.n}")
    idx1, idx2 = split_calibration(cal.n, cfg)
    res = calibrate_split(cal.subset(idx1), cal.subset(idx2), cfg)
    return ConditionalResult(
        res.eta_hat, res.lambda_hat, res.t_star, res.test_log, idx1, idx2
    )
