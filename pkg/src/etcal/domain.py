"""Traces, threshold vectors, the gap loss and stopping-rule semantics.

A sample is reduced to its *trace*: the confidence score produced after each
prefix of the input, and whether the prediction made from that prefix was
correct. Every calibrator and evaluator in the package works on traces only,
so no classifier, label set or raw input ever needs to be represented.

Thresholds are plain float arrays in which ``numpy.inf`` means "never halt at
this timestep". Because ``inf`` compares greater than any confidence, the
halting comparison ``confidence >= threshold`` handles it without special
cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

INF = math.inf


class TraceError(ValueError):
    """Raised when trace data violates a structural or range invariant."""


@dataclass(frozen=True)
class SampleTrace:
    """Per-timestep confidences and correctness bits of a single sample."""

    confidences: tuple[float, ...]
    correctness: tuple[int, ...]

    def __init__(self, confidences: Iterable[float], correctness: Iterable[int]):
        object.__setattr__(self, "confidences", tuple(float(c) for c in confidences))
        object.__setattr__(self, "correctness", tuple(int(b) for b in correctness))

    @property
    def t_max(self) -> int:
        return len(self.confidences)


@dataclass(frozen=True, eq=False)
class TraceSet:
    """An ordered collection of traces sharing one horizon.

    Stored column-wise: ``confidences`` and ``correct`` are ``(n, t_max)``
    arrays. Column ``t - 1`` holds timestep ``t``; the last column is the
    full-sequence prediction. Arrays are made read-only on construction.
    """

    confidences: np.ndarray
    correct: np.ndarray

    def __post_init__(self) -> None:
        conf = np.array(self.confidences, dtype=float)
        corr = np.asarray(self.correct)
        if conf.ndim != 2 or corr.shape != conf.shape:
            raise TraceError(
                f"confidences and correctness must be 2-D arrays of equal shape, "
                f"got {conf.shape} and {corr.shape}"
            )
        n, t_max = conf.shape
        if n < 1 or t_max < 1:
            raise TraceError(f"need at least one sample and one timestep, got shape {conf.shape}")
        bad = ~((conf >= 0.0) & (conf <= 1.0))  # also catches nan
        if bad.any():
            i, t = np.argwhere(bad)[0]
            raise TraceError(
                f"sample {i}: confidence at timestep {t + 1} is {conf[i, t]!r}, outside [0, 1]"
            )
        bad = (corr != 0) & (corr != 1)
        if bad.any():
            i, t = np.argwhere(bad)[0]
            raise TraceError(
                f"sample {i}: correctness at timestep {t + 1} is {corr[i, t]!r}, not 0 or 1"
            )
        corr = corr.astype(np.int8)
        conf.setflags(write=False)
        corr.setflags(write=False)
        object.__setattr__(self, "confidences", conf)
        object.__setattr__(self, "correct", corr)

    @classmethod
    def from_traces(cls, traces: Sequence[SampleTrace]) -> "TraceSet":
        validate_trace_set(traces)
        return cls(
            np.array([tr.confidences for tr in traces], dtype=float),
            np.array([tr.correctness for tr in traces], dtype=np.int8),
        )

    @property
    def n(self) -> int:
        return self.confidences.shape[0]

    @property
    def t_max(self) -> int:
        return self.confidences.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> SampleTrace:
        return SampleTrace(self.confidences[i], self.correct[i])

    def __iter__(self):
        return (self[i] for i in range(self.n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TraceSet):
            return NotImplemented
        return np.array_equal(self.confidences, other.confidences) and np.array_equal(
            self.correct, other.correct
        )

    def subset(self, idx: Sequence[int] | np.ndarray) -> "TraceSet":
        idx = np.asarray(idx, dtype=np.intp)
        return TraceSet(self.confidences[idx], self.correct[idx])

    @property
    def full_correct(self) -> np.ndarray:
        return self.correct[:, -1]


def validate_trace_set(traces: Sequence[SampleTrace] | TraceSet) -> None:
    """Check trace invariants, raising :class:`TraceError` on the first offender.

    The error message names the sample index and, for range violations, the
    1-based timestep.
    """
    if isinstance(traces, TraceSet):
        # construction already enforced everything; re-run for arrays mutated via views
        TraceSet(traces.confidences, traces.correct)
        return
    if len(traces) == 0:
        raise TraceError("trace set is empty")
    t_max = traces[0].t_max
    for i, tr in enumerate(traces):
        if len(tr.confidences) != len(tr.correctness):
            raise TraceError(
                f"sample {i}: {len(tr.confidences)} confidences but "
                f"{len(tr.correctness)} correctness entries"
            )
        if tr.t_max < 1:
            raise TraceError(f"sample {i}: empty trace")
        if tr.t_max != t_max:
            raise TraceError(f"sample {i}: t_max is {tr.t_max}, expected {t_max} (from sample 0)")
        for t, c in enumerate(tr.confidences, start=1):
            if not 0.0 <= c <= 1.0:
                raise TraceError(f"sample {i}: confidence at timestep {t} is {c!r}, outside [0, 1]")
        for t, b in enumerate(tr.correctness, start=1):
            if b not in (0, 1):
                raise TraceError(f"sample {i}: correctness at timestep {t} is {b!r}, not 0 or 1")


def threshold_vector(values: Iterable[float]) -> np.ndarray:
    """Return a read-only threshold array; entries must be in [0, 1] or ``inf``."""
    arr = np.array([float(v) for v in values], dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("threshold vector must be a non-empty 1-D sequence")
    ok = np.isposinf(arr) | ((arr >= 0.0) & (arr <= 1.0))
    if not ok.all():
        t = int(np.argmin(ok))
        raise ValueError(f"threshold at timestep {t + 1} is {arr[t]!r}; must be in [0, 1] or inf")
    arr.setflags(write=False)
    return arr


def constant_thresholds(value: float, t_max: int) -> np.ndarray:
    return threshold_vector([value] * t_max)


def all_inf(t_max: int) -> np.ndarray:
    return constant_thresholds(INF, t_max)


def gap_loss(full_correct: int, early_correct: int) -> int:
    """1 when the full-sequence prediction is right and the early one is wrong."""
    return max(int(full_correct) - int(early_correct), 0)


def _check_lengths(t_max: int, thresholds: np.ndarray) -> None:
    if len(thresholds) != t_max:
        raise TraceError(f"threshold vector has length {len(thresholds)}, data has t_max={t_max}")


def halt_time(trace: SampleTrace, thresholds: Sequence[float]) -> int:
    """First 1-based timestep whose confidence reaches its threshold, else ``t_max``."""
    _check_lengths(trace.t_max, thresholds)
    for t, (c, lam) in enumerate(zip(trace.confidences, thresholds), start=1):
        if c >= lam:
            return t
    return trace.t_max


def early_loss(trace: SampleTrace, thresholds: Sequence[float]) -> int:
    t = halt_time(trace, thresholds)
    return gap_loss(trace.correctness[-1], trace.correctness[t - 1])


def halt_times(ts: TraceSet, thresholds: np.ndarray, *, return_triggered: bool = False):
    """Vectorised :func:`halt_time` over a trace set (1-based).

    With ``return_triggered=True`` also returns a boolean array telling whether
    each halt came from a threshold crossing (``True``) or the ``t_max``
    fallback (``False``).
    """
    thresholds = np.asarray(thresholds, dtype=float)
    _check_lengths(ts.t_max, thresholds)
    crossed = ts.confidences >= thresholds[None, :]
    triggered = crossed.any(axis=1)
    halts = np.where(triggered, crossed.argmax(axis=1) + 1, ts.t_max)
    if return_triggered:
        return halts, triggered
    return halts


def losses_at(ts: TraceSet, halts: np.ndarray) -> np.ndarray:
    """Gap loss of each sample when halting at the given 1-based timesteps."""
    early = ts.correct[np.arange(ts.n), halts - 1]
    return ((ts.full_correct == 1) & (early == 0)).astype(np.int64)


def early_losses(ts: TraceSet, thresholds: np.ndarray) -> np.ndarray:
    return losses_at(ts, halt_times(ts, thresholds))
