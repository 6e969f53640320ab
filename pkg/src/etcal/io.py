"""Trace CSV files, threshold JSON files and atomic report writing.

Trace files are long format, one row per (sample, timestep)::

    sample_id,t,confidence,correct
    s0,1,0.31,0
    s0,2,0.87,1

Threshold files are JSON; ``inf`` entries are written as the string ``"inf"``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .domain import TraceSet, threshold_vector

TRACE_HEADER = ["sample_id", "t", "confidence", "correct"]


class ParseError(ValueError):
    def __init__(self, path, line: Optional[int], msg: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {msg}")
        self.line = line


def parse_traces(path: str | os.PathLike) -> TraceSet:
    """Read a trace CSV; sample order follows first appearance in the file."""
    rows: dict[str, dict[int, tuple[float, int]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRACE_HEADER:
            raise ParseError(path, 1, f"expected header {','.join(TRACE_HEADER)}, got {header}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(path, line, f"expected 4 fields, got {len(row)}")
            sid, t_s, c_s, b_s = (c.strip() for c in row)
            try:
                t = int(t_s)
            except ValueError:
                raise ParseError(path, line, f"timestep {t_s!r} is not an integer") from None
            try:
                conf = float(c_s)
            except ValueError:
                raise ParseError(path, line, f"confidence {c_s!r} is not a number") from None
            if not 0.0 <= conf <= 1.0:
                raise ParseError(path, line, f"confidence {conf!r} outside [0, 1]")
            if b_s not in ("0", "1"):
                raise ParseError(path, line, f"correct must be 0 or 1, got {b_s!r}")
            if t < 1:
                raise ParseError(path, line, f"timestep must be >= 1, got {t}")
            steps = rows.setdefault(sid, {})
            if t in steps:
                raise ParseError(path, line, f"duplicate row for sample {sid!r}, t={t}")
            steps[t] = (conf, int(b_s))
    if not rows:
        raise ParseError(path, None, "no data rows")

    t_max = None
    conf_rows, corr_rows = [], []
    for sid, steps in rows.items():
        tm = max(steps)
        missing = sorted(set(range(1, tm + 1)) - set(steps))
        if missing:
            raise ParseError(path, None, f"sample {sid!r} is missing timestep(s) {missing}")
        if t_max is None:
            t_max = tm
        elif tm != t_max:
            raise ParseError(path, None, f"sample {sid!r} has t_max={tm}, expected {t_max}")
        conf_rows.append([steps[t][0] for t in range(1, tm + 1)])
        corr_rows.append([steps[t][1] for t in range(1, tm + 1)])
    return TraceSet(np.array(conf_rows), np.array(corr_rows, dtype=np.int8))


def write_traces(
    ts: TraceSet, path: str | os.PathLike, sample_ids: Optional[Sequence[str]] = None
) -> None:
    ids = list(sample_ids) if sample_ids is not None else [f"s{i}" for i in range(ts.n)]

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for sid, conf, corr in zip(ids, ts.confidences, ts.correct):
            for t in range(ts.t_max):
                w.writerow([sid, t + 1, repr(float(conf[t])), int(corr[t])])

    atomic_write(path, emit, newline="")


def encode_thresholds(values) -> list:
    return [float(v) if math.isfinite(v) else "inf" for v in values]


def decode_thresholds(values: Sequence[Any]) -> np.ndarray:
    out = []
    for i, v in enumerate(values):
        if v == "inf":
            out.append(math.inf)
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(float(v))
        else:
            raise ValueError(f"threshold entry {i + 1} is {v!r}; only numbers and \"inf\" allowed")
    return threshold_vector(out)


def threshold_document(
    thresholds,
    *,
    mode: str,
    alpha: float,
    delta: float,
    grid_delta: float,
    provenance: Optional[dict] = None,
    log: Any = None,
) -> dict:
    doc = {
        "t_max": len(thresholds),
        "grid_delta": grid_delta,
        "alpha": alpha,
        "delta": delta,
        "mode": mode,
        "thresholds": encode_thresholds(thresholds),
        "provenance": {"tool_version": __version__, **(provenance or {})},
    }
    if log is not None:
        doc["log"] = log
    return doc


def write_threshold_file(path, doc: dict) -> None:
    write_json(path, doc)


def read_threshold_file(path) -> tuple[np.ndarray, dict]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(path, e.lineno, f"invalid JSON: {e.msg}") from None
    for key in ("t_max", "mode", "thresholds"):
        if key not in doc:
            raise ParseError(path, None, f"missing field {key!r}")
    if doc["mode"] not in ("marginal", "conditional"):
        raise ParseError(path, None, f"mode must be marginal or conditional, got {doc['mode']!r}")
    try:
        thr = decode_thresholds(doc["thresholds"])
    except ValueError as e:
        raise ParseError(path, None, str(e)) from None
    if len(thr) != doc["t_max"]:
        raise ParseError(path, None, f"{len(thr)} thresholds but t_max={doc['t_max']}")
    return thr, doc


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_json(path, doc: Any) -> None:
    # allow_nan=False: a stray inf/nan must fail loudly rather than emit invalid JSON
    text = json.dumps(doc, indent=2, default=_json_default, allow_nan=False)
    atomic_write(path, lambda fh: fh.write(text + "\n"))


def atomic_write(path, emit, newline: Optional[str] = None) -> None:
    """Write via a temp file in the target directory, then rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline=newline) as fh:
            emit(fh)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
