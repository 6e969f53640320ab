"""Command-line entry point: ``etcal {calibrate,evaluate,simulate,mc-validate}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .conditional import calibrate_conditional
from .config import DEFAULT_ALPHA, DEFAULT_DELTA, DEFAULT_GRID_DELTA, CalibConfig
from .domain import TraceError
from .evaluation import evaluate_rule, guarantee_check
from .io import (
    ParseError,
    encode_thresholds,
    parse_traces,
    read_threshold_file,
    threshold_document,
    write_json,
    write_threshold_file,
    write_traces,
)
from .marginal import calibrate_marginal
from .synth import MIN_HALTS, GenParams, generate_traces, mc_validate

log = logging.getLogger("etcal")


def _add_calib_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="tolerable accuracy gap")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="significance level")
    p.add_argument("--grid-delta", type=float, default=DEFAULT_GRID_DELTA, help="threshold grid step")
    p.add_argument("--split-frac", type=float, default=0.5, help="stage-1 share of calibration data")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etcal", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate a stopping rule from a trace file")
    p.add_argument("--mode", choices=["marginal", "conditional"], required=True)
    p.add_argument("--input", required=True, help="trace CSV")
    p.add_argument("--output", required=True, help="threshold JSON to write")
    p.add_argument("--seed", type=int, default=0)
    _add_calib_args(p)

    p = sub.add_parser("evaluate", help="evaluate a threshold file on a trace file")
    p.add_argument("--input", required=True, help="trace CSV")
    p.add_argument("--thresholds", required=True, help="threshold JSON")
    p.add_argument("--report", required=True, help="report JSON to write")

    p = sub.add_parser("simulate", help="write a synthetic trace file")
    p.add_argument("--params", required=True, help="generator parameters JSON")
    p.add_argument("--seed", type=int, default=None, help="overrides the seed in --params")
    p.add_argument("--output", required=True, help="trace CSV to write")

    p = sub.add_parser("mc-validate", help="Monte-Carlo check of the guarantees")
    p.add_argument("--params", required=True, help="generator parameters JSON (n = calibration size)")
    p.add_argument("--mode", choices=["marginal", "conditional"], required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--test-pool", type=int, default=10_000)
    p.add_argument("--min-halts", type=int, default=MIN_HALTS)
    p.add_argument("--seed", type=int, default=None, help="overrides the seed in --params")
    p.add_argument("--report", required=True, help="report JSON to write")
    _add_calib_args(p)
    return parser


def _config(args, seed: int = 0) -> CalibConfig:
    return CalibConfig(
        alpha=args.alpha,
        delta=args.delta,
        grid_delta=args.grid_delta,
        split_fraction=args.split_frac,
        seed=seed,
    )


def _load_params(path: str, seed) -> GenParams:
    with open(path) as fh:
        params = GenParams.from_dict(json.load(fh))
    if seed is not None:
        params = dataclasses.replace(params, seed=seed)
    return params


def cmd_calibrate(args) -> None:
    cfg = _config(args, args.seed)
    ts = parse_traces(args.input)
    provenance = {"seed": args.seed, "n_cal": ts.n}
    if args.mode == "marginal":
        res = calibrate_marginal(ts, cfg)
        thresholds = res.thresholds(ts.t_max)
        result_log = {
            "lambda_hat": encode_thresholds([res.lambda_hat])[0],
            "steps": [dataclasses.asdict(s) for s in res.steps],
        }
    else:
        res = calibrate_conditional(ts, cfg)
        thresholds = res.lambda_hat
        provenance.update(
            split_fraction=cfg.split_fraction,
            n_cal1=len(res.cal1_indices),
            n_cal2=len(res.cal2_indices),
        )
        result_log = {
            "eta_hat": encode_thresholds(res.eta_hat),
            "t_star": res.t_star,
            "cal1_indices": res.cal1_indices.tolist(),
            "cal2_indices": res.cal2_indices.tolist(),
            "tests": [dataclasses.asdict(s) for s in res.test_log],
        }
    doc = threshold_document(
        thresholds,
        mode=args.mode,
        alpha=cfg.alpha,
        delta=cfg.delta,
        grid_delta=cfg.grid_delta,
        provenance=provenance,
        log=result_log,
    )
    write_threshold_file(args.output, doc)
    log.info("wrote %s: %s", args.output, doc["thresholds"])


def cmd_evaluate(args) -> None:
    thresholds, meta = read_threshold_file(args.thresholds)
    ts = parse_traces(args.input)
    if len(thresholds) != ts.t_max:
        raise ValueError(
            f"threshold file has t_max={len(thresholds)} but {args.input} has t_max={ts.t_max}"
        )
    report = evaluate_rule(ts, thresholds)
    doc = report.to_dict()
    doc["thresholds"] = encode_thresholds(thresholds)
    doc["mode"] = meta["mode"]
    if "alpha" in meta:
        chk = guarantee_check(report, meta["alpha"])
        doc["guarantee_check"] = {"alpha": meta["alpha"], **dataclasses.asdict(chk)}
    write_json(args.report, doc)
    print(render_table(doc))


def render_table(doc: dict) -> str:
    lines = [
        f"n={doc['n']}  t_max={doc['t_max']}  T_avg={doc['t_avg']:.4f}  "
        f"marginal gap={doc['marginal_gap']:.4f}  early acc={doc['early_accuracy']:.4f}  "
        f"full acc={doc['full_accuracy']:.4f}",
        f"{'t':>4} {'halts':>7} {'acc.halts':>10} {'acc.gap':>9}",
    ]
    for row in doc["curves"]:
        gap = "-" if row["accumulated_gap"] is None else f"{row['accumulated_gap']:.4f}"
        lines.append(f"{row['t']:>4} {row['halts']:>7} {row['accumulated_halts']:>10} {gap:>9}")
    return "\n".join(lines)


def cmd_simulate(args) -> None:
    params = _load_params(args.params, args.seed)
    write_traces(generate_traces(params), args.output)


def cmd_mc_validate(args) -> None:
    params = _load_params(args.params, args.seed)
    cfg = _config(args, params.seed)
    rep = mc_validate(params, cfg, args.trials, args.test_pool, args.mode, args.min_halts)
    doc = rep.to_dict()
    doc["params"] = dataclasses.asdict(params)
    doc["grid_delta"] = cfg.grid_delta
    write_json(args.report, doc)
    print(
        f"{args.mode}: marginal violations {doc['marginal_violation_rate']:.3f}, "
        f"conditional violations {doc['conditional_violation_rate']:.3f}, "
        f"power {doc['power']:.3f} over {rep.trials} trials"
    )


COMMANDS = {
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "mc-validate": cmd_mc_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        COMMANDS[args.command](args)
    except (ParseError, TraceError, ValueError, OSError) as e:
        print(f"etcal {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
