"""Command line entry point: ``vtkey <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import explorer
from ._rng import derive
from .attacker import AttackerParams, DesignPoint, key_read_success, measurement_cost, success_vs_chips
from .bch import build_code
from .cell_sim import CellPhysicalParams, EmpiricalErrorData, simulate_population
from .error_model import FIT_CSV_HEADER, MaesModel, fit
from .explorer import FlowConfig


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, default=None, help="master seed (default 42)")
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--sigma-var", type=float, default=None)
    common.add_argument("--sigma-noise", type=float, default=None)
    common.add_argument("--key-bits", type=int, default=None)
    common.add_argument("--chips", type=int, default=None, help="simulated chips per key-failure distribution")

    parser = argparse.ArgumentParser(prog="vtkey", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a cell population")
    p.add_argument("--delta-vt", type=float, required=True)
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("fit", parents=[common], help="fit the error-probability model")
    p.add_argument("--delta-vt", type=float, required=True)
    p.add_argument("--input", type=Path, help="CSV with cell_index,error_prob (simulated if omitted)")
    p.add_argument("--trials", type=int, default=None)

    p = sub.add_parser("select-code", parents=[common], help="cheapest code meeting the criterion")
    p.add_argument("--delta-vt", type=float, required=True)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--candidate-t", type=_ints, default=None)

    p = sub.add_parser("attack", parents=[common], help="closed-form key readout success")
    p.add_argument("--delta-vt", type=float, default=None)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--sigma-err", type=float, default=200.0)
    p.add_argument("--attack-chips", type=int, default=1, help="chips measured by the attacker (C)")
    p.add_argument("--curve", type=int, default=None, metavar="C_MAX", help="emit C,p_rskey for C=1..C_MAX")
    p.add_argument("--table1", action="store_true", help="evaluate the reference offset/code pairings")

    p = sub.add_parser("flow", parents=[common], help="run the full design flow and write reports")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--offsets", type=_floats, default=None)
    p.add_argument("--calibrate", action="store_true", help="calibrate sigma_noise first")

    p = sub.add_parser("calibrate", parents=[common], help="search sigma_noise against the reference pairings")
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("tradeoff", parents=[common], help="reliability vs attacker success over code strength")
    p.add_argument("--delta-vt", type=float, default=None)
    p.add_argument("--sigma-err", type=float, default=None)
    p.add_argument("--t", type=_ints, default=None, help="comma separated t values, descending")

    p = sub.add_parser("e2e", parents=[common], help="Monte Carlo end-to-end readout attack")
    p.add_argument("--delta-vt", type=float, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--sigma-err", type=float, default=200.0)
    p.add_argument("--attack-chips", type=int, default=1)
    p.add_argument("--trials", type=int, default=10_000)
    return parser


def load_config(args: argparse.Namespace) -> FlowConfig:
    values: dict[str, Any] = {}
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise explorer.ConfigError(f"cannot read config {args.config}: {exc}") from exc
        values.update(explorer.parse_config_text(text))
    overrides = {
        "seed": args.seed,
        "workers": args.workers,
        "sigma_var": args.sigma_var,
        "sigma_noise": args.sigma_noise,
        "key_bits": args.key_bits,
        "chips": args.chips,
        "cells": getattr(args, "cells", None),
        "trials": getattr(args, "trials", None) if args.command in ("simulate", "fit") else None,
        "offsets": getattr(args, "offsets", None),
        "candidate_t": getattr(args, "candidate_t", None),
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return explorer.config_from_values(values)


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc}") from exc


def _read_error_csv(path: Path, trials: int) -> EmpiricalErrorData:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    probs = rows[:, 1]
    return EmpiricalErrorData(probs, len(probs), trials)


def cmd_simulate(args: argparse.Namespace, config: FlowConfig) -> None:
    params = CellPhysicalParams(args.delta_vt, config.sigma_var, config.sigma_noise)
    rng = derive(config.seed, "population", explorer._mv(args.delta_vt))
    data = simulate_population(params, config.cells, config.trials, rng)
    _write(data.to_csv(), args.out)


def cmd_fit(args: argparse.Namespace, config: FlowConfig) -> None:
    if args.input is not None:
        report = fit(_read_error_csv(args.input, config.trials))
    else:
        report = explorer.model_for(config, args.delta_vt)
    print(FIT_CSV_HEADER)
    print(report.csv_row(args.delta_vt))


def cmd_select(args: argparse.Namespace, config: FlowConfig) -> None:
    if args.lambda1 is not None and args.lambda2 is not None:
        model = MaesModel(args.lambda1, args.lambda2)
    else:
        model = explorer.model_for(config, args.delta_vt).model
    print("delta_vt,code_t,pass,percentile_value")
    try:
        ev = explorer.select_for(config, model, args.delta_vt)
        tried = [explorer.evaluate_for(config, model, args.delta_vt, c) for c in config.candidates() if c.t < ev.code.t]
        tried.append(ev)
    except explorer.NoFeasibleCode as exc:
        for e in exc.evaluations:
            print(f"{args.delta_vt:g},{e.code.t},false,{e.percentile!r}")
        raise
    for e in tried:
        print(f"{args.delta_vt:g},{e.code.t},{str(e.passed).lower()},{e.percentile!r}")


def cmd_attack(args: argparse.Namespace, config: FlowConfig) -> None:
    if args.table1:
        pairs = sorted(explorer.TABLE1_PAIRINGS.items())
    else:
        if args.delta_vt is None or args.t is None:
            raise explorer.ConfigError("attack needs --delta-vt and --t, or --table1")
        pairs = [(args.delta_vt, args.t)]
    attacker = AttackerParams(args.sigma_err, args.attack_chips)
    if args.curve is not None:
        print("C,p_rskey" if len(pairs) == 1 else "delta_vt,C,p_rskey")
        for d, t in pairs:
            design = DesignPoint(d, build_code(t), config.key_bits, config.sigma_var)
            for c, p in success_vs_chips(design, args.sigma_err, args.curve):
                print(f"{c},{p!r}" if len(pairs) == 1 else f"{d:g},{c},{p!r}")
        return
    print("delta_vt,n,m,t,cells,p_rskey,measurements")
    for d, t in pairs:
        design = DesignPoint(d, build_code(t), config.key_bits, config.sigma_var)
        p = key_read_success(design, attacker)
        code = design.code
        print(f"{d:g},{code.n},{code.m},{code.t},{design.cells},{p!r},{measurement_cost(design, attacker)}")


def cmd_flow(args: argparse.Namespace, config: FlowConfig) -> None:
    if args.calibrate:
        try:
            result = explorer.calibrate_noise(config)
        except explorer.CalibrationFailed as exc:
            print(f"warning: {exc}", file=sys.stderr)
            result = exc.result
        config = config.replace(sigma_noise=result.sigma_noise)
    report = explorer.run_flow(config)
    for path in explorer.emit_reports(report, args.out, config):
        print(path)


def cmd_calibrate(args: argparse.Namespace, config: FlowConfig) -> int:
    try:
        result = explorer.calibrate_noise(config, exhaustive=args.exhaustive)
        status = 0
    except explorer.CalibrationFailed as exc:
        result = exc.result
        print(json.dumps({"error": "CalibrationFailed", "message": str(exc)}), file=sys.stderr)
        status = 1
    if args.out is not None:
        _write(result.to_csv(), args.out)
    sel = ", ".join(f"{d:g}->{'none' if t is None else t}" for d, t in sorted(result.best.selections.items()))
    print(f"sigma_noise={result.sigma_noise:g} matches={result.matches} selections: {sel}")
    return status


def cmd_tradeoff(args: argparse.Namespace, config: FlowConfig) -> None:
    delta = config.tradeoff_delta_vt if args.delta_vt is None else args.delta_vt
    sigma_err = config.tradeoff_sigma_err if args.sigma_err is None else args.sigma_err
    rows = explorer.tradeoff_curve(delta, sigma_err, args.t, config)
    print("t,first_percentile_key_failure,attacker_success")
    for t, kf, rs in rows:
        print(f"{t},{kf!r},{rs!r}")


def cmd_e2e(args: argparse.Namespace, config: FlowConfig) -> None:
    design = DesignPoint(args.delta_vt, build_code(args.t), config.key_bits, config.sigma_var)
    attacker = AttackerParams(args.sigma_err, args.attack_chips)
    rng = derive(config.seed, "e2e", explorer._mv(args.delta_vt), args.t, args.attack_chips)
    result = explorer.end_to_end_attack_sim(design, attacker, args.trials, rng, workers=config.workers)
    closed = key_read_success(design, attacker)
    print("successes,trials,rate,ci_low,ci_high,closed_form")
    print(f"{result.successes},{result.trials},{result.rate!r},{result.ci_low!r},{result.ci_high!r},{closed!r}")


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "select-code": cmd_select,
    "attack": cmd_attack,
    "flow": cmd_flow,
    "calibrate": cmd_calibrate,
    "tradeoff": cmd_tradeoff,
    "e2e": cmd_e2e,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        status = COMMANDS[args.command](args, config)
    except Exception as exc:  # reported as one machine-readable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return int(status or 0)


if __name__ == "__main__":
    sys.exit(main())
