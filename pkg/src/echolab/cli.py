"""Command-line interface.

    echolab run <preset> [--J N] [--delta X] [--tmax N] [--out DIR]
    echolab run --from-manifest FILE [--out DIR]
    echolab tau <series.csv> --level 0.37
    echolab scan-delta <preset> --deltas a,b,c [--level X] [--J N] [--out DIR]
    echolab collapse --Js 50,100,200 [--delta X] [--out DIR]
    echolab oracle [--J N] [--seed S] [--trials N]

Exit codes: 0 success, 1 failed oracle checks, 2 usage errors, 3 numeric
failures.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ._version import __version__
from .driver import (
    collapse_scan,
    delta_scan,
    extract_tau,
    rerun_from_manifest,
    run_preset,
)
from .echo import StabilitySeries
from .oracle import run_equivalence_suite
from .presets import PRESETS
from .response import IntegrationError
from .runio import fmt, read_series_csv


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _cmd_run(args) -> int:
    if args.from_manifest:
        result = rerun_from_manifest(args.from_manifest, out_dir=args.out)
    else:
        if args.preset is None:
            raise ValueError("give a preset name or --from-manifest")
        result = run_preset(
            args.preset,
            J=args.J,
            delta=args.delta,
            tmax=args.tmax,
            ledger_tmax=args.ledger_tmax,
            out_dir=args.out,
        )
    cfg = result.config
    print(f"preset {result.name} (regime {result.regime.value})")
    print(
        f"J = {cfg.sys.J:g}, delta = {cfg.delta:g}, tmax = {cfg.tmax}, "
        f"ledger tmax = {result.ledger.tmax}"
    )
    for name in ("sigma", "cbar_F", "cbar_R", "cbar_I", "sigma_e", "sigma_s",
                 "cbar_e", "cbar_e_var", "avg_vs2", "avg_vs_var"):
        value = getattr(result.coeffs, name)
        if value is not None:
            print(f"  {name} = {value:.6g}")
    for key, value in result.closed.items():
        print(f"  {key} = {value:.6g}")
    sat = result.saturation
    print(f"tail means: F2 = {sat.f2:.4g}, FR2 = {sat.fr2:.4g}, I = {sat.i:.4g}")
    if result.out_dir is not None:
        print(f"wrote {result.out_dir}/series.csv, ledger.csv, manifest.txt")
    return 0


def _cmd_tau(args) -> int:
    data = read_series_csv(args.series)
    series = StabilitySeries(
        t=data["t"].astype(int),
        F=data["F"],
        FR=data["FR"],
        I=data["I"],
    )
    record = extract_tau(series, args.level)
    print(f"level {args.level:g} crossings (steps):")
    for label, value in (
        ("F^2", record.tau_F),
        ("FR^2", record.tau_FR),
        ("I", record.tau_I),
    ):
        print(f"  {label:5s} {'absent' if value is None else fmt(value)}")
    return 0


def _cmd_scan_delta(args) -> int:
    result = delta_scan(
        args.preset,
        args.deltas,
        level=args.level,
        J=args.J,
        tmax=args.tmax,
        workers=args.workers,
        out_dir=args.out,
    )
    print(f"preset {args.preset}, J = {result.J}, level = {result.level:g}")
    header = f"{'delta':>12} {'tau_F':>10} {'tau_FR':>10} {'tau_I':>10} {'tau_F_pred':>11}"
    print(header)
    for rec, pred in zip(result.records, result.predicted):
        cells = [f"{rec.delta:12.4g}"]
        for v in (rec.tau_F, rec.tau_FR, rec.tau_I):
            cells.append(f"{'absent':>10}" if v is None else f"{v:10.1f}")
        cells.append(f"{pred.tau_F:11.1f}")
        print(" ".join(cells))
    for measure, slope in result.slopes.items():
        if slope is None:
            print(f"log-log slope [{measure}]: not enough unsaturated points")
        else:
            print(
                f"log-log slope [{measure}]: {slope.slope:+.3f} "
                f"({slope.n_used} points)"
            )
    for note in result.notes:
        print(f"note: {note}")
    if result.out_dir is not None:
        print(f"wrote {result.out_dir}/scan.csv, scan_manifest.txt")
    return 0


def _cmd_collapse(args) -> int:
    report = collapse_scan(
        args.Js,
        preset_name=args.preset,
        delta=args.delta,
        dt_max=args.dt_max,
        workers=args.workers,
        out_dir=args.out,
    )
    print(
        f"preset {report.preset}, J in {report.Js}, delta = {report.delta:g}, "
        f"dt up to {report.dt[-1]:.3g}"
    )
    print(
        f"max pairwise sup-norm difference = {report.max_pairwise_diff:.4f} "
        f"over {report.n_compared} points above floor {report.compare_floor:.3g}"
    )
    if report.out_dir is not None:
        print(f"wrote {report.out_dir}/collapse.csv, collapse_manifest.txt")
    return 0


def _cmd_oracle(args) -> int:
    checks = run_equivalence_suite(J=args.J, seed=args.seed, trials=args.trials)
    failed = 0
    for check in checks:
        status = "PASS" if check.ok else "FAIL"
        print(f"[{status}] {check.name}: err {check.error:.3e} (tol {check.tol:g})")
        failed += 0 if check.ok else 1
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echolab",
        description="Fidelity, reduced fidelity, and purity decay for two "
        "weakly coupled kicked tops",
    )
    parser.add_argument("--version", action="version", version=f"echolab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one preset and write series/ledger/manifest")
    run.add_argument("preset", nargs="?", choices=sorted(PRESETS), default=None)
    run.add_argument("--J", type=int, default=None, help="spin size override")
    run.add_argument("--delta", type=float, default=None, help="coupling override")
    run.add_argument("--tmax", type=int, default=None, help="horizon override")
    run.add_argument("--ledger-tmax", type=int, default=None, dest="ledger_tmax")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--from-manifest", default=None, dest="from_manifest")
    run.set_defaults(func=_cmd_run)

    tau = sub.add_parser("tau", help="level crossings of a written series")
    tau.add_argument("series", help="path to series.csv")
    tau.add_argument("--level", type=float, default=0.37)
    tau.set_defaults(func=_cmd_tau)

    scan = sub.add_parser("scan-delta", help="decay times versus coupling strength")
    scan.add_argument("preset", choices=sorted(PRESETS))
    scan.add_argument("--deltas", type=_float_list, required=True)
    scan.add_argument("--level", type=float, default=0.37)
    scan.add_argument("--J", type=int, default=100)
    scan.add_argument("--tmax", type=int, default=None)
    scan.add_argument("--workers", type=int, default=1)
    scan.add_argument("--out", default=None)
    scan.set_defaults(func=_cmd_scan_delta)

    col = sub.add_parser("collapse", help="purity versus delta*t across spin sizes")
    col.add_argument("--Js", type=_int_list, required=True)
    col.add_argument("--preset", choices=sorted(PRESETS), default="regular")
    col.add_argument("--delta", type=float, default=None)
    col.add_argument("--dt-max", type=float, default=3.0, dest="dt_max")
    col.add_argument("--workers", type=int, default=1)
    col.add_argument("--out", default=None)
    col.set_defaults(func=_cmd_collapse)

    orc = sub.add_parser("oracle", help="small-spin brute-force equivalence suite")
    orc.add_argument("--J", type=float, default=3)
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--trials", type=int, default=3)
    orc.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
