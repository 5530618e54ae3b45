"""Command-line entry point.

Exit codes: 0 success, 1 analysis or verification failure, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import config as cfg
from .extraction import ExtractionError
from .harness import SWEEP_COLUMNS, evaluate_record, run_sweep, simulate_point, verify_trends
from .losses import loss_report
from .sampler import RecordFormatError, load_record

EXIT_OK, EXIT_ANALYSIS, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _overrides(args) -> dict[str, str]:
    out = {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise cfg.ConfigError(item, "expected --set section.key=value")
        out[key.strip()] = value.strip()
    for flag, key in (("preset", "run.preset"), ("fs", "run.fs"), ("n", "run.n"),
                      ("seed", "run.seed"), ("output", "run.output"), ("workers", "run.workers")):
        value = getattr(args, flag, None)
        if value is not None:
            out[key] = str(value)
    return out


def _add_common(p, fs=True):
    p.add_argument("--config", help="INI-style run configuration file")
    p.add_argument("--preset", help="device preset: gan-cascode, gan-emode or sic")
    if fs:
        p.add_argument("--fs", help="switching frequency in Hz")
    p.add_argument("--n", help="samples per equivalent period")
    p.add_argument("--seed", help="root RNG seed")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override one configuration key (repeatable)")


def cmd_simulate(args) -> int:
    run = cfg.load(args.config, _overrides(args))
    if run.f_s is None:
        raise cfg.ConfigError("run.fs", "switching frequency is required")
    out = run.output or "record.csv"
    record = simulate_point(run.preset, run.f_s, run.n, run.seed, run.adc)
    record.save(out)
    print(f"f_s_hz={run.f_s:g} n={record.n} saturated={int(record.saturated)} output={out}")
    if record.saturated:
        print("warning: ADC full-scale range exceeded; clipped samples recorded at the rails")
    return EXIT_OK


def _fom_row(fom) -> str:
    def val(obj, attr):
        return "" if obj is None else f"{getattr(obj, attr):.17g}"

    values = [
        f"{fom.f_s:.17g}", val(fom.ciss, "ciss"), "", val(fom.rdson, "r_dson"), "",
        val(fom.threshold, "vth_on"), val(fom.threshold, "vth_off"), val(fom.threshold, "delta_vth"),
        val(fom.switching, "tc_on"), val(fom.switching, "tc_off"),
        val(fom.losses, "p_on"), val(fom.losses, "p_s"), val(fom.losses, "p_off"), val(fom.losses, "p_l"),
        val(fom.uncertainties, "u_id"),
    ]
    kind = fom.kind.value if fom.kind else ""
    return ",".join(SWEEP_COLUMNS) + "\n" + ",".join([kind] + values) + "\n"


def cmd_extract(args) -> int:
    run = cfg.load(args.config, _overrides(args))
    record = load_record(args.record)
    drive = run.preset.drive_at(record.f_s)
    fom = evaluate_record(
        record,
        r_g=args.r_g if args.r_g is not None else drive.r_g,
        i_0=args.i0 if args.i0 is not None else drive.i_0,
        v_bus=args.v_bus if args.v_bus is not None else drive.v_bus,
        duty=args.duty if args.duty is not None else drive.duty,
        i_leak=run.preset.model.i_leak, adc=run.adc, kind=run.kind,
    )
    sys.stdout.write(fom.to_text())
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(_fom_row(fom))
    return EXIT_OK


def cmd_sweep(args) -> int:
    overrides = _overrides(args)
    overrides.setdefault("run.n", str(args.default_n))
    run = cfg.load(args.config, overrides)
    out = run.output or f"sweep_{run.kind.value}.csv"
    report_path = args.report or os.path.splitext(out)[0] + "_trends.txt"
    table = run_sweep(run.preset, n=run.n, seed=run.seed, adc=run.adc, workers=run.workers)
    table.save(out)
    report = verify_trends(table)
    with open(report_path, "w", newline="") as fh:
        fh.write(report.to_text())
    sys.stdout.write(report.to_text())
    print(f"wrote {out} and {report_path}")
    if args.verify and not report.passed:
        return EXIT_ANALYSIS
    return EXIT_OK


def cmd_losses(args) -> int:
    try:
        report = loss_report(args.r_dson, args.i0, args.v_bus, args.fs, args.duty,
                             args.tc_on, args.tc_off, args.i_leak)
    except ValueError as exc:
        raise cfg.ConfigError("losses", str(exc)) from None
    for name in ("p_on", "p_s", "p_off", "p_l", "approx_ratio"):
        print(f"{name} = {float(getattr(report, name))!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wbgbench", description="Equivalent-time bench simulator for GaN and SiC power transistors.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write one equivalent-time record CSV")
    _add_common(p)
    p.add_argument("-o", "--output", help="record CSV path (default record.csv)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract", help="extract figures of merit from a record CSV")
    p.add_argument("record", help="record CSV written by 'simulate'")
    _add_common(p, fs=False)
    p.add_argument("--r-g", type=float, help="gate resistance in ohm (default: preset bench value)")
    p.add_argument("--i0", type=float, help="on-state drain current in A")
    p.add_argument("--v-bus", type=float, help="off-state drain voltage in V")
    p.add_argument("--duty", type=float, help="gate duty cycle")
    p.add_argument("-o", "--output", help="also write the report as a one-row sweep CSV")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("sweep", help="frequency sweep with trend verification")
    _add_common(p, fs=False)
    p.add_argument("--workers", help="parallel worker processes")
    p.add_argument("--verify", action="store_true", help="exit 1 unless every trend band passes")
    p.add_argument("--report", help="trend report path (default <output>_trends.txt)")
    p.add_argument("-o", "--output", help="sweep CSV path (default sweep_<preset>.csv)")
    p.set_defaults(func=cmd_sweep, default_n=40_000)

    p = sub.add_parser("losses", help="loss decomposition from explicit parameters")
    p.add_argument("--r-dson", type=float, required=True)
    p.add_argument("--i0", type=float, required=True)
    p.add_argument("--fs", type=float, required=True)
    p.add_argument("--duty", type=float, default=0.9)
    p.add_argument("--v-bus", type=float, required=True)
    p.add_argument("--tc-on", type=float, required=True)
    p.add_argument("--tc-off", type=float, required=True)
    p.add_argument("--i-leak", type=float, default=0.0)
    p.set_defaults(func=cmd_losses)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # extract does not take --fs; the record header carries it
    if not hasattr(args, "fs"):
        args.fs = None
    try:
        return args.func(args)
    except ExtractionError as exc:
        print(f"error: extraction of {exc.fom} failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except RecordFormatError as exc:
        print(f"error: malformed record: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except cfg.ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
