"""Command-line interface: ``ris-bounds {fig2,fig3,fig4,run,calibrate}``."""

import argparse
import os
import sys

from . import harness
from .config import METHODS, ScenarioConfig, dump_config, load_config
from .errors import BoundViolation, DomainError, ValidationError


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _methods(text):
    methods = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"methods must be a subset of {','.join(METHODS)}")
    return methods


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value scenario file (defaults apply to missing keys)")
    common.add_argument("--trials", type=int, help="drops per configuration")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help=f"output CSV path (default: ${harness.OUT_DIR_ENV} or ./results)")
    common.add_argument("--methods", type=_methods, help=f"comma-separated subset of {','.join(METHODS)}")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("--timing", action="store_true",
                        help="record wall times (otherwise written as nan so output is reproducible)")

    parser = argparse.ArgumentParser(
        prog="ris-bounds", formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        description="Sum-rate bounds and AO designs for RIS-aided multi-user uplink.")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("run", parents=[common], formatter_class=fmt, help="run one scenario")
    p.add_argument("--summary", help="also write the per-method summary CSV here")

    p = sub.add_parser("fig2", parents=[common], formatter_class=fmt, help="sum-rate vs RIS size")
    p.add_argument("--n", type=_int_list, default=harness.FIG2_N, help="RIS sizes")
    p.add_argument("--k", type=_int_list, default=harness.FIG2_K, help="user counts")
    p.add_argument("--records", help="directory for per-point record CSVs")

    p = sub.add_parser("fig3", parents=[common], formatter_class=fmt, help="sum-rate vs users, LOS and scattered RIS-BS")
    p.add_argument("--n", type=_int_list, default=harness.FIG3_N, help="RIS sizes")
    p.add_argument("--k", type=_int_list, default=harness.FIG3_K, help="user counts")
    p.add_argument("--records", help="directory for per-point record CSVs")

    p = sub.add_parser("fig4", parents=[common], formatter_class=fmt, help="AO objective per sweep")
    p.add_argument("--n", type=_int_list, default=harness.FIG4_N, help="RIS sizes")
    p.add_argument("--k", type=_int_list, default=harness.FIG4_K, help="user counts")

    p = sub.add_parser("calibrate", parents=[common], formatter_class=fmt,
                       help="reference power for a target mean channel power")
    p.add_argument("--target-db", type=float, default=0.0, help="target mean per-antenna power")
    p.add_argument("--lo", type=float, default=-50.0, help="lower end of the P search range (dB)")
    p.add_argument("--hi", type=float, default=150.0, help="upper end of the P search range (dB)")
    return parser


def _config(args, base=None):
    cfg = load_config(args.config, base) if args.config else (base or ScenarioConfig())
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.methods is not None:
        changes["methods"] = args.methods
    return cfg.replace(**changes)


def _out(args, name):
    return args.out or os.path.join(harness.default_out_dir(), name)


def _print_summary(cfg, summary):
    head = f"N={cfg.n_ris:<4d} K={cfg.users:<2d} kappa_br={cfg.kappa_br:<4g}"
    for method, s in summary.items():
        print(f"{head} {method:<15s} {s.mean:10.4f} +- {s.stderr:.4f} bits  ({s.count} drops)")


def _sweep(args, points):
    results = harness.run_sweep(points, workers=args.workers, timing=args.timing, progress=_print_summary)
    if getattr(args, "records", None):
        for cfg, records, _ in results:
            name = f"N{cfg.n_ris}_K{cfg.users}_kbr{harness.format_number(cfg.kappa_br)}.csv"
            harness.emit_csv(records, os.path.join(args.records, name))
    return results


def cmd_run(args):
    cfg = _config(args)
    records, summary = harness.run_experiment(cfg, workers=args.workers, timing=args.timing)
    out = _out(args, "run.csv")
    harness.emit_csv(records, out)
    _print_summary(cfg, summary)
    if args.summary:
        harness.emit_summary_csv([(cfg, summary)], args.summary)
    print(f"wrote {out}")


def cmd_fig2(args):
    results = _sweep(args, harness.fig2_points(_config(args), args.n, args.k))
    out = _out(args, "fig2.csv")
    harness.emit_summary_csv([(c, s) for c, _, s in results], out)
    print(f"wrote {out}")


def cmd_fig3(args):
    results = _sweep(args, harness.fig3_points(_config(args), args.n, args.k))
    out = _out(args, "fig3.csv")
    harness.emit_summary_csv([(c, s) for c, _, s in results], out)
    print(f"wrote {out}")


def cmd_fig4(args):
    results = _sweep(args, harness.fig4_points(_config(args), args.n, args.k))
    rows = [(cfg, rec) for cfg, records, _ in results for rec in records if rec.method == "ao"]
    out = _out(args, "fig4.csv")
    harness.emit_trace_csv(rows, out)
    print(f"wrote {out}")


def cmd_calibrate(args):
    cfg = _config(args, harness.CALIBRATION_BASE)
    trials = args.trials if args.trials is not None else 200
    p = harness.calibrate_reference_power(cfg, args.target_db, trials, args.lo, args.hi, seed=cfg.seed)
    print(f"reference_power_db = {p:.2f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dump_config(cfg.replace(reference_power_db=round(p, 2))))
        print(f"wrote {args.out}")


COMMANDS = {"run": cmd_run, "fig2": cmd_fig2, "fig3": cmd_fig3, "fig4": cmd_fig4, "calibrate": cmd_calibrate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        COMMANDS[args.command](args)
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BoundViolation as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
