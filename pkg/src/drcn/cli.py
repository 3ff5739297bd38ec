"""Command-line entry point: ``drcn rate|sweep|figure|threshold``.

Exit codes: 0 success, 1 usage or configuration error, 2 regression failure,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, is_dataclass

from . import figures
from .model import ConfigError, DomainError, validate_config
from .separated import baseline_no_cooperation, optimize_sep
from .simultaneous import optimize_sim

EXIT_OK, EXIT_USAGE, EXIT_REGRESSION, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config_flags(p, need_powers=True):
    p.add_argument("--h1", type=float, required=True, help="user 2 to BS gain")
    p.add_argument("--h2", type=float, required=True, help="user 1 to BS gain (stronger)")
    p.add_argument("--h3", type=float, default=0.0, help="D2D gain (default 0)")
    p.add_argument("--p", type=float, help="common power budget P1 = P2 = P3")
    for k in ("p1", "p2", "p3"):
        p.add_argument(f"--{k}", type=float, help=f"power budget {k.upper()}")
    p.set_defaults(need_powers=need_powers)


def _tol_flags(p):
    p.add_argument("--tol", type=float, default=None,
                   help="search tolerance (default 1e-3 for sim, 5e-3 for sep and baseline)")
    p.add_argument("--cf-exponent", type=int, choices=(2, 3), default=None,
                   help="power of |h3| in the compress-forward term (default 2)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="drcn", description="Symmetric rates of a two-user device-relaying cell.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rate", help="optimise one configuration")
    _config_flags(p)
    _tol_flags(p)
    p.add_argument("--scheme", choices=("sim", "sep", "baseline", "all"), default="all")
    p.add_argument("--out", help="also write the report as JSON to this path")

    p = sub.add_parser("sweep", help="sweep h3 or SNR2 and write a CSV")
    _config_flags(p, need_powers=False)
    _tol_flags(p)
    p.add_argument("--scheme", choices=("sim", "sep", "baseline", "all"), default="all")
    p.add_argument("--var", choices=("h3", "snr2"), required=True)
    p.add_argument("--from", dest="start", type=float, required=True,
                   help="first value (dB for snr2)")
    p.add_argument("--to", dest="stop", type=float, required=True, help="last value (dB for snr2)")
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--log", action="store_true", help="log spacing (h3 sweeps)")
    p.add_argument("--out", help="CSV path (default stdout)")

    p = sub.add_parser("figure", help="recompute a reference figure and compare")
    p.add_argument("name", choices=tuple(figures.FIGURES))
    p.add_argument("--cf-exponent", type=int, choices=(2, 3), default=None,
                   help="only this exponent (default: both)")
    p.add_argument("--tol", type=float, default=None, help="separated-scheme tolerance")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("threshold", help="recommend switching the relay on or off")
    _config_flags(p)
    _tol_flags(p)
    p.add_argument("--gain", "-g", type=float, required=True,
                   help="minimum rate gain that justifies relaying")
    return parser


def _config(args):
    explicit = [getattr(args, k) for k in ("p1", "p2", "p3")]
    if args.p is not None and any(v is not None for v in explicit):
        raise UsageError("use either --p or --p1/--p2/--p3, not both")
    if args.p is not None:
        powers = [args.p] * 3
    elif all(v is not None for v in explicit):
        powers = explicit
    elif args.need_powers or any(v is not None for v in explicit):
        raise UsageError("give --p or all of --p1, --p2, --p3")
    else:
        powers = [1.0] * 3
    return validate_config(args.h1, args.h2, args.h3, *powers)


def _jsonable(obj):
    if is_dataclass(obj):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj


def _describe(res) -> dict:
    out = dict(rate=res.value, argmax=_jsonable(res.argmax), evaluations=res.evaluations,
               converged=res.converged, resolution=_jsonable(res.resolution))
    for k in ("uplink", "downlink"):
        if k in res.details:
            out[k] = dict(rate=res.details[k].value, split=_jsonable(res.details[k].argmax))
    return out


def _schemes(choice):
    return figures.SCHEMES if choice == "all" else (choice,)


def _cmd_rate(args, out):
    cfg = _config(args)
    e = args.cf_exponent or 2
    report = {}
    for s in _schemes(args.scheme):
        if s == "sim":
            res = optimize_sim(cfg, args.tol or 1e-3)
        elif s == "sep":
            res = optimize_sep(cfg, args.tol or 5e-3, e)
        else:
            res = baseline_no_cooperation(cfg, args.tol or 5e-3)
        report[s] = _describe(res)
        print(f"{s:8s} rate {res.value:.6f} bit/channel use", file=out)
        print(f"{'':8s} argmax {report[s]['argmax']}", file=out)
        for k in ("uplink", "downlink"):
            if k in report[s]:
                print(f"{'':8s} {k} {report[s][k]['rate']:.6f} {report[s][k]['split']}", file=out)
        print(f"{'':8s} evaluations {res.evaluations}, converged {res.converged}", file=out)
    print("RESULT " + " ".join(f"{s}={report[s]['rate']:.15g}" for s in report), file=out)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(dict(config=_jsonable(cfg), cf_exponent=e, schemes=report), fh, indent=2)
    return EXIT_OK


def _cmd_sweep(args, out):
    cfg = _config(args)
    start, stop = args.start, args.stop
    if args.var == "snr2":
        # dB at the boundary, linear inside.
        start, stop = 10 ** (start / 10), 10 ** (stop / 10)
    spec = figures.SweepSpec(
        args.var, start, stop, args.points, cfg, log=args.log or args.var == "snr2",
        schemes=_schemes(args.scheme), cf_exponent=args.cf_exponent or 2,
        sim_tol=args.tol or 1e-3, sep_tol=args.tol or 5e-3,
    )
    cols = figures.run_sweep(spec)
    if args.out:
        figures.write_csv(args.out, cols)
        print(f"wrote {len(cols['abscissa'])} rows to {args.out}", file=out)
    else:
        out.write(figures.format_csv(cols))
    return EXIT_OK


def _cmd_figure(args, out):
    exps = (args.cf_exponent,) if args.cf_exponent else (2, 3)
    checks, summaries, paths = figures.write_figure(args.name, args.out, exps,
                                                    sep_tol=args.tol or 5e-3)
    for e, summ in summaries.items():
        for curve, s in summ.items():
            print(f"cf{e} {curve:9s} points {s['points']:3d}  max|dev| {s['max_abs_dev']:.6f}"
                  f"  below reference-1e-3: {s['below']}", file=out)
    if len(summaries) > 1:
        print(f"best-matching cf_exponent for r_sep: {figures.best_exponent(summaries)}", file=out)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.label}: {c.detail}", file=out)
    for p in paths:
        print(f"wrote {p}", file=out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_REGRESSION


def _cmd_threshold(args, out):
    if not args.gain >= 0:
        raise UsageError("--gain must be nonnegative")
    cfg = _config(args)
    sim = optimize_sim(cfg, args.tol or 1e-3).value
    base = baseline_no_cooperation(cfg, args.tol or 5e-3).value
    gain = sim - base
    on = gain >= args.gain
    print(f"relay {'ON' if on else 'OFF'}", file=out)
    print(f"r_sim {sim:.6f}, r_nocoop {base:.6f}, gain {gain:.6f}, threshold {args.gain:g}", file=out)
    print(f"RESULT relay={'on' if on else 'off'} r_sim={sim:.15g} r_nocoop={base:.15g} "
          f"gain={gain:.15g}", file=out)
    return EXIT_OK


COMMANDS = {"rate": _cmd_rate, "sweep": _cmd_sweep, "figure": _cmd_figure,
            "threshold": _cmd_threshold}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, ConfigError, DomainError, figures.SweepError) as exc:
        print(f"drcn: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"drcn: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
