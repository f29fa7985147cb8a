"""Command-line entry point: ``modlab run | check | windows | exponents``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from . import __version__
from .errors import ConfigError, IdentityFailure, ModlabError


def _range(text: str):
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError("need step > 0 and a <= b")
    return a, b, step


def _config(args) -> dict:
    from .harness import load_config, validate_config

    return load_config(args.config) if args.config else validate_config({})


def cmd_run(args) -> int:
    from .harness import emit_report, run_growth_experiment

    cfg = _config(args)
    report = run_growth_experiment(cfg, cache_path=args.dual_cache)
    csv_path, json_path = emit_report(report, args.out)
    s = report.slopes
    print(f"slopes: input {s['input']['slope']:.4f}  output_lower {s['output_lower']['slope']:.4f}  "
          f"ratio {s['ratio']['slope']:.4f} (R^2 {s['ratio']['r_squared']:.4f})")
    print(report.verdict["statement"])
    print(f"wrote {csv_path} and {json_path}")
    return 0


def _point(v) -> str:
    import numpy as np

    return ";".join(repr(float(c)) for c in np.ravel(v))


def cmd_symbol_class(args) -> int:
    from .harness import params_from_config
    from .symbols import seminorm_table

    cfg = _config(args)
    rows = seminorm_table(params_from_config(cfg), cfg["truncation_radius"])
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["j", "alpha", "beta", "sup_ratio", "argmax_x", "argmax_xi"])
    for j, alpha, beta, ratio, ax, axi in rows:
        w.writerow([j, "".join(map(str, alpha)), "".join(map(str, beta)), repr(float(ratio)),
                    _point(ax), _point(axi)])
    return 0


def cmd_identities(args) -> int:
    from .harness import identity_suite

    checks = identity_suite(_config(args))
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:32s} {c.value:.3e}  (tol {c.tol:.0e})")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise IdentityFailure(f"{len(failed)} identity check(s) failed: {', '.join(failed)}")
    return 0


def cmd_windows(args) -> int:
    from .windows import dump_table

    a, b, step = args.range
    t, v = dump_table(args.which, a, b, step, args.n)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["t", "value"])
    for ti, vi in zip(t, v):
        w.writerow([repr(float(ti)), repr(float(vi))])
    return 0


def cmd_exponents(args) -> int:
    from dataclasses import asdict

    from .harness import params_from_config, theoretical_exponents

    ex = theoretical_exponents(params_from_config(_config(args)))
    out = asdict(ex)
    out["ratio_positive"] = ex.ratio > 0
    print(json.dumps(out, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modlab", description=__doc__)
    ap.add_argument("--version", action="version", version=f"modlab {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="growth experiment; writes report.csv and report.json")
    run.add_argument("--config")
    run.add_argument("--out", required=True)
    run.add_argument("--dual-cache", help="JSON cache for the dual B-spline norm")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="diagnostics").add_subparsers(dest="what", required=True)
    sc = check.add_parser("symbol-class", help="per-shell weighted derivative sups (CSV)")
    sc.add_argument("--config")
    sc.set_defaults(func=cmd_symbol_class)
    ids = check.add_parser("identities", help="closed forms, Moyal constant, adjoints")
    ids.add_argument("--config")
    ids.set_defaults(func=cmd_identities)

    win = sub.add_parser("windows", help="window tables").add_subparsers(dest="what", required=True)
    dump = win.add_parser("dump", help="CSV t,value")
    dump.add_argument("--which", required=True, choices=["phi", "psi", "eta", "Phi", "Psi"])
    dump.add_argument("--range", required=True, type=_range, metavar="a:b:step")
    dump.add_argument("--n", type=int, default=1)
    dump.set_defaults(func=cmd_windows)

    ex = sub.add_parser("exponents", help="theoretical growth exponents")
    ex.add_argument("--config")
    ex.set_defaults(func=cmd_exponents)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ModlabError as exc:
        print(f"modlab: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"modlab: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
