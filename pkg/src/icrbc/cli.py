"""Command line entry point.

Exit status: 0 on success, 2 on bad arguments, 3 when an experiment
fails (a trial does not decode, or a slope misses its tolerance).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import dof, harness
from .channel import (CsitPattern, enumerate_synergistic_patterns, icr_pattern,
                      per_user_perfect_fraction, sample_channel, state_fractions)
from .errors import IcrError, UnsupportedError

EXIT_OK, EXIT_ARGS, EXIT_FAILED = 0, 2, 3


class ArgumentError(Exception):
    pass


def _gamma(text: str) -> tuple[Fraction, ...]:
    try:
        values = tuple(Fraction(v.strip()) for v in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad gamma list {text!r}") from exc
    if len(values) != 3:
        raise argparse.ArgumentTypeError("gamma needs exactly three values")
    return values


def _exponents(text: str) -> tuple[int, ...]:
    """``30,35,40`` or ``30:50:5`` (inclusive stop)."""
    try:
        if ":" in text:
            parts = [int(v) for v in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return tuple(range(start, stop + 1, step))
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad exponent list {text!r}") from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([harness._fmt(v) for v in row])
    return buf.getvalue()


def _config(args, **defaults) -> harness.ExperimentConfig:
    overrides = {
        "K": args.k, "trials": args.trials, "seed": args.seed,
        "snr_exponents": args.snr_exp, "output_path": args.out,
        "jobs": getattr(args, "jobs", None),
    }
    if args.config:
        for key, value in defaults.items():
            overrides.setdefault(key, value)
        return harness.ExperimentConfig.from_json(args.config, **overrides)
    data = dict(defaults)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return harness.ExperimentConfig(**data)


def cmd_simulate(args) -> int:
    config = _config(args, noise=False)
    summary = harness.monte_carlo_decode(config)
    _emit(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n", config.output_path)
    if args.records:
        path = Path(args.records)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(r.to_json() + "\n" for r in summary.records))
    return EXIT_OK if summary.success_rate == 1.0 else EXIT_FAILED


def cmd_slope(args) -> int:
    defaults = {"noise": True}
    if args.trials is None and not args.config:
        defaults["trials"] = 50
    config = _config(args, **defaults)
    est = harness.dof_slope_estimate(config)
    _emit(json.dumps(est.to_dict(), indent=2, sort_keys=True) + "\n", config.output_path)
    return EXIT_OK if est.relative_error <= args.tolerance else EXIT_FAILED


def cmd_region(args) -> int:
    g = args.gamma or harness.FIG4_GAMMA
    rows = [("lp_optimum",) + tuple(dof.dof_region_lp(*g))]
    try:
        rows.append(("closed_form",) + tuple(dof.closed_form_region(*g)))
    except dof.ActiveSetViolationError:
        pass
    rows += [("vertex",) + tuple(v) for v in dof.region_vertices(*g)]
    rows = [r + (sum(r[1:], Fraction(0)),) for r in rows]
    _emit(_csv_text(["kind", "d1", "d2", "d3", "sum"], rows), args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    ks = [args.k] if args.k else range(2, (args.kmax or 10) + 1)
    rows = []
    for K in ks:
        if K < 2:
            raise ArgumentError("K must be at least 2")
        lp, ld, ln = dof.theorem1_distribution(K)
        rows.append((K, dof.achievable_dof(K), dof.mat_dof(K), dof.tandon_bound(K, K),
                     dof.upper_bound_total(dof.RegionSpec(dof.scheme_gammas(K))),
                     lp, ld, ln))
    header = ["K", "achievable", "mat", "tandon_M_eq_K", "upper_bound_at_scheme_gammas",
              "lambda_P", "lambda_D", "lambda_N"]
    _emit(_csv_text(header, rows), args.out)
    return EXIT_OK


def cmd_patterns(args) -> int:
    K = args.k or 3
    if args.icr:
        patterns = [icr_pattern(K)]
    elif args.pattern:
        patterns = [CsitPattern.parse(args.pattern)]
    else:
        patterns = enumerate_synergistic_patterns(K)
    rows = []
    for p in patterns:
        rows.append((str(p),) + state_fractions(p)
                    + tuple(per_user_perfect_fraction(p, i) for i in range(p.K)))
    width = patterns[0].K
    header = ["pattern", "lambda_P", "lambda_D", "lambda_N"] + [f"gamma{i + 1}" for i in range(width)]
    _emit(_csv_text(header, rows), args.out)
    return EXIT_OK


def cmd_export(args) -> int:
    out = Path(args.out or "results")
    kmax = args.kmax or 10
    targets = ["fig2", "fig3", "fig4", "tables"] if args.what == "all" else [args.what]
    for what in targets:
        if what == "tables":
            for path in harness.export_tables(out):
                print(path)
        elif what == "channel":
            K = args.k or 3
            path = out / f"channel_K{K}_seed{args.seed or 0}.csv"
            out.mkdir(parents=True, exist_ok=True)
            sample_channel(K, 2 * K - 1, args.seed or 0).to_csv(path)
            print(path)
        else:
            gamma = args.gamma or harness.FIG4_GAMMA
            print(harness.export_figure_data(what, out / f"{what}.csv", kmax, gamma))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--k", type=int, help="number of users")
    common.add_argument("--trials", type=int, help="independent channel draws")
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("--snr-exp", type=_exponents,
                        help="power exponents e with P = 2^e, e.g. 30:50:5")
    common.add_argument("--out", help="output file (directory for export)")
    common.add_argument("--gamma", type=_gamma, help="perfect-CSIT fractions a,b,c")
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--kmax", type=int, help="largest K for tables")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="icrbc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="noiseless decodability campaign")
    p.add_argument("--records", help="write per-trial JSON lines here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("slope", parents=[common], help="DoF from sum-rate slope")
    p.add_argument("--tolerance", type=float, default=0.02,
                   help="allowed relative error against K^2/(2K-1)")
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("region", parents=[common], help="3-user region LP and vertices")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("bounds", parents=[common], help="closed-form DoF values")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("patterns", parents=[common], help="CSIT pattern enumeration")
    p.add_argument("--icr", action="store_true", help="print the scheme pattern for --k")
    p.add_argument("--pattern", help="fractions of a given pattern, e.g. NDD,DND,DDN,PPN,PNP")
    p.set_defaults(func=cmd_patterns)

    p = sub.add_parser("export", parents=[common], help="write figure and table CSVs")
    p.add_argument("what", nargs="?", default="all",
                   choices=["all", "fig2", "fig3", "fig4", "tables", "channel"])
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ArgumentError, UnsupportedError, ValueError) as exc:
        print(f"icrbc: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except IcrError as exc:
        print(f"icrbc: experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
