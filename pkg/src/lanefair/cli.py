"""Command-line front end: fit, meta, speculate, validate, power, mc."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import counterfactual, report
from .dataset import ParseError, usable_pairs
from .diagnostics import (DEFAULT_THRESHOLD, adjusted_differences,
                          clean_and_refit, validate_model)
from .meta import (MetaError, combine, power_plan, read_summaries, split_half,
                   summaries_from_events)
from .model import FitError
from .simulate import mc_calibration, mc_report_dict

EXIT_OK = 0
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_COMPUTE = 5


class _CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _CliFailure(EXIT_IO, f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _CliFailure(EXIT_IO, f"cannot write {out}: {exc.strerror}") from None


def _load_events(paths):
    from .dataset import parse_event

    events = []
    for path in paths:
        text = _read(path)
        try:
            events.append(parse_event(text))
        except ParseError as exc:
            raise _CliFailure(EXIT_PARSE, f"{path}: {exc}") from None
    return events


def _clean_all(events, lane_policy: str, threshold: float):
    out = []
    for ds in events:
        pairs, warns = usable_pairs(ds, lane_policy)
        try:
            cleaned = clean_and_refit(pairs, threshold, warnings=warns)
        except FitError as exc:
            raise _CliFailure(EXIT_COMPUTE, f"{ds.label}: {exc}") from None
        out.append((ds, pairs, cleaned))
    return out


def cmd_fit(args) -> int:
    events = _load_events(args.files)
    cleaned = _clean_all(events, args.lane_policy, args.threshold)
    rows = [(ds.label, c, len(pairs)) for ds, pairs, c in cleaned]
    if args.format == "json":
        text = report.fit_json(rows)
    elif args.format == "csv":
        text = report.fit_csv(rows)
    else:
        text = report.fit_text(rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_meta(args) -> int:
    if args.summary:
        try:
            summaries = read_summaries(_read(args.summary))
        except MetaError as exc:
            raise _CliFailure(EXIT_PARSE, f"{args.summary}: {exc}") from None
    elif args.files:
        events = _load_events(args.files)
        cleaned = _clean_all(events, args.lane_policy, args.threshold)
        try:
            summaries = summaries_from_events(
                (ds.label, c.pairs_clean) for ds, _, c in cleaned)
        except FitError as exc:
            raise _CliFailure(EXIT_COMPUTE, str(exc)) from None
    else:
        raise _CliFailure(EXIT_PARSE, "meta needs event files or --summary")
    try:
        result = combine(summaries)
    except MetaError as exc:
        raise _CliFailure(EXIT_COMPUTE, str(exc)) from None
    if args.split_half:
        if args.summary:
            raise _CliFailure(EXIT_PARSE, "--split-half needs raw event files")
        contrast = split_half((ds.label, c.pairs_clean) for ds, _, c in cleaned)
        extra = (f"split-half contrast (best - rest): {contrast.combined_delta:+.3f}"
                 f" +- {contrast.combined_se:.3f}\n")
    else:
        extra = ""
    if args.format == "json":
        text = report.meta_json(summaries, result)
    elif args.format == "csv":
        text = report.meta_csv(summaries, result)
    else:
        text = report.meta_text(summaries, result) + extra
    _emit(text, args.out)
    return EXIT_OK


def cmd_speculate(args) -> int:
    text_in = _read(args.file)
    try:
        label, entries = counterfactual.parse_olympic(text_in)
    except ParseError as exc:
        raise _CliFailure(EXIT_PARSE, f"{args.file}: {exc}") from None
    spec = counterfactual.speculate(entries, args.d)
    _emit(report.speculate_render(args.format, label, entries, spec), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    events = _load_events([args.file])
    cleaned = _clean_all(events, args.lane_policy, args.threshold)
    ds, _, c = cleaned[0]
    bandwidth = "silverman" if args.bandwidth == "silverman" else float(args.bandwidth)
    try:
        rep = validate_model(c.pairs_clean, c.fit, bandwidth)
    except ValueError as exc:
        raise _CliFailure(EXIT_COMPUTE, f"{ds.label}: {exc}") from None
    if args.kde_prefix:
        _emit(report.kde_csv(rep.kde_diff), f"{args.kde_prefix}_diff.csv")
        _emit(report.kde_csv(rep.kde_ave), f"{args.kde_prefix}_ave.csv")
    if args.adjusted_out:
        ad = adjusted_differences(c.pairs_clean)
        if args.format == "json":
            _emit(report.adjusted_json(ds.label, ad), args.adjusted_out)
        else:
            _emit(report.adjusted_csv(ad), args.adjusted_out)
    if args.format == "json":
        text = report.validation_json(ds.label, rep)
    elif args.format == "csv":
        text = report.validation_csv(rep)
    else:
        text = report.validation_text(ds.label, rep)
    _emit(text, args.out)
    return EXIT_OK


def cmd_power(args) -> int:
    try:
        spec = power_plan(args.sigma, args.se, args.d, args.alpha)
    except MetaError as exc:
        raise _CliFailure(EXIT_COMPUTE, str(exc)) from None
    if args.format == "json":
        text = json.dumps(report.power_dict(spec), indent=2) + "\n"
    elif args.format == "csv":
        text = ("sigma,target_se,true_d,alpha,N_required,power\n"
                f"{spec.sigma:g},{spec.target_se:g},{spec.true_d:g},"
                f"{spec.alpha:g},{spec.N_required},{spec.power:.4f}\n")
    else:
        text = report.power_text(spec)
    _emit(text, args.out)
    return EXIT_OK


def cmd_mc(args) -> int:
    rep = mc_calibration(n=args.n, reps=args.reps, seed=args.seed,
                         d=args.d, sigma=args.sigma, kappa=args.kappa)
    if args.format == "json":
        text = json.dumps(mc_report_dict(rep), indent=2) + "\n"
    elif args.format == "csv":
        d = mc_report_dict(rep)
        keys = ["n", "reps", "seed", "d_mean", "d_var", "d_var_theory",
                "var_ratio", "sigma2_un_mean", "rho_mean"]
        text = ",".join(keys) + "\n" + ",".join(str(d[k]) for k in keys) + "\n"
    else:
        text = report.mc_text(rep)
    _emit(text, args.out)
    return EXIT_OK


def _common_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p.add_argument("--out", help="write the report here instead of stdout")


def _common_pipeline(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                   help="outlier flag threshold (default %(default)s)")
    p.add_argument("--lane-policy", choices=["warn_day1", "strict"],
                   default="warn_day1", dest="lane_policy",
                   help="handling of same-lane-both-days records")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lanefair",
        description="Lane-advantage analysis of two-day paired 500 m results.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit each event and report estimates + outliers")
    p.add_argument("files", nargs="+", metavar="EVENT_CSV")
    _common_pipeline(p)
    _common_output(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("meta", help="combine per-event estimates")
    p.add_argument("files", nargs="*", metavar="EVENT_CSV")
    p.add_argument("--summary", help="read label,d,se rows instead of fitting")
    p.add_argument("--split-half", action="store_true", dest="split_half",
                   help="also contrast best half vs rest per event")
    _common_pipeline(p)
    _common_output(p)
    p.set_defaults(func=cmd_meta)

    p = sub.add_parser("speculate", help="re-rank a single-run list under a lane swap")
    p.add_argument("file", metavar="OLYMPIC_CSV")
    p.add_argument("--d", type=float, default=0.05,
                   help="lane advantage in seconds (default %(default)s)")
    _common_output(p)
    p.set_defaults(func=cmd_speculate)

    p = sub.add_parser("validate", help="normality and independence checks")
    p.add_argument("file", metavar="EVENT_CSV")
    p.add_argument("--bandwidth", default="silverman",
                   help="'silverman' or a fixed kernel bandwidth")
    p.add_argument("--kde-prefix", dest="kde_prefix",
                   help="write density curves to PREFIX_{diff,ave}.csv")
    p.add_argument("--adjusted-out", dest="adjusted_out",
                   help="write per-skater adjusted lap-time differences here")
    _common_pipeline(p)
    _common_output(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("power", help="sample-size and detection probability")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--se", type=float, required=True, help="target standard error")
    p.add_argument("--d", type=float, default=0.05, help="true difference")
    p.add_argument("--alpha", type=float, default=0.05)
    _common_output(p)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("mc", help="Monte Carlo calibration of the estimator")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--d", type=float, default=0.05)
    p.add_argument("--sigma", type=float, default=0.25)
    p.add_argument("--kappa", type=float, default=0.30)
    _common_output(p)
    p.set_defaults(func=cmd_mc)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliFailure as exc:
        print(f"lanefair: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, MetaError) as exc:
        print(f"lanefair: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FitError as exc:
        print(f"lanefair: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
