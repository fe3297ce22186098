"""Command line interface.

Subcommands: ``fit`` runs the full analysis on a CSV file, ``stat``
converts a single test statistic to S, ``convert`` translates between
S and other effect size measures. Exit codes: 0 success, 2 input or
parse error, 3 fit failure, 4 total bootstrap failure.
"""

from __future__ import annotations

import argparse
import sys

from .bootstrap import BootSpec, write_replicates_csv
from .convert import Rsq2S, S2Rsq, S2d, S2fsq, d2S, fsq2S
from .errors import (
    BootstrapError,
    DataError,
    DesignError,
    FitError,
    FormulaError,
    InferenceError,
)
from .estimators import chisq2S, f2S, interpret, t2S, t2S_alt, z2S, z2S_alt
from .frames import read_csv
from .pipeline import Analysis, ModelSpec
from .plots import render_forest_svg
from .report import _build_report, render_json, render_text

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3
EXIT_BOOTSTRAP = 4


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered not in ("true", "false"):
        raise argparse.ArgumentTypeError("expected 'true' or 'false'")
    return lowered == "true"


def _parse_alphas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}")


def _parse_assignments(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        name = name.strip()
        if not name or not value:
            raise argparse.ArgumentTypeError(f"bad parameter assignment {part!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad numeric value in {part!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resi",
        description="Robust effect size index estimation with bootstrap intervals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="analyze a model fit from a CSV file")
    fit.add_argument("--data", required=True, help="path to the CSV file")
    fit.add_argument("--formula", required=True,
                     help="model formula, e.g. 'charges ~ region * age + sex'")
    fit.add_argument("--reduced", default=None,
                     help="reduced-model formula for the overall test")
    fit.add_argument("--family", default="gaussian",
                     choices=["gaussian", "binomial", "poisson", "nls"])
    fit.add_argument("--nls-params", type=_parse_assignments, default=None,
                     metavar="c=3,z=0.25", help="starting values for nls")
    fit.add_argument("--vcov", default=None,
                     choices=["hc0", "hc1", "hc2", "hc3", "naive"],
                     help="covariance variant (default hc3; nls: sandwich)")
    fit.add_argument("--anova-type", type=int, default=2, choices=[2, 3])
    fit.add_argument("--unbiased", type=_parse_bool, default=True,
                     metavar="true|false")
    fit.add_argument("--boot", default="nonparametric",
                     choices=["nonparametric", "bayes", "none"])
    fit.add_argument("--nboot", type=int, default=1000)
    fit.add_argument("--alpha", type=_parse_alphas, default=(0.05,),
                     metavar="A[,A...]")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--store-boot", default=None, metavar="PATH.csv",
                     help="write one CSV row of S values per successful replicate")
    fit.add_argument("--format", default="text", choices=["text", "json"])
    fit.add_argument("--plot", default=None, metavar="PATH.svg",
                     help="write a forest plot of the coefficient table")

    stat = sub.add_parser("stat", help="convert one test statistic to S")
    stat.add_argument("estimator",
                      choices=["chisq2S", "f2S", "z2S", "z2S-alt", "t2S", "t2S-alt"])
    stat.add_argument("--value", type=float, required=True)
    stat.add_argument("--df", type=int, default=None,
                      help="tested parameters (chisq2S, f2S)")
    stat.add_argument("--rdf", type=int, default=None,
                      help="residual degrees of freedom (f2S)")
    stat.add_argument("--n", type=int, required=True)
    stat.add_argument("-m", type=int, default=None,
                      help="total model parameters (t2S, t2S-alt)")

    conv = sub.add_parser("convert", help="convert between effect size measures")
    conv.add_argument("--from", dest="source", required=True,
                      choices=["d", "fsq", "rsq", "S"])
    conv.add_argument("--to", dest="target", required=True,
                      choices=["d", "fsq", "rsq", "S"])
    conv.add_argument("--value", type=float, required=True)
    conv.add_argument("--pi", type=float, default=0.5,
                      help="group proportion for Cohen's d (default 0.5)")
    return parser


def _run_fit(args) -> int:
    frame = read_csv(args.data)
    if args.family == "nls" and not args.nls_params:
        print("error: --family nls requires --nls-params", file=sys.stderr)
        return EXIT_INPUT
    spec = ModelSpec.of(args.formula, family=args.family, start=args.nls_params)
    vcov = None if args.vcov is None else args.vcov.upper() if args.vcov != "naive" else "naive"
    if args.store_boot and args.boot == "none":
        print("error: --store-boot requires a bootstrap method", file=sys.stderr)
        return EXIT_INPUT

    try:
        analysis = Analysis(spec, frame, reduced=args.reduced, vcov=vcov,
                            anova_type=args.anova_type, unbiased=args.unbiased)
    except InferenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    boot_result = None
    alphas: tuple[float, ...] = ()
    if args.boot != "none":
        from .bootstrap import run_bootstrap

        boot_spec = BootSpec(
            method="bayesian" if args.boot == "bayes" else args.boot,
            nboot=args.nboot,
            alphas=args.alpha,
            seed=args.seed,
            store_replicates=args.store_boot is not None,
        )
        boot_result = run_bootstrap(analysis, spec=boot_spec)
        alphas = boot_spec.alphas
    report = _build_report(analysis, alphas=alphas, boot=boot_result)

    if args.store_boot:
        write_replicates_csv(boot_result, args.store_boot)
    if args.plot:
        rows = report.coefficients or report.anova
        svg = render_forest_svg(rows, show_ci=boot_result is not None)
        with open(args.plot, "w", encoding="utf-8") as handle:
            handle.write(svg)
    print(render_json(report) if args.format == "json" else render_text(report), end="")
    return EXIT_OK


def _run_stat(args) -> int:
    name = args.estimator
    if name in ("chisq2S", "f2S") and args.df is None:
        print(f"error: {name} requires --df", file=sys.stderr)
        return EXIT_INPUT
    if name == "f2S" and args.rdf is None:
        print("error: f2S requires --rdf", file=sys.stderr)
        return EXIT_INPUT
    if name in ("t2S", "t2S-alt") and args.m is None:
        print(f"error: {name} requires -m", file=sys.stderr)
        return EXIT_INPUT
    if name == "chisq2S":
        s = chisq2S(args.value, args.df, args.n)
    elif name == "f2S":
        s = f2S(args.value, args.df, args.rdf, args.n)
    elif name == "z2S":
        s = z2S(args.value, args.n)
    elif name == "z2S-alt":
        s = z2S_alt(args.value, args.n)
    elif name == "t2S":
        s = t2S(args.value, args.n, args.m)
    else:
        s = t2S_alt(args.value, args.n, args.m)
    print(f"S = {s:.6f}")
    print(f"interpretation: {interpret(s)}")
    return EXIT_OK


def _run_convert(args) -> int:
    to_s = {"d": lambda v: d2S(v, args.pi), "fsq": fsq2S, "rsq": Rsq2S,
            "S": lambda v: v}
    from_s = {"d": lambda s: S2d(s, args.pi), "fsq": S2fsq, "rsq": S2Rsq,
              "S": lambda s: s}
    s = to_s[args.source](args.value)
    print(f"{from_s[args.target](s):.6f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    try:
        if args.command == "fit":
            return _run_fit(args)
        if args.command == "stat":
            return _run_stat(args)
        return _run_convert(args)
    except (FormulaError, DataError, DesignError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BootstrapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOOTSTRAP
    except (FitError, InferenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
