"""Command-line front end: ``simulate``, ``fit``, ``coverage``, ``subnets``, ``rerun``.

Exit codes: 0 success (an absent MLE is a reported outcome, not a failure),
2 usage or configuration error, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path

from . import experiments
from .errors import DyadErgmError, ParseError, UnsupportedVariantError
from .experiments import build_manifest, config_to_dict, load_coverage_config, run_coverage
from .inference import (
    critical_value,
    fit_mle,
    mean_value_to_natural,
    observed_info_ci,
    wald_ci,
)
from .ingest import (
    INTERPRETATION,
    fit_subnetworks,
    load_network,
    regime_diagnostic,
    write_edge_list,
    write_fits_csv,
    write_regression_csv,
)
from .model import MeanValueTargets, ModelVariant, NaturalParams, Variant
from .rng import Seed
from .sampler import census, sample_network

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3

VARIANTS = [v.value for v in Variant]


class UsageError(Exception):
    pass


def _write_manifest(path, manifest):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_seed(args, argv):
    """Use ``--seed`` or draw one, print it, and pin it into the replay argv."""
    if args.seed is not None:
        return Seed(args.seed), list(argv)
    seed = Seed.fresh()
    print(f"seed={seed.master} (generated)")
    return seed, list(argv) + ["--seed", str(seed.master)]


# -- simulate ------------------------------------------------------------------


def cmd_simulate(args, argv):
    natural = args.alpha is not None
    mean_value = args.mean_degree is not None
    if natural == mean_value:
        raise UsageError("give either --alpha [--beta] or --mean-degree [--mutuals-per-vertex]")
    if natural and args.mutuals_per_vertex is not None:
        raise UsageError("--mutuals-per-vertex goes with --mean-degree, not --alpha")
    if mean_value and args.beta is not None:
        raise UsageError("--beta goes with --alpha, not --mean-degree")
    wants_recip = (
        args.variant == Variant.SPARSE_RECIPROCITY.value
        or args.beta is not None
        or args.mutuals_per_vertex is not None
    )
    if args.no_reciprocity and wants_recip:
        raise UsageError("--no-reciprocity conflicts with --beta/--mutuals-per-vertex/sparse-recip")
    variant = ModelVariant.parse(args.variant, reciprocity=wants_recip)
    if natural:
        params = NaturalParams(args.alpha, args.beta or 0.0)
    else:
        targets = MeanValueTargets(args.mean_degree, args.mutuals_per_vertex or 0.0)
        params = mean_value_to_natural(targets, args.n, variant)

    seed, replay = _resolve_seed(args, argv)
    net = sample_network(params, variant, args.n, seed)
    out = Path(args.out)
    write_edge_list(out, net)
    stats = census(net)
    print(
        f"n_vertices={args.n} s={stats.s} m={stats.m} mean_degree={stats.s / args.n:.6g} "
        f"alpha={params.alpha:.6g} beta={params.beta:.6g} variant={variant}"
    )
    manifest_path = out.with_name(out.name + ".manifest.json")
    config = {
        "n_vertices": args.n,
        "variant": str(variant),
        "alpha": params.alpha,
        "beta": params.beta,
        "mean_degree": args.mean_degree,
        "mutuals_per_vertex": args.mutuals_per_vertex,
    }
    _write_manifest(manifest_path, build_manifest("simulate", config, seed, replay, [str(out)]))
    return EXIT_OK


# -- fit -----------------------------------------------------------------------


def _fmt_ci(ci):
    return f"[{ci.lower:.6g}, {ci.upper:.6g}]"


def cmd_fit(args, argv):
    variant = ModelVariant.parse(args.variant, reciprocity=not args.no_reciprocity)
    if not variant.fittable:
        raise UnsupportedVariantError(
            "sparse-density with reciprocity cannot be fitted: reciprocity vanishes under it "
            "(use --no-reciprocity or --variant sparse-recip)"
        )
    critical_value(args.level)
    net, _ = load_network(args.edges, args.vertices)
    stats = census(net)
    fit = fit_mle(stats, variant)
    print(f"network: n_vertices={net.n_vertices} s={stats.s} m={stats.m}")
    print(f"variant: {variant}")
    rows = []
    if not fit.exists:
        print(f"MLE does not exist: {fit.reason}")
        rows.append(["", "", "", args.level, "", "", "", "false", fit.reason])
    else:
        if variant.is_sparse:
            cis, method = wald_ci(fit, args.level), "plug-in"
        else:
            cis, method = observed_info_ci(fit, args.level), "observed-information"
        names = ("alpha", "beta") if variant.reciprocity else ("alpha",)
        for k, name in enumerate(names):
            est = (fit.params_hat.alpha, fit.params_hat.beta)[k]
            ci = cis[k]
            print(
                f"{name}_hat = {est:.6g}  se = {fit.std_errors[k]:.4g}  "
                f"{100 * args.level:g}% CI {_fmt_ci(ci)} ({method})"
            )
            rows.append([name, repr(est), repr(fit.std_errors[k]), args.level,
                         repr(ci.lower), repr(ci.upper), method, "true", ""])
    if args.out:
        out = Path(args.out)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["parameter", "estimate", "se", "level", "ci_lower", "ci_upper",
                             "ci_method", "exists", "reason"])
            writer.writerows(rows)
        config = {"edges": str(args.edges), "vertices": args.vertices, "variant": str(variant),
                  "level": args.level}
        _write_manifest(out.with_name(out.name + ".manifest.json"),
                        build_manifest("fit", config, None, argv, [str(out)]))
    return EXIT_OK


# -- coverage ------------------------------------------------------------------


def _config_path(name):
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files("dyadergm") / "configs" / (name if name.endswith(".toml") else name + ".toml")
    if bundled.is_file():
        return bundled
    raise OSError(f"config {name!r} not found (neither a file nor a bundled config)")


def cmd_coverage(args, argv):
    path = _config_path(args.config)
    config = load_coverage_config(path, replicates=args.replicates, seed=args.seed)
    threads = experiments.default_threads() if args.threads is None else args.threads
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    report = run_coverage(config, threads=threads)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"coverage-{config.config_id}" if config.config_id else "coverage"
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        report.to_csv(fh)
    true_params = {
        str(s.n_vertices): None if s.params is None else [s.params.alpha, s.params.beta]
        for s in report.sizes
    }
    failures = {str(s.n_vertices): s.error for s in report.sizes if s.error}
    manifest = build_manifest(
        "coverage", config_to_dict(config), config.seed, argv, [str(csv_path)],
        extra={"true_params": true_params, "inversion_failures": failures, "config_path": str(path)},
    )
    _write_manifest(out_dir / f"{stem}.manifest.json", manifest)
    print(report.table())
    print(f"wrote {csv_path}")
    return EXIT_OK


# -- subnets -------------------------------------------------------------------


def cmd_subnets(args, argv):
    variant = ModelVariant.parse(args.variant)
    net, table = load_network(args.edges, args.vertices)
    for level in args.levels:
        table.labels(level)
    fits = fit_subnetworks(net, table, args.levels, variant, include_whole=not args.no_whole)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_fits_csv(out_dir / "fits.csv", fits)
    diag = regime_diagnostic(fits)
    write_regression_csv(out_dir / "regression.csv", diag)
    print(f"subnetworks fitted: {len(fits)} (MLE absent, excluded: {diag.n_excluded})")
    print(f"slope of alpha_hat on log N_v: {diag.slope_alpha.slope:+.3f}")
    print(f"slope of beta_hat on log N_v:  {diag.slope_beta.slope:+.3f}")
    print(f"interpretation: {INTERPRETATION}")
    print(f"verdict: {diag.verdict}")
    print(f"caveat: {diag.caveat}")
    config = {"edges": str(args.edges), "vertices": str(args.vertices), "levels": args.levels,
              "variant": str(variant), "include_whole": not args.no_whole}
    _write_manifest(out_dir / "manifest.json",
                    build_manifest("subnets", config, None, argv,
                                   [str(out_dir / "fits.csv"), str(out_dir / "regression.csv")]))
    return EXIT_OK


# -- rerun ---------------------------------------------------------------------


def cmd_rerun(args, argv):
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    replay = manifest.get("argv")
    if not replay:
        raise UsageError(f"{args.manifest} records no argv to replay")
    return main(replay)


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyadergm",
        description="Dyad-independent ERGMs: sampling, fitting, coverage studies, regime diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample one network and write it as an edge list")
    p.add_argument("--n", type=int, required=True, help="number of vertices")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--mean-degree", type=float, help="target E[s/N]")
    p.add_argument("--mutuals-per-vertex", type=float, help="target E[m/N]")
    p.add_argument("--variant", choices=VARIANTS, default="baseline")
    p.add_argument("--no-reciprocity", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="edge-list file to write")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum likelihood fit of an edge list")
    p.add_argument("edges")
    p.add_argument("--vertices", help="vertex file (id,<levels>...)")
    p.add_argument("--variant", choices=VARIANTS, default="baseline")
    p.add_argument("--no-reciprocity", action="store_true")
    p.add_argument("--level", type=float, default=0.95, help="confidence level")
    p.add_argument("--out", help="CSV file for the estimates")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("coverage", help="Monte Carlo coverage of Wald intervals")
    p.add_argument("config", help="TOML config path or bundled name (table1-config1, table1-config2)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int, help=f"worker processes (default ${experiments.THREADS_ENV} or 1)")
    p.add_argument("--replicates", type=int, help="override the config's replicate count")
    p.add_argument("--seed", type=int, help="override the config's master seed")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("subnets", help="fit every subdivision and regress estimates on log N_v")
    p.add_argument("edges")
    p.add_argument("vertices")
    p.add_argument("--levels", nargs="+", required=True, help="vertex-file columns to split on")
    p.add_argument("--variant", choices=VARIANTS, default="baseline")
    p.add_argument("--no-whole", action="store_true", help="leave the whole network out of the regression")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_subnets)

    p = sub.add_parser("rerun", help="replay the command recorded in a run manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"dyadergm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"dyadergm {args.command}: parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"dyadergm {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except UnsupportedVariantError as exc:
        print(f"dyadergm {args.command}: unsupported variant: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DyadErgmError as exc:
        print(f"dyadergm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
