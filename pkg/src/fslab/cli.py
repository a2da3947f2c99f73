"""Command-line entry point.

Subcommands: evaluate, sweep-k, mmc-report, verify-theory, transform-table,
synth-gen. Exit codes: 0 success, 1 failed check, 2 usage/config error,
3 I/O error. Every subcommand is deterministic given its flags.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import analysis, plots, theory
from .core import (DatasetFormatError, DatasetValidationError, EmbeddingDataset,
                   EvalReport, load_features_binary, load_features_csv,
                   save_features_binary, save_features_csv, save_report)
from .episodes import (BiasInjection, EpisodeConfig, EpisodeConfigError,
                       OracleTransform, gen_gaussian_task, inject_bias,
                       log_uniform_bias, random_task_spec, run_evaluation)
from .oracle import OracleConfig, StatsPreconditionError, apply_oracle, \
    class_stats, oracle_mmc, original_mmc
from .oracle import BinaryTaskStats
from .transforms import (TransformConfigError, TransformDomainError,
                         TransformSpec, apply_channelwise, simple_transform)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


class CliConfigError(ValueError):
    pass


def _load_features(path) -> EmbeddingDataset:
    try:
        with open(path, "rb") as fh:
            magic = fh.read(4)
    except OSError as exc:
        raise OSError(f"cannot open feature file {path}: {exc}") from exc
    if magic == b"FSLF":
        return load_features_binary(path)
    return load_features_csv(path)


def _parse_float_list(text) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise CliConfigError(f"bad numeric list {text!r}: {exc}") from exc


def _transform_from_args(args):
    if args.transform == "oracle":
        return OracleTransform(OracleConfig(alpha=args.alpha,
                                            epsilon=args.epsilon))
    return TransformSpec(kind=args.transform, k=args.k, a=args.a, r=args.r,
                         lambda0=args.lambda0, x0=args.x0)


def _add_transform_flags(p):
    p.add_argument("--transform", default="none",
                   choices=["none", "simple", "extended", "power", "log",
                            "piecewise", "offset", "oracle"],
                   help="channel transform applied to all features (default none)")
    p.add_argument("--k", type=float, default=1.3,
                   help="transform exponent (default 1.3)")
    p.add_argument("--a", type=float, default=1.0, help="log transform slope")
    p.add_argument("--r", type=float, default=0.0, help="offset transform constant")
    p.add_argument("--lambda0", type=float, default=0.02,
                   help="piecewise switch point")
    p.add_argument("--x0", type=float, default=0.05, help="piecewise peak position")
    p.add_argument("--alpha", type=float, default=50.0,
                   help="oracle cap ratio (default 50)")
    p.add_argument("--epsilon", type=float, default=1e-8,
                   help="oracle degeneracy floor")


def _add_episode_flags(p):
    p.add_argument("--n-way", type=int, default=5)
    p.add_argument("--k-shot", type=int, default=5)
    p.add_argument("--m-query", type=int, default=15,
                   help="queries per class (default 15)")
    p.add_argument("--episodes", type=int, default=10000,
                   help="episodes per run (default 10000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classifier", default="ncc", choices=["ncc", "lc"])
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("FSLAB_THREADS", "1")),
                   help="episode evaluation threads (FSLAB_THREADS overrides "
                        "the default)")


def _echo_from_args(args, keys):
    return {key: getattr(args, key) for key in keys}


_ECHO_KEYS = ("transform", "k", "a", "r", "lambda0", "x0", "alpha", "epsilon",
              "n_way", "k_shot", "m_query", "episodes", "classifier")


def _run_single_eval(dataset, args, seed):
    cfg = EpisodeConfig(args.n_way, args.k_shot, args.m_query, args.episodes,
                        seed)
    transform = _transform_from_args(args)
    echo = _echo_from_args(args, _ECHO_KEYS)
    echo["features"] = str(args.features)
    return run_evaluation(dataset, cfg, transform, args.classifier,
                          threads=args.threads, config_echo=echo)


def cmd_evaluate(args) -> int:
    dataset = _load_features(args.features)
    seeds = ([int(s) for s in args.seed_list.split(",")]
             if args.seed_list else [args.seed])
    reports = []
    for seed in seeds:
        report = _run_single_eval(dataset, args, seed)
        reports.append(report)
        out = args.output
        if len(seeds) > 1:
            root, ext = os.path.splitext(out)
            out = f"{root}.seed{seed}{ext or '.json'}"
        save_report(report, out)
        print(f"seed {seed}: accuracy {report.mean_accuracy:.4f} "
              f"± {report.ci95_halfwidth:.4f} -> {out}")
    if len(reports) > 1:
        means = [r.mean_accuracy for r in reports]
        sd = float(np.std(means, ddof=1))
        hw = 1.96 * sd / np.sqrt(len(means))
        print(f"across {len(means)} seeds: {np.mean(means):.4f} ± {hw:.4f}")
    return EXIT_OK


def cmd_sweep_k(args) -> int:
    ks = sorted(_parse_float_list(args.k_list))
    if not ks:
        raise CliConfigError("--k-list must contain at least one value")
    dataset = _load_features(args.features)
    rows = []
    for k in ks:
        args.k = k
        report = _run_single_eval(dataset, args, args.seed)
        rows.append((k, report.mean_accuracy, report.ci95_halfwidth))
        print(f"k={k:g}: accuracy {report.mean_accuracy:.4f} "
              f"± {report.ci95_halfwidth:.4f}")
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        fh.write("k,mean_accuracy,ci95_halfwidth\n")
        for k, mean, ci in rows:
            fh.write(f"{k:.17g},{mean:.17g},{ci:.17g}\n")
    if not args.no_plot:
        png = os.path.splitext(args.output)[0] + ".png"
        plots.plot_sweep(rows, png)
        print(f"figure -> {png}")
    return EXIT_OK


def _oracle_image_level(dataset, cfg: OracleConfig) -> float | None:
    # The oracle weighting is pair-specific, so a dataset-wide image-level
    # distance is only defined when there is exactly one pair.
    names = dataset.class_names
    if len(names) != 2:
        return None
    stats = BinaryTaskStats(class_stats(dataset.classes[names[0]]),
                            class_stats(dataset.classes[names[1]]))
    omega_o = original_mmc(stats, cfg.epsilon)
    omega = oracle_mmc(stats, cfg)
    dists = []
    for mat in dataset.classes.values():
        fb = apply_oracle(mat, omega, omega_o)
        na = mat / np.abs(mat).sum(axis=1, keepdims=True)
        nb = fb / np.abs(fb).sum(axis=1, keepdims=True)
        dists.extend(np.mean((na - nb) ** 2, axis=1).tolist())
    return float(np.mean(dists))


def cmd_mmc_report(args) -> int:
    mode_after = analysis.MMCMode(
        args.mode, k=args.k,
        oracle_config=OracleConfig(alpha=args.alpha, epsilon=args.epsilon))
    mode_before = analysis.MMCMode("original")
    lines = []

    if args.features:
        dataset = _load_features(args.features)
        rows = analysis.mmc_channel_table(dataset, mode_before, mode_after)
        channels_csv = args.output + "_channels.csv"
        with open(channels_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write("channel,mmc_before,mmc_after\n")
            for ch, before, after in rows:
                fh.write(f"{ch},{before:.17g},{after:.17g}\n")
        print(f"channel MMC table -> {channels_csv}")
        if not args.no_plot:
            png = args.output + "_channels.png"
            plots.plot_mmc_scatter(rows, png)
            print(f"figure -> {png}")

        before = analysis.dataset_mmc(dataset, mode_before)
        after = analysis.dataset_mmc(dataset, mode_after)
        lines.append(("dataset", "normalized_msd",
                      analysis.dataset_level_distance(before, after)))
        lines.append(("task", "msd_x1e6",
                      1e6 * analysis.task_level_distance(dataset, mode_before,
                                                         mode_after)))
        if args.mode == "simple":
            img = analysis.image_level_distance(
                dataset, TransformSpec("none"), TransformSpec("simple", k=args.k))
            lines.append(("image", "msd_x1e6", 1e6 * img))
        elif args.mode == "oracle":
            img = _oracle_image_level(dataset, mode_after.oracle_config)
            if img is not None:
                lines.append(("image", "msd_x1e6", 1e6 * img))

    if args.pair_file:
        vectors = np.loadtxt(args.pair_file, delimiter=",", ndmin=2)
        if vectors.shape[0] % 2:
            raise CliConfigError("--pair-file must contain an even number of rows")
        for i in range(0, vectors.shape[0], 2):
            x, y = vectors[i], vectors[i + 1]
            lines.append((f"pair{i // 2}", "normalized_msd",
                          analysis.normalized_msd(x, y)))
            lines.append((f"pair{i // 2}", "msd", analysis.msd(x, y)))

    if not lines:
        raise CliConfigError("mmc-report needs --features and/or --pair-file")
    distances_csv = args.output + "_distances.csv"
    with open(distances_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write("level,measure,value\n")
        for level, measure, value in lines:
            fh.write(f"{level},{measure},{value:.17g}\n")
            print(f"{level:10s} {measure:16s} {value:.6g}")
    print(f"distance table -> {distances_csv}")
    return EXIT_OK


def cmd_verify_theory(args) -> int:
    if args.trials < 100_000:
        print("warning: fewer than 1e5 trials makes the 3/sqrt(trials) "
              "margins loose", file=sys.stderr)
    only = args.only.split(",") if args.only else None
    if only:
        unknown = set(only) - set(theory.CHECK_FAMILIES)
        if unknown:
            raise CliConfigError(f"unknown check families: {sorted(unknown)}")
    results = theory.run_all(trials=args.trials, seed=args.seed, only=only)
    print(theory.format_table(results))
    if args.output:
        from .core import _json_value

        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(_json_value([r.as_dict() for r in results]) + "\n")
        print(f"check report -> {args.output}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_transform_table(args) -> int:
    ks = sorted(_parse_float_list(args.k_list))
    if not ks:
        raise CliConfigError("--k-list must contain at least one value")
    if args.lambda_max <= args.lambda_min or args.lambda_step <= 0:
        raise CliConfigError("invalid lambda range")
    n_steps = int(round((args.lambda_max - args.lambda_min) / args.lambda_step))
    grid = [args.lambda_min + i * args.lambda_step for i in range(n_steps + 1)]
    columns = {f"simple_k={k:g}": [simple_transform(x, k) for x in grid]
               for k in ks}
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        fh.write("lambda," + ",".join(columns) + "\n")
        for i, x in enumerate(grid):
            vals = ",".join(format(columns[c][i], ".17g") for c in columns)
            fh.write(f"{x:.17g},{vals}\n")
    print(f"{len(grid)} rows x {len(ks)} transform columns -> {args.output}")
    if not args.no_plot:
        png = os.path.splitext(args.output)[0] + ".png"
        plots.plot_transform_curves(grid, columns, png)
        print(f"figure -> {png}")
    return EXIT_OK


def cmd_synth_gen(args) -> int:
    spec = random_task_spec(args.classes, args.d, args.seed,
                            base_mean=args.base_mean,
                            mean_jitter=args.mean_jitter,
                            sigma_frac=args.sigma_frac,
                            margin_rule=not args.no_margin_rule)
    dataset = gen_gaussian_task(spec, args.n_per_class, args.seed)
    if args.bias_spread:
        bias = log_uniform_bias(args.d, args.bias_spread, args.bias_seed)
        dataset = inject_bias(dataset, bias)
    if args.format == "binary":
        save_features_binary(dataset, args.output)
    else:
        save_features_csv(dataset, args.output)
    print(f"{dataset.n_vectors} vectors ({args.classes} classes, d={args.d}) "
          f"-> {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fslab",
        description="Feature-space few-shot classification laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="episodic evaluation of one transform")
    p.add_argument("--features", required=True, help="CSV or binary feature file")
    _add_transform_flags(p)
    _add_episode_flags(p)
    p.add_argument("--output", required=True, help="JSON report path")
    p.add_argument("--seed-list", default=None,
                   help="comma list of seeds; loops the whole evaluation")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-k", help="accuracy sweep over transform exponents")
    p.add_argument("--features", required=True)
    p.add_argument("--k-list", required=True,
                   help="comma list of k values, e.g. 0.6,0.8,1.0")
    _add_transform_flags(p)
    _add_episode_flags(p)
    p.add_argument("--output", required=True, help="CSV output path")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep_k, transform="simple")

    p = sub.add_parser("mmc-report",
                       help="channel emphasis tables and distance measures")
    p.add_argument("--features", default=None)
    p.add_argument("--mode", default="simple",
                   choices=["original", "simple", "oracle"],
                   help="the 'after' MMC mode (before is always original)")
    p.add_argument("--k", type=float, default=1.3)
    p.add_argument("--alpha", type=float, default=50.0)
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--pair-file", default=None,
                   help="CSV of MMC row pairs to compare directly")
    p.add_argument("--output", required=True, help="output path prefix")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_mmc_report)

    p = sub.add_parser("verify-theory", help="run the numerical theory checks")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", default=None,
                   help=f"comma list of families {theory.CHECK_FAMILIES}")
    p.add_argument("--output", default=None, help="JSON check report path")
    p.set_defaults(func=cmd_verify_theory)

    p = sub.add_parser("transform-table",
                       help="tabulate transform values over an input grid")
    p.add_argument("--k-list", default="1.3")
    p.add_argument("--lambda-min", type=float, default=0.0)
    p.add_argument("--lambda-max", type=float, default=1.0)
    p.add_argument("--lambda-step", type=float, default=0.01)
    p.add_argument("--output", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_transform_table)

    p = sub.add_parser("synth-gen", help="generate a synthetic feature file")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--n-per-class", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-mean", type=float, default=0.05)
    p.add_argument("--mean-jitter", type=float, default=0.15)
    p.add_argument("--sigma-frac", type=float, default=0.25)
    p.add_argument("--no-margin-rule", action="store_true")
    p.add_argument("--bias-spread", type=float, default=None,
                   help="log-uniform channel bias spread (> 1)")
    p.add_argument("--bias-seed", type=int, default=0)
    p.add_argument("--format", default="csv", choices=["csv", "binary"])
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_synth_gen)
    return parser


_CONFIG_ERRORS = (CliConfigError, EpisodeConfigError, TransformConfigError,
                  TransformDomainError, StatsPreconditionError,
                  DatasetFormatError, DatasetValidationError, ValueError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
