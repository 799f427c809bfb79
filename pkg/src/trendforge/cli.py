"""Command line front end.

Subcommands: validate, cascade, exposure, tpr, fit, simulate, report.
Outputs are deterministic for a fixed seed and flag set: CSV and JSON are
byte-stable and the SVGs embed no timestamps. Every error prints a
machine-parsable ``error-code: <Code>`` line before the human message;
exit codes are 1 (usage), 2 (data validation), 3 (numerical failure).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import cascade as cascade_mod
from . import causal, exposure, simgen, svg, tpr
from .datastore import Bundle, load_bundle
from .errors import (
    DataError,
    HashtagTooSmall,
    NumericalError,
    TrendforgeError,
    UsageError,
)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("TRENDFORGE_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"TRENDFORGE_JOBS={env!r} is not an integer") from None
    return 1


def _map_hashtags(bundle: Bundle, fn, jobs: int) -> dict:
    hashtags = sorted(bundle.datasets)
    if jobs <= 1 or len(hashtags) <= 1:
        return {h: fn(bundle.datasets[h]) for h in hashtags}
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {h: pool.submit(fn, bundle.datasets[h]) for h in hashtags}
        return {h: futures[h].result() for h in hashtags}


# --- subcommands --------------------------------------------------------


def cmd_validate(args) -> int:
    bundle = load_bundle(args.in_dir)
    n_tweets = sum(len(ds.tweets) for ds in bundle.datasets.values())
    print(f"hashtags: {len(bundle.datasets)}")
    print(f"tweets: {n_tweets}")
    print(f"edges: {bundle.graph.n_edges}")
    print(f"self_edges_dropped: {bundle.graph_stats.self_edges_dropped}")
    print(f"embeddings: {len(bundle.embeddings) if bundle.embeddings else 0}")
    print("ok")
    return 0


def cmd_cascade(args) -> int:
    bundle = load_bundle(args.in_dir)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = _jobs(args)

    sizes = _map_hashtags(bundle, cascade_mod.cascade_sizes, jobs)
    rows = []
    for h in sorted(sizes):
        for root_id, kind, size in sizes[h]:
            rows.append((h, root_id, kind, size))
    _write_csv(
        out / "cascade_sizes.csv",
        ["hashtag", "root_tweet_id", "tweet_type", "size"],
        rows,
    )

    implied = _map_hashtags(
        bundle, lambda ds: cascade_mod.implied_retweets_by_user(ds), jobs
    )
    rows = []
    for h in sorted(implied):
        for user_id in sorted(implied[h]):
            utype, count = implied[h][user_id]
            rows.append((h, user_id, utype, count))
    _write_csv(
        out / "implied_retweets.csv",
        ["hashtag", "user_id", "user_type", "implied_retweets"],
        rows,
    )
    print(f"wrote {out / 'cascade_sizes.csv'} and {out / 'implied_retweets.csv'}")
    return 0


def cmd_exposure(args) -> int:
    bundle = load_bundle(args.in_dir)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = _jobs(args)

    records = _map_hashtags(bundle, exposure.exposure_records, jobs)
    rows = []
    for h in sorted(records):
        for r in records[h]:
            rows.append(
                (h, r.user_id, r.template_exposures, r.normal_exposures,
                 r.classification)
            )
    _write_csv(
        out / "exposure_records.csv",
        ["hashtag", "user_id", "template_exposures", "normal_exposures",
         "classification"],
        rows,
    )

    ecdf_rows = []
    curves_for_svg = {}
    for h in sorted(records):
        for channel in ("template", "normal", "both"):
            curve = exposure.exposure_ecdf(records[h], channel)
            curves_for_svg[f"{h}:{channel}"] = curve
            for x, frac in curve:
                ecdf_rows.append((h, channel, x, frac))
    _write_csv(out / "exposure_ecdf.csv", ["hashtag", "channel", "x", "F"], ecdf_rows)

    eff_rows = []
    summaries = {}
    for h in sorted(bundle.datasets):
        ds = bundle.datasets[h]
        per_user, skipped = exposure.effectiveness_by_user(ds)
        for user_id in sorted(per_user):
            cls, frac = per_user[user_id]
            eff_rows.append((h, user_id, cls, frac))
        summary = exposure.effectiveness_summary(
            ds, n_permutations=args.permutations, seed=args.seed
        )
        summaries[h] = {
            "mean_by_class": summary.mean_by_class,
            "n_by_class": summary.n_by_class,
            "difference": summary.difference,
            "permutation_p_value": summary.p_value,
            "n_permutations": summary.n_permutations,
            "users_without_followers": summary.no_follower_users,
            "single_exposure_fraction": exposure.single_exposure_fraction(
                records[h]
            ),
        }
    _write_csv(
        out / "effectiveness.csv",
        ["hashtag", "user_id", "classification", "fraction"],
        eff_rows,
    )
    _write_json(out / "exposure_summary.json", summaries)

    if args.svg:
        (out / "exposure_ecdf.svg").write_text(
            svg.ecdf_plot(curves_for_svg, "Exposures before first hashtag use",
                          "prior exposures"),
            encoding="utf-8",
        )
    print(f"wrote exposure outputs to {out}")
    return 0


def cmd_tpr(args) -> int:
    bundle = load_bundle(args.in_dir, require_embeddings=True)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = tpr.TprConfig(
        min_unique=args.min_unique, neighborhood_bp=args.neighborhood_bp
    )
    jobs = _jobs(args)

    def run_one(ds):
        unique, dropped = tpr.clean_tweets(ds)
        if len(unique) < config.min_unique:
            return ("skipped", len(unique), dropped)
        results = tpr.compute_tpr(unique, bundle.embeddings, config)
        return ("ok", unique, results, dropped)

    outcomes = _map_hashtags(bundle, run_one, jobs)
    skipped = {h: v for h, v in outcomes.items() if v[0] == "skipped"}
    done = {h: v for h, v in outcomes.items() if v[0] == "ok"}
    for h in sorted(skipped):
        print(
            f"skipped {h}: {skipped[h][1]} unique tweets "
            f"< --min-unique {config.min_unique}",
            file=sys.stderr,
        )
    if not done:
        sizes = {h: v[1] for h, v in skipped.items()}
        smallest = min(sizes.values()) if sizes else 0
        raise HashtagTooSmall(smallest, config.min_unique)

    rows = []
    ecdf_rows = []
    exemplar_lines = []
    for h in sorted(done):
        _, unique, results, _ = done[h]
        text_of = {c.tweet_id: c.cleaned_text for c in unique}
        for r in results:
            rows.append(
                (h, r.tweet_id, int(r.is_template), r.k, r.raw_tpr,
                 "" if r.normalized_tpr is None else r.normalized_tpr)
            )
        for label, curve in sorted(tpr.tpr_distribution(results).items()):
            for x, frac in curve:
                ecdf_rows.append((h, label, x, frac))
        n_templates = sum(1 for r in results if r.is_template)
        m = min(args.exemplars, n_templates)
        if m > 0:
            exemplar_lines.append(f"# {h}")
            for r in tpr.low_tpr_exemplars(results, m):
                exemplar_lines.append(
                    f"{r.tweet_id}\traw_tpr={_fmt(r.raw_tpr)}\t{text_of[r.tweet_id]}"
                )
    _write_csv(
        out / "tpr.csv",
        ["hashtag", "tweet_id", "is_template", "k", "raw_tpr", "normalized_tpr"],
        rows,
    )
    _write_csv(out / "tpr_ecdf.csv", ["hashtag", "tweet_type", "x", "F"], ecdf_rows)
    (out / "exemplars.txt").write_text(
        "\n".join(exemplar_lines) + ("\n" if exemplar_lines else ""),
        encoding="utf-8",
    )
    print(f"wrote tpr outputs to {out}")
    return 0


def _model_spec(args) -> causal.ModelSpec:
    strategy = {"earliest": causal.EARLIEST, "donut-hole": causal.DONUT_HOLE}[
        args.strategy
    ]
    outcome = {
        "trending-exposed": causal.TRENDING_EXPOSED_ONLY,
        "all": causal.ALL_NON_ASTROTURFED,
    }[args.outcome]
    return causal.ModelSpec(
        outcome_mode=outcome,
        include_top10=args.include_top10,
        strategy=strategy,
        window=(-args.window_pre, args.window_post),
        bin_seconds=args.bin_seconds,
    )


def cmd_fit(args) -> int:
    bundle = load_bundle(args.in_dir)
    out = Path(args.out_dir if args.out_dir else args.in_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = _model_spec(args)

    classifications = {
        h: exposure.classify_users(ds) for h, ds in bundle.datasets.items()
    }
    panel, skipped = causal.build_panel(bundle.datasets, classifications, spec)
    _write_csv(
        out / "panel.csv",
        ["hashtag", "t", "y", "exposed", "trending", "top10"],
        [(r.hashtag, r.t, r.y, r.exposed, r.trending, r.top10) for r in panel],
    )
    fit = causal.fit_quasipoisson(panel, spec)
    effects = causal.trending_effect_report(fit)
    obj = {
        "coefficients": fit.coefficients,
        "standard_errors": {t: fit.se(t) for t in fit.cov_terms},
        "dispersion": fit.dispersion,
        "deviance": fit.deviance,
        "n_obs": fit.n_obs,
        "n_clusters": fit.n_clusters,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "max_abs_score": fit.max_abs_score,
        "skipped_hashtags": skipped,
        "strategy": spec.strategy,
        "outcome_mode": spec.outcome_mode,
        "window": list(spec.window),
        "bin_seconds": spec.bin_seconds,
        "effects": [
            {
                "term": e.term,
                "estimate": e.estimate,
                "se": e.se,
                "percent_increase": e.percent_increase,
                "ci_low_percent": e.ci_low_percent,
                "ci_high_percent": e.ci_high_percent,
            }
            for e in effects
        ],
    }
    if args.include_top10:
        stat, p = causal.wald_test(
            fit, {causal.T_TRENDING: 1.0, causal.T_TOP10: 1.0}
        )
        obj["top10_total_wald"] = {"statistic": stat, "p_value": p}
    _write_json(out / "fit.json", obj)
    lam = fit.coefficients[causal.T_TRENDING]
    print(f"trending coefficient: {lam:.4f} (se {fit.se(causal.T_TRENDING):.4f})")
    print(f"wrote {out / 'fit.json'}")
    return 0


def cmd_simulate(args) -> int:
    # the simulated span covers the fit subcommand's default event window
    # (24 h before onset to 4 h after) so the two compose out of the box
    config = simgen.SimConfig(
        seed=args.seed,
        lambda_true=args.lambda_true,
        n_users=args.n_users,
        n_participants=args.participants,
        n_templates=args.templates,
        adoption_prob=args.adoption_prob,
        base_trending_rate=args.base_rate,
        trending_duration_s=args.duration,
        uncertainty_s=args.uncertainty,
        retweet_prob=args.retweet_prob,
        turkey_style=args.turkey_style,
        top10_onset_delay_s=args.top10_delay,
        window_pre_s=args.window_pre_s,
        window_post_s=max(0, args.window_post_s - args.duration),
    )
    if args.sim_config:
        overrides = json.loads(Path(args.sim_config).read_text(encoding="utf-8"))
        config = simgen.SimConfig(**{**config.__dict__, **overrides})
    results = simgen.generate_many(config, args.hashtags)
    simgen.write_bundle(results, args.out_dir)
    n_tweets = sum(len(r.dataset.tweets) for r in results)
    print(f"simulated {len(results)} hashtag(s), {n_tweets} tweets -> {args.out_dir}")
    return 0


def _read_csv(path: Path) -> list[dict[str, str]]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        return []
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:] if line]


def cmd_report(args) -> int:
    src = Path(args.in_dir)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report: dict = {"inputs": []}

    sizes_path = src / "cascade_sizes.csv"
    if sizes_path.exists():
        report["inputs"].append(sizes_path.name)
        hist: dict[str, dict[int, int]] = {"template": {}, "normal": {}}
        for row in _read_csv(sizes_path):
            b = hist[row["tweet_type"]]
            size = int(row["size"])
            b[size] = b.get(size, 0) + 1
        series = {k: sorted(v.items()) for k, v in hist.items() if v}
        report["cascade_size_histogram"] = {
            k: [list(p) for p in v] for k, v in series.items()
        }
        if series:
            (out / "cascade_sizes.svg").write_text(
                svg.histogram_plot(series, "Cascade sizes by tweet type",
                                   "retweets per root"),
                encoding="utf-8",
            )

    ecdf_path = src / "exposure_ecdf.csv"
    if ecdf_path.exists():
        report["inputs"].append(ecdf_path.name)
        curves: dict[str, list[tuple[float, float]]] = {}
        for row in _read_csv(ecdf_path):
            curves.setdefault(row["channel"], []).append(
                (float(row["x"]), float(row["F"]))
            )
        report["exposure_zero_fraction"] = {
            ch: next((f for x, f in pts if x == 0.0), 0.0)
            for ch, pts in curves.items()
        }
        (out / "exposure_ecdf.svg").write_text(
            svg.ecdf_plot(curves, "Exposures before first hashtag use",
                          "prior exposures"),
            encoding="utf-8",
        )

    tpr_ecdf_path = src / "tpr_ecdf.csv"
    if tpr_ecdf_path.exists():
        report["inputs"].append(tpr_ecdf_path.name)
        curves = {}
        for row in _read_csv(tpr_ecdf_path):
            curves.setdefault(row["tweet_type"], []).append(
                (float(row["x"]), float(row["F"]))
            )
        (out / "tpr_ecdf.svg").write_text(
            svg.ecdf_plot(curves, "Normalized TPR by tweet type",
                          "normalized TPR"),
            encoding="utf-8",
        )

    fit_path = src / "fit.json"
    if fit_path.exists():
        report["inputs"].append(fit_path.name)
        report["fit"] = json.loads(fit_path.read_text(encoding="utf-8"))

    summary_path = src / "exposure_summary.json"
    if summary_path.exists():
        report["inputs"].append(summary_path.name)
        report["effectiveness"] = json.loads(
            summary_path.read_text(encoding="utf-8")
        )

    _write_json(out / "report.json", report)
    print(f"wrote {out / 'report.json'}")
    return 0


# --- argument plumbing ---------------------------------------------------


def _add_common(sp, with_jobs: bool = True):
    sp.add_argument("--in", dest="in_dir", required=True, help="dataset directory")
    sp.add_argument("--out", dest="out_dir", required=True, help="output directory")
    if with_jobs:
        sp.add_argument("--jobs", type=int, default=None,
                        help="parallel workers (env TRENDFORGE_JOBS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trendforge",
        description="Measure the efficacy of astroturfed trend campaigns",
    )
    parser.add_argument("--config", default=None,
                        help="JSON file with flag defaults (flags win)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("validate", help="load and validate a dataset bundle")
    sp.add_argument("--in", dest="in_dir", required=True)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("cascade", help="reconstruct cascades, write CSVs")
    _add_common(sp)
    sp.set_defaults(fn=cmd_cascade)

    sp = sub.add_parser("exposure", help="exposure counts, classes and curves")
    _add_common(sp)
    sp.add_argument("--permutations", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=20240601,
                    help="seed for the permutation test")
    sp.add_argument("--svg", action="store_true", help="also write ECDF SVG")
    sp.set_defaults(fn=cmd_exposure)

    sp = sub.add_parser("tpr", help="template penetration rates")
    _add_common(sp)
    sp.add_argument("--min-unique", type=int, default=tpr.DEFAULT_MIN_UNIQUE)
    sp.add_argument("--neighborhood-bp", type=int,
                    default=tpr.DEFAULT_NEIGHBORHOOD_BP,
                    help="neighborhood size in basis points of unique tweets")
    sp.add_argument("--exemplars", type=int, default=5)
    sp.set_defaults(fn=cmd_tpr)

    sp = sub.add_parser("fit", help="build the panel and fit the model")
    sp.add_argument("--in", dest="in_dir", required=True)
    sp.add_argument("--out", dest="out_dir", default=None)
    sp.add_argument("--strategy", choices=["earliest", "donut-hole"],
                    default="earliest")
    sp.add_argument("--outcome", choices=["trending-exposed", "all"],
                    default="trending-exposed")
    sp.add_argument("--include-top10", action="store_true")
    sp.add_argument("--window-pre", type=int, default=288,
                    help="bins before onset")
    sp.add_argument("--window-post", type=int, default=48,
                    help="bins from onset on")
    sp.add_argument("--bin-seconds", type=int, default=300)
    sp.set_defaults(fn=cmd_fit)

    sp = sub.add_parser("simulate", help="generate a synthetic campaign bundle")
    sp.add_argument("--out", dest="out_dir", required=True)
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--lambda-true", type=float, default=0.0)
    sp.add_argument("--hashtags", type=int, default=8)
    sp.add_argument("--n-users", type=int, default=20000)
    sp.add_argument("--participants", type=int, default=40)
    sp.add_argument("--templates", type=int, default=10)
    sp.add_argument("--adoption-prob", type=float, default=0.02)
    sp.add_argument("--base-rate", type=float, default=2.0)
    sp.add_argument("--duration", type=int, default=7200)
    sp.add_argument("--uncertainty", type=int, default=0)
    sp.add_argument("--retweet-prob", type=float, default=0.3)
    sp.add_argument("--turkey-style", action="store_true")
    sp.add_argument("--top10-delay", type=int, default=None)
    sp.add_argument("--window-pre-s", type=int, default=86400,
                    help="simulated seconds before trending onset")
    sp.add_argument("--window-post-s", type=int, default=14400,
                    help="simulated seconds after trending onset")
    sp.add_argument("--sim-config", default=None,
                    help="JSON file of SimConfig overrides")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("report", help="collate prior outputs into a bundle")
    sp.add_argument("--in", dest="in_dir", required=True)
    sp.add_argument("--out", dest="out_dir", required=True)
    sp.set_defaults(fn=cmd_report)

    return parser


def _apply_config_file(parser, argv):
    # flags > config file > defaults
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config requires a path")
    config_path = argv[i + 1]
    try:
        overrides = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {config_path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(overrides, dict):
        raise UsageError("config file must hold a JSON object")
    extra = []
    for key, value in sorted(overrides.items()):
        flag = "--" + key.replace("_", "-")
        if flag in argv:
            continue
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        else:
            extra.extend([flag, str(value)])
    # insert config-derived flags after the subcommand
    return argv + extra


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_USAGE if exc.code not in (0, None) else 0
        return args.fn(args)
    except UsageError as exc:
        print(f"error-code: {exc.code}", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"error-code: {exc.code}", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DataError as exc:
        print(f"error-code: {exc.code}", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print("error-code: FileNotFound", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrendforgeError as exc:
        print(f"error-code: {exc.code}", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
