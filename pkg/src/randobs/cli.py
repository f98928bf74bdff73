"""Command-line entry point.

    randobs trajectory      [--config F] [--seed S] [--out DIR] [--reps N] [key=value ...]
    randobs mse-sweep       [--eps-list 0.02,0.05,...] ...
    randobs learn-nj        [--nx 40] ...
    randobs bandit-selftest ...

Every run writes ``DIR/manifest`` with the fully resolved configuration (it
parses back to the same config) followed by the generator name as comments.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import logging
import math
from pathlib import Path
import sys

import numpy as np

from randobs import harness
from randobs.config import ConfigError, parse_config
from randobs.records import emit_csv, format_rows, write_text
from randobs.rng import GENERATOR_NAME

log = logging.getLogger("randobs")

EXPERIMENT = {"trajectory": "E1", "mse-sweep": "E2", "learn-nj": "E3", "bandit-selftest": "E3"}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--paper-scale", action="store_true", help="use the full-size E2 settings")
    common.add_argument("--reps", type=int, help="number of repetitions")
    common.add_argument("--workers", type=int, default=1, help="processes for E3 repetitions")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("overrides", nargs="*", metavar="key=value")

    p = argparse.ArgumentParser(prog="randobs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("trajectory", parents=[common], help="E1: fixed vs random single-component observation (L63)")
    sweep = sub.add_parser("mse-sweep", parents=[common], help="E2: MSE against eps (L63)")
    sweep.add_argument("--eps-list", help="comma-separated eps values")
    learn = sub.add_parser("learn-nj", parents=[common], help="E3: UCB1 learning of N_J (L96)")
    learn.add_argument("--nx", type=int, help="L96 dimension")
    st = sub.add_parser("bandit-selftest", parents=[common], help="UCB1 on 3-arm Bernoulli(0.9/0.5/0.1)")
    st.add_argument("--pulls", type=int, default=10_000)
    return p


def resolve_config(args):
    text = args.config.read_text(encoding="utf-8") if args.config else ""
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.reps is not None:
        overrides.append(f"n_reps={args.reps}")
    if getattr(args, "eps_list", None):
        overrides.append(f"eps_list={args.eps_list}")
    if getattr(args, "nx", None):
        overrides.append(f"n_x={args.nx}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
    return parse_config(text, experiment=EXPERIMENT[args.command], full_scale=args.paper_scale,
                        overrides=overrides)


def write_manifest(cfg, out, command):
    extra = [
        f"# command: {command}",
        f"# generator: {GENERATOR_NAME} (numpy {np.__version__})",
        "# streams: SeedSequence(entropy=seed, spawn_key=(rep, role))",
        f"# burn_in_cycles: {cfg.burn_in_cycles}",
    ]
    write_text(out / "manifest", cfg.to_text() + "\n".join(extra) + "\n")


def _f(x):
    return float(x)


def cmd_trajectory(cfg, out, args):
    res = harness.run_experiment_E1(cfg)
    rows = []
    for label, stream in (("fixed", res.fixed), ("random", res.random)):
        for r in stream:
            emit_csv(r.records, out / f"run_{label}_rep{r.run.rep:03d}.csv")
            rows.append((r.run.rep, label, r.diverged, r.diverged_step if r.diverged else -1,
                         _f(r.mean_rmse), _f(r.max_rmse)))
    rows.sort(key=lambda t: (t[0], t[1]))
    write_text(out / "summary.csv", format_rows(
        ("rep", "stream", "diverged", "diverged_cycle", "mean_rmse_after_burn_in", "max_rmse"), rows))
    n_div = sum(r.diverged for r in res.fixed)
    n_track = sum(not r.diverged and r.mean_rmse < 5 for r in res.random)
    print(f"fixed J diverged in {n_div}/{cfg.n_reps} reps; random J tracked (rmse<5) in {n_track}/{cfg.n_reps}")


def cmd_mse_sweep(cfg, out, args):
    res = harness.run_experiment_E2(cfg)
    for i, r in enumerate(res.runs):
        emit_csv(r.records, out / f"run_eps{i // cfg.n_reps}_rep{r.run.rep:03d}.csv")
    write_text(out / "mse.csv", format_rows(
        ("eps", "mse", "n_used", "n_diverged"),
        [(_f(e), _f(m), u, d) for e, m, u, d in zip(res.eps, res.mse, res.n_used, res.n_diverged)]))
    write_text(out / "fit.csv", format_rows(("slope", "intercept", "inversions"),
                                            [(_f(res.slope), _f(res.intercept), res.inversions)]))
    for e, m, d in zip(res.eps, res.mse, res.n_diverged):
        print(f"eps={e:g}  mse={m:.4g}  diverged={d}")
    print(f"log-log slope {res.slope:.4f}")


def _e3_rep(item):
    cfg, rep = item
    return harness.run_learning_rep(cfg, rep)


def cmd_learn_nj(cfg, out, args):
    items = [(cfg, rep) for rep in range(cfg.n_reps)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            reps = list(pool.map(_e3_rep, items))
    else:
        reps = [_e3_rep(it) for it in items]
    res = harness.E3Result(cfg.arm_values, reps)
    burn = cfg.burn_in_cycles
    rows = []
    for r in reps:
        emit_csv(r.records, out / f"run_rep{r.rep:03d}.csv")
        post = [x.rmse for x in r.records[burn:]]
        rows.append((r.rep, r.n_star, r.total_pulls, r.diverged, _f(np.mean(post)) if post else math.nan))
    write_text(out / "reps.csv", format_rows(
        ("rep", "n_star", "total_pulls", "diverged", "mean_rmse_after_burn_in"), rows))
    hist = res.histogram()
    stars = res.n_stars
    write_text(out / "histogram.csv", format_rows(
        ("n_j", "plays", "n_star_count"),
        [(a, int(h), stars.count(a)) for a, h in zip(res.arms, hist)]))
    print(f"N_J* per rep: {stars}; mode {harness.mode_of(stars)}")


def cmd_bandit_selftest(cfg, out, args):
    res = harness.run_bandit_selftest(cfg.seed, cfg.n_reps, args.pulls, c=cfg.c)
    write_text(out / "selftest.csv", format_rows(
        ("seed_index", "best_fraction", "regret", "pseudo_regret"),
        [(i, f, r, p) for i, (f, r, p) in enumerate(zip(res.best_fractions, res.regrets, res.pseudo_regrets))]))
    print(f"mean best-arm fraction {np.mean(res.best_fractions):.4f}; mean regret {np.mean(res.regrets):.1f}")


COMMANDS = {
    "trajectory": cmd_trajectory,
    "mse-sweep": cmd_mse_sweep,
    "learn-nj": cmd_learn_nj,
    "bandit-selftest": cmd_bandit_selftest,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"randobs: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        write_manifest(cfg, args.out, args.command)
        COMMANDS[args.command](cfg, args.out, args)
    except Exception as exc:  # any failure means some repetition did not complete
        log.debug("run failed", exc_info=True)
        print(f"randobs: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
