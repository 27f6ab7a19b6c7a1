"""Operator command line: simulate, train, evaluate, tune, serve, render,
replay-digest, suite, and plot.

Every command that writes artifacts also writes a manifest.json capturing
the exact inputs (command, config, seeds, counts, code version) so any
output can be regenerated bit-for-bit.  Report commands render matplotlib
figures next to their CSVs.

Exit codes: 0 success, 2 configuration/validation problems, 1 runtime
failures.
"""

from __future__ import annotations

import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import click

from . import __version__
from .config import ConfigError, WarehouseConfig, default_config, load_config_file
from .doe import (
    BUNDLED_SPACES,
    generate_pairwise,
    load_space,
    run_sweep,
    verify_pairwise,
)
from .metrics import aggregate, write_episode_csv
from .mdp import Env
from .plotting import plot_policy_comparison, plot_sweep, plot_training_curves
from .policies import BASELINE_POLICIES, make_policy
from .render import render_state
from .rl import (
    PRESETS,
    Hyperparameters,
    evaluate as rl_evaluate,
    load_checkpoint,
    save_checkpoint,
    train as rl_train,
)
from .runner import run_episode
from .server import cycle_actions, in_process_digest, serve

CONFIG_ENVVAR = "WARESIM_CONFIG"


def _load_cfg(path: str | None) -> WarehouseConfig:
    if path is None:
        return default_config()
    try:
        return load_config_file(path)
    except FileNotFoundError:
        raise click.UsageError(f"config file not found: {path}")
    except ConfigError as exc:
        raise click.UsageError(f"invalid config: {exc}")


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise click.UsageError(f"seeds must be comma-separated integers, got {text!r}")
    if not seeds:
        raise click.UsageError("at least one seed is required")
    return seeds


def _write_manifest(outdir: Path, command: str, **params) -> None:
    manifest = {"command": command, "version": __version__, **params}
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


config_option = click.option(
    "--config", "config_path", type=click.Path(), default=None,
    envvar=CONFIG_ENVVAR,
    help=f"Config file (YAML); defaults to the stock 6x6 setting. "
         f"Also read from ${CONFIG_ENVVAR}.",
)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Warehouse-management simulation toolkit."""


# -- simulate -----------------------------------------------------------------


def _simulate_seed(args) -> list:
    cfg, policy_name, episodes, seed, checkpoint = args
    if policy_name in BASELINE_POLICIES:
        policy = make_policy(policy_name, seed)
        env = Env(cfg)
        return [run_episode(env, policy, seed + k).metrics for k in range(episodes)]
    loaded = load_checkpoint(checkpoint)
    return rl_evaluate(loaded.network, cfg, policy_name, seed, episodes)


@main.command()
@config_option
@click.option("--policy", type=click.Choice([*BASELINE_POLICIES, "dqn", "vam"]),
              required=True)
@click.option("--episodes", type=int, default=100, show_default=True)
@click.option("--seeds", default="0", show_default=True,
              help="Comma-separated seed list; one batch of episodes per seed.")
@click.option("--checkpoint", type=click.Path(exists=True), default=None,
              help="Trained model (.npz); required for --policy dqn/vam.")
@click.option("--window", type=int, default=100, show_default=True,
              help="Trailing window for the summary statistics.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "outdir", type=click.Path(), default="runs/simulate",
              show_default=True)
def simulate(config_path, policy, episodes, seeds, checkpoint, window, jobs, outdir):
    """Run a policy for full episodes and write metrics CSV + figures."""
    cfg = _load_cfg(config_path)
    seed_list = _parse_seeds(seeds)
    if policy in ("dqn", "vam") and checkpoint is None:
        raise click.UsageError(f"--policy {policy} requires --checkpoint")

    tasks = [(cfg, policy, episodes, seed, checkpoint) for seed in seed_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_seed = list(pool.map(_simulate_seed, tasks))
    else:
        per_seed = [_simulate_seed(t) for t in tasks]

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    all_metrics = []
    for seed, metrics_list in zip(seed_list, per_seed):
        for k, m in enumerate(metrics_list):
            rows.append((k, policy, seed, m))
            all_metrics.append(m)
    csv_path = outdir / "episodes.csv"
    write_episode_csv(csv_path, rows)

    summary = aggregate(all_metrics, min(window, len(all_metrics)))
    with open(outdir / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["field", "mean", "min", "max"])
        for field, stats in summary.items():
            writer.writerow([field, repr(stats["mean"]), repr(stats["min"]),
                             repr(stats["max"])])
    plot_policy_comparison(csv_path, outdir / "metrics.png")
    _write_manifest(outdir, "simulate", config=config_path, policy=policy,
                    episodes=episodes, seeds=seed_list, window=window,
                    checkpoint=checkpoint,
                    outputs=["episodes.csv", "summary.csv", "metrics.png"])
    click.echo(f"wrote {csv_path} ({len(rows)} episodes), summary.csv, metrics.png")


# -- train --------------------------------------------------------------------


def _resolve_hp(preset: str | None, hyperparams: str | None,
                steps: int | None) -> Hyperparameters:
    if preset and hyperparams:
        raise click.UsageError("--preset and --hyperparams are mutually exclusive")
    if hyperparams:
        import yaml

        raw = yaml.safe_load(Path(hyperparams).read_text(encoding="utf-8")) or {}
        if "hidden_sizes" in raw:
            raw["hidden_sizes"] = tuple(raw["hidden_sizes"])
        try:
            hp = Hyperparameters(**raw)
        except TypeError as exc:
            raise click.UsageError(f"bad hyperparameters file: {exc}")
    else:
        hp = PRESETS[preset or "default-dqn"]
    if steps is not None:
        hp = Hyperparameters(**{**asdict(hp), "max_training_steps": steps,
                                "hidden_sizes": hp.hidden_sizes})
    try:
        return hp.validate()
    except ValueError as exc:
        raise click.UsageError(f"invalid hyperparameters: {exc}")


def _train_seed(args):
    cfg, hp, variant, seed = args
    return rl_train(cfg, hp, variant, seed)


@main.command()
@config_option
@click.option("--variant", type=click.Choice(["dqn", "vam"]), default="vam",
              show_default=True)
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
              help="Named hyperparameter preset.")
@click.option("--hyperparams", type=click.Path(exists=True), default=None,
              help="YAML file overriding Hyperparameters fields.")
@click.option("--steps", type=int, default=None,
              help="Override max_training_steps.")
@click.option("--seeds", default="0", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "outdir", type=click.Path(), default="runs/train",
              show_default=True)
def train(config_path, variant, preset, hyperparams, steps, seeds, jobs, outdir):
    """Train the value-based learner; write checkpoints, curves, figures."""
    cfg = _load_cfg(config_path)
    hp = _resolve_hp(preset, hyperparams, steps)
    seed_list = _parse_seeds(seeds)

    tasks = [(cfg, hp, variant, seed) for seed in seed_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_train_seed, tasks))
    else:
        results = [_train_seed(t) for t in tasks]

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for seed, result in zip(seed_list, results):
        save_checkpoint(outdir / f"checkpoint-seed{seed}.npz", result)
        with open(outdir / f"curve-seed{seed}.csv", "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "score", "epsilon", "loss"])
            for pt in result.curve:
                writer.writerow([pt.episode, repr(pt.score), repr(pt.epsilon),
                                 "" if pt.loss is None else repr(pt.loss)])

    episodes = min(len(r.curve) for r in results)
    merged = outdir / "curves.csv"
    with open(merged, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "mean_score", "min_score", "max_score"])
        for e in range(episodes):
            scores = [r.curve[e].score for r in results]
            writer.writerow([e, repr(sum(scores) / len(scores)),
                             repr(min(scores)), repr(max(scores))])
    plot_training_curves(merged, outdir / "training_curves.png",
                         title=f"{variant} training score ({len(seed_list)} runs)")
    _write_manifest(outdir, "train", config=config_path, variant=variant,
                    preset=preset, hyperparams_file=hyperparams,
                    hyperparameters=asdict(hp), seeds=seed_list,
                    outputs=[f"checkpoint-seed{s}.npz" for s in seed_list]
                    + [f"curve-seed{s}.csv" for s in seed_list]
                    + ["curves.csv", "training_curves.png"])
    click.echo(f"trained {len(seed_list)} run(s); wrote {merged} and training_curves.png")


# -- evaluate -----------------------------------------------------------------


@main.command()
@config_option
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--episodes", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "outdir", type=click.Path(), default="runs/evaluate",
              show_default=True)
def evaluate(config_path, checkpoint, episodes, seed, outdir):
    """Greedy evaluation of a trained checkpoint."""
    cfg = _load_cfg(config_path)
    loaded = load_checkpoint(checkpoint)
    metrics = rl_evaluate(loaded.network, cfg, loaded.variant, seed, episodes)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "episodes.csv"
    write_episode_csv(csv_path, [(k, loaded.variant, seed, m)
                                 for k, m in enumerate(metrics)])
    plot_policy_comparison(csv_path, outdir / "metrics.png")
    _write_manifest(outdir, "evaluate", config=config_path, checkpoint=checkpoint,
                    episodes=episodes, seed=seed, variant=loaded.variant,
                    outputs=["episodes.csv", "metrics.png"])
    scores = [m.score for m in metrics]
    click.echo(f"mean score {sum(scores) / len(scores):.2f} over {episodes} episodes; "
               f"wrote {csv_path}")


# -- tune ---------------------------------------------------------------------


def _space_from_arg(space_arg: str):
    if space_arg in BUNDLED_SPACES:
        return BUNDLED_SPACES[space_arg]()
    try:
        return load_space(space_arg)
    except FileNotFoundError:
        raise click.UsageError(
            f"--space must be one of {sorted(BUNDLED_SPACES)} or a YAML file, "
            f"got {space_arg!r}")
    except (ValueError, KeyError) as exc:
        raise click.UsageError(f"bad parameter-space file: {exc}")


def _sweep_columns(rows):
    names = []
    for row in rows:
        for name in row.assignment:
            if name not in names:
                names.append(name)
    return names


@main.command()
@config_option
@click.option("--space", "space_arg", default="dqn", show_default=True,
              help=f"Bundled space ({', '.join(sorted(BUNDLED_SPACES))}) or a YAML file.")
@click.option("--variant", type=click.Choice(["dqn", "vam"]), default="vam",
              show_default=True)
@click.option("--train-steps", type=int, default=4000, show_default=True,
              help="Training steps per combination (desk scale).")
@click.option("--window", type=int, default=None,
              help="Trailing episodes ranked on; defaults to all.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "outdir", type=click.Path(), default="runs/tune",
              show_default=True)
def tune(config_path, space_arg, variant, train_steps, window, seed, outdir):
    """Pairwise hyperparameter sweep: train each suite combination and rank
    by mean trailing score.  vf_coef/clip levels only matter to externally
    trained agents and are carried through unchanged."""
    cfg = _load_cfg(config_path)
    space = _space_from_arg(space_arg)

    def runner(assignment, combo_seed):
        fields = {**asdict(PRESETS["default-dqn"]),
                  "hidden_sizes": PRESETS["default-dqn"].hidden_sizes,
                  "max_training_steps": train_steps}
        fields.update(assignment)
        result = rl_train(cfg, Hyperparameters(**fields).validate(), variant,
                          combo_seed)
        return [m.score for m in result.episode_metrics]

    rows = run_sweep(space, runner, seed=seed, window=window)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    param_names = _sweep_columns(rows)
    csv_path = outdir / "sweep.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["combination", *param_names, "mean_score", "min_score",
                         "max_score", "error"])
        for row in rows:
            label = ",".join(f"{n}={row.assignment[n]}" for n in param_names)
            writer.writerow([
                label,
                *[row.assignment.get(n) for n in param_names],
                "" if row.mean_score is None else repr(row.mean_score),
                "" if row.min_score is None else repr(row.min_score),
                "" if row.max_score is None else repr(row.max_score),
                row.error or "",
            ])
    plot_sweep(csv_path, outdir / "sweep.png")
    _write_manifest(outdir, "tune", config=config_path, space=space_arg,
                    variant=variant, train_steps=train_steps, seed=seed,
                    window=window, outputs=["sweep.csv", "sweep.png"])
    best = next((r for r in rows if r.mean_score is not None), None)
    if best:
        click.echo(f"best: {best.assignment} mean score {best.mean_score:.2f}")
    click.echo(f"wrote {csv_path} and sweep.png")


# -- suite --------------------------------------------------------------------


@main.command()
@click.option("--space", "space_arg", required=True,
              help=f"Bundled space ({', '.join(sorted(BUNDLED_SPACES))}) or a YAML file.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default="suite.csv",
              show_default=True)
def suite(space_arg, seed, out_path):
    """Emit a pairwise combination suite as CSV (verified for coverage)."""
    space = _space_from_arg(space_arg)
    generated = generate_pairwise(space, seed)
    ok, missing = verify_pairwise(space, generated)
    if not ok:
        raise click.ClickException(f"generated suite misses pairs: {sorted(missing)}")
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["combination", *space.names])
        for k, assignment in enumerate(generated.assignments):
            writer.writerow([k, *[assignment[n] for n in space.names]])
    click.echo(f"wrote {out_path}: {len(generated)} combinations covering "
               f"{space.pair_count()} pairs")


# -- serve --------------------------------------------------------------------


@main.command(name="serve")
@config_option
@click.option("--bind", default="127.0.0.1:7777", show_default=True,
              help="host:port; port 0 picks an ephemeral port.")
def serve_cmd(config_path, bind):
    """Serve environments over the line-JSON protocol (one session per
    connection)."""
    cfg = _load_cfg(config_path)
    try:
        host, port_text = bind.rsplit(":", 1)
        port = int(port_text)
    except ValueError:
        raise click.UsageError(f"--bind must be host:port, got {bind!r}")
    serve(cfg, host, port,
          announce=lambda p: click.echo(f"listening on {host}:{p}"))


# -- render -------------------------------------------------------------------


@main.command()
@config_option
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--steps", type=int, default=0, show_default=True,
              help="Steps of --policy to run before rendering.")
@click.option("--policy", type=click.Choice(BASELINE_POLICIES), default="ehp",
              show_default=True)
def render(config_path, seed, steps, policy):
    """Print the world as a text grid."""
    cfg = _load_cfg(config_path)
    env = Env(cfg)
    env.reset(seed)
    chooser = make_policy(policy, seed)
    for _ in range(steps):
        if env.done:
            break
        env.step(chooser(env.state))
    click.echo(render_state(env.state))


# -- replay-digest ------------------------------------------------------------


@main.command(name="replay-digest")
@config_option
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--steps", type=int, default=100, show_default=True,
              help="Length of the stock cycling action sequence.")
@click.option("--actions", default=None,
              help="Explicit comma-separated flat action indices (overrides --steps).")
def replay_digest(config_path, seed, steps, actions):
    """Print the canonical trajectory digest for a seeded action sequence
    (used to check remote clients against the in-process environment)."""
    cfg = _load_cfg(config_path)
    if actions is not None:
        try:
            sequence = [int(a) for a in actions.replace(" ", "").split(",") if a]
        except ValueError:
            raise click.UsageError(f"--actions must be integers, got {actions!r}")
        bad = [a for a in sequence if not 0 <= a < cfg.action_count]
        if bad:
            raise click.UsageError(f"actions out of range {bad}")
    else:
        sequence = cycle_actions(steps, cfg.action_count)
    click.echo(in_process_digest(cfg, seed, sequence))


# -- plot ---------------------------------------------------------------------


@main.command(name="plot")
@click.argument("kind", type=click.Choice(["curves", "metrics", "sweep"]))
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("-o", "--out", "out_path", type=click.Path(), required=True)
def plot_cmd(kind, csv_path, out_path):
    """Render a figure from a previously written CSV."""
    try:
        if kind == "curves":
            plot_training_curves(csv_path, out_path)
        elif kind == "metrics":
            plot_policy_comparison(csv_path, out_path)
        else:
            plot_sweep(csv_path, out_path)
    except (KeyError, ValueError) as exc:
        raise click.ClickException(f"could not plot {csv_path}: {exc}")
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    sys.exit(main())
