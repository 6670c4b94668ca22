"""capscan command line: train, eval, replay, compare, serve.

Training runs live in self-describing directories (manifest first, then
stats CSV, checkpoints, and a curves PNG). Evaluation, replay, and the
manual-vs-policy comparison all write delimited output plus a rendered
figure; replay also exports coverage-colored PLY snapshots.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from ..config import (
    ASSETS_DIR,
    bundled_config,
    env_config_from_dict,
    load_env_config,
    load_trainer_config,
)
from ..env import CoverageEnv, EnvConfig, SharedGeometry, read_record, write_record
from ..env.records import config_hash, replay_record
from ..geometry import save_coverage_ply
from ..learn import load_checkpoint, train
from ..learn.checkpoint import restore_trainer_params
from ..learn.train import STATS_HEADER, make_trainer
from . import report

MANIFEST_FORMAT = "capscan-run-manifest"
FORMAT_VERSIONS = {"manifest": 1, "record": 1, "checkpoint": 1, "stats": 1}
DEFAULT_MARKS = (60.0, 120.0, 150.0)


def _resolve_config_path(value: str | None) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    if path.is_file():
        return path
    return bundled_config(value)


def _load_env_config(args) -> EnvConfig:
    path = _resolve_config_path(getattr(args, "config", None))
    if path is None:
        return load_env_config(bundled_config("default_stomach"))
    return load_env_config(path)


def _stats_rows_from_csv(path: Path) -> list[dict]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append({k: (int(row[k]) if k == "step" else float(row[k]))
                         for k in STATS_HEADER})
    return rows


def _write_manifest(out_dir: Path, algorithm: str, seed: int, trainer_cfg,
                    env_cfg: EnvConfig) -> dict:
    env_dict = env_cfg.to_dict()
    blob = {"trainer": trainer_cfg.to_dict(), "env": env_dict}
    digest = config_hash(blob)
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": FORMAT_VERSIONS["manifest"],
        "run_id": f"{algorithm}-s{seed}-{digest[:8]}",
        "algorithm": algorithm,
        "seed": seed,
        "trainer_config": trainer_cfg.to_dict(),
        "env_config": env_dict,
        "config_sha256": digest,
        "format_versions": FORMAT_VERSIONS,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _run_one_training(env_cfg: EnvConfig, geometry, algorithm: str,
                      trainer_cfg, out_dir: Path, quiet: bool) -> list[dict]:
    env = CoverageEnv(env_cfg, geometry=geometry)
    resolved = env.config
    _write_manifest(out_dir, algorithm, trainer_cfg.seed, trainer_cfg, resolved)
    log = None if quiet else (lambda line: print(f"  {line}", flush=True))
    train(env, algorithm, trainer_cfg, out_dir, log=log,
          extra_meta={"env_config": resolved.to_dict()})
    rows = _stats_rows_from_csv(out_dir / "stats.csv")
    if rows:
        report.plot_training_stats(
            rows, out_dir / "training_curves.png",
            f"{algorithm.upper()} lr={trainer_cfg.learning_rate:g} "
            f"seed={trainer_cfg.seed}")
    return rows


def cmd_train(args) -> int:
    env_cfg = _load_env_config(args)
    config_path = _resolve_config_path(args.config)
    overrides = {"learning_rate": args.lr, "max_steps": args.max_steps,
                 "seed": args.seed}
    geometry = SharedGeometry.build(env_cfg.phantom)
    out_root = Path(args.out)

    if args.sweep:
        key, _, raw = args.sweep.partition("=")
        if key != "lr" or not raw:
            print("error: --sweep expects lr=v1,v2,...", file=sys.stderr)
            return 1
        rates = [float(v) for v in raw.split(",")]
        series = {}
        for lr in rates:
            overrides["learning_rate"] = lr
            trainer_cfg = load_trainer_config(args.algo, config_path, **overrides)
            run_dir = out_root / f"lr_{lr:g}"
            print(f"sweep run lr={lr:g} -> {run_dir}", flush=True)
            series[f"{lr:g}"] = _run_one_training(
                env_cfg, geometry, args.algo, trainer_cfg, run_dir, args.quiet)
        curves_path = out_root / "sweep_curves.csv"
        with open(curves_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["algorithm", "lr"] + STATS_HEADER)
            for label, rows in series.items():
                for row in rows:
                    writer.writerow([args.algo, label]
                                    + [repr(row[k]) if isinstance(row[k], float)
                                       else str(row[k]) for k in STATS_HEADER])
        report.plot_sweep(series, out_root / "sweep_curves.png",
                          f"{args.algo.upper()} learning-rate sweep")
        print(f"sweep complete: {curves_path}")
        return 0

    trainer_cfg = load_trainer_config(args.algo, config_path, **overrides)
    _run_one_training(env_cfg, geometry, args.algo, trainer_cfg, out_root,
                      args.quiet)
    print(f"run complete: {out_root}")
    return 0


def _policy_from_checkpoint(ckpt_path, env_cfg_override: EnvConfig | None):
    algorithm, arrays, meta = load_checkpoint(ckpt_path)
    if env_cfg_override is not None:
        env_cfg = env_cfg_override
    elif "env_config" in meta:
        env_cfg = EnvConfig.from_dict(meta["env_config"])
    else:
        raise SystemExit("checkpoint carries no env config; pass --config")
    env = CoverageEnv(env_cfg)
    cfg_dict = dict(meta.get("config", {}))
    if algorithm == "sac":  # no training here: skip the big replay allocation
        cfg_dict["replay_capacity"] = cfg_dict.get("batch_size", 512)
    trainer_cfg = load_trainer_config(algorithm, None, **cfg_dict)
    trainer = make_trainer(env, algorithm, trainer_cfg)
    restore_trainer_params(trainer, arrays)
    return algorithm, env, trainer


def cmd_eval(args) -> int:
    override = None
    if args.config:
        override = load_env_config(_resolve_config_path(args.config))
    algorithm, env, trainer = _policy_from_checkpoint(args.checkpoint, override)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def policy(obs):
        return trainer.act_deterministic(env.normalize_observation(obs))

    finals, lengths, curves = [], [], {}
    coverage_at = {f"{m:g}": [] for m in DEFAULT_MARKS}
    for k in range(args.episodes):
        record = env.run_episode(policy, seed=args.seed + k)
        write_record(record, out_dir / f"episode_{k:03d}.jsonl")
        finals.append(record.final_coverage)
        lengths.append(len(record.steps))
        for key, val in record.coverage_at.items():
            if key in coverage_at and val is not None:
                coverage_at[key].append(val)
        curves[f"episode {k}"] = ([row.sim_time for row in record.steps],
                                  [row.coverage for row in record.steps])
    summary = {
        "format": "capscan-eval-summary",
        "version": 1,
        "algorithm": algorithm,
        "checkpoint": str(args.checkpoint),
        "episodes": args.episodes,
        "seed": args.seed,
        "mean_final_coverage": float(np.mean(finals)),
        "std_final_coverage": float(np.std(finals)),
        "mean_episode_length": float(np.mean(lengths)),
        "coverage_at": {k: (float(np.mean(v)) if v else None)
                        for k, v in coverage_at.items()},
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    report.plot_coverage_curves(curves, out_dir / "eval_coverage.png",
                                f"{algorithm.upper()} deterministic evaluation")
    print(f"mean final coverage {summary['mean_final_coverage']:.2f}% "
          f"over {args.episodes} episodes -> {out_dir}")
    return 0


def cmd_replay(args) -> int:
    record = read_record(args.record)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    marks = [float(v) for v in args.snapshots.split(",")] if args.snapshots else []

    env = CoverageEnv(EnvConfig.from_dict(record.env_config))
    pending = sorted(marks)
    snapshots = []

    def on_step(env_state, row):
        while pending and env_state.sim_time >= pending[0]:
            mark = pending.pop(0)
            path = out_dir / f"coverage_{mark:g}s.ply"
            save_coverage_ply(env_state.mesh, env_state.tracker.visited, path)
            snapshots.append((mark, path, env_state.tracker.current_coverage))

    result = replay_record(record, env=env, on_step=on_step)
    if result.diverged:
        print(f"replay diverged: {result.message}", file=sys.stderr)
        return 1
    # final snapshot regardless of marks
    final_path = out_dir / "coverage_final.ply"
    save_coverage_ply(env.mesh, env.tracker.visited, final_path)

    with open(out_dir / "coverage_vs_time.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "sim_time", "coverage", "reward"])
        for row in record.steps:
            writer.writerow([row.step, repr(row.sim_time), repr(row.coverage),
                             repr(row.reward)])
    report.plot_coverage_curves(
        {"replayed episode": ([r.sim_time for r in record.steps],
                              [r.coverage for r in record.steps])},
        out_dir / "replay_coverage.png", "episode replay", marks=marks or DEFAULT_MARKS)
    print(f"replay verified: {len(record.steps)} steps, zero divergence; "
          f"{len(snapshots) + 1} PLY snapshots -> {out_dir}")
    return 0


def _coverage_at_marks(record, marks):
    out = {}
    for mark in marks:
        value = None
        for row in record.steps:
            if row.sim_time >= mark:
                value = (row.sim_time, row.coverage)
                break
        out[mark] = value
    return out


def cmd_compare(args) -> int:
    manual = read_record(args.manual)
    env_cfg = EnvConfig.from_dict(manual.env_config)
    override = None if args.config is None else load_env_config(
        _resolve_config_path(args.config))
    algorithm, env, trainer = _policy_from_checkpoint(
        args.checkpoint, override or env_cfg)

    seed = manual.seed if args.seed is None else args.seed

    def policy(obs):
        return trainer.act_deterministic(env.normalize_observation(obs))

    drl = env.run_episode(policy, seed=seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    marks = list(DEFAULT_MARKS)
    manual_at = _coverage_at_marks(manual, marks)
    drl_at = _coverage_at_marks(drl, marks)

    def cell(entry):
        return "" if entry is None else f"{entry[1]:.2f}"

    with open(out_dir / "compare.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "manual_coverage_pct", "drl_coverage_pct"])
        for mark in marks:
            writer.writerow([f"{mark:g}", cell(manual_at[mark]), cell(drl_at[mark])])
        writer.writerow(["final",
                         f"{manual.final_coverage:.2f}",
                         f"{drl.final_coverage:.2f}"])

    lines = ["Coverage comparison (manual vs policy control)",
             f"{'Time':>12} | {'Manual':>10} | {'DRL':>10}"]
    lines.append("-" * 40)
    for mark in marks:
        m = cell(manual_at[mark]) or "missing"
        d = cell(drl_at[mark]) or "missing"
        actual = manual_at[mark][0] if manual_at[mark] else mark
        lines.append(f"{actual:>10.2f} s | {m:>10} | {d:>10}")
    lines.append(f"{'final':>12} | {manual.final_coverage:>9.2f}% "
                 f"| {drl.final_coverage:>9.2f}%")
    text = "\n".join(lines) + "\n"
    (out_dir / "compare.txt").write_text(text, encoding="utf-8")
    print(text)

    report.plot_coverage_curves(
        {"manual": ([r.sim_time for r in manual.steps],
                    [r.coverage for r in manual.steps]),
         "policy": ([r.sim_time for r in drl.steps],
                    [r.coverage for r in drl.steps])},
        out_dir / "compare.png", "manual vs policy coverage")
    write_record(drl, out_dir / "drl_episode.jsonl")
    return 0


def cmd_serve(args) -> int:
    from .serve import run_server

    env_cfg = _load_env_config(args)
    return run_server(args.host, args.port, env_cfg, Path(args.records))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capscan",
        description="Capsule-endoscope coverage scanning: simulator, "
                    "trainers, and teleoperation server.")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("train", help="train a policy (or sweep learning rates)",
                       formatter_class=fmt)
    p.add_argument("--algo", choices=["ppo", "sac"], required=True)
    p.add_argument("--config", default=None,
                   help="TOML config file or bundled name "
                        "(default_stomach, accept_sphere)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/latest", help="output run directory")
    p.add_argument("--lr", type=float, default=None,
                   help="override the learning rate")
    p.add_argument("--max-steps", type=int, default=None,
                   help="override total environment steps")
    p.add_argument("--sweep", default=None, metavar="lr=v1,v2,...",
                   help="run one training per learning rate and emit "
                        "combined curves")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint deterministically",
                       formatter_class=fmt)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None,
                   help="override the env config embedded in the checkpoint")
    p.add_argument("--out", default="eval_out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="re-simulate a recorded episode and "
                                      "export coverage artifacts",
                       formatter_class=fmt)
    p.add_argument("--record", required=True)
    p.add_argument("--out", default="replay_out")
    p.add_argument("--snapshots", default="60,120,150",
                   help="comma-separated sim times for PLY snapshots")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("compare", help="manual-session vs policy coverage table",
                       formatter_class=fmt)
    p.add_argument("--manual", required=True, help="teleop session record")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="episode seed for the policy arm "
                        "(default: the manual session's seed)")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="compare_out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="run the teleoperation websocket server",
                       formatter_class=fmt)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--config", default=None)
    p.add_argument("--records", default="teleop_records",
                   help="directory for saved session records")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
