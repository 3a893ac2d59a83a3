"""Command-line pipeline: simulate, dataset, cluster, train, report.

Exit codes: 0 success, 2 user/config error, 3 environment/IO error,
4 numerical divergence.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .a3c import train, write_curve_csv
from .clustering import (cluster_report, fit_action_clusters, prune_negligible,
                         save_cluster_model)
from .config import (ConfigError, ResolvedRun, apply_overrides, load_config,
                     resolve, write_manifest)
from .env import CircuitEnv, measure_band, task_success
from .mesh import mesh_to_dict, validate, vertex_action_space
from .net import DivergedError, NetConfig, save_checkpoint, load_checkpoint
from .perturb import gen_perturbation_dataset, write_dataset_csv
from .touchstone import read_touchstone, write_sweep_csv, write_touchstone

EXIT_OK = 0
EXIT_USER = 2
EXIT_IO = 3
EXIT_DIVERGED = 4


def _prepare(args) -> tuple[ResolvedRun, Path]:
    cfg = load_config(args.config)
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides += [f"training.seed={args.seed}", f"clustering.seed={args.seed}"]
    cfg = apply_overrides(cfg, overrides)
    run = resolve(cfg)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise IOError(f"output directory not writable: {out}: {exc}") from exc
    return run, out


def cmd_simulate(args) -> int:
    run, out = _prepare(args)
    violations = validate(run.mesh)
    if violations:
        for v in violations:
            print(f"invalid mesh: {v}", file=sys.stderr)
        return EXIT_USER
    sweep = run.surrogate.sweep(run.mesh)
    write_touchstone(sweep, out / "sweep.s2p")
    write_sweep_csv(sweep, out / "sweep.csv")
    write_manifest(out, run.config, {"command": "simulate"})
    print(f"wrote {out / 'sweep.s2p'} and {out / 'sweep.csv'}")
    return EXIT_OK


def _dataset(run: ResolvedRun):
    samples, skipped = gen_perturbation_dataset(run.mesh, run.surrogate, run.cluster_deltas)
    return samples, skipped


def cmd_dataset(args) -> int:
    run, out = _prepare(args)
    samples, skipped = _dataset(run)
    write_dataset_csv(samples, out / "dataset.csv")
    write_manifest(out, run.config,
                   {"command": "dataset", "samples": len(samples), "skipped": skipped})
    print(f"wrote {len(samples)} samples ({skipped} rejected geometries skipped)")
    return EXIT_OK


def cmd_cluster(args) -> int:
    run, out = _prepare(args)
    samples, skipped = _dataset(run)
    if run.cluster_k > len(samples):
        print(f"k={run.cluster_k} exceeds sample count {len(samples)}", file=sys.stderr)
        return EXIT_USER
    write_dataset_csv(samples, out / "dataset.csv")
    model = fit_action_clusters(samples, run.cluster_k, run.cluster_seed,
                                n_init=run.cluster_n_init)
    model = prune_negligible(model, run.cluster_tau)
    save_cluster_model(model, out / "clusters.json")
    cluster_report(model, samples, run.frequencies, out)
    write_manifest(out, run.config, {
        "command": "cluster", "samples": len(samples), "skipped": skipped,
        "effective_clusters": model.effective_clusters(),
        "negligible_clusters": [int(j) for j in range(model.k) if model.negligible[j]],
    })
    print(f"{model.k} clusters, effective: {model.effective_clusters()}")
    return EXIT_OK


def cmd_train(args) -> int:
    run, out = _prepare(args)
    init = None
    init_path = run.config.get("training", {}).get("init_checkpoint")
    if init_path:
        init, _, _ = load_checkpoint(init_path)
    if args.baseline:
        clusters = None
        samples = None
        n_actions = len(vertex_action_space(run.mesh))
    else:
        samples, _ = _dataset(run)
        model = fit_action_clusters(samples, run.cluster_k, run.cluster_seed,
                                    n_init=run.cluster_n_init)
        clusters = prune_negligible(model, run.cluster_tau)
        save_cluster_model(clusters, out / "clusters.json")
        n_actions = len(clusters.effective_clusters())

    def env_factory() -> CircuitEnv:
        return CircuitEnv(run.mesh, run.task, run.surrogate, clusters, samples,
                          delta_mm=run.train.delta_rl_mm, weights=run.weights,
                          episode_cap=run.train.episode_cap, grid=run.net_grid)

    net_cfg = NetConfig(grid=run.net_grid, sweep_points=len(run.frequencies),
                        n_actions=n_actions)

    def checkpoint_cb(params, step):
        tmp = out / "checkpoint.npz.tmp"
        save_checkpoint(tmp, params, net_cfg, {"global_step": step})
        tmp.replace(out / "checkpoint.npz")

    result = train(env_factory, net_cfg, run.train, initial_params=init,
                   checkpoint_cb=checkpoint_cb)
    save_checkpoint(out / "checkpoint.npz", result.params, net_cfg,
                    {"global_step": result.total_steps})
    write_curve_csv(result.curve, out / "learning_curve.csv")
    (out / "best_mesh.json").write_text(
        json.dumps(mesh_to_dict(result.best_mesh), indent=1, sort_keys=True) + "\n")
    write_touchstone(result.best_sweep, out / "best_sweep.s2p")
    write_manifest(out, run.config, {
        "command": "train",
        "mode": "baseline" if args.baseline else "clusters",
        "policy_size": n_actions,
        "first_success_step": result.first_success_step,
        "best_return": result.best_return,
        "total_steps": result.total_steps,
        "episodes": result.episodes,
    })
    status = (f"success at step {result.first_success_step}"
              if result.first_success_step is not None else "no success")
    print(f"trained {result.total_steps} steps, {result.episodes} episodes, {status}")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run)
    manifest_path = run_dir / "run_manifest.json"
    if not manifest_path.exists():
        print(f"no run manifest in {run_dir}", file=sys.stderr)
        return EXIT_USER
    manifest = json.loads(manifest_path.read_text())
    task = manifest["config"]["task"]
    summary = {
        "task": task,
        "success": manifest.get("first_success_step") is not None,
        "steps_to_success": manifest.get("first_success_step"),
        "best_return": manifest.get("best_return"),
        "episodes": manifest.get("episodes"),
        "policy_size": manifest.get("policy_size"),
    }
    best = run_dir / "best_sweep.s2p"
    if best.exists():
        sweep = read_touchstone(best)
        f = sweep.frequencies
        band = (f >= task["f1_hz"]) & (f <= task["f2_hz"])
        s11db = sweep.s11_db()
        s21db = sweep.s21_db()
        meas = measure_band(sweep, task.get("kind", "filter"))
        summary["achieved"] = {
            "f0_hz": meas.f0_hz,
            "band_max_s11_db": float(s11db[band].max()) if band.any() else None,
            "band_min_s21_db": float(s21db[band].min()) if band.any() else None,
            "s11_db_at_f0": float(s11db[int(np.argmin(np.abs(f - task["f0_hz"])))]),
        }
    curve = run_dir / "learning_curve.csv"
    if curve.exists():
        summary["learning_curve"] = str(curve)
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=1, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mwdesk",
                                 description="Planar microwave circuit design pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", required=True, help="run configuration JSON")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override training and clustering seeds")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-path config override")

    p = sub.add_parser("simulate", help="sweep the seed mesh, write .s2p and .csv")
    common(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("dataset", help="write the perturbation dataset CSV")
    common(p)
    p.set_defaults(func=cmd_dataset)
    p = sub.add_parser("cluster", help="fit and report typical action clusters")
    common(p)
    p.set_defaults(func=cmd_cluster)
    p = sub.add_parser("train", help="train the design agent")
    common(p)
    p.add_argument("--baseline", action="store_true",
                   help="use raw vertex actions instead of clusters")
    p.set_defaults(func=cmd_train)
    p = sub.add_parser("report", help="summarize a finished run directory")
    p.add_argument("--run", required=True, help="run output directory")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USER
    except DivergedError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except IOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
