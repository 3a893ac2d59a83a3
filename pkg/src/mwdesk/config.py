"""Run configuration: JSON schema validation, overrides, and the run manifest."""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .a3c import TrainConfig
from .env import DesignTask, RewardWeights
from .extract import (FilterCouplingMap, Substrate, SurrogateSolver,
                      default_frequency_grid, make_surrogate)
from .mesh import MeshModel, load_mesh


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "task": {"kind", "f0_hz", "f1_hz", "f2_hz", "insertion_floor_db",
             "return_ceiling_db", "size_bound_mm"},
    "mesh": None,
    "surrogate": {"kind", "substrate", "coupling", "z_ref"},
    "grid": {"n", "lo", "hi"},
    "clustering": {"k", "deltas_mm", "tau", "seed", "n_init"},
    "training": {"workers", "n_step", "gamma", "entropy_beta", "learning_rate",
                 "max_env_steps", "episode_cap", "delta_rl_mm", "seed",
                 "stop_at_success", "checkpoint_every", "init_checkpoint"},
    "reward": {"beta1", "beta2", "beta3", "eps_clamp_hz", "success_bonus",
               "invalid_penalty"},
    "net": {"grid"},
}
_SUB_SCHEMA = {
    "substrate": {"eps_r", "h_mm"},
    "coupling": {"k0", "g0_mm", "tap_base", "tap_slope_per_mm", "f0_hz", "bw_hz"},
}


def validate_config(cfg: dict) -> None:
    unknown = set(cfg) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = {"task", "mesh", "surrogate"} - set(cfg)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    for key, allowed in _SCHEMA.items():
        if key not in cfg or allowed is None:
            continue
        section = cfg[key]
        if not isinstance(section, dict):
            raise ConfigError(f"config section {key!r} must be an object")
        bad = set(section) - allowed
        if bad:
            raise ConfigError(f"unknown keys in {key!r}: {sorted(bad)}")
    for sub, allowed in _SUB_SCHEMA.items():
        section = cfg.get("surrogate", {}).get(sub)
        if section is not None:
            bad = set(section) - allowed
            if bad:
                raise ConfigError(f"unknown keys in surrogate.{sub}: {sorted(bad)}")


def load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validate_config(cfg)
    mesh_path = (p.parent / cfg["mesh"]).resolve()
    if not mesh_path.exists():
        raise ConfigError(f"mesh file not found: {mesh_path}")
    cfg["mesh"] = str(mesh_path)
    return cfg


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply `--set a.b=value` style overrides; values parse as JSON if possible."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        keys = dotted.split(".")
        for k in keys[:-1]:
            if k not in node or not isinstance(node[k], dict):
                raise ConfigError(f"override path {dotted!r} does not exist")
            node = node[k]
        if keys[-1] not in node:
            raise ConfigError(f"override path {dotted!r} does not exist")
        node[keys[-1]] = value
    validate_config(cfg)
    return cfg


@dataclass
class ResolvedRun:
    config: dict
    task: DesignTask
    mesh: MeshModel
    substrate: Substrate
    surrogate: SurrogateSolver
    frequencies: np.ndarray
    weights: RewardWeights
    train: TrainConfig
    cluster_k: int
    cluster_deltas: list[float]
    cluster_tau: float
    cluster_seed: int
    cluster_n_init: int
    net_grid: int


def resolve(cfg: dict) -> ResolvedRun:
    t = cfg["task"]
    bound = t.get("size_bound_mm")
    task = DesignTask(f0_hz=float(t["f0_hz"]), f1_hz=float(t["f1_hz"]),
                      f2_hz=float(t["f2_hz"]),
                      insertion_floor_db=float(t.get("insertion_floor_db", -0.5)),
                      return_ceiling_db=float(t.get("return_ceiling_db", -20.0)),
                      size_bound_mm=None if bound is None else tuple(bound),
                      kind=t.get("kind", "filter"))
    mesh = load_mesh(cfg["mesh"])
    sur = cfg["surrogate"]
    sub = Substrate(**sur.get("substrate", {}))
    grid = cfg.get("grid", {})
    freqs = default_frequency_grid(task.f0_hz, int(grid.get("n", 101)),
                                   float(grid.get("lo", 0.5)), float(grid.get("hi", 1.5)))
    fmap = None
    if sur["kind"] == "filter":
        coupling = dict(sur.get("coupling", {}))
        coupling.setdefault("f0_hz", task.f0_hz)
        coupling.setdefault("bw_hz", task.f2_hz - task.f1_hz)
        fmap = FilterCouplingMap(**coupling)
    solver = make_surrogate(sur["kind"], freqs, sub, fmap,
                            z_ref=float(sur.get("z_ref", 50.0)))
    cl = cfg.get("clustering", {})
    tr = dict(cfg.get("training", {}))
    tr.pop("init_checkpoint", None)
    train_cfg = TrainConfig(**{k: v for k, v in tr.items()})
    rw = cfg.get("reward", {})
    weights = RewardWeights(**rw)
    return ResolvedRun(
        config=cfg, task=task, mesh=mesh, substrate=sub, surrogate=solver,
        frequencies=freqs, weights=weights, train=train_cfg,
        cluster_k=int(cl.get("k", 5)),
        cluster_deltas=[float(d) for d in cl.get("deltas_mm", [0.05, 0.1, 0.15])],
        cluster_tau=float(cl.get("tau", 0.05)),
        cluster_seed=int(cl.get("seed", 0)),
        cluster_n_init=int(cl.get("n_init", 10)),
        net_grid=int(cfg.get("net", {}).get("grid", 32)),
    )


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def write_manifest(out_dir, cfg: dict, extra: dict | None = None) -> Path:
    import mwdesk
    doc = {
        "config_sha256": config_hash(cfg),
        "config": cfg,
        "versions": {
            "mwdesk": getattr(mwdesk, "__version__", "0"),
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
    }
    doc.update(extra or {})
    path = Path(out_dir) / "run_manifest.json"
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return path
