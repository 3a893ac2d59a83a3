"""Advantage actor-critic training over the circuit environment.

Workers collect n-step windows, turn them into returns and advantages, and
push gradients into a shared parameter set guarded by a lock (updates are
atomic; workers copy the shared parameters back out after each update).
Single-worker mode runs inline and is bit-reproducible under a fixed seed.
"""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .env import CircuitEnv, NetInput
from .mesh import MeshModel
from .net import NetConfig, a3c_loss_and_grads, forward, init_params
from .optim import RMSProp
from .sparams import SParamSweep


@dataclass(frozen=True)
class TrainConfig:
    workers: int = 1
    n_step: int = 5
    gamma: float = 0.99
    entropy_beta: float = 0.01
    learning_rate: float = 7e-4
    max_env_steps: int = 20000
    episode_cap: int = 100
    delta_rl_mm: float = 0.05
    seed: int = 0
    stop_at_success: bool = False
    checkpoint_every: int = 1000

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.n_step < 1:
            raise ValueError("n_step must be >= 1")
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")


def n_step_returns(rewards: Sequence[float], bootstrap: float, gamma: float) -> np.ndarray:
    """R_t = sum_i gamma^i r_{t+i} + gamma^k V(s_{t+k}), computed backwards."""
    out = np.empty(len(rewards))
    acc = float(bootstrap)
    for i in range(len(rewards) - 1, -1, -1):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


@dataclass
class TrainResult:
    params: dict
    net_config: NetConfig
    curve: list[dict]
    best_return: float
    best_mesh: MeshModel
    best_sweep: SParamSweep
    first_success_step: int | None
    total_steps: int
    episodes: int


class _Shared:
    def __init__(self, params: dict, optimizer: RMSProp):
        self.lock = threading.Lock()
        self.params = params
        self.optimizer = optimizer
        self.global_step = 0
        self.episodes = 0
        self.stop = False
        self.curve: list[dict] = []
        self.best: tuple[float, MeshModel | None, SParamSweep | None] = (-np.inf, None, None)
        self.first_success_step: int | None = None


def _copy_params(params: dict) -> dict:
    return {k: v.copy() for k, v in params.items()}


def a3c_update(shared: _Shared, net_cfg: NetConfig, window: dict,
               entropy_beta: float) -> dict:
    """One atomic gradient application from an n-step window; returns fresh
    local parameters copied from the shared net."""
    loss, grads, _ = a3c_loss_and_grads(
        window["params"], net_cfg, window["grids"], window["svecs"],
        window["actions"], window["returns"], window["advantages"], entropy_beta)
    with shared.lock:
        shared.optimizer.apply(shared.params, grads)
        return _copy_params(shared.params)


def _run_worker(worker_id: int, shared: _Shared, env: CircuitEnv, net_cfg: NetConfig,
                cfg: TrainConfig, t0: float,
                checkpoint_cb: Callable[[dict, int], None] | None) -> None:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, worker_id, 0xA3C]))
    with shared.lock:
        local = _copy_params(shared.params)
    obs = env.reset()
    ep_return = 0.0
    grids, svecs, actions, rewards, values = [], [], [], [], []
    last_checkpoint = 0

    def flush(bootstrap: float) -> None:
        nonlocal local
        if not actions:
            return
        returns = n_step_returns(rewards, bootstrap, cfg.gamma)
        window = {
            "params": local,
            "grids": np.stack(grids),
            "svecs": np.stack(svecs),
            "actions": np.array(actions),
            "returns": returns,
            "advantages": returns - np.array(values),
        }
        local = a3c_update(shared, net_cfg, window, cfg.entropy_beta)
        grids.clear(); svecs.clear(); actions.clear(); rewards.clear(); values.clear()

    while True:
        with shared.lock:
            if shared.stop or shared.global_step >= cfg.max_env_steps:
                break
        pi, v = forward(local, net_cfg, obs.grid, obs.svec)
        action = int(rng.choice(net_cfg.n_actions, p=pi[0]))
        new_obs, r, done, info = env.step(action)
        grids.append(obs.grid); svecs.append(obs.svec)
        actions.append(action); rewards.append(r); values.append(float(v[0]))
        ep_return += r
        obs = new_obs

        with shared.lock:
            shared.global_step += 1
            step_now = shared.global_step
        if info.get("success") and shared.first_success_step is None:
            with shared.lock:
                if shared.first_success_step is None:
                    shared.first_success_step = step_now
                if cfg.stop_at_success:
                    shared.stop = True

        if done:
            flush(0.0)  # terminal: bootstrap with V = 0
            meas = env.state.measurement
            with shared.lock:
                shared.episodes += 1
                shared.curve.append({
                    "global_step": step_now,
                    "episode": shared.episodes,
                    "return": ep_return,
                    "f0_err_hz": abs(env.task.f0_hz - meas.f0_hz),
                    "passband_rl_db": meas.passband_return_mean_db,
                    "wall_ms": int((time.monotonic() - t0) * 1000),
                })
                if ep_return > shared.best[0]:
                    shared.best = (ep_return, env.state.mesh, env.state.sweep)
            ep_return = 0.0
            obs = env.reset()
        elif len(actions) >= cfg.n_step:
            _, v_boot = forward(local, net_cfg, obs.grid, obs.svec)
            flush(float(v_boot[0]))

        if checkpoint_cb is not None and step_now - last_checkpoint >= cfg.checkpoint_every:
            last_checkpoint = step_now
            with shared.lock:
                checkpoint_cb(_copy_params(shared.params), step_now)


def train(env_factory: Callable[[], CircuitEnv], net_cfg: NetConfig, cfg: TrainConfig,
          initial_params: dict | None = None,
          checkpoint_cb: Callable[[dict, int], None] | None = None) -> TrainResult:
    """Run actor-learner workers against private environments.

    Returns the trained parameters, the per-episode learning curve, and the
    best design seen (by episode return). With max_env_steps = 0 this returns
    the untrained net and the seed design.
    """
    params = _copy_params(initial_params) if initial_params \
        else init_params(net_cfg, cfg.seed)
    optimizer = RMSProp(learning_rate=cfg.learning_rate)
    shared = _Shared(params, optimizer)
    probe = env_factory()
    if probe.n_actions != net_cfg.n_actions:
        raise ValueError(f"net has {net_cfg.n_actions} logits but the environment "
                         f"exposes {probe.n_actions} actions")
    probe.reset()
    shared.best = (-np.inf, probe.state.mesh, probe.state.sweep)
    t0 = time.monotonic()
    if cfg.max_env_steps > 0:
        if cfg.workers == 1:
            _run_worker(0, shared, probe, net_cfg, cfg, t0, checkpoint_cb)
        else:
            envs = [probe] + [env_factory() for _ in range(cfg.workers - 1)]
            threads = [threading.Thread(target=_run_worker,
                                        args=(i, shared, envs[i], net_cfg, cfg, t0,
                                              checkpoint_cb if i == 0 else None))
                       for i in range(cfg.workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
    best_return, best_mesh, best_sweep = shared.best
    return TrainResult(params=shared.params, net_config=net_cfg, curve=shared.curve,
                       best_return=float(best_return), best_mesh=best_mesh,
                       best_sweep=best_sweep, first_success_step=shared.first_success_step,
                       total_steps=shared.global_step, episodes=shared.episodes)


def write_curve_csv(curve: Sequence[dict], path) -> None:
    cols = ["global_step", "episode", "return", "f0_err_hz", "passband_rl_db", "wall_ms"]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in curve:
            fh.write(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c])
                              for c in cols) + "\n")
