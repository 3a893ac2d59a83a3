"""Design MDP: band measurement, reward shaping, and the circuit environment.

State is the current mesh (rasterized for the conv encoder) plus its sweep's
dB curves (standardized for the MLP encoder). Actions either apply one
effective action cluster (every member vertex move at once) or, in baseline
mode, a single raw vertex move.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .clustering import ActionClusterModel
from .extract import ExtractionError, SurrogateSolver
from .mesh import (MeshModel, RejectedActionError, VertexAction, apply_action,
                   rasterize, vertex_action_space)
from .perturb import PerturbationSample
from .sparams import SParamSweep


@dataclass(frozen=True)
class DesignTask:
    """Target passband and loss thresholds for one design run."""

    f0_hz: float
    f1_hz: float
    f2_hz: float
    insertion_floor_db: float = -0.5
    return_ceiling_db: float = -20.0
    size_bound_mm: tuple[float, float] | None = None
    kind: str = "filter"  # filter | line | antenna

    def __post_init__(self) -> None:
        if not self.f1_hz < self.f0_hz < self.f2_hz:
            raise ValueError("need f1 < f0 < f2")
        if not (np.isfinite(self.insertion_floor_db) and np.isfinite(self.return_ceiling_db)):
            raise ValueError("loss thresholds must be finite")
        if self.kind not in ("filter", "line", "antenna"):
            raise ValueError(f"unknown circuit kind {self.kind!r}")


@dataclass(frozen=True)
class RewardWeights:
    beta1: float = 1e9          # Hz; center-frequency closeness
    beta2: float = 1e9          # Hz; band-edge closeness
    beta3: float = 0.05         # passband return-loss depth
    eps_clamp_hz: float = 1e7   # keeps the 1/|df| terms finite at success
    success_bonus: float = 100.0
    invalid_penalty: float = -1.0


@dataclass(frozen=True)
class BandMeasurement:
    f0_hz: float
    f1_hz: float
    f2_hz: float
    passband_return_mean_db: float
    passband_insertion_min_db: float


def _crossing(freqs: np.ndarray, db: np.ndarray, i_out: int, i_in: int, thr: float) -> float:
    f1, f2 = freqs[i_out], freqs[i_in]
    d1, d2 = db[i_out], db[i_in]
    if d2 == d1:
        return float(f1)
    return float(f1 + (thr - d1) * (f2 - f1) / (d2 - d1))


def measure_band(sweep: SParamSweep, kind: str = "filter") -> BandMeasurement:
    """Peak frequency and the -3 dB band around it.

    f0' is the |s21| peak (lowest index on ties) for filters and lines, or the
    |s11| minimum for antennas. Band edges are the nearest -3 dB crossings of
    |s21| relative to its peak, linearly interpolated; when a side never
    crosses, that edge falls back to the sweep end.
    """
    f = sweep.frequencies
    s21db = sweep.s21_db()
    s11db = sweep.s11_db()
    peak = int(np.argmax(s21db))
    f0 = float(f[int(np.argmin(s11db))]) if kind == "antenna" else float(f[peak])
    thr = s21db[peak] - 3.0
    f_lo, f_hi = float(f[0]), float(f[-1])
    for i in range(peak - 1, -1, -1):
        if s21db[i] < thr:
            f_lo = _crossing(f, s21db, i, i + 1, thr)
            break
    for i in range(peak + 1, len(f)):
        if s21db[i] < thr:
            f_hi = _crossing(f, s21db, i, i - 1, thr)
            break
    band = (f >= f_lo) & (f <= f_hi)
    if not np.any(band):
        band = np.zeros(len(f), dtype=bool)
        band[peak] = True
    return BandMeasurement(f0, f_lo, f_hi,
                           float(s11db[band].mean()), float(s21db[band].min()))


def task_success(sweep: SParamSweep, task: DesignTask) -> bool:
    """All task thresholds met over the design band."""
    f = sweep.frequencies
    s11db = sweep.s11_db()
    if task.kind == "antenna":
        i = int(np.argmin(np.abs(f - task.f0_hz)))
        return bool(s11db[i] <= task.return_ceiling_db)
    band = (f >= task.f1_hz) & (f <= task.f2_hz)
    if not np.any(band):
        return False
    s21db = sweep.s21_db()
    return bool(s11db[band].max() <= task.return_ceiling_db
                and s21db[band].min() >= task.insertion_floor_db)


def reward(sweep: SParamSweep, meas: BandMeasurement, task: DesignTask,
           w: RewardWeights) -> float:
    """Closeness of center and band edges plus mean passband return-loss depth.

    The reciprocal terms clamp at eps so the reward stays finite on target;
    the depth term averages dB(s11) over design-band grid points, capped above
    by the curve maximum, and enters with a sign that rewards deeper s11.
    """
    r = w.beta1 / max(abs(task.f0_hz - meas.f0_hz), w.eps_clamp_hz)
    r += w.beta2 / max(abs(task.f1_hz - meas.f1_hz) + abs(task.f2_hz - meas.f2_hz),
                       w.eps_clamp_hz)
    f = sweep.frequencies
    s11db = sweep.s11_db()
    band = (f >= task.f1_hz) & (f <= task.f2_hz)
    if np.any(band):
        level_cap = s11db.max()
        el = np.minimum(s11db[band], level_cap)
        r += w.beta3 * (-float(el.mean()))
    if task_success(sweep, task):
        r += w.success_bonus
    return float(r)


@dataclass(frozen=True)
class EnvState:
    mesh: MeshModel
    sweep: SParamSweep
    step_count: int
    measurement: BandMeasurement
    done: bool


@dataclass(frozen=True)
class NetInput:
    grid: np.ndarray
    svec: np.ndarray


def build_net_input(mesh: MeshModel, sweep: SParamSweep, grid: int = 32) -> NetInput:
    """Occupancy raster plus (dB + 100)/100 standardized s11/s21 channels."""
    occ = rasterize(mesh, grid).astype(float)
    svec = np.concatenate([(sweep.s11_db() + 100.0) / 100.0,
                           (sweep.s21_db() + 100.0) / 100.0])
    return NetInput(occ, svec)


def cluster_moves(model: ActionClusterModel,
                  samples: Sequence[PerturbationSample]) -> dict[int, list[tuple[int, str]]]:
    """Unique (vertex, direction) pairs per effective cluster, sorted."""
    moves: dict[int, set] = {j: set() for j in model.effective_clusters()}
    for s, label in zip(samples, model.assignments):
        if int(label) in moves:
            moves[int(label)].add((s.action.vertex, s.action.direction))
    return {j: sorted(v) for j, v in moves.items()}


class CircuitEnv:
    """Gym-style episodic environment over one design task.

    Cluster mode applies every member move of the chosen cluster with the
    configured magnitude; the whole step is rejected (state unchanged, penalty
    reward) when any member move breaks the geometry or the solver refuses the
    result. Baseline mode applies a single raw vertex action instead.
    """

    def __init__(self, seed_mesh: MeshModel, task: DesignTask, solver: SurrogateSolver,
                 clusters: ActionClusterModel | None = None,
                 samples: Sequence[PerturbationSample] | None = None,
                 delta_mm: float = 0.05, weights: RewardWeights | None = None,
                 episode_cap: int = 100, grid: int = 32):
        self.seed_mesh = seed_mesh
        self.task = task
        self.solver = solver
        self.delta_mm = float(delta_mm)
        self.weights = weights or RewardWeights()
        self.episode_cap = int(episode_cap)
        self.grid = int(grid)
        if clusters is not None:
            if samples is None:
                raise ValueError("cluster mode needs the perturbation samples")
            by_cluster = cluster_moves(clusters, samples)
            self._actions = [by_cluster[j] for j in sorted(by_cluster)]
            self.cluster_ids = sorted(by_cluster)
            if not self._actions:
                raise ValueError("no effective clusters to act with")
        else:
            self._actions = [[pair] for pair in vertex_action_space(seed_mesh)]
            self.cluster_ids = None
        self.state: EnvState | None = None

    @property
    def n_actions(self) -> int:
        return len(self._actions)

    def observe(self) -> NetInput:
        return build_net_input(self.state.mesh, self.state.sweep, self.grid)

    def reset(self) -> NetInput:
        sweep = self.solver.sweep(self.seed_mesh)
        meas = measure_band(sweep, self.task.kind)
        self.state = EnvState(self.seed_mesh, sweep, 0, meas, False)
        return self.observe()

    def step(self, action: int) -> tuple[NetInput, float, bool, dict]:
        if self.state is None:
            raise RuntimeError("call reset() first")
        if self.state.done:
            raise RuntimeError("episode finished; call reset()")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"unknown action id {action}")
        mesh = self.state.mesh
        accepted = True
        try:
            for vertex, direction in self._actions[action]:
                mesh = apply_action(mesh, VertexAction(vertex, direction, self.delta_mm))
            sweep = self.solver.sweep(mesh)
        except (RejectedActionError, ExtractionError):
            accepted = False
        steps = self.state.step_count + 1
        if not accepted:
            done = steps >= self.episode_cap
            self.state = replace(self.state, step_count=steps, done=done)
            info = {"accepted": False, "success": False,
                    "terminal": "timeout" if done else None}
            return self.observe(), self.weights.invalid_penalty, done, info
        meas = measure_band(sweep, self.task.kind)
        r = reward(sweep, meas, self.task, self.weights)
        success = task_success(sweep, self.task)
        done = success or steps >= self.episode_cap
        self.state = EnvState(mesh, sweep, steps, meas, done)
        info = {"accepted": True, "success": success,
                "terminal": ("success" if success else "timeout") if done else None}
        return self.observe(), r, done, info
