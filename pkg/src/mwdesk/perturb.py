"""Differential S-parameter dataset: one sample per accepted vertex action."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .extract import SurrogateSolver
from .mesh import MeshModel, RejectedActionError, VertexAction, apply_action, vertex_action_space
from .sparams import SParamSweep


class SolverFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class PerturbationSample:
    """One vertex action and its differential dB feature (original - perturbed)."""

    action: VertexAction
    feature: np.ndarray

    def __post_init__(self) -> None:
        f = np.asarray(self.feature, dtype=float)
        f.setflags(write=False)
        object.__setattr__(self, "feature", f)


def sweep_feature(sweep: SParamSweep, channels: int = 2) -> np.ndarray:
    """dB feature vector: [dB(s11)] or [dB(s11), dB(s21)] over the grid."""
    if channels == 1:
        return sweep.s11_db()
    return np.concatenate([sweep.s11_db(), sweep.s21_db()])


def gen_perturbation_dataset(mesh: MeshModel, solver: SurrogateSolver,
                             deltas_mm: Sequence[float]) -> tuple[list[PerturbationSample], int]:
    """Perturb every movable (vertex, direction) by every delta.

    Returns (samples, skipped) where skipped counts geometrically rejected
    actions. The baseline sweep is computed once. A solver failure on an
    accepted geometry aborts with the offending action named.
    """
    if not deltas_mm:
        raise ValueError("deltas_mm must be non-empty")
    base = sweep_feature(solver.sweep(mesh), solver.feature_channels)
    samples: list[PerturbationSample] = []
    skipped = 0
    for vertex, direction in vertex_action_space(mesh):
        for delta in deltas_mm:
            action = VertexAction(vertex, direction, float(delta))
            try:
                perturbed = apply_action(mesh, action)
            except RejectedActionError:
                skipped += 1
                continue
            try:
                feat = sweep_feature(solver.sweep(perturbed), solver.feature_channels)
            except Exception as exc:
                raise SolverFailure(
                    f"solver failed for vertex {vertex} {direction} {delta} mm: {exc}"
                ) from exc
            samples.append(PerturbationSample(action, base - feat))
    return samples, skipped


def write_dataset_csv(samples: Sequence[PerturbationSample], path) -> None:
    """CSV with header (vertex, direction, delta_mm, f_0 ... f_{n-1})."""
    if not samples:
        raise ValueError("no samples to write")
    n = len(samples[0].feature)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex", "direction", "delta_mm"] + [f"f_{i}" for i in range(n)])
        for s in samples:
            w.writerow([s.action.vertex, s.action.direction, repr(s.action.delta_mm)]
                       + [repr(float(v)) for v in s.feature])


def read_dataset_csv(path) -> list[PerturbationSample]:
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["vertex", "direction", "delta_mm"]:
            raise ValueError("not a perturbation dataset file")
        for row in reader:
            action = VertexAction(int(row[0]), row[1], float(row[2]))
            samples.append(PerturbationSample(action, np.array([float(v) for v in row[3:]])))
    return samples
