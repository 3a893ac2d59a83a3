"""Seed meshes and ready-to-run task configurations.

Geometry conventions: resonators and patches are axis-aligned bars whose long
(resonant) dimension runs along x. Long edges carry interior vertices (the
coupling/width knobs); end edges are plain corner-to-corner segments (the
length knobs). Feeds and ports are non-movable.
"""
from __future__ import annotations

import numpy as np

from .mesh import MeshModel, Polygon, mm_to_um


def _rect(tag: str, x0: float, y0: float, x1: float, y1: float,
          verts: list, polys: list, movable: list, is_movable: bool) -> None:
    base = len(verts)
    verts += [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    movable += [is_movable] * 4
    polys.append(Polygon(tag, (base, base + 1, base + 2, base + 3)))


def _bar(tag: str, x0: float, y0: float, length: float, width: float, n_seg: int,
         verts: list, polys: list, movable: list, is_movable: bool = True) -> None:
    """Bar with subdivided long edges and plain end edges."""
    xs = np.linspace(x0, x0 + length, n_seg + 1)
    base = len(verts)
    verts += [(float(x), y0) for x in xs]            # bottom chain, left -> right
    verts += [(float(x), y0 + width) for x in xs[::-1]]  # top chain, right -> left
    n = 2 * (n_seg + 1)
    movable += [is_movable] * n
    polys.append(Polygon(tag, tuple(range(base, base + n))))


def _mesh(verts, polys, movable, bound_mm=None) -> MeshModel:
    arr = np.array([[mm_to_um(x), mm_to_um(y)] for x, y in verts], dtype=np.int64)
    bound_um = None if bound_mm is None else (mm_to_um(bound_mm[0]), mm_to_um(bound_mm[1]))
    return MeshModel(arr, tuple(polys), np.array(movable, dtype=bool), bound_um)


def filter_seed_mesh(length_mm: float, gap_mm: float, tap_offset_mm: float,
                     width_mm: float = 0.5, n_seg: int = 9,
                     feed_w_mm: float = 0.3, feed_len_mm: float = 0.5,
                     bound_mm=None) -> MeshModel:
    """Two stacked resonator bars with outward tap feeds.

    40 movable vertices (20 per resonator). The upper bar is resonator-1 with
    its feed tapped left of center; resonator-2 mirrors it on the lower side.
    """
    verts: list = []
    polys: list = []
    movable: list = []
    y2 = 0.0
    y1 = width_mm + gap_mm
    _bar("resonator-1", 0.0, y1, length_mm, width_mm, n_seg, verts, polys, movable)
    _bar("resonator-2", 0.0, y2, length_mm, width_mm, n_seg, verts, polys, movable)
    xc = length_mm / 2.0
    fx1 = xc - tap_offset_mm
    fx2 = xc + tap_offset_mm
    top = y1 + width_mm
    _rect("feed", fx1 - feed_w_mm / 2, top, fx1 + feed_w_mm / 2, top + feed_len_mm,
          verts, polys, movable, is_movable=False)
    _rect("feed", fx2 - feed_w_mm / 2, -feed_len_mm, fx2 + feed_w_mm / 2, 0.0,
          verts, polys, movable, is_movable=False)
    return _mesh(verts, polys, movable, bound_mm)


def line_seed_mesh(segments: list[tuple[float, float]], n_seg: int = 4) -> MeshModel:
    """Stepped microstrip line: abutting bars centered on y = 0."""
    verts: list = []
    polys: list = []
    movable: list = []
    x = 0.0
    for w, length in segments:
        _bar("line-segment", x, -w / 2.0, length, w, n_seg, verts, polys, movable)
        x += length
    return _mesh(verts, polys, movable)


def patch_seed_mesh(length_mm: float = 5.40, width_mm: float = 13.50,
                    feed_w_mm: float = 0.15, feed_len_mm: float = 3.30,
                    n_side: int = 6, n_feed: int = 3) -> MeshModel:
    """Edge-fed rectangular patch, resonant along x, fed from the left.

    The patch's left edge and the feed end edges are pinned; movable knobs are
    the right (radiating) corners, the side-chain interiors, and the feed's
    long-edge interiors.
    """
    verts: list = []
    polys: list = []
    movable: list = []
    half = width_mm / 2.0
    xs = np.linspace(0.0, length_mm, n_side + 1)
    base = len(verts)
    # bottom chain left -> right, then up the right edge, top chain right -> left
    verts += [(float(x), -half) for x in xs]
    verts += [(float(x), half) for x in xs[::-1]]
    n = 2 * (n_side + 1)
    polys.append(Polygon("patch", tuple(range(base, base + n))))
    for i in range(n):
        x = verts[base + i][0]
        movable.append(x > 0.0)  # left-edge corners pinned at the feed plane
    fxs = np.linspace(-feed_len_mm, 0.0, n_feed + 1)
    fbase = len(verts)
    verts += [(float(x), -feed_w_mm / 2.0) for x in fxs]
    verts += [(float(x), feed_w_mm / 2.0) for x in fxs[::-1]]
    polys.append(Polygon("feed", tuple(range(fbase, fbase + 2 * (n_feed + 1)))))
    for i in range(2 * (n_feed + 1)):
        x = verts[fbase + i][0]
        movable.append(-feed_len_mm < x < 0.0)  # only the long-edge interiors
    return _mesh(verts, polys, movable)


# --- task configurations ----------------------------------------------------

def _base_config(task: dict, surrogate: dict, mesh_file: str,
                 cluster_seed: int = 0) -> dict:
    return {
        "task": task,
        "mesh": mesh_file,
        "surrogate": surrogate,
        "grid": {"n": 101, "lo": 0.5, "hi": 1.5},
        "clustering": {"k": 5, "deltas_mm": [0.05, 0.1, 0.15], "tau": 0.1,
                       "seed": cluster_seed, "n_init": 10},
        "training": {"workers": 1, "n_step": 5, "gamma": 0.99, "entropy_beta": 0.01,
                     "learning_rate": 7e-4, "max_env_steps": 20000, "episode_cap": 100,
                     "delta_rl_mm": 0.05, "seed": 0, "stop_at_success": False,
                     "checkpoint_every": 1000, "init_checkpoint": None},
        "reward": {"beta1": 1e9, "beta2": 1e9, "beta3": 0.05, "eps_clamp_hz": 1e7,
                   "success_bonus": 100.0, "invalid_penalty": -1.0},
        "net": {"grid": 32},
    }


def task1_config(mesh_file: str = "meshes/filter_task1.json") -> dict:
    """Bandpass filter, 8.9-9.7 GHz passband centered at 9.3 GHz."""
    task = {"kind": "filter", "f0_hz": 9.3e9, "f1_hz": 8.9e9, "f2_hz": 9.7e9,
            "insertion_floor_db": -0.5, "return_ceiling_db": -20.0,
            "size_bound_mm": None}
    surrogate = {"kind": "filter",
                 "substrate": {"eps_r": 12.9, "h_mm": 0.5},
                 "coupling": {"k0": 0.30, "g0_mm": 0.30,
                              "tap_base": 0.90, "tap_slope_per_mm": 0.48,
                              "f0_hz": 9.3e9, "bw_hz": 0.8e9},
                 "z_ref": 50.0}
    return _base_config(task, surrogate, mesh_file)


def task1_seed_mesh() -> MeshModel:
    return filter_seed_mesh(length_mm=5.50, gap_mm=0.30, tap_offset_mm=1.35)


def task3_config(mesh_file: str = "meshes/filter_task3.json") -> dict:
    """Bandpass filter, 7.3-7.8 GHz passband centered at 7.55 GHz."""
    task = {"kind": "filter", "f0_hz": 7.55e9, "f1_hz": 7.3e9, "f2_hz": 7.8e9,
            "insertion_floor_db": -0.5, "return_ceiling_db": -20.0,
            "size_bound_mm": None}
    surrogate = {"kind": "filter",
                 "substrate": {"eps_r": 12.9, "h_mm": 0.5},
                 "coupling": {"k0": 0.30, "g0_mm": 0.30,
                              "tap_base": 0.90, "tap_slope_per_mm": 0.48,
                              "f0_hz": 7.55e9, "bw_hz": 0.5e9},
                 "z_ref": 50.0}
    return _base_config(task, surrogate, mesh_file)


def task3_seed_mesh() -> MeshModel:
    return filter_seed_mesh(length_mm=6.65, gap_mm=0.35, tap_offset_mm=1.5175)


def antenna_config(mesh_file: str = "meshes/patch_735.json") -> dict:
    """Patch antenna, s11 at 7.35 GHz below -20 dB."""
    task = {"kind": "antenna", "f0_hz": 7.35e9, "f1_hz": 7.2e9, "f2_hz": 7.5e9,
            "insertion_floor_db": -0.5, "return_ceiling_db": -20.0,
            "size_bound_mm": None}
    surrogate = {"kind": "antenna",
                 "substrate": {"eps_r": 12.9, "h_mm": 0.5},
                 "z_ref": 50.0}
    return _base_config(task, surrogate, mesh_file)


def antenna_seed_mesh() -> MeshModel:
    return patch_seed_mesh()


def demo_line_mesh() -> MeshModel:
    """50-ohm-ish stepped line used by tests and the line surrogate demo."""
    return line_seed_mesh([(0.5, 4.0), (1.5, 4.0), (0.5, 4.0)])


PRESETS = {
    "task1": (task1_config, task1_seed_mesh),
    "task3": (task3_config, task3_seed_mesh),
    "antenna": (antenna_config, antenna_seed_mesh),
}
