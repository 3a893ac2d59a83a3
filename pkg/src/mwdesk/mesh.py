"""Meshed planar-circuit geometry: movable vertices, the four vertex actions,
validation, and rasterization to the occupancy grid the conv encoder consumes.

Coordinates are held in integer micrometers so inverse actions round-trip
exactly and geometric predicates are exact integer arithmetic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

UM_PER_MM = 1000

DIRECTIONS = ("up", "down", "left", "right")
_DIR_VEC = {"up": (0, 1), "down": (0, -1), "left": (-1, 0), "right": (1, 0)}


def mm_to_um(x_mm: float) -> int:
    return int(round(x_mm * UM_PER_MM))


@dataclass(frozen=True)
class Polygon:
    tag: str
    indices: tuple[int, ...]


@dataclass(frozen=True)
class Violation:
    kind: str  # 'self-intersection' | 'overlap' | 'bound' | 'degenerate'
    detail: str
    polygons: tuple[int, ...] = ()
    edges: tuple[int, ...] = ()

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


class RejectedActionError(ValueError):
    """A vertex action produced invalid geometry; the mesh was not changed."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


@dataclass(frozen=True)
class VertexAction:
    vertex: int
    direction: str
    delta_mm: float

    def __post_init__(self) -> None:
        if self.direction not in _DIR_VEC:
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.delta_mm <= 0:
            raise ValueError("action magnitude must be positive")


@dataclass(frozen=True)
class MeshModel:
    """Polygonal conductor geometry over a shared vertex table.

    vertices_um: int array (n, 2); polygons index into it with role tags.
    bound_um, when set, limits the x/y extent of the conductor bounding box.
    """

    vertices_um: np.ndarray
    polygons: tuple[Polygon, ...]
    movable: np.ndarray
    bound_um: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices_um, dtype=np.int64)
        mv = np.asarray(self.movable, dtype=bool)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices_um must have shape (n, 2)")
        if mv.shape != (len(v),):
            raise ValueError("movable must have one flag per vertex")
        for p in self.polygons:
            if len(p.indices) < 3:
                raise ValueError(f"polygon {p.tag!r} needs at least 3 vertices")
            if any(i < 0 or i >= len(v) for i in p.indices):
                raise ValueError(f"polygon {p.tag!r} references unknown vertex")
        v.setflags(write=False)
        mv.setflags(write=False)
        object.__setattr__(self, "vertices_um", v)
        object.__setattr__(self, "movable", mv)
        object.__setattr__(self, "polygons", tuple(self.polygons))

    @property
    def vertices_mm(self) -> np.ndarray:
        return self.vertices_um.astype(float) / UM_PER_MM

    def polygon_points_um(self, poly: Polygon) -> np.ndarray:
        return self.vertices_um[list(poly.indices)]

    def polygon_points_mm(self, poly: Polygon) -> np.ndarray:
        return self.polygon_points_um(poly).astype(float) / UM_PER_MM

    def polygons_by_tag(self, tag: str) -> list[Polygon]:
        return [p for p in self.polygons if p.tag == tag]

    def movable_indices(self) -> np.ndarray:
        return np.flatnonzero(self.movable)

    def conductor_bbox_um(self) -> tuple[int, int, int, int]:
        idx = sorted({i for p in self.polygons for i in p.indices})
        pts = self.vertices_um[idx] if idx else self.vertices_um
        if len(pts) == 0:
            raise ValueError("degenerate mesh: no vertices")
        return (int(pts[:, 0].min()), int(pts[:, 1].min()),
                int(pts[:, 0].max()), int(pts[:, 1].max()))


# --- exact integer predicates -------------------------------------------------

def _orient(ax: int, ay: int, bx: int, by: int, cx: int, cy: int) -> int:
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (v > 0) - (v < 0)


def _pt(row) -> tuple[int, int]:
    return int(row[0]), int(row[1])


def _on_segment(ax, ay, bx, by, px, py) -> bool:
    return (min(ax, bx) <= px <= max(ax, bx)) and (min(ay, by) <= py <= max(ay, by))


def _segments_touch(a, b, c, d) -> bool:
    """True if segments ab and cd share any point (crossing or touching)."""
    o1 = _orient(*a, *b, *c)
    o2 = _orient(*a, *b, *d)
    o3 = _orient(*c, *d, *a)
    o4 = _orient(*c, *d, *b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(*a, *b, *c):
        return True
    if o2 == 0 and _on_segment(*a, *b, *d):
        return True
    if o3 == 0 and _on_segment(*c, *d, *a):
        return True
    if o4 == 0 and _on_segment(*c, *d, *b):
        return True
    return False


def _segments_cross(a, b, c, d) -> bool:
    """Proper crossing only: the segments intersect at a single interior point."""
    o1 = _orient(*a, *b, *c)
    o2 = _orient(*a, *b, *d)
    o3 = _orient(*c, *d, *a)
    o4 = _orient(*c, *d, *b)
    return o1 * o2 < 0 and o3 * o4 < 0


def _point_strictly_inside(pts: np.ndarray, px: int, py: int) -> bool:
    """Exact even-odd test; boundary points count as outside."""
    n = len(pts)
    inside = False
    for i in range(n):
        ax, ay = int(pts[i, 0]), int(pts[i, 1])
        bx, by = int(pts[(i + 1) % n, 0]), int(pts[(i + 1) % n, 1])
        if _orient(ax, ay, bx, by, px, py) == 0 and _on_segment(ax, ay, bx, by, px, py):
            return False
        if (ay > py) != (by > py):
            # px < x-of-edge-at-py, exact: compare cross-multiplied
            t = (bx - ax) * (py - ay) - (px - ax) * (by - ay)
            if (by - ay) > 0:
                if t > 0:
                    inside = not inside
            else:
                if t < 0:
                    inside = not inside
    return inside


def _polygon_area2_um(pts: np.ndarray) -> int:
    x, y = pts[:, 0].astype(object), pts[:, 1].astype(object)
    return int(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_area_mm2(pts_mm: np.ndarray) -> float:
    x, y = pts_mm[:, 0], pts_mm[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def polygon_centroid_mm(pts_mm: np.ndarray) -> tuple[float, float]:
    x, y = pts_mm[:, 0], pts_mm[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    a = float(np.sum(cross)) / 2.0
    if a == 0.0:
        return float(x.mean()), float(y.mean())
    cx = float(np.sum((x + np.roll(x, -1)) * cross)) / (6.0 * a)
    cy = float(np.sum((y + np.roll(y, -1)) * cross)) / (6.0 * a)
    return cx, cy


# --- validation ---------------------------------------------------------------

def validate(mesh: MeshModel) -> list[Violation]:
    """Every violated invariant, with the polygons/edges involved. Empty = ok."""
    out: list[Violation] = []
    polys = [(pi, mesh.polygon_points_um(p)) for pi, p in enumerate(mesh.polygons)]
    for pi, pts in polys:
        if _polygon_area2_um(pts) == 0:
            out.append(Violation("degenerate", f"polygon {pi} has zero area", (pi,)))
            continue
        n = len(pts)
        for i in range(n):
            a, b = _pt(pts[i]), _pt(pts[(i + 1) % n])
            if a == b:
                out.append(Violation("degenerate", f"polygon {pi} edge {i} has zero length",
                                     (pi,), (i,)))
                continue
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue  # adjacent edges share an endpoint by construction
                c, d = _pt(pts[j]), _pt(pts[(j + 1) % n])
                if _segments_touch(a, b, c, d):
                    out.append(Violation("self-intersection",
                                         f"polygon {pi} edges {i} and {j} intersect",
                                         (pi,), (i, j)))
    # distinct conductor polygons may touch but never share interior
    for ii in range(len(polys)):
        for jj in range(ii + 1, len(polys)):
            pi, pa = polys[ii]
            pj, pb = polys[jj]
            if _polygons_overlap(pa, pb):
                out.append(Violation("overlap",
                                     f"polygons {pi} ({mesh.polygons[pi].tag}) and "
                                     f"{pj} ({mesh.polygons[pj].tag}) overlap", (pi, pj)))
    if mesh.bound_um is not None and mesh.polygons:
        x0, y0, x1, y1 = mesh.conductor_bbox_um()
        lx, ly = mesh.bound_um
        if (x1 - x0) > lx or (y1 - y0) > ly:
            out.append(Violation(
                "bound",
                f"extent {(x1 - x0) / UM_PER_MM:g} x {(y1 - y0) / UM_PER_MM:g} mm exceeds "
                f"limit {lx / UM_PER_MM:g} x {ly / UM_PER_MM:g} mm"))
    return out


def _polygons_overlap(pa: np.ndarray, pb: np.ndarray) -> bool:
    if (pa[:, 0].max() < pb[:, 0].min() or pb[:, 0].max() < pa[:, 0].min()
            or pa[:, 1].max() < pb[:, 1].min() or pb[:, 1].max() < pa[:, 1].min()):
        return False
    na, nb = len(pa), len(pb)
    for i in range(na):
        a, b = _pt(pa[i]), _pt(pa[(i + 1) % na])
        for j in range(nb):
            c, d = _pt(pb[j]), _pt(pb[(j + 1) % nb])
            if _segments_cross(a, b, c, d):
                return True
    for px, py in pa:
        if _point_strictly_inside(pb, int(px), int(py)):
            return True
    for px, py in pb:
        if _point_strictly_inside(pa, int(px), int(py)):
            return True
    return False


# --- actions ------------------------------------------------------------------

def apply_action(mesh: MeshModel, action: VertexAction) -> MeshModel:
    """New mesh with one vertex displaced; rejects moves that break geometry."""
    if action.vertex < 0 or action.vertex >= len(mesh.vertices_um):
        raise ValueError(f"vertex {action.vertex} out of range")
    if not mesh.movable[action.vertex]:
        raise RejectedActionError(
            [Violation("degenerate", f"vertex {action.vertex} is not movable")])
    dx, dy = _DIR_VEC[action.direction]
    step = mm_to_um(action.delta_mm)
    if step <= 0:
        raise ValueError("action magnitude rounds to zero micrometers")
    verts = mesh.vertices_um.copy()
    verts[action.vertex, 0] += dx * step
    verts[action.vertex, 1] += dy * step
    moved = MeshModel(verts, mesh.polygons, mesh.movable, mesh.bound_um)
    violations = validate(moved)
    if violations:
        raise RejectedActionError(violations)
    return moved


def vertex_action_space(mesh: MeshModel) -> list[tuple[int, str]]:
    """(vertex, direction) pairs: movable vertices x 4 directions, fixed order."""
    return [(int(v), d) for v in mesh.movable_indices() for d in DIRECTIONS]


# --- rasterization ------------------------------------------------------------

def rasterize(mesh: MeshModel, grid: int = 32,
              frame_mm: tuple[float, float, float, float] | None = None) -> np.ndarray:
    """Occupancy matrix: cell = 1 iff its center lies inside a conductor polygon.

    The frame defaults to the conductor bounding box plus a 10% margin per
    side; passing the same frame with a translated mesh reproduces the matrix.
    Row 0 is the lowest y so the matrix reads like the layout.
    """
    if grid < 8:
        raise ValueError("grid must be at least 8")
    if frame_mm is None:
        x0, y0, x1, y1 = (v / UM_PER_MM for v in mesh.conductor_bbox_um())
        w, h = x1 - x0, y1 - y0
        if w <= 0 or h <= 0:
            raise ValueError("degenerate bounding box")
        frame_mm = (x0 - 0.1 * w, y0 - 0.1 * h, x1 + 0.1 * w, y1 + 0.1 * h)
    fx0, fy0, fx1, fy1 = frame_mm
    if fx1 <= fx0 or fy1 <= fy0:
        raise ValueError("degenerate bounding box")
    xs = fx0 + (np.arange(grid) + 0.5) * (fx1 - fx0) / grid
    ys = fy0 + (np.arange(grid) + 0.5) * (fy1 - fy0) / grid
    cx, cy = np.meshgrid(xs, ys)
    cx, cy = cx.ravel(), cy.ravel()
    occupied = np.zeros(grid * grid, dtype=bool)
    for poly in mesh.polygons:
        pts = mesh.polygon_points_mm(poly)
        inside = np.zeros(grid * grid, dtype=bool)
        n = len(pts)
        for i in range(n):
            x1p, y1p = pts[i]
            x2p, y2p = pts[(i + 1) % n]
            if y1p == y2p:
                continue
            cond = (y1p > cy) != (y2p > cy)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = (x2p - x1p) * (cy - y1p) / (y2p - y1p) + x1p
            inside ^= cond & (cx < xi)
        occupied |= inside
    return occupied.reshape(grid, grid).astype(np.int8)


# --- JSON interchange ---------------------------------------------------------

def mesh_to_dict(mesh: MeshModel) -> dict:
    return {
        "vertices": [[v / UM_PER_MM for v in row] for row in mesh.vertices_um.tolist()],
        "polygons": [{"tag": p.tag, "indices": list(p.indices)} for p in mesh.polygons],
        "movable": mesh.movable.astype(bool).tolist(),
        "bound": None if mesh.bound_um is None
                 else [mesh.bound_um[0] / UM_PER_MM, mesh.bound_um[1] / UM_PER_MM],
    }


def mesh_from_dict(d: dict) -> MeshModel:
    verts = np.array([[mm_to_um(x), mm_to_um(y)] for x, y in d["vertices"]], dtype=np.int64)
    polys = tuple(Polygon(p["tag"], tuple(p["indices"])) for p in d["polygons"])
    movable = np.array(d["movable"], dtype=bool)
    bound = d.get("bound")
    bound_um = None if bound is None else (mm_to_um(bound[0]), mm_to_um(bound[1]))
    return MeshModel(verts, polys, movable, bound_um)


def save_mesh(mesh: MeshModel, path) -> None:
    Path(path).write_text(json.dumps(mesh_to_dict(mesh), indent=1, sort_keys=True) + "\n")


def load_mesh(path) -> MeshModel:
    return mesh_from_dict(json.loads(Path(path).read_text()))
