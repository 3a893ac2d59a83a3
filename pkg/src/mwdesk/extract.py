"""Mesh-to-surrogate parameter maps and the surrogate solver wrappers.

The maps are deliberately simple fixed-constant geometry reductions:

* resonator length: mean x of the two extreme (end) edges' endpoints;
* resonator coupling gap: mean vertical clearance between the facing edge
  chains, sampled at the interior facing vertices;
* tap position: linear in the feed centroid offset from the resonator centroid;
* segment/patch widths: mean y of upper interior vertices minus lower.

Each movable interior vertex therefore carries the same parameter weight,
which is what lets action effects cluster by direction rather than by vertex.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.constants import c as C0

from .coupling import CoupledResonatorParams, filter_sweep
from .mesh import MeshModel, Polygon, polygon_centroid_mm
from .microstrip import MicrostripSegment, microstrip_params, tl_sweep
from .patch import PatchParams, patch_sweep
from .sparams import SParamSweep


class ExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class Substrate:
    """Dielectric the circuits sit on. Defaults: gallium arsenide, 0.5 mm."""

    eps_r: float = 12.9
    h_mm: float = 0.5


@dataclass(frozen=True)
class FilterCouplingMap:
    """Fixed constants of the filter geometry-to-coupling map.

    Inter-resonator coupling: physical k = k0 * exp(-gap/g0), normalized by
    the fractional bandwidth of the lowpass mapping (f0/bw). External
    couplings come straight from the tap map as normalized values.
    """

    k0: float = 0.30
    g0_mm: float = 0.30
    tap_base: float = 0.90
    tap_slope_per_mm: float = 0.48
    f0_hz: float = 9.3e9
    bw_hz: float = 0.8e9


def default_frequency_grid(f0_hz: float, n: int = 101,
                           lo: float = 0.5, hi: float = 1.5) -> np.ndarray:
    """Default sweep grid: n points spanning [lo*f0, hi*f0]."""
    return np.linspace(lo * f0_hz, hi * f0_hz, n)


# --- geometric reductions -------------------------------------------------

def _end_edges(pts: np.ndarray) -> tuple[tuple[int, int], tuple[int, int]]:
    """Indices of the boundary edges with extreme midpoint x (left, right)."""
    n = len(pts)
    mids = [(float(pts[i, 0] + pts[(i + 1) % n, 0]) / 2.0, i) for i in range(n)]
    lo = min(mids)[1]
    hi = max(mids)[1]
    return (lo, (lo + 1) % n), (hi, (hi + 1) % n)


def _axis_length_mm(pts_mm: np.ndarray) -> float:
    (l0, l1), (r0, r1) = _end_edges(pts_mm)
    return float((pts_mm[r0, 0] + pts_mm[r1, 0]) / 2.0
                 - (pts_mm[l0, 0] + pts_mm[l1, 0]) / 2.0)


def _interior_sides(pts_mm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(upper, lower) vertex sets excluding end-edge endpoints; falls back to
    all vertices for plain 4-vertex rectangles."""
    (l0, l1), (r0, r1) = _end_edges(pts_mm)
    ends = {l0, l1, r0, r1}
    cy = float(pts_mm[:, 1].mean())
    interior = [i for i in range(len(pts_mm)) if i not in ends]
    upper = [i for i in interior if pts_mm[i, 1] > cy]
    lower = [i for i in interior if pts_mm[i, 1] <= cy]
    if not upper or not lower:
        upper = [i for i in range(len(pts_mm)) if pts_mm[i, 1] > cy]
        lower = [i for i in range(len(pts_mm)) if pts_mm[i, 1] <= cy]
    return pts_mm[upper], pts_mm[lower]


def _mean_width_mm(pts_mm: np.ndarray) -> float:
    upper, lower = _interior_sides(pts_mm)
    return float(upper[:, 1].mean() - lower[:, 1].mean())


def _envelope_at(pts_mm: np.ndarray, xq: np.ndarray, lower: bool) -> np.ndarray:
    ys = np.full(len(xq), np.inf if lower else -np.inf)
    n = len(pts_mm)
    for i in range(n):
        ax, ay = pts_mm[i]
        bx, by = pts_mm[(i + 1) % n]
        if ax == bx:
            continue
        t = (xq - ax) / (bx - ax)
        m = (t >= 0.0) & (t <= 1.0)
        yv = ay + t * (by - ay)
        if lower:
            ys[m] = np.minimum(ys[m], yv[m])
        else:
            ys[m] = np.maximum(ys[m], yv[m])
    return ys


def _facing_gap_mm(upper_pts: np.ndarray, lower_pts: np.ndarray) -> float:
    """Mean clearance between the polygons' facing edges; collision if <= 0."""
    xlo = max(upper_pts[:, 0].min(), lower_pts[:, 0].min())
    xhi = min(upper_pts[:, 0].max(), lower_pts[:, 0].max())
    if xhi <= xlo:
        raise ExtractionError("resonators have no facing overlap")
    _, low_int = _interior_sides(upper_pts)   # facing side of the upper polygon
    up_int, _ = _interior_sides(lower_pts)    # facing side of the lower polygon
    means = []
    for probe, other, lower_env in ((low_int, lower_pts, False), (up_int, upper_pts, True)):
        sel = (probe[:, 0] >= xlo) & (probe[:, 0] <= xhi)
        if not np.any(sel):
            continue
        env = _envelope_at(other, probe[sel, 0], lower=lower_env)
        clear = (env - probe[sel, 1]) if lower_env else (probe[sel, 1] - env)
        if np.any(clear <= 0):
            raise ExtractionError("geometry collision: facing edges touch or cross")
        means.append(float(clear.mean()))
    if not means:
        raise ExtractionError("no facing-edge samples inside the overlap")
    return float(np.mean(means))


# --- per-circuit extraction ------------------------------------------------

def extract_filter_params(mesh: MeshModel, substrate: Substrate,
                          fmap: FilterCouplingMap) -> CoupledResonatorParams:
    """Geometry to coupled-resonator parameters.

    Resonator eps_eff is evaluated at the nominal linewidth w = h, so length
    actions and gap actions move disjoint parameters.
    """
    r1 = mesh.polygons_by_tag("resonator-1")
    r2 = mesh.polygons_by_tag("resonator-2")
    if len(r1) != 1 or len(r2) != 1:
        raise ExtractionError("mesh must tag exactly one resonator-1 and one resonator-2")
    p1 = mesh.polygon_points_mm(r1[0])
    p2 = mesh.polygon_points_mm(r2[0])
    _, eps_eff = microstrip_params(substrate.h_mm, substrate.h_mm, substrate.eps_r)
    sq = np.sqrt(eps_eff)

    def fi(pts: np.ndarray) -> float:
        li = _axis_length_mm(pts)
        if li <= 0:
            raise ExtractionError("non-positive resonator length")
        return C0 / (2.0 * li * 1e-3 * sq)

    f1, f2 = fi(p1), fi(p2)
    upper, lower = (p1, p2) if polygon_centroid_mm(p1)[1] >= polygon_centroid_mm(p2)[1] \
        else (p2, p1)
    gap = _facing_gap_mm(upper, lower)
    m1 = fmap.k0 * np.exp(-gap / fmap.g0_mm) * (fmap.f0_hz / fmap.bw_hz)

    def tap(res_pts: np.ndarray) -> float:
        feeds = mesh.polygons_by_tag("feed")
        if not feeds:
            return fmap.tap_base
        cx, cy = polygon_centroid_mm(res_pts)
        best = min(feeds, key=lambda fp: (lambda c: (c[0] - cx) ** 2 + (c[1] - cy) ** 2)(
            polygon_centroid_mm(mesh.polygon_points_mm(fp))))
        fx, _ = polygon_centroid_mm(mesh.polygon_points_mm(best))
        return fmap.tap_base + fmap.tap_slope_per_mm * abs(fx - cx)

    return CoupledResonatorParams(f1=f1, f2=f2, m0=tap(p1), m1=float(m1), m2=tap(p2),
                                  f0=fmap.f0_hz, bw=fmap.bw_hz)


def extract_line_segments(mesh: MeshModel, substrate: Substrate) -> list[MicrostripSegment]:
    """Line-segment polygons, ordered by centroid x, reduced to (w, l)."""
    polys = mesh.polygons_by_tag("line-segment")
    if not polys:
        raise ExtractionError("mesh has no line-segment polygons")
    polys = sorted(polys, key=lambda p: polygon_centroid_mm(mesh.polygon_points_mm(p))[0])
    segs = []
    for poly in polys:
        pts = mesh.polygon_points_mm(poly)
        length = _axis_length_mm(pts)
        width = _mean_width_mm(pts)
        if width <= 0 or length <= 0:
            raise ExtractionError("line segment collapsed to non-positive size")
        segs.append(MicrostripSegment(w=width, length=length,
                                      h=substrate.h_mm, eps_r=substrate.eps_r))
    return segs


def extract_patch_params(mesh: MeshModel, substrate: Substrate) -> PatchParams:
    """Patch and feed polygons reduced to the transmission-line patch model."""
    patches = mesh.polygons_by_tag("patch")
    feeds = mesh.polygons_by_tag("feed")
    if len(patches) != 1 or len(feeds) != 1:
        raise ExtractionError("mesh must tag exactly one patch and one feed")
    ppts = mesh.polygon_points_mm(patches[0])
    fpts = mesh.polygon_points_mm(feeds[0])
    length = _axis_length_mm(ppts)
    width = _mean_width_mm(ppts)
    feed_l = _axis_length_mm(fpts)
    feed_w = _mean_width_mm(fpts)
    if min(length, width, feed_w) <= 0 or feed_l < 0:
        raise ExtractionError("patch geometry collapsed to non-positive size")
    return PatchParams(length=length, width=width, h=substrate.h_mm,
                       eps_r=substrate.eps_r, feed_w=feed_w, feed_length=feed_l)


# --- surrogate solvers ------------------------------------------------------

class SurrogateSolver:
    """Common surface: sweep(mesh) -> SParamSweep on a fixed frequency grid."""

    kind: str = ""
    feature_channels: int = 2  # dB(s11) and dB(s21); antennas use s11 only

    def __init__(self, frequencies: Sequence[float]):
        self.frequencies = np.asarray(frequencies, dtype=float)

    def sweep(self, mesh: MeshModel) -> SParamSweep:
        raise NotImplementedError


class FilterSurrogate(SurrogateSolver):
    kind = "filter"

    def __init__(self, frequencies, substrate: Substrate, fmap: FilterCouplingMap):
        super().__init__(frequencies)
        self.substrate = substrate
        self.fmap = fmap

    def sweep(self, mesh: MeshModel) -> SParamSweep:
        params = extract_filter_params(mesh, self.substrate, self.fmap)
        return filter_sweep(params, self.frequencies)


class LineSurrogate(SurrogateSolver):
    kind = "line"

    def __init__(self, frequencies, substrate: Substrate, z_ref: float = 50.0):
        super().__init__(frequencies)
        self.substrate = substrate
        self.z_ref = z_ref

    def sweep(self, mesh: MeshModel) -> SParamSweep:
        segs = extract_line_segments(mesh, self.substrate)
        return tl_sweep(segs, self.frequencies, self.z_ref)


class PatchSurrogate(SurrogateSolver):
    kind = "antenna"
    feature_channels = 1

    def __init__(self, frequencies, substrate: Substrate):
        super().__init__(frequencies)
        self.substrate = substrate

    def sweep(self, mesh: MeshModel) -> SParamSweep:
        params = extract_patch_params(mesh, self.substrate)
        return patch_sweep(params, self.frequencies)


def make_surrogate(kind: str, frequencies, substrate: Substrate,
                   fmap: FilterCouplingMap | None = None,
                   z_ref: float = 50.0) -> SurrogateSolver:
    if kind == "filter":
        return FilterSurrogate(frequencies, substrate, fmap or FilterCouplingMap())
    if kind == "line":
        return LineSurrogate(frequencies, substrate, z_ref)
    if kind == "antenna":
        return PatchSurrogate(frequencies, substrate)
    raise ValueError(f"unknown surrogate kind {kind!r}")
