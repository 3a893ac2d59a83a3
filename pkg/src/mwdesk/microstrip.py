"""Microstrip closed forms and the stepped transmission-line solver.

Quasi-static Hammerstad-Jensen formulas for characteristic impedance and
effective permittivity, and lossless-line ABCD cascading to produce a full
S-parameter sweep for a chain of line sections.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.constants import c as C0

from .sparams import SParamSweep

ETA0 = 376.730313668  # free-space wave impedance, ohm


def microstrip_params(w_mm: float, h_mm: float, eps_r: float) -> tuple[float, float]:
    """(Z0 ohm, eps_eff) of a microstrip line, Hammerstad-Jensen closed forms.

    Z0 is strictly decreasing in w/h; eps_eff lies in [1, eps_r].
    """
    if w_mm <= 0 or h_mm <= 0:
        raise ValueError(f"line dimensions must be positive (w={w_mm}, h={h_mm})")
    if eps_r < 1:
        raise ValueError(f"relative permittivity must be >= 1, got {eps_r}")
    u = w_mm / h_mm
    a = (1.0
         + np.log((u**4 + (u / 52.0) ** 2) / (u**4 + 0.432)) / 49.0
         + np.log(1.0 + (u / 18.1) ** 3) / 18.7)
    b = 0.564 * ((eps_r - 0.9) / (eps_r + 3.0)) ** 0.053
    eps_eff = (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 * (1.0 + 10.0 / u) ** (-a * b)
    fu = 6.0 + (2.0 * np.pi - 6.0) * np.exp(-((30.666 / u) ** 0.7528))
    z0_air = ETA0 / (2.0 * np.pi) * np.log(fu / u + np.sqrt(1.0 + (2.0 / u) ** 2))
    return float(z0_air / np.sqrt(eps_eff)), float(eps_eff)


@dataclass(frozen=True)
class MicrostripSegment:
    """One uniform microstrip section. Dimensions in mm."""

    w: float
    length: float
    h: float
    eps_r: float

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError("segment width and substrate height must be positive")
        if self.length < 0:
            raise ValueError("segment length must be non-negative")
        if self.eps_r < 1:
            raise ValueError("eps_r must be >= 1")

    def line_params(self) -> tuple[float, float]:
        return microstrip_params(self.w, self.h, self.eps_r)


def line_abcd_arrays(z0: float, theta: np.ndarray) -> np.ndarray:
    """Lossless-line ABCD blocks for an array of electrical lengths theta (rad)."""
    n = len(theta)
    m = np.empty((n, 2, 2), dtype=complex)
    ct, st = np.cos(theta), np.sin(theta)
    m[:, 0, 0] = ct
    m[:, 0, 1] = 1j * z0 * st
    m[:, 1, 0] = 1j * st / z0
    m[:, 1, 1] = ct
    return m


def tl_sweep(segments: Sequence[MicrostripSegment], freqs_hz: Sequence[float],
             z_ref: float = 50.0) -> SParamSweep:
    """Cascade lossless microstrip sections and convert to S at z_ref.

    Reciprocity is built in: s12 is assigned from s21 so the pair is equal
    bit for bit, not merely within rounding.
    """
    if not segments:
        raise ValueError("empty segment list")
    f = np.asarray(freqs_hz, dtype=float)
    total = np.tile(np.eye(2, dtype=complex), (len(f), 1, 1))
    for seg in segments:
        z0, eps_eff = seg.line_params()
        theta = 2.0 * np.pi * f * np.sqrt(eps_eff) * (seg.length * 1e-3) / C0
        total = total @ line_abcd_arrays(z0, theta)
    a, b = total[:, 0, 0], total[:, 0, 1]
    c, d = total[:, 1, 0], total[:, 1, 1]
    den = a + b / z_ref + c * z_ref + d
    s11 = (a + b / z_ref - c * z_ref - d) / den
    s21 = 2.0 / den
    s22 = (-a + b / z_ref - c * z_ref + d) / den
    s = np.empty((len(f), 2, 2), dtype=complex)
    s[:, 0, 0] = s11
    s[:, 1, 0] = s21
    s[:, 0, 1] = s21
    s[:, 1, 1] = s22
    return SParamSweep(f, s, z_ref)
