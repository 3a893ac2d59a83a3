"""Rectangular patch antenna, transmission-line model.

The patch is treated as a wide, low-impedance microstrip resonator radiating
from two slots. Near resonance it looks like a parallel RLC load with
resistance set by the slot conductance; that load is transformed through the
feed line and mismatched against 50 ohm to give S11. One-port: s21 = 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.constants import c as C0

from .microstrip import microstrip_params
from .sparams import SParamSweep


@dataclass(frozen=True)
class PatchParams:
    """Rectangular patch with an edge-connected feed line. Dimensions in mm.

    length: resonant dimension; width: radiating edge dimension.
    """

    length: float
    width: float
    h: float
    eps_r: float
    feed_w: float
    feed_length: float

    def __post_init__(self) -> None:
        for name in ("length", "width", "h", "eps_r", "feed_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.feed_length < 0:
            raise ValueError("feed_length must be non-negative")


@dataclass(frozen=True)
class PatchResonance:
    """Derived quantities of the patch transmission-line model."""

    fr_hz: float
    delta_l_mm: float
    eps_eff: float
    slot_conductance: float
    edge_resistance: float
    q_factor: float


def patch_resonance(p: PatchParams) -> PatchResonance:
    """Resonant frequency, slot conductance and loaded Q of the patch."""
    z0p, eps_eff = microstrip_params(p.width, p.h, p.eps_r)
    wh = p.width / p.h
    dl = 0.412 * p.h * (eps_eff + 0.3) * (wh + 0.264) / ((eps_eff - 0.258) * (wh + 0.8))
    fr = C0 / (2.0 * (p.length + 2.0 * dl) * 1e-3 * np.sqrt(eps_eff))
    lam0_mm = C0 / fr * 1e3
    k0h = 2.0 * np.pi * p.h / lam0_mm
    g1 = (p.width / (120.0 * lam0_mm)) * (1.0 - k0h ** 2 / 24.0)
    redge = 1.0 / (2.0 * g1)
    # half-wave open resonator: susceptance slope pi*Y0/2 over total loading 2*g1
    q = np.pi / (4.0 * g1 * z0p)
    return PatchResonance(float(fr), float(dl), float(eps_eff),
                          float(g1), float(redge), float(q))


def patch_input_impedance(p: PatchParams, freqs_hz: np.ndarray) -> np.ndarray:
    """Impedance at the feed-line input, patch load transformed through the feed."""
    res = patch_resonance(p)
    f = np.asarray(freqs_hz, dtype=float)
    zp = res.edge_resistance / (1.0 + 1j * res.q_factor * (f / res.fr_hz - res.fr_hz / f))
    if p.feed_length == 0:
        return zp
    z0f, eps_f = microstrip_params(p.feed_w, p.h, p.eps_r)
    theta = 2.0 * np.pi * f * np.sqrt(eps_f) * (p.feed_length * 1e-3) / C0
    ct, st = np.cos(theta), np.sin(theta)
    # ABCD form of the line transform avoids tan() poles
    return (ct * zp + 1j * z0f * st) / (1j * st / z0f * zp + ct)


def patch_sweep(p: PatchParams, freqs_hz: Sequence[float], z_ref: float = 50.0) -> SParamSweep:
    """One-port S11 sweep of the fed patch; s21 = s12 = 0, s22 mirrors s11."""
    f = np.asarray(freqs_hz, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequencies must be positive")
    zin = patch_input_impedance(p, f)
    s11 = (zin - z_ref) / (zin + z_ref)
    s = np.zeros((len(f), 2, 2), dtype=complex)
    s[:, 0, 0] = s11
    s[:, 1, 1] = s11
    return SParamSweep(f, s, z_ref)
