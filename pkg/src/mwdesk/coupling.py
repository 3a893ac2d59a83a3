"""Two-resonator coupled bandpass filter via normalized coupling-matrix analysis."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sparams import SParamSweep


class SingularNetworkError(ValueError):
    """Coupling matrix became singular at some frequency."""


@dataclass(frozen=True)
class CoupledResonatorParams:
    """Source - resonator 1 - resonator 2 - load chain.

    f1, f2: resonator self-resonant frequencies (Hz)
    m1: inter-resonator coupling, m0/m2: external couplings (normalized)
    f0, bw: center and bandwidth of the lowpass normalization (Hz)
    """

    f1: float
    f2: float
    m0: float
    m1: float
    m2: float
    f0: float
    bw: float

    def __post_init__(self) -> None:
        for name in ("f1", "f2", "f0", "bw"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("m0", "m1", "m2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def filter_sweep(p: CoupledResonatorParams, freqs_hz: Sequence[float]) -> SParamSweep:
    """S-parameters of the two-resonator network over `freqs_hz`.

    Lowpass variable lam = (f0/bw)(f/f0 - f0/f); each resonator contributes a
    diagonal detuning -lam(fi) so it resonates at its own fi. External loading
    enters as -j*m0^2 / -j*m2^2 on the diagonal; m1 couples the resonators.
    Lossless for real couplings: |s11|^2 + |s21|^2 = 1, and s12 == s21 exactly.
    """
    f = np.asarray(freqs_hz, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequencies must be positive")
    lam = (p.f0 / p.bw) * (f / p.f0 - p.f0 / f)
    m11 = -(p.f0 / p.bw) * (p.f1 / p.f0 - p.f0 / p.f1)
    m22 = -(p.f0 / p.bw) * (p.f2 / p.f0 - p.f0 / p.f2)
    r1, r2 = p.m0 ** 2, p.m2 ** 2
    a11 = lam + m11 - 1j * r1
    a22 = lam + m22 - 1j * r2
    det = a11 * a22 - p.m1 ** 2
    bad = np.abs(det) < 1e-30
    if np.any(bad):
        fbad = f[np.argmax(bad)]
        raise SingularNetworkError(f"singular coupling matrix at {fbad:.6g} Hz")
    s11 = 1.0 + 2j * r1 * a22 / det
    s21 = 2j * np.sqrt(r1 * r2) * p.m1 / det
    s22 = 1.0 + 2j * r2 * a11 / det
    s = np.empty((len(f), 2, 2), dtype=complex)
    s[:, 0, 0] = s11
    s[:, 1, 0] = s21
    s[:, 0, 1] = s21
    s[:, 1, 1] = s22
    return SParamSweep(f, s, 50.0)
