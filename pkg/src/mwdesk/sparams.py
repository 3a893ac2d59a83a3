"""Complex two-port network math: ABCD chains, ABCD-to-S conversion, dB helpers.

All values are plain immutable dataclasses over complex numbers; everything
here is safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

DB_FLOOR = -200.0


class DegenerateNetworkError(ValueError):
    """ABCD matrix cannot be converted to S at the given reference."""


@dataclass(frozen=True)
class TwoPortABCD:
    """Chain (ABCD) parameters of a two-port network."""

    a: complex
    b: complex
    c: complex
    d: complex

    @staticmethod
    def identity() -> "TwoPortABCD":
        return TwoPortABCD(1.0, 0.0, 0.0, 1.0)

    def __matmul__(self, other: "TwoPortABCD") -> "TwoPortABCD":
        return TwoPortABCD(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def determinant(self) -> complex:
        return self.a * self.d - self.b * self.c


def abcd_cascade(blocks: Sequence[TwoPortABCD]) -> TwoPortABCD:
    """Multiply blocks left to right. Raises ValueError on an empty cascade."""
    if not blocks:
        raise ValueError("empty cascade")
    out = blocks[0]
    for blk in blocks[1:]:
        out = out @ blk
    return out


def abcd_to_s(m: TwoPortABCD, z_ref: float = 50.0) -> tuple[complex, complex, complex, complex]:
    """Standard ABCD -> (s11, s12, s21, s22) at reference impedance z_ref."""
    if z_ref <= 0:
        raise ValueError(f"reference impedance must be positive, got {z_ref}")
    den = m.a + m.b / z_ref + m.c * z_ref + m.d
    if abs(den) < 1e-30:
        raise DegenerateNetworkError("degenerate network: singular ABCD->S denominator")
    s11 = (m.a + m.b / z_ref - m.c * z_ref - m.d) / den
    s12 = 2.0 * m.determinant() / den
    s21 = 2.0 / den
    s22 = (-m.a + m.b / z_ref - m.c * z_ref + m.d) / den
    return s11, s12, s21, s22


def db_mag(x: complex | float | np.ndarray, floor: float = DB_FLOOR) -> float | np.ndarray:
    """20*log10(|x|); exact zeros map to `floor` so reward arithmetic stays finite."""
    mag = np.abs(x)
    if np.isscalar(mag) or mag.ndim == 0:
        return float(floor) if mag == 0.0 else float(20.0 * np.log10(mag))
    out = np.full(mag.shape, float(floor))
    nz = mag > 0.0
    out[nz] = 20.0 * np.log10(mag[nz])
    return out


@dataclass(frozen=True)
class SParamPoint:
    """Scattering parameters of a two-port at one frequency."""

    frequency: float
    s11: complex
    s12: complex
    s21: complex
    s22: complex


@dataclass(frozen=True)
class SParamSweep:
    """Frequency sweep of 2x2 scattering matrices.

    frequencies: strictly increasing, in Hz, length >= 2.
    s: complex array of shape (n, 2, 2), s[i] = [[s11, s12], [s21, s22]].
    """

    frequencies: np.ndarray
    s: np.ndarray
    z_ref: float = 50.0

    def __post_init__(self) -> None:
        f = np.asarray(self.frequencies, dtype=float)
        s = np.asarray(self.s, dtype=complex)
        if f.ndim != 1 or len(f) < 2:
            raise ValueError("sweep needs at least 2 frequency points")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if s.shape != (len(f), 2, 2):
            raise ValueError(f"s must have shape ({len(f)}, 2, 2), got {s.shape}")
        if self.z_ref <= 0:
            raise ValueError("z_ref must be positive")
        f.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "s", s)

    def __len__(self) -> int:
        return len(self.frequencies)

    @property
    def s11(self) -> np.ndarray:
        return self.s[:, 0, 0]

    @property
    def s12(self) -> np.ndarray:
        return self.s[:, 0, 1]

    @property
    def s21(self) -> np.ndarray:
        return self.s[:, 1, 0]

    @property
    def s22(self) -> np.ndarray:
        return self.s[:, 1, 1]

    def s11_db(self) -> np.ndarray:
        return db_mag(self.s11)

    def s21_db(self) -> np.ndarray:
        return db_mag(self.s21)

    def points(self) -> Iterator[SParamPoint]:
        for i, f in enumerate(self.frequencies):
            yield SParamPoint(float(f), *(complex(self.s[i, r, c])
                                          for r, c in ((0, 0), (0, 1), (1, 0), (1, 1))))


def sweep_from_components(frequencies: np.ndarray, s11: np.ndarray, s12: np.ndarray,
                          s21: np.ndarray, s22: np.ndarray, z_ref: float = 50.0) -> SParamSweep:
    n = len(frequencies)
    s = np.empty((n, 2, 2), dtype=complex)
    s[:, 0, 0] = s11
    s[:, 0, 1] = s12
    s[:, 1, 0] = s21
    s[:, 1, 1] = s22
    return SParamSweep(np.asarray(frequencies, dtype=float), s, z_ref)
