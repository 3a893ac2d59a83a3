"""Touchstone v1 two-port (.s2p) read/write plus a flat CSV export.

Canonical on-disk form: `# GHZ S RI R 50`, one row per frequency with
S11 S21 S12 S22 as real/imag pairs. Writing is deterministic: identical
sweeps produce identical bytes.
"""
from __future__ import annotations

import io
from pathlib import Path
from typing import TextIO

import numpy as np

from .sparams import SParamSweep, db_mag, sweep_from_components

_UNIT_HZ = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


class TouchstoneError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def _open_out(destination) -> tuple[TextIO, bool]:
    if hasattr(destination, "write"):
        return destination, False
    return open(destination, "w", newline="\n"), True


def write_touchstone(sweep: SParamSweep, destination) -> None:
    """Write a two-port sweep as Touchstone v1, RI format, GHz units."""
    fh, owned = _open_out(destination)
    try:
        fh.write("! two-port S-parameters\n")
        fh.write(f"# GHZ S RI R {sweep.z_ref:g}\n")
        fh.write("! freq_ghz s11_re s11_im s21_re s21_im s12_re s12_im s22_re s22_im\n")
        for i, f in enumerate(sweep.frequencies):
            vals = [f / 1e9]
            for r, c in ((0, 0), (1, 0), (0, 1), (1, 1)):
                z = sweep.s[i, r, c]
                vals.extend((z.real, z.imag))
            fh.write(" ".join(f"{v:.12e}" for v in vals) + "\n")
    finally:
        if owned:
            fh.close()


def read_touchstone(source) -> SParamSweep:
    """Parse Touchstone v1 two-port content. Errors carry the offending line number."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    unit = None
    z_ref = 50.0
    rows: list[list[float]] = []
    last_f = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if unit is not None:
                raise TouchstoneError("duplicate option line", line_no)
            toks = line[1:].upper().split()
            opts = ["GHZ", "S", "MA", "R", "50"]
            opts[: len(toks)] = toks
            if opts[0] not in _UNIT_HZ:
                raise TouchstoneError(f"unknown frequency unit {opts[0]!r}", line_no)
            if opts[1] != "S":
                raise TouchstoneError(f"unsupported parameter type {opts[1]!r}", line_no)
            if opts[2] != "RI":
                raise TouchstoneError(f"unsupported format {opts[2]!r} (RI only)", line_no)
            if opts[3] != "R":
                raise TouchstoneError("malformed option line (expected 'R <ohms>')", line_no)
            try:
                z_ref = float(opts[4])
            except ValueError:
                raise TouchstoneError(f"bad reference impedance {opts[4]!r}", line_no) from None
            unit = _UNIT_HZ[opts[0]]
            continue
        if unit is None:
            raise TouchstoneError("data before option line", line_no)
        toks = line.split()
        if len(toks) != 9:
            raise TouchstoneError(f"expected 9 columns, got {len(toks)}", line_no)
        try:
            vals = [float(t) for t in toks]
        except ValueError:
            raise TouchstoneError("non-numeric value", line_no) from None
        f = vals[0] * unit
        if last_f is not None and f <= last_f:
            raise TouchstoneError(f"frequency not increasing ({f:g} Hz)", line_no)
        last_f = f
        rows.append([f] + vals[1:])
    if unit is None:
        raise TouchstoneError("missing option line")
    if len(rows) < 2:
        raise TouchstoneError("fewer than 2 data rows")
    arr = np.array(rows)
    # column order: f, S11, S21, S12, S22 (Touchstone two-port convention)
    s11 = arr[:, 1] + 1j * arr[:, 2]
    s21 = arr[:, 3] + 1j * arr[:, 4]
    s12 = arr[:, 5] + 1j * arr[:, 6]
    s22 = arr[:, 7] + 1j * arr[:, 8]
    return sweep_from_components(arr[:, 0], s11, s12, s21, s22, z_ref)


def touchstone_dumps(sweep: SParamSweep) -> str:
    buf = io.StringIO()
    write_touchstone(sweep, buf)
    return buf.getvalue()


def touchstone_loads(text: str) -> SParamSweep:
    return read_touchstone(io.StringIO(text))


def write_sweep_csv(sweep: SParamSweep, destination) -> None:
    """CSV: frequency_hz, s11_db, s21_db, s11_re, s11_im, s21_re, s21_im."""
    fh, owned = _open_out(destination)
    try:
        fh.write("frequency_hz,s11_db,s21_db,s11_re,s11_im,s21_re,s21_im\n")
        s11db = sweep.s11_db()
        s21db = sweep.s21_db()
        for i, f in enumerate(sweep.frequencies):
            s11 = sweep.s[i, 0, 0]
            s21 = sweep.s[i, 1, 0]
            row = (f, s11db[i], s21db[i], s11.real, s11.imag, s21.real, s21.imag)
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if owned:
            fh.close()
