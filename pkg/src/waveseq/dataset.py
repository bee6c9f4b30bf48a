"""Supervised windows over aligned station tables."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .ndbc import AlignedTable, ColumnKey, column_label, format_timestamp, parse_timestamp
from .physics import DEFAULT_CONSTANTS, PhysicsConstants, energy_flux


@dataclass(frozen=True)
class WindowSpec:
    T: int
    T_out: int
    input_features: Tuple[ColumnKey, ...]
    target_features: Tuple[ColumnKey, ...]

    def __post_init__(self):
        if self.T < 1 or self.T_out < 1:
            raise ValueError("T and T_out must be >= 1")
        if not self.input_features or not self.target_features:
            raise ValueError("need at least one input and one target column")

    @property
    def d(self) -> int:
        return len(self.input_features)

    @property
    def m(self) -> int:
        return len(self.target_features)


@dataclass(frozen=True)
class SampleWindow:
    x: np.ndarray  # (T, d)
    y: np.ndarray  # (T_out, m)
    origin: np.datetime64


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f < 0 for f in fracs):
            raise ValueError("split fractions must be non-negative")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fracs)}")


def make_windows(table: AlignedTable, spec: WindowSpec, stride: int = 1) -> List[SampleWindow]:
    """Slide over the table: ``x`` is ``T`` rows, ``y`` the next ``T_out`` target rows."""
    if stride < 1:
        raise ValueError("stride must be positive")
    n = len(table)
    if n < spec.T + spec.T_out:
        raise ValueError(f"table has {n} rows, need at least T + T_out = {spec.T + spec.T_out}")
    xs = table.columns(spec.input_features)
    ys = table.columns(spec.target_features)
    out = []
    for o in range(0, n - spec.T - spec.T_out + 1, stride):
        out.append(
            SampleWindow(
                xs[o : o + spec.T].copy(),
                ys[o + spec.T : o + spec.T + spec.T_out].copy(),
                table.timestamps[o],
            )
        )
    return out


def chronological_split(n: int, s: SplitSpec = SplitSpec()) -> Tuple[range, range, range]:
    if n < 3:
        raise ValueError("need at least 3 rows to split")
    a = math.floor(s.train_frac * n + 1e-9)
    b = math.floor((s.train_frac + s.val_frac) * n + 1e-9)
    parts = (range(0, a), range(a, b), range(b, n))
    for name, r, frac in zip(("train", "validation", "test"), parts, (s.train_frac, s.val_frac, s.test_frac)):
        if frac > 0 and len(r) == 0:
            raise ValueError(f"{name} range is empty for n={n}")
    return parts


def split_windows(
    table: AlignedTable, spec: WindowSpec, s: SplitSpec = SplitSpec(), stride: int = 1
) -> Tuple[List[SampleWindow], List[SampleWindow], List[SampleWindow]]:
    """Window each chronological part separately so no window crosses a boundary."""
    return tuple(
        make_windows(table.rows(slice(r.start, r.stop)), spec, stride) if len(r) else []
        for r in chronological_split(len(table), s)
    )


def build_reconstruction_set(
    table: AlignedTable,
    target: ColumnKey,
    inputs: Sequence[ColumnKey],
    T: int,
    rows: Optional[Sequence[int]] = None,
    lead: int = 0,
    pad: bool = False,
) -> List[SampleWindow]:
    """Windows estimating ``target`` at row r from ``inputs`` over rows ``r-lead-T+1 .. r-lead``.

    ``lead=0`` is a nowcast (target contemporaneous with the newest input
    row), ``lead=1`` one step ahead. ``rows`` restricts which target rows are
    produced; input history may reach back before them. With ``pad=True``
    rows lacking full history reuse the first table row, so every requested
    target gets a window; otherwise such rows are dropped.
    """
    if not inputs:
        raise ValueError("reconstruction needs at least one input column")
    target = (str(target[0]), str(target[1]).upper())
    inputs = [(str(k[0]), str(k[1]).upper()) for k in inputs]
    if target in inputs:
        raise ValueError(f"target {column_label(target)} cannot also be an input")
    if T < 1 or lead < 0:
        raise ValueError("T must be >= 1 and lead >= 0")
    xs = table.columns(inputs)
    ys = table.column(target)
    if rows is None:
        rows = range(len(table))
    out = []
    for r in rows:
        hi = r - lead
        lo = hi - T + 1
        if lo < 0:
            if not pad or hi < 0:
                continue
            idx = np.clip(np.arange(lo, hi + 1), 0, None)
            x = xs[idx]
        else:
            x = xs[lo : hi + 1]
        out.append(SampleWindow(x.copy(), np.array([[ys[r]]]), table.timestamps[max(lo, 0)]))
    return out


def derive_power_column(
    table: AlignedTable, station: str, c: PhysicsConstants = DEFAULT_CONSTANTS, name: str = "POWER"
) -> AlignedTable:
    """Append ``station:POWER`` computed from that station's WVHT and APD."""
    hs = table.column((station, "WVHT"))
    a = table.column((station, "APD"))
    assert np.all(np.isfinite(hs)) and np.all(np.isfinite(a))
    return table.with_column((station, name), energy_flux(hs, a, c))


def stack(windows: Sequence[SampleWindow]) -> Tuple[np.ndarray, np.ndarray]:
    """Batch arrays ``X`` (B, T, d) and ``Y`` (B, T_out, m)."""
    if not windows:
        raise ValueError("no windows to stack")
    return np.stack([w.x for w in windows]), np.stack([w.y for w in windows])


class AffineScaler:
    """Per-column ``(v - shift) / scale``, fit on training data only."""

    def __init__(self, shift, scale):
        self.shift = np.asarray(shift, dtype=float)
        self.scale = np.asarray(scale, dtype=float)

    @classmethod
    def fit(cls, values: np.ndarray) -> "AffineScaler":
        values = np.asarray(values, dtype=float).reshape(-1, np.shape(values)[-1])
        scale = values.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(values.mean(axis=0), scale)

    def transform(self, v):
        return (np.asarray(v) - self.shift) / self.scale

    def inverse(self, v):
        return np.asarray(v) * self.scale + self.shift


def windows_to_csv(windows: Sequence[SampleWindow], path) -> None:
    """One row per window: origin, ``x`` flattened row-major, then ``y``."""
    if not windows:
        raise ValueError("no windows to write")
    T, d = windows[0].x.shape
    To, m = windows[0].y.shape
    header = ["origin"] + [f"x{t}_{j}" for t in range(T) for j in range(d)]
    header += [f"y{t}_{j}" for t in range(To) for j in range(m)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for win in windows:
            w.writerow([format_timestamp(win.origin)] + [repr(float(v)) for v in win.x.ravel()] + [repr(float(v)) for v in win.y.ravel()])


def windows_from_csv(path) -> List[SampleWindow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        xs = [h for h in header if h.startswith("x")]
        ys = [h for h in header if h.startswith("y")]
        T = 1 + max(int(h[1:].split("_")[0]) for h in xs)
        To = 1 + max(int(h[1:].split("_")[0]) for h in ys)
        d, m = len(xs) // T, len(ys) // To
        out = []
        for rec in reader:
            if not rec:
                continue
            vals = np.array([float(v) for v in rec[1:]])
            out.append(SampleWindow(vals[: T * d].reshape(T, d), vals[T * d :].reshape(To, m), parse_timestamp(rec[0])))
    return out
