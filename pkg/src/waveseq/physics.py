"""Spectral moments and bulk wave parameters.

Frequencies are angular frequencies (rad/s) and densities are in m^2 s,
so that the zeroth moment is a variance in m^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PhysicsConstants:
    rho: float = 1025.0  # seawater density, kg/m^3
    g: float = 9.80665  # m/s^2

    def __post_init__(self):
        if not (self.rho > 0 and self.g > 0):
            raise ValueError(f"rho and g must be positive, got rho={self.rho}, g={self.g}")

    @property
    def flux_coefficient(self) -> float:
        """rho * g**2 / (64 pi), in W s^-1 m^-3."""
        return self.rho * self.g**2 / (64.0 * math.pi)


DEFAULT_CONSTANTS = PhysicsConstants()


@dataclass(frozen=True)
class SpectrumSample:
    frequencies: np.ndarray
    densities: np.ndarray

    def __init__(self, frequencies: Sequence[float], densities: Sequence[float]):
        w = np.asarray(frequencies, dtype=float)
        s = np.asarray(densities, dtype=float)
        if w.ndim != 1 or s.shape != w.shape:
            raise ValueError("frequencies and densities must be 1-D and of equal length")
        if w.size < 2:
            raise ValueError("a spectrum needs at least 2 samples")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(s)):
            raise ValueError("spectrum contains non-finite values")
        if np.any(np.diff(w) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if np.any(s < 0):
            raise ValueError("spectral densities must be non-negative")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "densities", s)


def spectral_moment(spectrum: SpectrumSample, r: int) -> float:
    """Trapezoid-rule moment of order ``r`` over the sampled band.

    No tail extrapolation is done outside ``[w_min, w_max]``.
    """
    w = spectrum.frequencies
    if r < 0 and w[0] <= 0:
        raise ValueError(f"moment of order {r} needs strictly positive frequencies")
    if r == 0:
        integrand = spectrum.densities
    else:
        integrand = w ** float(r) * spectrum.densities
    return float(np.trapezoid(integrand, w))


def significant_wave_height(spectrum: SpectrumSample) -> float:
    return 4.0 * math.sqrt(spectral_moment(spectrum, 0))


def average_period(spectrum: SpectrumSample) -> float:
    """Ratio of the -1 and 0 order moments, in seconds."""
    m0 = spectral_moment(spectrum, 0)
    if m0 <= 0:
        raise ValueError("degenerate spectrum: zeroth moment is zero")
    return spectral_moment(spectrum, -1) / m0


def energy_flux(hs, a, c: PhysicsConstants = DEFAULT_CONSTANTS):
    """Wave energy flux per metre of crest, W/m.

    Accepts scalars or arrays. ``hs`` is significant wave height in metres
    and ``a`` the average period in seconds.
    """
    hs_arr = np.asarray(hs, dtype=float)
    a_arr = np.asarray(a, dtype=float)
    if np.any(hs_arr < 0) or not np.all(np.isfinite(hs_arr)):
        raise ValueError("significant wave height must be finite and >= 0")
    if np.any(a_arr <= 0) or not np.all(np.isfinite(a_arr)):
        raise ValueError("average period must be finite and > 0")
    p = c.flux_coefficient * hs_arr**2 * a_arr
    if p.ndim == 0:
        return float(p)
    return p
