"""Two-beam fringe rendering and fringe-shift extraction."""
from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateFringeError, NoFringeError, ShapeError

MIN_VISIBILITY = 0.5


def synthesize_fringes(psi1: np.ndarray, psi2: np.ndarray, x: np.ndarray, tilt: float) -> np.ndarray:
    """Intensity ``|psi1 + exp(i tilt x) psi2|^2 dx`` of two beams recombined at an angle."""
    if tilt == 0:
        raise DegenerateFringeError("tilt must be non-zero to form fringes")
    psi1, psi2, x = np.asarray(psi1), np.asarray(psi2), np.asarray(x, dtype=float)
    if not (psi1.shape == psi2.shape == x.shape) or x.ndim != 1:
        raise ShapeError(f"fringe synthesis needs matching 1D arrays, got {psi1.shape}, {psi2.shape}, {x.shape}")
    dx = x[1] - x[0]
    return np.abs(psi1 + np.exp(1j * tilt * x) * psi2) ** 2 * dx


def demodulate(intensity: np.ndarray, x: np.ndarray, tilt: float) -> np.ndarray:
    """Complex fringe envelope: shift the ``+tilt`` band to zero and low-pass below ``tilt/2``."""
    mixed = np.asarray(intensity, dtype=float) * np.exp(-1j * tilt * x)
    spectrum = np.fft.fft(mixed)
    k = 2.0 * math.pi * np.fft.fftfreq(x.size, d=x[1] - x[0])
    spectrum[np.abs(k) >= 0.5 * abs(tilt)] = 0.0
    return np.fft.ifft(spectrum)


def visibility(intensity: np.ndarray, x: np.ndarray, tilt: float) -> float:
    """Envelope-weighted fringe contrast in [0, 1]; 1 for perfectly balanced beams."""
    total = float(np.sum(intensity))
    if total <= 0:
        return 0.0
    return 2.0 * float(np.sum(np.abs(demodulate(intensity, x, tilt)))) / total


def wrap_periods(s: float) -> float:
    """Map a shift in periods onto (-0.5, 0.5]."""
    return s - math.ceil(s - 0.5)


def fringe_shift(i_on: np.ndarray, i_off: np.ndarray, tilt: float, x: np.ndarray) -> float:
    """Displacement of ``i_on`` relative to ``i_off`` in fringe periods, in (-0.5, 0.5].

    Both patterns are demodulated at the fringe wavenumber; the phase of
    their zero-lag complex cross-correlation gives the shift. A pattern whose
    maxima sit at ``tilt x = phi`` is displaced by ``phi / 2 pi`` (for
    either sign of ``tilt``).
    """
    if tilt == 0:
        raise DegenerateFringeError("tilt must be non-zero to form fringes")
    x = np.asarray(x, dtype=float)
    i_on, i_off = np.asarray(i_on, dtype=float), np.asarray(i_off, dtype=float)
    if not (i_on.shape == i_off.shape == x.shape):
        raise ShapeError("fringe patterns must share one x-grid")
    for name, pattern in (("on", i_on), ("off", i_off)):
        v = visibility(pattern, x, tilt)
        if not v > MIN_VISIBILITY:
            raise NoFringeError(f"pattern '{name}' has fringe visibility {v:.3g} <= {MIN_VISIBILITY}")
    corr = np.vdot(demodulate(i_off, x, tilt), demodulate(i_on, x, tilt))
    return wrap_periods(-math.atan2(corr.imag, corr.real) / (2.0 * math.pi))
