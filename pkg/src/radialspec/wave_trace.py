"""Smoothed wave trace sum_k w(omega_k) cos(t omega_k) and its singularities.

Eigenvalues are stored negative; omega = sqrt(-lam) throughout, so there is no
branch ambiguity in the square roots.

Singularities are located on the envelope |sum_k w_k exp(i t omega_k)| rather
than on |s(t)|: with positive weights each isolated orbit family contributes a
single hump centred on its length, whereas |s| carries oscillating side lobes
roughly pi / omega_max away from it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks

from .eigensolver import Spectrum

T_MIN = 0.5
_CHUNK = 2048


@dataclass(frozen=True)
class Window:
    """Cosine-squared taper cos^2(pi omega / (2 omega_max)) on [0, omega_max].

    ``shape="flat"`` gives w = 1 (no cutoff when omega_max is infinite).
    """

    omega_max: float = math.inf
    shape: str = "cos2"

    def weight(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        inside = omega < self.omega_max
        if self.shape == "flat" or not math.isfinite(self.omega_max):
            return inside.astype(float)
        return np.where(inside, np.cos(0.5 * np.pi * omega / self.omega_max) ** 2, 0.0)

    def derivative(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if self.shape == "flat" or not math.isfinite(self.omega_max):
            return np.zeros_like(omega)
        x = 0.5 * np.pi * omega / self.omega_max
        return np.where(omega < self.omega_max,
                        -0.5 * np.pi / self.omega_max * np.sin(2 * x), 0.0)


@dataclass(frozen=True)
class Peak:
    t: float
    prominence: float
    value: float


@dataclass(eq=False)
class TraceSeries:
    t: np.ndarray
    values: np.ndarray
    window: Window
    envelope: np.ndarray | None = None
    peaks: list[Peak] = field(default_factory=list)

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.t, self.values]), delimiter=",",
                   header="t,value", comments="", fmt="%.17g")


def _freqs(spectrum) -> tuple[np.ndarray, np.ndarray]:
    """(omega, multiplicity) from a Spectrum or from an expanded eigenvalue list."""
    if isinstance(spectrum, Spectrum):
        lam, mult = spectrum.lams, spectrum.multiplicities.astype(float)
    else:
        lam = np.asarray(spectrum, dtype=float)
        mult = np.ones_like(lam)
    if lam.size == 0:
        raise ValueError("empty spectrum")
    return np.sqrt(np.maximum(-lam, 0.0)), mult


def _exp_sum(t, omega, coef):
    out = np.empty(t.size, dtype=complex)
    for i in range(0, t.size, _CHUNK):
        out[i:i + _CHUNK] = np.exp(1j * np.outer(t[i:i + _CHUNK], omega)) @ coef
    return out


def _cos_sum(t, omega, coef, fn=np.cos, tfactor=False):
    out = np.empty(t.size)
    for i in range(0, t.size, _CHUNK):
        tt = t[i:i + _CHUNK]
        out[i:i + _CHUNK] = fn(np.outer(tt, omega)) @ coef
        if tfactor:
            out[i:i + _CHUNK] *= tt
    return out


def trace_series(spectrum, window: Window, t_grid: Sequence[float]) -> TraceSeries:
    t = np.asarray(t_grid, dtype=float)
    omega, mult = _freqs(spectrum)
    if math.isfinite(window.omega_max) and window.omega_max > omega.max():
        raise ValueError(f"window cutoff {window.omega_max} beyond the largest computed "
                         f"frequency {omega.max():.4g}; raise n_max or ell_max")
    w = window.weight(omega) * mult
    keep = w != 0
    z = _exp_sum(t, omega[keep], w[keep])
    return TraceSeries(t, z.real.copy(), window, np.abs(z))


def delta_trace(spectrum, dlam: Sequence[float], t_grid: Sequence[float],
                window: Window | None = None, window_derivative: bool = True) -> TraceSeries:
    """sum_k w(omega_k) dlam_k / (2 omega_k) t sin(t omega_k).

    With ``window_derivative`` the taper's own change, -w'(omega) dlam/(2 omega) cos(t omega),
    is added so the result is the exact s-derivative of :func:`trace_series`.
    """
    window = window or Window()
    t = np.asarray(t_grid, dtype=float)
    omega, mult = _freqs(spectrum)
    dlam = np.asarray(dlam, dtype=float)
    if dlam.shape != omega.shape:
        raise ValueError(f"{dlam.size} shifts for {omega.size} eigenvalues")
    nz = omega > 0
    omega, mult, dlam = omega[nz], mult[nz], dlam[nz]
    dom = -dlam / (2 * omega)  # d omega / ds
    coef = -window.weight(omega) * mult * dom
    out = _cos_sum(t, omega, coef, np.sin, tfactor=True)
    if window_derivative:
        out += _cos_sum(t, omega, window.derivative(omega) * mult * dom)
    return TraceSeries(t, out, window)


def detect_peaks(series: TraceSeries, min_prominence: float,
                 signal: str = "auto") -> list[Peak]:
    """Local maxima with at least ``min_prominence``, refined by a parabola.

    ``signal`` is ``"envelope"``, ``"abs"`` (|s(t)|) or ``"auto"`` (envelope when
    the series has one).
    """
    if signal == "auto":
        signal = "envelope" if series.envelope is not None else "abs"
    y = series.envelope if signal == "envelope" else np.abs(series.values)
    if y is None:
        raise ValueError("series has no envelope")
    if not np.any(y > 0):
        return []
    idx, props = find_peaks(y, prominence=min_prominence)
    t = series.t
    out = []
    for i, prom in zip(idx, props["prominences"]):
        ti, yi = t[i], y[i]
        if 0 < i < y.size - 1:
            y0, y1, y2 = y[i - 1], y[i], y[i + 1]
            den = y0 - 2 * y1 + y2
            if den < 0:
                off = 0.5 * (y0 - y2) / den
                ti = t[i] + off * (t[i + 1] - t[i - 1]) / 2
                yi = y1 - 0.25 * (y0 - y2) * off
        out.append(Peak(float(ti), float(prom), float(yi)))
    return out


def match_peaks(peaks: list[Peak], lengths: np.ndarray, tol: float = 0.05,
                labels: Sequence | None = None) -> list[dict]:
    """Pair each peak with the nearest orbit length (and its label, if given)."""
    lengths = np.asarray(lengths, dtype=float)
    out = []
    for pk in peaks:
        row = {"t": pk.t, "prominence": pk.prominence, "nearest_orbit_T": None,
               "gap": None, "matched": False}
        if lengths.size:
            j = int(np.argmin(np.abs(lengths - pk.t)))
            gap = float(abs(lengths[j] - pk.t))
            row.update(nearest_orbit_T=float(lengths[j]), gap=gap, matched=bool(gap <= tol))
            if labels is not None:
                row["orbit"] = labels[j]
        out.append(row)
    return out


def isolated_lengths(lengths: np.ndarray, t_min: float, t_max: float,
                     separation: float = 0.15) -> np.ndarray:
    """Lengths in [t_min, t_max] at least ``separation`` away from every other length."""
    L = np.unique(np.asarray(lengths, dtype=float))
    out = []
    for i, T in enumerate(L):
        if not t_min <= T <= t_max:
            continue
        others = np.delete(L, i)
        if others.size == 0 or np.min(np.abs(others - T)) >= separation:
            out.append(T)
    return np.array(out)


def write_peaks_json(path, matches: list[dict]) -> None:
    with open(path, "w") as fh:
        json.dump(matches, fh, indent=2, sort_keys=True)
