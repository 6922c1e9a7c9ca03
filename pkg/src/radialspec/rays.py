"""Radial ray geometry: turning radii, chords, periodic broken rays, Abel transform.

Everything is written in terms of eta(r) = r / c(r). A ray with parameter p
turns where eta(r*) = p (or reflects off the inner sphere when eta(R) > p), and
all chord integrals share the kernel

    K_p[f] = int_{r*}^1 f(r) r / (c(r)^2 sqrt(eta(r)^2 - p^2)) dr,

which is the travel-time integral of f along half a chord. The inverse square
root at r* is removed by substituting r = r* cosh(u).
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .profiles import RadialFunction, RadialProfile, herglotz_margin

log = logging.getLogger(__name__)

QUAD_RTOL = 1e-12
# floor for near-grazing chords, whose integrals are tiny
QUAD_ATOL = 1e-15
ROOT_TOL = 1e-10
MERGE_TOL = 1e-9
# below this r - r*, c(r) - c(r*) is integrated from c' instead of subtracted
_GL_SWITCH = 0.05
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X, _GL_W = 0.5 * (_GL_X + 1.0), 0.5 * _GL_W


class RayError(ValueError):
    pass


@dataclass(frozen=True)
class RayParameter:
    p: float
    turning_radius: float
    reflecting: bool = False  # bottoms out on the inner sphere r = R


@dataclass(frozen=True)
class PeriodicOrbit:
    p: float
    n_chords: int
    m_windings: int
    T: float
    turning_radius: float
    reflecting: bool = False


@dataclass
class LengthSpectrum:
    orbits: list[PeriodicOrbit]
    failures: list[tuple[int, int, str]] = field(default_factory=list)
    merged: list[tuple[PeriodicOrbit, PeriodicOrbit]] = field(default_factory=list)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([o.T for o in self.orbits])

    def lengths_up_to(self, t_max: float, iterates: bool = True) -> np.ndarray:
        """Orbit lengths <= t_max, with k-fold traversals when ``iterates``."""
        out = []
        for T in self.lengths:
            k = 1
            while k * T <= t_max:
                out.append(k * T)
                if not iterates:
                    break
                k += 1
        return np.sort(np.array(out))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "m", "p", "T"])
            for o in self.orbits:
                w.writerow([o.n_chords, o.m_windings, repr(o.p), repr(o.T)])


def _as_callable(f) -> Callable:
    if isinstance(f, RadialFunction) or callable(f):
        return f
    val = float(f)
    return lambda r: val * np.ones_like(np.asarray(r, dtype=float))


def eta(profile: RadialProfile, r):
    return r / profile.speed(r)


def max_ray_parameter(profile: RadialProfile) -> float:
    return float(1.0 / profile.speed(1.0))


def turning_point(profile: RadialProfile, p: float) -> RayParameter:
    pmax = max_ray_parameter(profile)
    if not 0.0 <= p <= pmax * (1 + 1e-14):
        raise RayError(f"ray parameter {p} outside [0, {pmax}]")
    R = profile.inner_radius
    if p >= pmax:
        return RayParameter(p, 1.0)
    eR = float(eta(profile, R)) if R > 0 else 0.0
    if R > 0 and eR >= p:
        return RayParameter(p, R, reflecting=True)
    if p == 0.0:
        return RayParameter(p, 0.0)
    g = lambda r: float(eta(profile, r)) - p
    try:
        rs = optimize.brentq(g, R, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    except ValueError as exc:
        raise RayError(f"no turning radius for p = {p}; Herglotz condition violated?") from exc
    return RayParameter(p, rs)


def _kernel(profile: RadialProfile, ray: RayParameter, f: Callable) -> float:
    """K_p[f]; see the module docstring."""
    rs, p = ray.turning_radius, ray.p
    if rs >= 1.0:
        return 0.0
    c = profile.speed

    if ray.reflecting or rs == 0.0:
        lo = profile.inner_radius if ray.reflecting else 0.0
        if ray.reflecting:
            def integrand(r):
                e = r / c(r)
                return f(r) * r / (c(r) ** 2 * math.sqrt((e - p) * (e + p)))
        else:
            # p = 0 in the ball: the integrand reduces to f / c
            def integrand(r):
                return f(r) / c(r)
        val, _ = integrate.quad(integrand, lo, 1.0, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=400)
        return float(val)

    cs = float(c(rs))
    umax = math.acosh(1.0 / rs)

    def integrand(u):
        if u == 0.0:
            return _limit_at_turning(profile, ray, f)
        dr = 2.0 * rs * math.sinh(0.5 * u) ** 2  # r - r*, free of cancellation
        r = rs + dr
        cr = float(c(r))
        if dr < _GL_SWITCH:
            dc = dr * float(np.dot(_GL_W, profile.speed_derivative(rs + dr * _GL_X)))
        else:
            dc = cr - cs
        # eta(r) - p written to avoid subtracting nearly equal numbers
        de = (dr * cs - rs * dc) / (cr * cs)
        e = r / cr
        return float(f(r)) * r / (cr * cr * math.sqrt(de * (e + p))) * rs * math.sinh(u)

    val, _ = integrate.quad(integrand, 0.0, umax, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=400)
    return float(val)


def _limit_at_turning(profile, ray, f):
    rs, p = ray.turning_radius, ray.p
    c = float(profile.speed(rs))
    deta = (1.0 - rs * float(profile.speed_derivative(rs)) / c) / c
    return float(f(rs)) * rs * rs / (c * c * math.sqrt(deta * rs * p))


def chord_time(profile: RadialProfile, p: float) -> float:
    """Travel time of one boundary-to-boundary chord."""
    ray = turning_point(profile, p)
    return 2.0 * _kernel(profile, ray, lambda r: 1.0)


def angular_advance(profile: RadialProfile, p: float) -> float:
    """Angle subtended at the centre by one chord."""
    ray = turning_point(profile, p)
    if ray.turning_radius == 0.0 and p == 0.0:
        return math.pi
    c = profile.speed
    return 2.0 * _kernel(profile, ray, lambda r: p * float(c(r)) ** 2 / (r * r))


def abel_transform(profile: RadialProfile, f, r: float) -> float:
    """int_r^1 (f/c)(1 - (r c(r') / (r' c(r)))^2)^(-1/2) dr'."""
    R = profile.inner_radius
    if not R <= r <= 1.0:
        raise RayError(f"radius {r} outside [{R}, 1]")
    if r == 1.0:
        return 0.0
    if r == 0.0:
        return _kernel(profile, RayParameter(0.0, 0.0), _as_callable(f))
    p = float(eta(profile, r))
    fc = _as_callable(f)
    return _kernel(profile, RayParameter(p, r), lambda x: float(fc(x)))


def orbit_integral(profile: RadialProfile, orbit: PeriodicOrbit, f) -> float:
    """int_0^T f(gamma(t)) dt over the orbit; each chord contributes two half-chords."""
    fc = _as_callable(f)
    ray = RayParameter(orbit.p, orbit.turning_radius, orbit.reflecting)
    return 2 * orbit.n_chords * _kernel(profile, ray, lambda x: float(fc(x)))


def _p_grid(profile: RadialProfile, n: int = 400) -> np.ndarray:
    pmax = max_ray_parameter(profile)
    # cluster near both ends, where angular advance varies fastest
    x = 0.5 * (1 - np.cos(np.linspace(0.0, math.pi, n)))
    return pmax * x[:-1]


def find_periodic_orbits(profile: RadialProfile, n_max_chords: int, m_max: int,
                         grid_size: int = 400) -> LengthSpectrum:
    """Periodic broken rays with n chords and m windings, m/n in lowest terms."""
    margin = herglotz_margin(profile)
    if margin <= 0:
        raise RayError(f"Herglotz condition violated (min d/dr (r/c) = {margin:.3g})")
    ps = _p_grid(profile, grid_size)
    dtheta = np.array([angular_advance(profile, p) for p in ps])
    orbits: list[PeriodicOrbit] = []
    failures = []
    for n in range(1, n_max_chords + 1):
        for m in range(1, m_max + 1):
            if math.gcd(n, m) != 1:
                continue
            target = 2 * math.pi * m / n
            g = n * dtheta - 2 * math.pi * m
            roots = [ps[i] for i in np.flatnonzero(g == 0.0)]
            for i in np.flatnonzero(g[:-1] * g[1:] < 0):
                fn = lambda p: angular_advance(profile, p) - target
                try:
                    roots.append(optimize.brentq(fn, ps[i], ps[i + 1], xtol=1e-15,
                                                 rtol=4 * np.finfo(float).eps))
                except ValueError as exc:
                    failures.append((n, m, str(exc)))
            for p in roots:
                ray = turning_point(profile, p)
                resid = abs(n * angular_advance(profile, p) - 2 * math.pi * m)
                if resid > ROOT_TOL:
                    failures.append((n, m, f"residual {resid:.2e}"))
                    continue
                T = n * chord_time(profile, p)
                orbits.append(PeriodicOrbit(float(p), n, m, T, ray.turning_radius, ray.reflecting))
    orbits.sort(key=lambda o: o.T)
    kept: list[PeriodicOrbit] = []
    merged = []
    for o in orbits:
        if kept and abs(o.T - kept[-1].T) < MERGE_TOL:
            merged.append((kept[-1], o))
            warnings.warn(f"length spectrum not simple: ({kept[-1].n_chords},{kept[-1].m_windings}) "
                          f"and ({o.n_chords},{o.m_windings}) share T = {o.T:.10f}")
            continue
        kept.append(o)
    return LengthSpectrum(kept, failures, merged)


def delta_T(profile: RadialProfile, orbit: PeriodicOrbit, a_dir) -> float:
    """First-order change of the orbit length under a -> a + s a_dir.

    By Fermat's principle dT = 1/2 int_0^T c^2 d/ds(c_s^-2) dt = -1/2 int_0^T a_dir dt,
    evaluated through the Abel kernel of the unperturbed orbit.
    """
    return -0.5 * orbit_integral(profile, orbit, a_dir)


def speed_variation_abel(profile: RadialProfile, a_dir, radii) -> np.ndarray:
    """Abel transform of d/ds c_s^-2 = -a_dir c^-2 at each radius."""
    fa = _as_callable(a_dir)
    f = lambda r: -float(fa(r)) / float(profile.speed(r)) ** 2
    return np.array([abel_transform(profile, f, float(r)) for r in radii])
