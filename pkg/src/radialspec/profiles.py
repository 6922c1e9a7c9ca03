"""Radial coefficient profiles (a, b) for the operator e^(a-b) div(e^b grad).

A profile lives on a uniform radial grid over [R, 1]. For the ball (R = 0) the
grid is staggered, r_i = (i + 1/2) h with h = 1 / (N - 1/2), so the last node
sits exactly on r = 1 and no node sits on the origin.

Derived quantities: wave speed c = exp(a/2), density rho = exp(b - a).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

MIN_GRID = 16
# tolerance on |a'(0)| for the ball; odd derivatives of c must vanish at the origin
EVEN_TOL = 1e-4


class ProfileError(ValueError):
    pass


class OperatorVariant(str, enum.Enum):
    STANDARD = "standard"
    TOROIDAL = "toroidal"


@dataclass(frozen=True)
class BoundaryCondition:
    """Boundary condition at r = 1 and, for an annulus, at r = R.

    Robin conditions are written as f'(r) = kappa f(r) in the radial
    derivative (not the outward normal) at either end.
    """

    kind: str = "dirichlet"
    kappa: float = 0.0
    inner_kind: str = "dirichlet"
    inner_kappa: float = 0.0

    _KINDS = ("dirichlet", "neumann", "robin")

    def __post_init__(self):
        for k in (self.kind, self.inner_kind):
            if k not in self._KINDS:
                raise ProfileError(f"unknown boundary condition {k!r}")
        if not (math.isfinite(self.kappa) and math.isfinite(self.inner_kappa)):
            raise ProfileError("Robin coefficient must be finite")

    @classmethod
    def dirichlet(cls) -> "BoundaryCondition":
        return cls("dirichlet")

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls("neumann", inner_kind="neumann")

    @classmethod
    def robin(cls, kappa: float, inner_kappa: float = 0.0) -> "BoundaryCondition":
        return cls("robin", kappa, "robin", inner_kappa)

    @classmethod
    def toroidal(cls, inner_radius: float = 0.0) -> "BoundaryCondition":
        # traction-free: mu v' = mu v / r on both spheres
        inner = 1.0 / inner_radius if inner_radius > 0 else 0.0
        return cls("robin", 1.0, "robin", inner)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "kappa": self.kappa,
                "inner_kind": self.inner_kind, "inner_kappa": self.inner_kappa}

    @classmethod
    def from_dict(cls, d: dict | str) -> "BoundaryCondition":
        if isinstance(d, str):
            return {"dirichlet": cls.dirichlet, "neumann": cls.neumann}[d]()
        return cls(d.get("kind", "dirichlet"), float(d.get("kappa", 0.0)),
                   d.get("inner_kind", d.get("kind", "dirichlet")),
                   float(d.get("inner_kappa", 0.0)))


# --------------------------------------------------------------------------
# analytic radial functions


def _poly(coeffs, r):
    return np.polynomial.polynomial.polyval(r, coeffs)


def _poly_deriv(coeffs, r):
    return np.polynomial.polynomial.polyval(r, np.polynomial.polynomial.polyder(coeffs))


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """A named closed-form radial function with its derivative.

    Kinds and parameters:

    ``constant``    value
    ``linear``      c0 + c1 r
    ``gaussian``    offset + amplitude exp(-(r - center)^2 / (2 width^2)),
                    plus the mirror bump at -center when ``mirror`` is set
    ``polynomial``  sum_k coeffs[k] r^k
    ``log_poly``    scale * ln(sum_k coeffs[k] r^k)
    ``sum``         sum of weight * term over ``terms``
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _EVALUATORS:
            raise ProfileError(f"unknown radial function kind {self.kind!r}")

    def __call__(self, r):
        return _EVALUATORS[self.kind][0](self.params, np.asarray(r, dtype=float))

    def derivative(self, r):
        return _EVALUATORS[self.kind][1](self.params, np.asarray(r, dtype=float))

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        return RadialFunction("sum", {"terms": [(1.0, self), (1.0, other)]})

    def __mul__(self, w: float) -> "RadialFunction":
        return RadialFunction("sum", {"terms": [(float(w), self)]})

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        if self.kind == "sum":
            return {"kind": "sum", "params": {"terms": [
                [w, t.to_dict()] for w, t in self.params["terms"]]}}
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "RadialFunction":
        kind = d["kind"]
        params = dict(d.get("params", {}))
        if kind == "sum":
            params["terms"] = [(float(w), cls.from_dict(t)) for w, t in params["terms"]]
        return cls(kind, params)

    def odd_slope_at_origin(self) -> float:
        return float(self.derivative(0.0))


def _gauss(p, r):
    z = (r - p.get("center", 0.0)) / p["width"]
    out = p["amplitude"] * np.exp(-0.5 * z * z)
    if p.get("mirror"):
        out = out + _gauss({**p, "mirror": False, "offset": 0.0}, -r)
    return p.get("offset", 0.0) + out


def _gauss_d(p, r):
    w = p["width"]
    z = (r - p.get("center", 0.0)) / w
    out = -p["amplitude"] * z / w * np.exp(-0.5 * z * z)
    if p.get("mirror"):
        out = out - _gauss_d({**p, "mirror": False}, -r)
    return out


def _sum(p, r):
    return sum(w * t(r) for w, t in p["terms"])


def _sum_d(p, r):
    return sum(w * t.derivative(r) for w, t in p["terms"])


_EVALUATORS: dict[str, tuple[Callable, Callable]] = {
    "constant": (lambda p, r: np.full_like(r, p.get("value", 0.0)),
                 lambda p, r: np.zeros_like(r)),
    "linear": (lambda p, r: p.get("c0", 0.0) + p.get("c1", 0.0) * r,
               lambda p, r: np.full_like(r, p.get("c1", 0.0))),
    "gaussian": (_gauss, _gauss_d),
    "polynomial": (lambda p, r: _poly(p["coeffs"], r),
                   lambda p, r: _poly_deriv(p["coeffs"], r)),
    "log_poly": (lambda p, r: p.get("scale", 1.0) * np.log(_poly(p["coeffs"], r)),
                 lambda p, r: p.get("scale", 1.0) * _poly_deriv(p["coeffs"], r)
                 / _poly(p["coeffs"], r)),
    "sum": (_sum, _sum_d),
}


def constant(value: float = 0.0) -> RadialFunction:
    return RadialFunction("constant", {"value": float(value)})


def linear(c0: float, c1: float) -> RadialFunction:
    return RadialFunction("linear", {"c0": float(c0), "c1": float(c1)})


def gaussian(amplitude: float, center: float, width: float, offset: float = 0.0,
             mirror: bool = False) -> RadialFunction:
    params = {"amplitude": float(amplitude), "center": float(center),
              "width": float(width), "offset": float(offset)}
    if mirror:
        params["mirror"] = True
    return RadialFunction("gaussian", params)


def polynomial(coeffs: Sequence[float]) -> RadialFunction:
    return RadialFunction("polynomial", {"coeffs": [float(c) for c in coeffs]})


def log_poly(coeffs: Sequence[float], scale: float = 1.0) -> RadialFunction:
    return RadialFunction("log_poly", {"coeffs": [float(c) for c in coeffs], "scale": float(scale)})


def speed_poly(coeffs: Sequence[float]) -> RadialFunction:
    """The a-function of a polynomial wave speed, a = 2 ln c(r)."""
    return log_poly(coeffs, 2.0)


def random_smooth(rng: np.random.Generator, scale: float = 0.1, even: bool = True,
                  vanish_at_one: bool = False) -> RadialFunction:
    """A random smooth radial function: an even quartic plus two Gaussian bumps."""
    coeffs = [rng.normal(), 0.0, rng.normal(), 0.0, rng.normal()]
    if not even:
        coeffs[1], coeffs[3] = rng.normal(), rng.normal()
    f = polynomial([scale * 0.5 * c for c in coeffs])
    for _ in range(2):
        f = f + gaussian(scale * rng.normal(), rng.uniform(0.3, 0.8), rng.uniform(0.08, 0.2),
                         mirror=even)
    if vanish_at_one:
        f = f + constant(-float(f(1.0)))
    return f


# --------------------------------------------------------------------------
# grid and profile


def radial_grid(inner_radius: float, n: int) -> np.ndarray:
    if n < MIN_GRID:
        raise ProfileError(f"grid too coarse: N = {n} < {MIN_GRID}")
    if not 0.0 <= inner_radius < 1.0:
        raise ProfileError(f"R out of range: {inner_radius}")
    if inner_radius == 0.0:
        h = 1.0 / (n - 0.5)
        r = (np.arange(n) + 0.5) * h
    else:
        r = np.linspace(inner_radius, 1.0, n)
    r[-1] = 1.0
    return r


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of (a, b) on a radial grid plus optional closed forms."""

    inner_radius: float
    r: np.ndarray
    a: np.ndarray
    b: np.ndarray
    a_expr: RadialFunction | None = None
    b_expr: RadialFunction | None = None

    def __post_init__(self):
        for arr in (self.r, self.a, self.b):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def is_ball(self) -> bool:
        return self.inner_radius == 0.0

    @property
    def c(self) -> np.ndarray:
        return np.exp(0.5 * self.a)

    @property
    def rho(self) -> np.ndarray:
        return np.exp(self.b - self.a)

    @property
    def eb(self) -> np.ndarray:
        return np.exp(self.b)

    @property
    def cell_widths(self) -> np.ndarray:
        """Control-volume widths; boundary nodes on r = R or r = 1 get half cells."""
        h = np.diff(self.r)
        w = np.empty(self.n)
        w[1:-1] = 0.5 * (h[:-1] + h[1:])
        w[-1] = 0.5 * h[-1]
        # ball: first cell is [0, h]
        w[0] = h[0] if self.is_ball else 0.5 * h[0]
        return w

    @property
    def mass_weights(self) -> np.ndarray:
        """Quadrature weights of the e^(b-a) r^2 dr inner product."""
        return self.cell_widths * self.rho * self.r ** 2

    def sample(self, f: RadialFunction | np.ndarray | float | Callable) -> np.ndarray:
        """Sample a direction or test function on the grid."""
        if isinstance(f, (int, float)):
            return np.full(self.n, float(f))
        if isinstance(f, np.ndarray):
            if f.shape != self.r.shape:
                raise ProfileError(f"samples have shape {f.shape}, grid has {self.r.shape}")
            return np.asarray(f, dtype=float)
        return np.asarray(f(self.r), dtype=float) * np.ones(self.n)

    # continuous evaluation, used by the ray module

    def _spline(self):
        return CubicSpline(self.r, self.a)

    def a_at(self, r):
        if self.a_expr is not None:
            return self.a_expr(r)
        return self._spline()(r)

    def da_at(self, r):
        if self.a_expr is not None:
            return self.a_expr.derivative(r)
        return self._spline()(r, 1)

    def speed(self, r):
        return np.exp(0.5 * self.a_at(r))

    def speed_derivative(self, r):
        return 0.5 * self.da_at(r) * self.speed(r)

    def perturbed(self, s: float, a_dir: Any = None, b_dir: Any = None) -> "RadialProfile":
        """The profile (a + s a_dir, b + s b_dir), keeping closed forms when possible."""
        a, b = self.a, self.b
        a_expr, b_expr = self.a_expr, self.b_expr
        if a_dir is not None:
            a = a + s * self.sample(a_dir)
            a_expr = _combine(a_expr, a_dir, s)
        if b_dir is not None:
            b = b + s * self.sample(b_dir)
            b_expr = _combine(b_expr, b_dir, s)
        return RadialProfile(self.inner_radius, self.r.copy(), a, b, a_expr, b_expr)

    def shifted_b(self, const: float) -> "RadialProfile":
        return self.perturbed(1.0, b_dir=float(const))


def _combine(expr, direction, s):
    if expr is None:
        return None
    if isinstance(direction, RadialFunction):
        return expr + s * direction
    if isinstance(direction, (int, float)):
        return expr + constant(s * direction)
    return None


def _as_function(spec) -> RadialFunction | np.ndarray:
    if isinstance(spec, RadialFunction):
        return spec
    if isinstance(spec, (int, float)):
        return constant(spec)
    if isinstance(spec, dict):
        if spec.get("kind") == "samples":
            return np.asarray(spec["params"]["values"], dtype=float)
        return RadialFunction.from_dict(spec)
    return np.asarray(spec, dtype=float)


def make_profile(a=0.0, b=0.0, n: int = 400, inner_radius: float = 0.0) -> RadialProfile:
    """Build and validate a profile from closed forms, dict specs or samples.

    ``a`` and ``b`` may each be a :class:`RadialFunction`, a number, a dict
    ``{"kind": ..., "params": {...}}`` or an array of samples on the grid.
    """
    r = radial_grid(inner_radius, n)
    a_f, b_f = _as_function(a), _as_function(b)
    a_s = _sample_on(a_f, r)
    b_s = _sample_on(b_f, r)
    if not (np.all(np.isfinite(a_s)) and np.all(np.isfinite(b_s))):
        raise ProfileError("non-finite coefficient samples")
    c = np.exp(0.5 * a_s)
    if not np.all(c > 0) or not np.all(np.isfinite(c)):
        raise ProfileError("non-positive wave speed")
    a_expr = a_f if isinstance(a_f, RadialFunction) else None
    b_expr = b_f if isinstance(b_f, RadialFunction) else None
    if inner_radius == 0.0 and a_expr is not None:
        slope = abs(a_expr.odd_slope_at_origin())
        if not np.isfinite(slope) or slope > EVEN_TOL:
            raise ProfileError(f"a'(0) = {slope:.3g}: the wave speed must extend evenly through r = 0")
    return RadialProfile(float(inner_radius), r, a_s, b_s, a_expr, b_expr)


def _sample_on(f, r):
    if isinstance(f, RadialFunction):
        with np.errstate(all="ignore"):
            return np.asarray(f(r), dtype=float) * np.ones_like(r)
    if f.shape != r.shape:
        raise ProfileError(f"grid not covering [R,1]: {f.size} samples for {r.size} nodes")
    return f.astype(float)


def profile_from_dict(d: dict) -> RadialProfile:
    """Profile description: ``{"R", "N", "a": {...}, "b": {...}}``."""
    return make_profile(d.get("a", 0.0), d.get("b", 0.0), int(d.get("N", 400)),
                        float(d.get("R", 0.0)))


def herglotz_margin(profile: RadialProfile) -> float:
    """min_r d/dr (r / c(r)) by centred differences; positive means Herglotz holds."""
    if profile.n < MIN_GRID:
        raise ProfileError(f"grid too coarse: N = {profile.n} < {MIN_GRID}")
    eta = profile.r / profile.c
    return float(np.min(np.gradient(eta, profile.r, edge_order=2)))
