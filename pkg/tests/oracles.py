"""Independent reference computations used as test oracles.

None of these touch the package's discretisation or quadrature code.
"""
import math

import numpy as np
from scipy import integrate, optimize, special


def spherical_bessel_zeros(ell: int, count: int) -> np.ndarray:
    """First ``count`` positive zeros of j_ell, bracketed on a fine scan."""
    f = lambda x: special.spherical_jn(ell, x)
    xs = np.linspace(0.5, (count + ell + 2) * math.pi, 20000)
    v = f(xs)
    out = []
    for i in np.flatnonzero(v[:-1] * v[1:] < 0):
        out.append(optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-15))
        if len(out) == count:
            break
    return np.array(out)


def tan_root(k: int = 1) -> float:
    """k-th positive root of tan x = x."""
    g = lambda x: math.sin(x) - x * math.cos(x)
    return optimize.brentq(g, k * math.pi + 1e-9, (k + 0.5) * math.pi - 1e-9, xtol=1e-15)


def trace_chord(c, dc, p: float, f=None, rtol: float = 1e-12):
    """Integrate one boundary-to-boundary ray of the metric c^-2 dx^2 in the plane.

    Hamilton's equations for H = c^2 |xi|^2 / 2 starting at (1, 0) with ray
    parameter p. Returns (travel time, subtended angle, int f dt).
    """
    c1 = c(1.0)
    sin_phi = p * c1
    xi0 = np.array([-math.sqrt(1 - sin_phi ** 2), sin_phi]) / c1
    f = f or (lambda r: 0.0)

    def rhs(t, y):
        x, xi = y[:2], y[2:4]
        r = math.hypot(*x)
        cr = c(r)
        grad_c = dc(r) * x / r if r > 0 else np.zeros(2)
        return [*(cr * cr * xi), *(-cr * grad_c * (xi @ xi)), f(r)]

    def leave(t, y):
        return math.hypot(y[0], y[1]) - 1.0
    leave.terminal = True
    leave.direction = 1

    sol = integrate.solve_ivp(rhs, (0.0, 10.0), [1.0, 0.0, *xi0, 0.0], method="DOP853",
                              rtol=rtol, atol=1e-14, events=leave)
    t_end = sol.t_events[0][0]
    y_end = sol.y_events[0][0]
    angle = math.atan2(y_end[1], y_end[0]) % (2 * math.pi)
    return t_end, angle, y_end[4]
