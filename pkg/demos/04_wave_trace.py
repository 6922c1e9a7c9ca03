# The smoothed wave trace sum_k w(omega_k) cos(t omega_k) peaks at the lengths
# of periodic rays.
import warnings

import numpy as np

from radialspec import full_spectrum, make_profile
from radialspec import perturbation as pt
from radialspec import rays
from radialspec.profiles import speed_poly
from radialspec.wave_trace import Window, delta_trace, detect_peaks, trace_series

for name, prof in (("unit ball", make_profile(n=1000)),
                   ("c = 1 - 0.3 r^2", make_profile(a=speed_poly([1, 0, -0.3]), n=1000))):
    spec = full_spectrum(prof, ell_max=40, n_max=40)
    t = np.arange(2.5, 8.5, 0.002)
    series = trace_series(spec, Window(60.0), t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lengths = rays.find_periodic_orbits(prof, 40, 20).lengths_up_to(8.5)
    top = series.envelope.max()
    print(name)
    for pk in detect_peaks(series, 0.03 * top):
        if 3 <= pk.t <= 8:
            near = lengths[np.argmin(np.abs(lengths - pk.t))]
            print(f"  peak t = {pk.t:.4f}  prominence {pk.prominence / top:5.1%}  "
                  f"nearest orbit {near:.4f}")

# Varying the coefficients moves every term; the first-order change of the
# trace is a t sin(t omega) series.
prof = make_profile(a=speed_poly([1, 0, -0.3]), n=400)
spec = full_spectrum(prof, ell_max=8, n_max=8)
c0 = 0.2
dl = [pt.delta_lambda_a(m, c0, prof) for m in spec.modes]
t = np.linspace(1, 6, 500)
w = Window(25.0)
d = delta_trace(spec, dl, t, w).values
h = 1e-4
fd = (trace_series(spec.expanded * np.exp(c0 * h), w, t).values
      - trace_series(spec.expanded * np.exp(-c0 * h), w, t).values) / (2 * h)
print("delta trace vs FD, max abs difference:", np.max(np.abs(d - fd)), "of", np.max(np.abs(d)))
