# Rays of the metric c^-2 dx^2: turning points, chords, closed polygons and
# the Abel transform.
import math
import warnings

import numpy as np

from radialspec import make_profile
from radialspec import rays
from radialspec.profiles import gaussian, herglotz_margin, speed_poly

unit = make_profile(n=100)
print("c = 1, p = 0.6: chord", rays.chord_time(unit, 0.6), "vs", 2 * math.sqrt(1 - 0.36))
print("                angle", rays.angular_advance(unit, 0.6), "vs", 2 * math.acos(0.6))

# Periodic broken rays of the unit ball are inscribed star polygons.
for o in rays.find_periodic_orbits(unit, 6, 2).orbits:
    print(f"  ({o.n_chords},{o.m_windings})  T = {o.T:.10f}  "
          f"2n sin(pi m/n) = {2 * o.n_chords * math.sin(math.pi * o.m_windings / o.n_chords):.10f}")

# A wave speed decreasing outward, still satisfying d/dr (r/c) > 0.
prof = make_profile(a=speed_poly([1.0, 0.0, -0.3]), n=400)
print("Herglotz margin", herglotz_margin(prof))
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    ls = rays.find_periodic_orbits(prof, 8, 3)
for o in ls.orbits[:6]:
    print(f"  ({o.n_chords},{o.m_windings})  p = {o.p:.6f}  r* = {o.turning_radius:.4f}  T = {o.T:.6f}")

# The Abel transform of 1 at constant speed is sqrt(1 - r^2).
for r in (0.2, 0.5, 0.9):
    print(f"Abel[1]({r}) = {rays.abel_transform(unit, 1.0, r):.12f}  {math.sqrt(1 - r * r):.12f}")

# Orbit lengths respond to a speed perturbation through integrals along the orbit.
bump = gaussian(0.5, 0.6, 0.12, mirror=True)
o = ls.orbits[0]
h = 1e-4
plus = next(q for q in rays.find_periodic_orbits(prof.perturbed(h, a_dir=bump), 8, 3).orbits
            if (q.n_chords, q.m_windings) == (o.n_chords, o.m_windings))
minus = next(q for q in rays.find_periodic_orbits(prof.perturbed(-h, a_dir=bump), 8, 3).orbits
             if (q.n_chords, q.m_windings) == (o.n_chords, o.m_windings))
print("dT along the orbit:", rays.delta_T(prof, o, bump), " FD:", (plus.T - minus.T) / (2 * h))
print("Abel of d/ds c^-2:", np.round(rays.speed_variation_abel(prof, bump, [0.3, 0.6, 0.9]), 6))
