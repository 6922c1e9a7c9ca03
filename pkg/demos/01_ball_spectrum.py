# Eigenvalues of the Laplacian on the unit ball, and what changes when the
# coefficients stop being constant.
import math

import numpy as np
from scipy import special, optimize

from radialspec import BoundaryCondition, full_spectrum, make_profile, solve_modes
from radialspec.profiles import gaussian, speed_poly

ball = make_profile(n=2000)

# With a = b = 0 the radial modes are spherical Bessel functions j_l(k r) and
# the Dirichlet eigenvalues are -k^2 at the zeros of j_l.
for ell in range(3):
    lams = [m.lam for m in solve_modes(ball, ell, n_max=4)]
    xs = np.linspace(0.5, 20, 4000)
    v = special.spherical_jn(ell, xs)
    zeros = [optimize.brentq(lambda x: special.spherical_jn(ell, x), xs[i], xs[i + 1])
             for i in np.flatnonzero(v[:-1] * v[1:] < 0)][:4]
    print(f"l={ell}", " ".join(f"{lam:10.4f} ({-z * z:10.4f})" for lam, z in zip(lams, zeros)))

# Neumann: the constant is a zero mode, the next one solves tan k = k.
m = solve_modes(ball, 0, BoundaryCondition.neumann(), n_max=2)
print("Neumann l=0:", m[0].lam, m[1].lam)

# Halving the grid spacing cuts the error by four: second order.
for n in (250, 500, 1000, 2000):
    err = abs(solve_modes(make_profile(n=n), 0, n_max=1)[0].lam + math.pi ** 2)
    print(f"N={n:5d}  |lam_1 + pi^2| = {err:.3e}")

# A slower core and a density bump. Each degree l has multiplicity 2l+1.
prof = make_profile(a=speed_poly([1.0, 0.0, -0.3]), b=gaussian(0.4, 0.5, 0.1, mirror=True), n=800)
spec = full_spectrum(prof, ell_max=3, n_max=4)
for mode in spec.modes[:8]:
    print(f"(l={mode.ell}, n={mode.n})  lam={mode.lam:10.4f}  x{mode.multiplicity}")

# Adding a constant to b leaves the operator untouched.
shifted = full_spectrum(prof.shifted_b(1.0), ell_max=3, n_max=4)
print("gauge shift, max relative change:",
      np.max(np.abs(shifted.lams - spec.lams) / np.abs(spec.lams)))
