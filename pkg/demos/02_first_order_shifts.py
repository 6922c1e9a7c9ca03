# How eigenvalues move when a or b is nudged, checked against re-solving.
import numpy as np

from radialspec import full_spectrum, make_profile
from radialspec import perturbation as pt
from radialspec.profiles import gaussian, polynomial, random_smooth

rng = np.random.default_rng(0)
prof = make_profile(a=random_smooth(rng), b=random_smooth(rng), n=800)
spec = full_spectrum(prof, ell_max=3, n_max=4)

# Moving a multiplies the operator by e^(s a') pointwise, so lam shifts by
# lam times the mode-weighted average of a'. Moving b only through its gradient.
a_dir = gaussian(0.1, 0.5, 0.1, mirror=True)
b_dir = polynomial([0, 0, 1, 0, -2, 0, 1])  # vanishes, with its slope, at r = 1
fam = pt.PerturbationFamily(a_dir=a_dir, b_dir=b_dir)
fd = pt.fd_delta_spectrum(prof, None, "standard", fam, 3, 4)

print(" l  n        lam     formula    finite diff")
for m in spec.modes[:10]:
    print(f"{m.ell:2d} {m.n:2d} {m.lam:10.4f} {pt.delta_lambda(m, fam, prof):11.6f} "
          f"{fd[m.ell, m.n]:11.6f}")

# The b-shift has two forms related by summation by parts.
m = spec.modes[3]
print("gradient form  ", pt.delta_lambda_b(m, b_dir, prof))
print("divergence form", pt.delta_lambda_b_divergence(m, b_dir, prof))

# Along b + s^2 beta / 2 the first derivative vanishes; the second derivative is
# the same quadratic form evaluated at beta.
fd2 = pt.fd_second_derivative(prof, None, "standard", b_dir, 3, 4)
print("lam'' formula vs FD:", pt.delta2_lambda_b(m, b_dir, prof), fd2[m.ell, m.n])
