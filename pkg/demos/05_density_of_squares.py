# Squared eigenfunctions separate radial functions: the Gram matrix of pairings
# against a polynomial basis has a smallest singular value bounded away from 0.
import numpy as np

from radialspec import lowest_modes, make_profile
from radialspec import perturbation as pt

ball = make_profile(n=1000)
modes = lowest_modes(ball, 80)
basis = pt.legendre_basis(ball, 8)
for K in (20, 40, 60, 80):
    _, smin = pt.density_gram(modes[:K], basis, ball)
    print(f"K = {K:2d}  sigma_min = {smin:.5f}")

# Recover a radial function from its pairings with |psi_k|^2.
Q, _ = pt.density_gram(modes, basis, ball)
coef = np.random.default_rng(1).normal(size=8)
f = sum(c * phi for c, phi in zip(coef, basis))
pairings = np.array([pt.pairing(f, m, ball) for m in modes])
got, resid = pt.reconstruct(Q, pairings)
print("true   ", np.round(coef, 6))
print("solved ", np.round(got, 6), " residual", resid)

# A repeated basis function makes the problem rank deficient.
print("duplicate basis sigma_min:", pt.density_gram(modes[:20], basis + basis[:1], ball)[1])
