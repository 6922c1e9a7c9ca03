"""First and second order eigenvalue perturbations of the radial problem.

All sums are the discrete counterparts of the continuous integrals on the
solver grid, so that they are exact derivatives of the discrete eigenvalues:

* a-direction:  dlam = lam * sum_i M_i a'_i f_i^2
* b-direction:  dlam = 1/2 sum_faces h r_f^2 e^(b_f) (D b')(D f^2)

with D the face difference quotient and e^(b_f) the geometric mean used by
the stiffness matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .eigensolver import Mode, full_spectrum
from .profiles import (BoundaryCondition, OperatorVariant, RadialFunction,
                       RadialProfile)

NORM_TOL = 1e-6
FD_STEP = 1e-4
FD_STEP2 = 1e-3


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class PerturbationFamily:
    """Directions a' and b' (and optionally b'') of a one-parameter family at s = 0."""

    a_dir: RadialFunction | np.ndarray | float | None = None
    b_dir: RadialFunction | np.ndarray | float | None = None
    b_dir2: RadialFunction | np.ndarray | float | None = None

    def check(self, profile: RadialProfile, bc: BoundaryCondition, tol: float = 1e-10) -> None:
        """The boundary data of b must not move with s."""
        for d in (self.b_dir, self.b_dir2):
            if d is None:
                continue
            v = profile.sample(d)
            if bc.kind == "dirichlet":
                if abs(v[-1]) > tol:
                    raise ValueError("b'(1) must vanish for the Dirichlet problem")
            else:
                if isinstance(d, RadialFunction):
                    slope = float(d.derivative(1.0))
                else:
                    h = profile.r[-1] - profile.r[-2]
                    slope = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
                if abs(slope) > max(tol, 1e-6):
                    raise ValueError("d/dr b'(1) must vanish for Neumann/Robin problems")


@dataclass(frozen=True)
class ModeShift:
    ell: int
    n: int
    lam: float
    dlam: float


def _check_norm(mode: Mode, profile: RadialProfile) -> None:
    nrm = float(np.sum(profile.mass_weights * mode.f ** 2))
    if abs(nrm - 1.0) > NORM_TOL:
        raise NormalizationError(f"mode ({mode.ell},{mode.n}) has norm {nrm}")


def pairing(f, mode: Mode, profile: RadialProfile) -> float:
    """<<f, |psi|^2>> under the e^(b-a) r^2 dr weight."""
    return float(np.sum(profile.mass_weights * profile.sample(f) * mode.f ** 2))


def delta_lambda_a(mode: Mode, a_dir, profile: RadialProfile) -> float:
    _check_norm(mode, profile)
    return mode.lam * pairing(a_dir, mode, profile)


def _face_data(profile: RadialProfile):
    r = profile.r
    h = np.diff(r)
    rf = 0.5 * (r[:-1] + r[1:])
    kf = rf ** 2 * np.exp(0.5 * (profile.b[:-1] + profile.b[1:]))
    return h, kf


def _gradient_form(mode: Mode, beta: np.ndarray, profile: RadialProfile) -> float:
    h, kf = _face_data(profile)
    g = mode.f ** 2
    return 0.5 * float(np.sum(kf * np.diff(beta) * np.diff(g) / h))


def _toroidal_term(mode: Mode, beta: np.ndarray, profile: RadialProfile) -> float:
    r, eb = profile.r, profile.eb
    grad = np.gradient(eb * beta, r, edge_order=2) - beta * np.gradient(eb, r, edge_order=2)
    return -float(np.sum(profile.cell_widths * r * grad * mode.f ** 2))


def delta_lambda_b(mode: Mode, b_dir, profile: RadialProfile,
                   variant: OperatorVariant | str = OperatorVariant.STANDARD) -> float:
    """1/2 int e^b (b')_r (|f|^2)_r r^2 dr, plus the toroidal correction if any."""
    _check_norm(mode, profile)
    beta = profile.sample(b_dir)
    out = _gradient_form(mode, beta, profile)
    if OperatorVariant(variant) is OperatorVariant.TOROIDAL:
        out += _toroidal_term(mode, beta, profile)
    return out


def delta_lambda_b_divergence(mode: Mode, b_dir, profile: RadialProfile) -> float:
    """-1/2 int |f|^2 div(e^b grad b') r^2 dr; the integrated-by-parts form."""
    _check_norm(mode, profile)
    beta = profile.sample(b_dir)
    h, kf = _face_data(profile)
    flux = np.concatenate([[0.0], kf * np.diff(beta) / h, [0.0]])
    div = np.diff(flux)  # already multiplied by the cell width
    return -0.5 * float(np.sum(mode.f ** 2 * div))


def delta2_lambda_b(mode: Mode, b_dir2, profile: RadialProfile,
                    variant: OperatorVariant | str = OperatorVariant.STANDARD) -> float:
    """lam'' = <L'' psi, psi> with L'' = e^a grad b'' . grad.

    Only meaningful when the first-order operator derivative vanishes (b' = 0,
    a' = 0); the caller is responsible for that.
    """
    return delta_lambda_b(mode, b_dir2, profile, variant)


def energy_identity(b_dir, profile: RadialProfile) -> tuple[float, float]:
    """(-int e^b |b'_r|^2 r^2 dr, int b' div(e^b grad b') r^2 dr); equal by parts."""
    beta = profile.sample(b_dir)
    h, kf = _face_data(profile)
    energy = -float(np.sum(kf * np.diff(beta) ** 2 / h))
    flux = np.concatenate([[0.0], kf * np.diff(beta) / h, [0.0]])
    pair = float(np.sum(beta * np.diff(flux)))
    return energy, pair


def delta_lambda(mode: Mode, family: PerturbationFamily, profile: RadialProfile,
                 variant: OperatorVariant | str = OperatorVariant.STANDARD) -> float:
    out = 0.0
    if family.a_dir is not None:
        out += delta_lambda_a(mode, family.a_dir, profile)
    if family.b_dir is not None:
        out += delta_lambda_b(mode, family.b_dir, profile, variant)
    return out


def delta_spectrum(profile: RadialProfile, bc: BoundaryCondition | None, variant,
                   family: PerturbationFamily, ell_max: int, n_max: int,
                   threads: int = 1) -> list[ModeShift]:
    spec = full_spectrum(profile, bc, variant, ell_max, n_max, threads)
    return [ModeShift(m.ell, m.n, m.lam, delta_lambda(m, family, profile, variant))
            for m in spec.modes]


def _lams_by_id(profile, bc, variant, ell_max, n_max, threads=1):
    spec = full_spectrum(profile, bc, variant, ell_max, n_max, threads)
    return {(m.ell, m.n): m.lam for m in spec.modes}


def fd_delta_spectrum(profile: RadialProfile, bc, variant, family: PerturbationFamily,
                      ell_max: int, n_max: int, step: float = FD_STEP,
                      threads: int = 1) -> dict[tuple[int, int], float]:
    """Central finite difference of re-solved spectra: the oracle for delta_spectrum."""
    plus = _lams_by_id(profile.perturbed(step, family.a_dir, family.b_dir),
                       bc, variant, ell_max, n_max, threads)
    minus = _lams_by_id(profile.perturbed(-step, family.a_dir, family.b_dir),
                        bc, variant, ell_max, n_max, threads)
    return {k: (plus[k] - minus[k]) / (2 * step) for k in plus}


def fd_second_derivative(profile: RadialProfile, bc, variant, b_dir2, ell_max: int,
                         n_max: int, step: float = FD_STEP2) -> dict[tuple[int, int], float]:
    """Second central difference along b_s = b + s^2 b''/2."""
    lam = {s: _lams_by_id(profile.perturbed(0.5 * s * s, b_dir=b_dir2), bc, variant, ell_max, n_max)
           for s in (-step, 0.0, step)}
    return {k: (lam[step][k] - 2 * lam[0.0][k] + lam[-step][k]) / step ** 2 for k in lam[0.0]}


# --------------------------------------------------------------------------
# density of squares


def legendre_basis(profile: RadialProfile, J: int) -> list[np.ndarray]:
    """Shifted Legendre polynomials P_0..P_{J-1} on [R, 1], sampled on the grid."""
    from numpy.polynomial import Legendre
    return [Legendre.basis(j, domain=[profile.inner_radius, 1.0])(profile.r) for j in range(J)]


def hat_basis(profile: RadialProfile, J: int) -> list[np.ndarray]:
    knots = np.linspace(profile.inner_radius, 1.0, J)
    out = []
    for j in range(J):
        e = np.zeros(J)
        e[j] = 1.0
        out.append(np.interp(profile.r, knots, e))
    return out


def density_gram(modes: Sequence[Mode], basis: Sequence, profile: RadialProfile):
    """Q[k, j] = <<phi_j, |f_k|^2>> and its smallest singular value."""
    K, J = len(modes), len(basis)
    if K < J:
        raise ValueError(f"need at least as many modes as basis functions (K={K} < J={J})")
    F2 = np.array([m.f ** 2 for m in modes]) * profile.mass_weights
    Phi = np.array([profile.sample(phi) for phi in basis]).T
    Q = F2 @ Phi
    sigma = np.linalg.svd(Q, compute_uv=False)
    return Q, float(sigma[-1])


def reconstruct(Q: np.ndarray, pairings: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares basis coefficients from pairings, with the relative residual."""
    coef, *_ = np.linalg.lstsq(Q, pairings, rcond=None)
    nrm = np.linalg.norm(pairings)
    res = np.linalg.norm(Q @ coef - pairings) / nrm if nrm > 0 else 0.0
    return coef, float(res)
