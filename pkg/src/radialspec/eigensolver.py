"""Radial Sturm-Liouville eigenproblems for each angular degree.

Separating f(r) Y_lm gives, after multiplying by e^(b-a) r^2,

    (r^2 e^b f')' - l(l+1) e^b f [- r (e^b)' f] = lam e^(b-a) r^2 f

(the bracketed term only for the toroidal variant). This is discretised by
finite volumes in self-adjoint form: a symmetric tridiagonal stiffness A and a
diagonal mass M, reduced to a standard symmetric tridiagonal problem through
the M^(-1/2) similarity.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .profiles import BoundaryCondition, OperatorVariant, ProfileError, RadialProfile

log = logging.getLogger(__name__)

DEGENERACY_RTOL = 1e-8


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class RadialOperator:
    """Generalised tridiagonal pair A f = lam M f on the free nodes."""

    ell: int
    free: np.ndarray  # grid indices of the unknowns
    diag: np.ndarray
    off: np.ndarray
    mass: np.ndarray
    face_k: np.ndarray  # flux coefficients on all faces of the full grid
    extra: np.ndarray  # non-flux diagonal on the full grid
    asymmetry: float = 0.0

    def energy(self, f: np.ndarray) -> float:
        """f^T A f for full-grid samples, summed without cancellation."""
        return float(-np.sum(self.face_k * np.diff(f) ** 2) + np.sum(self.extra * f * f))

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        A = np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)
        return A, np.diag(self.mass)


@dataclass(frozen=True, eq=False)
class Mode:
    ell: int
    n: int
    lam: float
    f: np.ndarray  # samples on the full grid, zero on Dirichlet nodes

    @property
    def multiplicity(self) -> int:
        return 2 * self.ell + 1

    @property
    def omega(self) -> float:
        return float(np.sqrt(-self.lam)) if self.lam < 0 else 0.0


@dataclass(eq=False)
class Spectrum:
    modes: list[Mode]
    degeneracies: list[tuple[tuple[int, int], tuple[int, int]]] = field(default_factory=list)

    @property
    def lams(self) -> np.ndarray:
        return np.array([m.lam for m in self.modes])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([m.multiplicity for m in self.modes])

    @property
    def expanded(self) -> np.ndarray:
        return np.repeat(self.lams, self.multiplicities)

    def mode(self, ell: int, n: int) -> Mode:
        for m in self.modes:
            if m.ell == ell and m.n == n:
                return m
        raise KeyError((ell, n))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l", "n", "lambda", "multiplicity"])
            for m in self.modes:
                w.writerow([m.ell, m.n, repr(float(m.lam)), m.multiplicity])


def assemble_radial(profile: RadialProfile, ell: int, bc: BoundaryCondition | None = None,
                    variant: OperatorVariant | str = OperatorVariant.STANDARD) -> RadialOperator:
    if ell < 0:
        raise ValueError("ell must be non-negative")
    bc = bc or BoundaryCondition.dirichlet()
    variant = OperatorVariant(variant)
    r = profile.r
    if variant is OperatorVariant.TOROIDAL and profile.is_ball:
        # the domain contains the origin even though no node sits on it
        raise ProfileError("toroidal term is singular at r = 0; use an annulus")
    n = profile.n
    w = profile.cell_widths
    eb = profile.eb
    h = np.diff(r)
    rf = 0.5 * (r[:-1] + r[1:])
    # face coefficient: geometric mean of e^b keeps the b-derivative a plain average
    k = rf ** 2 * np.exp(0.5 * (profile.b[:-1] + profile.b[1:])) / h

    extra = -ell * (ell + 1) * eb * w
    if bc.kind == "robin":
        extra[-1] += bc.kappa * r[-1] ** 2 * eb[-1]
    if not profile.is_ball and bc.inner_kind == "robin":
        extra[0] -= bc.inner_kappa * r[0] ** 2 * eb[0]
    asym = 0.0
    if variant is OperatorVariant.TOROIDAL:
        # -r (e^b)' f is diagonal here, so its asymmetry residual is zero
        extra = extra - w * r * np.gradient(eb, r, edge_order=2)
    diag = extra.copy()
    diag[:-1] -= k
    diag[1:] -= k
    off = k.copy()

    free = np.arange(n)
    lo, hi = 0, n
    if bc.kind == "dirichlet":
        hi = n - 1
    if not profile.is_ball and bc.inner_kind == "dirichlet":
        lo = 1
    free = free[lo:hi]
    mass = profile.mass_weights[lo:hi]
    return RadialOperator(ell, free, diag[lo:hi].copy(), off[lo:hi - 1].copy(), mass,
                          k, extra, asym)


def solve_modes(profile: RadialProfile, ell: int, bc: BoundaryCondition | None = None,
                variant: OperatorVariant | str = OperatorVariant.STANDARD,
                n_max: int = 10) -> list[Mode]:
    """First ``n_max`` eigenpairs (closest to zero) for angular degree ``ell``."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    op = assemble_radial(profile, ell, bc, variant)
    m = op.free.size
    if n_max > m:
        raise ValueError(f"n_max = {n_max} exceeds {m} unknowns")
    s = 1.0 / np.sqrt(op.mass)
    d = op.diag * s * s
    e = op.off * s[:-1] * s[1:]
    try:
        lam, y = eigh_tridiagonal(d, e, select="i", select_range=(m - n_max, m - 1))
    except LinAlgError as exc:
        raise SolverError(f"eigensolver failed for l = {ell}: {exc}") from exc
    order = np.argsort(lam)[::-1]
    modes = []
    for idx, j in enumerate(order, start=1):
        f = np.zeros(profile.n)
        f[op.free] = s * y[:, j]
        # sign: positive at the first significant sample
        big = np.flatnonzero(np.abs(f) > 1e-8 * np.abs(f).max())
        if f[big[0]] < 0:
            f = -f
        # the tridiagonal solve is only accurate to eps*||T|| in absolute terms;
        # the Rayleigh quotient in flux form restores relative accuracy
        rq = op.energy(f) / float(np.sum(op.mass * f[op.free] ** 2))
        modes.append(Mode(ell, idx, rq, f))
    return modes


def find_degeneracies(modes: list[Mode], rtol: float = DEGENERACY_RTOL):
    srt = sorted(modes, key=lambda m: m.lam)
    out = []
    for m1, m2 in zip(srt[:-1], srt[1:]):
        if abs(m1.lam - m2.lam) < rtol * max(abs(m1.lam), abs(m2.lam)):
            out.append(((m1.ell, m1.n), (m2.ell, m2.n)))
    return out


def full_spectrum(profile: RadialProfile, bc: BoundaryCondition | None = None,
                  variant: OperatorVariant | str = OperatorVariant.STANDARD,
                  ell_max: int = 4, n_max: int = 10, threads: int = 1) -> Spectrum:
    """Modes for all l <= ell_max, sorted with lam descending."""
    if ell_max < 0 or n_max < 1:
        raise ValueError("ell_max >= 0 and n_max >= 1 required")
    ells = range(ell_max + 1)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            per_ell = list(pool.map(lambda l: solve_modes(profile, l, bc, variant, n_max), ells))
    else:
        per_ell = [solve_modes(profile, l, bc, variant, n_max) for l in ells]
    modes = [m for ms in per_ell for m in ms]
    modes.sort(key=lambda m: (-m.lam, m.ell, m.n))
    degens = find_degeneracies(modes)
    if degens:
        log.warning("accidental degeneracies: %s", degens)
    return Spectrum(modes, degens)


def lowest_modes(profile: RadialProfile, K: int, bc: BoundaryCondition | None = None,
                 variant: OperatorVariant | str = OperatorVariant.STANDARD,
                 threads: int = 1) -> list[Mode]:
    """The K modes with lam closest to zero across all angular degrees.

    The (l, n) box grows until every mode left outside it is provably deeper:
    lam(l, n) decreases in n, and lam(l, 1) decreases in l because the
    angular term is negative definite and grows with l.
    """
    side = max(4, int(np.ceil(np.sqrt(2 * K))))
    while True:
        n_side = min(side, profile.n - 2)
        spec = full_spectrum(profile, bc, variant, side, n_side, threads)
        if len(spec.modes) >= K:
            kth = spec.modes[K - 1].lam
            deepest_n = max(spec.mode(l, n_side).lam for l in range(side + 1))
            if kth > spec.mode(side, 1).lam and (kth > deepest_n or n_side == profile.n - 2):
                return spec.modes[:K]
        side *= 2


def write_eigenfunctions(path, profile: RadialProfile, modes: list[Mode]) -> None:
    data = np.column_stack([profile.r] + [m.f for m in modes])
    header = ",".join(["r"] + [f"f_{m.ell}_{m.n}" for m in modes])
    np.savetxt(Path(path), data, delimiter=",", header=header, comments="", fmt="%.17g")
