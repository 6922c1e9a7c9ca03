import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import spherical_bessel_zeros, tan_root
from radialspec.eigensolver import (Spectrum, SolverError, assemble_radial, find_degeneracies,
                                    lowest_modes,
                                    full_spectrum, solve_modes, write_eigenfunctions)
from radialspec.profiles import (BoundaryCondition, ProfileError, make_profile,
                                 random_smooth)


@pytest.fixture(scope="module")
def ball():
    return make_profile(n=2000)


def test_ground_state_of_the_ball(ball):
    lam = solve_modes(ball, 0, n_max=1)[0].lam
    assert abs(lam + math.pi ** 2) / math.pi ** 2 < 1e-5


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_bessel_zeros(ball, ell):
    zeros = spherical_bessel_zeros(ell, 5)
    lams = np.array([m.lam for m in solve_modes(ball, ell, n_max=5)])
    np.testing.assert_allclose(lams, -zeros ** 2, rtol=1e-4)


def test_first_dipole_mode(ball):
    assert solve_modes(ball, 1, n_max=1)[0].lam == pytest.approx(-tan_root() ** 2, rel=1e-5)


def test_neumann_monopole(ball):
    m = solve_modes(ball, 0, BoundaryCondition.neumann(), n_max=2)
    # the constant is an exact zero mode; the first non-zero one solves tan k = k
    assert abs(m[0].lam) < 1e-10
    assert m[1].lam == pytest.approx(-tan_root() ** 2, rel=1e-5)


def test_second_order_convergence():
    errs = [abs(solve_modes(make_profile(n=n), 0, n_max=1)[0].lam + math.pi ** 2)
            for n in (250, 500, 1000, 2000)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(q >= 3.5 for q in ratios), ratios


def test_unit_coefficient_assembly():
    p = make_profile(n=50)
    op = assemble_radial(p, 0)
    A, M = op.dense()
    np.testing.assert_array_equal(A, A.T)
    np.testing.assert_allclose(np.diag(M), p.r[:-1] ** 2 * p.cell_widths[:-1])
    # row sums of the pure flux operator vanish away from the eliminated node
    assert np.abs(A[:-1].sum(axis=1)[1:]).max() < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 6), st.sampled_from([0.0, 0.3]))
def test_operator_is_symmetric_with_positive_mass(seed, ell, R):
    rng = np.random.default_rng(seed)
    p = make_profile(a=random_smooth(rng), b=random_smooth(rng), n=80, inner_radius=R)
    for bc in (BoundaryCondition.dirichlet(), BoundaryCondition.robin(1.5, 0.5)):
        op = assemble_radial(p, ell, bc)
        A, M = op.dense()
        np.testing.assert_array_equal(A, A.T)
        assert np.all(np.diag(M) > 0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_modes_are_mass_orthonormal(seed):
    rng = np.random.default_rng(seed)
    p = make_profile(a=random_smooth(rng), b=random_smooth(rng), n=300)
    modes = solve_modes(p, 2, n_max=8)
    F = np.array([m.f for m in modes])
    G = (F * p.mass_weights) @ F.T
    np.testing.assert_allclose(G, np.eye(8), atol=1e-8)
    lams = [m.lam for m in modes]
    assert lams == sorted(lams, reverse=True)


def test_gauge_shift_scales_both_matrices():
    rng = np.random.default_rng(5)
    p = make_profile(a=random_smooth(rng), b=random_smooth(rng), n=100)
    op0, op1 = assemble_radial(p, 3), assemble_radial(p.shifted_b(0.7), 3)
    np.testing.assert_allclose(op1.diag, math.exp(0.7) * op0.diag, rtol=1e-13)
    np.testing.assert_allclose(op1.mass, math.exp(0.7) * op0.mass, rtol=1e-13)


def test_gauge_invariance_of_the_full_spectrum():
    rng = np.random.default_rng(11)
    p = make_profile(a=random_smooth(rng), b=random_smooth(rng), n=400)
    s0 = full_spectrum(p, ell_max=4, n_max=10).lams
    s1 = full_spectrum(p.shifted_b(1.0), ell_max=4, n_max=10).lams
    np.testing.assert_allclose(s1, s0, rtol=1e-10, atol=0)


def test_lowest_expanded_eigenvalues(ball):
    spec = full_spectrum(ball, ell_max=1, n_max=3)
    low = spec.expanded[:4]
    x1 = tan_root()
    np.testing.assert_allclose(low, [-math.pi ** 2] + [-x1 ** 2] * 3, rtol=1e-5)


@pytest.mark.parametrize("ell_max,n_max", [(0, 1), (3, 4), (6, 2)])
def test_expanded_count(ell_max, n_max):
    spec = full_spectrum(make_profile(n=60), ell_max=ell_max, n_max=n_max)
    assert spec.expanded.size == sum(2 * l + 1 for l in range(ell_max + 1)) * n_max
    assert isinstance(spec, Spectrum)


def test_threads_do_not_change_results():
    p = make_profile(a=random_smooth(np.random.default_rng(2)), n=200)
    a = full_spectrum(p, ell_max=5, n_max=4, threads=1).lams
    b = full_spectrum(p, ell_max=5, n_max=4, threads=4).lams
    np.testing.assert_array_equal(a, b)


def test_generic_profile_has_no_accidental_degeneracy():
    rng = np.random.default_rng(7)
    p = make_profile(a=random_smooth(rng), b=random_smooth(rng), n=600)
    assert full_spectrum(p, ell_max=8, n_max=20).degeneracies == []


def test_degeneracy_detection():
    p = make_profile(n=100)
    m = solve_modes(p, 0, n_max=1)
    assert find_degeneracies(m + m) == [((0, 1), (0, 1))]


def test_toroidal_requires_annulus():
    with pytest.raises(ProfileError):
        assemble_radial(make_profile(n=40), 1, variant="toroidal")


def test_toroidal_rigid_rotation_is_a_zero_mode():
    # e^b = r^-3 with f = r: the toroidal l = 1 operator annihilates rigid rotation
    p = make_profile(b=np.log(np.linspace(0.5, 1, 400)) * -3.0, n=400, inner_radius=0.5)
    m = solve_modes(p, 1, BoundaryCondition.toroidal(0.5), "toroidal", n_max=1)[0]
    assert abs(m.lam) < 1e-3


def test_rejects_bad_requests():
    p = make_profile(n=30)
    with pytest.raises(ValueError):
        solve_modes(p, 0, n_max=100)
    with pytest.raises(ValueError):
        solve_modes(p, -1)
    with pytest.raises(ValueError):
        full_spectrum(p, ell_max=-1)
    assert issubclass(SolverError, RuntimeError)


def test_csv_exports(tmp_path):
    p = make_profile(n=50)
    spec = full_spectrum(p, ell_max=1, n_max=2)
    spec.to_csv(tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "l,n,lambda,multiplicity" and len(rows) == 5
    assert float(rows[1].split(",")[2]) == spec.modes[0].lam
    write_eigenfunctions(tmp_path / "f.csv", p, spec.modes)
    data = np.loadtxt(tmp_path / "f.csv", delimiter=",", skiprows=1)
    assert data.shape == (50, 5)


@pytest.mark.parametrize("K", [1, 30, 90])
def test_lowest_modes_match_a_brute_force_box(K):
    p = make_profile(a=random_smooth(np.random.default_rng(K)), n=300)
    wide = full_spectrum(p, ell_max=40, n_max=40).modes[:K]
    got = lowest_modes(p, K)
    assert [(m.ell, m.n) for m in got] == [(m.ell, m.n) for m in wide]
