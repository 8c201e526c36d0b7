import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh

from wentzell4.coefficient import constant_profile, power_profile, singular_moment
from wentzell4.discretization import build_mesh, hermite_basis, interpolate_poly
from wentzell4.forms import (
    OperatorForm,
    WentzellParams,
    assemble,
    assemble_divergence,
    assemble_nondivergence,
    export_matrix,
    load_matrix,
    norm,
)
from wentzell4.powers import DivergentIntegralError


def make(form, coeff, gamma=0.0, beta=(1.0, 1.0), n=8, grading=1.0):
    mesh = build_mesh(n, coeff.x0, grading)
    params = WentzellParams(beta[0], beta[1], gamma, gamma)
    return assemble(form, mesh, hermite_basis(mesh), coeff, params)


def test_wentzell_params_validation():
    with pytest.raises(ValueError):
        WentzellParams(0.0, 1.0)
    with pytest.raises(ValueError):
        WentzellParams(1.0, 1.0, 0.5, 0.0)
    WentzellParams(2.0, 3.0, -1.0, 0.0)


def test_divergence_mass_includes_boundary_point_masses():
    sys = make(OperatorForm.DIVERGENCE, power_profile(0.5, 0.5))
    one = interpolate_poly(sys.dofmap, [1.0])
    assert one @ sys.M @ one == pytest.approx(1.0 + 2.0 * math.sqrt(0.5), rel=1e-13)


def test_divergence_energy_of_affine_is_zero():
    sys = make(OperatorForm.DIVERGENCE, power_profile(0.5, 0.5))
    one = interpolate_poly(sys.dofmap, [1.0])
    scale = np.abs(sys.K).max()
    assert abs(one @ sys.K @ one) <= 1e-14 * scale


def test_divergence_boundary_gamma_term():
    mesh = build_mesh(8, 0.5)
    params = WentzellParams(1.0, 1.0, 0.0, -1.0)
    sys = assemble_divergence(mesh, hermite_basis(mesh), power_profile(0.5, 1.0), params)
    x = interpolate_poly(sys.dofmap, [0.0, 1.0])
    assert x @ sys.K @ x == pytest.approx(0.5, abs=1e-12)


def test_nondivergence_weak_mass_value():
    sys = make(OperatorForm.NON_DIVERGENCE, power_profile(0.5, 0.5), beta=(2.0, 2.0))
    one = interpolate_poly(sys.dofmap, [1.0])
    assert one @ sys.M @ one == pytest.approx(2.0 * math.sqrt(2.0) + 1.0, rel=1e-12)


def test_nondivergence_strong_constrains_value_at_x0():
    sys = make(OperatorForm.NON_DIVERGENCE, power_profile(0.5, 1.0))
    assert sys.constrained_dofs == (sys.dofmap.value_dof(sys.mesh.x0_index),)
    assert sys.size == sys.dofmap.total_dofs - 1
    u = interpolate_poly(sys.dofmap, [-0.5, 1.0])  # x - x0, honours the constraint
    assert norm(sys, u, "l2_recip_a") ** 2 == pytest.approx(0.25, rel=1e-12)


def test_nondivergence_strong_unconstrained_refused():
    mesh = build_mesh(8, 0.5)
    with pytest.raises(DivergentIntegralError):
        assemble_nondivergence(
            mesh,
            hermite_basis(mesh),
            power_profile(0.5, 1.5),
            WentzellParams(1.0, 1.0),
            constrain_strong=False,
        )


def test_strong_exponent_two_or_more_rejected():
    mesh = build_mesh(8, 0.5)
    for form in OperatorForm:
        with pytest.raises(ValueError):
            assemble(form, mesh, hermite_basis(mesh), power_profile(0.5, 2.0), WentzellParams(1, 1))


def test_interior_degeneracy_required():
    mesh = build_mesh(8, 0.5)
    with pytest.raises(ValueError):
        assemble_divergence(
            mesh, hermite_basis(mesh), power_profile(0.0, 0.5), WentzellParams(1, 1)
        )


CASES = [
    (form, coeff, gamma)
    for form in OperatorForm
    for coeff in (
        power_profile(0.5, 0.5),
        power_profile(0.5, 1.0),
        power_profile(0.5, 1.5),
        constant_profile(1.0, 0.5),
    )
    for gamma in (0.0, -1.0)
]


@pytest.mark.parametrize("form,coeff,gamma", CASES)
def test_exact_symmetry_and_positive_semidefiniteness(form, coeff, gamma):
    sys = make(form, coeff, gamma=gamma, n=8)
    assert np.array_equal(sys.M, sys.M.T)
    assert np.array_equal(sys.K, sys.K.T)
    Mf, Kf = sys.free_matrices()
    w = eigh(Kf, Mf, eigvals_only=True)
    assert w[0] >= -1e-10 * max(w[-1], 1.0)
    assert np.all(eigh(Mf, eigvals_only=True) > 0.0)


def test_kernel_dimensions_with_neutral_boundary():
    sys = make(OperatorForm.DIVERGENCE, power_profile(0.5, 0.5), n=16)
    Mf, Kf = sys.free_matrices()
    w = eigh(Kf, Mf, eigvals_only=True)
    assert np.sum(w < 1e-9 * w[-1]) == 2
    sys = make(OperatorForm.NON_DIVERGENCE, power_profile(0.5, 1.0), n=16)
    Mf, Kf = sys.free_matrices()
    w = eigh(Kf, Mf, eigvals_only=True)
    assert np.sum(w < 1e-9 * w[-1]) == 1


@pytest.mark.parametrize("form", list(OperatorForm))
def test_coercivity_against_seminorm_matrix(form):
    # lam*M + K - delta*(M + S) is positive semidefinite for
    # delta = min(lam, 1, lam - gamma0, lam - gamma1)
    coeff = power_profile(0.5, 0.5)
    sys = make(form, coeff, gamma=-1.0, n=8)
    Mf, _ = sys.free_matrices()
    Sf = sys.stiffness_interior[np.ix_(sys.free, sys.free)]
    Kf = sys.K[np.ix_(sys.free, sys.free)]
    for lam in (0.5, 1.0, 10.0):
        delta = min(lam, 1.0, lam + 1.0)
        B = lam * Mf + Kf - delta * (Mf + Sf)
        w = eigh(B, eigvals_only=True)
        assert w[0] >= -1e-8 * max(abs(w[-1]), 1.0)


def test_norms_trivial_values():
    sys = make(OperatorForm.DIVERGENCE, power_profile(0.5, 0.5))
    one = interpolate_poly(sys.dofmap, [1.0])
    assert norm(sys, one, "l2") == pytest.approx(1.0, rel=1e-13)
    # squared seminorm vanishes to rounding against the stiffness scale
    scale = np.abs(sys.K).max()
    assert norm(sys, one, "sqrt_a_d2") ** 2 <= 1e-13 * scale
    assert norm(sys, one, "h2_a_reduced") == pytest.approx(1.0, rel=1e-8)


def test_norms_quadratic_and_measure():
    sys = make(OperatorForm.DIVERGENCE, constant_profile(1.0, 0.5))
    u = interpolate_poly(sys.dofmap, [0.0, -1.0, 1.0])  # x^2 - x
    assert norm(sys, u, "sqrt_a_d2") ** 2 == pytest.approx(4.0, rel=1e-13)
    sysw = make(OperatorForm.DIVERGENCE, power_profile(0.5, 0.5))
    x = interpolate_poly(sysw.dofmap, [0.0, 1.0])
    assert norm(sysw, x, "mu") ** 2 == pytest.approx(1.0 / 3.0 + math.sqrt(0.5), rel=1e-13)


def test_norm_weighted_composites_consistent():
    sys = make(OperatorForm.NON_DIVERGENCE, power_profile(0.5, 0.5))
    u = interpolate_poly(sys.dofmap, [1.0, 2.0, -1.0])
    l2a = norm(sys, u, "l2_recip_a")
    d1 = norm(sys, u, "d1")
    d2 = norm(sys, u, "d2")
    assert norm(sys, u, "h2_recip_a") == pytest.approx(
        math.sqrt(l2a**2 + d1**2 + d2**2), rel=1e-13
    )


def test_norm_strong_reciprocal_needs_vanishing_value():
    sys = make(OperatorForm.NON_DIVERGENCE, power_profile(0.5, 1.0))
    bad = np.zeros(sys.dofmap.total_dofs)
    bad[sys.dofmap.value_dof(sys.mesh.x0_index)] = 1.0
    with pytest.raises(DivergentIntegralError):
        norm(sys, bad, "l2_recip_a")


def test_norm_unknown_kind():
    sys = make(OperatorForm.DIVERGENCE, power_profile(0.5, 0.5))
    with pytest.raises(ValueError):
        norm(sys, np.zeros(sys.dofmap.total_dofs), "h7")


@settings(max_examples=20, deadline=None)
@given(
    gamma=st.floats(min_value=-5.0, max_value=0.0),
    beta=st.floats(min_value=0.1, max_value=10.0),
    K=st.floats(min_value=0.1, max_value=1.9),
)
def test_assembly_properties_random_parameters(gamma, beta, K):
    sys = make(
        OperatorForm.DIVERGENCE, power_profile(0.4, K), gamma=gamma, beta=(beta, beta), n=6
    )
    assert np.array_equal(sys.M, sys.M.T)
    assert np.array_equal(sys.K, sys.K.T)
    Mf, Kf = sys.free_matrices()
    w = eigh(Kf, Mf, eigvals_only=True)
    assert w[0] >= -1e-10 * max(w[-1], 1.0)


def test_weak_reciprocal_mass_matches_closed_moment():
    coeff = power_profile(0.5, 0.5)
    sys = make(OperatorForm.NON_DIVERGENCE, coeff, beta=(1e6, 1e6), n=8)
    one = interpolate_poly(sys.dofmap, [1.0])
    expected = singular_moment(coeff, (0, 1), 0, -1) + 2e-6
    assert one @ sys.M @ one == pytest.approx(expected, rel=1e-10)


def test_matrix_export_roundtrip():
    sys = make(OperatorForm.DIVERGENCE, power_profile(0.5, 0.5), n=4)
    buf = io.StringIO()
    export_matrix(sys.M, buf)
    buf.seek(0)
    np.testing.assert_array_equal(load_matrix(buf), sys.M)
    header = buf.getvalue().splitlines()
    assert header[0].startswith("#")
    n, band = map(int, header[1].split())
    assert n == sys.dofmap.total_dofs and band == 3
