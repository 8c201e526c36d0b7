import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from wentzell4.coefficient import constant_profile, power_profile
from wentzell4.discretization import build_mesh, hermite_basis, interpolate_poly
from wentzell4.forms import OperatorForm, WentzellParams, assemble, assemble_divergence
from wentzell4.oracle import (
    SpaceMembershipError,
    best_linear_fit,
    dense_decompose,
    exact_propagator,
    green_battery,
    green_residual,
    hardy_bound,
    norm_equivalence_report,
    pointwise_sqrt_bound,
    verification_report,
)


@pytest.fixture(scope="module")
def weak_system():
    mesh = build_mesh(16, 0.5)
    return assemble_divergence(
        mesh, hermite_basis(mesh), power_profile(0.5, 0.5), WentzellParams(1.0, 1.0)
    )


# ---- spectral reference ---------------------------------------------------


def test_decomposition_orthonormality_and_diagonalization(weak_system):
    d = dense_decompose(weak_system)
    V = d.vectors[weak_system.free]
    Mf, Kf = weak_system.free_matrices()
    assert np.max(np.abs(V.T @ Mf @ V - np.eye(len(d.eigenvalues)))) <= 1e-10
    off = V.T @ Kf @ V - np.diag(d.eigenvalues)
    assert np.max(np.abs(off)) <= 1e-8 * max(d.eigenvalues[-1], 1.0)


def test_divergence_kernel_is_affine(weak_system):
    d = dense_decompose(weak_system)
    assert d.near_zero_count() == 2
    # cross-check: the stiffness annihilates interpolants of 1 and x
    for coeffs in ([1.0], [0.0, 1.0]):
        u = interpolate_poly(weak_system.dofmap, coeffs)
        r = weak_system.K @ u
        assert np.linalg.norm(r) <= 1e-10 * np.abs(weak_system.K).max()


def test_strong_nondivergence_kernel_is_pinned_linear():
    mesh = build_mesh(16, 0.5)
    sys = assemble(
        OperatorForm.NON_DIVERGENCE,
        mesh,
        hermite_basis(mesh),
        power_profile(0.5, 1.0),
        WentzellParams(1.0, 1.0),
    )
    d = dense_decompose(sys)
    assert d.near_zero_count() == 1
    u = interpolate_poly(sys.dofmap, [-0.5, 1.0])
    assert np.linalg.norm(sys.K @ u) <= 1e-10 * np.abs(sys.K).max()


def test_propagator_time_zero_and_modal_decay(weak_system):
    d = dense_decompose(weak_system)
    rng = np.random.default_rng(2)
    u0 = rng.standard_normal(weak_system.dofmap.total_dofs)
    np.testing.assert_allclose(exact_propagator(d, u0, 0.0), u0, atol=1e-9)
    k = 3
    v = d.vectors[:, k]
    t = 0.37 / max(d.eigenvalues[k], 1.0)
    np.testing.assert_allclose(
        exact_propagator(d, v, t), math.exp(-d.eigenvalues[k] * t) * v, atol=1e-10
    )


def test_propagator_contracts(weak_system):
    d = dense_decompose(weak_system)
    rng = np.random.default_rng(8)
    for _ in range(5):
        u0 = rng.standard_normal(weak_system.dofmap.total_dofs)
        n0 = weak_system.mass_norm_sq(u0)
        for t in (1e-4, 0.01, 1.0):
            assert weak_system.mass_norm_sq(exact_propagator(d, u0, t)) <= n0 * (1 + 1e-12)


def test_propagator_rejects_negative_time(weak_system):
    d = dense_decompose(weak_system)
    with pytest.raises(ValueError):
        exact_propagator(d, np.zeros(weak_system.dofmap.total_dofs), -0.1)


# ---- integration-by-parts battery ----------------------------------------


def test_green_classic_case_values():
    rep = green_residual(
        "divergence", [0.0, 0.0, 1.0, -2.0, 1.0], [1.0], constant_profile(1.0, 0.5)
    )
    assert rep.lhs == pytest.approx(24.0, rel=1e-14)
    assert rep.boundary_first == pytest.approx(24.0, rel=1e-14)
    assert rep.boundary_second == pytest.approx(0.0, abs=1e-14)
    assert rep.rhs == pytest.approx(0.0, abs=1e-14)
    assert rep.residual <= 1e-13


def test_green_battery_all_identities_hold():
    cases = green_battery()
    assert len(cases) >= 12
    names = {c[0] for c in cases}
    assert any("jump" in n for n in names)
    assert any("x0_left" in n for n in names) and any("x0_right" in n for n in names)
    for name, form, coeff, u, v in cases:
        rep = green_residual(form, u, v, coeff)
        assert rep.residual <= 1e-11 * max(rep.scale, 1e-30), name


def test_green_jump_term_is_essential():
    name, form, coeff, u, v = next(
        c for c in green_battery() if c[0] == "strong_nondiv_jump_K1"
    )
    rep = green_residual(form, u, v, coeff)
    assert rep.jump != 0.0
    without = abs(rep.lhs - (rep.boundary_first - rep.boundary_second + rep.rhs))
    assert without >= abs(rep.jump) * (1.0 - 1e-12)
    assert rep.residual <= 1e-12 * rep.scale


def test_green_membership_rejections():
    # weak case with u'' not vanishing at x0: a u'' falls out of the space
    with pytest.raises(SpaceMembershipError):
        green_residual("divergence", [0.0, 0.0, 0.0, 0.0, 1.0], [1.0], power_profile(0.5, 0.5))
    # discontinuous v
    with pytest.raises(SpaceMembershipError):
        green_residual(
            "divergence",
            [0.0, 0.0, 1.0, -2.0, 1.0],
            ([0.0], [1.0]),
            constant_profile(1.0, 0.5),
        )
    # strong non-divergence with u(x0) != 0
    with pytest.raises(SpaceMembershipError):
        green_residual("nondivergence", [1.0, 1.0], [0.0, 1.0], power_profile(0.5, 1.5))


def test_green_zero_v_trivial():
    name, form, coeff, u, v = next(c for c in green_battery() if c[0] == "zero_v")
    rep = green_residual(form, u, v, coeff)
    assert rep.scale == 0.0 and rep.residual == 0.0


# ---- closed-form estimates ------------------------------------------------


def test_hardy_pieces_prototype_identity():
    # left piece: integrand t/a collapses to t^(1-K)
    for K in (1.0, 1.25, 1.5, 1.75):
        left, right = hardy_bound(power_profile(0.0, K), 0.5)
        assert left == pytest.approx(0.5 ** (2.0 - K) / (2.0 - K), rel=1e-14)
        assert right > 0.0
    left, right = hardy_bound(power_profile(0.0, 1.0), 0.5)
    assert right == pytest.approx(0.5 - 1.0 - math.log(0.5), rel=1e-14)
    assert hardy_bound(power_profile(0.0, 1.5), 0.25)[0] == pytest.approx(1.0, rel=1e-14)


def test_hardy_pieces_against_double_quadrature():
    K = 1.25
    left, right = hardy_bound(power_profile(0.0, K), 0.4)
    num_left = dblquad(lambda t, x: t**-K, 0.0, 0.4, lambda x: x, lambda x: 0.4)[0]
    num_right = dblquad(lambda t, x: t**-K, 0.4, 1.0, lambda x: 0.4, lambda x: x)[0]
    assert left == pytest.approx(num_left, rel=1e-9)
    assert right == pytest.approx(num_right, rel=1e-9)


def test_hardy_requires_admissible_exponent():
    with pytest.raises(ValueError):
        hardy_bound(power_profile(0.0, 2.0), 0.5)
    with pytest.raises(ValueError):
        hardy_bound(power_profile(0.0, 0.5), 0.5)


def test_best_linear_fit_square_closed_form():
    fit = best_linear_fit([0.0, 0.0, 1.0])
    assert fit.slope == pytest.approx(1.0, abs=1e-14)
    assert fit.intercept == pytest.approx(-1.0 / 6.0, abs=1e-14)
    expected = ((1.0 - math.sqrt(1.0 / 3.0)) / 2.0, (1.0 + math.sqrt(1.0 / 3.0)) / 2.0)
    assert fit.zeros == pytest.approx(expected, abs=1e-12)


def test_best_linear_fit_affine_input_is_fixed_point():
    fit = best_linear_fit([2.0, -3.0])
    assert fit.intercept == pytest.approx(2.0, abs=1e-13)
    assert fit.slope == pytest.approx(-3.0, abs=1e-13)
    np.testing.assert_allclose(fit.residual_coeffs, 0.0, atol=1e-13)


def test_best_linear_fit_orthogonality_and_sign_changes():
    for coeffs in ([0.0, 0.0, 0.0, 1.0], [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0]):
        fit = best_linear_fit(coeffs)
        r = np.polynomial.Polynomial(fit.residual_coeffs)
        assert abs(r.integ()(1.0) - r.integ()(0.0)) <= 1e-12
        xr = np.polynomial.Polynomial([0.0, 1.0]) * r
        assert abs(xr.integ()(1.0) - xr.integ()(0.0)) <= 1e-12
        assert len(fit.zeros) >= 2


def test_pointwise_bound_documented_cases():
    a1 = power_profile(0.5, 1.0)
    assert pointwise_sqrt_bound([1.0], a1, 0) == pytest.approx(math.sqrt(0.5), rel=1e-6)
    assert pointwise_sqrt_bound([0.0, 1.0], a1, 1) == pytest.approx(math.sqrt(0.5), rel=1e-6)
    assert pointwise_sqrt_bound([0.0], a1, 0) == 0.0
    assert pointwise_sqrt_bound([0.0, 0.0, 1.0], power_profile(0.5, 1.5), 2) <= 1.0 + 1e-8


def test_pointwise_bound_rejects_nonvanishing_weighted_derivative():
    # K = 0: a u^(0) = u does not vanish at x0
    with pytest.raises(SpaceMembershipError):
        pointwise_sqrt_bound([1.0], constant_profile(1.0, 0.5), 0)


# ---- empirical probe and report -------------------------------------------


def test_norm_equivalence_probe_finite_and_deterministic():
    rep1 = norm_equivalence_report(power_profile(0.5, 0.5), n=8, sample_count=500, seed=4)
    rep2 = norm_equivalence_report(power_profile(0.5, 0.5), n=8, sample_count=500, seed=4)
    assert rep1.max_ratios == rep2.max_ratios
    assert all(math.isfinite(r) for r in rep1.max_ratios)
    assert len(rep1.max_ratios) == 3 and rep1.element_counts == (8, 16, 32)
    # refinement must not blow the empirical constant up
    assert max(rep1.growth_factors) < 10.0
    with pytest.raises(ValueError):
        norm_equivalence_report(power_profile(0.5, 0.5), sample_count=50)


def test_norm_equivalence_nondegenerate_regression_baseline():
    # measured on the reference configuration; the classical constant
    # bounds it far away from this level
    rep = norm_equivalence_report(
        constant_profile(1.0, 0.5), n=32, sample_count=500, seed=0, refinements=0
    )
    assert rep.max_ratios[0] <= 20.0


def test_verification_report_all_pass_and_shape():
    rep = verification_report(seed=0)
    assert rep["all_pass"] is True
    suites = {c["suite"] for c in rep["checks"]}
    assert suites == {
        "green", "spectral", "resolvent", "hardy", "linear_fit",
        "pointwise", "norm_equivalence",
    }
    for c in rep["checks"]:
        assert {"suite", "name", "inputs", "computed", "tolerance", "pass"} <= set(c)


def test_verification_report_suite_selection():
    rep = verification_report(["hardy"], seed=0)
    assert {c["suite"] for c in rep["checks"]} == {"hardy"}
    with pytest.raises(ValueError):
        verification_report(["nope"])
