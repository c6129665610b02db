"""Moving-basis spectral machinery: geometry, overlaps, coefficients, moments."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import hypothesis as hyp
import hypothesis.strategies as st

from qtrap import spectral
from qtrap.special import DomainError, bessel_j, bessel_j_prime
from qtrap.spectral import (
    TrapGeometry,
    TruncationError,
    b_coeffs,
    b_coeffs_direct,
    coeffs_from_eigenstate,
    coeffs_from_initial,
    energy_ratio,
    energy_ratio_paths,
    expectation,
    matrix_element,
    moment_tables,
    overlap_I,
    uncertainties,
)


def _zeros(m, count):
    return spectral._zeros_cached(m, count)


# --------------------------------------------------------------------------
# Geometry

def test_geometry_basics():
    geom = TrapGeometry(a=2.0, u=0.5, hbar=1.0, mu=1.0)
    assert geom.L(0.0) == 2.0
    assert geom.xi(4.0) == 2.0
    assert geom.alpha == pytest.approx(2.0 * 0.5 / 2.0)
    e = geom.energy(0, 1)
    x01 = _zeros(0, 1)[0][0]
    assert_allclose(e, x01 ** 2 / (2.0 * 4.0), rtol=1e-14)


def test_geometry_from_alpha_round_trip():
    geom = TrapGeometry.from_alpha(1.7)
    assert_allclose(geom.alpha, 1.7, rtol=1e-15)
    geom_c = TrapGeometry.from_alpha(-0.3)
    assert geom_c.u < 0


def test_geometry_domain_errors():
    with pytest.raises(DomainError):
        TrapGeometry(a=-1.0)
    with pytest.raises(DomainError):
        TrapGeometry(a=1.0, u=1.0).xi(-0.5)
    contracting = TrapGeometry(a=1.0, u=-1.0)
    with pytest.raises(DomainError):
        contracting.xi(0.999)  # wall collapsed


def test_tau_closed_form():
    # hbar t / (2 mu a^2 xi) equals (1 - 1/xi)/(4 alpha) for a moving wall
    geom = TrapGeometry(a=1.3, u=0.7, hbar=1.0, mu=2.0)
    for t in (0.0, 0.4, 2.0):
        xi_t = geom.xi(t)
        lhs = geom.tau(t)
        rhs = (1.0 - 1.0 / xi_t) / (4.0 * geom.alpha) if t else 0.0
        assert_allclose(lhs, rhs, atol=1e-15)


# --------------------------------------------------------------------------
# Overlap integrals

def test_overlap_reduces_to_orthogonality():
    geom = TrapGeometry()
    zeros, absj = _zeros(0, 3)
    for i in range(1, 4):
        for j in range(1, 4):
            val = overlap_I(0, i, j, 0.0, 0.0, geom)
            want = absj[i - 1] ** 2 / 2.0 if i == j else 0.0
            assert abs(val - want) < 1e-12


def test_overlap_conjugation_and_symmetry():
    geom = TrapGeometry.from_alpha(0.9)
    t = 0.6
    a = overlap_I(1, 2, 4, t, 0.9, geom)
    b = overlap_I(1, 4, 2, t, 0.9, geom)
    c = overlap_I(1, 2, 4, t, -0.9, geom)
    assert_allclose(a, b, rtol=1e-12)
    assert_allclose(c, np.conj(a), rtol=1e-12)


def test_overlap_matrix_consistent_with_scalar():
    geom = TrapGeometry.from_alpha(1.4)
    t = 0.5
    mat = spectral._i_matrix(2, geom.xi(t), geom.alpha, 6)
    for (i, j) in ((0, 0), (1, 4), (3, 2)):
        val = overlap_I(2, i + 1, j + 1, t, geom.alpha, geom)
        assert abs(mat[i, j] - val) < 1e-11


@hyp.settings(max_examples=10, deadline=None)
@hyp.given(st.floats(min_value=-1.2, max_value=3.0))
def test_overlap_conjugation_property(alpha):
    # contraction stays shy of wall collapse at t = 0.1 in this alpha range
    geom = TrapGeometry.from_alpha(alpha if alpha else 0.5)
    val = overlap_I(0, 1, 2, 0.1, geom.alpha, geom)
    flipped = overlap_I(0, 1, 2, 0.1, -geom.alpha, geom)
    assert abs(flipped - np.conj(val)) < 1e-11


# --------------------------------------------------------------------------
# Coefficients

def test_eigenstate_coeffs_near_static_limit():
    geom = TrapGeometry.from_alpha(1e-6)
    state = coeffs_from_eigenstate(0, 2, geom, n_max=30)
    want = np.zeros(30)
    want[1] = 1.0
    assert np.max(np.abs(np.abs(state.coeffs) - want)) < 1e-5
    assert state.norm_deficit < 1e-12


def test_truncation_guard_raises():
    x02 = _zeros(0, 2)[0][1]
    geom = TrapGeometry.from_alpha(10.0 * x02 / 2.0)
    with pytest.raises(TruncationError) as exc_info:
        coeffs_from_eigenstate(0, 2, geom, n_max=4)
    assert exc_info.value.deficit > 1e-4


def test_initial_projection_matches_eigenstate_route():
    m, n = 1, 2
    zeros, absj = _zeros(m, n)
    x = zeros[n - 1]
    geom = TrapGeometry.from_alpha(2.0)

    def psi0(rho):
        # radial profile, unit norm against the rho drho measure
        return math.sqrt(2.0) / absj[n - 1] * bessel_j(m, x * rho)

    direct = coeffs_from_initial(psi0, m, geom, n_max=30)
    via_mode = coeffs_from_eigenstate(m, n, geom, n_max=30)
    assert np.max(np.abs(direct.coeffs - via_mode.coeffs)) < 1e-9


def test_initial_projection_rejects_unnormalized():
    geom = TrapGeometry.from_alpha(1.0)
    with pytest.raises(DomainError):
        coeffs_from_initial(lambda rho: 0.5 * np.exp(-rho), 0, geom)


def test_static_trap_coefficients_only_rotate():
    geom = TrapGeometry()  # u = 0
    state = coeffs_from_eigenstate(0, 1, geom, n_max=10)
    t = 0.8
    b = b_coeffs(state, t, geom)
    zeros, _ = _zeros(0, 10)
    expected = state.coeffs * np.exp(-1j * zeros ** 2 * t / 2.0)
    assert np.max(np.abs(b - expected)) < 1e-12


def test_two_path_coefficients_agree():
    x01 = _zeros(0, 1)[0][0]
    geom = TrapGeometry.from_alpha(2.0 * x01 / 2.0)
    state = coeffs_from_eigenstate(0, 1, geom, n_max=40)
    t = 0.5 / geom.u  # xi = 1.5
    series = b_coeffs(state, t, geom)
    direct = b_coeffs_direct(state, t, geom)
    assert np.max(np.abs(series - direct)) < 1e-8


def test_dropping_moving_phase_is_detected():
    x01 = _zeros(0, 1)[0][0]
    geom = TrapGeometry.from_alpha(2.0 * x01 / 2.0)
    state = coeffs_from_eigenstate(0, 1, geom, n_max=40)
    t = 0.5 / geom.u
    series = b_coeffs(state, t, geom)
    broken = b_coeffs_direct(state, t, geom, drop_moving_phase=True)
    assert np.max(np.abs(series - broken)) > 1e-3


def test_unitarity_fast_expansion():
    x01 = _zeros(0, 1)[0][0]
    geom = TrapGeometry.from_alpha(5.0 * x01 / 2.0)
    state = coeffs_from_eigenstate(0, 1, geom)
    for xi_t in (1.5, 2.0, 3.0):
        t = (xi_t - 1.0) / geom.u
        b = b_coeffs(state, t, geom)
        assert abs(np.sum(np.abs(b) ** 2) - 1.0) < 1e-6


def test_state_geometry_mismatch_rejected():
    state = coeffs_from_eigenstate(0, 1, TrapGeometry.from_alpha(1.0), n_max=10)
    other = TrapGeometry.from_alpha(2.0)
    with pytest.raises(DomainError):
        b_coeffs(state, 0.1, other)


# --------------------------------------------------------------------------
# Moment tables

@pytest.mark.parametrize("m", [0, 1, 4])
def test_moment_table_identities(m):
    tab = moment_tables(m, 12)
    zeros, absj = _zeros(m, 12)
    d = np.arange(12)
    b0_diag = tab.B0[d, d]
    if m == 0:
        assert np.max(np.abs(b0_diag + 0.5)) < 1e-11
        assert np.all(np.isnan(tab.Aneg1))
    else:
        assert np.max(np.abs(b0_diag)) < 1e-11
    assert np.max(np.abs(tab.A1[d, d] + tab.B2[d, d])) < 1e-11
    assert np.max(np.abs(tab.A3 - tab.A3.T)) < 1e-13
    # A1 orthonormality
    assert np.max(np.abs(tab.A1 - np.diag(absj ** 2 / 2.0))) < 1e-11


@pytest.mark.parametrize("m", [1, 2, 5])
def test_inverse_moment_elementary_form(m):
    # int_0^1 J_m(x s)^2 / s ds = (1 - J_0^2 - 2 sum_{k<m} J_k^2) / (2m) at a zero
    tab = moment_tables(m, 6)
    zeros, _ = _zeros(m, 6)
    for i, x in enumerate(zeros):
        elem = 1.0 - bessel_j(0, x) ** 2
        for k in range(1, m):
            elem -= 2.0 * bessel_j(k, x) ** 2
        elem /= 2.0 * m
        assert_allclose(tab.Aneg1[i, i], elem, rtol=1e-11)


@pytest.mark.parametrize("m", [0, 1, 3])
def test_gradient_moment_elementary_form(m):
    tab = moment_tables(m, 6)
    zeros, _ = _zeros(m, 6)
    for i, x in enumerate(zeros):
        grad = tab.B0[i, i] + tab.C1[i, i]
        if m == 0:
            elem = -x ** 2 * bessel_j(1, x) ** 2 / 2.0
        else:
            aneg = tab.Aneg1[i, i]
            elem = -x ** 2 * bessel_j(m - 1, x) ** 2 / 2.0 + m ** 2 * aneg
        assert_allclose(grad, elem, rtol=1e-10)


def test_kinetic_diag_closed_form():
    for m in (0, 2):
        tab = moment_tables(m, 8)
        zeros, absj = _zeros(m, 8)
        for n in range(1, 9):
            want = zeros[n - 1] ** 2 * absj[n - 1] ** 2 / 2.0
            assert_allclose(tab.kinetic_diag(n), want, rtol=1e-10)


def test_gradient_moment_against_direct_quadrature():
    from qtrap.quad import integrate
    m, n = 2, 3
    tab = moment_tables(m, n)
    zeros, _ = _zeros(m, n)
    x = zeros[n - 1]

    def f(s):
        return s * (x * bessel_j_prime(m, x * s)) ** 2

    ref = -integrate(f, 0.0, 1.0, initial_panels=16).value
    assert_allclose(tab.B0[n - 1, n - 1] + tab.C1[n - 1, n - 1], ref, rtol=1e-11)


# --------------------------------------------------------------------------
# Expectation values

def test_first_moments_vanish():
    geom = TrapGeometry.from_alpha(1.1)
    state = coeffs_from_eigenstate(0, 1, geom, n_max=20)
    assert expectation("q0", state, 0.3, geom) == 0.0
    assert expectation("p0", state, 0.3, geom) == 0.0


def test_h_reproduces_static_energies():
    geom = TrapGeometry()
    for (m, n) in ((0, 1), (1, 3), (3, 2)):
        h = matrix_element("H", m, n, n, 0.0, geom)
        assert_allclose(h.real, geom.energy(m, n), rtol=1e-10)
        assert abs(h.imag) < 1e-14


def test_invalid_operator_kind():
    geom = TrapGeometry()
    with pytest.raises(DomainError):
        matrix_element("qp", 0, 1, 1, 0.0, geom)
    with pytest.raises(DomainError):
        matrix_element("H", 0, 0, 1, 0.0, geom)


def test_energy_expectation_matches_level_populations():
    # c^dag H c must equal the population-weighted instantaneous energies
    x01 = _zeros(0, 1)[0][0]
    geom = TrapGeometry.from_alpha(5.0 * x01 / 2.0)
    state = coeffs_from_eigenstate(0, 1, geom)
    t = 2.0 / geom.u  # xi = 3
    h = expectation("H", state, t, geom)
    b = b_coeffs(state, t, geom)
    zeros, _ = _zeros(0, state.n_max)
    levels = zeros ** 2 / (2.0 * geom.L(t) ** 2)
    pops = np.sum(np.abs(b) ** 2 * levels)
    assert_allclose(h, pops, rtol=1e-4)


# --------------------------------------------------------------------------
# Uncertainties and energy ratio

def test_position_spread_scales_exactly_with_wall():
    geom = TrapGeometry.from_alpha(0.9)
    dq0, _, _ = uncertainties(0, 1, 0.0, geom)
    for xi_t in (1.3, 2.0, 4.2):
        t = (xi_t - 1.0) / geom.u
        dq, _, _ = uncertainties(0, 1, t, geom)
        assert_allclose(dq / dq0, xi_t, rtol=1e-12)


def test_stationary_uncertainty_product():
    geom = TrapGeometry()
    dq, dp, prod = uncertainties(0, 1, 0.0, geom)
    assert_allclose(prod, dq * dp, rtol=1e-15)
    # frozen value for the ground mode with the azimuth-inclusive convention
    assert_allclose(prod / (0.5 * geom.hbar), 7.055829630410952, rtol=1e-10)


def test_uncertainty_product_above_floor():
    geom = TrapGeometry.from_alpha(-0.6)
    for (m, n) in ((0, 1), (2, 2), (5, 4)):
        for xi_t in (1.0, 0.5, 0.2):
            t = (xi_t - 1.0) / geom.u
            _, _, prod = uncertainties(m, n, t, geom)
            assert prod > 0.5 * geom.hbar


def test_energy_ratio_two_routes():
    x01 = _zeros(0, 1)[0][0]
    geom = TrapGeometry.from_alpha(x01 / 2.0)
    t = 1.0 / geom.u  # xi = 2
    isum, closed = energy_ratio_paths(0, 1, t, geom)
    assert abs(isum - closed) < 1e-6
    # frozen closed-route value
    assert_allclose(closed, 0.38426507660859827, rtol=1e-9)
    assert_allclose(energy_ratio(0, 1, t, geom), closed, rtol=1e-6)


def test_energy_ratio_static_is_one():
    geom = TrapGeometry.from_alpha(0.5 * _zeros(0, 1)[0][0])
    isum, closed = energy_ratio_paths(0, 1, 0.0, geom)
    assert_allclose(isum, 1.0, atol=1e-12)
    assert_allclose(closed, 1.0, atol=1e-15)
