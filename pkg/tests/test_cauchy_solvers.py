import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadinv.cauchy_solvers import (chi_from_initial, chi_special, coefficients_csv, default_k1,
                                    eigenfunction_expansion, evolve_by_kernel, expansion_coefficients,
                                    expansion_in_wavefunctions, expansion_setup, kpsi_overlap,
                                    matched_kappa_initial, matched_state, oscillation_number, psi_special)
from quadinv.coeffs import preset
from quadinv.errors import ModeError, ResolutionError, SingularityError, TruncationWarning, UsageError
from quadinv.grid_ops import (Grid, WaveFunction, apply_quadratic_invariant, inner_product, l2_distance)
from quadinv.invariants import linear_from_mu
from quadinv.kernel import general_kernel_parameters, green_parameters
from quadinv.ode_engine import solve_characteristic, solve_ermakov
from quadinv.oracle import OracleConfig, evolve_oracle

from helpers import free_gaussian, gaussian, l2


@pytest.fixture(scope="module")
def grid():
    return Grid(-12, 12, 512)


@pytest.fixture(scope="module")
def sho_state():
    co = preset("sho")
    return expansion_setup(co, default_k1(co, 1.5), solve_ermakov(co, 1.0, 1.2, 0.3, 1.5))


@pytest.fixture(scope="module")
def matched_sho():
    return matched_state(preset("sho"), 1.5, C0=1.0, gamma0=0.2)


def test_free_green_evolution(grid):
    phi = WaveFunction(grid, gaussian(grid.x))
    out = evolve_by_kernel(green_parameters(preset("free"), 1.0), phi, 1.0)
    assert l2(out.samples, free_gaussian(grid.x, 1.0), grid.dx) < 1e-8


def test_sho_green_against_oracle(grid):
    co = preset("sho")
    phi = WaveFunction(grid, gaussian(grid.x, 0.5, 1.0, 0.3))
    out = evolve_by_kernel(green_parameters(co, 1.0), phi)
    assert l2_distance(out, evolve_oracle(co, phi, 1.0, OracleConfig(5e-4))) < 1e-4


def test_sho_green_refuses_past_singularity():
    co = preset("sho").with_t_max(7.0)
    for t in (math.pi, 2 * math.pi - 0.01):
        with pytest.raises(SingularityError):
            green_parameters(co, t)


def test_small_time_returns_data(grid, ground):
    assert evolve_by_kernel(None, ground, 5e-7) is ground
    with pytest.raises(UsageError):
        evolve_by_kernel(None, ground)
    with pytest.raises(UsageError):
        evolve_by_kernel(None, ground, 0.5)


def test_oscillation_check(grid, ground):
    p = green_parameters(preset("free"), 0.05)
    assert oscillation_number(p, grid, ground) > math.pi / 2
    with pytest.raises(ResolutionError):
        evolve_by_kernel(p, ground)


def test_linear_invariant_spectral_action(grid):
    # P psi = lambda(t) int K(x, y, t) y chi(y) dy with beta(0) mu(0) = 1
    co = preset("sho")
    t = 1.0
    p = general_kernel_parameters(co, 0.0, 1.0, 0.0, 1.0, t)
    fine = Grid(-12, 12, 1024)
    chi = WaveFunction(fine, gaussian(fine.x, 0.3, 1.0, -0.4))
    psi = evolve_by_kernel(p, chi, x_grid=grid)
    P = linear_from_mu(co, solve_characteristic(co, 1.0, 0.0))
    lhs = P.apply(psi, t)
    rhs = evolve_by_kernel(p, WaveFunction(fine, fine.x * chi.samples), x_grid=grid) * p.lam
    assert l2_distance(lhs, rhs) < 1e-5


def test_special_data_single_mode(sho_state, grid):
    for m in range(6):
        cn = sho_state.coefficients(chi_special(m, sho_state, grid), 0.9, 12)
        off = np.delete(np.abs(cn), m)
        assert off.max() < 1e-9
        assert abs(cn[m]) > 0.1


def test_coefficient_modulus_skew(grid):
    co = preset("skew")
    st_ = expansion_setup(co, default_k1(co, 1.2), solve_ermakov(co, 1.0, 1.0, 0.4, 1.2))
    chi = WaveFunction(grid, gaussian(grid.x, 0.4, 1.1, 0.2))
    c0, c1 = st_.coefficients(chi, 0.0, 20), st_.coefficients(chi, 1.1, 20)
    np.testing.assert_allclose(np.abs(c1), np.abs(c0) * math.exp(-0.5 * 0.2 * 1.1), rtol=1e-10)
    assert expansion_coefficients(co, st_.k1, st_.k, chi, 3, 1.1, state=st_) == pytest.approx(c1[3])
    with pytest.raises(UsageError):
        expansion_coefficients(co, st_.k1, st_.k, chi, 65, 1.1, state=st_)


@pytest.mark.parametrize("name", ["sho", "parametric"])
def test_parseval_against_oracle(name, grid):
    co = preset(name)
    st_ = expansion_setup(co, default_k1(co, 1.2), solve_ermakov(co, 1.0, 1.0, 0.0, 1.2))
    psi0 = WaveFunction(grid, gaussian(grid.x, 0.3, 1.0, 0.2))
    chi = chi_from_initial(st_, psi0)
    psi_t = evolve_oracle(co, psi0, 1.0, OracleConfig(5e-4))
    cn = st_.coefficients(chi, 1.0, 48)
    assert np.sum(np.abs(cn) ** 2) == pytest.approx(psi_t.norm() ** 2, abs=1e-6)


def test_ground_state_phase(sho_state, grid, ground):
    co = preset("sho")
    chi = chi_from_initial(sho_state, ground)
    out = eigenfunction_expansion(co, sho_state.k1, sho_state.k, chi, 1.0, 48, state=sho_state)
    assert l2_distance(out, ground * np.exp(-0.5j)) < 1e-6


def test_special_solution_spectrum(sho_state, grid):
    co = preset("sho")
    t = 0.8
    for m in range(4):
        chi = chi_special(m, sho_state, grid)
        out = eigenfunction_expansion(co, sho_state.k1, sho_state.k, chi, t, 12, state=sho_state)
        ref = psi_special(m, sho_state, t, grid)
        scale = inner_product(ref, out) / inner_product(ref, ref)
        assert l2_distance(out, ref * scale) < 1e-9 * out.norm()
        E = apply_quadratic_invariant(sho_state.ladder_data(t), float(sho_state.lam(t)), sho_state.C0, out)
        lam_m = float(sho_state.omega(t)) * (m + 0.5)
        assert l2_distance(E, out * lam_m) / (lam_m * out.norm()) < 1e-5


def test_expansion_against_kernel_sho(sho_state, grid):
    co = preset("sho")
    fine = Grid(-12, 12, 1024)
    chi = WaveFunction(fine, gaussian(fine.x, 0.2, 1.0, 0.1))
    out = eigenfunction_expansion(co, sho_state.k1, sho_state.k, chi, 1.0, 48, grid=grid, state=sho_state)
    ker = evolve_by_kernel(sho_state.kernel(1.0), chi, x_grid=grid)
    assert l2_distance(out, ker) < 1e-4


def test_truncation_warning(sho_state, grid):
    chi = WaveFunction(grid, gaussian(grid.x, 2.0, 0.5, 1.0))
    with pytest.warns(TruncationWarning):
        eigenfunction_expansion(preset("sho"), sho_state.k1, sho_state.k, chi, 0.5, 4, state=sho_state)


def test_spectral_decomposition(sho_state, grid):
    t = 0.6
    chi = WaveFunction(grid, gaussian(grid.x, 0.2, 1.0, 0.1))
    out = eigenfunction_expansion(preset("sho"), sho_state.k1, sho_state.k, chi, t, 32, state=sho_state)
    cn = sho_state.coefficients(chi, t, 32)
    modes = sho_state.modes(t, grid, 32)
    n = np.arange(32)
    expected = WaveFunction(grid, (cn * float(sho_state.omega(t)) * (n + 0.5)) @ modes)
    E = apply_quadratic_invariant(sho_state.ladder_data(t), float(sho_state.lam(t)), sho_state.C0, out)
    assert l2_distance(E, expected) < 1e-5


def test_expansion_state_constants(sho_state):
    for t in (0.3, 0.8, 1.4):
        assert sho_state.delta_at(t) == pytest.approx(sho_state.delta, rel=1e-8)
        assert sho_state.xi_at(t) == pytest.approx(sho_state.xi_const, abs=1e-8)


@pytest.mark.parametrize("name", ["sho", "parametric", "caldirola_kanai", "skew"])
def test_phase_rate(name):
    co = preset(name)
    k = solve_ermakov(co, 1.0, 1.1, float(co.c(0) + co.d(0)), 1.2, phase_integral=True)
    st_ = expansion_setup(co, default_k1(co, 1.2), k)
    # phi(t) - phi(0) = 2 sqrt(C0) int a/kappa**2; both arctan branches stay in (-pi/2, pi/2) here
    for t in (0.4, 0.9):
        assert st_.phi(t) - st_.phi(0.0) == pytest.approx(2 * k.phase_integral(t), abs=1e-7)
    h = 1e-3
    rate = (st_.phi(0.6 + h) - st_.phi(0.6 - h)) / (2 * h)
    assert rate == pytest.approx(2 * co.a(0.6) / k.kappa(0.6) ** 2, rel=1e-6)


def test_phase_at_zero(sho_state):
    tan = sho_state.k.kappa(0.0) * sho_state.w(0.0) / (sho_state.k1.kappa(0.0) * math.sqrt(sho_state.C0))
    assert math.tan(sho_state.phi(0.0)) == pytest.approx(tan, rel=1e-14)


def test_setup_guards():
    co = preset("sho")
    k1 = default_k1(co, 1.2)
    k = solve_ermakov(co, 1.0, 1.0, 0.0, 1.2)
    with pytest.raises(UsageError):
        expansion_setup(co, k, k)
    with pytest.raises(ModeError):
        expansion_setup(co, k1, solve_ermakov(co, 0.0, 1.0, 0.0, 1.2))
    with pytest.raises(UsageError):
        expansion_setup(co, solve_ermakov(co, 0.0, 1.0, 0.0, 1.2), k)
    with pytest.raises(UsageError):
        expansion_setup(co, k1, k, N=66)
    with pytest.raises(SingularityError):
        default_k1(co, 2.0)


def test_matching_conditions(matched_sho):
    st_ = matched_sho
    eps0 = st_.C0 ** 0.25 / st_.k.kappa(0.0)
    assert eps0 == pytest.approx(st_.delta, rel=1e-12)
    alpha0 = st_.init[0]
    assert st_.xi_const == pytest.approx(0.5 * (st_.gamma0 - alpha0), abs=1e-12)
    with pytest.raises(ModeError):
        matched_kappa_initial(preset("sho"), st_.k1, C0=0.0)


def test_wavefunction_expansion_identity_at_zero(matched_sho, grid):
    co = preset("sho")
    chi = WaveFunction(grid, gaussian(grid.x, 0.4, 1.0, -0.2))
    out = expansion_in_wavefunctions(co, chi, 0.0, 48, matched_sho)
    assert l2_distance(out, evolve_by_kernel(matched_sho.kernel(0.0), chi)) < 1e-6


def test_wavefunction_expansion_reindexing(matched_sho, grid):
    co = preset("sho")
    chi = WaveFunction(grid, gaussian(grid.x, 0.4, 1.0, -0.2))
    a = expansion_in_wavefunctions(co, chi, 0.7, 48, matched_sho)
    b = eigenfunction_expansion(co, matched_sho.k1, matched_sho.k, chi, 0.7, 48, state=matched_sho)
    assert l2_distance(a, b) < 1e-8


def test_wavefunction_expansion_single_mode(matched_sho, grid):
    co = preset("sho")
    m, t = 2, 1.0
    chi = psi_special(m, matched_sho, 0.0, grid)
    out = expansion_in_wavefunctions(co, chi, t, 48, matched_sho)
    ref = psi_special(m, matched_sho, t, grid) * (1j ** m * np.exp(-1j * (m + 0.5) * matched_sho.phi(0.0)))
    assert l2_distance(out, ref) < 1e-6
    # the special solutions solve the equation
    evolved = evolve_oracle(co, psi_special(m, matched_sho, 0.0, grid), t, OracleConfig(5e-4))
    assert l2_distance(evolved, psi_special(m, matched_sho, t, grid)) < 1e-5


def test_wavefunction_expansion_needs_matching(sho_state, grid, ground):
    with pytest.raises(UsageError):
        expansion_in_wavefunctions(preset("sho"), ground, 0.5, 8, sho_state)


def test_kpsi_examples(sho_state, grid):
    co = preset("sho")
    closed, quad = kpsi_overlap(co, sho_state.k1, sho_state.k, 0, 0.0, 0.5, grid, sho_state, both=True)
    assert abs(closed - quad) < 1e-7
    for n in (0, 2, 4):
        plus = kpsi_overlap(co, sho_state.k1, sho_state.k, n, 0.8, 0.5, grid, sho_state)
        minus = kpsi_overlap(co, sho_state.k1, sho_state.k, n, -0.8, 0.5, grid, sho_state)
        assert abs(plus) == pytest.approx(abs(minus), rel=1e-12)
    assert kpsi_overlap(co, sho_state.k1, sho_state.k, 3, 0.0, 0.5, grid, sho_state) == 0


@pytest.mark.parametrize("name", ["sho", "parametric"])
def test_kpsi_closed_form_against_quadrature(name, grid):
    co = preset(name)
    st_ = expansion_setup(co, default_k1(co, 1.2), solve_ermakov(co, 1.0, 1.1, 0.2, 1.2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for t in (0.3, 0.7, 1.1):
            for y in (-1.0, -0.4, 0.0, 0.5, 1.2):
                for n in range(7):
                    closed, quad = kpsi_overlap(co, st_.k1, st_.k, n, y, t, grid, st_, both=True)
                    assert abs(closed - quad) < 1e-6


@settings(max_examples=10)
@given(st.floats(-1.5, 1.5), st.floats(0.6, 1.5), st.floats(-1, 1))
def test_chi_from_initial_inverts_kernel(c, w, k):
    co = preset("parametric")
    st_ = expansion_setup(co, default_k1(co, 1.2), solve_ermakov(co, 1.0, 1.0, 0.0, 1.2))
    grid = Grid(-12, 12, 512)
    psi0 = WaveFunction(grid, gaussian(grid.x, c, w, k))
    back = evolve_by_kernel(st_.kernel(0.0), chi_from_initial(st_, psi0))
    assert l2_distance(back, psi0) < 1e-10


def test_coefficients_csv(tmp_path):
    text = coefficients_csv([1.0, 1j, -0.5], tmp_path / "c.csv")
    lines = text.splitlines()
    assert lines[0] == "n,abs,arg"
    assert lines[2] == "1,1,1.5707963267948966"
    assert (tmp_path / "c.csv").read_text() == text
