import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadinv.cauchy_solvers import evolve_by_kernel
from quadinv.coeffs import preset
from quadinv.errors import DomainError, SingularityError, UsageError
from quadinv.grid_ops import Grid, WaveFunction
from quadinv.kernel import (KernelParameters, eval_kernel, general_kernel_parameters, green_parameters,
                            kernel_from_mu, kernel_residual, schrodinger_residual)
from quadinv.ode_engine import green_seed

from helpers import gaussian, l2, mehler

R3 = math.sqrt(3)


def test_green_free():
    p = green_parameters(preset("free"), 2.0)
    assert (p.alpha, p.beta, p.gamma) == pytest.approx((0.25, -0.5, 0.25), abs=1e-12)
    assert p.mu == pytest.approx(2.0, abs=1e-12)


def test_green_sho():
    p = green_parameters(preset("sho"), math.pi / 4)
    assert (p.alpha, p.beta, p.gamma) == pytest.approx((0.5, -math.sqrt(2), 0.5), abs=1e-10)


@pytest.mark.parametrize("name", ["free", "sho", "parametric", "caldirola_kanai"])
def test_green_lambda_unit(name):
    p = green_parameters(preset(name), 1.2)
    assert p.lam == 1.0
    assert p.beta == pytest.approx(-1.0 / p.mu, rel=1e-14)


def test_green_singularities():
    with pytest.raises(SingularityError):
        green_parameters(preset("sho"), 2.0)
    with pytest.raises(DomainError):
        green_parameters(preset("sho"), 1e-8)
    with pytest.raises(UsageError):
        green_parameters(preset("sho"), 1.0, solution=green_seed(preset("sho"), 1.2))


def test_general_sho_pi_over_3():
    p = general_kernel_parameters(preset("sho"), 0.0, 1.0, 0.0, 1.0, math.pi / 3)
    assert p.mu == pytest.approx(0.5, abs=1e-10)
    assert p.beta == pytest.approx(2.0, abs=1e-10)
    assert p.alpha == pytest.approx(-R3 / 2, abs=1e-10)
    assert p.gamma == pytest.approx(-R3 / 2, abs=1e-10)
    d = kernel_from_mu(preset("sho"), 0.0, 1.0, 0.0, 1.0, math.pi / 3)
    assert (d.mu, d.alpha, d.beta, d.gamma) == pytest.approx((p.mu, p.alpha, p.beta, p.gamma), abs=1e-10)


@pytest.mark.parametrize("name", ["sho", "parametric", "caldirola_kanai", "skew"])
def test_general_small_time_limit(name):
    init = (0.3, 1.2, -0.4, 0.8)
    co = preset(name)
    for t in (0.0, 5e-7):
        p = general_kernel_parameters(co, *init, t)
        assert p.init == init
        assert (p.alpha, p.beta, p.gamma, p.mu) == pytest.approx(init, abs=1e-5)
    p = general_kernel_parameters(co, *init, 1e-4)
    assert (p.alpha, p.beta, p.gamma, p.mu) == pytest.approx(init, abs=1e-3)


def test_general_skew_beta_mu():
    co = preset("skew")
    green = green_seed(co, 1.5, gamma0_integral=True)
    for t in np.linspace(0.05, 1.5, 20):
        p = general_kernel_parameters(co, 0.2, 1.5, 0.1, 0.7, t, green=green)
        assert p.beta * p.mu / p.lam == pytest.approx(1.5 * 0.7, rel=1e-8)
        c = p.consistency()
        assert c["mu"] < 1e-7 and c["beta_mu"] < 1e-8 and c["alpha"] < 1e-8


def test_gamma_rate_matches_closed_form():
    co = preset("caldirola_kanai")
    b0, m0 = 1.3, 0.9
    t, h = 0.8, 1e-3
    g = [general_kernel_parameters(co, 0.1, b0, 0.2, m0, t + k * h).gamma for k in (-2, -1, 1, 2)]
    rate = (g[0] - 8 * g[1] + 8 * g[2] - g[3]) / (12 * h)
    p = general_kernel_parameters(co, 0.1, b0, 0.2, m0, t)
    expected = -(b0 * m0) ** 2 * co.a(t) * p.lam ** 2 / p.mu ** 2
    assert rate == pytest.approx(expected, rel=1e-8)


def test_general_errors():
    with pytest.raises(DomainError):
        general_kernel_parameters(preset("sho"), 0, 1, 0, 0.0, 1.0)
    with pytest.raises(DomainError):
        kernel_from_mu(preset("sho"), 0, 1, 0, 0.0, 1.0)
    # mu = cos t has its caustic at pi/2
    with pytest.raises(SingularityError):
        kernel_from_mu(preset("sho"), 0, 1, 0, 1.0, 2.0)


def test_eval_free_on_diagonal():
    p = green_parameters(preset("free"), 1.0)
    v = eval_kernel(p, 0.7, 0.7, t=1.0)
    assert v == pytest.approx(1 / cmath.sqrt(2j * math.pi), abs=1e-12)
    assert abs(v) == pytest.approx((2 * math.pi) ** -0.5, abs=1e-12)
    with pytest.raises(UsageError):
        eval_kernel(p, 0, 0, t=1.1)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 1.4))
def test_modulus_phase_only(x, y, t):
    p = general_kernel_parameters(preset("sho"), 0.0, 1.0, 0.0, 1.0, t)
    assert abs(eval_kernel(p, x, y)) == pytest.approx(abs(eval_kernel(p, 0, 0)), rel=1e-12)
    assert abs(eval_kernel(p, x, y)) == pytest.approx((2 * math.pi * abs(p.mu)) ** -0.5, rel=1e-12)


def test_mehler():
    t = math.pi / 4
    p = green_parameters(preset("sho"), t)
    assert abs(eval_kernel(p, 0.5, -0.3) - mehler(0.5, -0.3, t)) < 1e-10
    x = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(eval_kernel(p, x[:, None], x[None, :]), mehler(x[:, None], x[None, :], t),
                               atol=1e-10)


def test_prefactor_branch():
    p = KernelParameters(-2.0, 0, 1, 0, 1.0, 1.0, "general", init=(0, 1, 0, 1))
    assert p.prefactor() == pytest.approx(1 / cmath.sqrt(-4 * math.pi))
    with pytest.raises(SingularityError):
        KernelParameters(0.0, 0, 1, 0, 1.0, 1.0, "green").prefactor()
    with pytest.raises(UsageError):
        KernelParameters(1.0, 0, 1, 0, 1.0, 1.0, "general")
    with pytest.raises(UsageError):
        KernelParameters(1.0, 0, 1, 0, 1.0, 1.0, "green").consistency()


def test_residual_free_green():
    grid = Grid(-10, 10, 512)
    co = preset("free")
    r = kernel_residual(lambda s: green_parameters(co, s), grid, 1.0, 1e-4)
    assert r < 1e-6


@pytest.mark.parametrize("name", ["sho", "skew"])
def test_residual_general(name):
    grid = Grid(-10, 10, 512)
    co = preset(name)
    green = green_seed(co, 1.4, gamma0_integral=True)
    r = kernel_residual(lambda s: general_kernel_parameters(co, 0.0, 1.0, 0.0, 1.0, s, green=green),
                        grid, 0.7, 1e-4, y=0.5)
    assert r < 1e-6


def test_residual_detects_wrong_kernel():
    grid = Grid(-10, 10, 512)
    free_kernel = lambda s: eval_kernel(green_parameters(preset("free"), s), grid.x, 0.0)  # noqa: E731
    assert schrodinger_residual(free_kernel, preset("sho"), grid, 1.0, 1e-4) > 1e-2


def test_residual_zero_field():
    grid = Grid(-10, 10, 512)
    assert schrodinger_residual(lambda s: np.zeros(grid.n), preset("sho"), grid, 1.0, 1e-4) == 0.0


def _delta_check(name):
    co = preset(name)
    y_grid = Grid(-9, 9, 2 ** 18)
    x_grid = Grid(-4, 4, 16)
    phi = WaveFunction(y_grid, gaussian(y_grid.x))
    out = evolve_by_kernel(green_parameters(co, 1e-3), phi, x_grid=x_grid)
    return l2(out.samples, gaussian(x_grid.x), x_grid.dx)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["free", "sho"])
def test_short_time_delta_property(name):
    assert _delta_check(name) < 1e-3
