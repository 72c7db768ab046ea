import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fracgalerkin.fractional import (
    DerivativeKind,
    OracleError,
    PowerSum,
    abel_oracle,
    caputo_derivative_power,
    check_bvp_order,
    gamma,
    gammaln,
    powersum_rl_derivative,
    rgamma,
    right_abel_oracle,
    rl_derivative_power,
    rl_integral_power,
)

SQRT_PI = math.sqrt(math.pi)


# {{{ gamma helpers


def test_rgamma_is_exact_zero_at_poles():
    for z in (0.0, -1.0, -2.0, -7.0, -1.0 + 1e-14):
        assert rgamma(z) == 0.0


@given(st.floats(0.1, 30.0))
def test_gammaln_accuracy(z):
    assert abs(gammaln(z) - math.lgamma(z)) <= 1e-13 * max(1.0, abs(math.lgamma(z)))


def test_gamma_values():
    assert gamma(0.5) == pytest.approx(SQRT_PI, rel=1e-15)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-15)


@pytest.mark.parametrize("s", [1.0, 2.0, 0.5, 2.5, float("nan")])
def test_bvp_order_range(s):
    with pytest.raises(ValueError):
        check_bvp_order(s)


def test_kind_parse():
    assert DerivativeKind.parse("RL") is DerivativeKind.RiemannLiouville
    assert DerivativeKind.parse("caputo") is DerivativeKind.Caputo
    with pytest.raises(ValueError):
        DerivativeKind.parse("grunwald")


# }}}


# {{{ power rules


def test_integral_of_one_is_x():
    assert rl_integral_power(0.0, 1.0, 0.5) == pytest.approx(0.5, abs=1e-15)


def test_half_integral_of_one_at_one():
    assert rl_integral_power(0.0, 0.5, 1.0) == pytest.approx(1 / special.gamma(1.5), rel=1e-14)
    # oracle: I^(1/2) 1 = D^(1/2) x
    assert abel_oracle(lambda t: np.ones_like(t), 0.5, 1.0) == pytest.approx(
        1 / special.gamma(1.5), rel=1e-8
    )


def test_integral_vanishes_at_origin():
    assert rl_integral_power(0.5, 0.75, 0.0) == 0.0


def test_integral_rejects_nonintegrable_exponent():
    with pytest.raises(ValueError):
        rl_integral_power(-1.0, 0.5, 0.3)


@given(st.floats(1.05, 1.95), st.floats(0.01, 1.0))
def test_pole_kill_is_bit_exact(s, x):
    assert rl_derivative_power(s - 1.0, s, x) == 0.0


@pytest.mark.parametrize("s", [4 / 3, 1.5, 1.75])
def test_rl_derivative_of_x_to_s(s):
    assert rl_derivative_power(s, s, 0.37) == pytest.approx(special.gamma(s + 1), rel=1e-14)


def test_rl_half_derivative_of_x():
    assert rl_derivative_power(1.0, 0.5, 1.0) == pytest.approx(2 / SQRT_PI, rel=1e-14)
    assert abel_oracle(lambda t: np.ones_like(t), 0.5, 1.0) == pytest.approx(2 / SQRT_PI, rel=1e-8)


def test_rl_derivative_rejects_singular_origin():
    with pytest.raises(ValueError):
        rl_derivative_power(0.8, 1.5, 0.0)


def test_caputo_kills_affine():
    assert caputo_derivative_power(1.0, 1.5, 0.7) == 0.0
    assert caputo_derivative_power(0.0, 1.5, 0.7) == 0.0


@pytest.mark.parametrize("s", [4 / 3, 1.5, 1.75])
def test_caputo_of_x_to_s(s):
    assert caputo_derivative_power(s, s, 0.61) == pytest.approx(special.gamma(s + 1), rel=1e-14)
    oracle = abel_oracle(lambda t: s * (s - 1) * t ** (s - 2), s - 1.0, 0.61)
    assert oracle == pytest.approx(special.gamma(s + 1), rel=1e-8)


def test_caputo_of_x_to_two():
    s = 1.5
    expected = special.gamma(3.0) / special.gamma(1.5)
    assert caputo_derivative_power(2.0, s, 1.0) == pytest.approx(expected, rel=1e-14)


def test_caputo_rejects_fractional_power_below_one():
    with pytest.raises(ValueError):
        caputo_derivative_power(0.5, 1.5, 0.3)


# }}}


# {{{ power sums


def test_powersum_canonical_form():
    u = PowerSum(((1.0, 2.0), (0.0, 1.0), (2.0, 0.5), (-1.0, 2.0)))
    assert u.terms == ((2.0, 0.5),)
    with pytest.raises(ValueError):
        PowerSum(((1.0, -1.5),))


def test_powersum_rl_derivative_example():
    s = 1.5
    u = PowerSum(((1.0, s - 1.0), (-1.0, s)))
    d = powersum_rl_derivative(u, s)
    assert d.exponents == (0.0,)
    assert d.terms[0][0] == pytest.approx(-special.gamma(s + 1), rel=1e-14)


def test_powersum_zero():
    assert powersum_rl_derivative(PowerSum(), 0.7).is_zero()


def test_powersum_half_derivative_of_x():
    d = powersum_rl_derivative(PowerSum.monomial(1.0), 0.5)
    assert d.exponents == (0.5,)
    assert d.terms[0][0] == pytest.approx(1 / special.gamma(1.5), rel=1e-14)


def test_powersum_arithmetic():
    a = PowerSum.from_pairs([[1, 0.5], [2, 1]])
    b = PowerSum.from_pairs([[1, 0.5]])
    assert (a - b).terms == ((2.0, 1.0),)
    assert (-a)(0.25) == pytest.approx(-a(0.25))


@given(
    p=st.floats(-0.5, 3.0),
    a=st.floats(0.01, 1.0),
    b=st.floats(0.01, 1.0),
    x=st.floats(0.01, 1.0),
)
def test_semigroup_property(p, a, b, x):
    u = PowerSum.monomial(p)
    lhs = float(u.rl_integral(a).rl_integral(b)(x))
    rhs = float(u.rl_integral(a + b)(x))
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


@given(p=st.floats(0.0, 2.0), q=st.floats(0.0, 2.0), sigma=st.floats(0.1, 0.9))
@settings(max_examples=25, deadline=None)
def test_adjoint_identity_on_monomials(p, q, sigma):
    # (I_L x^p, x^q) = (x^p, I_R x^q), the right-sided integral by substitution
    from fracgalerkin.quadrature import integrate, plan_for_pair

    plan = plan_for_pair([0.0, 1.0], (), {0.0, 1.0}, order=16, levels=20)
    lhs = integrate(lambda x: rl_integral_power(p, sigma, x) * x**q, plan)

    def right_integral(x):
        # I_R^sigma g(x) = int_x^1 (t - x)^(sigma - 1) g(t) dt / Gamma(sigma); substitute
        # t = x + v^(1/sigma) to remove the kernel singularity
        out = np.empty_like(x)
        for n, xi in enumerate(x):
            top = (1.0 - xi) ** sigma
            inner = plan_for_pair([0.0, 1.0], (), {0.0}, order=16, levels=20)
            v, w = inner.points
            t = xi + (v * top) ** (1.0 / sigma)
            out[n] = top * np.dot(w, t**q) / (sigma * special.gamma(sigma))
        return out

    rhs = integrate(lambda x: x**p * right_integral(x), plan)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


# }}}


# {{{ oracle


def test_oracle_of_zero():
    assert abel_oracle(lambda t: np.zeros_like(t), 0.5, 0.8) == 0.0


def test_oracle_at_origin():
    assert abel_oracle(lambda t: np.ones_like(t), 0.3, 0.0) == 0.0


def test_oracle_rejects_bad_order():
    with pytest.raises(ValueError):
        abel_oracle(lambda t: t, 1.2, 0.5)


def test_oracle_reports_nonconvergence():
    # a jump hidden from the oracle (no breakpoint supplied) spoils convergence
    with pytest.raises(OracleError):
        abel_oracle(lambda t: np.where(t < 0.3337, 1.0, -5.0), 0.5, 0.9, tol=1e-14)


@given(st.floats(0.1, 0.9), st.floats(0.2, 3.0), st.floats(0.05, 1.0))
@settings(max_examples=50, deadline=None)
def test_oracle_matches_power_rule(sigma, p, x):
    ref = rl_derivative_power(p, sigma, x)
    got = abel_oracle(lambda t: p * t ** (p - 1.0), sigma, x)
    assert abs(got - ref) <= 1e-8 * abs(ref)


def test_right_oracle_mirrors_left():
    # right derivative of (1 - x)^p equals the left derivative of x^p at 1 - x
    p, sigma, x = 1.7, 0.4, 0.3
    got = right_abel_oracle(lambda t: -p * (1.0 - t) ** (p - 1.0), sigma, x)
    assert got == pytest.approx(rl_derivative_power(p, sigma, 1.0 - x), rel=1e-10)


# }}}
