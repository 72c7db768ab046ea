import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracgalerkin.fe_space import (
    CaputoTestSpace,
    FEFunction,
    HatBasis,
    UniformMesh,
    build_mesh,
    caputo_denominator,
    caputo_gammas,
    correction_function,
    interpolate,
    make_test_space,
)
from fracgalerkin.quadrature import integrate, plan_for_pair


@pytest.mark.parametrize("k, n, h", [(-1, 5, 0.2), (0, 10, 0.1), (5, 320, 1 / 320)])
def test_build_mesh(k, n, h):
    mesh = build_mesh(k)
    assert mesh.n_cells == n
    assert mesh.h == pytest.approx(h, rel=1e-15)
    assert mesh.nodes[0] == 0.0 and mesh.nodes[-1] == 1.0
    assert mesh.n_interior == n - 1


@pytest.mark.parametrize("k", [-2, 9, 1.5])
def test_build_mesh_rejects_levels(k):
    with pytest.raises(ValueError):
        build_mesh(k)


def test_mesh_rejects_zero_cells():
    with pytest.raises(ValueError):
        UniformMesh(0)


def test_nodes_are_read_only():
    with pytest.raises(ValueError):
        build_mesh(0).nodes[1] = 0.5


def test_hat_eval_and_deriv():
    basis = HatBasis(UniformMesh(10))
    h = 0.1
    for i in (1, 4, 9):
        xi = i * h
        assert basis.eval(i, xi) == pytest.approx(1.0, abs=1e-14)
        assert basis.eval(i, xi - h / 2) == pytest.approx(0.5, abs=1e-14)
        assert basis.eval(i, xi + h / 2) == pytest.approx(0.5, abs=1e-14)
        assert basis.deriv(i, xi - h + h / 3) == pytest.approx(1 / h, rel=1e-14)
        assert basis.deriv(i, xi + h / 3) == pytest.approx(-1 / h, rel=1e-14)
        assert basis.eval(i, xi + 1.5 * h) == 0.0


def test_hat_index_range():
    basis = HatBasis(UniformMesh(4))
    with pytest.raises(IndexError):
        basis.eval(0, 0.5)
    with pytest.raises(IndexError):
        basis.deriv(4, 0.5)


def test_values_matches_eval():
    basis = HatBasis(UniformMesh(7))
    x = np.linspace(0, 1, 41)
    V = basis.values(x)
    for i in range(1, basis.dim + 1):
        np.testing.assert_array_equal(V[:, i - 1], basis.eval(i, x))


@given(st.floats(0.0, 1.0), st.integers(2, 40))
def test_partition_of_unity_in_interior(x, n):
    # the interior hats plus the two boundary half-hats sum to one
    basis = HatBasis(UniformMesh(n))
    left = max(0.0, 1.0 - x * n)
    right = max(0.0, 1.0 - (1.0 - x) * n)
    assert basis.values(np.array([x])).sum() + left + right == pytest.approx(1.0, abs=1e-12)


def test_caputo_denominator_at_three_halves():
    assert caputo_denominator(1.5) == pytest.approx(math.pi / 2, rel=1e-14)
    # cross-check by graded quadrature
    plan = plan_for_pair([0.0, 1.0], (), {0.0, 1.0}, order=16, levels=40)
    ref = integrate(lambda x: x**-0.5 * (1 - x) ** 0.5, plan)
    assert ref == pytest.approx(math.pi / 2, rel=1e-10)


@pytest.mark.parametrize("s", [4 / 3, 1.5, 1.75])
@pytest.mark.parametrize("n", [5, 20])
def test_caputo_test_functions_orthogonal(s, n):
    tests = caputo_gammas(HatBasis(UniformMesh(n)), s)
    assert isinstance(tests, CaputoTestSpace)
    assert np.all(tests.gammas > 0)
    plan = plan_for_pair(UniformMesh(n).nodes, (), {0.0, 1.0}, order=16, levels_at={0.0: 60})
    x, w = plan.points
    resid = (w * x ** (1 - s)) @ tests.test_values(x)
    assert np.max(np.abs(resid)) < 1e-10


def test_caputo_eval_matches_matrix():
    tests = caputo_gammas(HatBasis(UniformMesh(6)), 1.6)
    x = np.linspace(0, 0.99, 17)
    V = tests.test_values(x)
    for i in range(1, tests.dim + 1):
        np.testing.assert_allclose(V[:, i - 1], tests.eval(i, x), rtol=0, atol=1e-15)


def test_correction_function():
    assert correction_function(1.5, 0.0) == 1.0
    assert correction_function(1.5, 0.75) == pytest.approx(0.5)


def test_make_test_space_by_kind():
    basis = HatBasis(UniformMesh(5))
    assert make_test_space(basis, "rl", 1.5) is basis
    assert isinstance(make_test_space(basis, "caputo", 1.5), CaputoTestSpace)


def test_interpolate_examples():
    basis = HatBasis(UniformMesh(4))
    assert np.all(interpolate(lambda x: 0.0 * x, basis).coefficients == 0.0)
    np.testing.assert_allclose(
        interpolate(lambda x: x * (1 - x), basis).coefficients, [3 / 16, 1 / 4, 3 / 16], atol=1e-15
    )
    for j in range(1, 4):
        c = interpolate(lambda x, j=j: basis.eval(j, x), basis).coefficients
        np.testing.assert_array_equal(c, np.eye(3)[j - 1])


def test_interpolate_rejects_nonfinite():
    with pytest.raises(ValueError, match="node 2"):
        interpolate(lambda x: np.where(x == 0.5, np.inf, x), HatBasis(UniformMesh(4)))


def test_fe_function_shape_and_evaluation():
    basis = HatBasis(UniformMesh(4))
    with pytest.raises(ValueError):
        FEFunction(basis, np.zeros(4))
    u = FEFunction(basis, np.array([1.0, 2.0, 3.0]))
    assert u(0.0) == 0.0 and u(1.0) == 0.0
    assert u(0.375) == pytest.approx(1.5)
    np.testing.assert_allclose(u.slopes, [4.0, 4.0, 4.0, -12.0])


def test_interpolation_error_converges_at_second_order():
    f = lambda x: np.sin(np.pi * x)  # noqa: E731
    errs = []
    for n in (8, 16, 32, 64):
        u = interpolate(f, HatBasis(UniformMesh(n)))
        plan = plan_for_pair(u.mesh.nodes)
        errs.append(math.sqrt(integrate(lambda x: (f(x) - u(x)) ** 2, plan)))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    np.testing.assert_allclose(rates, 2.0, atol=0.02)
