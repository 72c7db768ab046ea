import numpy as np
import pytest

from fracgalerkin.assembly import (
    AssemblyError,
    QuadratureCache,
    assemble_jacobian,
    assemble_load,
    assemble_nonlinear,
    assemble_stiffness,
    build_system,
    global_plan,
    stiffness_closed_form,
    weighted_mass,
)
from fracgalerkin.fe_space import FEFunction, HatBasis, UniformMesh, interpolate, make_test_space
from fracgalerkin.fractional import abel_oracle, right_abel_oracle
from fracgalerkin.operators import hat_kinks
from fracgalerkin.problems import custom_problem, example1, example4
from fracgalerkin.quadrature import QuadratureSettings, integrate, make_plan

S_VALUES = [4 / 3, 1.5, 1.75]


def _linear(g_coef=0.0, kind="rl", s=1.5, rhs=((1.0, 0.0),)):
    return custom_problem(
        {"kind": kind, "s": s, "g": {"coef": g_coef, "u_power": 1}, "rhs": [list(t) for t in rhs]}
    )


def _cache(mesh, problem, quad=QuadratureSettings()):
    basis = HatBasis(mesh)
    tests = make_test_space(basis, problem.kind, problem.s)
    return QuadratureCache(global_plan(mesh, problem.singular_points, quad), basis, tests)


def _mass(n):
    h = 1.0 / n
    return (
        np.diag(np.full(n - 1, 2 * h / 3))
        + np.diag(np.full(n - 2, h / 6), 1)
        + np.diag(np.full(n - 2, h / 6), -1)
    )


# {{{ stiffness


@pytest.mark.parametrize("s", S_VALUES)
def test_single_interior_node_is_positive(s):
    K = assemble_stiffness(HatBasis(UniformMesh(2)), s)
    assert K.shape == (1, 1) and K[0, 0] > 0


def test_stiffness_matches_double_oracle():
    mesh = UniformMesh(5)
    basis = HatBasis(mesh)
    s = 1.5
    K = assemble_stiffness(basis, s)

    def left(i, x):
        return np.array([
            abel_oracle(lambda t: basis.deriv(i, t), s / 2, xx, hat_kinks(mesh, i),
                        singular_at_zero=False, levels=20, tol=1e-9)
            for xx in x
        ])

    def right(j, x):
        return np.array([
            right_abel_oracle(lambda t: basis.deriv(j, t), s / 2, xx, hat_kinks(mesh, j),
                              singular_at_zero=False, levels=20, tol=1e-9)
            for xx in x
        ])

    for i, j in [(1, 1), (2, 1), (1, 2), (1, 4), (3, 2)]:
        kinks = {*hat_kinks(mesh, i), *hat_kinks(mesh, j)}
        plan = make_plan((i - 1) * mesh.h, min((j + 1) * mesh.h, 1.0), kinks, kinks,
                         order=12, levels=10)
        ref = -integrate(lambda x: left(i, x) * right(j, x), plan)
        assert abs(K[j - 1, i - 1] - ref) < 1e-7


@pytest.mark.parametrize("s", S_VALUES)
def test_caputo_and_rl_stiffness_identical(s):
    basis = HatBasis(UniformMesh(10))
    K_rl = assemble_stiffness(basis, s, "rl")
    K_c = assemble_stiffness(basis, s, "caputo")
    assert np.max(np.abs(K_rl - K_c)) <= 1e-9


@pytest.mark.parametrize("s", S_VALUES)
def test_stiffness_is_toeplitz_and_matches_entrywise(s):
    basis = HatBasis(UniformMesh(6))
    K = assemble_stiffness(basis, s)
    K_entry = assemble_stiffness(basis, s, method="entrywise")
    np.testing.assert_allclose(K, K_entry, rtol=0, atol=1e-14)
    for d in range(-4, 5):
        assert np.ptp(np.diagonal(K, d)) == 0.0


@pytest.mark.parametrize("s", S_VALUES)
def test_stiffness_matches_closed_form(s):
    mesh = UniformMesh(20)
    K = assemble_stiffness(HatBasis(mesh), s)
    K_exact = stiffness_closed_form(mesh, s)
    # the closed form loses digits to cancellation on far diagonals
    assert np.max(np.abs(K - K_exact)) <= 1e-9 * np.max(np.abs(K_exact))


@pytest.mark.parametrize("s", S_VALUES)
@pytest.mark.parametrize("n", [5, 20])
def test_stiffness_quadratic_form_positive(s, n):
    K = assemble_stiffness(HatBasis(UniformMesh(n)), s)
    rng = np.random.default_rng(7)
    v = rng.normal(size=(100, n - 1))
    assert np.all(np.einsum("ki,ij,kj->k", v, K, v) > 0)
    # nonsymmetric for fractional orders
    assert not np.allclose(K, K.T)


def test_unknown_method():
    with pytest.raises(ValueError):
        assemble_stiffness(HatBasis(UniformMesh(4)), 1.5, method="spectral")


# }}}


# {{{ vectors and Jacobian


def test_zero_load():
    p = _linear(rhs=())
    qc = _cache(UniformMesh(6), p)
    assert np.all(assemble_load(p, qc) == 0.0)


def test_unit_load_on_hats():
    p = _linear()
    qc = _cache(UniformMesh(4), p)
    np.testing.assert_allclose(assemble_load(p, qc), 0.25, rtol=0, atol=1e-14)


def test_singular_caputo_load_matches_refined_quadrature():
    p = example4(1.75, "caputo")
    mesh = UniformMesh(10)
    F = assemble_load(p, _cache(mesh, p))
    fine = QuadratureSettings(order=24, levels=20, origin_levels=90)
    F_ref = assemble_load(p, _cache(mesh, p, fine))
    assert np.all(np.isfinite(F))
    assert np.max(np.abs(F - F_ref)) < 1e-8


def test_zero_nonlinearity():
    p = _linear()
    qc = _cache(UniformMesh(6), p)
    u = FEFunction(qc.basis, np.linspace(1, 2, 5))
    assert np.all(assemble_nonlinear(u, p, qc) == 0.0)


def test_linear_nonlinearity_gives_mass_columns():
    n = 8
    p = _linear(g_coef=1.0)
    qc = _cache(UniformMesh(n), p)
    M = _mass(n)
    for i in range(n - 1):
        u = FEFunction(qc.basis, np.eye(n - 1)[i])
        np.testing.assert_allclose(assemble_nonlinear(u, p, qc), M[:, i], rtol=0, atol=1e-15)


def test_cubic_nonlinearity_matches_refined_quadrature():
    p = example1(1.5, "caputo")
    mesh = UniformMesh(10)
    qc = _cache(mesh, p)
    u = interpolate(p.exact, qc.basis)
    fine = _cache(mesh, p, QuadratureSettings(order=24, levels=20, origin_levels=90))
    assert np.max(np.abs(assemble_nonlinear(u, p, qc) - assemble_nonlinear(u, p, fine))) < 1e-8


def test_jacobian_for_zero_g_is_stiffness():
    p = _linear()
    mesh = UniformMesh(6)
    qc = _cache(mesh, p)
    K = assemble_stiffness(qc.basis, 1.5)
    u = FEFunction(qc.basis, np.ones(5))
    np.testing.assert_array_equal(assemble_jacobian(u, p, K, qc), K)


def test_jacobian_for_identity_g_adds_mass():
    n = 6
    p = _linear(g_coef=1.0)
    qc = _cache(UniformMesh(n), p)
    K = assemble_stiffness(qc.basis, 1.5)
    u = FEFunction(qc.basis, np.arange(5.0))
    np.testing.assert_allclose(assemble_jacobian(u, p, K, qc), K + _mass(n), rtol=0, atol=1e-14)


def test_mass_symmetric_for_hat_tests():
    p = _linear()
    qc = _cache(UniformMesh(9), p)
    M = weighted_mass(np.ones_like(qc.x), qc)
    np.testing.assert_allclose(M, M.T, atol=1e-16)


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
def test_nonfinite_g_reported():
    p = custom_problem({"kind": "rl", "s": 1.5, "g": {"u_map": "exp"}, "rhs": [[1, 0]]})
    qc = _cache(UniformMesh(4), p)
    u = FEFunction(qc.basis, np.array([1e3, 1e3, 1e3]))
    with pytest.raises(AssemblyError, match="non-finite g"):
        assemble_nonlinear(u, p, qc)


def test_build_system_reuses_given_stiffness():
    p = example1(1.5, "rl")
    mesh = UniformMesh(5)
    K = assemble_stiffness(HatBasis(mesh), 1.5)
    sys_ = build_system(p, mesh, stiffness=K)
    assert sys_.stiffness is K
    assert sys_.load.shape == (4,)


# }}}
