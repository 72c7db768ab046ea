"""Assembly of the discrete nonlinear Galerkin system.

The stiffness entry for trial hat ``i`` and test function ``j`` is

    K[j, i] = -(D_L^{s/2} phi_i, D_R^{s/2} phi_j),

which is positive definite. For the Caputo test functions the correction
term drops out, so both derivative kinds share the same stiffness matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from fracgalerkin.fe_space import (
    CaputoTestSpace,
    FEFunction,
    HatBasis,
    UniformMesh,
    make_test_space,
)
from fracgalerkin.fractional import DerivativeKind, check_bvp_order, gamma
from fracgalerkin.operators import hat_kinks, left_halfderiv_hat, right_halfderiv_hat
from fracgalerkin.quadrature import (
    CompositePlan,
    QuadratureSettings,
    integrate,
    make_plan,
    plan_for_pair,
)


class AssemblyError(ArithmeticError):
    """Non-finite matrix or vector entry."""


# {{{ stiffness


def stiffness_entry(
    mesh: UniformMesh, i: int, j: int, s: float, quad: QuadratureSettings = QuadratureSettings()
) -> float:
    """``-(D_L^{s/2} phi_i, D_R^{s/2} phi_j)`` by kink-split graded quadrature."""
    kinks = {*hat_kinks(mesh, i), *hat_kinks(mesh, j)}
    lo = (i - 1) * mesh.h
    hi = min((j + 1) * mesh.h, 1.0)
    if hi <= lo:
        return 0.0
    # every kink carries an algebraic (x - x_k)_+^beta factor, so grade at all
    plan = make_plan(lo, hi, kinks, kinks, **quad.kwargs())
    return -integrate(
        lambda x: left_halfderiv_hat(mesh, i, s, x) * right_halfderiv_hat(mesh, j, s, x), plan
    )


def _check_finite(m: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(m)
    if np.any(bad):
        idx = tuple(int(v) + 1 for v in np.argwhere(bad)[0])
        raise AssemblyError(f"non-finite {what} entry at (j, i) = {idx}")
    return m


def assemble_stiffness(
    basis: HatBasis,
    s: float,
    kind: DerivativeKind | str = DerivativeKind.RiemannLiouville,
    *,
    method: str = "quadrature",
    quad: QuadratureSettings = QuadratureSettings(),
) -> np.ndarray:
    """Dense stiffness matrix ``K[j - 1, i - 1]`` (rows: test functions).

    ``method`` is one of

    * ``"quadrature"``: one quadrature per diagonal, using that entries on a
      uniform mesh depend only on ``j - i``;
    * ``"entrywise"``: one quadrature per entry;
    * ``"closed_form"``: exact Beta-function expression (see
      :func:`stiffness_closed_form`).

    ``kind`` does not change the result; it is accepted so callers can pass
    the problem's kind without special-casing Caputo.
    """
    s = check_bvp_order(s)
    DerivativeKind.parse(kind)
    mesh = basis.mesh
    n = basis.dim
    if method == "closed_form":
        return stiffness_closed_form(mesh, s)
    K = np.empty((n, n))
    if method == "entrywise":
        for j in range(1, n + 1):
            for i in range(1, n + 1):
                K[j - 1, i - 1] = stiffness_entry(mesh, i, j, s, quad)
    elif method == "quadrature":
        diag = {}
        for d in range(-(n - 1), n):
            i, j = (1, 1 + d) if d >= 0 else (1 - d, 1)
            diag[d] = stiffness_entry(mesh, i, j, s, quad)
        jj, ii = np.indices((n, n))
        K = np.vectorize(diag.__getitem__, otypes=[float])(jj - ii) if n else K
    else:
        raise ValueError(f"unknown stiffness method {method!r}")
    return _check_finite(K, "stiffness")


def stiffness_closed_form(mesh: UniformMesh, s: float) -> np.ndarray:
    """Exact stiffness from ``int (x - a)_+^b (c - x)_+^b = (c - a)^(2b+1) B(b+1, b+1)``."""
    beta = 1.0 - 0.5 * s
    n = mesh.n_interior
    h = mesh.h
    scale = -special.beta(beta + 1.0, beta + 1.0) / (h * float(gamma(1.0 + beta))) ** 2
    a = np.array([1.0, -2.0, 1.0])

    def G(d):
        d = np.asarray(d, dtype=float)
        return np.where(d > 0, (np.maximum(d, 0.0) * h) ** (2.0 * beta + 1.0), 0.0)

    # K[j, i] depends on j - i only: sum_{m,n} a_m a_n G(j - i + 2 - m - n)
    offs = np.arange(-(n - 1), n)
    kappa = sum(a[m] * a[q] * G(offs + 2 - m - q) for m in range(3) for q in range(3))
    jj, ii = np.indices((n, n))
    return scale * kappa[(jj - ii) + (n - 1)]


# }}}


# {{{ vectors and Jacobian


def global_plan(
    mesh: UniformMesh, singular=(), quad: QuadratureSettings = QuadratureSettings()
) -> CompositePlan:
    """Plan split at every mesh node, graded at 0, 1 and ``singular``."""
    return plan_for_pair(
        mesh.nodes, (), {0.0, 1.0, *singular}, levels_at={0.0: quad.origin_levels}, **quad.kwargs()
    )


TestSpace = HatBasis | CaputoTestSpace


@dataclass
class QuadratureCache:
    """Trial and test function values at the nodes of a fixed plan."""

    plan: CompositePlan
    basis: HatBasis
    tests: TestSpace
    x: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)
    trial: np.ndarray = field(init=False, repr=False)
    test: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.x, self.w = self.plan.points
        self.trial = self.basis.values(self.x)
        self.test = self.tests.test_values(self.x)


def _finite_values(v: np.ndarray, x: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(v)
    if np.any(bad):
        raise AssemblyError(f"non-finite {what} at x={x[int(np.argmax(bad))]!r}")
    return v


def assemble_load(problem, qc: QuadratureCache) -> np.ndarray:
    """``F_j = (f, v_j)``."""
    fx = _finite_values(np.asarray(problem.f(qc.x), dtype=float), qc.x, "right-hand side")
    return qc.test.T @ (qc.w * fx)


def assemble_nonlinear(u_h: FEFunction, problem, qc: QuadratureCache) -> np.ndarray:
    """``B_j = (g(x, u_h), v_j)``."""
    ux = qc.trial @ u_h.coefficients
    gx = _finite_values(np.asarray(problem.g(qc.x, ux), dtype=float) * np.ones_like(ux), qc.x, "g")
    return qc.test.T @ (qc.w * gx)


def weighted_mass(weight: np.ndarray, qc: QuadratureCache) -> np.ndarray:
    """``M[j, i] = (weight * phi_i, v_j)`` for weight values at the plan nodes."""
    return qc.test.T @ ((qc.w * weight)[:, None] * qc.trial)


def assemble_jacobian(
    u_h: FEFunction, problem, stiffness: np.ndarray, qc: QuadratureCache
) -> np.ndarray:
    """Newton matrix ``K + (g_u(x, u_h) phi_i, v_j)``."""
    ux = qc.trial @ u_h.coefficients
    gu = _finite_values(
        np.asarray(problem.g_u(qc.x, ux), dtype=float) * np.ones_like(ux), qc.x, "g_u"
    )
    return stiffness + weighted_mass(gu, qc)


@dataclass
class DiscreteSystem:
    """Everything needed to evaluate the residual and Jacobian of a problem."""

    problem: object
    basis: HatBasis
    tests: TestSpace
    stiffness: np.ndarray
    load: np.ndarray
    cache: QuadratureCache

    @property
    def kind(self) -> DerivativeKind:
        return self.problem.kind

    def nonlinear(self, u_h: FEFunction) -> np.ndarray:
        return assemble_nonlinear(u_h, self.problem, self.cache)

    def jacobian(self, u_h: FEFunction) -> np.ndarray:
        return assemble_jacobian(u_h, self.problem, self.stiffness, self.cache)


def build_system(
    problem,
    mesh: UniformMesh,
    quad: QuadratureSettings = QuadratureSettings(),
    *,
    stiffness: np.ndarray | None = None,
) -> DiscreteSystem:
    """Assemble stiffness, test space and load vector for ``problem``."""
    basis = HatBasis(mesh)
    tests = make_test_space(basis, problem.kind, problem.s)
    if stiffness is None:
        stiffness = assemble_stiffness(basis, problem.s, problem.kind, quad=quad)
    plan = global_plan(mesh, problem.singular_points, quad)
    qc = QuadratureCache(plan, basis, tests)
    load = assemble_load(problem, qc)
    return DiscreteSystem(problem, basis, tests, stiffness, load, qc)


# }}}
