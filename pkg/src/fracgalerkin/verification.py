"""Oracle, identity, coercivity and self-consistency checks.

Each check returns a :class:`CheckResult` with the worst observed deviation,
so the same code backs the ``verify`` subcommand and the test-suite.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass

import numpy as np

from fracgalerkin.assembly import assemble_stiffness, build_system
from fracgalerkin.fe_space import (
    FEFunction,
    HatBasis,
    UniformMesh,
    caputo_gammas,
)
from fracgalerkin.fractional import (
    PowerSum,
    abel_oracle,
    caputo_derivative_power,
    right_abel_oracle,
    rl_derivative_power,
)
from fracgalerkin.newton import NewtonConfig, newton_solve, residual
from fracgalerkin.operators import (
    hat_kinks,
    left_halfderiv_hat,
    right_halfderiv_caputo_correction,
    right_halfderiv_hat,
)
from fracgalerkin.problems import (
    REGISTRY,
    Problem,
    example5_defined,
    get_problem,
    self_consistency_residual,
)
from fracgalerkin.quadrature import QuadratureSettings, integrate, plan_for_pair

S_VALUES = (7.0 / 4.0, 3.0 / 2.0, 4.0 / 3.0)
THETAS = (-1.0 / 3.0, -1.0 / 4.0, -1.0 / 5.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tol: float
    detail: str = ""
    #: how ``worst`` is compared with ``tol``; lower bounds use ``">"``
    bound: str = "<="

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" [{self.detail}]" if self.detail else ""
        label = "worst" if self.bound == "<=" else "min"
        return f"{tag} {self.name}: {label} {self.worst:.3e} (need {self.bound} {self.tol:.0e}){extra}"


def _result(name: str, errors, tol: float, where=None) -> CheckResult:
    errors = np.asarray(errors, dtype=float)
    i = int(np.argmax(errors))
    worst = float(errors[i])
    detail = "" if where is None else f"at {where[i]}"
    return CheckResult(name, bool(worst <= tol), worst, tol, detail if worst > tol else "")


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300) if b != 0.0 else abs(a)


# {{{ oracle equivalence


def check_hat_derivatives(
    n_samples: int = 500, seed: int = 0, tol: float = 1e-8, side: str = "left"
) -> CheckResult:
    """Closed-form half derivatives of hats against the Abel oracle.

    Samples random ``(s, hat, x)`` triples on meshes with 5 to 40 cells; ``x``
    is drawn from the support of the derivative, which is ``[x_{i-1}, 1]`` on
    the left and ``[0, x_{i+1}]`` on the right.
    """
    rng = np.random.default_rng(seed)
    errs, where = [], []
    for _ in range(n_samples):
        s = float(rng.uniform(1.05, 1.95))
        mesh = UniformMesh(int(rng.choice([5, 10, 20, 40])))
        i = int(rng.integers(1, mesh.n_interior + 1))
        h = mesh.h
        basis = HatBasis(mesh)
        if side == "left":
            x = float(rng.uniform((i - 1) * h, 1.0))
            got = float(left_halfderiv_hat(mesh, i, s, x))
            ref = abel_oracle(
                lambda t: basis.deriv(i, t), 0.5 * s, x, hat_kinks(mesh, i), singular_at_zero=False
            )
        else:
            x = float(rng.uniform(0.0, (i + 1) * h))
            got = float(right_halfderiv_hat(mesh, i, s, x))
            ref = right_abel_oracle(
                lambda t: basis.deriv(i, t), 0.5 * s, x, hat_kinks(mesh, i), singular_at_zero=False
            )
        errs.append(_rel(got, ref))
        where.append(f"s={s:.4f}, N={mesh.n_cells}, i={i}, x={x:.6f}")
    return _result(f"{side} hat half-derivative vs oracle ({n_samples} triples)", errs, tol, where)


def check_power_rule(n_samples: int = 200, seed: int = 1, tol: float = 1e-8) -> CheckResult:
    """Riemann-Liouville (order in (0, 1)) and Caputo (order in (1, 2)) power rules."""
    rng = np.random.default_rng(seed)
    errs, where = [], []
    for n in range(n_samples):
        x = float(rng.uniform(0.05, 1.0))
        if n % 2 == 0:
            sigma = float(rng.uniform(0.1, 0.9))
            p = float(rng.uniform(0.2, 3.0))
            got = float(rl_derivative_power(p, sigma, x))
            ref = abel_oracle(lambda t: p * t ** (p - 1.0), sigma, x)
            label = f"RL sigma={sigma:.4f}, p={p:.4f}, x={x:.4f}"
        else:
            s = float(rng.uniform(1.1, 1.9))
            p = float(rng.uniform(1.2, 3.5))
            got = float(caputo_derivative_power(p, s, x))
            # I^(2 - s) of the second derivative, as an Abel integral of order s - 1
            ref = abel_oracle(lambda t: p * (p - 1.0) * t ** (p - 2.0), s - 1.0, x)
            label = f"Caputo s={s:.4f}, p={p:.4f}, x={x:.4f}"
        errs.append(_rel(got, ref))
        where.append(label)
    return _result(f"power rule vs oracle ({n_samples} samples)", errs, tol, where)


# }}}


# {{{ identities


def check_semigroup(tol: float = 1e-12) -> CheckResult:
    """``I^a I^b x^p = I^(a+b) x^p`` on a grid of orders and exponents."""
    errs, where = [], []
    x = np.linspace(0.05, 1.0, 20)
    for p in (0.0, 0.5, 1.0, 1.75, 3.0):
        for a in (0.25, 0.5, 0.9):
            for b in (0.1, 0.5, 1.3):
                u = PowerSum.monomial(p)
                lhs = u.rl_integral(b).rl_integral(a)(x)
                rhs = u.rl_integral(a + b)(x)
                errs.append(float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
                where.append(f"p={p}, a={a}, b={b}")
    return _result("semigroup I^a I^b = I^(a+b)", errs, tol, where)


def _pair_plan(mesh: UniformMesh, quad: QuadratureSettings):
    nodes = mesh.nodes
    return plan_for_pair(nodes, (), nodes, **quad.kwargs())


def check_adjoint(
    n_cells: int = 10, tol: float = 1e-10, quad: QuadratureSettings = QuadratureSettings()
) -> CheckResult:
    """``(D_L^(s/2) phi_i, phi_j) = (phi_i, D_R^(s/2) phi_j)`` for all hat pairs."""
    mesh = UniformMesh(n_cells)
    basis = HatBasis(mesh)
    plan = _pair_plan(mesh, quad)
    errs, where = [], []
    for s in S_VALUES:
        for i in range(1, basis.dim + 1):
            for j in range(1, basis.dim + 1):
                lhs = integrate(lambda x: left_halfderiv_hat(mesh, i, s, x) * basis.eval(j, x), plan)
                rhs = integrate(lambda x: basis.eval(i, x) * right_halfderiv_hat(mesh, j, s, x), plan)
                errs.append(abs(lhs - rhs) / max(abs(lhs), 1.0))
                where.append(f"s={s:.4f}, i={i}, j={j}")
    return _result("adjoint identity for hats", errs, tol, where)


def check_caputo_cross_term(
    n_cells: int = 20, tol: float = 1e-9, quad: QuadratureSettings = QuadratureSettings()
) -> CheckResult:
    """``(D_L^(s/2) phi_i, D_R^(s/2) (1 - x)^(s - 1)) = 0`` for every hat."""
    mesh = UniformMesh(n_cells)
    nodes = mesh.nodes
    # (1 - x)^(s/2 - 1) at x = 1: grade as deep as double precision resolves
    plan = plan_for_pair(nodes, (), nodes, levels_at={1.0: 13}, **quad.kwargs())
    x_in = plan.points[0]
    errs, where = [], []
    for s in S_VALUES:
        corr = right_halfderiv_caputo_correction(s, x_in)
        for i in range(1, mesh.n_interior + 1):
            errs.append(abs(integrate(lambda x: left_halfderiv_hat(mesh, i, s, x) * corr, plan)))
            where.append(f"s={s:.4f}, i={i}")
    return _result(f"Caputo cross-term vanishes (N={n_cells})", errs, tol, where)


def check_gamma_orthogonality(
    n_cells: int = 20, tol: float = 1e-10, quad: QuadratureSettings = QuadratureSettings()
) -> CheckResult:
    """Corrected test functions are orthogonal to ``x^(1 - s)``."""
    mesh = UniformMesh(n_cells)
    basis = HatBasis(mesh)
    plan = plan_for_pair(
        mesh.nodes,
        (),
        {0.0, 1.0},
        levels_at={0.0: quad.origin_levels},
        **quad.kwargs(),
    )
    errs, where = [], []
    for s in S_VALUES:
        space = caputo_gammas(basis, s)
        for i in range(1, basis.dim + 1):
            val = integrate(lambda x: x ** (1.0 - s) * space.eval(i, x), plan)
            errs.append(abs(val))
            where.append(f"s={s:.4f}, i={i}")
    return _result(f"gamma orthogonality (N={n_cells})", errs, tol, where)


# }}}


# {{{ coercivity and uniqueness


def check_coercivity(n_vectors: int = 100, seed: int = 2) -> CheckResult:
    """``c^T K c > 0`` for random vectors; reports the smallest normalized form."""
    rng = np.random.default_rng(seed)
    worst, where = math.inf, ""
    for s in S_VALUES:
        for n in (5, 20):
            K = assemble_stiffness(HatBasis(UniformMesh(n)), s)
            for _ in range(n_vectors):
                c = rng.standard_normal(n - 1)
                q = float(c @ K @ c) / float(c @ c)
                if q < worst:
                    worst, where = q, f"s={s:.4f}, N={n}"
    passed = worst > 0.0
    return CheckResult(
        "stiffness quadratic form positive",
        passed,
        worst,
        0.0,
        "" if passed else f"at {where}",
        bound=">",
    )


def registry_problems() -> Iterator[Problem]:
    """Every registered example, kind and ``s`` (and ``theta`` for the linear one)."""
    for name, entry in REGISTRY.items():
        for kind in entry.kinds:
            for s in S_VALUES:
                if name == "example5":
                    for theta in THETAS:
                        if example5_defined(s, kind, theta):
                            yield get_problem(name, s, kind, theta=theta)
                else:
                    yield get_problem(name, s, kind)


def _label(p: Problem) -> str:
    extra = "".join(f", {k}={v:.4f}" for k, v in p.params.items())
    return f"{p.name} {p.kind.value} s={p.s:.4f}{extra}"


def check_newton_uniqueness(n_cells: int = 20, tol: float = 1e-9) -> CheckResult:
    """Newton from zero, from the exact interpolant and from a smooth bump agree.

    A start that fails to converge counts as an infinite discrepancy.
    """
    errs, where = [], []
    mesh = UniformMesh(n_cells)
    for p in registry_problems():
        system = build_system(p, mesh)
        guesses: tuple[Callable | None, ...] = (None, p.exact, lambda x: 0.3 * np.sin(np.pi * x))
        sols = []
        for g in guesses:
            u, rep = newton_solve(system, NewtonConfig(initial_guess=g))
            sols.append(u.coefficients if rep.converged else np.full(system.basis.dim, np.inf))
        scale = max(float(np.max(np.abs(sols[0]))), 1e-300)
        errs.append(max(float(np.max(np.abs(sols[0] - other))) for other in sols[1:]) / scale)
        where.append(_label(p))
    return _result("Newton solutions independent of initial guess", errs, tol, where)


def check_jacobian(n_cells: int = 20, tol: float = 1e-6, seed: int = 3) -> CheckResult:
    """Jacobian times a direction against central differences of the residual."""
    rng = np.random.default_rng(seed)
    mesh = UniformMesh(n_cells)
    basis = HatBasis(mesh)
    errs, where = [], []
    for p in registry_problems():
        system = build_system(p, mesh)
        c = 0.2 * rng.standard_normal(basis.dim)
        d = rng.standard_normal(basis.dim)
        eps = 1e-6
        u = FEFunction(basis, c)
        fd = -(
            residual(FEFunction(basis, c + eps * d), system)
            - residual(FEFunction(basis, c - eps * d), system)
        ) / (2.0 * eps)
        jd = system.jacobian(u) @ d
        errs.append(float(np.linalg.norm(jd - fd) / np.linalg.norm(jd)))
        where.append(_label(p))
    return _result("Jacobian vs finite differences", errs, tol, where)


# }}}


# {{{ self-consistency


def check_self_consistency(tol: float = 1e-9) -> CheckResult:
    errs, where = [], []
    for p in registry_problems():
        errs.append(float(np.max(np.abs(self_consistency_residual(p)))))
        where.append(_label(p))
    return _result("manufactured residual at 50 points", errs, tol, where)


def check_boundary_values() -> CheckResult:
    errs, where = [], []
    for p in registry_problems():
        errs.append(max(abs(float(p.exact(0.0))), abs(float(p.exact(1.0)))))
        where.append(_label(p))
    return _result("exact solutions vanish at 0 and 1", errs, 0.0, where)


# }}}


SUITES: dict[str, tuple[Callable[[], CheckResult], ...]] = {
    "oracle": (
        lambda: check_hat_derivatives(side="left"),
        lambda: check_hat_derivatives(side="right"),
        check_power_rule,
    ),
    "identity": (
        check_semigroup,
        check_adjoint,
        check_caputo_cross_term,
        check_gamma_orthogonality,
    ),
    "coercivity": (check_coercivity, check_newton_uniqueness, check_jacobian),
    "consistency": (check_self_consistency, check_boundary_values),
}


def run_suite(name: str) -> list[CheckResult]:
    try:
        checks = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r} (known: {', '.join(SUITES)})") from None
    return [check() for check in checks]

