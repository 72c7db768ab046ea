"""Manufactured test problems ``-D^s u + g(x, u) = f`` on ``[0, 1]``.

Each registered example stores the fractional part of its right-hand side as
a literal :class:`PowerSum` (e.g. ``1`` or ``sqrt(x)``) and the exact
solution separately, so :func:`self_consistency_residual` is a real check of
the power rule rather than a tautology.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from fracgalerkin.fractional import DerivativeKind, PowerSum, check_bvp_order, gamma

RL = DerivativeKind.RiemannLiouville
CAPUTO = DerivativeKind.Caputo


class ProblemError(ValueError):
    """Invalid problem definition."""


@dataclass(frozen=True)
class Problem:
    """Boundary value problem with optional exact solution.

    ``f(x) = rhs(x) + rhs_extra(x)`` where ``rhs`` is a power sum (the part
    that is possibly singular at 0) and ``rhs_extra`` is a pointwise callable.
    """

    name: str
    kind: DerivativeKind
    s: float
    g: Callable
    g_u: Callable
    rhs: PowerSum
    rhs_extra: Callable | None = None
    exact: PowerSum | None = None
    singular_points: tuple[float, ...] = ()
    #: g(x, 0) = 0 and g monotone in u
    assumption_a: bool = True
    #: Sobolev index of f used for the predicted rate; ``None`` means only L^2
    data_regularity: float | None = None
    #: whether a theoretical rate is claimed for this problem
    rate_claim: bool = True
    params: Mapping[str, float] = field(default_factory=dict)

    def f(self, x):
        x = np.asarray(x, dtype=float)
        out = self.rhs(x)
        if self.rhs_extra is not None:
            out = out + self.rhs_extra(x)
        return out


def chebyshev_samples(n: int = 50) -> np.ndarray:
    """Chebyshev points of the first kind mapped to the open interval (0, 1)."""
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos((2 * k + 1) * np.pi / (2 * n)))


def self_consistency_residual(problem: Problem, x=None) -> np.ndarray:
    """``-D^s u + g(x, u) - f`` evaluated for the attached exact solution."""
    if problem.exact is None:
        raise ProblemError(f"problem {problem.name!r} has no exact solution")
    x = chebyshev_samples() if x is None else np.asarray(x, dtype=float)
    u = problem.exact
    frac = -u.derivative(problem.kind, problem.s)
    return frac(x) + problem.g(x, u(x)) - problem.f(x)


def check_self_consistency(problem: Problem, tol: float = 1e-9) -> None:
    r = self_consistency_residual(problem)
    worst = int(np.argmax(np.abs(r)))
    if not abs(r[worst]) <= tol:
        x = chebyshev_samples()[worst]
        raise ProblemError(
            f"exact solution of {problem.name!r} is inconsistent: residual "
            f"{r[worst]:.3e} at x={x:.6g}"
        )


def _with_exact(problem_kw: dict, exact: PowerSum) -> dict:
    g = problem_kw["g"]
    problem_kw["rhs_extra"] = lambda x: g(x, exact(x))
    problem_kw["exact"] = exact
    return problem_kw


def _require_kind(name: str, kind, allowed) -> DerivativeKind:
    kind = DerivativeKind.parse(kind)
    if kind not in allowed:
        raise ProblemError(f"{name} is not defined for the {kind.value} derivative")
    return kind


# {{{ registered examples


def example1(s: float, kind) -> Problem:
    """``g = 3 x u^3``; fractional part of ``f`` is 1 for both kinds."""
    s = check_bvp_order(s)
    kind = DerivativeKind.parse(kind)
    c = 1.0 / float(gamma(s + 1.0))
    lead = 1.0 if kind is CAPUTO else s - 1.0
    exact = PowerSum(((c, lead), (-c, s)))
    return Problem(
        **_with_exact(
            dict(
                name="example1",
                kind=kind,
                s=s,
                g=lambda x, u: 3.0 * x * u**3,
                g_u=lambda x, u: 9.0 * x * u**2,
                rhs=PowerSum.monomial(0.0),
            ),
            exact,
        )
    )


def example2(s: float, kind) -> Problem:
    """``g = sin(x) u^5``; fractional part of ``f`` is ``sqrt(x)``."""
    s = check_bvp_order(s)
    kind = DerivativeKind.parse(kind)
    c = float(gamma(1.5) / gamma(s + 1.5))
    lead = 1.0 if kind is CAPUTO else s - 1.0
    exact = PowerSum(((c, lead), (-c, s + 0.5)))
    return Problem(
        **_with_exact(
            dict(
                name="example2",
                kind=kind,
                s=s,
                g=lambda x, u: np.sin(x) * u**5,
                g_u=lambda x, u: 5.0 * np.sin(x) * u**4,
                rhs=PowerSum.monomial(0.5),
            ),
            exact,
        )
    )


def example3(s: float, kind=RL) -> Problem:
    """``g = x exp(u)`` (Riemann-Liouville only); ``g(x, 0) != 0``."""
    s = check_bvp_order(s)
    kind = _require_kind("example3", kind, (RL,))
    a = 1.0 / float(gamma(s + 2.0))
    b = 2.0 / float(gamma(s + 3.0))
    exact = PowerSum(((a - b, s - 1.0), (-a, s + 1.0), (b, s + 2.0)))
    return Problem(
        **_with_exact(
            dict(
                name="example3",
                kind=kind,
                s=s,
                g=lambda x, u: x * np.exp(u),
                g_u=lambda x, u: x * np.exp(u),
                rhs=PowerSum(((1.0, 1.0), (-1.0, 2.0))),
                assumption_a=False,
                rate_claim=False,
            ),
            exact,
        )
    )


def example4(s: float, kind=CAPUTO) -> Problem:
    """``g = (u - x)^2`` (Caputo only); ``f`` has an ``x^(-1/4)`` singularity."""
    s = check_bvp_order(s)
    kind = _require_kind("example4", kind, (CAPUTO,))
    c = float(gamma(0.75) / gamma(s + 0.75))
    exact = PowerSum(((c, 1.0), (-c, s - 0.25)))
    return Problem(
        **_with_exact(
            dict(
                name="example4",
                kind=kind,
                s=s,
                g=lambda x, u: (u - x) ** 2,
                g_u=lambda x, u: 2.0 * (u - x),
                rhs=PowerSum.monomial(-0.25),
                singular_points=(0.0,),
                assumption_a=False,
                rate_claim=False,
            ),
            exact,
        )
    )


def example5_defined(s: float, kind, theta: float) -> bool:
    """The Caputo solution ``x - x^(s+theta)`` degenerates unless ``s + theta > 1``."""
    kind = DerivativeKind.parse(kind)
    return kind is RL or s + theta > 1.0 + 1e-12


def example5(s: float, kind=CAPUTO, theta: float = -0.2) -> Problem:
    """Linear problem with ``f = x^theta``.

    The exact solution is ``c (x^(s-1) - x^(s+theta))`` for the
    Riemann-Liouville derivative and ``c (x - x^(s+theta))`` for Caputo,
    with ``c = Gamma(theta + 1) / Gamma(s + theta + 1)``.
    """
    s = check_bvp_order(s)
    kind = DerivativeKind.parse(kind)
    theta = float(theta)
    if not -0.5 < theta < 0.0:
        raise ProblemError(f"theta must lie in (-1/2, 0), got {theta}")
    if not example5_defined(s, kind, theta):
        raise ProblemError(
            f"Caputo example5 needs s + theta > 1, got s={s:.6g}, theta={theta:.6g}"
        )
    c = float(gamma(theta + 1.0) / gamma(s + theta + 1.0))
    lead = 1.0 if kind is CAPUTO else s - 1.0
    exact = PowerSum(((c, lead), (-c, s + theta)))
    return Problem(
        name="example5",
        kind=kind,
        s=s,
        g=lambda x, u: np.zeros_like(np.asarray(u, dtype=float)),
        g_u=lambda x, u: np.zeros_like(np.asarray(u, dtype=float)),
        rhs=PowerSum.monomial(theta),
        exact=exact,
        singular_points=(0.0,),
        data_regularity=theta + 0.5,
        params={"theta": theta},
    )


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    constructor: Callable[..., Problem]
    kinds: tuple[DerivativeKind, ...]
    description: str


REGISTRY: dict[str, RegistryEntry] = {
    e.name: e
    for e in (
        RegistryEntry("example1", example1, (CAPUTO, RL), "g = 3 x u^3, f smooth"),
        RegistryEntry("example2", example2, (CAPUTO, RL), "g = sin(x) u^5"),
        RegistryEntry("example3", example3, (RL,), "g = x exp(u)"),
        RegistryEntry("example4", example4, (CAPUTO,), "g = (u - x)^2, f ~ x^(-1/4)"),
        RegistryEntry("example5", example5, (CAPUTO, RL), "linear, f = x^theta"),
    )
}


def get_problem(name: str, s: float, kind, **params) -> Problem:
    """Construct a registered problem, validating the derivative kind first."""
    try:
        entry = REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise ProblemError(f"unknown problem {name!r} (known: {known})") from None
    kind = DerivativeKind.parse(kind)
    if kind not in entry.kinds:
        raise ProblemError(f"{name} is not defined for the {kind.value} derivative")
    if name == "example5":
        return entry.constructor(s, kind, **params)
    if params:
        raise ProblemError(f"{name} takes no parameters, got {sorted(params)}")
    return entry.constructor(s, kind)


# }}}


# {{{ user-defined problems

_G_KEYS = {"coef", "x_factor", "x_power", "u_map", "u_power"}
_SPEC_KEYS = {"name", "kind", "s", "g", "exact", "rhs"}


def _build_g(spec: Mapping) -> tuple[Callable, Callable, bool]:
    unknown = set(spec) - _G_KEYS
    if unknown:
        raise ProblemError(f"unknown keys in g: {sorted(unknown)}")
    coef = float(spec.get("coef", 1.0))
    x_factor = spec.get("x_factor", "power")
    a = float(spec.get("x_power", 0.0))
    u_map = spec.get("u_map", "power")
    m = spec.get("u_power", 1)

    if x_factor == "power":
        if a < 0.0:
            raise ProblemError("x_power must be non-negative")

        def xf(x):
            return np.asarray(x, dtype=float) ** a
    elif x_factor == "sin":
        xf = np.sin
    else:
        raise ProblemError(f"x_factor must be 'power' or 'sin', got {x_factor!r}")

    if u_map == "power":
        if int(m) != m or m < 0:
            raise ProblemError(f"u_power must be a non-negative integer, got {m!r}")
        m = int(m)

        def uf(u):
            return u**m

        def duf(u):
            return m * u ** (m - 1) if m else np.zeros_like(u)

        monotone = coef >= 0.0 and m % 2 == 1
    elif u_map == "exp":
        uf = duf = np.exp
        monotone = False  # g(x, 0) != 0
    else:
        raise ProblemError(f"u_map must be 'power' or 'exp', got {u_map!r}")

    def g(x, u):
        return coef * xf(x) * uf(np.asarray(u, dtype=float))

    def g_u(x, u):
        return coef * xf(x) * duf(np.asarray(u, dtype=float))

    return g, g_u, monotone


def custom_problem(spec: Mapping, tol: float = 1e-9) -> Problem:
    """Build a problem from a mapping.

    Keys: ``kind``, ``s``, ``g`` (``coef * X(x) * U(u)`` with ``x_factor`` in
    ``power``/``sin`` and ``u_map`` in ``power``/``exp``), and at least one of
    ``exact`` / ``rhs`` given as lists of ``[coefficient, exponent]`` pairs.
    When only ``exact`` is given the fractional part of ``f`` is derived by
    the power rule; when both are given they are checked against each other.
    """
    unknown = set(spec) - _SPEC_KEYS
    if unknown:
        raise ProblemError(f"unknown problem keys: {sorted(unknown)}")
    kind = DerivativeKind.parse(spec.get("kind", "rl"))
    s = check_bvp_order(spec["s"])
    g, g_u, monotone = _build_g(spec.get("g", {"coef": 0.0}))
    exact = PowerSum.from_pairs(spec["exact"]) if "exact" in spec else None
    if exact is None and "rhs" not in spec:
        raise ProblemError("a custom problem needs 'exact' or 'rhs'")
    if "rhs" in spec:
        rhs = PowerSum.from_pairs(spec["rhs"])
    else:
        rhs = -exact.derivative(kind, s)
    singular = (0.0,) if rhs.min_exponent < 0.0 else ()
    kw = dict(
        name=str(spec.get("name", "custom")),
        kind=kind,
        s=s,
        g=g,
        g_u=g_u,
        rhs=rhs,
        singular_points=singular,
        assumption_a=monotone,
        rate_claim=False,
    )
    if exact is not None:
        for end in (0.0, 1.0):
            if abs(float(exact(end))) > tol:
                raise ProblemError(f"exact solution does not vanish at x={end}")
        problem = Problem(**_with_exact(kw, exact))
        check_self_consistency(problem, tol)
        return problem
    return Problem(**kw)


# }}}


def boundary_values(problem: Problem) -> tuple[float, float]:
    """Exact solution at 0 and 1 (both must be zero)."""
    u = problem.exact
    if u is None:
        return math.nan, math.nan
    return float(u(0.0)), float(u(1.0))
