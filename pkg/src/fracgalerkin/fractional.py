"""Riemann-Liouville and Caputo operators on power functions.

Closed forms come from the power rule

    I^a x^p = Gamma(p + 1) / Gamma(p + 1 + a) * x^(p + a),
    D^a x^p = Gamma(p + 1) / Gamma(p + 1 - a) * x^(p - a),

evaluated with a reciprocal gamma that is exactly zero at the poles, so that
modes such as ``x^(s - 1)`` are annihilated bit-exactly by ``D^s``.

:func:`abel_oracle` is an independent numerical route (graded composite
Gauss after removing the Abel kernel singularity) used to validate every
closed form in this package.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import special

from fracgalerkin.quadrature import (
    QuadratureError,
    integrate,
    make_plan,
)

#: Arguments closer than this to a non-positive integer are treated as poles.
POLE_SNAP = 1e-12
#: Exponents closer than this are merged in a :class:`PowerSum`.
EXPONENT_MERGE = 1e-13


class DerivativeKind(enum.Enum):
    """Type of the fractional derivative in the boundary value problem."""

    RiemannLiouville = "rl"
    Caputo = "caputo"

    @classmethod
    def parse(cls, value: str | DerivativeKind) -> DerivativeKind:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "rl": cls.RiemannLiouville,
            "riemannliouville": cls.RiemannLiouville,
            "caputo": cls.Caputo,
            "c": cls.Caputo,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown derivative kind: {value!r}") from None


def check_bvp_order(s: float) -> float:
    """Validate the order of the boundary value problem, ``1 < s < 2``."""
    s = float(s)
    if not 1.0 < s < 2.0:
        raise ValueError(f"order s must lie in (1, 2), got {s}")
    return s


# {{{ gamma helpers


def _near_pole(z: np.ndarray) -> np.ndarray:
    r = np.rint(z)
    return (r <= 0) & (np.abs(z - r) < POLE_SNAP)


def rgamma(z):
    """Reciprocal gamma function, exactly zero at ``0, -1, -2, ...``.

    Arguments within ``POLE_SNAP`` of a pole are snapped to it, which absorbs
    the rounding in expressions like ``(s - 1) + 1 - s``.
    """
    z = np.asarray(z, dtype=float)
    out = np.where(_near_pole(z), 0.0, special.rgamma(z))
    return out[()] if out.ndim == 0 else out


def gamma(z):
    """Gamma function (thin wrapper so callers need a single import)."""
    return special.gamma(z)


def gammaln(z):
    """Logarithm of the absolute value of the gamma function."""
    return special.gammaln(z)


def gamma_ratio(a, b):
    r"""Compute :math:`\Gamma(a) / \Gamma(b)`, zero when ``b`` is a pole."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = special.gamma(a) * rgamma(b)
    return out[()] if np.ndim(out) == 0 else out


# }}}


# {{{ pointwise power rules


def _check_exponent(p: float) -> None:
    if not p > -1.0:
        raise ValueError(f"exponent must be > -1 (Abel integrability), got {p}")


def _power(x, e):
    x = np.asarray(x, dtype=float)
    if e == 0.0:
        return np.ones_like(x)
    return x**e


def rl_integral_power(p: float, sigma: float, x):
    """Left Riemann-Liouville integral of order ``sigma`` of ``x^p``."""
    _check_exponent(p)
    if sigma <= 0.0:
        raise ValueError(f"integral order must be positive, got {sigma}")
    x = np.asarray(x, dtype=float)
    out = gamma_ratio(p + 1.0, p + 1.0 + sigma) * _power(x, p + sigma)
    return out[()] if out.ndim == 0 else out


def rl_derivative_power(p: float, s: float, x):
    """Left Riemann-Liouville derivative of order ``s`` of ``x^p``.

    Returns exactly zero when ``p + 1 - s`` is a pole of the gamma function.
    Evaluation at ``x = 0`` is rejected when the result is singular there.
    """
    _check_exponent(p)
    x = np.asarray(x, dtype=float)
    coef = float(gamma_ratio(p + 1.0, p + 1.0 - s))
    if coef == 0.0:
        out = np.zeros_like(x)
        return out[()] if out.ndim == 0 else out
    e = p - s
    if e < 0.0 and np.any(x == 0.0):
        raise ValueError(f"D^{s} x^{p} is singular at x = 0")
    out = coef * _power(x, e)
    return out[()] if out.ndim == 0 else out


def _is_integer(p: float) -> bool:
    return abs(p - round(p)) < POLE_SNAP


def caputo_derivative_power(p: float, s: float, x):
    """Left Caputo derivative of order ``s`` of ``x^p``.

    Integer powers below ``ceil(s)`` are annihilated. Non-integer powers must
    satisfy ``p > ceil(s) - 1`` so that ``D^n x^p`` is Abel-integrable.
    """
    n = math.ceil(s)
    x = np.asarray(x, dtype=float)
    if _is_integer(p) and 0 <= round(p) < n:
        out = np.zeros_like(x)
        return out[()] if out.ndim == 0 else out
    if not p > n - 1:
        raise ValueError(
            f"Caputo derivative of order {s} needs p in {{0..{n - 1}}} or p > {n - 1}, got {p}"
        )
    e = p - s
    if e < 0.0 and np.any(x == 0.0):
        raise ValueError(f"Caputo D^{s} x^{p} is singular at x = 0")
    out = gamma_ratio(p + 1.0, p + 1.0 - s) * _power(x, e)
    return out[()] if out.ndim == 0 else out


def right_rl_derivative_power(p: float, s: float, x):
    """Right Riemann-Liouville derivative on ``[x, 1]`` of ``(1 - x)^p``."""
    return rl_derivative_power(p, s, 1.0 - np.asarray(x, dtype=float))


# }}}


# {{{ power sums


@dataclass(frozen=True)
class PowerSum:
    """Finite combination ``sum(c * x**p)`` in canonical form.

    Terms are sorted by strictly increasing exponent, zero coefficients are
    dropped and every exponent is larger than -1.
    """

    terms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        merged: list[list[float]] = []
        for c, p in sorted(((float(c), float(p)) for c, p in self.terms), key=lambda t: t[1]):
            _check_exponent(p)
            if merged and abs(merged[-1][1] - p) < EXPONENT_MERGE:
                merged[-1][0] += c
            else:
                merged.append([c, p])
        canon = tuple((c, p) for c, p in merged if c != 0.0)
        object.__setattr__(self, "terms", canon)

    @classmethod
    def monomial(cls, p: float, c: float = 1.0) -> PowerSum:
        return cls(((c, p),))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> PowerSum:
        return cls(tuple((float(c), float(p)) for c, p in pairs))

    @property
    def exponents(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.terms)

    @property
    def min_exponent(self) -> float:
        return min(self.exponents, default=math.inf)

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, p in self.terms:
            out = out + c * _power(x, p)
        return out[()] if out.ndim == 0 else out

    def __add__(self, other: PowerSum) -> PowerSum:
        return PowerSum(self.terms + other.terms)

    def __neg__(self) -> PowerSum:
        return self.scale(-1.0)

    def __sub__(self, other: PowerSum) -> PowerSum:
        return self + (-other)

    def scale(self, a: float) -> PowerSum:
        return PowerSum(tuple((a * c, p) for c, p in self.terms))

    def rl_integral(self, sigma: float) -> PowerSum:
        return PowerSum(
            tuple(
                (c * float(gamma_ratio(p + 1.0, p + 1.0 + sigma)), p + sigma)
                for c, p in self.terms
            )
        )

    def rl_derivative(self, order: float) -> PowerSum:
        return powersum_rl_derivative(self, order)

    def caputo_derivative(self, order: float) -> PowerSum:
        return powersum_caputo_derivative(self, order)

    def derivative(self, kind: DerivativeKind | str, order: float) -> PowerSum:
        if DerivativeKind.parse(kind) is DerivativeKind.Caputo:
            return self.caputo_derivative(order)
        return self.rl_derivative(order)

    def classical_derivative(self) -> PowerSum:
        return PowerSum(tuple((c * p, p - 1.0) for c, p in self.terms if p != 0.0))


def powersum_rl_derivative(u: PowerSum, order: float) -> PowerSum:
    """Termwise Riemann-Liouville derivative; gamma-pole terms are dropped."""
    terms = []
    for c, p in u.terms:
        coef = float(gamma_ratio(p + 1.0, p + 1.0 - order))
        if coef != 0.0:
            terms.append((c * coef, p - order))
    return PowerSum(tuple(terms))


def powersum_caputo_derivative(u: PowerSum, order: float) -> PowerSum:
    """Termwise Caputo derivative of order ``order``."""
    n = math.ceil(order)
    terms = []
    for c, p in u.terms:
        if _is_integer(p) and 0 <= round(p) < n:
            continue
        if not p > n - 1:
            raise ValueError(f"Caputo derivative of order {order} undefined for x^{p}")
        terms.append((c * float(gamma_ratio(p + 1.0, p + 1.0 - order)), p - order))
    return PowerSum(tuple(terms))


# }}}


# {{{ Abel quadrature oracle


class OracleError(RuntimeError):
    """The oracle quadrature did not converge under refinement."""


def _abel_integral(
    fprime: Callable,
    sigma: float,
    x: float,
    breakpoints: Iterable[float],
    singular_at_zero: bool,
    order: int,
    ratio: float,
    levels: int,
) -> float:
    # Split at x/2. On [0, x/2] the kernel is smooth and only fprime may be
    # singular (at t = 0). On [x/2, x] the substitution u = (x - t)^(1 - sigma)
    # turns the kernel into a constant Jacobian:
    #   int (x - t)^-sigma F(t) dt = 1/(1 - sigma) int_0^U F(x - u^q) du
    mid = 0.5 * x
    kw = dict(order=order, ratio=ratio, levels=levels)
    # t^(p - 1) with p near 0 leaves mass (ratio^levels)^p in the innermost
    # piece, so grade four times deeper at t = 0
    near = make_plan(
        0.0,
        mid,
        [b for b in breakpoints if 0.0 < b < mid],
        [0.0] if singular_at_zero else [],
        levels_at={0.0: 4 * levels},
        **kw,
    )
    head = integrate(lambda t: (x - t) ** (-sigma) * np.asarray(fprime(t), dtype=float), near)

    q = 1.0 / (1.0 - sigma)
    upper = (x - mid) ** (1.0 - sigma)
    kinks = [(x - b) ** (1.0 - sigma) for b in breakpoints if mid < b < x]
    # as sigma -> 1 the image of t = 0 approaches u = upper, so grade there too
    far = make_plan(0.0, upper, kinks, [0.0, upper], **kw)
    # tiny u rounds t up to x itself; keep t < x so a breakpoint at x is
    # approached from the left, as the integral requires
    below = np.nextafter(x, 0.0)
    tail = integrate(
        lambda u: np.asarray(fprime(np.minimum(x - u**q, below)), dtype=float), far
    )
    return head / float(gamma(1.0 - sigma)) + tail / float(gamma(2.0 - sigma))


def abel_oracle(
    fprime: Callable,
    sigma: float,
    x: float,
    breakpoints: Iterable[float] = (),
    *,
    singular_at_zero: bool = True,
    tol: float = 1e-10,
    order: int = 16,
    ratio: float = 0.15,
    levels: int = 40,
) -> float:
    """Numerically evaluate ``I^(1 - sigma) fprime`` at ``x`` on ``[0, x]``.

    For ``f(0) = 0`` this is the Riemann-Liouville derivative ``D^sigma f``.
    ``fprime`` must be vectorized and smooth between ``breakpoints``; an
    integrable algebraic singularity at ``t = 0`` is handled by grading.

    The value is computed twice (``order`` and ``order + 8`` points per
    piece) and :class:`OracleError` is raised when the two disagree by more
    than ``tol * max(1, |value|)``.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    if x < 0.0 or x > 1.0 + 1e-15:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    breakpoints = tuple(breakpoints)
    try:
        coarse = _abel_integral(fprime, sigma, x, breakpoints, singular_at_zero, order, ratio, levels)
        fine = _abel_integral(
            fprime, sigma, x, breakpoints, singular_at_zero, order + 8, ratio, levels + 8
        )
    except QuadratureError as exc:
        raise OracleError(str(exc)) from exc
    if abs(fine - coarse) > tol * max(1.0, abs(fine)):
        raise OracleError(
            f"Abel oracle not converged at x={x}, sigma={sigma}: "
            f"{coarse!r} vs {fine!r}"
        )
    return fine


def right_abel_oracle(
    fprime: Callable,
    sigma: float,
    x: float,
    breakpoints: Iterable[float] = (),
    **kwargs,
) -> float:
    """Right-sided counterpart: ``-I_R^(1 - sigma) fprime`` on ``[x, 1]``.

    For ``f(1) = 0`` this is the right Riemann-Liouville derivative of ``f``.
    The point ``t = 1`` plays the role of ``t = 0`` for ``singular_at_zero``.
    """

    def mirrored(t):
        return -np.asarray(fprime(1.0 - np.asarray(t)), dtype=float)

    return abel_oracle(mirrored, sigma, 1.0 - x, [1.0 - b for b in breakpoints], **kwargs)


# }}}
