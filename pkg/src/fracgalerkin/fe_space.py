"""Uniform meshes, P1 hat functions and the Caputo test space."""

from __future__ import annotations

import functools
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from fracgalerkin.fractional import DerivativeKind, check_bvp_order, gamma

K_MIN, K_MAX = -1, 8


@dataclass(frozen=True)
class UniformMesh:
    """Uniform partition of ``[0, 1]`` into ``n_cells`` cells."""

    n_cells: int

    def __post_init__(self) -> None:
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError(f"number of cells must be a positive integer, got {self.n_cells}")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @functools.cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.n_cells + 1) / self.n_cells
        x.setflags(write=False)
        return x

    @property
    def n_interior(self) -> int:
        return self.n_cells - 1


def build_mesh(k: int) -> UniformMesh:
    """Mesh at refinement level ``k`` with ``10 * 2**k`` cells (``k >= -1``)."""
    if int(k) != k or not K_MIN <= k <= K_MAX:
        raise ValueError(f"refinement level must be an integer in [{K_MIN}, {K_MAX}], got {k}")
    return UniformMesh(5 if k == -1 else 10 * 2 ** int(k))


@dataclass(frozen=True)
class HatBasis:
    """Interior hat functions ``phi_1 .. phi_{N-1}`` of a uniform mesh.

    Indices are 1-based to match node numbering; column ``i - 1`` of
    :meth:`values` holds ``phi_i``.
    """

    mesh: UniformMesh

    @property
    def dim(self) -> int:
        return self.mesh.n_interior

    def _check(self, i: int) -> None:
        if not 1 <= i <= self.dim:
            raise IndexError(f"hat index {i} outside 1..{self.dim}")

    def eval(self, i: int, x):
        self._check(i)
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, 1.0 - np.abs(x * self.mesh.n_cells - i))

    def deriv(self, i: int, x):
        """Derivative of ``phi_i``; right-continuous at the nodes."""
        self._check(i)
        x = np.asarray(x, dtype=float)
        h = self.mesh.h
        xl, xc, xr = (i - 1) * h, i * h, (i + 1) * h
        return np.where((x >= xl) & (x < xc), 1.0 / h, 0.0) + np.where(
            (x >= xc) & (x < xr), -1.0 / h, 0.0
        )

    def values(self, x) -> np.ndarray:
        """Matrix ``V[q, i - 1] = phi_i(x_q)``."""
        x = np.asarray(x, dtype=float)
        idx = np.arange(1, self.dim + 1)
        return np.maximum(0.0, 1.0 - np.abs(x[:, None] * self.mesh.n_cells - idx[None, :]))

    # RL tests with the trial hats themselves
    test_values = values


def correction_function(s: float, x):
    """Caputo test-space correction ``(1 - x)^(s - 1)``."""
    return (1.0 - np.asarray(x, dtype=float)) ** (s - 1.0)


def _weighted_hat_integral(a: float, mesh: UniformMesh, i: int) -> float:
    # int_0^1 x^a phi_i(x) dx from the antiderivatives of x^(a+1), x^(a+2)
    h = mesh.h
    xl, xc, xr = (i - 1) * h, i * h, (i + 1) * h

    def m1(lo, hi):
        return (hi ** (a + 1.0) - lo ** (a + 1.0)) / (a + 1.0)

    def m2(lo, hi):
        return (hi ** (a + 2.0) - lo ** (a + 2.0)) / (a + 2.0)

    rising = (m2(xl, xc) - xl * m1(xl, xc)) / h
    falling = (xr * m1(xc, xr) - m2(xc, xr)) / h
    return rising + falling


@dataclass(frozen=True)
class CaputoTestSpace:
    """Corrected hats ``phi_i - gamma_i (1 - x)^(s - 1)``.

    Each test function is orthogonal to ``x^(1 - s)`` in ``L^2(0, 1)``.
    """

    basis: HatBasis
    s: float
    gammas: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def mesh(self) -> UniformMesh:
        return self.basis.mesh

    def eval(self, i: int, x):
        return self.basis.eval(i, x) - self.gammas[i - 1] * correction_function(self.s, x)

    def test_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.basis.values(x) - correction_function(self.s, x)[:, None] * self.gammas[None, :]


def caputo_denominator(s: float) -> float:
    """``(x^(1 - s), (1 - x)^(s - 1)) = B(2 - s, s) = Gamma(2 - s) Gamma(s)``."""
    return float(gamma(2.0 - s) * gamma(s))


def caputo_gammas(basis: HatBasis, s: float) -> CaputoTestSpace:
    """Build the Caputo test space from closed-form weighted hat integrals."""
    s = check_bvp_order(s)
    denom = caputo_denominator(s)
    num = np.array(
        [_weighted_hat_integral(1.0 - s, basis.mesh, i) for i in range(1, basis.dim + 1)]
    )
    g = num / denom
    g.setflags(write=False)
    return CaputoTestSpace(basis, s, g)


@dataclass(frozen=True)
class FEFunction:
    """Piecewise-linear function ``sum(c_i phi_i)`` vanishing at 0 and 1."""

    basis: HatBasis
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coefficients", c)

    @property
    def mesh(self) -> UniformMesh:
        return self.basis.mesh

    @property
    def nodal_values(self) -> np.ndarray:
        """Values at all nodes including the homogeneous boundary values."""
        return np.concatenate([[0.0], self.coefficients, [0.0]])

    @property
    def slopes(self) -> np.ndarray:
        """Constant derivative on each of the ``N`` cells."""
        return np.diff(self.nodal_values) * self.mesh.n_cells

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.mesh.nodes, self.nodal_values)
        return out[()] if out.ndim == 0 else out


def interpolate(f: Callable, basis: HatBasis) -> FEFunction:
    """Nodal interpolant of ``f`` on the interior nodes."""
    xi = basis.mesh.nodes[1:-1]
    c = np.asarray(f(xi), dtype=float) * np.ones_like(xi)
    bad = ~np.isfinite(c)
    if np.any(bad):
        i = int(np.argmax(bad)) + 1
        raise ValueError(f"non-finite nodal value at node {i} (x={xi[i - 1]!r})")
    return FEFunction(basis, c)


def make_test_space(basis: HatBasis, kind, s: float) -> HatBasis | CaputoTestSpace:
    """Test functions for ``kind``: the hats (RL) or corrected hats (Caputo)."""
    if DerivativeKind.parse(kind) is DerivativeKind.Caputo:
        return caputo_gammas(basis, s)
    return basis
