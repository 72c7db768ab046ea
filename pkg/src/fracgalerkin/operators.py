"""Half-order Riemann-Liouville derivatives of the finite element functions.

For ``phi_i`` the left derivative of order ``s/2`` equals the Abel integral
of order ``beta = 1 - s/2`` of the piecewise-constant ``phi_i'``, i.e. a
second difference of truncated powers ``(x - x_j)_+^beta``. The right
derivative is its mirror image under ``x -> 1 - x``.
"""

from __future__ import annotations

import numpy as np

from fracgalerkin.fe_space import FEFunction, UniformMesh
from fracgalerkin.fractional import PowerSum, gamma, gamma_ratio, powersum_rl_derivative

_CHUNK = 4096


def _tpow(a, beta: float):
    return np.maximum(a, 0.0) ** beta


def _second_difference(mesh: UniformMesh, i: int, s: float, y, sign: int):
    if not 1 <= i <= mesh.n_interior:
        raise IndexError(f"hat index {i} outside 1..{mesh.n_interior}")
    beta = 1.0 - 0.5 * s
    h = mesh.h
    y = np.asarray(y, dtype=float)
    xl, xc, xr = (i - 1) * h, i * h, (i + 1) * h
    if sign > 0:
        d = _tpow(y - xl, beta) - 2.0 * _tpow(y - xc, beta) + _tpow(y - xr, beta)
    else:
        d = _tpow(xr - y, beta) - 2.0 * _tpow(xc - y, beta) + _tpow(xl - y, beta)
    return d / (h * float(gamma(2.0 - 0.5 * s)))


def left_halfderiv_hat(mesh: UniformMesh, i: int, s: float, x):
    """Left Riemann-Liouville derivative of order ``s/2`` of ``phi_i`` at ``x``."""
    return _second_difference(mesh, i, s, x, +1)


def right_halfderiv_hat(mesh: UniformMesh, i: int, s: float, x):
    """Right Riemann-Liouville derivative of order ``s/2`` of ``phi_i`` at ``x``.

    Equals ``left_halfderiv_hat(mesh, N - i, s, 1 - x)``.
    """
    return _second_difference(mesh, i, s, x, -1)


def hat_kinks(mesh: UniformMesh, i: int) -> tuple[float, float, float]:
    """Points where the half-derivative profiles of ``phi_i`` are not smooth."""
    h = mesh.h
    return (i - 1) * h, i * h, min((i + 1) * h, 1.0)


def right_halfderiv_caputo_correction(s: float, x):
    """Right derivative of order ``s/2`` of ``(1 - x)^(s - 1)``.

    Equal to ``Gamma(s) / Gamma(s/2) * (1 - x)^(s/2 - 1)``, singular at 1.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x >= 1.0):
        raise ValueError("the correction derivative is singular at x = 1")
    return float(gamma_ratio(s, 0.5 * s)) * (1.0 - x) ** (0.5 * s - 1.0)


def left_halfderiv_powersum(u: PowerSum, s: float, x):
    """Left Riemann-Liouville derivative of order ``s/2`` of a power sum."""
    du = powersum_rl_derivative(u, 0.5 * s)
    x = np.asarray(x, dtype=float)
    if du.min_exponent < 0.0 and np.any(x == 0.0):
        raise ValueError("half derivative is singular at x = 0")
    return du(x)


def left_halfderiv_fe(u_h: FEFunction, s: float, x) -> np.ndarray:
    """Left derivative of order ``s/2`` of a finite element function.

    Uses ``sum_m J_m (x - x_m)_+^beta / Gamma(1 + beta)`` where ``J_m`` is
    the jump of ``u_h'`` at node ``m``.
    """
    beta = 1.0 - 0.5 * s
    slopes = u_h.slopes
    jumps = np.diff(np.concatenate([[0.0], slopes]))  # J_0 .. J_{N-1}
    nodes = u_h.mesh.nodes[:-1]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    for start in range(0, x.size, _CHUNK):
        xc = x[start : start + _CHUNK]
        out[start : start + _CHUNK] = _tpow(xc[:, None] - nodes[None, :], beta) @ jumps
    return out / float(gamma(1.0 + beta))
