"""Newton iteration for the discrete system ``K c + B(c) = F``."""

from __future__ import annotations

import logging
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from fracgalerkin.assembly import DiscreteSystem
from fracgalerkin.fe_space import FEFunction, interpolate

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-13


class SingularMatrixError(np.linalg.LinAlgError):
    """LU factorization hit a pivot below ``PIVOT_TOL`` times the matrix scale."""


class NewtonDivergenceError(RuntimeError):
    """Residual kept growing although damping reached its floor."""


def lu_solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``m x = rhs`` by LU with partial pivoting."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or not np.all(np.isfinite(rhs)):
        raise ValueError("matrix and right-hand side must be finite")
    if m.shape[0] == 0:
        return np.zeros(0)
    with warnings.catch_warnings():
        # exact singularity is reported below through the pivot check
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    scale = np.max(np.abs(m))
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or pivots.min() < PIVOT_TOL * scale:
        k = int(np.argmin(pivots))
        raise SingularMatrixError(f"pivot {pivots[k]:.3e} at row {k} below {PIVOT_TOL:g} * scale")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


@dataclass(frozen=True)
class NewtonConfig:
    max_iters: int = 30
    #: stop when ||r|| <= residual_tol * ||F|| (absolute if F = 0)
    residual_tol: float = 1e-12
    #: halve the step while the residual grows, down to ``min_damping``
    damping: bool = True
    min_damping: float = 1.0 / 16.0
    #: callable interpolated as the starting iterate; ``None`` is zero
    initial_guess: Callable | None = None

    def __post_init__(self) -> None:
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not self.residual_tol > 0.0:
            raise ValueError("residual_tol must be positive")
        if not 0.0 < self.min_damping <= 1.0:
            raise ValueError("min_damping must lie in (0, 1]")


@dataclass
class SolveReport:
    iterations: int = 0
    residuals: list[float] = field(default_factory=list)
    converged: bool = False
    damped_steps: int = 0
    message: str = ""


def residual(u_h: FEFunction, system: DiscreteSystem) -> np.ndarray:
    """``F - K c - B(u_h)``."""
    return system.load - system.stiffness @ u_h.coefficients - system.nonlinear(u_h)


def newton_solve(
    system: DiscreteSystem, cfg: NewtonConfig = NewtonConfig()
) -> tuple[FEFunction, SolveReport]:
    """Run Newton's method from ``cfg.initial_guess``.

    Returns the last iterate and a report; non-convergence within
    ``max_iters`` is reported through ``report.converged``. Singular
    Jacobians and divergence with minimal damping raise.
    """
    basis = system.basis
    if cfg.initial_guess is None:
        u = FEFunction(basis, np.zeros(basis.dim))
    else:
        u = interpolate(cfg.initial_guess, basis)

    fnorm = float(np.linalg.norm(system.load))
    tol = cfg.residual_tol * fnorm if fnorm > 0.0 else cfg.residual_tol
    r = residual(u, system)
    rnorm = float(np.linalg.norm(r))
    report = SolveReport(residuals=[rnorm])
    growth = 0

    for it in range(1, cfg.max_iters + 1):
        if rnorm <= tol:
            report.converged = True
            break
        try:
            delta = lu_solve(system.jacobian(u), r)
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"Newton iteration {it}: {exc}") from exc

        lam = 1.0
        while True:
            trial = FEFunction(basis, u.coefficients + lam * delta)
            r_new = residual(trial, system)
            new_norm = float(np.linalg.norm(r_new))
            if new_norm <= rnorm or not cfg.damping or lam <= cfg.min_damping:
                break
            lam *= 0.5
        if lam < 1.0:
            report.damped_steps += 1

        growth = growth + 1 if new_norm > rnorm else 0
        u, r, rnorm = trial, r_new, new_norm
        report.iterations = it
        report.residuals.append(rnorm)
        log.debug("newton it=%d |r|=%.3e damping=%g", it, rnorm, lam)
        if growth >= 3 and (not cfg.damping or lam <= cfg.min_damping):
            if rnorm > report.residuals[0]:
                raise NewtonDivergenceError(
                    f"residual grew for 3 consecutive steps (iteration {it}, |r|={rnorm:.3e})"
                )
            # growth below the starting residual is rounding noise: stagnation
            report.converged = rnorm <= tol
            break
    else:
        report.converged = rnorm <= tol

    if not report.converged:
        report.message = f"no convergence after {report.iterations} iterations (|r|={rnorm:.3e})"
    return u, report
