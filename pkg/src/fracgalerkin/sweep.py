"""Refinement sweeps: solve on meshes ``k = k_min .. k_max`` and collect errors."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from fracgalerkin.assembly import AssemblyError, assemble_stiffness, build_system
from fracgalerkin.error_analysis import (
    ConvergenceReport,
    LevelResult,
    hs2_error,
    l2_error,
    problem_rate,
)
from fracgalerkin.fe_space import K_MAX, K_MIN, FEFunction, HatBasis, build_mesh
from fracgalerkin.fractional import DerivativeKind, check_bvp_order
from fracgalerkin.newton import (
    NewtonConfig,
    NewtonDivergenceError,
    SingularMatrixError,
    SolveReport,
    newton_solve,
)
from fracgalerkin.problems import Problem, custom_problem, get_problem
from fracgalerkin.quadrature import QuadratureError, QuadratureSettings

log = logging.getLogger(__name__)

FORMATS = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines the output of a sweep."""

    problem: str = "example1"
    kind: DerivativeKind = DerivativeKind.Caputo
    s_values: tuple[float, ...] = (1.75,)
    params: dict = field(default_factory=dict)
    #: problem definition used when ``problem == "custom"``
    custom: dict | None = None
    k_min: int = -1
    k_max: int = 5
    newton: NewtonConfig = NewtonConfig()
    quad: QuadratureSettings = QuadratureSettings()
    format: str = "csv"
    out: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DerivativeKind.parse(self.kind))
        if not self.s_values:
            raise ValueError("at least one s value is required")
        object.__setattr__(self, "s_values", tuple(check_bvp_order(s) for s in self.s_values))
        for name in ("k_min", "k_max"):
            k = getattr(self, name)
            if int(k) != k or not K_MIN <= k <= K_MAX:
                raise ValueError(f"{name} must be an integer in [{K_MIN}, {K_MAX}], got {k}")
        if self.k_min > self.k_max:
            raise ValueError(f"empty refinement range k = {self.k_min}..{self.k_max}")
        if self.format not in FORMATS:
            raise ValueError(f"output format must be one of {FORMATS}, got {self.format!r}")
        if self.problem == "custom" and self.custom is None:
            raise ValueError("problem 'custom' needs a 'custom' definition")

    @property
    def levels(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def make_problem(self, s: float) -> Problem:
        if self.problem == "custom":
            spec = dict(self.custom) | {"kind": self.kind.value, "s": s}
            return custom_problem(spec)
        return get_problem(self.problem, s, self.kind, **self.params)

    def to_dict(self) -> dict:
        """Plain-data echo of the configuration with all defaults filled in."""
        return {
            "problem": self.problem,
            "kind": self.kind.value,
            "s": list(self.s_values),
            "params": dict(self.params),
            "custom": None if self.custom is None else dict(self.custom),
            "k_min": self.k_min,
            "k_max": self.k_max,
            "newton": {
                "max_iters": self.newton.max_iters,
                "tol": self.newton.residual_tol,
                "damping": self.newton.damping,
            },
            "quadrature": {
                "order": self.quad.order,
                "ratio": self.quad.ratio,
                "levels": self.quad.levels,
                "origin_levels": self.quad.origin_levels,
            },
            "format": self.format,
            "out": self.out,
        }


class SweepError(RuntimeError):
    """A level of the sweep failed; ``report`` holds the levels finished so far."""

    def __init__(self, message: str, report: ConvergenceReport):
        super().__init__(message)
        self.report = report


SOLVER_ERRORS = (
    SingularMatrixError,
    NewtonDivergenceError,
    AssemblyError,
    QuadratureError,
)


@dataclass
class LevelSolution:
    u_h: FEFunction
    solve: SolveReport
    result: LevelResult


def solve_level(
    problem: Problem,
    k: int,
    quad: QuadratureSettings = QuadratureSettings(),
    newton: NewtonConfig = NewtonConfig(),
    stiffness: np.ndarray | None = None,
) -> LevelSolution:
    """Solve ``problem`` on the level-``k`` mesh and measure its errors."""
    mesh = build_mesh(k)
    system = build_system(problem, mesh, quad, stiffness=stiffness)
    u_h, rep = newton_solve(system, newton)
    if problem.exact is not None:
        e2 = l2_error(u_h, problem.exact, quad)
        eh = hs2_error(u_h, problem.exact, problem.s, quad)
    else:
        e2 = eh = float("nan")
    row = LevelResult(k, mesh.h, mesh.n_cells, e2, eh, rep.iterations, rep.converged)
    return LevelSolution(u_h, rep, row)


def run_sweep_for(problem: Problem, cfg: RunConfig) -> ConvergenceReport:
    """Refinement study of one problem; raises :class:`SweepError` on failure.

    Non-convergence of Newton within ``max_iters`` does not stop the sweep;
    the row is flagged and :attr:`ConvergenceReport.converged` is false.
    """
    report = ConvergenceReport(
        problem=problem.name,
        kind=problem.kind.value,
        s=problem.s,
        theoretical_rate=problem_rate(problem),
        params=dict(problem.params),
    )
    for k in cfg.levels:
        basis = HatBasis(build_mesh(k))
        try:
            K = assemble_stiffness(basis, problem.s, problem.kind, quad=cfg.quad)
            level = solve_level(problem, k, cfg.quad, cfg.newton, stiffness=K)
        except SOLVER_ERRORS as exc:
            raise SweepError(f"level k={k}: {exc}", report) from exc
        report.rows.append(level.result)
        log.info(
            "%s %s s=%.4g k=%d: err_l2=%.3e err_hs2=%.3e iters=%d",
            problem.name,
            problem.kind.value,
            problem.s,
            k,
            level.result.err_l2,
            level.result.err_hs2,
            level.result.newton_iters,
        )
    return report


def run_sweep(cfg: RunConfig) -> list[ConvergenceReport]:
    """One report per value of ``s``, in the order given."""
    return [run_sweep_for(cfg.make_problem(s), cfg) for s in cfg.s_values]
