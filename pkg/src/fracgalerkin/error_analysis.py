"""Error norms, convergence rates and predicted rates."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from fracgalerkin.fe_space import FEFunction
from fracgalerkin.fractional import DerivativeKind, PowerSum, check_bvp_order
from fracgalerkin.operators import left_halfderiv_fe, left_halfderiv_powersum
from fracgalerkin.quadrature import QuadratureSettings, integrate, plan_for_pair

#: grading levels toward interior nodes for the fractional seminorm
NODE_LEVELS = 8


def l2_error(u_h: FEFunction, exact: PowerSum, quad: QuadratureSettings = QuadratureSettings()) -> float:
    """``||u - u_h||_{L^2(0, 1)}``."""
    plan = plan_for_pair(
        u_h.mesh.nodes, (), {0.0}, levels_at={0.0: quad.origin_levels}, **quad.kwargs()
    )
    return math.sqrt(max(integrate(lambda x: (exact(x) - u_h(x)) ** 2, plan), 0.0))


def hs2_error(
    u_h: FEFunction,
    exact: PowerSum,
    s: float,
    quad: QuadratureSettings = QuadratureSettings(),
    node_levels: int = NODE_LEVELS,
) -> float:
    """``||D^{s/2} (u - u_h)||_{L^2(0, 1)}`` with the left Riemann-Liouville derivative.

    This seminorm is equivalent to the ``H^{s/2}`` norm on functions vanishing
    at both ends. The ``(x - x_m)_+^(1 - s/2)`` terms of ``D^{s/2} u_h`` make
    every node an algebraic singularity, so all nodes are graded.
    """
    s = check_bvp_order(s)
    nodes = u_h.mesh.nodes
    kw = quad.kwargs() | {"levels": node_levels}
    plan = plan_for_pair(nodes, (), nodes[:-1], levels_at={0.0: quad.origin_levels}, **kw)

    def integrand(x):
        return (left_halfderiv_powersum(exact, s, x) - left_halfderiv_fe(u_h, s, x)) ** 2

    return math.sqrt(max(integrate(integrand, plan), 0.0))


def theoretical_rate(kind: DerivativeKind | str, s: float, alpha: float | None = None) -> float:
    """Predicted ``H^{s/2}`` convergence order ``gamma - s/2``.

    * Riemann-Liouville: ``gamma = s - 1/2``;
    * Caputo with ``f`` only in ``L^2`` (``alpha=None``): ``gamma = s``;
    * Caputo with ``f`` in ``H^alpha``, ``0 <= alpha < 1/2`` and
      ``alpha + s > 3/2``: ``gamma = min(alpha + s, 2)``.
    """
    kind = DerivativeKind.parse(kind)
    s = check_bvp_order(s)
    if kind is DerivativeKind.RiemannLiouville:
        gam = s - 0.5
    elif alpha is None:
        gam = s
    else:
        if not 0.0 <= alpha < 0.5:
            raise ValueError(f"data regularity alpha must lie in [0, 1/2), got {alpha}")
        if not alpha + s > 1.5:
            raise ValueError(f"no rate predicted for alpha + s = {alpha + s} <= 3/2")
        gam = min(alpha + s, 2.0)
    return gam - 0.5 * s


def problem_rate(problem) -> float | None:
    """Predicted rate for a registry problem, or ``None`` if none is claimed."""
    if not problem.rate_claim:
        return None
    try:
        return theoretical_rate(problem.kind, problem.s, problem.data_regularity)
    except ValueError:
        return None


@dataclass(frozen=True)
class RateSummary:
    rates: tuple[float, ...]
    #: last successive rate, the number quoted per table row
    final: float
    #: least-squares slope of -log2(error) against the level index
    slope: float


def rate_table(errors: Sequence[float]) -> RateSummary:
    """Successive-halving rates ``log2(e_k / e_{k+1})``."""
    e = np.asarray(errors, dtype=float)
    if e.size < 2:
        raise ValueError("need at least two refinement levels to compute rates")
    if np.any(~(e > 0.0)) or not np.all(np.isfinite(e)):
        raise ValueError("errors must be positive and finite")
    rates = np.log2(e[:-1] / e[1:])
    slope = -np.polyfit(np.arange(e.size), np.log2(e), 1)[0]
    return RateSummary(tuple(float(r) for r in rates), float(rates[-1]), float(slope))


@dataclass
class LevelResult:
    k: int
    h: float
    N: int
    err_l2: float
    err_hs2: float
    newton_iters: int
    converged: bool = True


@dataclass
class ConvergenceReport:
    """Errors per refinement level for one ``(problem, kind, s)``."""

    problem: str
    kind: str
    s: float
    theoretical_rate: float | None = None
    params: dict = field(default_factory=dict)
    rows: list[LevelResult] = field(default_factory=list)

    def _rates(self, attr: str) -> list[float | None]:
        vals = [getattr(r, attr) for r in self.rows]
        if not vals:
            return []
        out: list[float | None] = [None]
        for a, b in zip(vals, vals[1:]):
            out.append(math.log2(a / b) if a > 0 and b > 0 else None)
        return out

    @property
    def rates_l2(self) -> list[float | None]:
        return self._rates("err_l2")

    @property
    def rates_hs2(self) -> list[float | None]:
        return self._rates("err_hs2")

    def summary(self, attr: str = "err_hs2") -> RateSummary:
        return rate_table([getattr(r, attr) for r in self.rows])

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.rows)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rates_l2"] = self.rates_l2
        d["rates_hs2"] = self.rates_hs2
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ConvergenceReport:
        d = {k: v for k, v in d.items() if k not in ("rates_l2", "rates_hs2")}
        rows = [LevelResult(**r) for r in d.pop("rows", [])]
        return cls(rows=rows, **d)
