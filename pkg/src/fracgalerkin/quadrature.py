"""Gauss-Legendre rules and graded composite integration.

All singularity locations in this package are known analytically, so instead
of adaptive integration we split the interval at declared kinks and grade the
pieces geometrically toward declared algebraic singularities.
"""

from __future__ import annotations

import functools
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

DEFAULT_ORDER = 16
DEFAULT_RATIO = 0.15
DEFAULT_LEVELS = 12
#: Breakpoints closer than this are merged.
DEDUP_TOL = 1e-14


class QuadratureError(ArithmeticError):
    """Raised when an integrand produces non-finite values."""


@dataclass(frozen=True)
class GaussRule:
    """Gauss-Legendre rule on the reference interval ``[-1, 1]``."""

    order: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def on(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights mapped to ``[a, b]``."""
        half = 0.5 * (b - a)
        return a + half * (self.nodes + 1.0), half * self.weights


def _legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values of P_n and P_n' by the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@functools.lru_cache(maxsize=None)
def gauss_rule(order: int) -> GaussRule:
    """Gauss-Legendre rule with ``order`` points (``1 <= order <= 64``).

    Nodes are the roots of the Legendre polynomial found by Newton iteration
    from the Tricomi initial guesses.
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= 64:
        raise ValueError(f"Gauss rule order must be an integer in [1, 64], got {order!r}")
    n = int(order)
    if n == 1:
        nodes = np.array([0.0])
        weights = np.array([2.0])
    else:
        k = np.arange(1, n // 2 + 1)
        x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
        for _ in range(100):
            p, dp = _legendre(n, x)
            dx = p / dp
            x = x - dx
            if np.max(np.abs(dx)) < 1e-16:
                break
        _, dp = _legendre(n, x)
        w = 2.0 / ((1.0 - x * x) * dp * dp)
        # roots come out in decreasing order, positive half only
        if n % 2:
            _, dp0 = _legendre(n, np.array([0.0]))
            nodes = np.concatenate([-x, [0.0], x[::-1]])
            weights = np.concatenate([w, 2.0 / dp0**2, w[::-1]])
        else:
            nodes = np.concatenate([-x, x[::-1]])
            weights = np.concatenate([w, w[::-1]])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return GaussRule(n, nodes, weights)


@dataclass(frozen=True)
class QuadratureSettings:
    """Rule order and grading used for every plan built by a solver run."""

    order: int = DEFAULT_ORDER
    ratio: float = DEFAULT_RATIO
    levels: int = DEFAULT_LEVELS
    #: grading levels at x = 0, where solutions and data are least regular
    origin_levels: int = 60

    def __post_init__(self) -> None:
        if not 1 <= self.order <= 64:
            raise ValueError(f"quadrature order must lie in [1, 64], got {self.order}")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"grading ratio must lie in (0, 1), got {self.ratio}")
        if self.levels < 0 or self.origin_levels < 0:
            raise ValueError("grading levels must be non-negative")

    def kwargs(self) -> dict:
        return {"order": self.order, "ratio": self.ratio, "levels": self.levels}


def _dedup(points: Iterable[float], tol: float = DEDUP_TOL) -> list[float]:
    out: list[float] = []
    for p in sorted(float(p) for p in points):
        if out and p - out[-1] <= tol:
            continue
        out.append(p)
    return out


@dataclass(frozen=True)
class CompositePlan:
    """Breakpoints plus grading data describing a composite Gauss rule.

    Each piece between consecutive breakpoints is integrated with ``rule``.
    A piece touching a flagged singular point is subdivided geometrically
    toward it (``levels`` cuts with ratio ``ratio``, or the per-point count
    in ``levels_at``); a piece with both ends flagged is first split at its
    midpoint.
    """

    breakpoints: tuple[float, ...]
    singular: frozenset[float]
    ratio: float
    levels: int
    rule: GaussRule
    levels_at: tuple[tuple[float, int], ...] = ()

    def __post_init__(self) -> None:
        if len(self.breakpoints) < 2:
            raise ValueError("a plan needs at least two breakpoints")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"grading ratio must lie in (0, 1), got {self.ratio}")
        if self.levels < 0:
            raise ValueError("grading levels must be non-negative")
        if not self.singular <= set(self.breakpoints):
            raise ValueError("singular points must be breakpoints")

    @property
    def a(self) -> float:
        return self.breakpoints[0]

    @property
    def b(self) -> float:
        return self.breakpoints[-1]

    def _levels(self, p: float) -> int:
        return dict(self.levels_at).get(p, self.levels)

    def _graded(self, a: float, b: float, toward_left: bool) -> list[float]:
        length = b - a
        n = self._levels(a if toward_left else b)
        cuts = [length * self.ratio**lvl for lvl in range(1, n + 1)]
        if toward_left:
            return [a + c for c in cuts]
        return [b - c for c in cuts]

    @functools.cached_property
    def pieces(self) -> np.ndarray:
        """Array of shape ``(n, 2)`` with the final integration pieces."""
        cuts: list[float] = []
        for a, b in zip(self.breakpoints, self.breakpoints[1:]):
            sa, sb = a in self.singular, b in self.singular
            cuts.append(a)
            if sa and sb:
                m = 0.5 * (a + b)
                cuts += self._graded(a, m, True)
                cuts.append(m)
                cuts += self._graded(m, b, False)
            elif sa:
                cuts += self._graded(a, b, True)
            elif sb:
                cuts += self._graded(a, b, False)
        cuts.append(self.b)
        cuts = sorted(set(cuts))
        return np.array([cuts[:-1], cuts[1:]]).T

    @functools.cached_property
    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened quadrature nodes and weights of the whole plan."""
        p = self.pieces
        half = 0.5 * (p[:, 1] - p[:, 0])[:, None]
        x = p[:, 0][:, None] + half * (self.rule.nodes[None, :] + 1.0)
        w = half * self.rule.weights[None, :]
        x.setflags(write=False)
        return x.ravel(), w.ravel()

    def piece_of(self, index: int) -> tuple[float, float]:
        a, b = self.pieces[index // self.rule.order]
        return float(a), float(b)


def make_plan(
    a: float,
    b: float,
    kinks: Iterable[float] = (),
    singular: Iterable[float] = (),
    *,
    order: int = DEFAULT_ORDER,
    ratio: float = DEFAULT_RATIO,
    levels: int = DEFAULT_LEVELS,
    levels_at: dict[float, int] | None = None,
) -> CompositePlan:
    """Plan on ``[a, b]`` split at ``kinks`` and graded toward ``singular``.

    Points outside ``[a, b]`` are ignored; near-duplicates are merged and a
    flagged point snaps to the surviving breakpoint. ``levels_at`` overrides
    the number of grading levels at individual singular points.
    """
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    pts = _dedup([a, b, *(k for k in kinks if a < k < b)])
    pts[0], pts[-1] = a, b
    flagged = set()
    for s in singular:
        if a - DEDUP_TOL <= s <= b + DEDUP_TOL:
            j = int(np.argmin([abs(p - s) for p in pts]))
            if abs(pts[j] - s) > DEDUP_TOL:
                pts.insert(int(np.searchsorted(pts, s)), float(s))
                j = pts.index(float(s))
            flagged.add(pts[j])
    overrides = []
    for p, n in (levels_at or {}).items():
        j = int(np.argmin([abs(q - p) for q in pts]))
        if pts[j] in flagged and abs(pts[j] - p) <= DEDUP_TOL:
            overrides.append((pts[j], int(n)))
    return CompositePlan(
        tuple(pts), frozenset(flagged), ratio, levels, gauss_rule(order), tuple(overrides)
    )


def plan_for_pair(
    mesh_nodes: Iterable[float],
    extra_kinks: Iterable[float] = (),
    singular: Iterable[float] = (),
    **kwargs,
) -> CompositePlan:
    """Plan on ``[0, 1]`` split at the union of mesh nodes and extra kinks."""
    return make_plan(0.0, 1.0, [*mesh_nodes, *extra_kinks], singular, **kwargs)


def integrate(f: Callable, plan: CompositePlan) -> float:
    """Integrate the vectorized callable ``f`` with a composite plan."""
    x, w = plan.points
    values = np.asarray(f(x), dtype=float)
    if values.shape != x.shape:
        values = np.broadcast_to(values, x.shape)
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.argmax(bad))
        a, b = plan.piece_of(i)
        raise QuadratureError(
            f"integrand is not finite at x={x[i]!r} on piece [{a!r}, {b!r}]"
        )
    return float(np.dot(values, w))
