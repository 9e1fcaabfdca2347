"""
Node relaxations by cutting planes.

At a node the integer problem is relaxed to the semi-infinite LP

    minimize c  subject to  -c <= W(t)·sum a_k phi(t)^k <= c  for all t in T

plus the node's coefficient constraints and a_g >= 1. It is solved exactly on
a finite point set, which grows by the critical points where the current
solution violates the constraint.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Literal, Sequence

from src.config import CUT_MAX_ITERATIONS, LP_BOUND_POINTS
from src.norm import critical_points_above
from src.poly import evaluate
from src.search.base import WorkingProblem, chebyshev_points
from src.search.simplex import Bound, LpStatus, Row, maximize, minimize

logger = logging.getLogger(__name__)

ConstraintKind = Literal["fixed", "lower", "upper"]


class InfeasibleError(ValueError):
    """The coefficient constraints of a node admit no real solution."""


# ── Constraints ──────────────────────────────────────────────────────────────

@dataclass(frozen=True, order=True)
class CoefConstraint:
    index: int
    kind: ConstraintKind
    value: int


@dataclass(frozen=True)
class ConstraintSet:
    """At most one constraint of each kind per coefficient index."""

    items: tuple[CoefConstraint, ...] = ()

    def __post_init__(self) -> None:
        items = tuple(sorted(self.items))
        seen: set[tuple[int, str]] = set()
        for c in items:
            if (c.index, c.kind) in seen:
                raise ValueError(f"two {c.kind} constraints on a_{c.index}")
            seen.add((c.index, c.kind))
        object.__setattr__(self, "items", items)
        for index in {c.index for c in items}:
            lo, hi = self.bounds(index)
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"conflicting constraints on a_{index}")

    def __iter__(self) -> Iterator[CoefConstraint]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def bounds(self, index: int) -> tuple[int | None, int | None]:
        lo = hi = None
        for c in self.items:
            if c.index != index:
                continue
            if c.kind == "fixed":
                return c.value, c.value
            if c.kind == "lower":
                lo = c.value
            else:
                hi = c.value
        return lo, hi

    def fixed_value(self, index: int) -> int | None:
        lo, hi = self.bounds(index)
        return lo if lo is not None and lo == hi else None

    def fixed_prefix(self) -> tuple[int, ...]:
        """Values of a_0, a_1, ... up to the first coefficient that is not fixed."""
        out: list[int] = []
        while (v := self.fixed_value(len(out))) is not None:
            out.append(v)
        return tuple(out)

    def restrict(self, index: int, lo: int | None, hi: int | None) -> ConstraintSet | None:
        """Intersect a_index with [lo, hi]; None when the result is empty."""
        old_lo, old_hi = self.bounds(index)
        if old_lo is not None:
            lo = old_lo if lo is None else max(lo, old_lo)
        if old_hi is not None:
            hi = old_hi if hi is None else min(hi, old_hi)
        if lo is not None and hi is not None and lo > hi:
            return None
        rest = [c for c in self.items if c.index != index]
        if lo is not None and lo == hi:
            rest.append(CoefConstraint(index, "fixed", lo))
        else:
            if lo is not None:
                rest.append(CoefConstraint(index, "lower", lo))
            if hi is not None:
                rest.append(CoefConstraint(index, "upper", hi))
        return ConstraintSet(tuple(rest))

    def admits(self, coeffs: Sequence[int]) -> bool:
        for c in self.items:
            a = coeffs[c.index] if c.index < len(coeffs) else 0
            if (c.kind == "fixed" and a != c.value or c.kind == "lower" and a < c.value
                    or c.kind == "upper" and a > c.value):
                return False
        return True

    def lp_bounds(self, g: int) -> list[Bound]:
        """Per-coefficient LP bounds including the implicit a_g >= 1."""
        out: list[Bound] = []
        for k in range(g + 1):
            lo, hi = self.bounds(k)
            if k == g:
                lo = 1 if lo is None else max(lo, 1)
            out.append((None if lo is None else Fraction(lo),
                        None if hi is None else Fraction(hi)))
        return out


# ── Discretized LP ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LpSolution:
    a_bar: tuple[Fraction, ...]
    c_bar: Fraction
    active_points: tuple[Fraction, ...] = ()
    iterations: int = 1
    history: tuple[Fraction, ...] = ()     # c_bar after each cut round


def _norm_rows(problem: WorkingProblem, points: Iterable[Fraction]) -> list[Row]:
    """-c <= B(t)·a <= c as two rows over (a_0..a_g, c)."""
    rows: list[Row] = []
    for t in points:
        B = problem.basis_values(t)
        rows.append((list(B) + [Fraction(-1)], Fraction(0)))
        rows.append(([-b for b in B] + [Fraction(-1)], Fraction(0)))
    return rows


def solve_discretized_lp(problem: WorkingProblem, points: Sequence[Fraction],
                         constraints: ConstraintSet = ConstraintSet()) -> LpSolution:
    """Exact optimum of the LP restricted to ``points``."""
    if not points:
        raise ValueError("at least one discretization point is required")
    for t in points:
        if t not in problem.domain:
            raise ValueError(f"point {t} lies outside {problem.domain}")
    g = problem.g
    objective = [Fraction(0)] * (g + 1) + [Fraction(1)]
    bounds = constraints.lp_bounds(g) + [(Fraction(0), None)]
    result = minimize(objective, _norm_rows(problem, points), bounds)
    if result.status is LpStatus.INFEASIBLE:
        raise InfeasibleError(f"constraints {list(constraints)} are infeasible")
    if result.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"unexpected LP status {result.status}")
    a_bar, c_bar = result.x[:-1], result.x[-1]
    active = tuple(t for t in points
                   if abs(sum(b * a for b, a in zip(problem.basis_values(t), a_bar))) == c_bar)
    return LpSolution(a_bar=tuple(a_bar), c_bar=c_bar, active_points=active)


def violating_points(problem: WorkingProblem, solution: LpSolution) -> list[Fraction]:
    """Critical-point midpoints where |W·G(phi)| provably exceeds c_bar."""
    lifted, scale = problem.lift_rational(solution.a_bar)
    if lifted.degree() < 1:
        return []
    threshold = solution.c_bar * scale
    out = []
    for bracket in critical_points_above(lifted, problem.domain, threshold):
        m = bracket.mid
        if abs(evaluate(lifted, m)) > threshold:
            out.append(m)
    return out


def cutting_plane_solve(problem: WorkingProblem,
                        constraints: ConstraintSet = ConstraintSet(),
                        eps: Fraction = Fraction(0),
                        T0: Sequence[Fraction] | None = None,
                        max_iterations: int = CUT_MAX_ITERATIONS) -> tuple[LpSolution, bool]:
    """Grow the point set until no constraint is violated or c_bar stalls.

    Every returned c_bar is a lower bound for the node's integer problem, since
    it solves a relaxation over finitely many points. The flag is False only
    when ``max_iterations`` ran out.
    """
    points = set(T0 if T0 is not None else problem.sample_points())
    points.update((problem.domain.lo, problem.domain.hi))
    previous: Fraction | None = None
    history: list[Fraction] = []
    for iteration in range(1, max_iterations + 1):
        solution = solve_discretized_lp(problem, sorted(points), constraints)
        history.append(solution.c_bar)
        solution = LpSolution(solution.a_bar, solution.c_bar, solution.active_points, iteration,
                              tuple(history))
        new = [t for t in violating_points(problem, solution) if t not in points]
        if not new:
            return solution, True
        if previous is not None and abs(solution.c_bar - previous) < eps:
            return solution, True
        logger.debug("Cut %d: c_bar=%.12e, %d new points.", iteration,
                     float(solution.c_bar), len(new))
        points.update(new)
        previous = solution.c_bar
    logger.warning("Cutting plane stopped after %d iterations (c_bar=%.12e).",
                   max_iterations, float(solution.c_bar))
    return solution, False


# ── Ranges of linear forms ───────────────────────────────────────────────────

def linear_form_range(problem: WorkingProblem, weights: Sequence[Fraction],
                      c_bound: Fraction,
                      constraints: ConstraintSet = ConstraintSet(),
                      points: Sequence[Fraction] | None = None,
                      ) -> tuple[Fraction | None, Fraction | None] | None:
    """[min, max] of weights·a over coefficient vectors whose discretized norm is <= c_bound.

    The discretization only drops constraints, so the range contains every
    admissible integer vector. ``None`` means no vector qualifies; a ``None``
    end means that side is unbounded on these points.
    """
    pts = points if points is not None else chebyshev_points(problem.domain, LP_BOUND_POINTS)
    g = problem.g
    rows: list[Row] = []
    for t in pts:
        B = problem.basis_values(t)
        rows.append((list(B), c_bound))
        rows.append(([-b for b in B], c_bound))
    bounds = constraints.lp_bounds(g)
    w = [Fraction(x) for x in weights]
    low = minimize(w, rows, bounds)
    if low.status is LpStatus.INFEASIBLE:
        return None
    high = maximize(w, rows, bounds)
    return (low.value if low.optimal else None, high.value if high.optimal else None)


def integer_range(problem: WorkingProblem, weights: Sequence[Fraction], c_bound: Fraction,
                  constraints: ConstraintSet = ConstraintSet(),
                  points: Sequence[Fraction] | None = None) -> tuple[int | None, int | None] | None:
    """:func:`linear_form_range` rounded inward to integers."""
    rng = linear_form_range(problem, weights, c_bound, constraints, points)
    if rng is None:
        return None
    lo, hi = rng
    return (None if lo is None else math.ceil(lo), None if hi is None else math.floor(hi))
