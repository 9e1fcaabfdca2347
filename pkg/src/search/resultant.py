"""
Exhaustive search over resultant vectors.

For g+1 distinct fractions w_i/v_i the integers r_i = v_i^g G(w_i/v_i)
determine G. Solving a = T·r over Q gives a_k = (1/m_k)·sum t_ki r_i, so
integer coefficients force the congruences S·r = 0 (mod M) with
M = lcm(m_k). S is brought to upper-triangular form by unimodular row
operations built from the extended Euclidean algorithm, and the admissible
r are enumerated by back-substitution, one linear congruence per level.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from sympy import Matrix
from sympy.core.intfunc import igcdex

from src.config import DEFAULT_REL_TOL, POOL_MAX_DENOMINATOR
from src.poly import IntPoly
from src.records import SearchStats
from src.search.base import BaseSearch, EventCallback, Incumbent, SearchEvent, WorkingProblem
from src.search.lsip import ConstraintSet, integer_range

logger = logging.getLogger(__name__)


class PoolExhaustedError(ValueError):
    """Too few candidate fractions for the number of unknowns."""


class SingularSystemError(ValueError):
    """The evaluation matrix is not invertible (repeated fractions)."""


class BadPointsError(ValueError):
    """A resultant has neither a direct nor an LP bound at the chosen point."""


class EmptySearchError(RuntimeError):
    """No integer polynomial below the bound was found."""


# ── Points ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class EvalPoints:
    """Pairs (v_i, w_i) standing for the linear polynomials v_i x - w_i."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        pairs = tuple((int(v), int(w)) for v, w in self.pairs)
        if any(v < 1 for v, _ in pairs):
            raise ValueError("denominators v_i must be positive")
        if len({Fraction(w, v) for v, w in pairs}) != len(pairs):
            raise SingularSystemError("evaluation fractions must be distinct")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def fractions(self) -> list[Fraction]:
        return [Fraction(w, v) for v, w in self.pairs]


def candidate_pool(problem: WorkingProblem,
                   max_denominator: int = POOL_MAX_DENOMINATOR) -> list[tuple[int, int]]:
    """Reduced w/v with v <= max_denominator in the range of G's argument, plus its ends."""
    lo, hi = problem.y_range.lo, problem.y_range.hi
    seen: set[Fraction] = set()
    pool: list[tuple[int, int]] = []
    for end in (lo, hi):
        if end not in seen:
            seen.add(end)
            pool.append((end.denominator, end.numerator))
    for v in range(1, max_denominator + 1):
        for w in range(math.ceil(lo * v), math.floor(hi * v) + 1):
            f = Fraction(w, v)
            if f.denominator == v and f not in seen:
                seen.add(f)
                pool.append((v, w))
    return pool


def direct_bound(problem: WorkingProblem, point: tuple[int, int], c_n: Fraction,
                 degree: int | None = None) -> int | None:
    """Largest |r| allowed by |W G(phi)| <= c_n at one point, or None if W vanishes there.

    r^2 <= v^(2g) c_n^2 / W^2, and r is an integer, so |r| <= isqrt(floor(.)).
    """
    v, w = point
    g = problem.g if degree is None else degree
    wsq = problem.weight_sq_at(Fraction(w, v))
    if wsq == 0:
        return None
    q = Fraction(v) ** (2 * g) * c_n * c_n / wsq
    return math.isqrt(math.floor(q))


def choose_points(problem: WorkingProblem, c_n: Fraction, count: int | None = None,
                  exclude_zero: bool = False, shift: int = 0,
                  max_denominator: int = POOL_MAX_DENOMINATOR) -> EvalPoints:
    """Greedy pick of the fractions with the narrowest direct bounds.

    ``shift`` is the number of fixed low-order coefficients: the shifted
    unknowns are divided by w^shift, which narrows their ranges accordingly.
    """
    count = problem.g + 1 if count is None else count
    pool = [p for p in candidate_pool(problem, max_denominator) if not (exclude_zero and p[1] == 0)]
    if len(pool) < count:
        raise PoolExhaustedError(
            f"{count} points needed, pool of denominators <= {max_denominator} has {len(pool)}")

    def width(point: tuple[int, int]) -> tuple[int, Fraction, int, int]:
        b = direct_bound(problem, point, c_n)
        if b is None:
            return 1, Fraction(0), point[0], point[1]
        return 0, Fraction(2 * b + 1, abs(point[1]) ** shift or 1), point[0], point[1]

    chosen = sorted(pool, key=width)[:count]
    logger.debug("Chose points %s.", [f"{w}/{v}" for v, w in chosen])
    return EvalPoints(tuple(chosen))


# ── Congruence system ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ResultantSystem:
    points: EvalPoints
    g: int
    t: tuple[tuple[int, ...], ...]        # a_k = (1/m_k) sum_i t[k][i] r_i
    m: tuple[int, ...]
    M: int
    S: tuple[tuple[int, ...], ...]
    S_tri: tuple[tuple[int, ...], ...]

    def evaluation_matrix(self) -> list[list[int]]:
        return evaluation_matrix(self.points, self.g)

    def resultants(self, G: Sequence[int]) -> list[int]:
        """r_i = v_i^g G(w_i/v_i) for a coefficient vector of length g+1."""
        return [sum(e * a for e, a in zip(row, G)) for row in self.evaluation_matrix()]

    def coefficients(self, r: Sequence[int]) -> list[int] | None:
        """Integer coefficients recovered from r, or None when r is not integral."""
        out = []
        for row, mk in zip(self.t, self.m):
            num = sum(tk * ri for tk, ri in zip(row, r))
            if num % mk:
                return None
            out.append(num // mk)
        return out


def evaluation_matrix(points: EvalPoints, g: int) -> list[list[int]]:
    return [[w ** k * v ** (g - k) for k in range(g + 1)] for v, w in points.pairs]


def triangularize(S: Sequence[Sequence[int]], M: int) -> list[list[int]]:
    """Upper-triangular form of S mod M by unimodular row operations.

    The solution set of S·r = 0 (mod M) is unchanged.
    """
    A = [[x % M for x in row] for row in S]
    n = len(A)
    cols = len(A[0]) if A else 0
    for c in range(min(n, cols)):
        for i in range(c + 1, n):
            b = A[i][c]
            if b == 0:
                continue
            a = A[c][c]
            s, t, d = (int(x) for x in igcdex(a, b))
            ad, bd = a // d, b // d
            top = [(s * x + t * y) % M for x, y in zip(A[c], A[i])]
            bottom = [(ad * y - bd * x) % M for x, y in zip(A[c], A[i])]
            A[c], A[i] = top, bottom
    return A


def build_system(points: EvalPoints, g: int) -> ResultantSystem:
    if len(points) != g + 1:
        raise ValueError(f"{g + 1} points needed for degree {g}, got {len(points)}")
    E = Matrix(evaluation_matrix(points, g))
    try:
        inverse = E.inv()
    except ValueError as exc:
        raise SingularSystemError(str(exc)) from exc
    t_rows: list[tuple[int, ...]] = []
    m: list[int] = []
    for k in range(g + 1):
        row = [Fraction(int(x.p), int(x.q)) for x in inverse.row(k)]
        mk = math.lcm(*(x.denominator for x in row))
        m.append(mk)
        t_rows.append(tuple(int(x * mk) for x in row))
    M = math.lcm(*m)
    S = tuple(tuple((M // mk) * tk % M for tk in row) for row, mk in zip(t_rows, m))
    S_tri = tuple(tuple(row) for row in triangularize(S, M))
    logger.debug("System for %d points: M=%d.", len(points), M)
    return ResultantSystem(points, g, tuple(t_rows), tuple(m), M, S, S_tri)


# ── Bounds ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ResultantBounds:
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def width(self, i: int) -> int:
        return self.hi[i] - self.lo[i] + 1

    @property
    def empty(self) -> bool:
        return any(l > h for l, h in zip(self.lo, self.hi))


def bound_resultants(points: EvalPoints, problem: WorkingProblem, c_n: Fraction,
                     constraints: ConstraintSet = ConstraintSet(),
                     use_lp: bool = True) -> ResultantBounds:
    """Per-point integer ranges of r_i from the direct bound and the LP bound, intersected."""
    g = problem.g
    lo: list[int] = []
    hi: list[int] = []
    for v, w in points.pairs:
        low: int | None = None
        high: int | None = None
        direct = direct_bound(problem, (v, w), c_n)
        if direct is not None:
            low, high = -direct, direct
        if use_lp:
            weights = [Fraction(w ** k * v ** (g - k)) for k in range(g + 1)]
            rng = integer_range(problem, weights, c_n, constraints)
            if rng is None:
                # no coefficient vector fits: an empty range
                low, high = 1, 0
            else:
                if rng[0] is not None:
                    low = rng[0] if low is None else max(low, rng[0])
                if rng[1] is not None:
                    high = rng[1] if high is None else min(high, rng[1])
        if low is None or high is None:
            raise BadPointsError(f"no bound for the resultant at {w}/{v}")
        lo.append(low)
        hi.append(high)
    return ResultantBounds(tuple(lo), tuple(hi))


def shift_bounds(points: EvalPoints, bounds: ResultantBounds, fixed: Sequence[int],
                 g: int) -> ResultantBounds:
    """Ranges of (r_i - s_i) / w_i^(j+1), s_i the fixed part v^g sum_(k<=j) a_k (w/v)^k."""
    j1 = len(fixed)
    lo: list[int] = []
    hi: list[int] = []
    for (v, w), l, h in zip(points.pairs, bounds.lo, bounds.hi):
        if w == 0:
            raise ValueError("shifted systems need nonzero evaluation points")
        s = sum(a * w ** k * v ** (g - k) for k, a in enumerate(fixed))
        d = w ** j1
        a, b = Fraction(l - s, d), Fraction(h - s, d)
        a, b = min(a, b), max(a, b)
        lo.append(math.ceil(a))
        hi.append(math.floor(b))
    return ResultantBounds(tuple(lo), tuple(hi))


# ── Enumeration ──────────────────────────────────────────────────────────────

def _solve_linear_congruence(a: int, b: int, M: int) -> tuple[int, int] | None:
    """(x0, step) with a·x = b (mod M) iff x = x0 (mod step)."""
    d = math.gcd(a, M)
    if b % d:
        return None
    step = M // d
    if step == 1:
        return 0, 1
    x0 = (b // d) * pow(a // d, -1, step) % step
    return x0, step


def enumerate_resultants(system: ResultantSystem, bounds: ResultantBounds) -> Iterator[list[int]]:
    """Every integer r inside ``bounds`` with S·r = 0 (mod M).

    The narrowest variable is assigned first; consecutive values at one level
    differ by M/gcd(pivot, M).
    """
    n = system.g + 1
    if bounds.empty:
        return
    # column order: widest first, so the narrowest ends up in the last row
    order = sorted(range(n), key=lambda i: (-bounds.width(i), i))
    M = system.M
    permuted = [[row[c] for c in order] for row in system.S]
    T = triangularize(permuted, M)
    values = [0] * n

    def level(p: int) -> Iterator[list[int]]:
        if p < 0:
            r = [0] * n
            for pos, var in enumerate(order):
                r[var] = values[pos]
            yield r
            return
        row = T[p]
        rhs = -sum(row[q] * values[q] for q in range(p + 1, n)) % M
        solved = _solve_linear_congruence(row[p], rhs, M)
        if solved is None:
            return
        x0, step = solved
        var = order[p]
        lo, hi = bounds.lo[var], bounds.hi[var]
        x = lo + (x0 - lo) % step
        while x <= hi:
            values[p] = x
            yield from level(p - 1)
            x += step

    yield from level(n - 1)


class _Screen:
    """Cheap rejection on sample points before the certified norm."""

    def __init__(self, problem: WorkingProblem) -> None:
        self.rows = [problem.basis_values(t) for t in problem.sample_points()]

    def exceeds(self, coeffs: Sequence[int], upper: Fraction) -> bool:
        return any(abs(sum(b * a for b, a in zip(row, coeffs))) >= upper for row in self.rows)


def search_system(system: ResultantSystem, bounds: ResultantBounds, problem: WorkingProblem,
                  upper: Fraction, prefix: Sequence[int] = (),
                  rel_tol: Fraction = DEFAULT_REL_TOL,
                  stats: SearchStats | None = None,
                  constraints: ConstraintSet | None = None) -> Incumbent | None:
    """Best candidate below ``upper`` among the enumerated resultant vectors.

    Recovered coefficients are appended to ``prefix``, the fixed low-order part;
    vectors outside ``constraints`` are skipped.
    """
    screen = _Screen(problem)
    best: Incumbent | None = None
    prefix = list(prefix)
    for r in enumerate_resultants(system, bounds):
        if stats is not None:
            stats.vectors_enumerated += 1
        tail = system.coefficients(r)
        if tail is None:
            raise ArithmeticError(f"congruences admitted a non-integral vector {r}")
        coeffs = prefix + tail
        if coeffs[-1] < 1 or constraints is not None and not constraints.admits(coeffs):
            continue
        threshold = best.c_star if best is not None else upper
        if screen.exceeds(coeffs, threshold):
            continue
        G = IntPoly(tuple(coeffs))
        if stats is not None:
            stats.candidates_normed += 1
        norm = problem.norm(G, rel_tol)
        if norm.hi < threshold:
            best = Incumbent(G, norm)
            logger.debug("Resultant candidate %s norm <= %.12e", G, float(norm.hi))
    return best


def shifted_search(problem: WorkingProblem, fixed: Sequence[int], upper: Fraction,
                   constraints: ConstraintSet | None = None,
                   rel_tol: Fraction = DEFAULT_REL_TOL,
                   max_denominator: int = POOL_MAX_DENOMINATOR,
                   stats: SearchStats | None = None) -> Incumbent | None:
    """Finish a node whose coefficients a_0..a_j are fixed to ``fixed``.

    The unknowns a_(j+1)..a_g satisfy r_i - s_i = w_i^(j+1)·rho_i, where rho
    is the resultant vector of a degree g-j-1 polynomial; rho is searched with
    its own congruence system.
    """
    g = problem.g
    fixed = list(fixed)
    if len(fixed) > g + 1:
        raise ValueError("more fixed coefficients than unknowns")
    if constraints is None:
        constraints = ConstraintSet()
        for k, a in enumerate(fixed):
            constraints = constraints.restrict(k, a, a)
    if len(fixed) == g + 1:
        if fixed[-1] < 1:
            return None
        G = IntPoly(tuple(fixed))
        norm = problem.norm(G, rel_tol)
        return Incumbent(G, norm) if norm.hi < upper else None
    remaining = g + 1 - len(fixed)
    points = choose_points(problem, upper, remaining, exclude_zero=bool(fixed), shift=len(fixed),
                           max_denominator=max_denominator)
    bounds = bound_resultants(points, problem, upper, constraints)
    if bounds.empty:
        return None
    shifted = shift_bounds(points, bounds, fixed, g) if fixed else bounds
    system = build_system(points, remaining - 1)
    return search_system(system, shifted, problem, upper, fixed, rel_tol, stats, constraints)


# ── Search ───────────────────────────────────────────────────────────────────

class ResultantSearch(BaseSearch):
    """Pure resultant search over all g+1 unknowns."""

    MODE = "resultant"

    def __init__(self, problem: WorkingProblem, c0: Fraction,
                 on_event: EventCallback | None = None,
                 rel_tol: Fraction = DEFAULT_REL_TOL,
                 inflation: Fraction = Fraction(0),
                 max_denominator: int = POOL_MAX_DENOMINATOR) -> None:
        super().__init__(problem, Fraction(c0) * (1 + inflation), on_event, rel_tol)
        self.max_denominator = max_denominator

    def _search(self) -> Incumbent | None:
        best = shifted_search(self.problem, (), self.upper, rel_tol=self.rel_tol,
                              max_denominator=self.max_denominator, stats=self.stats)
        self.emit(SearchEvent("leaf", depth=0,
                              detail=f"{self.stats.vectors_enumerated} vectors enumerated"))
        self.offer(best)
        if self.incumbent is None:
            raise EmptySearchError(f"no integer polynomial has norm below {float(self.c0):.6e}")
        return self.incumbent
