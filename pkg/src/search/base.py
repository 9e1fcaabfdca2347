"""
Shared search model: the working problem, incumbents, events and the
abstract search every strategy implements.
"""

from __future__ import annotations

import abc
import functools
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Literal, Sequence

from src.config import DEFAULT_REL_TOL, POINT_DENOMINATOR_BITS
from src.norm import HALF, QUARTER, Interval, NormEnclosure, sup_norm
from src.poly import H1, H2, IntPoly, X, compose, evaluate, symmetrize
from src.records import SearchStats

logger = logging.getLogger(__name__)


# ── Working problem ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class WorkingProblem:
    """Minimize max over ``domain`` of |W(t)·G(phi(t))| over integer G of
    degree g with leading coefficient >= 1.

    ``known`` is the known factor F in the variable y = phi(t), and
    ``y_range`` is phi(domain), where G itself is evaluated.
    """

    weight: IntPoly
    phi: IntPoly
    g: int
    domain: Interval
    known: IntPoly
    y_range: Interval
    odd: bool = False
    symmetric: bool = False

    def __post_init__(self) -> None:
        if self.g < 0:
            raise ValueError(f"unknown degree must be >= 0, got {self.g}")
        if self.weight.is_zero():
            raise ValueError("weight must be nonzero")

    @classmethod
    def plain(cls, F: IntPoly, g: int, interval: Interval) -> WorkingProblem:
        """||F·G|| on ``interval`` with no symmetry."""
        return cls(weight=F, phi=X, g=g, domain=interval, known=F, y_range=interval)

    @classmethod
    def symmetric_form(cls, F_y: IntPoly, g: int, odd: bool) -> WorkingProblem:
        """The symmetric problem on [0,1] written in y = x(1-x).

        Even: p = (F_y G)(x(1-x)), solved on [0,1/4] directly.
        Odd:  p = (2x-1)(F_y G)(x(1-x)), solved on t in [0,1/2] with
        weight (2t-1)F_y(t(1-t)) so every constraint stays rational.
        """
        if odd:
            return cls(weight=H2 * compose(F_y, H1), phi=H1, g=g, domain=HALF,
                       known=F_y, y_range=QUARTER, odd=True, symmetric=True)
        return cls(weight=F_y, phi=X, g=g, domain=QUARTER, known=F_y,
                   y_range=QUARTER, odd=False, symmetric=True)

    # ── Degrees ──────────────────────────────────────────────────────────

    @property
    def lifted_degree(self) -> int:
        return self.weight.degree() + self.g * self.phi.degree()

    @property
    def target_degree(self) -> int:
        """Degree of the full polynomial on [0,1] (or on the plain interval)."""
        core = self.known.degree() + self.g
        if self.symmetric:
            return 2 * core + (1 if self.odd else 0)
        return core

    # ── Evaluation ───────────────────────────────────────────────────────

    def basis_values(self, t: Fraction) -> tuple[Fraction, ...]:
        """(W(t)·phi(t)^k for k = 0..g): the constraint row at t."""
        return _basis_values(self, Fraction(t))

    def lift(self, G: IntPoly) -> IntPoly:
        """W·G(phi) on the working domain."""
        return self.weight * compose(G, self.phi)

    def lift_rational(self, coeffs: Sequence[Fraction]) -> tuple[IntPoly, int]:
        """Integer multiple L·W·G(phi) of a rational G, with its scale L."""
        scale = math.lcm(*(Fraction(a).denominator for a in coeffs)) if coeffs else 1
        G = IntPoly(tuple(int(Fraction(a) * scale) for a in coeffs))
        return self.lift(G), scale

    def full_polynomial(self, G: IntPoly) -> IntPoly:
        """The candidate on [0,1] (symmetric forms) or on the plain interval."""
        core = self.known * G
        return symmetrize(core, self.odd) if self.symmetric else core

    def norm(self, G: IntPoly, rel_tol: Fraction = DEFAULT_REL_TOL) -> NormEnclosure:
        return sup_norm(self.lift(G), self.domain, rel_tol)

    def weight_sq_at(self, y: Fraction) -> Fraction:
        """min over t with phi(t) = y of W(t)^2, as a function of y."""
        F = evaluate(self.known, y)
        w = F * F
        return w * (1 - 4 * y) if self.odd else w

    def sample_points(self, count: int | None = None) -> list[Fraction]:
        n = count if count is not None else max(4 * self.lifted_degree, self.g + 2)
        return chebyshev_points(self.domain, n)


@functools.lru_cache(maxsize=1 << 16)
def _basis_values(problem: WorkingProblem, t: Fraction) -> tuple[Fraction, ...]:
    w = evaluate(problem.weight, t)
    y = evaluate(problem.phi, t)
    out = [w]
    for _ in range(problem.g):
        out.append(out[-1] * y)
    return tuple(out)


def chebyshev_points(I: Interval, count: int,
                     bits: int = POINT_DENOMINATOR_BITS) -> list[Fraction]:
    """Dyadic approximations of ``count`` Chebyshev nodes on I, plus both ends."""
    scale = 1 << bits
    mid, half = float(I.mid), float(I.width) / 2
    points = {I.lo, I.hi}
    for k in range(count):
        x = mid + half * math.cos((2 * k + 1) * math.pi / (2 * count))
        q = Fraction(round(x * scale), scale)
        points.add(min(max(q, I.lo), I.hi))
    return sorted(points)


# ── Results and events ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class Incumbent:
    """Best known G with its certified norm on the working domain."""

    G: IntPoly
    norm: NormEnclosure

    @property
    def c_star(self) -> Fraction:
        return self.norm.hi


EventKind = Literal["dequeued", "pruned", "incumbent", "handoff", "checkpoint", "leaf"]


@dataclass(frozen=True)
class SearchEvent:
    kind: EventKind
    bound: Fraction | None = None
    depth: int | None = None
    incumbent: Incumbent | None = None
    detail: str = ""


EventCallback = Callable[[SearchEvent], None]


def log_event(event: SearchEvent) -> None:
    """Default event sink."""
    if event.kind == "incumbent" and event.incumbent is not None:
        logger.info("New incumbent %s  norm <= %.12e", event.incumbent.G,
                    float(event.incumbent.c_star))
    elif event.kind in ("handoff", "checkpoint", "leaf"):
        logger.info("[%s] depth=%s bound=%s %s", event.kind, event.depth,
                    None if event.bound is None else f"{float(event.bound):.12e}",
                    event.detail)
    else:
        logger.debug("[%s] depth=%s bound=%s", event.kind, event.depth,
                     None if event.bound is None else f"{float(event.bound):.12e}")


@dataclass
class SearchResult:
    best: Incumbent | None
    stats: SearchStats = field(default_factory=SearchStats)
    mode: str = ""
    wall_time: float = 0.0


# ── Base Search ──────────────────────────────────────────────────────────────

class BaseSearch(abc.ABC):
    """
    Interface every search strategy implements.
    Subclasses override ``_search`` while the base handles timing, the
    incumbent and event delivery.
    """

    MODE: str = "unknown"

    def __init__(self, problem: WorkingProblem, c0: Fraction,
                 on_event: EventCallback | None = None,
                 rel_tol: Fraction = DEFAULT_REL_TOL) -> None:
        if c0 <= 0:
            raise ValueError("upper bound c0 must be positive")
        self.problem = problem
        self.c0 = Fraction(c0)
        self.rel_tol = rel_tol
        self.incumbent: Incumbent | None = None
        self.stats = SearchStats()
        self._on_event = on_event or log_event

    # ── Public API ───────────────────────────────────────────────────────

    @property
    def upper(self) -> Fraction:
        """Current pruning threshold: the incumbent norm, else c0."""
        return self.incumbent.c_star if self.incumbent is not None else self.c0

    def offer(self, candidate: Incumbent | None) -> bool:
        """Adopt ``candidate`` when it beats the current threshold."""
        if candidate is None or candidate.c_star >= self.upper:
            return False
        self.incumbent = candidate
        self.emit(SearchEvent("incumbent", incumbent=candidate))
        return True

    def emit(self, event: SearchEvent) -> None:
        self._on_event(event)

    def run(self) -> SearchResult:
        started = time.monotonic()
        logger.info("[%s] g=%d on %s, c0 <= %.12e", self.MODE, self.problem.g,
                    self.problem.domain, float(self.c0))
        best = self._search()
        elapsed = time.monotonic() - started
        logger.info("[%s] finished in %.1fs: %s", self.MODE, elapsed,
                    "no solution" if best is None else f"norm <= {float(best.c_star):.12e}")
        return SearchResult(best=best, stats=self.stats, mode=self.MODE, wall_time=elapsed)

    # ── Template method ──────────────────────────────────────────────────

    @abc.abstractmethod
    def _search(self) -> Incumbent | None:
        """Return the optimal incumbent (or raise when none is below c0)."""
        ...
