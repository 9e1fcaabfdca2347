"""
Certified supremum norms of integer polynomials over rational intervals.

Critical points are isolated with sympy's real-root isolation on the
square-free part of p' and refined on demand. Values are exact rationals, so
the only approximation is where a critical point sits inside its bracket:
with r the bracket half-width and m its midpoint,

    |p(xi) - p(m)| <= max|p''| * r^2 / 2     (p'(xi) = 0)

which gives the enclosure its certified upper end.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import Poly, Rational, Symbol, integer_nthroot

from src.config import DEFAULT_REL_TOL, MAX_REFINE_ROUNDS, ROOT_PRECISION_BITS
from src.poly import IntPoly, derivative, evaluate

logger = logging.getLogger(__name__)

_X = Symbol("x")


class ZeroPolynomialError(ValueError):
    """The norm of the zero polynomial is not a search target."""


# ── Data Model ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __contains__(self, x: object) -> bool:
        return self.lo <= Fraction(x) <= self.hi  # type: ignore[arg-type]

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


UNIT = Interval(Fraction(0), Fraction(1))
QUARTER = Interval(Fraction(0), Fraction(1, 4))
HALF = Interval(Fraction(0), Fraction(1, 2))


@dataclass(frozen=True)
class NormEnclosure:
    """[lo, hi] contains the exact sup norm; witnesses bracket the maximizers."""

    lo: Fraction
    hi: Fraction
    witnesses: tuple[Interval, ...] = field(default=())

    def relative_width(self) -> Fraction:
        if self.hi == 0:
            return Fraction(0)
        return (self.hi - self.lo) / self.hi


# ── Brackets ─────────────────────────────────────────────────────────────────

class _Bracket:
    """Isolating interval of one root of the square-free part of p'."""

    __slots__ = ("lo", "hi", "value")

    def __init__(self, lo: Fraction, hi: Fraction, value: Fraction) -> None:
        self.lo, self.hi, self.value = lo, hi, value

    @property
    def radius(self) -> Fraction:
        return (self.hi - self.lo) / 2

    def as_interval(self) -> Interval:
        return Interval(self.lo, self.hi)


def _to_fraction(r: Rational) -> Fraction:
    return Fraction(int(r.p), int(r.q))


def _to_rational(f: Fraction) -> Rational:
    return Rational(f.numerator, f.denominator)


def _sympy_poly(p: IntPoly) -> Poly:
    return Poly(list(reversed(p.coeffs)) or [0], _X, domain="ZZ")


def _second_derivative_bound(p: IntPoly, I: Interval) -> Fraction:
    """Upper bound on |p''| over I from coefficient magnitudes."""
    radius = max(abs(I.lo), abs(I.hi))
    return Fraction(sum(k * (k - 1) * abs(a) * radius ** (k - 2)
                        for k, a in enumerate(p.coeffs) if k >= 2))


def _sqrt_floor(q: Fraction) -> Fraction:
    """A positive rational lower bound on sqrt(q) for q > 0."""
    shift = max(0, q.denominator.bit_length() - q.numerator.bit_length()) // 2 + 64
    scaled = (q.numerator << (2 * shift)) // q.denominator
    root = math.isqrt(scaled)
    return Fraction(max(root, 1), 1 << shift) if root else Fraction(1, 1 << (shift + 1))


class _CriticalSet:
    """Brackets of the interior critical points of p on I, refined lazily."""

    def __init__(self, p: IntPoly, I: Interval) -> None:
        self.p = p
        self.I = I
        self.brackets: list[_Bracket] = []
        self.d2 = _second_derivative_bound(p, I)
        dp = derivative(p)
        if dp.degree() < 1 or I.width == 0:
            self._sqf = None
            return
        self._sqf = _sympy_poly(dp).sqf_part()
        for end in (I.lo, I.hi):
            # endpoints are evaluated exactly; keep their roots out of the brackets
            if self._sqf.degree() > 0 and self._sqf.eval(_to_rational(end)) == 0:
                linear = Poly(end.denominator * _X - end.numerator, _X, domain="ZZ")
                self._sqf = self._sqf.exquo(linear)
        if self._sqf.degree() < 1:
            return
        for (a, b), _ in self._sqf.intervals(inf=_to_rational(I.lo), sup=_to_rational(I.hi)):
            lo, hi = max(_to_fraction(a), I.lo), min(_to_fraction(b), I.hi)
            bracket = _Bracket(lo, hi, abs(evaluate(p, (lo + hi) / 2)))
            self._snap(bracket)
            self.brackets.append(bracket)
        logger.debug("Isolated %d critical brackets on %s.", len(self.brackets), I)

    def slack(self, b: _Bracket) -> Fraction:
        return self.d2 * b.radius ** 2 / 2

    def upper(self, b: _Bracket) -> Fraction:
        return b.value + self.slack(b)

    def lower(self, b: _Bracket) -> Fraction:
        return b.value - self.slack(b)

    def refine(self, b: _Bracket, target_slack: Fraction) -> None:
        """Shrink ``b`` until its slack is at most ``target_slack``."""
        if b.lo == b.hi or self.slack(b) <= target_slack:
            return
        if target_slack <= 0 or self.d2 == 0:
            width = b.radius  # halve
        else:
            width = 2 * _sqrt_floor(2 * target_slack / self.d2)
        a, c = self._sqf.refine_root(_to_rational(b.lo), _to_rational(b.hi),
                                     eps=_to_rational(width))
        b.lo, b.hi = max(_to_fraction(a), self.I.lo), min(_to_fraction(c), self.I.hi)
        b.value = abs(evaluate(self.p, (b.lo + b.hi) / 2))
        self._snap(b)

    def _snap(self, b: _Bracket) -> None:
        """Collapse ``b`` onto its critical point when that point is a small-denominator rational."""
        if b.lo == b.hi:
            return
        mid = (b.lo + b.hi) / 2
        for limit in (16, 1024, 1 << 20):
            c = mid.limit_denominator(limit)
            if b.lo < c < b.hi and self._sqf.eval(_to_rational(c)) == 0:
                b.lo = b.hi = c
                b.value = abs(evaluate(self.p, c))
                return


# ── Public API ───────────────────────────────────────────────────────────────

def sup_norm(p: IntPoly, I: Interval, rel_tol: Fraction = DEFAULT_REL_TOL) -> NormEnclosure:
    """Certified enclosure of max |p(x)| over I with relative width <= rel_tol."""
    if p.is_zero():
        raise ZeroPolynomialError("sup norm of the zero polynomial")
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")

    ends = {I.lo: abs(evaluate(p, I.lo)), I.hi: abs(evaluate(p, I.hi))}
    crit = _CriticalSet(p, I)
    lo = max(ends.values())
    if crit.brackets:
        lo = max(lo, max(b.value for b in crit.brackets))

    # coarse pass drops brackets far below the maximum, fine pass certifies the rest
    for fraction in (Fraction(1, 4), rel_tol / 2):
        while True:
            target = lo * fraction
            pending = [b for b in crit.brackets if crit.upper(b) > lo + target]
            if not pending:
                break
            for b in pending:
                crit.refine(b, target)
                lo = max(lo, b.value)

    hi = max([lo] + [crit.upper(b) for b in crit.brackets])
    floor = lo * (1 - rel_tol)
    witnesses = [b.as_interval() for b in crit.brackets if crit.upper(b) >= floor]
    witnesses += [Interval(x, x) for x, v in ends.items() if v >= floor]
    return NormEnclosure(lo=lo, hi=hi, witnesses=tuple(sorted(witnesses, key=lambda w: w.lo)))


def critical_points_above(p: IntPoly, I: Interval, threshold: Fraction) -> list[Interval]:
    """Brackets of interior critical points of p where |p| exceeds ``threshold``.

    A bracket is returned once its midpoint is proven above the threshold;
    brackets still undecided after ``MAX_REFINE_ROUNDS`` are returned as well,
    so callers re-check the midpoint before relying on it.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if p.is_zero():
        return []
    crit = _CriticalSet(p, I)
    found: list[Interval] = []
    for b in crit.brackets:
        for _ in range(MAX_REFINE_ROUNDS):
            if crit.lower(b) > threshold:
                found.append(b.as_interval())
                break
            if crit.upper(b) <= threshold:
                break
            gap = abs(b.value - threshold)
            crit.refine(b, gap / 2 if gap else Fraction(0))
        else:
            found.append(b.as_interval())
    return found


def nth_root_enclosure(lo: Fraction, hi: Fraction, n: int,
                       bits: int = ROOT_PRECISION_BITS) -> Interval:
    """Outward-rounded [lo^(1/n), hi^(1/n)] on a 2^-bits grid."""
    scale = 1 << (bits * n)
    low, _ = integer_nthroot((lo.numerator * scale) // lo.denominator, n)
    top_arg = -((-hi.numerator * scale) // hi.denominator)
    top, exact = integer_nthroot(top_arg, n)
    if not exact:
        top += 1
    return Interval(Fraction(int(low), 1 << bits), Fraction(int(top), 1 << bits))


def normalized_t(p: IntPoly, I: Interval, rel_tol: Fraction = DEFAULT_REL_TOL) -> Interval:
    """Certified enclosure of ||p||_I^(1/deg p)."""
    n = p.degree()
    if n < 1:
        raise ValueError("normalized norm needs a polynomial of degree >= 1")
    enclosure = sup_norm(p, I, rel_tol)
    return nth_root_enclosure(enclosure.lo, enclosure.hi, n)


def format_t(value: Fraction, decimals: int = 8, round_up: bool = False) -> str:
    """Round half-up to ``decimals`` places; ``round_up`` takes the ceiling instead."""
    scaled = value * 10**decimals
    scaled = math.ceil(scaled) if round_up else math.floor(scaled + Fraction(1, 2))
    whole, frac = divmod(scaled, 10**decimals)
    return f"{whole}.{frac:0{decimals}d}"
