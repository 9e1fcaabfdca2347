"""
Exact integer polynomials: arithmetic, symmetrization and linear resultants.

Coefficients are stored low-to-high (index k holds the coefficient of x^k) as
arbitrary-precision ints. Values never change after construction, so they can
be shared freely between workers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

# Evaluation points and test points b/a are plain reduced fractions.
RatPoint = Fraction


class UnknownFactorError(KeyError):
    """A factored polynomial references an id missing from the knowledge base."""


class NotSymmetricError(ValueError):
    """The polynomial is not of the form (2x-1)^e q(x(1-x)) with e in {0, 1}."""


# ── Data Model ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class IntPoly:
    """Dense integer polynomial; the zero polynomial has no stored coefficients."""

    coeffs: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        c = [int(a) for a in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def constant(cls, value: int) -> IntPoly:
        return cls((value,))

    def degree(self) -> int:
        """Index of the last stored coefficient (-1 for the zero polynomial)."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def coefficient(self, k: int) -> int:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    # ── Arithmetic ───────────────────────────────────────────────────────

    def __neg__(self) -> IntPoly:
        return IntPoly(tuple(-a for a in self.coeffs))

    def __add__(self, other: IntPoly | int) -> IntPoly:
        other = _coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return IntPoly(tuple(self.coefficient(k) + other.coefficient(k) for k in range(n)))

    __radd__ = __add__

    def __sub__(self, other: IntPoly | int) -> IntPoly:
        return self + (-_coerce(other))

    def __rsub__(self, other: IntPoly | int) -> IntPoly:
        return _coerce(other) - self

    def __mul__(self, other: IntPoly | int) -> IntPoly:
        other = _coerce(other)
        if self.is_zero() or other.is_zero():
            return IntPoly()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return IntPoly(tuple(out))

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> IntPoly:
        if exponent < 0:
            raise ValueError("negative exponent")
        result, base = IntPoly.constant(1), self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        terms: list[str] = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            a = self.coeffs[k]
            if a == 0:
                continue
            sign = "-" if a < 0 else "+"
            mag = abs(a)
            if k == 0:
                body = str(mag)
            else:
                power = "x" if k == 1 else f"x^{k}"
                body = power if mag == 1 else f"{mag}{power}"
            terms.append(f"{sign} {body}")
        text = " ".join(terms)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _coerce(value: IntPoly | int) -> IntPoly:
    return value if isinstance(value, IntPoly) else IntPoly.constant(value)


X = IntPoly((0, 1))
H1 = IntPoly((0, 1, -1))   # x(1 - x)
H2 = IntPoly((-1, 2))      # 2x - 1


def linear(a: int, b: int) -> IntPoly:
    """The linear polynomial ax - b."""
    return IntPoly((-b, a))


# ── Evaluation ───────────────────────────────────────────────────────────────

def homogeneous(p: IntPoly, num: int, den: int, degree: int | None = None) -> int:
    """Integer value den^d * p(num/den) with d = ``degree`` (defaults to deg p)."""
    if p.is_zero():
        return 0
    g = p.degree()
    d = g if degree is None else degree
    if d < g:
        raise ValueError("homogenizing degree below the polynomial degree")
    # sum a_k num^k den^(g-k), Horner from the top coefficient down
    acc = 0
    den_power = 1
    for a in reversed(p.coeffs):
        acc = acc * num + a * den_power
        den_power *= den
    return acc * den ** (d - g)


def evaluate(p: IntPoly, x: RatPoint) -> Fraction:
    """Exact value p(x) as a reduced fraction."""
    x = Fraction(x)
    if p.is_zero():
        return Fraction(0)
    return Fraction(homogeneous(p, x.numerator, x.denominator), x.denominator ** p.degree())


def resultant_linear(G: IntPoly, a: int, b: int) -> int:
    """a^g G(b/a): the resultant of G and ax - b up to sign."""
    if a < 1:
        raise ValueError("leading coefficient a must be positive")
    return homogeneous(G, b, a)


# ── Calculus and composition ─────────────────────────────────────────────────

def derivative(p: IntPoly) -> IntPoly:
    return IntPoly(tuple(k * a for k, a in enumerate(p.coeffs))[1:])


def compose(p: IntPoly, q: IntPoly) -> IntPoly:
    """p(q(x)) by Horner's rule."""
    result = IntPoly()
    for a in reversed(p.coeffs):
        result = result * q + a
    return result


def reflect(p: IntPoly) -> IntPoly:
    """p(1 - x)."""
    return compose(p, IntPoly((1, -1)))


def symmetrize(q: IntPoly, odd: bool) -> IntPoly:
    """q(x(1-x)), times (2x - 1) when ``odd``."""
    lifted = compose(q, H1)
    return H2 * lifted if odd else lifted


def desymmetrize(p: IntPoly) -> tuple[IntPoly, bool]:
    """Inverse of :func:`symmetrize`: returns (q, odd) with p = symmetrize(q, odd)."""
    if p.is_zero():
        raise NotSymmetricError("zero polynomial")
    mirrored = reflect(p)
    odd = False
    if mirrored == -p and mirrored != p:
        quotient = divide_exact(p, H2)
        if quotient is None:
            raise NotSymmetricError(f"antisymmetric but not divisible by 2x-1: {p}")
        p, odd = quotient, True
    elif mirrored != p:
        raise NotSymmetricError(f"p(1-x) != ±p(x) for {p}")
    if p.degree() % 2:
        raise NotSymmetricError(f"odd degree after removing 2x-1: {p}")

    m = p.degree() // 2
    powers = [IntPoly.constant(1)]
    for _ in range(m):
        powers.append(powers[-1] * H1)
    q = [0] * (m + 1)
    rest = p
    for j in range(m, -1, -1):
        # (x - x^2)^j has leading coefficient (-1)^j at x^(2j)
        q[j] = rest.coefficient(2 * j) * (-1) ** j
        if q[j]:
            rest = rest - powers[j] * q[j]
    if not rest.is_zero():
        raise NotSymmetricError(f"not a polynomial in x(1-x): {p}")
    return IntPoly(tuple(q)), odd


def divide_exact(p: IntPoly, d: IntPoly) -> IntPoly | None:
    """p / d over Z, or None when d does not divide p exactly."""
    if d.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if p.is_zero():
        return IntPoly()
    dd, lc = d.degree(), d.leading()
    if p.degree() < dd:
        return None
    rem = list(p.coeffs)
    quot = [0] * (p.degree() - dd + 1)
    for k in range(p.degree() - dd, -1, -1):
        c = rem[k + dd]
        if c == 0:
            continue
        if c % lc:
            return None
        q = c // lc
        quot[k] = q
        for i, dc in enumerate(d.coeffs):
            rem[k + i] -= q * dc
    if any(rem):
        return None
    return IntPoly(tuple(quot))


# ── Factored form ────────────────────────────────────────────────────────────

_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(\d+))?$")


@dataclass(frozen=True)
class FactoredPoly:
    """Product of knowledge-base factors, e.g. ``h1^48 h2^17 h3^6``."""

    factors: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        pairs = tuple((str(fid), int(e)) for fid, e in self.factors)
        ids = [fid for fid, _ in pairs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"repeated factor id in {ids}")
        if any(e < 1 for _, e in pairs):
            raise ValueError("factor exponents must be >= 1")
        object.__setattr__(self, "factors", pairs)

    @classmethod
    def parse(cls, text: str) -> FactoredPoly:
        """Parse ``"h1^48 h2^17 h10"`` (``*`` separators are accepted too)."""
        pairs: list[tuple[str, int]] = []
        for token in text.replace("*", " ").split():
            match = _TOKEN.match(token)
            if not match:
                raise ValueError(f"bad factor token {token!r}")
            pairs.append((match.group(1), int(match.group(2) or 1)))
        return cls(tuple(pairs))

    def degree(self, factors: Mapping[str, IntPoly]) -> int:
        return sum(e * _lookup(factors, fid).degree() for fid, e in self.factors)

    def __mul__(self, other: FactoredPoly) -> FactoredPoly:
        merged: dict[str, int] = dict(self.factors)
        for fid, e in other.factors:
            merged[fid] = merged.get(fid, 0) + e
        return FactoredPoly(tuple(merged.items()))

    def __str__(self) -> str:
        return " ".join(fid if e == 1 else f"{fid}^{e}" for fid, e in self.factors) or "1"


def _lookup(factors: Mapping[str, IntPoly], fid: str) -> IntPoly:
    try:
        return factors[fid]
    except KeyError:
        raise UnknownFactorError(fid) from None


def expand(f: FactoredPoly, factors: Mapping[str, IntPoly]) -> IntPoly:
    """Fully expanded product of the referenced factors."""
    return product(_lookup(factors, fid) ** e for fid, e in f.factors)


def product(polys: Iterable[IntPoly]) -> IntPoly:
    result = IntPoly.constant(1)
    for p in polys:
        result = result * p
    return result
