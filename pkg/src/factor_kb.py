"""
Knowledge base of known factors and known integer Chebyshev polynomials.

Provides the initial upper bound c_n from products of known polynomials, the
resultant argument that forces linear factors into a candidate, and the
verification of the published table.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from src.config import (
    DEDUCTION_MAX_DENOMINATOR,
    DEFAULT_REL_TOL,
    FACTORS_FILE,
    KNOWN_ICPS_FILE,
    SMALL_ICPS_FILE,
    T_DECIMALS,
)
from src.norm import UNIT, Interval, NormEnclosure, format_t, normalized_t, sup_norm
from src.poly import (
    FactoredPoly,
    IntPoly,
    UnknownFactorError,
    divide_exact,
    expand,
    homogeneous,
    linear,
)
from src.records import FactorDB, IcpDB, load_model

logger = logging.getLogger(__name__)


class NoSplitError(LookupError):
    """No pair of known polynomials has degrees adding up to n."""


class InconsistentFactorsError(ValueError):
    """Forced factors exceed the target degree: the bound c_n is too small."""


# ── Data Model ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class KnownIcp:
    degree: int
    factored: FactoredPoly
    t: str
    source: str = ""
    erratum: bool = False
    note: str = ""


@dataclass
class FactorKB:
    factors: dict[str, IntPoly]
    known_icps: dict[int, KnownIcp]
    _expanded: dict[int, IntPoly] = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def load(
        cls,
        factors_path: Path = FACTORS_FILE,
        icp_paths: Sequence[Path] = (KNOWN_ICPS_FILE, SMALL_ICPS_FILE),
    ) -> FactorKB:
        factor_db = load_model(factors_path, FactorDB)
        factors = {fid: IntPoly(tuple(c)) for fid, c in factor_db.factors.items()}
        known: dict[int, KnownIcp] = {}
        for path in icp_paths:
            for entry in load_model(path, IcpDB).icps:
                if entry.degree in known:
                    logger.warning("Degree %d listed twice; keeping the first entry.", entry.degree)
                    continue
                known[entry.degree] = KnownIcp(
                    degree=entry.degree,
                    factored=FactoredPoly.parse(entry.factors),
                    t=entry.t,
                    source=entry.source,
                    erratum=entry.status == "erratum",
                    note=entry.note,
                )
        logger.info("Knowledge base: %d factors, %d known polynomials.", len(factors), len(known))
        return cls(factors=factors, known_icps=known)

    def expand(self, f: FactoredPoly) -> IntPoly:
        return expand(f, self.factors)

    def icp(self, degree: int) -> IntPoly:
        """Expanded known polynomial of the given degree (memoized)."""
        if degree not in self._expanded:
            self._expanded[degree] = self.expand(self.known_icps[degree].factored)
        return self._expanded[degree]


@dataclass(frozen=True)
class FactorState:
    """p = F·G on ``interval``; F is known, G of degree g is still unknown."""

    F: IntPoly
    g: int
    c_n: Fraction
    interval: Interval = UNIT
    forced: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.g < 0:
            raise InconsistentFactorsError(f"negative unknown degree {self.g}")
        if self.c_n <= 0:
            raise ValueError("c_n must be positive")
        if self.F.is_zero():
            raise ValueError("F must be nonzero")

    @property
    def degree(self) -> int:
        return self.F.degree() + self.g


@dataclass(frozen=True)
class UpperBound:
    value: Fraction
    split: tuple[int, int] | None
    method: str


# ── Upper bounds ─────────────────────────────────────────────────────────────

def upper_bound_cn(n: int, kb: FactorKB, rel_tol: Fraction = DEFAULT_REL_TOL) -> UpperBound:
    """min over k of the certified upper end of ||p_k p_(n-k)|| on [0,1]."""
    splits = [k for k in range(1, n // 2 + 1)
              if k in kb.known_icps and n - k in kb.known_icps]
    if not splits:
        raise NoSplitError(f"no known pair of degrees adds up to {n}")
    best: UpperBound | None = None
    for k in splits:
        enclosure = sup_norm(kb.icp(k) * kb.icp(n - k), UNIT, rel_tol)
        logger.debug("c_%d via %d + %d: <= %s", n, k, n - k, float(enclosure.hi))
        if best is None or enclosure.hi < best.value:
            best = UpperBound(enclosure.hi, (k, n - k), "split")
    logger.info("c_%d <= %.6e from split %s.", n, float(best.value), best.split)
    return best


def submultiplicative_bound(n: int, kb: FactorKB,
                            rel_tol: Fraction = DEFAULT_REL_TOL) -> UpperBound:
    """Chain ||p_(a+b)|| <= ||p_a||·||p_b|| over every known degree up to n."""
    norms = {m: sup_norm(kb.icp(m), UNIT, rel_tol).hi for m in kb.known_icps if m <= n}
    best: dict[int, Fraction] = {}
    for m in range(1, n + 1):
        options = [norms[m]] if m in norms else []
        options += [best[k] * best[m - k] for k in range(1, m // 2 + 1)
                    if k in best and m - k in best]
        if options:
            best[m] = min(options)
    if n not in best:
        raise NoSplitError(f"known degrees cannot be combined into {n}")
    logger.info("c_%d <= %.6e from submultiplicativity.", n, float(best[n]))
    return UpperBound(best[n], None, "submultiplicative")


def resolve_upper_bound(n: int, kb: FactorKB, rel_tol: Fraction = DEFAULT_REL_TOL) -> UpperBound:
    try:
        return upper_bound_cn(n, kb, rel_tol)
    except NoSplitError:
        logger.warning("No direct split for degree %d; chaining known norms.", n)
        return submultiplicative_bound(n, kb, rel_tol)


# ── Forced factors ───────────────────────────────────────────────────────────

def default_candidates(interval: Interval = UNIT,
                       max_denominator: int = DEDUCTION_MAX_DENOMINATOR) -> list[tuple[int, int]]:
    """Reduced (a, b) with 1 <= a <= max_denominator and b/a in ``interval``."""
    out: list[tuple[int, int]] = []
    for a in range(1, max_denominator + 1):
        for b in range(math.ceil(interval.lo * a), math.floor(interval.hi * a) + 1):
            if math.gcd(a, b) == 1:
                out.append((a, b))
    return out


def deduce_forced_factors(state: FactorState,
                          candidates: Iterable[tuple[int, int]] | None = None) -> FactorState:
    """Move every linear factor ax - b that the bound forces from G into F.

    At x = b/a the integer a^g G(b/a) has absolute value at most
    a^g c_n / |F(b/a)|; once that drops strictly below 1 it must be 0.
    """
    pool = list(candidates) if candidates is not None else default_candidates(state.interval)
    F, g, forced = state.F, state.g, list(state.forced)
    changed = True
    while changed:
        changed = False
        for a, b in pool:
            if a < 1:
                raise ValueError(f"candidate {a}x - {b} needs a >= 1")
            # |F(b/a)| / a^g = |a^degF F(b/a)| / a^(degF + g)
            value = abs(homogeneous(F, b, a))
            if value == 0 or state.c_n * a ** (F.degree() + g) >= value:
                continue
            if g == 0:
                raise InconsistentFactorsError(
                    f"{a}x - {b} is forced but no unknown degree is left; c_n is too small")
            F, g = F * linear(a, b), g - 1
            forced.append((a, b))
            changed = True
            logger.info("Forced factor %dx - %d (unknown degree now %d).", a, b, g)
    return replace(state, F=F, g=g, forced=tuple(forced))


def factor_over_kb(p: IntPoly, kb: FactorKB) -> tuple[FactoredPoly, IntPoly]:
    """Trial-divide by every known factor; returns (factored part, cofactor)."""
    pairs: list[tuple[str, int]] = []
    rest = p
    for fid in sorted(kb.factors, key=_natural_key):
        h = kb.factors[fid]
        if h.degree() < 1:
            continue
        e = 0
        while (q := divide_exact(rest, h)) is not None:
            rest, e = q, e + 1
        if e:
            pairs.append((fid, e))
    return FactoredPoly(tuple(pairs)), rest


def _natural_key(fid: str) -> tuple[str, int]:
    head = fid.rstrip("0123456789")
    tail = fid[len(head):]
    return head, int(tail) if tail else -1


# ── Table verification ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class RowReport:
    degree: int
    factored: str
    printed: str
    expanded_degree: int | None = None
    t: Interval | None = None
    computed: str = ""
    match: bool = False
    erratum: bool = False
    note: str = ""
    error: str = ""

    @property
    def status(self) -> str:
        if self.match:
            return "ok"
        if self.erratum and not self.error:
            return "erratum"
        return "MISMATCH"

    @property
    def detail(self) -> str:
        return self.error or ("" if self.match else self.note)


@dataclass(frozen=True)
class VerifyReport:
    rows: tuple[RowReport, ...]

    @property
    def all_match(self) -> bool:
        """True when every row matches or is a documented erratum."""
        return not self.failures

    @property
    def failures(self) -> list[RowReport]:
        return [r for r in self.rows if r.status == "MISMATCH"]

    @property
    def errata(self) -> list[RowReport]:
        return [r for r in self.rows if r.status == "erratum"]


def printed_t(t: Interval, decimals: int = T_DECIMALS) -> str | None:
    """The table entry for ``t``: its ceiling at ``decimals`` places, None if the enclosure straddles a step."""
    lo = format_t(t.lo, decimals, round_up=True)
    hi = format_t(t.hi, decimals, round_up=True)
    return hi if lo == hi else None


def verify_row(entry: KnownIcp, kb: FactorKB, rel_tol: Fraction = DEFAULT_REL_TOL) -> RowReport:
    base = RowReport(degree=entry.degree, factored=str(entry.factored), printed=entry.t,
                     erratum=entry.erratum, note=entry.note)
    try:
        p = kb.expand(entry.factored)
    except UnknownFactorError as exc:
        return replace(base, error=f"unknown factor {exc.args[0]}")
    if p.degree() != entry.degree:
        return replace(base, expanded_degree=p.degree(),
                       error=f"expands to degree {p.degree()}")
    t = normalized_t(p, UNIT, rel_tol)
    computed = printed_t(t)
    match = computed is not None and Fraction(computed) == Fraction(entry.t)
    return replace(base, expanded_degree=p.degree(), t=t, match=match,
                   computed=computed or format_t(t.hi, T_DECIMALS, round_up=True))


def verify_table(kb: FactorKB, rel_tol: Fraction = DEFAULT_REL_TOL,
                 degrees: Iterable[int] | None = None) -> VerifyReport:
    wanted = sorted(kb.known_icps) if degrees is None else sorted(degrees)
    rows = []
    for n in wanted:
        row = verify_row(kb.known_icps[n], kb, rel_tol)
        level = logging.WARNING if row.status == "MISMATCH" else logging.INFO
        logger.log(level, "n=%d  printed %s  computed %s  %s%s", n, row.printed,
                   row.computed or "-", row.status, f" ({row.detail})" if row.detail else "")
        rows.append(row)
    return VerifyReport(tuple(rows))


def check_submultiplicative(kb: FactorKB, n: int, m: int,
                            rel_tol: Fraction = DEFAULT_REL_TOL) -> tuple[NormEnclosure, Fraction]:
    """(enclosure of ||p_n p_m||, upper bound ||p_n||·||p_m||); the first never exceeds the second."""
    product = sup_norm(kb.icp(n) * kb.icp(m), UNIT, rel_tol)
    bound = sup_norm(kb.icp(n), UNIT, rel_tol).hi * sup_norm(kb.icp(m), UNIT, rel_tol).hi
    return product, bound
