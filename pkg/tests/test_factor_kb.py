from fractions import Fraction

import pytest

from src.factor_kb import (
    FactorKB,
    FactorState,
    InconsistentFactorsError,
    KnownIcp,
    NoSplitError,
    VerifyReport,
    check_submultiplicative,
    deduce_forced_factors,
    default_candidates,
    factor_over_kb,
    printed_t,
    resolve_upper_bound,
    upper_bound_cn,
    verify_row,
    verify_table,
)
from src.config import SMALL_ICPS_FILE
from src.norm import UNIT, Interval, format_t, sup_norm
from src.poly import H1, H2, FactoredPoly, IntPoly, homogeneous, linear

ONE = IntPoly.constant(1)


def test_every_table_row_has_its_degree(kb):
    assert len([n for n in kb.known_icps if n >= 147]) == 16
    for n, entry in kb.known_icps.items():
        assert entry.factored.degree(kb.factors) == n


def test_degree_147_expands(kb):
    p = kb.icp(147)
    assert p.degree() == 147
    assert kb.icp(147) is p


def test_upper_bound_from_small_splits(kb):
    two = upper_bound_cn(2, kb)
    assert two.split == (1, 1)
    assert two.value >= 1
    four = upper_bound_cn(4, kb)
    assert four.split == (2, 2)
    assert Fraction(1, 16) <= four.value <= Fraction(1, 16) * (1 + Fraction(1, 10**11))


def test_missing_split_falls_back_to_chaining(kb):
    with pytest.raises(NoSplitError):
        upper_bound_cn(5, kb)
    bound = resolve_upper_bound(5, kb)
    assert bound.method == "submultiplicative"
    assert bound.value >= Fraction(1, 16)


def test_no_bound_without_known_polynomials():
    empty = FactorKB(factors={"h1": H1}, known_icps={})
    with pytest.raises(NoSplitError):
        resolve_upper_bound(3, empty)


def test_forced_root_at_zero():
    state = FactorState(F=ONE, g=4, c_n=Fraction(1, 16))
    deduced = deduce_forced_factors(state, [(1, 0)])
    assert deduced.forced == ((1, 0),)
    assert deduced.F == linear(1, 0)
    assert deduced.g == 3
    assert deduced.degree == 4


def test_strict_test_at_the_boundary():
    # 1/16 < 1/2^4 fails, so nothing is forced
    state = FactorState(F=ONE, g=4, c_n=Fraction(1, 16))
    assert deduce_forced_factors(state, [(2, 1)]) == state


def test_deduction_iterates_to_a_fixed_point():
    state = FactorState(F=ONE, g=4, c_n=Fraction(1, 16))
    deduced = deduce_forced_factors(state)
    assert set(deduced.forced) == {(1, 0), (1, 1)}
    assert deduced.F == H1 * -1
    assert deduced.g == 2


def test_inconsistent_bound_is_reported():
    with pytest.raises(InconsistentFactorsError):
        deduce_forced_factors(FactorState(F=ONE, g=0, c_n=Fraction(1, 2)), [(1, 0)])
    with pytest.raises(InconsistentFactorsError):
        FactorState(F=ONE, g=-1, c_n=Fraction(1))


def test_default_candidates_are_reduced_and_inside():
    pool = default_candidates(UNIT, 4)
    assert (2, 1) in pool and (4, 2) not in pool
    assert all(0 <= Fraction(b, a) <= 1 for a, b in pool)


def test_factor_over_kb(kb):
    factored, cofactor = factor_over_kb(H1 ** 3 * H2 * IntPoly((1, 1)), kb)
    assert str(factored) == "h1^3 h2"
    assert cofactor == IntPoly((1, 1))
    factored, cofactor = factor_over_kb(-(H1 ** 2), kb)
    assert str(factored) == "h1^2"
    assert cofactor == IntPoly.constant(-1)


def test_verify_small_rows(kb):
    report = verify_table(kb, degrees=[1, 2])
    assert report.all_match
    assert [row.computed for row in report.rows] == ["1.00000000", "0.50000000"]


def test_printed_t_rounds_up():
    assert printed_t(Interval(Fraction(42577464029, 10**11), Fraction(42577464030, 10**11))) == "0.42577465"
    assert printed_t(Interval(Fraction(1, 2), Fraction(1, 2))) == "0.50000000"
    # an enclosure across a rounding step cannot be matched
    assert printed_t(Interval(Fraction(4999999999, 10**10), Fraction(5000000001, 10**10))) is None


def test_erratum_row_is_flagged_not_failed(kb):
    entry = KnownIcp(degree=2, factored=FactoredPoly.parse("h1"), t="0.49000000",
                     erratum=True, note="printed value disagrees")
    row = verify_row(entry, kb)
    assert not row.match
    assert row.status == "erratum"
    assert row.detail == "printed value disagrees"
    errata_kb = FactorKB(factors=kb.factors, known_icps={2: entry})
    report = verify_table(errata_kb)
    assert report.all_match and report.failures == []
    assert [r.degree for r in report.errata] == [2]


def test_erratum_flag_does_not_hide_broken_rows(kb):
    entry = KnownIcp(degree=2, factored=FactoredPoly.parse("h99"), t="0.5", erratum=True)
    row = verify_row(entry, kb)
    assert row.status == "MISMATCH"
    assert not VerifyReport((row,)).all_match


def test_shipped_erratum_is_loaded(kb):
    assert kb.known_icps[147].erratum
    assert not kb.known_icps[149].erratum


def test_corrupted_row_fails(kb):
    entry = KnownIcp(degree=147, factored=FactoredPoly.parse("h1^47 h2^17 h3^6 h5^2 h10 h14"),
                     t="0.42591455")
    row = verify_row(entry, kb)
    assert not row.match
    assert row.expanded_degree == 145
    unknown = verify_row(KnownIcp(degree=2, factored=FactoredPoly.parse("h99"), t="0.5"), kb)
    assert not unknown.match and "h99" in unknown.error


def test_empty_database_verifies_trivially(kb):
    empty = FactorKB(factors=kb.factors, known_icps={})
    report = verify_table(empty)
    assert report.rows == () and report.all_match


def test_duplicate_degrees_keep_first():
    kb = FactorKB.load(icp_paths=(SMALL_ICPS_FILE, SMALL_ICPS_FILE))
    assert sorted(kb.known_icps) == [1, 2]


def test_submultiplicative_on_small_degrees(kb):
    product, bound = check_submultiplicative(kb, 1, 2)
    assert product.hi <= bound


@pytest.mark.slow
@pytest.mark.parametrize("n, t", [(152, "0.42577465"), (191, "0.42512849"), (239, "0.42461390")])
def test_table_row_reproduces(kb, n, t):
    report = verify_table(kb, degrees=[n])
    assert report.all_match
    assert report.rows[0].computed == t


@pytest.mark.slow
def test_full_table_matches(kb):
    report = verify_table(kb, degrees=[n for n in kb.known_icps if n >= 147])
    assert len(report.rows) == 16
    assert report.failures == []
    assert [row.degree for row in report.errata] == [147]
    assert sum(row.match for row in report.rows) == 15
    # the table rounds up: t_152 = 0.4257746403.. is printed as 0.42577465
    row_152 = next(row for row in report.rows if row.degree == 152)
    assert format_t(row_152.t.mid) == "0.42577464"


@pytest.mark.slow
def test_degree_147_erratum_value(kb):
    [row] = verify_table(kb, degrees=[147]).rows
    assert row.status == "erratum"
    assert row.computed == "0.42575534"
    assert kb.known_icps[147].note


TABLE_DEGREES = (147, 149, 152, 153, 154, 158, 175, 191, 194, 198, 202, 236, 238, 239, 241, 244)


@pytest.mark.slow
@pytest.mark.parametrize("n, m", [(n, m) for i, n in enumerate(TABLE_DEGREES)
                                  for m in TABLE_DEGREES[i:] if n + m <= 488])
def test_submultiplicative_on_table_pairs(kb, n, m):
    product, bound = check_submultiplicative(kb, n, m)
    assert product.hi <= bound


@pytest.mark.slow
def test_forced_factors_divide_the_known_polynomial(kb):
    p = kb.icp(147)
    c_n = sup_norm(p, UNIT).hi
    deduced = deduce_forced_factors(FactorState(F=ONE, g=147, c_n=c_n))
    assert deduced.forced
    for a, b in deduced.forced:
        assert homogeneous(p, b, a) == 0
