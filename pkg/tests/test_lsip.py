import itertools
from fractions import Fraction as Q

import pytest

from src.norm import QUARTER, UNIT
from src.poly import IntPoly
from src.search.base import WorkingProblem, chebyshev_points
from src.search.lsip import (
    CoefConstraint,
    ConstraintSet,
    InfeasibleError,
    LpSolution,
    cutting_plane_solve,
    integer_range,
    linear_form_range,
    solve_discretized_lp,
    violating_points,
)

ONE = IntPoly.constant(1)


def quarter(g: int) -> WorkingProblem:
    return WorkingProblem.plain(ONE, g, QUARTER)


def test_constant_forced_by_leading_coefficient():
    solution = solve_discretized_lp(quarter(0), [Q(0)])
    assert solution.a_bar == (1,)
    assert solution.c_bar == 1


def test_fixed_constant_term():
    constraints = ConstraintSet((CoefConstraint(0, "fixed", 0),))
    solution = solve_discretized_lp(quarter(1), [Q(0), Q(1, 4)], constraints)
    assert solution.a_bar == (0, 1)
    assert solution.c_bar == Q(1, 4)
    assert Q(1, 4) in solution.active_points


def test_points_must_lie_in_the_domain():
    with pytest.raises(ValueError):
        solve_discretized_lp(quarter(1), [Q(1, 2)])
    with pytest.raises(ValueError):
        solve_discretized_lp(quarter(1), [])


def test_conflicting_constraints_are_infeasible():
    constraints = ConstraintSet((CoefConstraint(1, "upper", 0),))
    with pytest.raises(InfeasibleError):
        solve_discretized_lp(quarter(1), [Q(0), Q(1, 4)], constraints)


def test_quadratic_relaxation_equioscillates():
    # (y - 1/8)^2 - 1/128 touches ±1/128 at 0, 1/8 and 1/4
    solution, converged = cutting_plane_solve(quarter(2), T0=[Q(0), Q(1, 8), Q(1, 4)])
    assert converged
    assert solution.c_bar == Q(1, 128)
    assert solution.a_bar == (Q(1, 128), Q(-1, 4), 1)


def test_cuts_recover_the_continuous_optimum():
    # two points only: the first LP is too optimistic and needs cuts
    solution, converged = cutting_plane_solve(quarter(2), T0=[Q(0), Q(1, 4)])
    assert converged
    assert solution.iterations > 1
    dense = solve_discretized_lp(quarter(2), chebyshev_points(QUARTER, 200))
    assert abs(solution.c_bar - dense.c_bar) <= Q(1, 10**5)


def test_violating_points_finds_interior_peak():
    problem = quarter(2)
    low = LpSolution(a_bar=(Q(0), Q(-1, 4), Q(1)), c_bar=Q(1, 128))
    [point] = violating_points(problem, low)
    assert abs(point - Q(1, 8)) < Q(1, 1000)
    enough = LpSolution(a_bar=(Q(0), Q(-1, 4), Q(1)), c_bar=Q(1, 32))
    assert violating_points(problem, enough) == []


def test_sign_mismatched_branch_bounds_above_the_optimum():
    # the integer optimum on [0,1] for g=2 is x - x^2 with a_0 = 0 and norm 1/4
    problem = WorkingProblem.plain(ONE, 2, UNIT)
    constraints = ConstraintSet((CoefConstraint(0, "fixed", -1),))
    solution, _ = cutting_plane_solve(problem, constraints)
    assert solution.c_bar > Q(1, 4)


def test_constraint_set_operations():
    cs = ConstraintSet().restrict(0, 0, None)
    assert cs.bounds(0) == (0, None)
    fixed = cs.restrict(0, 1, 1)
    assert fixed.fixed_prefix() == (1,)
    assert cs.restrict(0, None, -1) is None
    assert fixed.admits([1, 5]) and not fixed.admits([2, 5])
    assert ConstraintSet().lp_bounds(1) == [(None, None), (1, None)]
    with pytest.raises(ValueError):
        ConstraintSet((CoefConstraint(0, "lower", 3), CoefConstraint(0, "upper", 1)))


def test_linear_form_range_contains_integer_vectors():
    problem = quarter(1)
    # a_0 + a_1/4 over |a_0 + a_1 y| <= 1/4
    rng = linear_form_range(problem, [Q(1), Q(1, 4)], Q(1, 4))
    # a_1 >= 1 makes the form increasing in y, so it cannot go negative
    assert rng == (Q(0), Q(1, 4))
    assert integer_range(problem, [Q(1), Q(0)], Q(1, 4)) == (0, 0)
    assert linear_form_range(problem, [Q(1), Q(0)], Q(1, 8),
                             ConstraintSet((CoefConstraint(0, "fixed", 1),))) is None


def _random_instance(rng) -> tuple[WorkingProblem, ConstraintSet]:
    g = rng.randint(1, 3)
    F = IntPoly(tuple(rng.randint(-3, 3) for _ in range(rng.randint(1, 2))) + (rng.randint(1, 3),))
    odd = rng.random() < 0.5
    problem = WorkingProblem.symmetric_form(F, g, odd)
    constraints = ConstraintSet()
    if rng.random() < 0.5:
        constraints = constraints.restrict(0, rng.randint(-1, 1), None) or constraints
    if rng.random() < 0.3:
        a0 = rng.randint(-1, 1)
        constraints = constraints.restrict(0, a0, a0) or constraints
    return problem, constraints


def test_cut_bounds_never_decrease(rng):
    for _ in range(100):
        problem, constraints = _random_instance(rng)
        solution, _ = cutting_plane_solve(problem, constraints, Q(1, 10**9), T0=[])
        history = solution.history
        assert len(history) == solution.iterations
        assert history[-1] == solution.c_bar
        assert all(a <= b for a, b in zip(history, history[1:]))


def test_converged_bound_is_below_every_admissible_integer_norm(rng):
    for _ in range(8):
        problem, constraints = _random_instance(rng)
        solution, _ = cutting_plane_solve(problem, constraints, Q(1, 10**9))
        g = problem.g
        rows = [problem.basis_values(t) for t in problem.sample_points()]
        box = [range(-3, 4)] * g + [range(1, 5)] if g < 3 else [range(-2, 3)] * g + [range(1, 3)]
        for coeffs in itertools.product(*box):
            if not constraints.admits(coeffs):
                continue
            # sampled values already bound the norm from below
            if any(abs(sum(b * a for b, a in zip(row, coeffs))) >= solution.c_bar for row in rows):
                continue
            assert problem.norm(IntPoly(coeffs)).hi >= solution.c_bar
