import itertools
from fractions import Fraction as Q

import pytest

from conftest import same_norm
from src.norm import QUARTER
from src.poly import IntPoly
from src.search.base import WorkingProblem
from src.search.bnb import (
    BranchAndBound,
    InvalidBoundError,
    SearchNode,
    branch,
    round_candidate,
)
from src.search.lsip import CoefConstraint, ConstraintSet

ONE = IntPoly.constant(1)


def node(a_bar, constraints=ConstraintSet()):
    return SearchNode(constraints, Q(0), tuple(Q(a) for a in a_bar), len(constraints.fixed_prefix()))


def child_bounds(children, index=0):
    return [c.constraints.bounds(index) for c in children]


def test_branch_on_fractional_value():
    children = branch(node([Q(2, 5), 1]), g=1)
    assert child_bounds(children) == [(1, 1), (0, 0), (2, None), (None, -1)]
    assert [c.depth for c in children] == [1, 1, 0, 0]


def test_branch_on_integral_value_deduplicates():
    children = branch(node([2, 1]), g=1)
    assert child_bounds(children) == [(2, 2), (3, None), (None, 1)]


def test_branch_respects_prior_bounds():
    prior = ConstraintSet((CoefConstraint(0, "lower", 0),))
    children = branch(node([Q(2, 5), 1], prior), g=1)
    assert child_bounds(children) == [(1, 1), (0, 0), (2, None)]


def test_branch_on_leading_coefficient_keeps_it_positive():
    prior = ConstraintSet((CoefConstraint(0, "fixed", 0),))
    children = branch(node([0, Q(1, 3)], prior), g=1)
    assert child_bounds(children, 1) == [(1, 1), (2, None)]


@pytest.mark.parametrize(
    "a_bar, expected",
    [
        ((Q(3, 5), Q(6, 5)), (1, 1)),
        ((Q(1, 2), Q(3, 10)), None),
        ((Q(-1, 5), Q(9, 10)), (0, 1)),
        ((Q(-1, 2), Q(3, 2)), (0, 1)),
    ],
)
def test_round_candidate(a_bar, expected):
    problem = WorkingProblem.plain(ONE, 1, QUARTER)
    candidate = round_candidate(a_bar, problem)
    if expected is None:
        assert candidate is None
    else:
        assert candidate.G == IntPoly(expected)


def test_constant_problem():
    problem = WorkingProblem.plain(ONE, 0, QUARTER)
    result = BranchAndBound(problem, Q(2)).run()
    assert result.best.G == ONE
    assert result.best.norm.lo == result.best.norm.hi == 1
    assert result.mode == "bnb"


def test_bound_below_optimum_is_rejected():
    problem = WorkingProblem.symmetric_form(ONE, 1, odd=False)
    with pytest.raises(InvalidBoundError):
        BranchAndBound(problem, Q(1, 8)).run()


def test_linear_problem_on_quarter():
    problem = WorkingProblem.symmetric_form(ONE, 1, odd=False)
    result = BranchAndBound(problem, Q(1)).run()
    assert result.best.G == IntPoly((0, 1))
    assert result.best.norm.hi == Q(1, 4)
    assert result.stats.nodes_dequeued >= 1
    assert result.stats.lp_solves >= 1


def test_matches_brute_force(brute_force):
    problem = WorkingProblem.symmetric_form(ONE, 3, odd=False)
    result = BranchAndBound(problem, Q(1, 64)).run()
    G, norm = brute_force(problem, [range(-1, 2), range(-2, 3), range(-16, 17), range(1, 41)])
    assert same_norm(result.best.norm, norm)


def test_odd_problem_matches_brute_force(brute_force):
    # p = (2x-1) G(x(1-x)) with deg G = 1, searched on t in [0,1/2]
    problem = WorkingProblem.symmetric_form(ONE, 1, odd=True)
    result = BranchAndBound(problem, Q(1, 4)).run()
    G, norm = brute_force(problem, [range(-2, 3), range(1, 12)])
    assert same_norm(result.best.norm, norm)


def test_until_hands_off_fixed_prefixes():
    problem = WorkingProblem.symmetric_form(ONE, 2, odd=False)
    search = BranchAndBound(problem, Q(1, 16))
    leaves = []
    for leaf in search.until(0):
        assert len(leaf.fixed) >= 1
        leaves.append(leaf)
        search.complete(leaf)
    assert leaves
    assert search.stats.handoffs == len(leaves)
    with pytest.raises(ValueError):
        BranchAndBound(problem, Q(1, 16)).until(3)


def test_checkpoint_and_resume(tmp_path):
    from src.records import Checkpoint, load_model

    problem = WorkingProblem.symmetric_form(ONE, 2, odd=False)
    first = BranchAndBound(problem, Q(1, 16))
    leaves = first.until(1)
    next(leaves)
    path = tmp_path / "checkpoint.json"
    first.save_checkpoint(path)
    checkpoint = load_model(path, Checkpoint)
    assert checkpoint.g == 2 and checkpoint.queue

    resumed = BranchAndBound(problem, Q(1, 16))
    resumed.restore(checkpoint)
    result = resumed.run()
    fresh = BranchAndBound(problem, Q(1, 16)).run()
    assert result.best.norm.hi == fresh.best.norm.hi

    with pytest.raises(ValueError):
        BranchAndBound(WorkingProblem.symmetric_form(ONE, 1, odd=False), Q(1)).restore(checkpoint)


def test_dequeued_node_has_the_smallest_bound():
    problem = WorkingProblem.symmetric_form(ONE, 3, odd=False)
    dequeued = []

    def watch(event):
        if event.kind == "dequeued":
            assert all(entry[0] >= event.bound for entry in search._queue)
            dequeued.append(event.bound)

    search = BranchAndBound(problem, Q(1, 64), on_event=watch)
    search.run()
    assert len(dequeued) > 1
    # children never bound below their parent, so bounds come out sorted
    assert dequeued == sorted(dequeued)


def test_incumbent_only_improves():
    problem = WorkingProblem.symmetric_form(ONE, 3, odd=False)
    improvements = []

    def watch(event):
        if event.kind == "incumbent":
            improvements.append(event.incumbent.c_star)

    result = BranchAndBound(problem, Q(1, 64), on_event=watch).run()
    assert improvements
    assert all(later < earlier for earlier, later in zip(improvements, improvements[1:]))
    assert improvements[-1] == result.best.c_star


@pytest.mark.parametrize(
    "a_bar, prior, g",
    [
        ([Q(2, 5), 1], ConstraintSet(), 1),
        ([Q(-7, 3), 2], ConstraintSet(), 1),
        ([3, 1], ConstraintSet(), 1),
        ([Q(2, 5), 1], ConstraintSet((CoefConstraint(0, "lower", 0),)), 1),
        ([0, Q(5, 2)], ConstraintSet((CoefConstraint(0, "fixed", 0),)), 1),
        ([1, Q(-3, 4), Q(7, 4)], ConstraintSet((CoefConstraint(0, "fixed", 1),)), 2),
    ],
)
def test_branch_partitions_the_integer_vectors(a_bar, prior, g):
    parent = node(a_bar, prior)
    children = branch(parent, g)
    box = [range(-5, 6)] * g + [range(1, 6)]
    for coeffs in itertools.product(*box):
        if not prior.admits(coeffs):
            continue
        assert sum(child.constraints.admits(coeffs) for child in children) == 1, coeffs
