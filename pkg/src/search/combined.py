"""
Branch first, then finish each surviving node with a shifted resultant search.

Branch and bound fixes a_0..a_j (j chosen so ``handoff_remaining`` unknowns
are left); every node it hands off is completed by the resultant search over
the remaining coefficients. Hand-offs are processed in batches of
``worker_count``, in a process pool when more than one worker is configured.
"""

from __future__ import annotations

import asyncio
import functools
import itertools
import logging
import time
from concurrent.futures import Executor
from fractions import Fraction
from pathlib import Path

from src.config import C0_INFLATION, CUT_EPS_FACTOR, DEFAULT_REL_TOL, HANDOFF_REMAINING, POOL_MAX_DENOMINATOR
from src.records import Checkpoint, SearchStats
from src.search.base import EventCallback, Incumbent, SearchEvent, SearchResult, WorkingProblem
from src.search.bnb import BranchAndBound, InvalidBoundError, SearchNode
from src.search.resultant import ResultantSearch, shifted_search

logger = logging.getLogger(__name__)


def _finish_leaf(problem: WorkingProblem, upper: Fraction, rel_tol: Fraction,
                 max_denominator: int, node: SearchNode) -> tuple[Incumbent | None, SearchStats]:
    """Worker entry point: shifted resultant search below one hand-off node."""
    stats = SearchStats()
    best = shifted_search(problem, node.fixed, upper, node.constraints, rel_tol,
                          max_denominator, stats)
    return best, stats


async def combined_search(
    problem: WorkingProblem,
    c0: Fraction,
    handoff_remaining: int = HANDOFF_REMAINING,
    *,
    worker_count: int = 1,
    executor: Executor | None = None,
    on_event: EventCallback | None = None,
    rel_tol: Fraction = DEFAULT_REL_TOL,
    cut_eps: Fraction = CUT_EPS_FACTOR,
    inflation: Fraction = C0_INFLATION,
    max_denominator: int = POOL_MAX_DENOMINATOR,
    checkpoint_path: Path | None = None,
    resume: Checkpoint | None = None,
) -> SearchResult:
    """Run the branch-then-enumerate pipeline and return the optimal G."""
    started = time.monotonic()
    g = problem.g
    j = g - handoff_remaining

    if j < 0:
        logger.info("Only %d unknowns: running the resultant search directly.", g + 1)
        search = ResultantSearch(problem, c0, on_event, rel_tol, inflation, max_denominator)
        result = search.run()
        result.mode = "combined"
        return result

    bnb = BranchAndBound(problem, c0, on_event, rel_tol, cut_eps, inflation,
                         map_fn=executor.map if executor is not None and worker_count > 1 else map,
                         checkpoint_path=checkpoint_path)
    if resume is not None:
        bnb.restore(resume)
    logger.info("Branching until a_0..a_%d are fixed (%d unknowns left).", j, handoff_remaining)

    loop = asyncio.get_running_loop()
    leaves = bnb.until(j)
    leaf_count = 0
    while batch := list(itertools.islice(leaves, max(worker_count, 1))):
        task = functools.partial(_finish_leaf, problem, bnb.upper, rel_tol, max_denominator)
        if executor is not None and worker_count > 1:
            outcomes = await asyncio.gather(
                *(loop.run_in_executor(executor, task, node) for node in batch))
        else:
            outcomes = [task(node) for node in batch]
        for node, (best, stats) in zip(batch, outcomes):
            leaf_count += 1
            bnb.stats.vectors_enumerated += stats.vectors_enumerated
            bnb.stats.candidates_normed += stats.candidates_normed
            bnb.offer(best)
            bnb.complete(node)
            bnb.emit(SearchEvent("leaf", bound=node.bound, depth=node.depth,
                                 detail=f"fixed={list(node.fixed)} "
                                        f"vectors={stats.vectors_enumerated}"))

    if bnb.incumbent is None:
        raise InvalidBoundError(f"no integer polynomial has norm below {float(bnb.c0):.6e}")
    elapsed = time.monotonic() - started
    logger.info("Combined search: %d leaves, %d nodes, %.1fs.", leaf_count,
                bnb.stats.nodes_dequeued, elapsed)
    return SearchResult(best=bnb.incumbent, stats=bnb.stats, mode="combined", wall_time=elapsed)
