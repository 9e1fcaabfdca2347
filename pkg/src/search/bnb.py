"""
Best-first branch and bound over integer coefficient vectors.

Nodes are ordered by their cutting-plane lower bound (deeper nodes first on
ties). Each dequeued node has its relaxation rounded into a candidate, then
branches four ways on its lowest coefficient that is not yet fixed.
"""

from __future__ import annotations

import functools
import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from src.config import C0_INFLATION, CHECKPOINT_INTERVAL, CUT_EPS_FACTOR, DEFAULT_REL_TOL
from src.poly import IntPoly
from src.records import Checkpoint, EnclosureRecord, NodeRecord, save_model
from src.norm import NormEnclosure
from src.search.base import (
    BaseSearch,
    EventCallback,
    Incumbent,
    SearchEvent,
    WorkingProblem,
)
from src.search.lsip import CoefConstraint, ConstraintSet, InfeasibleError, cutting_plane_solve

logger = logging.getLogger(__name__)

MapFn = Callable[[Callable, Iterable], Iterable]


class InvalidBoundError(ValueError):
    """No integer polynomial has norm below the starting bound c0."""


# ── Nodes ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SearchNode:
    constraints: ConstraintSet
    bound: Fraction
    a_bar: tuple[Fraction, ...]
    depth: int
    seq: int = 0

    @property
    def fixed(self) -> tuple[int, ...]:
        return self.constraints.fixed_prefix()


def _depth(constraints: ConstraintSet) -> int:
    return len(constraints.fixed_prefix())


def branch(node: SearchNode, g: int) -> list[SearchNode]:
    """Four-way split on the lowest unfixed coefficient.

    Children keep the parent's bound and relaxation until they are evaluated.
    """
    i = node.depth
    if i > g:
        return []
    x = node.a_bar[i]
    floor, ceil = math.floor(x), math.ceil(x)
    cs = node.constraints
    if i == g:
        cs = cs.restrict(g, 1, None) or cs
    pieces = [(ceil, ceil), (floor, floor), (ceil + 1, None), (None, floor - 1)]
    children: list[SearchNode] = []
    seen: set[ConstraintSet] = set()
    for lo, hi in pieces:
        child = cs.restrict(i, lo, hi)
        if child is None or child in seen:
            continue
        seen.add(child)
        children.append(SearchNode(child, node.bound, node.a_bar, _depth(child)))
    return children


def _round_half_toward_zero(x: Fraction) -> int:
    m = abs(x)
    whole = math.floor(m)
    r = whole + 1 if m - whole > Fraction(1, 2) else whole
    return r if x >= 0 else -r


def round_candidate(a_bar: Sequence[Fraction], problem: WorkingProblem,
                    rel_tol: Fraction = DEFAULT_REL_TOL) -> Incumbent | None:
    """Nearest-integer rounding (ties toward zero) with its certified norm."""
    coeffs = [_round_half_toward_zero(Fraction(a)) for a in a_bar]
    if not coeffs or coeffs[-1] < 1:
        return None
    G = IntPoly(tuple(coeffs))
    return Incumbent(G, problem.norm(G, rel_tol))


def evaluate_node(problem: WorkingProblem, eps: Fraction,
                  node: SearchNode) -> SearchNode | None:
    """Relaxation bound for ``node``; None when its constraints are infeasible."""
    try:
        solution, _ = cutting_plane_solve(problem, node.constraints, eps)
    except InfeasibleError:
        return None
    return replace(node, bound=max(solution.c_bar, node.bound), a_bar=solution.a_bar)


# ── Search ───────────────────────────────────────────────────────────────────

class BranchAndBound(BaseSearch):
    """
    Full mode returns the optimal G. ``until(j)`` instead yields every
    surviving node whose first j+1 coefficients are fixed, in priority order,
    for another search to finish; that search reports back through
    :meth:`offer` and :meth:`complete`.
    """

    MODE = "bnb"

    def __init__(
        self,
        problem: WorkingProblem,
        c0: Fraction,
        on_event: EventCallback | None = None,
        rel_tol: Fraction = DEFAULT_REL_TOL,
        cut_eps: Fraction = CUT_EPS_FACTOR,
        inflation: Fraction = C0_INFLATION,
        map_fn: MapFn = map,
        checkpoint_path: Path | None = None,
        checkpoint_interval: float = CHECKPOINT_INTERVAL,
    ) -> None:
        super().__init__(problem, Fraction(c0) * (1 + inflation), on_event, rel_tol)
        self.cut_eps = cut_eps
        self._map = map_fn
        self._queue: list[tuple[Fraction, int, int, SearchNode]] = []
        self._seq = itertools.count()
        self._outstanding: dict[int, SearchNode] = {}
        self._started = False
        self._checkpoint_path = checkpoint_path
        self._checkpoint_interval = checkpoint_interval
        self._last_checkpoint = time.monotonic()

    # ── Queue ────────────────────────────────────────────────────────────

    def _push(self, node: SearchNode) -> None:
        node = replace(node, seq=next(self._seq))
        heapq.heappush(self._queue, (node.bound, -node.depth, node.seq, node))
        self.stats.nodes_created += 1

    def _eps(self) -> Fraction:
        return self.cut_eps * self.upper

    def _prunable(self, node: SearchNode) -> bool:
        return node.bound - self._eps() >= self.upper

    def _evaluate_all(self, nodes: list[SearchNode]) -> list[SearchNode | None]:
        self.stats.lp_solves += len(nodes)
        return list(self._map(functools.partial(evaluate_node, self.problem, self._eps()), nodes))

    def _start(self) -> None:
        if self._started:
            return
        self._started = True
        if self._queue or self._outstanding:
            return  # resumed
        root = SearchNode(ConstraintSet(), Fraction(0), (), 0)
        [evaluated] = self._evaluate_all([root])
        if evaluated is None:
            raise InvalidBoundError("the root relaxation is infeasible")
        self._push(evaluated)

    # ── Main loop ────────────────────────────────────────────────────────

    def _nodes(self, handoff_depth: int | None) -> Iterator[SearchNode]:
        self._start()
        g = self.problem.g
        while self._queue:
            *_, node = heapq.heappop(self._queue)
            self.stats.nodes_dequeued += 1
            self.emit(SearchEvent("dequeued", bound=node.bound, depth=node.depth))
            if self._prunable(node):
                self._prune(node)
                continue
            self.offer(round_candidate(node.a_bar, self.problem, self.rel_tol))
            if self._prunable(node):
                self._prune(node)
                continue
            if handoff_depth is not None and node.depth >= handoff_depth:
                self.stats.handoffs += 1
                self._outstanding[node.seq] = node
                self.emit(SearchEvent("handoff", bound=node.bound, depth=node.depth,
                                      detail=f"fixed={list(node.fixed)}"))
                yield node
            elif node.depth <= g:
                for child in self._evaluate_all(branch(node, g)):
                    if child is None:
                        continue
                    if self._prunable(child):
                        self._prune(child)
                    else:
                        self._push(child)
            self._maybe_checkpoint()

    def _prune(self, node: SearchNode) -> None:
        self.stats.nodes_pruned += 1
        self.emit(SearchEvent("pruned", bound=node.bound, depth=node.depth))

    def _search(self) -> Incumbent | None:
        for _ in self._nodes(None):
            pass
        if self.incumbent is None:
            raise InvalidBoundError(f"no integer polynomial has norm below {float(self.c0):.6e}")
        return self.incumbent

    def until(self, j: int) -> Iterator[SearchNode]:
        """Yield nodes with a_0..a_j fixed instead of branching them further."""
        if not 0 <= j <= self.problem.g:
            raise ValueError(f"hand-off index {j} outside 0..{self.problem.g}")
        return self._nodes(j + 1)

    def complete(self, node: SearchNode) -> None:
        """Mark a handed-off node as finished by the consumer."""
        self._outstanding.pop(node.seq, None)

    # ── Checkpoints ──────────────────────────────────────────────────────

    def _maybe_checkpoint(self) -> None:
        if self._checkpoint_path is None:
            return
        if time.monotonic() - self._last_checkpoint < self._checkpoint_interval:
            return
        self.save_checkpoint(self._checkpoint_path)

    def save_checkpoint(self, path: Path) -> None:
        nodes = [entry[-1] for entry in self._queue] + list(self._outstanding.values())
        checkpoint = Checkpoint(
            g=self.problem.g,
            upper=self.c0,
            incumbent=list(self.incumbent.G.coeffs) if self.incumbent else None,
            incumbent_norm=(EnclosureRecord(lo=self.incumbent.norm.lo, hi=self.incumbent.norm.hi)
                            if self.incumbent else None),
            queue=[_node_record(n) for n in nodes],
            stats=self.stats,
        )
        save_model(path, checkpoint)
        self._last_checkpoint = time.monotonic()
        self.emit(SearchEvent("checkpoint", detail=f"{len(nodes)} nodes -> {path}"))

    def restore(self, checkpoint: Checkpoint) -> None:
        """Load a saved queue and incumbent; call before the first node is taken."""
        if checkpoint.g != self.problem.g:
            raise ValueError(f"checkpoint is for g={checkpoint.g}, problem has g={self.problem.g}")
        self.c0 = min(self.c0, checkpoint.upper)
        if checkpoint.incumbent is not None and checkpoint.incumbent_norm is not None:
            self.incumbent = Incumbent(
                IntPoly(tuple(checkpoint.incumbent)),
                NormEnclosure(checkpoint.incumbent_norm.lo, checkpoint.incumbent_norm.hi),
            )
        self.stats = checkpoint.stats.model_copy()
        for record in checkpoint.queue:
            constraints = ConstraintSet(tuple(CoefConstraint(i, kind, v)
                                              for i, kind, v in record.constraints))
            self._push(SearchNode(constraints, record.bound, tuple(record.a_bar), record.depth))
        logger.info("Resumed %d nodes (incumbent %s).", len(checkpoint.queue),
                    "none" if self.incumbent is None else self.incumbent.G)


def _node_record(node: SearchNode) -> NodeRecord:
    return NodeRecord(
        constraints=[(c.index, c.kind, c.value) for c in node.constraints],
        bound=node.bound,
        a_bar=list(node.a_bar),
        depth=node.depth,
    )
