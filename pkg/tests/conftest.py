from __future__ import annotations

import itertools
import random
from typing import Callable

import pytest

from src.factor_kb import FactorKB
from src.norm import NormEnclosure
from src.poly import IntPoly
from src.search.base import WorkingProblem


@pytest.fixture(scope="session")
def kb() -> FactorKB:
    return FactorKB.load()


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20100)


BruteForce = Callable[[WorkingProblem, list[range]], tuple[IntPoly, NormEnclosure]]


@pytest.fixture
def brute_force() -> BruteForce:
    """Exhaustive minimum of the working-problem norm over a coefficient box."""

    def search(problem: WorkingProblem, box: list[range]) -> tuple[IntPoly, NormEnclosure]:
        rows = [problem.basis_values(t) for t in problem.sample_points()]
        best: tuple[IntPoly, NormEnclosure] | None = None
        for coeffs in itertools.product(*box):
            if coeffs[-1] < 1:
                continue
            if best is not None and any(
                    abs(sum(b * a for b, a in zip(row, coeffs))) > best[1].hi for row in rows):
                continue
            G = IntPoly(coeffs)
            norm = problem.norm(G)
            if best is None or norm.hi < best[1].hi:
                best = (G, norm)
        assert best is not None
        return best

    return search


def same_norm(a: NormEnclosure, b: NormEnclosure) -> bool:
    return a.lo <= b.hi and b.lo <= a.hi
