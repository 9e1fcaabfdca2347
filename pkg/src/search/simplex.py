"""
Exact rational simplex on a condensed tableau.

The tableau is kept in dictionary form

    x_B[i] = b[i] - sum_j A[i][j] x_N[j]
    z      = z0   + sum_j c[j]    x_N[j]          (maximized)

with Bland's rule for both the entering and the leaving variable, so
degenerate problems terminate. Infeasible starts go through a Phase I with
one auxiliary column.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

logger = logging.getLogger(__name__)

Bound = tuple[Fraction | None, Fraction | None]
Row = tuple[Sequence[Fraction], Fraction]


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    x: tuple[Fraction, ...] = ()
    value: Fraction | None = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


# ── Tableau ──────────────────────────────────────────────────────────────────

class _Tableau:
    def __init__(self, A: list[list[Fraction]], b: list[Fraction], n: int) -> None:
        self.A = A
        self.b = b
        self.c: list[Fraction] = [Fraction(0)] * n
        self.z0 = Fraction(0)
        self.nonbasis = list(range(n))
        self.basis = list(range(n, n + len(b)))
        self.pivots = 0

    def pivot(self, r: int, s: int) -> None:
        row = self.A[r]
        inv = 1 / row[s]
        for j in range(len(row)):
            row[j] = inv if j == s else row[j] * inv
        self.b[r] *= inv
        br = self.b[r]
        for i, other in enumerate(self.A):
            f = other[s]
            if i == r or f == 0:
                continue
            for j in range(len(other)):
                other[j] = -f * inv if j == s else other[j] - f * row[j]
            self.b[i] -= f * br
        f = self.c[s]
        if f != 0:
            for j in range(len(self.c)):
                self.c[j] = -f * inv if j == s else self.c[j] - f * row[j]
            self.z0 += f * br
        self.basis[r], self.nonbasis[s] = self.nonbasis[s], self.basis[r]
        self.pivots += 1

    def step(self) -> LpStatus | None:
        try:
            _, s = min((self.nonbasis[j], j) for j in range(len(self.c)) if self.c[j] > 0)
        except ValueError:
            return LpStatus.OPTIMAL
        try:
            _, _, r = min((self.b[i] / self.A[i][s], self.basis[i], i)
                          for i in range(len(self.b)) if self.A[i][s] > 0)
        except ValueError:
            return LpStatus.UNBOUNDED
        self.pivot(r, s)
        return None

    def run(self) -> LpStatus:
        while (status := self.step()) is None:
            pass
        return status

    def drop_column(self, s: int) -> None:
        for row in self.A:
            del row[s]
        del self.c[s]
        del self.nonbasis[s]

    def drop_row(self, r: int) -> None:
        del self.A[r]
        del self.b[r]
        del self.basis[r]

    def phase_one(self, aux: int) -> bool:
        """Find a feasible basis; False when the constraints are infeasible."""
        if all(v >= 0 for v in self.b):
            return True
        for row in self.A:
            row.append(Fraction(-1))
        self.nonbasis.append(aux)
        self.c = [Fraction(0)] * (len(self.nonbasis) - 1) + [Fraction(-1)]
        self.z0 = Fraction(0)
        _, _, r = min((v, self.basis[i], i) for i, v in enumerate(self.b))
        self.pivot(r, len(self.nonbasis) - 1)
        self.run()
        if self.z0 < 0:
            return False
        if aux in self.basis:
            r = self.basis.index(aux)
            s = next((j for j, v in enumerate(self.A[r]) if v != 0), None)
            if s is None:
                self.drop_row(r)
            else:
                self.pivot(r, s)
        if aux in self.nonbasis:
            self.drop_column(self.nonbasis.index(aux))
        return True

    def set_objective(self, costs: Sequence[Fraction]) -> None:
        """Maximize sum costs[v]·x_v over the structural variables v."""
        self.c = [Fraction(0)] * len(self.nonbasis)
        self.z0 = Fraction(0)
        col = {v: j for j, v in enumerate(self.nonbasis)}
        for i, v in enumerate(self.basis):
            if v < len(costs) and costs[v] != 0:
                w = costs[v]
                self.z0 += w * self.b[i]
                for j, a in enumerate(self.A[i]):
                    self.c[j] -= w * a
        for v, w in enumerate(costs):
            if w != 0 and v in col:
                self.c[col[v]] += w

    def values(self, n: int) -> list[Fraction]:
        x = [Fraction(0)] * n
        for i, v in enumerate(self.basis):
            if v < n:
                x[v] = self.b[i]
        return x


# ── Public API ───────────────────────────────────────────────────────────────

def minimize(objective: Sequence[Fraction], rows: Sequence[Row],
             bounds: Sequence[Bound] | None = None) -> LpResult:
    """min objective·x  subject to  coeffs·x <= rhs for every row and lo <= x <= hi.

    ``None`` in a bound means unbounded on that side; variables default to free.
    """
    n = len(objective)
    bounds = list(bounds) if bounds is not None else [(None, None)] * n
    if len(bounds) != n:
        raise ValueError("one bound pair per variable")

    # x_k = shift_k + sum sign·y_j with y >= 0
    shift: list[Fraction] = []
    parts: list[list[tuple[int, int]]] = []
    extra_rows: list[tuple[dict[int, Fraction], Fraction]] = []
    m_vars = 0
    for lo, hi in bounds:
        if lo is not None and hi is not None and lo > hi:
            return LpResult(LpStatus.INFEASIBLE)
        if lo is not None and hi is not None and lo == hi:
            shift.append(Fraction(lo))
            parts.append([])
        elif lo is not None:
            shift.append(Fraction(lo))
            parts.append([(m_vars, 1)])
            if hi is not None:
                extra_rows.append(({m_vars: Fraction(1)}, Fraction(hi) - lo))
            m_vars += 1
        elif hi is not None:
            shift.append(Fraction(hi))
            parts.append([(m_vars, -1)])
            m_vars += 1
        else:
            shift.append(Fraction(0))
            parts.append([(m_vars, 1), (m_vars + 1, -1)])
            m_vars += 2

    A: list[list[Fraction]] = []
    b: list[Fraction] = []
    for coeffs, rhs in rows:
        row = [Fraction(0)] * m_vars
        rhs = Fraction(rhs)
        for k, a in enumerate(coeffs):
            if a == 0:
                continue
            rhs -= a * shift[k]
            for j, sign in parts[k]:
                row[j] += sign * a
        if not any(row):
            if rhs < 0:
                return LpResult(LpStatus.INFEASIBLE)
            continue
        A.append(row)
        b.append(rhs)
    for sparse, rhs in extra_rows:
        row = [Fraction(0)] * m_vars
        for j, a in sparse.items():
            row[j] = a
        A.append(row)
        b.append(rhs)

    costs = [Fraction(0)] * m_vars
    for k, w in enumerate(objective):
        for j, sign in parts[k]:
            costs[j] -= sign * Fraction(w)

    tableau = _Tableau(A, b, m_vars)
    if not tableau.phase_one(aux=m_vars + len(b)):
        logger.debug("LP infeasible after %d pivots.", tableau.pivots)
        return LpResult(LpStatus.INFEASIBLE, pivots=tableau.pivots)
    tableau.set_objective(costs)
    if tableau.run() is LpStatus.UNBOUNDED:
        return LpResult(LpStatus.UNBOUNDED, pivots=tableau.pivots)

    y = tableau.values(m_vars)
    x = tuple(shift[k] + sum((sign * y[j] for j, sign in parts[k]), Fraction(0))
              for k in range(n))
    value = sum((Fraction(w) * xk for w, xk in zip(objective, x)), Fraction(0))
    return LpResult(LpStatus.OPTIMAL, x=x, value=value, pivots=tableau.pivots)


def maximize(objective: Sequence[Fraction], rows: Sequence[Row],
             bounds: Sequence[Bound] | None = None) -> LpResult:
    result = minimize([-Fraction(w) for w in objective], rows, bounds)
    if result.value is None:
        return result
    return LpResult(result.status, result.x, -result.value, result.pivots)
