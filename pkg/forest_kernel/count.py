"""
Exact forest counting.

N(m|n) is the number of rooted labeled forests with m given roots and n
further vertices. Closed form m(n+m)^(n-1); recursion
N(m|n) = sum_k C(n,k) N(m+k-1|n-k); the algebra of the induction step that
connects them; and the m = 1 specialization, Cayley's N^(N-2).

Conventions for degenerate sizes: N(m|0) = 1 for every m >= 0 (the edgeless
forest, and the empty configuration), N(0|n) = 0 for n >= 1.
"""

import logging
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, NonNegativeInt

from .enumeration import brute_force_count
from .errors import PreconditionError
from .model import Configuration

logger = logging.getLogger(__name__)


class CountQuery(BaseModel):
    """Sizes |eta| = m and |gamma| = n."""

    model_config = ConfigDict(frozen=True)

    m: NonNegativeInt
    n: NonNegativeInt


def pascal_rows(n: int) -> Iterator[Tuple[int, ...]]:
    """Rows 0..n of Pascal's triangle, each built from the previous one."""
    row: Tuple[int, ...] = (1,)
    yield row
    for _ in range(n):
        row = (1,) + tuple(row[k] + row[k + 1] for k in range(len(row) - 1)) + (1,)
        yield row


@lru_cache(maxsize=256)
def binomial_row(n: int) -> Tuple[int, ...]:
    """C(n, 0), ..., C(n, n) by Pascal-row accumulation."""
    if n < 0:
        raise PreconditionError(f"Negative binomial row {n}")
    *_, row = pascal_rows(n)
    return row


def closed_form_count(query: CountQuery) -> int:
    """m(n+m)^(n-1), with the degenerate conventions of this module."""
    m, n = query.m, query.n
    if n == 0:
        return 1
    if m == 0:
        return 0
    return m * (n + m) ** (n - 1)


class CountTable:
    """
    N(m|n) by levels of the total t = m + n.

    Level t holds N(t-j|j) for j up to the table width and reads only level
    t-1, so any size is reached without recursion. Asking for a larger n
    rebuilds the table at that width.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._width = -1
        self._binomials: List[Tuple[int, ...]] = []
        self._levels: List[List[int]] = []

    def _next_level(self, total: int) -> List[int]:
        previous = self._levels[-1]
        level = [1]
        for j in range(1, min(self._width, total) + 1):
            if j == total:
                level.append(0)
                continue
            row = self._binomials[j]
            level.append(sum(row[k] * previous[j - k] for k in range(j + 1)))
        return level

    def count(self, m: int, n: int) -> int:
        with self._lock:
            if n > self._width:
                self._width = n
                self._binomials = list(pascal_rows(n))
                self._levels = [[1]]
            while len(self._levels) <= m + n:
                self._levels.append(self._next_level(len(self._levels)))
            return self._levels[m + n][n]


_count_table = CountTable()


def count_recursion(query: CountQuery) -> int:
    """N(m|n) = sum_{k=0}^{n} C(n,k) N(m+k-1|n-k), tabulated on (m, n)."""
    return _count_table.count(query.m, query.n)


@dataclass(frozen=True)
class InductionReport:
    """
    The induction step in exact rationals.

    s is the substituted right-hand side; m1/m2 are the closed forms of the two
    parts and m1_sum/m2_sum the sums they are defined by; m2_split is the
    intermediate two-term form of m2.
    """
    m: int
    n: int
    s: Fraction
    m1: Fraction
    m2: Fraction
    m1_sum: Fraction
    m2_sum: Fraction
    m2_split: Fraction
    target: Fraction
    holds: bool


def induction_step_check(m: int, n: int) -> InductionReport:
    """
    Substitute N(m+k-1|n-k) = (m+k-1)(m+n-1)^(n-k-1) into the recursion and
    confirm the sum equals M1 + M2 = m(m+n)^(n-1).

    Raises:
        PreconditionError: m+n < 2 (the algebra divides by m+n-1) or a
            negative size
    """
    if m < 0 or n < 0:
        raise PreconditionError(f"Negative sizes: m={m}, n={n}")
    if m + n < 2:
        raise PreconditionError(f"Induction step needs m+n >= 2 (m+n-1 is a divisor), got m={m}, n={n}")

    row = binomial_row(n)
    d = Fraction(m + n - 1)
    top = Fraction(m + n)

    s = sum(row[k] * (m + k - 1) * d ** (n - k - 1) for k in range(n + 1))
    m1_sum = m * sum(row[k] * d ** (n - k - 1) for k in range(n + 1))
    m2_sum = sum(row[k] * (k - 1) * d ** (n - k - 1) for k in range(n + 1))

    m1 = m * top ** n / d
    m2 = -m * top ** (n - 1) / d
    m2_split = n * top ** (n - 1) / d - top ** n / d
    target = m * top ** (n - 1)

    holds = (
        s == m1_sum + m2_sum
        and m1 == m1_sum
        and m2 == m2_sum == m2_split
        and s == m1 + m2 == target
    )
    if not holds:
        logger.warning(f"Induction step fails at m={m} n={n}: S={s} M1={m1} M2={m2}")
    return InductionReport(
        m=m, n=n, s=Fraction(s), m1=m1, m2=m2, m1_sum=Fraction(m1_sum), m2_sum=Fraction(m2_sum),
        m2_split=m2_split, target=target, holds=holds,
    )


def cayley_tree_count(size: int) -> int:
    """Labeled trees on size vertices: size^(size-2), and 1 for a single vertex."""
    if size < 1:
        raise PreconditionError(f"Tree size must be positive, got {size}")
    return 1 if size == 1 else size ** (size - 2)


@dataclass(frozen=True)
class CayleyReport:
    size: int
    count: int
    formula: int
    holds: bool


def cayley_check(size: int, limit: Optional[int] = None) -> CayleyReport:
    """
    Compare the brute-force forest count with one root and size-1 vertices
    against size^(size-2).
    """
    formula = cayley_tree_count(size)
    count = brute_force_count(Configuration.anonymous(1, size - 1), limit)
    return CayleyReport(size=size, count=count, formula=formula, holds=count == formula)
