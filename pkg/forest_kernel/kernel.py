"""
Evaluation of the forest kernel Q_{h,nu}(eta|gamma).

Q is defined by the root-peeling recursion, for any pivot x in eta:

    Q(eta|gamma) = h * sum_{xi subset gamma} K(x; xi) * Q(eta - x + xi | gamma - xi)
    K(x; xi)     = prod_{y in xi} nu(x, y)        (1 for empty xi)

with Q(empty|empty) = 1, Q(empty|gamma) = 0 for non-empty gamma, and
Q(eta|gamma) = 0 when eta and gamma share a point.

States are pairs of bitmasks over the ground points (roots first, then
vertices). The pivot is always the lowest-index root, which makes the memo
key canonical; a different top-level pivot can be requested to check pivot
independence.
"""

import logging
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from . import config as config_module
from .count import pascal_rows
from .enumeration import enumerate_forests
from .errors import MemoConsistencyError, PreconditionError
from .limits import check_size
from .model import (
    Configuration, KernelValue, Label, NumericMode, Point, _KernelBase,
    coerce_scalar, edge_product, kernel_product, one, resolve_mode,
    scalars_match, zero,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubsetState:
    """Roots and remaining vertices of one recursion step, as masks over ground."""
    ground: Tuple[Point, ...]
    root_mask: int
    vertex_mask: int

    def __post_init__(self):
        if self.root_mask & self.vertex_mask:
            raise PreconditionError("Root and vertex masks overlap")

    @classmethod
    def initial(cls, config: Configuration) -> "SubsetState":
        config.require_disjoint()
        full = (1 << config.total) - 1
        roots = (1 << config.m) - 1
        return cls(ground=config.ground, root_mask=roots, vertex_mask=full ^ roots)

    @property
    def key(self) -> Tuple[int, int]:
        return self.root_mask, self.vertex_mask

    @property
    def pivot(self) -> int:
        """Index of the lowest root."""
        if not self.root_mask:
            raise PreconditionError("State has no roots")
        return (self.root_mask & -self.root_mask).bit_length() - 1

    def peel(self, pivot: int, xi_mask: int) -> "SubsetState":
        """Remove pivot from the roots and promote xi to roots."""
        if not self.root_mask >> pivot & 1:
            raise PreconditionError(f"Ground index {pivot} is not a root of the state")
        if xi_mask & ~self.vertex_mask:
            raise PreconditionError("xi is not a subset of the state's vertices")
        return SubsetState(
            ground=self.ground,
            root_mask=(self.root_mask & ~(1 << pivot)) | xi_mask,
            vertex_mask=self.vertex_mask & ~xi_mask,
        )

    def roots(self) -> Tuple[Point, ...]:
        return tuple(p for i, p in enumerate(self.ground) if self.root_mask >> i & 1)

    def vertices(self) -> Tuple[Point, ...]:
        return tuple(p for i, p in enumerate(self.ground) if self.vertex_mask >> i & 1)


def k_factor(
    x: Point,
    xi: Iterable[Point],
    nu: _KernelBase,
    mode: Optional[NumericMode] = None,
) -> KernelValue:
    """
    K(x; xi) = prod_{y in xi} nu(x, y); 1 when xi is empty.

    Raises:
        PreconditionError: x belongs to xi
    """
    xi = tuple(xi)
    if any(y.label == x.label for y in xi):
        raise PreconditionError(f"Pivot {x.label!r} is a member of xi")
    mode = mode or (NumericMode.EXACT if nu.is_exact else NumericMode.FLOAT)
    return kernel_product(x, xi, nu, mode)


class QEvaluator:
    """
    Memoized root-peeling recursion over one ground set.

    Pairwise kernel values are tabulated once, and K(x; xi) is tabulated per
    pivot over all vertex subsets. In exact mode the table is scaled by the
    common denominator D of its entries so the recursion runs on integers:
    every forest on a state (R, V) has |V| edges, so

        Q(R|V) = h^(|R|+|V|) * D^(-|V|) * Q_int(R|V)

    and the memo holds Q_int, keyed by root_mask << size | vertex_mask. Float
    mode keeps h inside the recursion. With debug enabled every memo hit is
    re-derived from its children and compared.
    """

    def __init__(
        self,
        ground: Sequence[Point],
        h: KernelValue,
        nu: _KernelBase,
        mode: NumericMode,
        vertex_mask: int,
        debug: bool = False,
        tolerance: float = 1e-9,
    ):
        self.ground = tuple(ground)
        self.mode = mode
        self.h = coerce_scalar(h, mode)
        self.debug = debug
        self.tolerance = tolerance
        self.memo: Dict[int, KernelValue] = {}
        self.hits = 0

        # Children are always original vertices; parents can be any point.
        size = len(self.ground)
        self._size = size
        table: List[List[Optional[KernelValue]]] = [[None] * size for _ in range(size)]
        for j in range(size):
            if not vertex_mask >> j & 1:
                continue
            for i in range(size):
                if i != j and table[i][j] is None:
                    value = coerce_scalar(nu.evaluate(self.ground[i], self.ground[j]), mode)
                    table[i][j] = table[j][i] = value

        self.exact = mode is NumericMode.EXACT
        self.denominator = 1
        if self.exact:
            self.denominator = math.lcm(
                1, *(value.denominator for row in table for value in row if value is not None)
            )
            table = [
                [None if value is None else value.numerator * (self.denominator // value.denominator)
                 for value in row]
                for row in table
            ]
            self._zero, self._one = 0, 1
        else:
            self._zero, self._one = zero(mode), one(mode)
        self._nu = table

        self._offset = (vertex_mask & -vertex_mask).bit_length() - 1 if vertex_mask else 0
        self._width = vertex_mask.bit_length() - self._offset if vertex_mask else 0
        self._k_tables: Dict[int, List[KernelValue]] = {}

    @classmethod
    def for_configuration(
        cls,
        config: Configuration,
        h: KernelValue,
        nu: _KernelBase,
        mode: NumericMode,
        debug: bool = False,
        tolerance: float = 1e-9,
    ) -> "QEvaluator":
        state = SubsetState.initial(config)
        return cls(config.ground, h, nu, mode, state.vertex_mask, debug=debug, tolerance=tolerance)

    @property
    def states(self) -> int:
        return len(self.memo)

    def _k_table(self, pivot: int) -> List[KernelValue]:
        """K(pivot; xi) for every xi, indexed by xi >> offset."""
        table = self._k_tables.get(pivot)
        if table is None:
            row = [self._zero if value is None else value for value in self._nu[pivot]]
            table = [self._one] * (1 << self._width)
            for index in range(1, len(table)):
                low = index & -index
                table[index] = table[index ^ low] * row[self._offset + low.bit_length() - 1]
            self._k_tables[pivot] = table
        return table

    def _expand(self, root_mask: int, vertex_mask: int, pivot: int) -> KernelValue:
        rest = root_mask & ~(1 << pivot)
        k = self._k_table(pivot)
        offset = self._offset
        total = self._zero
        xi = vertex_mask
        if self.debug:
            while True:
                total += k[xi >> offset] * self._q(rest | xi, vertex_mask ^ xi)
                if not xi:
                    break
                xi = (xi - 1) & vertex_mask
        else:
            # key of (rest | xi, vertex_mask ^ xi) is base + xi * step
            get = self.memo.get
            q = self._q
            base = (rest << self._size) + vertex_mask
            step = (1 << self._size) - 1
            misses = 0
            while True:
                child = get(base + xi * step)
                if child is None:
                    misses += 1
                    child = q(rest | xi, vertex_mask ^ xi)
                total += k[xi >> offset] * child
                if not xi:
                    break
                xi = (xi - 1) & vertex_mask
            self.hits += (1 << bin(vertex_mask).count("1")) - misses
        return total if self.exact else self.h * total

    def _q(self, root_mask: int, vertex_mask: int) -> KernelValue:
        if root_mask & vertex_mask:
            return self._zero
        if not root_mask:
            return self._one if not vertex_mask else self._zero

        key = (root_mask << self._size) | vertex_mask
        cached = self.memo.get(key)
        pivot = (root_mask & -root_mask).bit_length() - 1
        if cached is not None:
            self.hits += 1
            if self.debug:
                derived = self._expand(root_mask, vertex_mask, pivot)
                if not scalars_match(derived, cached, self.tolerance):
                    raise MemoConsistencyError(
                        f"Memo entry for state {(root_mask, vertex_mask)} is {cached}, re-derived {derived}"
                    )
            return cached

        value = self._expand(root_mask, vertex_mask, pivot)
        self.memo[key] = value
        return value

    def _rescale(self, value: KernelValue, root_mask: int, vertex_mask: int) -> KernelValue:
        if not self.exact:
            return value
        vertices = bin(vertex_mask).count("1")
        points = bin(root_mask).count("1") + vertices
        return self.h ** points * Fraction(value, self.denominator ** vertices)

    def evaluate(self, state: SubsetState, pivot: Optional[int] = None) -> KernelValue:
        """
        Q on state, peeling the given ground index first (default: lowest root).
        """
        if pivot is None or pivot == state.pivot:
            value = self._q(state.root_mask, state.vertex_mask)
        elif not state.root_mask >> pivot & 1:
            raise PreconditionError(f"Ground index {pivot} is not a root of the state")
        else:
            value = self._expand(state.root_mask, state.vertex_mask, pivot)
        return self._rescale(value, state.root_mask, state.vertex_mask)


def _root_index(config: Configuration, pivot: Label) -> int:
    for i, label in enumerate(config.root_labels):
        if label == pivot:
            return i
    raise PreconditionError(f"Pivot {pivot!r} is not a root")


def q_eval(
    config: Configuration,
    h: KernelValue,
    nu: _KernelBase,
    pivot: Optional[Label] = None,
    mode: Optional[NumericMode] = None,
    limit: Optional[int] = None,
    debug: Optional[bool] = None,
    tolerance: Optional[float] = None,
) -> KernelValue:
    """
    Q_{h,nu}(eta|gamma) by the memoized recursion.

    Args:
        config: roots and vertices; a label overlap gives 0
        h: vertex weight
        nu: edge kernel
        pivot: root label peeled first (default: the first root)
        mode: exact or float; inferred from h and nu when omitted
        limit: point limit (default: the kernel limit from settings)
        debug: re-derive memo hits and cross-check a second top-level pivot

    Raises:
        SizeLimitError, KernelDomainError, ModeError, PreconditionError
    """
    settings = config_module.settings
    mode = resolve_mode(h, nu, mode)
    debug = settings.debug_memo if debug is None else debug
    tolerance = settings.float_tolerance if tolerance is None else tolerance

    if config.overlap:
        logger.info("Roots and vertices overlap: Q = 0")
        return zero(mode)
    check_size(config.total, limit, kernel=True)
    if config.m == 0:
        return one(mode) if config.n == 0 else zero(mode)

    pivot_index = 0 if pivot is None else _root_index(config, pivot)
    evaluator = QEvaluator.for_configuration(config, h, nu, mode, debug=debug, tolerance=tolerance)
    state = SubsetState.initial(config)
    value = evaluator.evaluate(state, pivot_index)

    if debug and config.m > 1:
        other = config.m - 1 if pivot_index != config.m - 1 else 0
        alternative = evaluator.evaluate(state, other)
        if not scalars_match(value, alternative, tolerance):
            raise MemoConsistencyError(
                f"Q depends on the pivot: {value} (index {pivot_index}) vs {alternative} (index {other})"
            )

    logger.debug(
        f"q_eval m={config.m} n={config.n}: {evaluator.states} states, {evaluator.hits} memo hits"
    )
    return value


Number = Union[int, Fraction, float]


class CollapsedTable:
    """
    Q(m|n) for a constant kernel nu = c, by levels of the total m + n.

    Level t holds Q(t-j|j) for j up to the table width and reads only level
    t-1. Asking for a larger n rebuilds the table at that width.
    """

    def __init__(self, h: Number, c: Number):
        self.h = h
        self.c = c
        self._lock = threading.Lock()
        self._width = -1
        self._binomials: List[Tuple[int, ...]] = []
        self._powers: List[Number] = []
        self._levels: List[List[Number]] = []

    def _next_level(self, total: int) -> List[Number]:
        previous = self._levels[-1]
        level: List[Number] = []
        for j in range(min(self._width, total) + 1):
            if j == total:
                level.append(0)
                continue
            row = self._binomials[j]
            level.append(self.h * sum(row[k] * self._powers[k] * previous[j - k] for k in range(j + 1)))
        return level

    def value(self, m: int, n: int) -> Number:
        with self._lock:
            if n > self._width:
                self._width = n
                self._binomials = list(pascal_rows(n))
                self._powers = [self.c ** k for k in range(n + 1)]
                self._levels = [[1]]
            while len(self._levels) <= m + n:
                self._levels.append(self._next_level(len(self._levels)))
            return self._levels[m + n][n]


@lru_cache(maxsize=32, typed=True)
def _collapsed_table(h: Number, c: Number) -> CollapsedTable:
    return CollapsedTable(h, c)


def q_eval_constant(m: int, n: int, h: Number = 1, c: Number = 1) -> Number:
    """
    Q for a constant kernel nu = c, where the state collapses to (m, n):

        Q(m|n) = h * sum_k C(n,k) c^k Q(m+k-1|n-k)

    Integer h and c give an exact integer.
    """
    if m < 0 or n < 0:
        raise PreconditionError(f"Negative sizes: m={m}, n={n}")
    return _collapsed_table(h, c).value(m, n)


def q_count(m: int, n: int) -> int:
    """Q_{1,1}(m|n): the number of forests with m roots and n vertices."""
    return q_eval_constant(m, n, 1, 1)


def q_eval_by_enumeration(
    config: Configuration,
    h: KernelValue,
    nu: _KernelBase,
    mode: Optional[NumericMode] = None,
    limit: Optional[int] = None,
) -> KernelValue:
    """Sum of G(f) over the enumerated forests."""
    mode = resolve_mode(h, nu, mode)
    if config.overlap:
        return zero(mode)
    forests = enumerate_forests(config, limit=limit)
    points = config.points_by_label()
    total = zero(mode)
    for forest in forests:
        total += edge_product(forest, points, nu, mode)
    return coerce_scalar(h, mode) ** config.total * total


def _determinant(matrix: List[List[KernelValue]], mode: NumericMode) -> KernelValue:
    """Gaussian elimination with partial pivoting; exact for Fractions."""
    a = [list(row) for row in matrix]
    size = len(a)
    det = one(mode)
    for col in range(size):
        pivot_row = max(range(col, size), key=lambda r: abs(a[r][col]))
        if a[pivot_row][col] == 0:
            return zero(mode)
        if pivot_row != col:
            a[col], a[pivot_row] = a[pivot_row], a[col]
            det = -det
        pivot = a[col][col]
        det *= pivot
        for r in range(col + 1, size):
            factor = a[r][col] / pivot
            if factor:
                for k in range(col, size):
                    a[r][k] -= factor * a[col][k]
    return det


def q_eval_by_matrix_tree(
    config: Configuration,
    h: KernelValue,
    nu: _KernelBase,
    mode: Optional[NumericMode] = None,
    limit: Optional[int] = None,
) -> KernelValue:
    """
    Q via the weighted matrix-tree theorem.

    Gluing all roots into one node turns rooted forests into spanning trees,
    so the edge-product sum is the determinant of the vertex block of the
    weighted Laplacian: diagonal sum_{z != y} nu(y, z) over all points,
    off-diagonal -nu(y, y'). Polynomial in n.
    """
    mode = resolve_mode(h, nu, mode)
    if config.overlap:
        return zero(mode)
    if limit is not None:
        check_size(config.total, limit, kernel=True)
    if config.m == 0:
        return one(mode) if config.n == 0 else zero(mode)

    ground = config.ground
    vertices = config.vertices
    matrix: List[List[KernelValue]] = []
    for y in vertices:
        row = []
        for y2 in vertices:
            row.append(zero(mode) if y2.label == y.label else -coerce_scalar(nu.evaluate(y, y2), mode))
        degree = zero(mode)
        for z in ground:
            if z.label != y.label:
                degree += coerce_scalar(nu.evaluate(y, z), mode)
        row[len(matrix)] = degree
        matrix.append(row)
    return coerce_scalar(h, mode) ** config.total * _determinant(matrix, mode)
