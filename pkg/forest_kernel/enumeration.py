"""
Generation of all rooted labeled forests on a configuration.

Two independent generators live here:

* filter_forests: the brute-force oracle. It scans every parent map that
  picks, for each vertex, a parent among the other m+n-1 points and keeps the
  acyclic ones. Nothing else in the package is consulted.
* peel_forests: the production enumerator. It removes the first root x,
  chooses the set xi of vertices attached to x, promotes xi to roots and
  recurses, which is the decomposition behind the root-peeling identity.

verify_identity checks that identity numerically on the oracle's output.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, Optional, Sequence, Tuple

from . import config as config_module
from .errors import PreconditionError
from .limits import check_size
from .model import (
    Configuration, Forest, KernelValue, Label, NumericMode, Point, _KernelBase,
    coerce_scalar, edge_product, kernel_product, resolve_mode, scalars_match, zero,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForestSet:
    """All forests of a configuration in lexicographic parent-choice order."""
    configuration: Configuration
    forests: Tuple[Forest, ...]

    def __len__(self) -> int:
        return len(self.forests)

    def __iter__(self) -> Iterator[Forest]:
        return iter(self.forests)

    def __getitem__(self, index: int) -> Forest:
        return self.forests[index]


def subsets_by_size(items: Sequence) -> Iterator[Tuple]:
    """Yield every subset: empty set first, then by cardinality, lexicographic within."""
    for size in range(len(items) + 1):
        yield from itertools.combinations(items, size)


# ---------------------------------------------------------------------------
# Oracle: parent-map filter
# ---------------------------------------------------------------------------

def _reaches_roots(parents: Sequence[int], m: int) -> bool:
    """
    Acyclicity of a parent map given as ground indices.

    Vertex i sits at ground index m + i; indices below m are roots.
    """
    n = len(parents)
    settled = [False] * n
    for start in range(n):
        path = []
        i = start
        while not settled[i]:
            path.append(i)
            if len(path) > n:
                return False
            p = parents[i]
            if p < m:
                break
            i = p - m
        for j in path:
            settled[j] = True
    return True


def filter_forests(config: Configuration, limit: Optional[int] = None) -> Iterator[Forest]:
    """Brute-force oracle over all (m+n-1)^n parent maps, in lexicographic order."""
    config.require_disjoint()
    check_size(config.total, limit)

    m, n = config.m, config.n
    labels = config.labels
    vertex_labels = config.vertex_labels
    if n == 0:
        yield Forest({})
        return
    if m == 0:
        return

    choices = [[j for j in range(m + n) if j != m + i] for i in range(n)]
    for parents in itertools.product(*choices):
        if _reaches_roots(parents, m):
            yield Forest.from_choices(labels, vertex_labels, parents)


def brute_force_count(config: Configuration, limit: Optional[int] = None) -> int:
    """Number of forests found by the parent-map filter."""
    count = sum(1 for _ in filter_forests(config, limit))
    logger.debug(f"Brute force: m={config.m} n={config.n} -> {count}")
    return count


# ---------------------------------------------------------------------------
# Production: root peeling
# ---------------------------------------------------------------------------

def _peel(roots: Tuple[Label, ...], vertices: Tuple[Label, ...]) -> Iterator[Dict[Label, Label]]:
    if not roots:
        if not vertices:
            yield {}
        return
    pivot, rest = roots[0], roots[1:]
    for xi in subsets_by_size(vertices):
        yield from _peel_branch(pivot, rest, vertices, xi)


def _peel_branch(
    pivot: Label,
    rest: Tuple[Label, ...],
    vertices: Tuple[Label, ...],
    xi: Tuple[Label, ...],
) -> Iterator[Dict[Label, Label]]:
    chosen = set(xi)
    remaining = tuple(v for v in vertices if v not in chosen)
    for sub in _peel(rest + xi, remaining):
        parent = dict.fromkeys(xi, pivot)
        parent.update(sub)
        yield parent


def peel_forests(config: Configuration, limit: Optional[int] = None) -> Iterator[Forest]:
    """Forests generated by root peeling, in peeling order."""
    config.require_disjoint()
    check_size(config.total, limit)
    for parent in _peel(config.root_labels, config.vertex_labels):
        yield Forest(parent)


def enumerate_forests(
    config: Configuration,
    limit: Optional[int] = None,
    workers: Optional[int] = None,
) -> ForestSet:
    """
    All forests of config, sorted lexicographically by parent choice.

    With workers > 1 the top-level xi branches are expanded on a thread pool
    and merged in branch order.
    """
    config.require_disjoint()
    check_size(config.total, limit)
    workers = workers or config_module.settings.workers

    roots, vertices = config.root_labels, config.vertex_labels
    if workers > 1 and roots:
        pivot, rest = roots[0], roots[1:]
        branches = list(subsets_by_size(vertices))
        with ThreadPoolExecutor(max_workers=workers) as executor:
            expanded = executor.map(
                lambda xi: list(_peel_branch(pivot, rest, vertices, xi)), branches
            )
            parents = [p for branch in expanded for p in branch]
    else:
        parents = list(_peel(roots, vertices))

    index = {label: i for i, label in enumerate(config.labels)}
    forests = sorted((Forest(p) for p in parents), key=lambda f: f.sort_key(index, vertices))
    logger.debug(f"Enumerated {len(forests)} forests for m={config.m} n={config.n}")
    return ForestSet(configuration=config, forests=tuple(forests))


# ---------------------------------------------------------------------------
# Root-peeling identity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    """Both sides of the root-peeling identity for one pivot."""
    pivot: Label
    lhs: KernelValue
    rhs: KernelValue
    mode: NumericMode
    holds: bool


def _edge_sum(config: Configuration, nu: _KernelBase, mode: NumericMode, limit: Optional[int]) -> KernelValue:
    points = config.points_by_label()
    total = zero(mode)
    for forest in filter_forests(config, limit):
        total += edge_product(forest, points, nu, mode)
    return total


def verify_identity(
    config: Configuration,
    x: Label,
    nu: _KernelBase,
    h: KernelValue = Fraction(1),
    tolerance: Optional[float] = None,
    limit: Optional[int] = None,
) -> IdentityReport:
    """
    Check sum_f G(f) = h * sum_xi K(x; xi) * sum_f' G(f') by enumeration.

    The inner sums run over forests of the reduced configuration with roots
    eta minus x plus xi and vertices gamma minus xi. With h = 1 this is the
    plain edge-product identity.

    Raises:
        PreconditionError: x is not a root of config
    """
    config.require_disjoint()
    if x not in config.root_labels:
        raise PreconditionError(f"Pivot {x!r} is not a root")
    check_size(config.total, limit)
    tolerance = tolerance if tolerance is not None else config_module.settings.float_tolerance

    mode = resolve_mode(h, nu)
    h = coerce_scalar(h, mode)

    lhs = h ** config.total * _edge_sum(config, nu, mode, limit)

    pivot = next(p for p in config.roots if p.label == x)
    rest: Tuple[Point, ...] = tuple(p for p in config.roots if p.label != x)
    rhs = zero(mode)
    for xi in subsets_by_size(config.vertices):
        chosen = {p.label for p in xi}
        reduced = Configuration(
            roots=rest + xi,
            vertices=tuple(p for p in config.vertices if p.label not in chosen),
        )
        inner = h ** reduced.total * _edge_sum(reduced, nu, mode, limit)
        rhs += kernel_product(pivot, xi, nu, mode) * inner
    rhs *= h

    holds = scalars_match(lhs, rhs, tolerance)
    if not holds:
        logger.warning(f"Identity fails for pivot {x!r}: {lhs} != {rhs}")
    return IdentityReport(pivot=x, lhs=lhs, rhs=rhs, mode=mode, holds=holds)

