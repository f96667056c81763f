"""
Domain types: points, configurations, rooted labeled forests, edge kernels
and the scalar values they produce.

A configuration splits a finite set of labeled points into roots (eta, size m)
and vertices (gamma, size n). A forest is a parent map on the vertices whose
every chain of parents ends in a root. Its weight is

    G(f) = h^(m+n) * prod over edges (parent, child) of nu(parent, child)

Values are exact Fractions unless a transcendental kernel (or a float h)
forces binary64 floats.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import (
    Annotated, Any, Dict, FrozenSet, Iterable, List, Literal, Mapping,
    Optional, Sequence, Tuple, Union,
)

from pydantic import (
    BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator, PrivateAttr,
    StrictInt, StrictStr, field_validator, model_validator,
)

from .errors import (
    ConfigurationError, InvalidReferenceError, KernelDomainError, ModeError,
    PreconditionError,
)

logger = logging.getLogger(__name__)

Label = Union[StrictInt, StrictStr]
KernelValue = Union[Fraction, float]


class NumericMode(str, Enum):
    """Arithmetic used for kernel values."""

    EXACT = "exact"
    FLOAT = "float"


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------

def parse_scalar(value: Any) -> KernelValue:
    """
    Parse a rational-or-float literal.

    Strings ("3/7", "-2", "0.25") and integers become Fractions; floats stay
    floats so that exact mode can reject them later.
    """
    if isinstance(value, bool):
        raise ValueError(f"Not a numeric literal: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"Non-finite value: {value!r}")
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"Not a rational literal: {value!r} (expected 'p/q')") from None
    raise ValueError(f"Not a numeric literal: {value!r}")


def parse_rational(value: Any) -> Fraction:
    """Parse a literal that must be exact."""
    parsed = parse_scalar(value)
    if isinstance(parsed, float):
        raise ValueError(f"Expected a rational written as 'p/q', got float {value!r}")
    return parsed


def format_scalar(value: Union[KernelValue, int]) -> str:
    """Render a value as text: 'p/q' for rationals, repr for floats."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _dump_scalar(value: KernelValue) -> Union[str, float]:
    return value if isinstance(value, float) else str(value)


Scalar = Annotated[
    Union[Fraction, float],
    PlainValidator(parse_scalar),
    PlainSerializer(_dump_scalar),
]
Rational = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(str, return_type=str),
]


def mode_of(value: Union[KernelValue, int]) -> NumericMode:
    """Float values compute in float mode; ints and rationals in exact mode."""
    return NumericMode.FLOAT if isinstance(value, float) else NumericMode.EXACT


def coerce_scalar(value: Union[KernelValue, int], mode: NumericMode) -> KernelValue:
    """Convert value to the arithmetic of mode; floats never enter exact mode."""
    if mode is NumericMode.EXACT:
        if isinstance(value, float):
            raise ModeError(f"Float value {value!r} cannot be used in exact mode")
        return Fraction(value)
    return float(value)


def zero(mode: NumericMode) -> KernelValue:
    return Fraction(0) if mode is NumericMode.EXACT else 0.0


def one(mode: NumericMode) -> KernelValue:
    return Fraction(1) if mode is NumericMode.EXACT else 1.0


def scalars_match(a: Union[KernelValue, int], b: Union[KernelValue, int], tolerance: float = 1e-9) -> bool:
    """Exact equality for two rationals, relative tolerance as soon as a float is involved."""
    if mode_of(a) is NumericMode.EXACT and mode_of(b) is NumericMode.EXACT:
        return a == b
    return math.isclose(float(a), float(b), rel_tol=tolerance)


# ---------------------------------------------------------------------------
# Points and configurations
# ---------------------------------------------------------------------------

class Point(BaseModel):
    """A labeled site, optionally placed in d-dimensional space."""

    model_config = ConfigDict(frozen=True)

    label: Label
    position: Optional[Tuple[float, ...]] = None

    @field_validator("position")
    @classmethod
    def _non_empty_position(cls, value):
        if value is not None and len(value) == 0:
            raise ValueError("position needs at least one coordinate")
        return value

    @property
    def dimension(self) -> Optional[int]:
        return None if self.position is None else len(self.position)


PointLike = Union[Point, StrictInt, StrictStr, Tuple[Any, Sequence[float]]]


def _as_point(item: Any) -> Point:
    if isinstance(item, Point):
        return item
    if isinstance(item, tuple):
        label, position = item
        return Point(label=label, position=tuple(position))
    return Point(label=item)


class Configuration(BaseModel):
    """
    Roots (eta) and vertices (gamma) of a finite configuration.

    Labels are unique within each side. A label shared by both sides is
    representable only as the boundary state where Q vanishes; forest
    operations reject it.
    """

    model_config = ConfigDict(frozen=True)

    roots: Tuple[Point, ...] = ()
    vertices: Tuple[Point, ...] = ()

    @model_validator(mode="after")
    def _check_invariants(self):
        for side, points in (("roots", self.roots), ("vertices", self.vertices)):
            labels = [p.label for p in points]
            if len(set(labels)) != len(labels):
                duplicates = sorted({str(lab) for lab in labels if labels.count(lab) > 1})
                raise ConfigurationError(f"Duplicate labels among {side}: {', '.join(duplicates)}")

        dimensions = {p.dimension for p in self.roots + self.vertices}
        if len(dimensions) > 1:
            if None in dimensions:
                raise ConfigurationError("Positions must be given for all points or for none")
            raise ConfigurationError(f"Inconsistent position dimensions: {sorted(dimensions)}")
        return self

    @classmethod
    def of(cls, roots: Iterable[PointLike] = (), vertices: Iterable[PointLike] = ()) -> "Configuration":
        """Build from labels, (label, position) pairs or Points."""
        return cls(
            roots=tuple(_as_point(p) for p in roots),
            vertices=tuple(_as_point(p) for p in vertices),
        )

    @classmethod
    def anonymous(cls, m: int, n: int) -> "Configuration":
        """Roots x1..xm and vertices y1..yn without positions."""
        if m < 0 or n < 0:
            raise PreconditionError(f"Negative sizes: m={m}, n={n}")
        return cls.of([f"x{i}" for i in range(1, m + 1)], [f"y{j}" for j in range(1, n + 1)])

    @property
    def m(self) -> int:
        return len(self.roots)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def total(self) -> int:
        return self.m + self.n

    @property
    def ground(self) -> Tuple[Point, ...]:
        """Roots followed by vertices; indices into this tuple are bit positions."""
        return self.roots + self.vertices

    @property
    def root_labels(self) -> Tuple[Label, ...]:
        return tuple(p.label for p in self.roots)

    @property
    def vertex_labels(self) -> Tuple[Label, ...]:
        return tuple(p.label for p in self.vertices)

    @property
    def labels(self) -> Tuple[Label, ...]:
        return self.root_labels + self.vertex_labels

    @property
    def overlap(self) -> FrozenSet[Label]:
        return frozenset(self.root_labels) & frozenset(self.vertex_labels)

    @property
    def dimension(self) -> Optional[int]:
        ground = self.ground
        return ground[0].dimension if ground else None

    def points_by_label(self) -> Dict[Label, Point]:
        return {p.label: p for p in self.ground}

    def require_disjoint(self) -> None:
        if self.overlap:
            shared = ", ".join(sorted(str(lab) for lab in self.overlap))
            raise ConfigurationError(f"Roots and vertices share labels: {shared}")

    def relabel(self, mapping: Mapping[Label, Label]) -> "Configuration":
        def move(p: Point) -> Point:
            return Point(label=mapping.get(p.label, p.label), position=p.position)
        return Configuration(
            roots=tuple(move(p) for p in self.roots),
            vertices=tuple(move(p) for p in self.vertices),
        )


# ---------------------------------------------------------------------------
# Edge kernels
# ---------------------------------------------------------------------------

def _distance(x: Point, y: Point) -> float:
    if x.position is None or y.position is None:
        raise KernelDomainError(
            (x.label, y.label),
            f"Distance kernel needs positions on both points {x.label!r}-{y.label!r}",
        )
    if len(x.position) != len(y.position):
        raise KernelDomainError((x.label, y.label), "Points have different dimensions")
    return math.dist(x.position, y.position)


class _KernelBase(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def is_exact(self) -> bool:
        return False

    def evaluate(self, x: Point, y: Point) -> KernelValue:
        raise NotImplementedError

    def __call__(self, x: Point, y: Point) -> KernelValue:
        return self.evaluate(x, y)


class ConstantKernel(_KernelBase):
    """nu = c everywhere; c = 1 turns weighted sums into counts."""

    kind: Literal["constant"] = "constant"
    c: Scalar = Fraction(1)

    @property
    def is_exact(self) -> bool:
        return not isinstance(self.c, float)

    def evaluate(self, x: Point, y: Point) -> KernelValue:
        return self.c


class ExponentialKernel(_KernelBase):
    """nu = exp(-alpha * dist)."""

    kind: Literal["exponential"] = "exponential"
    alpha: float = 1.0

    def evaluate(self, x: Point, y: Point) -> KernelValue:
        return math.exp(-self.alpha * _distance(x, y))


class GaussianKernel(_KernelBase):
    """nu = exp(-alpha * dist^2)."""

    kind: Literal["gaussian"] = "gaussian"
    alpha: float = 1.0

    def evaluate(self, x: Point, y: Point) -> KernelValue:
        return math.exp(-self.alpha * _distance(x, y) ** 2)


class HardcoreKernel(_KernelBase):
    """nu = 1 if dist < radius else 0. Values are exact."""

    kind: Literal["hardcore"] = "hardcore"
    radius: float = Field(1.0, gt=0)

    @property
    def is_exact(self) -> bool:
        return True

    def evaluate(self, x: Point, y: Point) -> KernelValue:
        return Fraction(1) if _distance(x, y) < self.radius else Fraction(0)


class PairValue(BaseModel):
    """One entry of an explicit kernel table."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pair: Tuple[Label, Label]
    value: Rational


def _index_pairs(values: Iterable[PairValue]) -> Dict[FrozenSet[Label], Fraction]:
    table: Dict[FrozenSet[Label], Fraction] = {}
    for entry in values:
        a, b = entry.pair
        if a == b:
            raise ValueError(f"Explicit kernel entry pairs {a!r} with itself")
        key = frozenset((a, b))
        if key in table and table[key] != entry.value:
            raise ValueError(f"Asymmetric explicit kernel entries for pair ({a!r}, {b!r})")
        table[key] = entry.value
    return table


class ExplicitKernel(_KernelBase):
    """Rational values keyed by unordered label pair."""

    kind: Literal["explicit"] = "explicit"
    values: Tuple[PairValue, ...] = ()

    _table: Dict[FrozenSet[Label], Fraction] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_table(self):
        _index_pairs(self.values)
        return self

    def model_post_init(self, __context: Any) -> None:
        # Entries are validated by _check_table.
        self._table = {frozenset(entry.pair): entry.value for entry in self.values}

    @classmethod
    def from_mapping(cls, mapping: Mapping[Tuple[Label, Label], Any]) -> "ExplicitKernel":
        return cls(values=tuple(
            PairValue(pair=pair, value=value) for pair, value in mapping.items()
        ))

    @property
    def is_exact(self) -> bool:
        return True

    def evaluate(self, x: Point, y: Point) -> KernelValue:
        try:
            return self._table[frozenset((x.label, y.label))]
        except KeyError:
            raise KernelDomainError((x.label, y.label)) from None

    def relabel(self, mapping: Mapping[Label, Label]) -> "ExplicitKernel":
        return ExplicitKernel(values=tuple(
            PairValue(pair=(mapping.get(a, a), mapping.get(b, b)), value=entry.value)
            for entry in self.values
            for a, b in [entry.pair]
        ))


EdgeKernel = Annotated[
    Union[ConstantKernel, ExponentialKernel, GaussianKernel, HardcoreKernel, ExplicitKernel],
    Field(discriminator="kind"),
]


def resolve_mode(h: KernelValue, nu: _KernelBase, mode: Optional[NumericMode] = None) -> NumericMode:
    """
    Pick the arithmetic for a computation with vertex weight h and kernel nu.

    Without an explicit mode, exact is used whenever both inputs allow it.
    """
    exact_possible = nu.is_exact and mode_of(h) is NumericMode.EXACT
    if mode is None:
        return NumericMode.EXACT if exact_possible else NumericMode.FLOAT
    mode = NumericMode(mode)
    if mode is NumericMode.EXACT and not exact_possible:
        culprit = "h" if isinstance(h, float) else f"{nu.kind} kernel"
        raise ModeError(f"Exact mode requires rational inputs; {culprit} is float-valued")
    return mode


# ---------------------------------------------------------------------------
# Forests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Forest:
    """Parent map from each vertex label to a root or vertex label."""

    parent: Mapping[Label, Label]

    def __post_init__(self):
        object.__setattr__(self, "parent", dict(self.parent))

    def __hash__(self):
        return hash(frozenset(self.parent.items()))

    @classmethod
    def from_choices(cls, labels: Sequence[Label], vertex_labels: Sequence[Label], choices: Sequence[int]) -> "Forest":
        """Build from parent choices given as indices into labels, one per vertex."""
        return cls({child: labels[i] for child, i in zip(vertex_labels, choices)})

    def __len__(self) -> int:
        return len(self.parent)

    def edges(self) -> List[Tuple[Label, Label]]:
        """Edges as (parent, child) pairs."""
        return [(par, child) for child, par in self.parent.items()]

    def sort_key(self, index: Mapping[Label, int], vertex_labels: Sequence[Label]) -> Tuple[int, ...]:
        """Parent choices as ground indices, in vertex order."""
        return tuple(index[self.parent[v]] for v in vertex_labels)

    def relabel(self, mapping: Mapping[Label, Label]) -> "Forest":
        return Forest({
            mapping.get(child, child): mapping.get(par, par)
            for child, par in self.parent.items()
        })


def is_valid_forest(forest: Forest, config: Configuration) -> bool:
    """
    Check totality and acyclicity of a parent map.

    Raises:
        InvalidReferenceError: a key or parent is not a label of config
    """
    config.require_disjoint()
    vertex_labels = config.vertex_labels
    vertices = set(vertex_labels)
    known = vertices | set(config.root_labels)

    for child, par in forest.parent.items():
        if child not in vertices:
            raise InvalidReferenceError(child, f"Parent map key {child!r} is not a vertex")
        if par not in known:
            raise InvalidReferenceError(par)

    if len(forest.parent) != len(vertices):
        return False

    roots = set(config.root_labels)
    n = len(vertex_labels)
    for v in vertex_labels:
        node, steps = v, 0
        while node not in roots:
            node = forest.parent[node]
            steps += 1
            if steps > n:
                return False
    return True


def kernel_product(x: Point, others: Iterable[Point], nu: _KernelBase, mode: NumericMode) -> KernelValue:
    """Product of nu(x, y) over y in others; 1 for an empty collection."""
    product = one(mode)
    for y in others:
        product *= coerce_scalar(nu.evaluate(x, y), mode)
    return product


def edge_product(
    forest: Forest,
    points: Mapping[Label, Point],
    nu: _KernelBase,
    mode: NumericMode,
) -> KernelValue:
    """Product of nu over the edges of forest; no validity check."""
    product = one(mode)
    for par, child in forest.edges():
        product *= coerce_scalar(nu.evaluate(points[par], points[child]), mode)
    return product


def forest_weight(
    forest: Forest,
    config: Configuration,
    h: KernelValue,
    nu: _KernelBase,
    mode: Optional[NumericMode] = None,
) -> KernelValue:
    """
    Analytic contribution G(f) = h^(m+n) * prod nu(parent, child).

    Raises:
        PreconditionError: forest is not a valid forest on config
        KernelDomainError: nu is undefined on one of the edges
    """
    if not is_valid_forest(forest, config):
        raise PreconditionError(f"Not a valid forest on the configuration: {forest.parent}")
    mode = resolve_mode(h, nu, mode)
    weight = coerce_scalar(h, mode) ** config.total
    return weight * edge_product(forest, config.points_by_label(), nu, mode)
