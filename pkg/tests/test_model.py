"""
Tests for points, configurations, kernels, forests and forest weights.
"""

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from forest_kernel.count import CountQuery, closed_form_count
from forest_kernel.enumeration import enumerate_forests
from forest_kernel.errors import (
    ConfigurationError, InvalidReferenceError, KernelDomainError, ModeError, PreconditionError,
)
from forest_kernel.model import (
    ConstantKernel, Configuration, ExplicitKernel, ExponentialKernel, Forest, GaussianKernel,
    HardcoreKernel, NumericMode, Point, coerce_scalar, forest_weight, format_scalar,
    is_valid_forest, mode_of, parse_scalar, resolve_mode, scalars_match,
)

from conftest import configurations, weighted_cases


class TestScalars:
    def test_parse_rational_strings(self):
        assert parse_scalar("3/7") == Fraction(3, 7)
        assert parse_scalar(" -2 ") == Fraction(-2)
        assert parse_scalar(4) == Fraction(4)

    def test_floats_stay_floats(self):
        value = parse_scalar(0.5)
        assert isinstance(value, float)

    @pytest.mark.parametrize("literal", [True, "abc", "1/0", None, float("nan")])
    def test_rejects_bad_literals(self, literal):
        with pytest.raises(ValueError):
            parse_scalar(literal)

    def test_float_in_exact_mode(self):
        with pytest.raises(ModeError):
            coerce_scalar(0.25, NumericMode.EXACT)
        assert coerce_scalar(Fraction(1, 4), NumericMode.FLOAT) == 0.25

    def test_matching(self):
        assert scalars_match(Fraction(1, 3), Fraction(2, 6))
        assert not scalars_match(Fraction(1, 3), Fraction(1, 3) + Fraction(1, 10**12))
        assert scalars_match(1 / 3, Fraction(1, 3), 1e-9)

    def test_format(self):
        assert format_scalar(Fraction(3, 7)) == "3/7"
        assert format_scalar(Fraction(16)) == "16"
        assert format_scalar(0.5) == "0.5"

    def test_mode_of(self):
        assert mode_of(Fraction(1, 2)) is NumericMode.EXACT
        assert mode_of(3) is NumericMode.EXACT
        assert mode_of(0.5) is NumericMode.FLOAT


class TestConfiguration:
    def test_anonymous_labels(self):
        config = Configuration.anonymous(2, 3)
        assert config.root_labels == ("x1", "x2")
        assert config.vertex_labels == ("y1", "y2", "y3")
        assert config.total == 5
        assert config.labels[:2] == config.root_labels

    def test_duplicate_within_side(self):
        with pytest.raises(ConfigurationError):
            Configuration.of(["a", "a"], ["b"])

    def test_partial_positions(self):
        with pytest.raises(ConfigurationError):
            Configuration.of([("a", (0.0,))], ["b"])

    def test_mixed_dimensions(self):
        with pytest.raises(ConfigurationError):
            Configuration.of([("a", (0.0,))], [("b", (0.0, 1.0))])

    def test_overlap_is_representable(self):
        config = Configuration.of(["a"], ["a", "b"])
        assert config.overlap == frozenset({"a"})
        with pytest.raises(ConfigurationError):
            config.require_disjoint()

    def test_integer_labels(self):
        config = Configuration.of([1], [2, 3])
        assert config.labels == (1, 2, 3)
        assert config.dimension is None

    def test_relabel(self):
        config = Configuration.anonymous(1, 2).relabel({"x1": "r", "y2": "z"})
        assert config.labels == ("r", "y1", "z")


class TestKernels:
    def test_constant(self):
        nu = ConstantKernel(c="2/3")
        assert nu(Point(label="a"), Point(label="b")) == Fraction(2, 3)
        assert nu.is_exact

    def test_float_constant_is_not_exact(self):
        assert not ConstantKernel(c=0.5).is_exact

    def test_exponential(self):
        nu = ExponentialKernel(alpha=2.0)
        value = nu(Point(label="a", position=(0.0, 0.0)), Point(label="b", position=(3.0, 4.0)))
        assert value == pytest.approx(math.exp(-10.0))

    def test_gaussian(self):
        nu = GaussianKernel(alpha=1.0)
        value = nu(Point(label="a", position=(0.0,)), Point(label="b", position=(2.0,)))
        assert value == pytest.approx(math.exp(-4.0))

    def test_hardcore(self):
        nu = HardcoreKernel(radius=1.5)
        origin = Point(label="a", position=(0.0,))
        assert nu(origin, Point(label="b", position=(1.0,))) == 1
        assert nu(origin, Point(label="c", position=(1.5,))) == 0

    def test_distance_kernel_needs_positions(self):
        with pytest.raises(KernelDomainError) as excinfo:
            ExponentialKernel()(Point(label="a"), Point(label="b"))
        assert excinfo.value.pair == ("a", "b")

    def test_explicit_is_symmetric(self):
        nu = ExplicitKernel.from_mapping({("a", "b"): "3/7"})
        a, b = Point(label="a"), Point(label="b")
        assert nu(a, b) == nu(b, a) == Fraction(3, 7)

    def test_explicit_missing_pair(self):
        nu = ExplicitKernel.from_mapping({("a", "b"): 1})
        with pytest.raises(KernelDomainError) as excinfo:
            nu(Point(label="a"), Point(label="c"))
        assert "'a'-'c'" in str(excinfo.value)

    def test_explicit_conflicting_entries(self):
        with pytest.raises(ValidationError):
            ExplicitKernel.from_mapping({("a", "b"): 1, ("b", "a"): 2})

    def test_explicit_rejects_floats(self):
        with pytest.raises(ValidationError):
            ExplicitKernel.from_mapping({("a", "b"): 0.5})

    def test_explicit_relabel(self):
        nu = ExplicitKernel.from_mapping({("a", "b"): 2}).relabel({"a": "z"})
        assert nu(Point(label="z"), Point(label="b")) == 2

    def test_resolve_mode(self):
        assert resolve_mode(Fraction(1), ConstantKernel()) is NumericMode.EXACT
        assert resolve_mode(Fraction(1), ExponentialKernel()) is NumericMode.FLOAT
        assert resolve_mode(1.0, ConstantKernel(), "float") is NumericMode.FLOAT
        with pytest.raises(ModeError):
            resolve_mode(Fraction(1), GaussianKernel(), NumericMode.EXACT)
        with pytest.raises(ModeError):
            resolve_mode(0.5, ConstantKernel(), NumericMode.EXACT)


class TestForest:
    def test_valid_chain(self):
        config = Configuration.anonymous(1, 2)
        assert is_valid_forest(Forest({"y1": "x1", "y2": "y1"}), config)

    def test_cycle(self):
        config = Configuration.anonymous(1, 2)
        assert not is_valid_forest(Forest({"y1": "y2", "y2": "y1"}), config)

    def test_not_total(self):
        config = Configuration.anonymous(1, 2)
        assert not is_valid_forest(Forest({"y1": "x1"}), config)

    def test_unknown_parent(self):
        config = Configuration.anonymous(1, 1)
        with pytest.raises(InvalidReferenceError) as excinfo:
            is_valid_forest(Forest({"y1": "nowhere"}), config)
        assert excinfo.value.label == "nowhere"

    def test_root_as_child(self):
        config = Configuration.anonymous(2, 1)
        with pytest.raises(InvalidReferenceError):
            is_valid_forest(Forest({"y1": "x1", "x2": "x1"}), config)

    def test_empty_forest_without_vertices(self):
        assert is_valid_forest(Forest({}), Configuration.anonymous(3, 0))

    def test_edges_and_hash(self):
        a = Forest({"y1": "x1", "y2": "y1"})
        b = Forest({"y2": "y1", "y1": "x1"})
        assert a == b and hash(a) == hash(b)
        assert sorted(a.edges()) == [("x1", "y1"), ("y1", "y2")]

    def test_from_choices(self):
        config = Configuration.anonymous(1, 2)
        forest = Forest.from_choices(config.labels, config.vertex_labels, (0, 1))
        assert forest.parent == {"y1": "x1", "y2": "y1"}


class TestForestWeight:
    def test_explicit_single_edge(self):
        config = Configuration.anonymous(1, 1)
        nu = ExplicitKernel.from_mapping({("x1", "y1"): "3/7"})
        assert forest_weight(Forest({"y1": "x1"}), config, Fraction(1), nu) == Fraction(3, 7)

    def test_h_power(self):
        config = Configuration.anonymous(1, 2)
        forest = Forest({"y1": "x1", "y2": "x1"})
        weight = forest_weight(forest, config, Fraction(2), ConstantKernel(c=3))
        assert weight == 2 ** 3 * 3 ** 2

    def test_edgeless(self):
        config = Configuration.anonymous(2, 0)
        assert forest_weight(Forest({}), config, Fraction(1, 2), ConstantKernel()) == Fraction(1, 4)

    def test_float_kernel(self, line_config):
        forest = Forest({"y1": "x1", "y2": "y1"})
        weight = forest_weight(forest, line_config, Fraction(1), ExponentialKernel())
        assert weight == pytest.approx(math.exp(-2.0))

    def test_invalid_forest(self):
        config = Configuration.anonymous(1, 2)
        with pytest.raises(PreconditionError):
            forest_weight(Forest({"y1": "y2", "y2": "y1"}), config, Fraction(1), ConstantKernel())

    def test_missing_explicit_entry(self):
        config = Configuration.anonymous(1, 2)
        nu = ExplicitKernel.from_mapping({("x1", "y1"): 1})
        with pytest.raises(KernelDomainError):
            forest_weight(Forest({"y1": "x1", "y2": "x1"}), config, Fraction(1), nu)


class TestForestProperties:
    @given(config=configurations(max_total=6))
    @settings(max_examples=25, deadline=None)
    def test_parent_map_census(self, config):
        vertex_labels = config.vertex_labels
        choices = [[label for label in config.labels if label != v] for v in vertex_labels]
        accepted = sum(
            is_valid_forest(Forest(dict(zip(vertex_labels, parents))), config)
            for parents in itertools.product(*choices)
        )
        assert accepted == closed_form_count(CountQuery(m=config.m, n=config.n))

    @given(config=configurations(max_total=6))
    @settings(max_examples=20, deadline=None)
    def test_unit_weights(self, config):
        for forest in enumerate_forests(config):
            assert forest_weight(forest, config, Fraction(1), ConstantKernel()) == 1

    @given(case=weighted_cases(max_total=5), data=st.data())
    @settings(max_examples=25, deadline=None)
    def test_weight_survives_relabeling(self, case, data):
        config, nu, h = case
        shuffled = data.draw(st.permutations(config.labels))
        mapping = dict(zip(config.labels, shuffled))
        moved, moved_nu = config.relabel(mapping), nu.relabel(mapping)
        for forest in enumerate_forests(config):
            moved_forest = forest.relabel(mapping)
            assert is_valid_forest(moved_forest, moved)
            assert forest_weight(moved_forest, moved, h, moved_nu) == forest_weight(forest, config, h, nu)
