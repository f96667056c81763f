"""
Tests for the Q recursion and its two independent evaluators.
"""

import math
import time
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from forest_kernel.count import CountQuery, closed_form_count
from forest_kernel.errors import (
    KernelDomainError, MemoConsistencyError, ModeError, PreconditionError, SizeLimitError,
)
from forest_kernel.kernel import (
    QEvaluator, SubsetState, k_factor, q_count, q_eval, q_eval_by_enumeration,
    q_eval_by_matrix_tree, q_eval_constant,
)
from forest_kernel.model import (
    ConstantKernel, Configuration, ExplicitKernel, ExponentialKernel, HardcoreKernel,
    NumericMode, Point,
)

from conftest import nonzero_rationals, weighted_cases

ONE = Fraction(1)


class TestSubsetState:
    def test_initial_masks(self):
        state = SubsetState.initial(Configuration.anonymous(2, 3))
        assert state.root_mask == 0b00011
        assert state.vertex_mask == 0b11100
        assert state.pivot == 0
        assert [p.label for p in state.vertices()] == ["y1", "y2", "y3"]

    def test_peel(self):
        state = SubsetState.initial(Configuration.anonymous(1, 3))
        peeled = state.peel(0, 0b0110)
        assert [p.label for p in peeled.roots()] == ["y1", "y2"]
        assert [p.label for p in peeled.vertices()] == ["y3"]
        assert peeled.pivot == 1

    def test_peel_rejects_non_vertices(self):
        state = SubsetState.initial(Configuration.anonymous(2, 1))
        with pytest.raises(PreconditionError):
            state.peel(0, 0b010)
        with pytest.raises(PreconditionError):
            state.peel(2, 0)

    def test_overlapping_masks(self):
        config = Configuration.anonymous(1, 1)
        with pytest.raises(PreconditionError):
            SubsetState(ground=config.ground, root_mask=0b1, vertex_mask=0b1)

    def test_no_roots(self):
        config = Configuration.anonymous(0, 1)
        with pytest.raises(PreconditionError):
            SubsetState.initial(config).pivot


class TestKFactor:
    def test_empty_xi(self):
        assert k_factor(Point(label="x"), [], ConstantKernel(c=5)) == 1

    def test_product(self):
        nu = ExplicitKernel.from_mapping({("x", "a"): "1/2", ("x", "b"): "2/3"})
        xi = [Point(label="a"), Point(label="b")]
        assert k_factor(Point(label="x"), xi, nu) == Fraction(1, 3)

    def test_pivot_in_xi(self):
        with pytest.raises(PreconditionError):
            k_factor(Point(label="x"), [Point(label="x")], ConstantKernel())


class TestQEval:
    def test_boundaries(self):
        nu = ConstantKernel()
        assert q_eval(Configuration(), ONE, nu) == 1
        assert q_eval(Configuration.anonymous(0, 3), ONE, nu) == 0
        assert q_eval(Configuration.anonymous(3, 0), Fraction(2), nu) == 8

    def test_overlap_is_zero(self):
        config = Configuration.of(["a"], ["a", "b"])
        nu = ExplicitKernel.from_mapping({})
        assert q_eval(config, ONE, nu) == 0
        assert q_eval_by_enumeration(config, ONE, nu) == 0
        assert q_eval_by_matrix_tree(config, ONE, nu) == 0

    def test_single_explicit_edge(self):
        config = Configuration.anonymous(1, 1)
        nu = ExplicitKernel.from_mapping({("x1", "y1"): "3/7"})
        assert q_eval(config, ONE, nu) == Fraction(3, 7)

    def test_exponential_line(self, line_config):
        value = q_eval(line_config, ONE, ExponentialKernel())
        assert value == pytest.approx(math.exp(-2) + 2 * math.exp(-3), rel=1e-12)

    def test_counts_with_unit_weights(self):
        for m, n in [(1, 3), (2, 2), (3, 3), (2, 4)]:
            value = q_eval(Configuration.anonymous(m, n), ONE, ConstantKernel())
            assert value == closed_form_count(CountQuery(m=m, n=n))

    def test_pivot_by_label(self):
        config = Configuration.anonymous(3, 3)
        nu = ExplicitKernel.from_mapping({
            (a, b): Fraction(i + 1, j + 2)
            for i, a in enumerate(config.labels)
            for j, b in enumerate(config.labels)
            if i < j and b.startswith("y")
        })
        reference = q_eval(config, ONE, nu)
        assert q_eval(config, ONE, nu, pivot="x2") == reference
        assert q_eval(config, ONE, nu, pivot="x3") == reference
        with pytest.raises(PreconditionError):
            q_eval(config, ONE, nu, pivot="y1")

    def test_exact_mode_rejects_float_kernel(self, line_config):
        with pytest.raises(ModeError):
            q_eval(line_config, ONE, ExponentialKernel(), mode=NumericMode.EXACT)

    def test_float_mode_on_rational_kernel(self):
        value = q_eval(Configuration.anonymous(1, 3), ONE, ConstantKernel(), mode=NumericMode.FLOAT)
        assert isinstance(value, float)
        assert value == 16.0

    def test_missing_pair_names_the_pair(self):
        config = Configuration.anonymous(1, 2)
        nu = ExplicitKernel.from_mapping({("x1", "y1"): 1, ("x1", "y2"): 1})
        with pytest.raises(KernelDomainError) as excinfo:
            q_eval(config, ONE, nu)
        assert set(excinfo.value.pair) == {"y1", "y2"}

    def test_size_limit(self):
        with pytest.raises(SizeLimitError) as excinfo:
            q_eval(Configuration.anonymous(8, 7), ONE, ConstantKernel())
        assert excinfo.value.limit == 14

    def test_hardcore_is_exact(self):
        config = Configuration.of([("x", (0.0,))], [("a", (0.5,)), ("b", (5.0,))])
        # b is out of range of everything, so no forest reaches a root from it
        assert q_eval(config, ONE, HardcoreKernel(radius=1.0)) == 0
        assert q_eval(config, ONE, HardcoreKernel(radius=10.0)) == 3

    @given(case=weighted_cases(max_total=6))
    @settings(max_examples=60, deadline=None)
    def test_matches_forest_sum(self, case):
        config, nu, h = case
        assert q_eval(config, h, nu) == q_eval_by_enumeration(config, h, nu)

    @given(case=weighted_cases(max_total=6))
    @settings(max_examples=60, deadline=None)
    def test_matches_matrix_tree(self, case):
        config, nu, h = case
        assert q_eval(config, h, nu) == q_eval_by_matrix_tree(config, h, nu)

    @given(case=weighted_cases(max_total=6))
    @settings(max_examples=40, deadline=None)
    def test_pivot_independence(self, case):
        config, nu, h = case
        values = {q_eval(config, h, nu, pivot=x) for x in config.root_labels}
        assert len(values) == 1

    @given(case=weighted_cases(max_total=5), scale=nonzero_rationals)
    @settings(max_examples=40, deadline=None)
    def test_h_scaling(self, case, scale):
        config, nu, _ = case
        assert q_eval(config, scale, nu) == scale ** config.total * q_eval(config, ONE, nu)

    @given(case=weighted_cases(max_total=6))
    @settings(max_examples=20, deadline=None)
    def test_debug_mode_agrees(self, case):
        config, nu, h = case
        assert q_eval(config, h, nu, debug=True) == q_eval(config, h, nu)


class TestQEvaluator:
    def test_memo_statistics(self):
        config = Configuration.anonymous(2, 4)
        evaluator = QEvaluator.for_configuration(config, ONE, ConstantKernel(), NumericMode.EXACT)
        assert evaluator.evaluate(SubsetState.initial(config)) == 432
        assert evaluator.states > 0
        assert evaluator.hits > 0

    def test_corrupted_memo_detected(self):
        config = Configuration.anonymous(2, 3)
        evaluator = QEvaluator.for_configuration(
            config, ONE, ConstantKernel(), NumericMode.EXACT, debug=True,
        )
        state = SubsetState.initial(config)
        evaluator.evaluate(state)
        key = next(iter(evaluator.memo))
        evaluator.memo[key] += 1
        with pytest.raises(MemoConsistencyError):
            evaluator.evaluate(state)

    @given(case=weighted_cases(max_total=7))
    @settings(max_examples=20, deadline=None)
    def test_state_count_bound(self, case):
        config, nu, h = case
        evaluator = QEvaluator.for_configuration(config, h, nu, NumericMode.EXACT)
        evaluator.evaluate(SubsetState.initial(config))
        assert evaluator.states <= 3 ** config.total

    def test_exact_recursion_runs_on_integers(self):
        config = Configuration.anonymous(2, 3)
        nu = ExplicitKernel.from_mapping({
            (a, b): Fraction(i - j, 1 + (i + j) % 3)
            for i, a in enumerate(config.labels)
            for j, b in enumerate(config.labels)
            if i < j and b.startswith("y")
        })
        h = Fraction(2, 5)
        evaluator = QEvaluator.for_configuration(config, h, nu, NumericMode.EXACT)
        value = evaluator.evaluate(SubsetState.initial(config))
        assert evaluator.denominator == 6
        assert all(isinstance(entry, int) for entry in evaluator.memo.values())
        assert value == q_eval_by_matrix_tree(config, h, nu)
        assert evaluator.evaluate(SubsetState.initial(config), pivot=1) == value


class TestCollapsedRecursion:
    @pytest.mark.parametrize("m,n,expected", [
        (0, 0, 1), (0, 2, 0), (2, 0, 1), (1, 3, 16), (2, 2, 8), (3, 3, 108), (2, 4, 432),
    ])
    def test_q_count(self, m, n, expected):
        assert q_count(m, n) == expected

    def test_q_count_grid(self):
        for m in range(1, 31):
            for n in range(31):
                assert q_count(m, n) == closed_form_count(CountQuery(m=m, n=n))

    def test_large_sizes(self):
        assert q_count(30, 30) == 30 * 60 ** 29

    def test_without_depth_limit(self):
        assert q_count(2000, 2) == closed_form_count(CountQuery(m=2000, n=2))
        assert q_eval_constant(2000, 1, Fraction(1, 2), 3) == Fraction(1, 2) ** 2001 * 3 * 2000

    @given(m=st.integers(0, 4), n=st.integers(0, 4), h=nonzero_rationals, c=nonzero_rationals)
    @settings(max_examples=30, deadline=None)
    def test_matches_full_recursion(self, m, n, h, c):
        config = Configuration.anonymous(m, n)
        assert q_eval_constant(m, n, h, c) == q_eval(config, h, ConstantKernel(c=c))

    def test_negative_sizes(self):
        with pytest.raises(PreconditionError):
            q_eval_constant(-1, 2)


class TestMatrixTree:
    def test_large_vertex_set_is_fast(self):
        config = Configuration.anonymous(3, 40)
        value = q_eval_by_matrix_tree(config, ONE, ConstantKernel())
        assert value == closed_form_count(CountQuery(m=3, n=40))

    def test_float_kernel(self, line_config):
        value = q_eval_by_matrix_tree(line_config, ONE, ExponentialKernel())
        assert value == pytest.approx(math.exp(-2) + 2 * math.exp(-3), rel=1e-12)

    def test_limit_applies_when_given(self):
        with pytest.raises(SizeLimitError):
            q_eval_by_matrix_tree(Configuration.anonymous(2, 5), ONE, ConstantKernel(), limit=6)


@pytest.mark.slow
@pytest.mark.parametrize("m,n", [(7, 7), (2, 12), (1, 13)])
def test_fourteen_points_within_budget(m, n):
    config = Configuration.anonymous(m, n)
    nu = ExplicitKernel.from_mapping({
        (a, b): Fraction((i * 7 + j) % 11 - 5, 1 + (i + j) % 4)
        for i, a in enumerate(config.labels)
        for j, b in enumerate(config.labels)
        if i < j and b.startswith("y")
    })
    started = time.perf_counter()
    value = q_eval(config, ONE, nu)
    assert time.perf_counter() - started < 30
    assert value == q_eval_by_matrix_tree(config, ONE, nu)
