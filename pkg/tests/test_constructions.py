from fractions import Fraction

import numpy as np
import pytest

from coarsekit import spaces
from coarsekit.constructions import (
    ExhaustiveWitness,
    MetricWitness,
    build_dyadic,
    certify_dyadic,
    certify_urysohn,
    constant_function,
    default_witness,
    dyadic_from_pairs,
    dyadic_to_pairs,
    exhaustive_witness,
    function_from_family,
    metric_interpolate,
    restrict,
    scale_function,
    sum_functions,
    tietze_extend,
    urysohn,
)
from coarsekit.core_sets import array_to_mask, full_mask, mask_of, points_of
from coarsekit.errors import ConstructionError, PreconditionError, WindowMismatchError
from coarsekit.models import StepFunction
from coarsekit.operators import holds, hybrid_operator, induce, topological_operator

LEFT = mask_of(range(0, 51))
RIGHT = mask_of(range(150, 201))


def two_block_function():
    values = [1.0 if x >= 150 else 0.0 for x in range(201)]
    return StepFunction(values=values, lo=0.0, hi=1.0, domain=LEFT | RIGHT)


def test_metric_interpolate(small_line):
    U = mask_of(range(0, 6))
    assert metric_interpolate(small_line, mask_of([0]), U) == mask_of(range(0, 4))
    assert metric_interpolate(small_line, 0, U) == 0
    assert metric_interpolate(small_line, mask_of([4]), full_mask(10)) == full_mask(10)


def test_metric_interpolate_preconditions(small_line):
    with pytest.raises(PreconditionError):
        metric_interpolate(small_line, mask_of([7]), mask_of([0]))
    with pytest.raises(PreconditionError) as info:
        metric_interpolate(small_line, mask_of([5]), mask_of([5]))
    assert info.value.details['scale'] == 1.0


def test_default_witness_choice(small_line, sierpinski_like):
    op = hybrid_operator(small_line)
    assert isinstance(default_witness(op), MetricWitness)
    assert isinstance(default_witness(induce(op, mask_of(range(5)))), ExhaustiveWitness)
    assert isinstance(default_witness(topological_operator(sierpinski_like)), ExhaustiveWitness)


def test_exhaustive_witness_certifies(small_line):
    op = hybrid_operator(small_line)
    A, C = mask_of([0]), mask_of(range(0, 6))
    middle = exhaustive_witness(op)(A, C)
    assert holds(op, A, middle) and holds(op, middle, C)


def test_nonnormal_topology_has_no_witness(sierpinski_like):
    op = topological_operator(sierpinski_like)
    witness = exhaustive_witness(op)
    assert witness.find(mask_of([1]), mask_of([0, 1])) is None
    with pytest.raises(ConstructionError):
        witness(mask_of([1]), mask_of([0, 1]))


def test_urysohn_fails_on_nonnormal_topology(sierpinski_like):
    op = topological_operator(sierpinski_like)
    with pytest.raises(ConstructionError) as info:
        build_dyadic(op, mask_of([1]), mask_of([2]), depth=1)
    assert info.value.details['level'] == 1


def test_dyadic_family_is_nested(two_block_line):
    op = hybrid_operator(two_block_line)
    family = build_dyadic(op, LEFT, RIGHT, depth=2)
    assert family.indices() == [Fraction(k, 4) for k in range(5)]
    assert family.sets[Fraction(0)] == LEFT
    assert family.sets[Fraction(1)] == full_mask(201) & ~RIGHT
    assert certify_dyadic(op, family).passed
    pairs = dyadic_to_pairs(family)
    assert pairs[0] == ('0', list(range(0, 51)))
    assert dyadic_from_pairs(pairs, 201, 2).sets == family.sets


def test_dyadic_precondition(two_block_line):
    op = hybrid_operator(two_block_line)
    with pytest.raises(PreconditionError):
        build_dyadic(op, LEFT, mask_of(range(40, 60)))


def test_urysohn_two_blocks(two_block_line):
    op = hybrid_operator(two_block_line)
    f = urysohn(op, LEFT, RIGHT)
    values = f.array()
    assert (values[:51] == 0).all()
    assert (values[150:] == 1).all()
    assert (np.diff(values) >= 0).all()
    assert certify_urysohn(op, f, LEFT, RIGHT).passed


def test_family_function_reads_lowest_index(two_block_line):
    op = hybrid_operator(two_block_line)
    family = build_dyadic(op, LEFT, RIGHT, depth=1)
    f = function_from_family(family)
    assert set(f.distinct_values()) <= {0.0, 0.5, 1.0}
    assert f.values[0] == 0.0 and f.values[200] == 1.0


def test_certify_urysohn_checks_boundary_values(two_block_line):
    op = hybrid_operator(two_block_line)
    verdict = certify_urysohn(op, constant_function(201, 0.5, 0.0, 1.0), LEFT, RIGHT)
    assert verdict.failed
    assert verdict.details['reason'] == 'boundary values'


def test_tietze_two_blocks(two_block_line):
    op = hybrid_operator(two_block_line)
    g, report = tietze_extend(op, LEFT | RIGHT, two_block_function(), tol=1e-6)
    values = g.array()
    assert report.max_error <= 1e-6
    assert np.abs(values[:51]).max() <= 1e-6
    assert np.abs(values[150:] - 1).max() <= 1e-6
    assert values.min() >= 0 and values.max() <= 1
    assert len(report.steps) == 35
    assert all(step.sides == 'both' for step in report.steps)
    for step, envelope in zip(report.steps, report.contraction_envelope):
        assert step.residual <= envelope + 1e-9
    assert report.continuity.passed


def test_tietze_on_whole_window_returns_f(small_line):
    op = hybrid_operator(small_line)
    f = StepFunction(values=[x / 9 for x in range(10)], lo=0.0, hi=1.0)
    g, report = tietze_extend(op, full_mask(10), f)
    assert g.values == f.values
    assert report.steps == []


def test_tietze_preconditions(two_block_line):
    op = hybrid_operator(two_block_line)
    with pytest.raises(PreconditionError):
        tietze_extend(op, 0, two_block_function())
    parity = StepFunction(values=[float(x % 2) for x in range(201)], lo=0.0, hi=1.0, domain=LEFT | RIGHT)
    with pytest.raises(PreconditionError):
        tietze_extend(op, LEFT | RIGHT, parity)
    with pytest.raises(PreconditionError):
        tietze_extend(op, LEFT, two_block_function())


def test_function_arithmetic():
    f = StepFunction(values=[0.0, 0.5, 1.0], lo=0.0, hi=1.0)
    g = constant_function(3, 2.0)
    total = sum_functions(f, g)
    assert total.values == [2.0, 2.5, 3.0]
    assert total.range == (2.0, 3.0)
    scaled = scale_function(f, -1.0, 1.0)
    assert scaled.values == [-1.0, 0.0, 1.0]
    restricted = restrict(f, mask_of([1, 2]))
    assert points_of(restricted.domain) == [1, 2]
    with pytest.raises(WindowMismatchError):
        sum_functions(f, constant_function(4, 0.0))


def test_urysohn_on_a_grid_follows_the_columns():
    p = spaces.grid_presentation([21, 12], cutoff=14)
    op = hybrid_operator(p)
    columns = np.array([label[0] for label in p.window.labels])
    A, B = array_to_mask(columns == 0), array_to_mask(columns == 20)
    f = urysohn(op, A, B, depth=3)
    values = np.asarray(f.values).reshape(21, 12)
    assert (values == values[:, :1]).all()
    assert (values[0] == 0).all() and (values[20] == 1).all()
    assert (np.diff(values[:, 0]) >= 0).all()
    verdict = certify_urysohn(op, f, A, B, depth=3)
    assert verdict.passed
    assert verdict.details['min_gap'] == 0.25


@pytest.mark.parametrize('lo, hi', [(0.3, 0.3), (0.0, 1.0)])
def test_tietze_keeps_constants_constant(two_block_line, lo, hi):
    op = hybrid_operator(two_block_line)
    f = constant_function(201, 0.3, lo, hi, domain=LEFT | RIGHT)
    g, report = tietze_extend(op, LEFT | RIGHT, f, tol=1e-6)
    values = g.array()
    assert np.ptp(values) <= 1e-12
    assert abs(values[0] - 0.3) <= 1e-6
    assert all(step.sides != 'both' for step in report.steps)
