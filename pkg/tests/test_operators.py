import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsekit import spaces
from coarsekit.core_sets import full_mask, mask_of
from coarsekit.errors import InputError, PreconditionError, WindowMismatchError
from coarsekit.models import StepFunction
from coarsekit.operators import (
    check_axiom,
    check_axiom_suite,
    check_nbhd_continuous,
    coarse_operator,
    custom_operator,
    holds,
    hybrid_operator,
    induce,
    induced_topology,
    operator_for,
    relation_table,
    threshold_grid,
    topological_operator,
    uniform_operator,
)

KINDS = ['topological', 'coarse', 'hybrid', 'uniform']
subsets_of_10 = st.sets(st.integers(0, 9)).map(mask_of)


@pytest.mark.parametrize('kind', KINDS)
def test_metric_line_satisfies_every_axiom(z_line, kind):
    op = operator_for(z_line, kind)
    verdicts = check_axiom_suite(op)
    assert [v.verdict for v in verdicts] == ['PASS'] * 5
    assert all(v.mode == 'exhaustive' for v in verdicts)


def test_short_cutoff_breaks_duality_and_unions(small_line):
    op = coarse_operator(small_line)
    n1 = check_axiom(op, 'N1')
    assert n1.failed
    A, B = (mask_of(points) for points in n1.witness)
    assert holds(op, A, B)
    assert not holds(op, op.complement(B), op.complement(A))
    A, B = mask_of([0, 6]), mask_of([0, 1, 5, 6, 7, 8])
    assert holds(op, A, B)
    assert not holds(op, op.complement(B), op.complement(A))

    n3 = check_axiom(op, 'N3')
    assert n3.failed
    A1, B1, A2, B2 = (mask_of(points) for points in n3.witness)
    assert holds(op, A1, B1) and holds(op, A2, B2)
    assert not holds(op, A1 | A2, B1 | B2)
    assert holds(op, mask_of([0]), mask_of([0])) and holds(op, mask_of([9]), mask_of([9]))
    assert not holds(op, mask_of([0, 9]), mask_of([0, 9]))


def test_nonnormal_topology_fails_n4_with_witness(sierpinski_like):
    op = topological_operator(sierpinski_like)
    for axiom in ('N0', 'N1', 'N2', 'N3'):
        assert check_axiom(op, axiom).passed
    verdict = check_axiom(op, 'N4')
    assert verdict.failed
    assert verdict.witness == [[1], [0, 1]]


def test_derived_axioms(sierpinski_like):
    op = topological_operator(sierpinski_like)
    for axiom in ("N0'", "N2'", "N3'"):
        assert check_axiom(op, axiom).passed


def test_hybrid_is_topological_and_coarse(small_line):
    hybrid = relation_table(hybrid_operator(small_line))
    both = relation_table(topological_operator(small_line)) & relation_table(coarse_operator(small_line))
    assert (hybrid == both).all()


@given(subsets_of_10, subsets_of_10, st.sampled_from([0, 2, 3, 5]))
@settings(max_examples=200, deadline=None)
def test_coarse_duality_within_four_steps(A, B, cutoff):
    near = coarse_operator(spaces.line_presentation(0, 9, cutoff=cutoff, ladder=[1.0]))
    far = coarse_operator(spaces.line_presentation(0, 9, cutoff=cutoff + 4, ladder=[1.0]))
    if holds(near, A, B):
        assert holds(far, far.complement(B), far.complement(A))


@given(subsets_of_10, subsets_of_10)
@settings(max_examples=200, deadline=None)
def test_doubled_uniform_implies_coarse(A, B):
    p = spaces.line_presentation(0, 9, cutoff=3, ladder=[1.0])
    if holds(uniform_operator(p).doubled(), A, B):
        assert holds(coarse_operator(p), A, B)


def test_coarse_relation_bounds_the_excess(two_block_line):
    op = coarse_operator(two_block_line)
    left, right = mask_of(range(0, 51)), mask_of(range(150, 201))
    assert holds(op, left, op.complement(right))
    ends = mask_of(list(range(0, 11)) + list(range(190, 201)))
    assert not holds(op, ends, ends)
    assert holds(op, mask_of(range(170, 190)), mask_of(range(170, 190)))
    assert holds(op, mask_of(range(0, 20)), mask_of(range(0, 20)))


def test_single_point_is_its_own_coarse_neighbourhood():
    op = coarse_operator(spaces.line_presentation(0, 100, cutoff=10, ladder=[1.0]))
    assert holds(op, mask_of([50]), mask_of([50]))
    assert holds(op, mask_of([100]), mask_of([100]))
    assert not holds(op, mask_of([0, 100]), mask_of([0, 100]))


def test_broken_custom_relation_fails_n0():
    op = custom_operator(3, lambda A, B: A == B, name='equality')
    verdict = check_axiom(op, 'N0')
    assert verdict.failed
    assert verdict.witness == [[], [0, 1, 2]]


def test_sampled_checks_are_inconclusive(small_line):
    verdict = check_axiom(coarse_operator(small_line), 'N1', budget=1, samples=50, seed=7)
    assert verdict.verdict == 'INCONCLUSIVE'
    assert verdict.mode == 'sampled'
    assert verdict.seed == 7
    assert verdict.checked_pairs == 50


def test_unknown_names_raise(small_line):
    with pytest.raises(InputError):
        operator_for(small_line, 'proximal')
    with pytest.raises(InputError):
        check_axiom(coarse_operator(small_line), 'N9')


def test_induced_operator_ground(small_line):
    op = hybrid_operator(small_line)
    A = mask_of(range(0, 5))
    sub = induce(op, A)
    assert sub.is_induced and sub.ground == A
    assert holds(sub, mask_of([0]), A)
    with pytest.raises(PreconditionError):
        holds(sub, mask_of([7]), A)
    with pytest.raises(WindowMismatchError):
        holds(op, mask_of([12]), full_mask(10))
    assert induce(sub, mask_of([0, 1])).parent is op


def test_induced_topology_of_nonnormal_space(sierpinski_like):
    assert induced_topology(topological_operator(sierpinski_like)) == [0, full_mask(3)]


def test_threshold_grid_includes_values():
    f = StepFunction(values=[0.0, 0.3, 1.0], lo=0.0, hi=1.0)
    assert np.allclose(threshold_grid(f, 0.25), [0.0, 0.25, 0.3, 0.5, 0.75, 1.0])


def test_parity_is_not_coarsely_continuous():
    p = spaces.line_presentation(0, 20, cutoff=3, ladder=[1.0])
    f = StepFunction(values=[float(x % 2) for x in range(21)], lo=0.0, hi=1.0)
    op = coarse_operator(p)
    verdict = check_nbhd_continuous(op, f)
    assert verdict.failed
    assert verdict.details['a'] == 0.0
    assert verdict.details['b'] == pytest.approx(1 / 32)
    assert verdict.details['min_gap'] == 0.0
    evens = mask_of(range(0, 21, 2))
    assert not holds(op, evens, evens)


def test_custom_operators_check_every_threshold_pair(small_line):
    f = StepFunction(values=[0.0] * 5 + [1.0] * 5, lo=0.0, hi=1.0)
    calls = []

    def tight(A, B):
        calls.append((A, B))
        return True

    verdict = check_nbhd_continuous(custom_operator(10, tight), f, grid_step=0.25)
    grid = len(threshold_grid(f, 0.25))
    assert verdict.passed
    assert not verdict.details['smallest_b_only']
    assert verdict.checked_pairs == len(calls) == grid * (grid - 1) // 2
    monotone = check_nbhd_continuous(hybrid_operator(small_line), f, grid_step=0.25)
    assert monotone.details['smallest_b_only']
    assert monotone.checked_pairs == grid - 1


def test_n4_verdict_states_its_premise():
    verdict = check_axiom(coarse_operator(spaces.line_presentation(0, 9, cutoff=9, ladder=[1.0])), 'N4')
    assert verdict.passed
    assert verdict.details['ladder_doubling']
    assert 'doubled ladder' in verdict.details['scope']
    assert verdict.details['plain_n4'] is True
    assert 'scope' not in check_axiom(topological_operator(size=3), 'N4').details


def test_constant_function_is_continuous(small_line):
    f = StepFunction(values=[0.5] * 10, lo=0.0, hi=1.0)
    assert check_nbhd_continuous(hybrid_operator(small_line), f).passed


def test_continuity_needs_matching_domain(small_line):
    f = StepFunction(values=[0.5] * 10, lo=0.0, hi=1.0, domain=mask_of([0, 1]))
    with pytest.raises(PreconditionError):
        check_nbhd_continuous(hybrid_operator(small_line), f)
