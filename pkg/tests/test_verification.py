import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsekit import spaces
from coarsekit.core_sets import array_to_mask, full_mask, mask_of
from coarsekit.errors import NotSlowlyOscillatingError, PreconditionError
from coarsekit.models import Family, StepFunction
from coarsekit.operators import check_nbhd_continuous, coarse_operator, uniform_operator
from coarsekit.verification import (
    automatic_cn_probe,
    check_coarsely_separated,
    check_ls_continuity_via_nbhds,
    check_lsxa_separation,
    check_slowly_oscillating,
    check_uniformly_continuous,
    cn_membership,
    group_coarse_nbhd,
    is_slowly_oscillating,
    lsxa_closures_disjoint,
    nonnormal_witness,
    normality_probe,
    wedge_candidates,
)


def line_function(values):
    return StepFunction(values=[float(v) for v in values], lo=float(min(values)), hi=float(max(values)))


# Slow oscillation

def test_log_sine_is_slowly_oscillating():
    p = spaces.line_presentation(0, 10000, cutoff=250, ladder=[5.0])
    x = np.arange(10001)
    f = StepFunction(values=(np.sin(np.log1p(x)) ** 2).tolist(), lo=0.0, hi=1.0)
    [report] = check_slowly_oscillating(p, f, 0.05)
    assert report.passed
    assert max(report.K) < 250
    assert report.max_excess_diameter < 0.05


def test_parity_is_not_slowly_oscillating():
    p = spaces.line_presentation(0, 100, cutoff=10, ladder=[1.0])
    f = line_function([x % 2 for x in range(101)])
    [report] = check_slowly_oscillating(p, f, 0.5)
    assert not report.passed
    assert report.K is None
    assert report.witness_member is not None
    assert report.max_excess_diameter == 1.0


def test_eps_grid_reports_one_per_pair():
    p = spaces.line_presentation(0, 100, cutoff=10, ladder=[1.0, 2.0])
    f = line_function([x / 100 for x in range(101)])
    reports = check_slowly_oscillating(p, f, [0.5, 0.1, 0.05])
    assert [(r.scale_id, r.epsilon) for r in reports] == [
        (0, 0.5), (0, 0.1), (0, 0.05), (1, 0.5), (1, 0.1), (1, 0.05)]
    assert is_slowly_oscillating(reports)


def test_doubled_scan_is_stricter():
    p = spaces.line_presentation(0, 100, cutoff=10, ladder=[1.0])
    f = line_function([x / 40 if x < 40 else 1.0 for x in range(101)])
    plain = check_slowly_oscillating(p, f, 0.06)
    doubled = check_slowly_oscillating(p, f, 0.06, doubled=True)
    assert is_slowly_oscillating(plain)
    assert not is_slowly_oscillating(doubled)


def test_uniform_continuity():
    p = spaces.line_presentation(0, 100, cutoff=10, ladder=[1.0])
    assert check_uniformly_continuous(p, line_function([x / 100 for x in range(101)]), 0.05).passed
    verdict = check_uniformly_continuous(p, line_function([x % 2 for x in range(101)]), 0.05)
    assert verdict.failed
    assert verdict.witness


def test_oscillation_needs_a_total_function(small_line):
    f = StepFunction(values=[0.0] * 10, lo=0.0, hi=1.0, domain=mask_of([0]))
    with pytest.raises(PreconditionError):
        check_slowly_oscillating(small_line, f)


# Slow oscillation against neighbourhood continuity

three_valued = st.lists(st.sampled_from([0.0, 0.5, 1.0]), min_size=12, max_size=12)


def oscillation_and_continuity(p, values):
    f = StepFunction(values=list(values), lo=0.0, hi=1.0)
    op = coarse_operator(p)
    slow = is_slowly_oscillating(check_slowly_oscillating(p, f, 0.5))
    spaced = check_nbhd_continuous(op, f, grid_step=0.25, min_gap=0.5)
    dense = check_nbhd_continuous(op, f, grid_step=0.25)
    return f, slow, spaced, dense


def assert_one_way(p, f, slow, spaced, dense):
    if slow:
        assert spaced.passed
    if dense.failed:
        gap = dense.details['b'] - dense.details['a']
        assert not is_slowly_oscillating(check_slowly_oscillating(p, f, gap))


@given(three_valued, st.sampled_from([1, 3, 5]))
@settings(max_examples=150, deadline=None)
def test_slow_oscillation_gives_continuity(values, cutoff):
    p = spaces.line_presentation(0, 11, cutoff=cutoff, ladder=[1.0])
    assert_one_way(p, *oscillation_and_continuity(p, values))


def test_slow_oscillation_and_continuity_on_every_small_function():
    p = spaces.line_presentation(0, 7, cutoff=3, ladder=[1.0])
    for values in itertools.product([0.0, 0.5, 1.0], repeat=8):
        assert_one_way(p, *oscillation_and_continuity(p, values))


def test_continuity_does_not_give_slow_oscillation():
    p = spaces.line_presentation(0, 11, cutoff=3, ladder=[1.0])
    f, slow, spaced, _ = oscillation_and_continuity(p, [0.0] * 3 + [0.5] * 6 + [1.0] * 3)
    assert not slow
    assert spaced.passed
    [report] = check_slowly_oscillating(p, f, 0.5)
    assert report.offending == [1, 2, 3, 4, 7, 8, 9, 10]


@given(st.lists(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]), min_size=12, max_size=12),
       st.sampled_from([0.5, 0.75]))
@settings(max_examples=150, deadline=None)
def test_uniform_continuity_matches_the_uniform_operator(values, eps):
    p = spaces.line_presentation(0, 11, cutoff=3, ladder=[1.0, 2.0])
    f = StepFunction(values=values, lo=0.0, hi=1.0)
    op = uniform_operator(p)
    if check_uniformly_continuous(p, f, eps).passed:
        assert check_nbhd_continuous(op, f, grid_step=0.25, min_gap=eps).passed
    dense = check_nbhd_continuous(op, f, grid_step=0.25)
    if dense.failed:
        assert check_uniformly_continuous(p, f, dense.details['b'] - dense.details['a']).failed


# Separation

def test_square_spacings_are_coarsely_separated():
    p = spaces.line_presentation(0, 2000, cutoff=100, ladder=[1.0, 2.0])
    A = mask_of(n * n for n in range(1, 45))
    B = mask_of(n * n + n for n in range(1, 45))
    report = check_coarsely_separated(p, A, B)
    assert report.overall
    assert all(max(s.intersection, default=0) <= 100 for s in report.scales)


def test_a_set_is_not_separated_from_itself(two_block_line):
    A = mask_of([0, 200])
    report = check_coarsely_separated(two_block_line, A, A)
    assert not report.overall
    assert all(not s.bounded for s in report.scales)
    assert check_coarsely_separated(two_block_line, mask_of([190]), mask_of([190])).overall


def test_wedge_diagonals_are_separated(wedge):
    A, B = spaces.wedge_diagonals(wedge)
    assert check_coarsely_separated(wedge, A, B).overall


def lsxa_grid():
    return spaces.lsxa_presentation([41, 41], excluded=[[20, 20]], cutoff=3)


def column(p, ys):
    return mask_of(p.window.labels.index((20, y)) for y in ys)


def test_lsxa_rays_through_the_excluded_point():
    p = lsxa_grid()
    B, C = column(p, range(0, 20)), column(p, range(21, 41))
    verdict = check_lsxa_separation(p, B, C)
    assert verdict.passed
    assert verdict.details == {'coarsely_separated': False, 'closures_disjoint': False}


def test_lsxa_rays_apart():
    p = lsxa_grid()
    B, C = column(p, range(0, 20)), column(p, range(30, 41))
    assert lsxa_closures_disjoint(p, B, C)
    verdict = check_lsxa_separation(p, B, C)
    assert verdict.passed
    assert verdict.details['coarsely_separated']


def test_lsxa_separation_preconditions(small_line):
    p = lsxa_grid()
    with pytest.raises(PreconditionError):
        check_lsxa_separation(p, column(p, [20]), column(p, [0]))
    with pytest.raises(PreconditionError):
        check_lsxa_separation(small_line, mask_of([0]), mask_of([5]))


# Normality

def test_normality_on_line(small_line):
    report = normality_probe(small_line)
    assert report.coarse.passed and report.topological.passed and report.hybrid.passed
    assert report.consistent


def test_normality_on_nonnormal_topology(sierpinski_like):
    report = normality_probe(sierpinski_like)
    assert report.coarse.passed
    assert report.topological.failed
    assert report.hybrid.failed
    assert report.consistent


def test_normality_with_supplied_pairs(two_block_line):
    probes = [(mask_of(range(0, 51)), full_mask(201) & ~mask_of(range(150, 201)))]
    report = normality_probe(two_block_line, probes)
    assert report.hybrid.passed
    assert report.hybrid.mode == 'sampled'


# The wedge

def test_every_wedge_candidate_yields_a_witness(wedge):
    candidates = wedge_candidates(wedge)
    assert set(candidates) == {'angular', 'square', 'sqrt', 'smoothstep', 'mixed', 'sine'}
    for name, f in candidates.items():
        family = nonnormal_witness(wedge, f)
        assert family.certified, name
        assert len(family.rows) == len(family.pairs) > 0
        assert all(gap >= 1 / 3 - 1e-9 for gap in family.gaps)


def test_angular_candidate_is_flipped(wedge):
    family = nonnormal_witness(wedge, wedge_candidates(wedge)['angular'])
    assert family.orientation == 'flipped'
    assert family.rows[-1] == 200


def test_sign_step_is_rejected(wedge):
    xs = np.array([label[0] for label in wedge.window.labels])
    f = StepFunction(values=np.where(xs > 0, 0.0, 1.0).tolist(), lo=0.0, hi=1.0)
    with pytest.raises(NotSlowlyOscillatingError):
        nonnormal_witness(wedge, f)


def test_non_separating_candidate_is_rejected(wedge):
    f = StepFunction(values=[0.5] * wedge.size, lo=0.0, hi=1.0)
    with pytest.raises(PreconditionError):
        nonnormal_witness(wedge, f)


# Group neighbourhoods

def king_group():
    return spaces.group_presentation('king', radius=16, cutoff=10)


def by_label(p, keep):
    return array_to_mask(np.array([keep(x, y) for x, y in p.window.labels]))


def test_cobounded_set_is_a_group_neighbourhood():
    p = king_group()
    U = by_label(p, lambda x, y: y == 0)
    N = full_mask(p.size) & ~spaces.ball(p, spaces.base_index(p), 3.0)
    verdict = group_coarse_nbhd(p, U, N)
    assert verdict.passed
    assert verdict.mode == 'exhaustive'
    assert verdict.details['agrees']
    assert verdict.checked_pairs == verdict.details['interior_points'] == 31 * 31


def test_group_axis_is_not_its_own_neighbourhood():
    p = king_group()
    U = by_label(p, lambda x, y: y == 0)
    verdict = group_coarse_nbhd(p, U, U)
    assert verdict.failed
    assert verdict.details['agrees']
    assert group_coarse_nbhd(p, U, full_mask(p.size)).passed


def test_group_cone_escapes_far_from_the_identity():
    p = king_group()
    U = by_label(p, lambda x, y: y == 0)
    N = by_label(p, lambda x, y: abs(y) <= max(2, abs(x) / 2))
    verdict = group_coarse_nbhd(p, U, N)
    assert verdict.failed
    assert verdict.details['coarse_relation']
    assert not verdict.details['agrees']
    [x], escape = verdict.witness
    assert not spaces.is_bounded(p, mask_of(escape))



# Coarse neighbourhood compatibility

def test_maxulf_blocks_are_compatible(blocks):
    p = spaces.maxulf_presentation(12, cutoff=10, ladder=[2.0])
    verdict = cn_membership(p, Family(members=blocks, size=12))
    assert verdict.passed
    assert verdict.mode == 'exhaustive'


def test_maxulf_whole_window_is_not_compatible():
    p = spaces.maxulf_presentation(12, cutoff=4, ladder=[2.0])
    assert cn_membership(p, Family(members=[full_mask(12)], size=12)).failed


def test_growing_pairs_fail_the_automatic_ball_pair():
    p = spaces.line_presentation(0, 10000, cutoff=100, ladder=[1.0])
    U = Family(members=[mask_of([n * n, n * n + n]) for n in range(1, 100)], size=p.size)
    probe = automatic_cn_probe(p, U)
    assert probe is not None
    verdict = cn_membership(p, U)
    assert verdict.failed
    assert verdict.details['probes'] == 'automatic'


def test_supplied_pairs_must_be_coarse_neighbourhoods(small_line):
    U = Family(members=[mask_of([0, 1])], size=10)
    with pytest.raises(PreconditionError):
        cn_membership(small_line, U, probes=[(mask_of([5]), mask_of([5]))])


# ls-continuity

def test_squaring_is_not_ls_continuous():
    pX = spaces.line_presentation(0, 60, cutoff=10)
    pY = spaces.line_presentation(0, 3600, cutoff=100)
    verdict = check_ls_continuity_via_nbhds(pX, pY, [x * x for x in range(61)])
    assert verdict.failed
    assert verdict.details['agree']
    assert verdict.details['failing_scale'] == 1.0


def test_identity_is_ls_continuous():
    p = spaces.line_presentation(0, 40, cutoff=12)
    verdict = check_ls_continuity_via_nbhds(p, p, list(range(41)))
    assert verdict.passed


def test_projection_is_ls_continuous():
    pX = spaces.grid_presentation([41, 3], cutoff=12)
    pY = spaces.line_presentation(0, 40, cutoff=12)
    mapping = [label[0] for label in pX.window.labels]
    assert check_ls_continuity_via_nbhds(pX, pY, mapping).passed


def test_ls_continuity_preconditions():
    p = spaces.line_presentation(0, 40, cutoff=12)
    with pytest.raises(PreconditionError):
        check_ls_continuity_via_nbhds(p, p, list(range(40)))
    with pytest.raises(PreconditionError):
        check_ls_continuity_via_nbhds(p, p, [0] * 41)
    assert check_ls_continuity_via_nbhds(p, p, [40 - x for x in range(41)]).passed
