"""Checkers that close the loop on the constructions.

Slow oscillation and uniform continuity are scanned member by member over the ladder;
coarse separation, coarse-neighbourhood compatibility and ls-continuity test their excess
sets for weak boundedness. The wedge extractor turns a separating candidate on the
half-plane wedge into a family of pairs showing that it is not slowly oscillating for the
non-normal structure.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config
from . import spaces
from .constructions import default_witness
from .core_sets import (
    SubsetMask,
    array_to_mask,
    count,
    lowest_point,
    mask_of,
    mask_to_array,
    points_of,
    star_set,
    star_table,
    subset_table,
)
from .errors import ConstructionError, NotSlowlyOscillatingError, PreconditionError, WindowMismatchError
from .models import (
    Family,
    NormalityReport,
    OscillationReport,
    ScaleIntersection,
    SeparationReport,
    SpacePresentation,
    StepFunction,
    Verdict,
    WitnessFamily,
)
from .operators import (
    NbhdOperator,
    check_axiom,
    coarse_operator,
    holds,
    hybrid_operator,
    relation_table,
    topological_operator,
)

logger = logging.getLogger(__name__)

TAU = Config.FLOAT_TOL
LOW_BAND = (1 / 6, 1 / 3)
HIGH_BAND = (2 / 3, 5 / 6)
Probe = Tuple[SubsetMask, SubsetMask]


# Scale scans

def _hops(doubled: bool) -> int:
    return 3 if doubled else 1


def _spreads(p: SpacePresentation, values: np.ndarray, index: int, doubled: bool) -> np.ndarray:
    """Image diameter of every member of a ladder scale"""
    if p.kind in spaces.DILATION_KINDS:
        R = spaces.ladder_parameters(p)[index]
        low, high = spaces.neighbourhood_extremes(p, values, R, _hops(doubled))
        return high - low
    family = spaces.ladder_family(p, index, doubled)
    spreads = np.zeros(len(family))
    for k, member in enumerate(family.members):
        if member:
            spreads[k] = np.ptp(values[mask_to_array(member, p.size)])
    return spreads


def _disjoint_from(p: SpacePresentation, index: int, doubled: bool, K: SubsetMask) -> np.ndarray:
    """Flags of the members that miss K"""
    if p.kind in spaces.DILATION_KINDS:
        R = spaces.ladder_parameters(p)[index]
        return ~mask_to_array(spaces.metric_star(p, K, R, _hops(doubled)), p.size)
    family = spaces.ladder_family(p, index, doubled)
    return np.array([member & K == 0 for member in family.members], dtype=bool)


def _union_of(p: SpacePresentation, index: int, doubled: bool, selected: np.ndarray) -> SubsetMask:
    if p.kind in spaces.DILATION_KINDS:
        R = spaces.ladder_parameters(p)[index]
        return spaces.metric_star(p, array_to_mask(selected), R, _hops(doubled))
    family = spaces.ladder_family(p, index, doubled)
    result = 0
    for k in np.flatnonzero(selected):
        result |= family.members[k]
    return result


def _member(p: SpacePresentation, index: int, doubled: bool, k: int) -> SubsetMask:
    if p.kind in spaces.DILATION_KINDS:
        R = spaces.ladder_parameters(p)[index]
        return spaces.metric_star(p, 1 << k, R, _hops(doubled))
    return spaces.ladder_family(p, index, doubled).members[k]


def _window_values(p: SpacePresentation, f: StepFunction) -> np.ndarray:
    if f.size != p.size:
        raise WindowMismatchError("function and presentation live on different windows",
                                  {'function': f.size, 'window': p.size})
    if f.domain is not None and f.domain != p.window.full:
        raise PreconditionError("function must be defined on the whole window")
    return f.array()


def check_slowly_oscillating(p: SpacePresentation, f: StepFunction,
                             eps: Union[float, Sequence[float], None] = None,
                             doubled: bool = False) -> List[OscillationReport]:
    """One report per (ladder scale, eps); K is the union of the members with image diameter >= eps"""
    values = _window_values(p, f)
    if eps is None:
        eps_values = list(Config.EPS_GRID)
    elif isinstance(eps, (int, float)):
        eps_values = [float(eps)]
    else:
        eps_values = [float(e) for e in eps]

    reports = []
    for index, parameter in enumerate(spaces.ladder_parameters(p)):
        spreads = _spreads(p, values, index, doubled)
        for e in eps_values:
            offending = spreads >= e - TAU
            K = _union_of(p, index, doubled, offending)
            passed = spaces.is_weakly_bounded(p, K)
            witness = None
            if passed:
                excess = spreads[_disjoint_from(p, index, doubled, K)]
            else:
                excess = spreads
                first = int(np.flatnonzero(offending)[0])
                witness = points_of(_member(p, index, doubled, first), p.size)
            max_excess = float(excess.max()) if excess.size else 0.0
            reports.append(OscillationReport(
                scale_id=index,
                scale_parameter=parameter,
                epsilon=e,
                K=points_of(K, p.size) if passed else None,
                offending=points_of(K, p.size),
                max_excess_diameter=max_excess,
                witness_member=witness,
                passed=passed,
            ))
        logger.info("Slow oscillation at scale %d (%g): %d/%d eps values pass", index, parameter,
                    sum(r.passed for r in reports if r.scale_id == index), len(eps_values))
    return reports


def is_slowly_oscillating(reports: Sequence[OscillationReport]) -> bool:
    return all(report.passed for report in reports)


def check_uniformly_continuous(p: SpacePresentation, f: StepFunction, eps: float) -> Verdict:
    """Some ladder scale has every image diameter below eps"""
    values = _window_values(p, f)
    worst = []
    for index, parameter in enumerate(spaces.ladder_parameters(p)):
        spreads = _spreads(p, values, index, False)
        worst.append(float(spreads.max()) if spreads.size else 0.0)
        if worst[-1] < eps - TAU:
            return Verdict(axiom='uniform_continuity', verdict='PASS', checked_pairs=len(spreads),
                           details={'scale_id': index, 'scale_parameter': parameter, 'eps': eps,
                                    'max_diameter': worst[-1]})
    spreads = _spreads(p, values, 0, False)
    k = int(np.argmax(spreads))
    return Verdict(axiom='uniform_continuity', verdict='FAIL',
                   witness=[points_of(_member(p, 0, False, k), p.size)],
                   details={'eps': eps, 'max_diameter': worst})


# Coarse separation

def check_coarsely_separated(p: SpacePresentation, A: SubsetMask, B: SubsetMask) -> SeparationReport:
    """st(A, U) cap st(B, U) weakly bounded for every ladder scale U"""
    p.window.check_mask(A, 'A')
    p.window.check_mask(B, 'B')
    scales = []
    for index, parameter in enumerate(spaces.ladder_parameters(p)):
        meet = spaces.ladder_star(p, index, A) & spaces.ladder_star(p, index, B)
        scales.append(ScaleIntersection(scale_id=index, scale_parameter=parameter,
                                        intersection=points_of(meet, p.size),
                                        bounded=spaces.is_weakly_bounded(p, meet)))
    report = SeparationReport(scales=scales, overall=all(s.bounded for s in scales),
                              components=len(spaces.coarse_components(p)))
    logger.info("Coarse separation over %d scales: %s", len(scales), report.overall)
    return report


def lsxa_closures_disjoint(p: SpacePresentation, B: SubsetMask, C: SubsetMask) -> bool:
    """B, C disjoint and no excluded point within the cutoff of both"""
    if B & C:
        return False
    excluded = spaces.excluded_mask(p)
    near_b = spaces.dist_to_set(p, B) <= p.cutoff + TAU
    near_c = spaces.dist_to_set(p, C) <= p.cutoff + TAU
    return not (mask_to_array(excluded, p.size) & near_b & near_c).any()


def check_lsxa_separation(p: SpacePresentation, B: SubsetMask, C: SubsetMask) -> Verdict:
    """Coarse separation in LS(X, A) against disjointness of the closures in X"""
    if p.kind != 'LSXA':
        raise PreconditionError("closure comparison needs an LSXA presentation", {'kind': p.kind})
    excluded = spaces.excluded_mask(p)
    if (B | C) & excluded:
        raise PreconditionError("B and C must avoid the excluded set")
    separated = check_coarsely_separated(p, B, C).overall
    disjoint = lsxa_closures_disjoint(p, B, C)
    return Verdict(axiom='lsxa_separation', verdict='PASS' if separated == disjoint else 'FAIL',
                   details={'coarsely_separated': separated, 'closures_disjoint': disjoint})


# Normality

def _n4_on_probes(op: NbhdOperator, probes: Sequence[Probe]) -> Verdict:
    witness = default_witness(op)
    checked = 0
    for A, C in probes:
        if not holds(op.doubled(), A, C):
            continue
        checked += 1
        if witness.find(A, C) is None:
            return Verdict(axiom='N4', verdict='FAIL', checked_pairs=checked, mode='sampled',
                           witness=[points_of(A, op.size), points_of(C, op.size)])
    return Verdict(axiom='N4', verdict='PASS', checked_pairs=checked, mode='sampled',
                   details={'probes': len(probes)})


def normality_probe(p: SpacePresentation, probes: Optional[Sequence[Probe]] = None) -> NormalityReport:
    """N4 for the coarse factor, the topological factor and the hybrid operator"""
    operators = {
        'coarse': coarse_operator(p),
        'topological': topological_operator(p),
        'hybrid': hybrid_operator(p),
    }
    verdicts = {}
    for name, op in operators.items():
        verdicts[name] = check_axiom(op, 'N4') if probes is None else _n4_on_probes(op, probes)
    consistent = not (verdicts['coarse'].passed and verdicts['topological'].passed) or verdicts['hybrid'].passed
    if not consistent:
        logger.warning("Hybrid N4 fails although both factors pass on the probe set")
    return NormalityReport(consistent=consistent, **verdicts)


# The non-normal wedge

def wedge_candidates(p: SpacePresentation) -> Dict[str, StepFunction]:
    """Separating functions of s = (y - x) / 2y, which is 0 on A and 1 on B"""
    if p.kind != 'HalfPlaneNonNormal':
        raise PreconditionError("wedge candidates need the wedge presentation", {'kind': p.kind})
    coords = spaces.coordinates(p).astype(float)
    x, y = coords[:, 0], coords[:, 1]
    s = np.clip((y - x) / (2 * y), 0.0, 1.0)
    shapes = {
        'angular': (x + y) / (2 * y),
        'square': s ** 2,
        'sqrt': np.sqrt(s),
        'smoothstep': 3 * s ** 2 - 2 * s ** 3,
        'mixed': (s + s ** 2) / 2,
        'sine': np.sin(np.pi * s / 2) ** 2,
    }
    return {name: StepFunction(values=np.clip(v, 0.0, 1.0).tolist(), lo=0.0, hi=1.0)
            for name, v in shapes.items()}


def _separates(low_side: np.ndarray, high_side: np.ndarray, delta: float) -> bool:
    return bool(low_side.max() <= delta + TAU and high_side.min() >= 1 - delta - TAU)


def _rows(ys: np.ndarray) -> Dict[int, np.ndarray]:
    order = np.argsort(ys, kind='stable')
    rows = {}
    values, starts = np.unique(ys[order], return_index=True)
    bounds = list(starts) + [len(order)]
    for k, row in enumerate(values):
        rows[int(row)] = order[bounds[k]:bounds[k + 1]]
    return rows


def nonnormal_witness(p: SpacePresentation, f: StepFunction, m_hint: int = 0,
                      delta: float = 0.05) -> WitnessFamily:
    """Pairs {z_i, w_i} in the rows beyond M with f(z_i) in [1/6, 1/3] and f(w_i) in [2/3, 5/6]"""
    if p.kind != 'HalfPlaneNonNormal':
        raise PreconditionError("the witness extractor needs the wedge presentation", {'kind': p.kind})
    values = _window_values(p, f)
    A, B = spaces.wedge_diagonals(p)
    on_a = values[mask_to_array(A, p.size)]
    on_b = values[mask_to_array(B, p.size)]
    if _separates(on_a, on_b, delta):
        orientation = 'direct'
    elif _separates(on_b, on_a, delta):
        orientation = 'flipped'
        values = 1 - values
    else:
        raise PreconditionError("f does not separate the diagonals",
                                {'delta': delta, 'f(A)': [float(on_a.min()), float(on_a.max())],
                                 'f(B)': [float(on_b.min()), float(on_b.max())]})

    coords = spaces.coordinates(p)
    xs, ys = coords[:, 0], coords[:, 1]
    from_base = spaces.distances_from(p, spaces.base_index(p))
    first, second = spaces.neighbour_pairs(p, 1.0)
    horizontal = (ys[first] == ys[second]) & (xs[second] == xs[first] + 1)
    jumps = horizontal & (np.abs(values[first] - values[second]) >= 1 / 6 - TAU)
    M = float(m_hint)
    if jumps.any():
        M = max(M, float(from_base[first[jumps]].max()), float(from_base[second[jumps]].max()))
    rows = [y for y in sorted(_rows(ys).items()) if y[0] > M + 2]
    if not rows:
        raise NotSlowlyOscillatingError("f jumps by 1/6 or more up to the top of the window",
                                        {'M': M, 'y_max': int(ys.max()), 'jumps': int(jumps.sum())})
    logger.info("Wedge candidate (%s): M = %g, scanning %d rows", orientation, M, len(rows))

    row_ids, pairs, gaps = [], [], []
    for y, in_row in rows:
        row_values = values[in_row]
        z = in_row[(row_values >= LOW_BAND[0] - TAU) & (row_values <= LOW_BAND[1] + TAU)]
        w = in_row[(row_values >= HIGH_BAND[0] - TAU) & (row_values <= HIGH_BAND[1] + TAU)]
        if not len(z) or not len(w):
            raise NotSlowlyOscillatingError("row without a witness pair", {'row': y, 'M': M})
        separation = np.abs(xs[z][:, None] - xs[w][None, :])
        i, j = np.unravel_index(int(np.argmin(separation)), separation.shape)
        pair = (int(z[i]), int(w[j]))
        row_ids.append(y)
        pairs.append(pair)
        gaps.append(float(abs(values[pair[0]] - values[pair[1]])))

    family = Family(members=[(1 << a) | (1 << b) for a, b in pairs], size=p.size, tag='wedge-witness')
    certified = spaces.is_scale(p, family)
    if not certified:
        raise ConstructionError("witness family is not a scale of the wedge structure", {'rows': row_ids[:20]})
    violations = sum(gap >= 1 / 3 - 2 * TAU for gap in gaps)
    return WitnessFamily(rows=row_ids, pairs=pairs, gaps=gaps, M=M, certified=certified,
                         orientation=orientation, violations=violations)


# Group presentations

def group_coarse_nbhd(p: SpacePresentation, U: SubsetMask, N: SubsetMask) -> Verdict:
    """(U + V + x + V) - N of word diameter at most the cutoff for every interior x,
    cross-checked with the coarse relation over the ladder"""
    if p.kind != 'Group':
        raise PreconditionError("group_coarse_nbhd needs a Group presentation", {'kind': p.kind})
    p.window.check_mask(U, 'U')
    p.window.check_mask(N, 'N')
    V = spaces.ball(p, spaces.base_index(p), 1.0)
    interior = spaces.group_interior(p, V)

    coarse = holds(coarse_operator(p), U, N)
    passed = True
    witness: List[List[int]] = []
    checked = 0
    for x in points_of(interior, p.size):
        checked += 1
        escape = spaces.group_star(spaces.translate(p, U, x), V, p) & ~N
        if not spaces.is_bounded(p, escape):
            passed = False
            witness = [[x], points_of(escape, p.size)]
            break
    logger.info("Group coarse neighbourhood over %d interior points: %s", checked, passed)
    return Verdict(axiom='group_coarse_nbhd', verdict='PASS' if passed else 'FAIL', witness=witness,
                   checked_pairs=checked, mode='exhaustive',
                   details={'interior_points': count(interior), 'coarse_relation': coarse,
                            'agrees': coarse == passed})


# Compatibility with coarse neighbourhoods

def _ball_probe(p: SpacePresentation, pairs: Sequence[Tuple[int, int, float]]) -> Optional[Probe]:
    """A = {a_n}, N = union of B(a_n, floor(e_n / 2)); pairs whose ball or far point collide are skipped"""
    A = N = far_points = 0
    for a, far, e in pairs:
        ball = spaces.ball(p, a, float(np.floor(e / 2)))
        if ball & (N | far_points) or (N >> far) & 1:
            continue
        A |= 1 << a
        N |= ball
        far_points |= 1 << far
    if A == 0:
        return None
    if not holds(coarse_operator(p), A, N):
        logger.warning("Ball probe is not a coarse neighbourhood pair; dropped")
        return None
    return A, N


def automatic_cn_probe(p: SpacePresentation, U: Family) -> Optional[Probe]:
    """Probe built from the members of U reaching beyond the doubled ladder radius"""
    if not p.has_metric:
        return None
    reach = 2 * max(spaces.ladder_parameters(p))
    pairs = []
    for member in sorted(U.members, key=lowest_point):
        if count(member) < 2:
            continue
        a = lowest_point(member)
        inside = np.flatnonzero(mask_to_array(member, p.size))
        d = spaces.distances_from(p, a)[inside]
        k = int(np.argmax(d))
        if d[k] > reach + TAU:
            pairs.append((a, int(inside[k]), float(d[k])))
    return _ball_probe(p, pairs)


def _cn_exhaustive(p: SpacePresentation, U: Family) -> Verdict:
    """Every coarse neighbourhood pair A < N of the window"""
    op = coarse_operator(p)
    rel = relation_table(op)
    subsets = subset_table(op.ground)
    stars = star_table(U, op.ground)
    checked = 0
    for i, j in np.argwhere(rel):
        checked += 1
        A, N = subsets[int(i)], subsets[int(j)]
        escape = stars[int(i)] & ~N
        if not spaces.is_weakly_bounded(p, escape):
            return Verdict(axiom='cn_membership', verdict='FAIL', checked_pairs=checked,
                           witness=[points_of(A, p.size), points_of(N, p.size), points_of(escape, p.size)])
    return Verdict(axiom='cn_membership', verdict='PASS', checked_pairs=checked,
                   details={'probes': 'every coarse neighbourhood pair'})


def cn_membership(p: SpacePresentation, U: Family, probes: Optional[Sequence[Probe]] = None) -> Verdict:
    """star_set(A, U) - N weakly bounded for every probe A < N"""
    if U.size != p.size:
        raise WindowMismatchError("family and presentation differ in size", {'family': U.size, 'window': p.size})
    if probes is None:
        if p.size <= Config.CN_EXHAUSTIVE:
            return _cn_exhaustive(p, U)
        probe = automatic_cn_probe(p, U)
        if probe is None:
            return Verdict(axiom='cn_membership', verdict='INCONCLUSIVE', mode='sampled',
                           details={'reason': 'no member reaches beyond the ladder'})
        probes = [probe]
        source = 'automatic'
    else:
        source = 'supplied'

    op = coarse_operator(p)
    for k, (A, N) in enumerate(probes):
        if not holds(op, A, N):
            raise PreconditionError("probe is not a coarse neighbourhood pair", {'probe': k})
        escape = star_set(A, U) & ~N
        if not spaces.is_weakly_bounded(p, escape):
            logger.info("cn membership fails on %s probe %d", source, k)
            return Verdict(axiom='cn_membership', verdict='FAIL', checked_pairs=k + 1, mode='sampled',
                           witness=[points_of(A, p.size), points_of(escape, p.size)],
                           details={'probes': source})
    return Verdict(axiom='cn_membership', verdict='PASS', checked_pairs=len(probes), mode='sampled',
                   details={'probes': source})


# ls-continuity

def _image(mapping: np.ndarray, S: SubsetMask) -> SubsetMask:
    return mask_of(np.unique(mapping[mask_to_array(S, len(mapping))]))


def _preimage(mapping: np.ndarray, S: SubsetMask, size: int) -> SubsetMask:
    return array_to_mask(mask_to_array(S, size)[mapping])


def automatic_continuity_probe(pX: SpacePresentation, pY: SpacePresentation,
                               f: Sequence[int]) -> Optional[Probe]:
    """Ball probe in Y around images of ladder-close pairs that f pulls apart"""
    if not (pX.has_metric and pY.has_metric):
        return None
    mapping = np.asarray(f, dtype=np.int64)
    first, second = spaces.neighbour_pairs(pX, spaces.ladder_parameters(pX)[0])
    order = np.lexsort((second, first))
    first, second = first[order], second[order]
    gaps = spaces.pair_distances(pY, mapping[first], mapping[second])
    reach = 2 * max(spaces.ladder_parameters(pY))
    far = gaps > reach + TAU
    pairs = [(int(mapping[x]), int(mapping[y]), float(e))
             for x, y, e in zip(first[far], second[far], gaps[far])]
    return _ball_probe(pY, pairs)


def check_ls_continuity_via_nbhds(pX: SpacePresentation, pY: SpacePresentation, f: Sequence[int],
                                  probes: Optional[Sequence[Probe]] = None) -> Verdict:
    """Ladder push-forward versus preimages of coarse neighbourhoods; PASS or FAIL when both agree"""
    mapping = np.asarray(f, dtype=np.int64)
    if mapping.shape != (pX.size,):
        raise PreconditionError("the map needs one image per point of X", {'points': pX.size})
    if ((mapping < 0) | (mapping >= pY.size)).any():
        raise PreconditionError("the map leaves the window of Y")
    if not spaces.is_bounded(pY, _image(mapping, spaces.anchor_ball(pX))):
        raise PreconditionError("f sends the anchor ball of X to an unbounded set")
    if not spaces.is_bounded(pX, _preimage(mapping, spaces.anchor_ball(pY), pY.size)):
        raise PreconditionError("f is not proper at the window")

    direct = True
    failing_scale = None
    for index, parameter in enumerate(spaces.ladder_parameters(pX)):
        family = spaces.ladder_family(pX, index)
        pushed = Family(members=[_image(mapping, member) for member in family.members],
                        size=pY.size, tag=f"f({family.tag})")
        if not spaces.is_scale(pY, pushed):
            direct = False
            failing_scale = parameter
            break

    source = 'supplied'
    if probes is None:
        probe = automatic_continuity_probe(pX, pY, mapping)
        probes = [] if probe is None else [probe]
        source = 'automatic'
    op_x, op_y = coarse_operator(pX), coarse_operator(pY)
    preserved = True
    witness: List[List[int]] = []
    for k, (A, N) in enumerate(probes):
        if not holds(op_y, A, N):
            raise PreconditionError("probe is not a coarse neighbourhood pair in Y", {'probe': k})
        pre_a, pre_n = _preimage(mapping, A, pY.size), _preimage(mapping, N, pY.size)
        if not holds(op_x, pre_a, pre_n):
            preserved = False
            witness = [points_of(pre_a, pX.size), points_of(pre_n, pX.size)]
            break

    if direct == preserved:
        verdict = 'PASS' if direct else 'FAIL'
    else:
        verdict = 'INCONCLUSIVE'
        logger.warning("Push-forward and preimage checks disagree (direct=%s, preimage=%s)", direct, preserved)
    return Verdict(axiom='ls_continuity', verdict=verdict, witness=witness, checked_pairs=len(probes),
                   mode='sampled',
                   details={'direct': direct, 'preimage': preserved, 'agree': direct == preserved,
                            'failing_scale': failing_scale, 'probes': source, 'probe_count': len(probes)})
