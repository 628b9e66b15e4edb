"""Dyadic Urysohn families, the Tietze iteration and the metric interpolation witness."""

import logging
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from . import spaces
from .core_sets import SubsetMask, array_to_mask, count, mask_to_array, points_of, subset_table
from .errors import ConstructionError, PreconditionError, WindowMismatchError
from .models import DyadicFamily, SpacePresentation, StepFunction, TietzeReport, TietzeStep, Verdict
from .operators import NbhdOperator, check_nbhd_continuous, holds, hybrid_operator, induce

logger = logging.getLogger(__name__)

TAU = Config.FLOAT_TOL


def metric_interpolate(p: SpacePresentation, A: SubsetMask, U: SubsetMask,
                       op: Optional[NbhdOperator] = None) -> SubsetMask:
    """V = {x : d(x, A) <= d(x, X - U)}, with d(x, empty) = +inf and V = empty for A empty"""
    p.window.check_mask(A, 'A')
    p.window.check_mask(U, 'U')
    if A & ~U:
        raise PreconditionError("A must lie inside U", {'outside': points_of(A & ~U, p.size)[:20]})
    if A == 0:
        return 0
    op = op or hybrid_operator(p)
    if not holds(op, A, U):
        raise PreconditionError("U is not a neighbourhood of A", {'scale': _failing_scale(op, A, U)})
    outside = p.window.full & ~U
    if outside == 0:
        return U
    near_a = spaces.dist_to_set(p, A)
    near_outside = spaces.dist_to_set(p, outside)
    return array_to_mask(near_a <= near_outside + TAU)


def _failing_scale(op: NbhdOperator, A: SubsetMask, U: SubsetMask) -> Optional[float]:
    p = op.space
    if p is None or not op.uses_ladder:
        return None
    outside = op.complement(U)
    for index, parameter in enumerate(spaces.ladder_parameters(p)):
        excess = spaces.ladder_star(p, index, A, op.doubled_ladder) & outside
        if not spaces.is_weakly_bounded(p, excess):
            return parameter
    return None


class N4Witness:
    """Produces an intermediate B with A < B < C, or None"""

    name = 'witness'

    def __init__(self, op: NbhdOperator):
        self.op = op

    def candidate(self, A: SubsetMask, C: SubsetMask) -> Optional[SubsetMask]:
        raise NotImplementedError

    def find(self, A: SubsetMask, C: SubsetMask) -> Optional[SubsetMask]:
        try:
            middle = self.candidate(A, C)
        except PreconditionError:
            return None
        if middle is None:
            return None
        if holds(self.op, A, middle) and holds(self.op, middle, C):
            return middle
        logger.debug("%s candidate failed certification", self.name)
        return None

    def __call__(self, A: SubsetMask, C: SubsetMask) -> SubsetMask:
        middle = self.find(A, C)
        if middle is None:
            raise ConstructionError(
                f"No intermediate neighbourhood found by the {self.name} witness",
                {'A': points_of(A, self.op.size), 'C': points_of(C, self.op.size)},
            )
        return middle


class MetricWitness(N4Witness):
    name = 'metric'

    def candidate(self, A: SubsetMask, C: SubsetMask) -> Optional[SubsetMask]:
        return metric_interpolate(self.op.space, A, C, self.op)


class ExhaustiveWitness(N4Witness):
    name = 'exhaustive'

    def __init__(self, op: NbhdOperator, budget: Optional[int] = None):
        super().__init__(op)
        self.budget = Config.SEARCH_BUDGET if budget is None else budget

    def candidate(self, A: SubsetMask, C: SubsetMask) -> Optional[SubsetMask]:
        free = C & ~A
        if (1 << count(free)) > self.budget:
            logger.warning("Intermediate search over %d free points exceeds the search budget", count(free))
            return None
        for extra in subset_table(free):
            middle = A | extra
            if holds(self.op, A, middle) and holds(self.op, middle, C):
                return middle
        return None


def metric_witness(op: NbhdOperator) -> N4Witness:
    if op.space is None or not op.space.has_metric:
        raise PreconditionError("the metric witness needs a metric presentation")
    return MetricWitness(op)


def exhaustive_witness(op: NbhdOperator, budget: Optional[int] = None) -> N4Witness:
    return ExhaustiveWitness(op, budget)


def default_witness(op: NbhdOperator) -> N4Witness:
    """Metric interpolation on metric windows without a finite topology, exhaustive search otherwise"""
    if not op.is_induced and op.space is not None and op.space.has_metric and op.topology is None:
        return MetricWitness(op)
    return ExhaustiveWitness(op)


# Dyadic families

def build_dyadic(op: NbhdOperator, A: SubsetMask, B: SubsetMask, depth: Optional[int] = None,
                 witness: Optional[N4Witness] = None) -> DyadicFamily:
    """Sets indexed by k/2^depth from A_0 = A to A_1 = X - B, midpoints from the witness"""
    depth = Config.DEPTH if depth is None else depth
    op.check_mask(A, 'A')
    op.check_mask(B, 'B')
    top = op.complement(B)
    if not holds(op, A, top):
        raise PreconditionError("X - B is not a neighbourhood of A",
                                {'A': points_of(A, op.size), 'B': points_of(B, op.size)})
    witness = witness or default_witness(op)
    sets = {Fraction(0): A, Fraction(1): top}
    for level in range(1, depth + 1):
        denominator = 2 ** level
        for k in range(1, denominator, 2):
            low, high = Fraction(k - 1, denominator), Fraction(k + 1, denominator)
            middle = witness.find(sets[low], sets[high])
            if middle is None:
                raise ConstructionError(
                    "Intermediate neighbourhood missing",
                    {'pair': [str(low), str(high)], 'level': level,
                     'A': points_of(sets[low], op.size), 'C': points_of(sets[high], op.size)},
                )
            sets[Fraction(k, denominator)] = middle
        logger.info("Dyadic level %d complete (%d sets)", level, len(sets))
    family = DyadicFamily(depth=depth, size=op.size, sets=sets)
    verdict = certify_dyadic(op, family)
    if not verdict.passed:
        raise ConstructionError("Dyadic family failed certification", {'witness': verdict.witness})
    return family


def certify_dyadic(op: NbhdOperator, family: DyadicFamily) -> Verdict:
    """Adjacent pairs are neighbourhoods and the family is nested"""
    indices = family.indices()
    checked = 0
    for low, high in zip(indices, indices[1:]):
        checked += 1
        first, second = family.sets[low], family.sets[high]
        if first & ~second or not holds(op, first, second):
            return Verdict(axiom='dyadic', verdict='FAIL', checked_pairs=checked,
                           witness=[points_of(first, op.size), points_of(second, op.size)],
                           details={'pair': [str(low), str(high)]})
    return Verdict(axiom='dyadic', verdict='PASS', checked_pairs=checked, details={'depth': family.depth})


def function_from_family(family: DyadicFamily, ground: Optional[SubsetMask] = None) -> StepFunction:
    """f(x) = min{s : x in A_s}, 1 where x lies in no A_s"""
    values = np.ones(family.size)
    for index in sorted(family.sets, reverse=True):
        values[mask_to_array(family.sets[index], family.size)] = float(index)
    if ground is not None:
        values[~mask_to_array(ground, family.size)] = 0.0
    return StepFunction(values=values.tolist(), lo=0.0, hi=1.0, domain=ground)


def urysohn(op: NbhdOperator, A: SubsetMask, B: SubsetMask, depth: Optional[int] = None,
            witness: Optional[N4Witness] = None) -> StepFunction:
    """Neighbourhood continuous f with f(A) = 0 and f(B) = 1"""
    family = build_dyadic(op, A, B, depth, witness)
    ground = None if op.ground == (1 << op.size) - 1 else op.ground
    return function_from_family(family, ground)


def certify_urysohn(op: NbhdOperator, f: StepFunction, A: SubsetMask, B: SubsetMask,
                    depth: Optional[int] = None, grid_step: Optional[float] = None) -> Verdict:
    """f(A) = {0}, f(B) = {1} and continuity on threshold pairs at least 2^(1-depth) apart"""
    depth = Config.DEPTH if depth is None else depth
    values = f.array()
    on_a = values[mask_to_array(A, f.size)]
    on_b = values[mask_to_array(B, f.size)]
    if (on_a.size and np.abs(on_a).max() > TAU) or (on_b.size and np.abs(on_b - 1).max() > TAU):
        return Verdict(axiom='urysohn', verdict='FAIL', details={'reason': 'boundary values'})
    verdict = check_nbhd_continuous(op, f, grid_step, min_gap=2.0 ** (1 - depth))
    verdict.axiom = 'urysohn'
    verdict.details['depth'] = depth
    return verdict


def dyadic_to_pairs(family: DyadicFamily) -> List[Tuple[str, List[int]]]:
    return [(str(index), points_of(family.sets[index], family.size)) for index in family.indices()]


def dyadic_from_pairs(pairs: Sequence[Sequence], size: int, depth: int) -> DyadicFamily:
    sets = {Fraction(index): sum(1 << int(x) for x in points) for index, points in pairs}
    return DyadicFamily(depth=depth, size=size, sets=sets)


# Step functions

def constant_function(size: int, value: float, lo: Optional[float] = None, hi: Optional[float] = None,
                      domain: Optional[SubsetMask] = None) -> StepFunction:
    lo = value if lo is None else lo
    hi = value if hi is None else hi
    return StepFunction(values=[float(value)] * size, lo=lo, hi=hi, domain=domain)


def restrict(f: StepFunction, A: SubsetMask) -> StepFunction:
    if A >> f.size:
        raise WindowMismatchError("subset does not fit the function's window", {'size': f.size})
    domain = A if f.domain is None else f.domain & A
    values = np.where(mask_to_array(domain, f.size), f.array(), f.lo)
    return StepFunction(values=values.tolist(), lo=f.lo, hi=f.hi, domain=domain)


def scale_function(f: StepFunction, lo: float, hi: float) -> StepFunction:
    """Affine image of f under [f.lo, f.hi] -> [lo, hi]"""
    span = f.hi - f.lo
    if span <= 0:
        values = np.full(f.size, lo)
    else:
        values = lo + (f.array() - f.lo) * (hi - lo) / span
    return StepFunction(values=values.tolist(), lo=min(lo, hi), hi=max(lo, hi), domain=f.domain)


def sum_functions(f: StepFunction, g: StepFunction) -> StepFunction:
    if f.size != g.size:
        raise WindowMismatchError("functions live on different windows", {'sizes': [f.size, g.size]})
    if f.domain is None:
        domain = g.domain
    elif g.domain is None:
        domain = f.domain
    else:
        domain = f.domain & g.domain
    values = f.array() + g.array()
    return StepFunction(values=values.tolist(), lo=f.lo + g.lo, hi=f.hi + g.hi, domain=domain)


# Tietze

def tietze_extend(op: NbhdOperator, A: SubsetMask, f: StepFunction, tol: Optional[float] = None,
                  witness: Optional[N4Witness] = None, depth: Optional[int] = None,
                  check_continuity: bool = True) -> Tuple[StepFunction, TietzeReport]:
    """Extend f from A to the whole window by the contraction r -> r - g_k, bound M -> 2M/3"""
    tol = Config.TOL if tol is None else tol
    op.check_mask(A, 'A')
    if A == 0:
        raise PreconditionError("nothing to extend from an empty set")
    if f.size != op.size:
        raise WindowMismatchError("function and operator live on different windows",
                                  {'function': f.size, 'operator': op.size})
    domain = A if f.domain is None else f.domain
    if domain != A:
        raise PreconditionError("function must be defined exactly on A")
    on_a = mask_to_array(A, op.size)
    f_on_a = StepFunction(values=np.where(on_a, f.array(), f.lo).tolist(), lo=f.lo, hi=f.hi,
                          domain=None if A == op.ground else A)

    center = (f.lo + f.hi) / 2
    M = (f.hi - f.lo) / 2
    if A == op.ground:
        report = TietzeReport(M=M, center=center, tol=tol, steps=[], contraction_envelope=[],
                              stated_envelope=[], max_error=0.0)
        return StepFunction(values=f.array().tolist(), lo=f.lo, hi=f.hi), report

    if check_continuity:
        verdict = check_nbhd_continuous(induce(op, A), f_on_a)
        if not verdict.passed:
            raise PreconditionError("f is not neighbourhood continuous on A", {'verdict': verdict.model_dump()})

    witness = witness or default_witness(op)
    residual = np.where(on_a, f.array() - center, 0.0)
    extension = np.full(op.size, center)
    bound = M
    steps: List[TietzeStep] = []
    while 2 * bound > tol:
        third = bound / 3
        S = array_to_mask(on_a & (residual <= -third + TAU))
        T = array_to_mask(on_a & (residual >= third - TAU))
        if S and T:
            u = urysohn(op, S, T, depth, witness).array()
            step = third * (2 * u - 1)
            sides = 'both'
        elif S:
            step = np.full(op.size, -third)
            sides = 'upper-empty'
        elif T:
            step = np.full(op.size, third)
            sides = 'lower-empty'
        else:
            step = np.zeros(op.size)
            sides = 'none'
        extension += step
        residual = np.where(on_a, residual - step, 0.0)
        measured = float(np.abs(residual[on_a]).max())
        steps.append(TietzeStep(step=len(steps) + 1, bound=bound, residual=measured, sides=sides))
        logger.info("Tietze step %d: bound %.3g, residual %.3g (%s)", len(steps), bound, measured, sides)
        bound *= 2 / 3

    extension = np.clip(extension, f.lo, f.hi)
    max_error = float(np.abs(extension[on_a] - f.array()[on_a]).max())
    count_steps = len(steps)
    report = TietzeReport(
        M=M,
        center=center,
        tol=tol,
        steps=steps,
        contraction_envelope=[2 * M * (2 / 3) ** k for k in range(1, count_steps + 1)],
        stated_envelope=[M * 2 ** (n + 1) / 3 ** n for n in range(1, count_steps + 1)],
        max_error=max_error,
    )
    g = StepFunction(values=extension.tolist(), lo=f.lo, hi=f.hi)
    if check_continuity:
        report.continuity = check_nbhd_continuous(op, g)
    return g, report
