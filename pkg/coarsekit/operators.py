"""Neighbourhood operators as decidable relations on subset pairs, with axiom checks."""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from . import spaces
from .core_sets import (
    SubsetMask,
    array_to_mask,
    count,
    full_mask,
    points_of,
    star_table,
    subset_table,
)
from .errors import InputError, PreconditionError, WindowMismatchError
from .models import FiniteTopology, SpacePresentation, StepFunction, Verdict

logger = logging.getLogger(__name__)

TAU = Config.FLOAT_TOL
LADDER_KINDS = ('Coarse', 'Hybrid', 'Uniform')
Relation = Callable[[int, int], bool]


class NbhdOperator:
    """A relation A < B on subsets of a window (or of a ground subset for induced operators)"""

    def __init__(self, kind: str, size: int, space: Optional[SpacePresentation] = None,
                 topology: Optional[FiniteTopology] = None, relation: Optional[Relation] = None,
                 doubled: bool = False, ground: Optional[int] = None,
                 parent: Optional['NbhdOperator'] = None, name: str = ''):
        if kind not in ('Topological', 'Coarse', 'Hybrid', 'Uniform', 'Custom'):
            raise InputError(f"Unknown operator kind: {kind}")
        if kind in LADDER_KINDS and space is None:
            raise InputError(f"{kind} operators need a space presentation")
        if kind == 'Custom' and relation is None and parent is None:
            raise InputError("Custom operators need a relation")
        self.kind = kind
        self.size = size
        self.space = space
        self.topology = topology
        self.relation = relation
        self.doubled_ladder = doubled
        self.ground = full_mask(size) if ground is None else ground
        self.parent = parent
        self.name = name or kind.lower()
        self._tables: Dict[str, np.ndarray] = {}
        self._doubled: Optional[NbhdOperator] = None

    @property
    def uses_ladder(self) -> bool:
        return self.kind in LADDER_KINDS

    @property
    def is_induced(self) -> bool:
        return self.parent is not None

    def doubled(self) -> 'NbhdOperator':
        """Same operator read on the starred ladder st(U, U)"""
        if self._doubled is None:
            if self.is_induced:
                self._doubled = induce(self.parent.doubled(), self.ground)
            elif not self.uses_ladder or self.doubled_ladder:
                self._doubled = self
            else:
                self._doubled = NbhdOperator(self.kind, self.size, space=self.space, topology=self.topology,
                                             relation=self.relation, doubled=True, name=self.name + '+')
        return self._doubled

    def check_mask(self, mask: SubsetMask, what: str = 'subset') -> SubsetMask:
        if mask < 0 or mask >> self.size:
            raise WindowMismatchError(f"{what} does not fit a window of {self.size} points",
                                      {'size': self.size})
        if mask & ~self.ground:
            raise PreconditionError(f"{what} leaves the operator's ground set",
                                    {'outside': points_of(mask & ~self.ground, self.size)[:20]})
        return mask

    def complement(self, mask: SubsetMask) -> SubsetMask:
        return self.ground & ~mask

    def describe(self) -> Dict:
        description = {'kind': self.kind, 'name': self.name, 'doubled_ladder': self.doubled_ladder}
        if self.space is not None:
            description['space'] = self.space.describe()
        if self.is_induced:
            description['ground'] = points_of(self.ground, self.size)
        return description


# Constructors

def topological_operator(p: Optional[SpacePresentation] = None, topology: Optional[FiniteTopology] = None,
                         size: Optional[int] = None) -> NbhdOperator:
    """cl(A) inside int(B); discrete when no topology is given"""
    if p is not None:
        return NbhdOperator('Topological', p.size, space=p, topology=spaces.topology(p))
    if topology is not None:
        return NbhdOperator('Topological', topology.size, topology=topology)
    if size is None:
        raise InputError("topological operator needs a presentation, a topology or a size")
    return NbhdOperator('Topological', size)


def coarse_operator(p: SpacePresentation) -> NbhdOperator:
    return NbhdOperator('Coarse', p.size, space=p, topology=spaces.topology(p))


def hybrid_operator(p: SpacePresentation) -> NbhdOperator:
    return NbhdOperator('Hybrid', p.size, space=p, topology=spaces.topology(p))


def uniform_operator(p: SpacePresentation) -> NbhdOperator:
    return NbhdOperator('Uniform', p.size, space=p, topology=spaces.topology(p))


def custom_operator(size: int, relation: Relation, name: str = 'custom') -> NbhdOperator:
    return NbhdOperator('Custom', size, relation=relation, name=name)


def operator_for(p: SpacePresentation, kind: str) -> NbhdOperator:
    builders = {
        'topological': topological_operator,
        'coarse': coarse_operator,
        'hybrid': hybrid_operator,
        'uniform': uniform_operator,
    }
    try:
        return builders[kind.lower()](p)
    except KeyError:
        raise InputError(f"Unknown operator kind: {kind}", {'known': sorted(builders)})


def induce(op: NbhdOperator, A: SubsetMask) -> NbhdOperator:
    """S <_A T iff S < T' for some T' with T' cap A = T"""
    if A == 0:
        raise PreconditionError("induced operators need a nonempty subset")
    op.check_mask(A, 'induced ground set')
    base = op.parent if op.is_induced else op
    return NbhdOperator('Custom', op.size, space=op.space, ground=A, parent=base,
                        name=f"{base.name}|{count(A)}")


# Decision

def _topological(op: NbhdOperator, A: SubsetMask, B: SubsetMask) -> bool:
    if op.topology is None:
        return True
    return op.topology.closure(A) & ~op.topology.interior(B) == 0


def _coarse(op: NbhdOperator, A: SubsetMask, B: SubsetMask) -> bool:
    p = op.space
    if A == 0 or B == op.ground:
        return True
    outside = op.complement(B)
    for index in range(spaces.ladder_length(p)):
        excess = spaces.ladder_star(p, index, A, op.doubled_ladder) & outside
        if not spaces.is_weakly_bounded(p, excess):
            logger.debug("coarse relation fails at scale %d", index)
            return False
    return True


def _uniform(op: NbhdOperator, A: SubsetMask, B: SubsetMask) -> bool:
    p = op.space
    return any(spaces.ladder_star(p, index, A, op.doubled_ladder) & ~B == 0
               for index in range(spaces.ladder_length(p)))


def _induced(op: NbhdOperator, S: SubsetMask, T: SubsetMask) -> bool:
    parent = op.parent
    outside = parent.ground & ~op.ground
    if holds(parent, S, T | outside):
        return True
    free = count(outside)
    if (1 << free) > Config.SEARCH_BUDGET:
        return False
    for extra in subset_table(outside)[:-1]:
        if holds(parent, S, T | extra):
            return True
    return False


def holds(op: NbhdOperator, A: SubsetMask, B: SubsetMask) -> bool:
    """Decide A < B"""
    op.check_mask(A, 'A')
    op.check_mask(B, 'B')
    if A & ~B:
        return False
    if op.is_induced:
        return _induced(op, A, B)
    if op.kind == 'Topological':
        return _topological(op, A, B)
    if op.kind == 'Coarse':
        return _coarse(op, A, B)
    if op.kind == 'Hybrid':
        return _topological(op, A, B) and _coarse(op, A, B)
    if op.kind == 'Uniform':
        return _uniform(op, A, B)
    return bool(op.relation(A, B))


# Exhaustive relation tables

def table_size(op: NbhdOperator) -> int:
    return count(op.ground)


def fits_budget(op: NbhdOperator, budget: Optional[int] = None) -> bool:
    budget = Config.CHECK_BUDGET if budget is None else budget
    return (1 << (2 * table_size(op))) <= budget


def _pair_decider(op: NbhdOperator, subsets: List[SubsetMask]) -> Callable[[int, int], bool]:
    """Decision on compressed subset indices, with star and closure tables where available"""
    if op.is_induced or op.kind == 'Custom':
        return lambda i, j: holds(op, subsets[i], subsets[j])

    topo = None
    if op.kind in ('Topological', 'Hybrid') and op.topology is not None:
        closures = [op.topology.closure(s) for s in subsets]
        interiors = [op.topology.interior(s) for s in subsets]
        topo = (closures, interiors)

    stars = []
    p = op.space
    if op.uses_ladder:
        stars = [star_table(spaces.ladder_family(p, index, op.doubled_ladder), op.ground)
                 for index in range(spaces.ladder_length(p))]

    def decide(i: int, j: int) -> bool:
        if topo is not None and topo[0][i] & ~topo[1][j]:
            return False
        if op.kind in ('Coarse', 'Hybrid'):
            outside = op.ground & ~subsets[j]
            return all(spaces.is_weakly_bounded(p, table[i] & outside) for table in stars)
        if op.kind == 'Uniform':
            return any(table[i] & ~subsets[j] == 0 for table in stars)
        return True

    return decide


def relation_table(op: NbhdOperator) -> np.ndarray:
    """rel[i, j] for all compressed subsets i, j of the ground set"""
    if 'relation' not in op._tables:
        subsets = subset_table(op.ground)
        n = len(subsets)
        decide = _pair_decider(op, subsets)
        rel = np.zeros((n, n), dtype=bool)
        for j in range(n):
            i = j
            while True:
                rel[i, j] = decide(i, j)
                if i == 0:
                    break
                i = (i - 1) & j
        op._tables['relation'] = rel
        logger.info("Relation table for %s: %d pairs hold out of %d",
                    op.name, int(rel.sum()), 3 ** table_size(op))
    return op._tables['relation']


def _masks(op: NbhdOperator, *indices: int) -> List[List[int]]:
    subsets = subset_table(op.ground)
    return [points_of(subsets[int(i)], op.size) for i in indices]


def _minimal_neighbourhoods(rel: np.ndarray) -> List[np.ndarray]:
    """Inclusion-minimal columns of each row (rows are upward closed once N2 holds)"""
    n, bits = rel.shape[0], rel.shape[0].bit_length() - 1
    minimal = []
    for i in range(n):
        row = rel[i]
        keep = row.copy()
        for b in range(bits):
            idx = np.flatnonzero(row)
            with_bit = idx[(idx >> b) & 1 == 1]
            keep[with_bit[row[with_bit ^ (1 << b)]]] = False
        minimal.append(np.flatnonzero(keep))
    return minimal


def _exhaustive(op: NbhdOperator, axiom: str) -> Verdict:
    rel = relation_table(op)
    n = rel.shape[0]
    last = n - 1
    bits = table_size(op)
    pairs = 3 ** bits

    def fail(*indices) -> Verdict:
        return Verdict(axiom=axiom, verdict='FAIL', witness=_masks(op, *indices), checked_pairs=pairs)

    if axiom == 'N0':
        bad = np.flatnonzero(~rel[:, last])
        if len(bad):
            return fail(bad[0], last)
    elif axiom == "N0'":
        bad = np.flatnonzero(~rel[0, :])
        if len(bad):
            return fail(0, bad[0])
    elif axiom == 'N1':
        perm = np.arange(n) ^ last
        dual = rel[perm][:, perm].T
        bad = np.argwhere(rel & ~dual)
        if len(bad):
            return fail(*bad[0])
    elif axiom in ('N2', "N2'"):
        for b in range(bits):
            bit = 1 << b
            i_idx, j_idx = np.nonzero(rel)
            if axiom == 'N2':
                sel = (j_idx & bit) == 0
                targets = (i_idx[sel], j_idx[sel] | bit)
            else:
                sel = (i_idx & bit) != 0
                targets = (i_idx[sel] ^ bit, j_idx[sel])
            broken = ~rel[targets]
            if broken.any():
                k = int(np.flatnonzero(broken)[0])
                return fail(i_idx[sel][k], j_idx[sel][k], targets[0][k], targets[1][k])
    elif axiom in ('N3', "N3'"):
        upward = _exhaustive(op, 'N2')
        if upward.failed:
            return Verdict(axiom=axiom, verdict='INCONCLUSIVE', checked_pairs=pairs,
                           details={'reason': 'N2 fails, minimal-neighbourhood reduction unavailable',
                                    'n2_witness': upward.witness})
        minimal = _minimal_neighbourhoods(rel)
        owners = np.concatenate([np.full(len(m), i) for i, m in enumerate(minimal)])
        mins = np.concatenate(minimal)
        for i, row in enumerate(minimal):
            for m in row:
                if axiom == 'N3':
                    broken = ~rel[i | owners, m | mins]
                else:
                    broken = ~rel[i & owners, m & mins]
                if broken.any():
                    k = int(np.flatnonzero(broken)[0])
                    return fail(i, m, owners[k], mins[k])
    elif axiom == 'N4':
        strong = relation_table(op.doubled())
        as_float = rel.astype(np.float32)
        through = (as_float @ as_float) > 0
        bad = np.argwhere(strong & ~through)
        if len(bad):
            return fail(*bad[0])
        if op.uses_ladder:
            return Verdict(axiom=axiom, verdict='PASS', checked_pairs=pairs,
                           details={'plain_n4': not bool((rel & ~through).any())})
    else:
        raise InputError(f"Unknown axiom: {axiom}", {'known': Config.AXIOMS + Config.DERIVED_AXIOMS})
    return Verdict(axiom=axiom, verdict='PASS', checked_pairs=pairs)


def _random_mask(rng: np.random.Generator, ground_points: np.ndarray, size: int) -> SubsetMask:
    flags = np.zeros(size, dtype=bool)
    flags[ground_points[rng.random(len(ground_points)) < 0.5]] = True
    return array_to_mask(flags)


def _sampled(op: NbhdOperator, axiom: str, samples: int, seed: int) -> Verdict:
    rng = np.random.default_rng(seed)
    ground_points = np.asarray(points_of(op.ground, op.size), dtype=np.int64)

    def pair() -> Tuple[SubsetMask, SubsetMask]:
        outer = _random_mask(rng, ground_points, op.size)
        return outer & _random_mask(rng, ground_points, op.size), outer

    def fail(*masks) -> Verdict:
        return Verdict(axiom=axiom, verdict='FAIL', witness=[points_of(m, op.size) for m in masks],
                       checked_pairs=checked, mode='sampled', seed=seed)

    checked = 0
    witness_misses = 0
    witness = None
    if axiom == 'N4':
        from .constructions import default_witness
        witness = default_witness(op)
    for _ in range(samples):
        checked += 1
        A, B = pair()
        if axiom == 'N0':
            if not holds(op, A, op.ground):
                return fail(A, op.ground)
            continue
        if axiom == "N0'":
            if not holds(op, 0, B):
                return fail(0, B)
            continue
        if axiom == 'N4':
            if holds(op.doubled(), A, B) and witness.find(A, B) is None:
                witness_misses += 1
            continue
        if not holds(op, A, B):
            continue
        if axiom == 'N1' and not holds(op, op.complement(B), op.complement(A)):
            return fail(A, B)
        if axiom == 'N2':
            C = B | _random_mask(rng, ground_points, op.size)
            if not holds(op, A, C):
                return fail(A, B, C)
        if axiom == "N2'":
            smaller = A & _random_mask(rng, ground_points, op.size)
            if not holds(op, smaller, B):
                return fail(A, B, smaller)
        if axiom in ('N3', "N3'"):
            A2, B2 = pair()
            if holds(op, A2, B2):
                joined = (A | A2, B | B2) if axiom == 'N3' else (A & A2, B & B2)
                if not holds(op, *joined):
                    return fail(A, B, A2, B2)
    details = {'samples': samples}
    if axiom == 'N4':
        details['witness_misses'] = witness_misses
    logger.warning("%s on %s checked by sampling (%d samples); verdict is inconclusive", axiom, op.name, samples)
    return Verdict(axiom=axiom, verdict='INCONCLUSIVE', checked_pairs=checked, mode='sampled',
                   seed=seed, details=details)


def check_axiom(op: NbhdOperator, axiom: str, budget: Optional[int] = None,
                samples: Optional[int] = None, seed: Optional[int] = None) -> Verdict:
    """PASS/FAIL over all subset pairs within budget, otherwise a seeded sample"""
    if axiom not in Config.AXIOMS + Config.DERIVED_AXIOMS:
        raise InputError(f"Unknown axiom: {axiom}", {'known': Config.AXIOMS + Config.DERIVED_AXIOMS})
    if fits_budget(op, budget):
        verdict = _exhaustive(op, axiom)
    else:
        verdict = _sampled(op, axiom, Config.SAMPLES if samples is None else samples,
                           Config.SEED if seed is None else seed)
    verdict.details.setdefault('operator', op.describe())
    if axiom == 'N4' and op.uses_ladder:
        verdict.details['ladder_doubling'] = True
        verdict.details['scope'] = 'premise A < C read over the doubled ladder st(U, U) only'
    logger.info("%s on %s: %s", axiom, op.name, verdict.verdict)
    return verdict


def check_axiom_suite(op: NbhdOperator, axioms: Optional[Sequence[str]] = None, **kwargs) -> List[Verdict]:
    return [check_axiom(op, axiom, **kwargs) for axiom in (axioms or Config.AXIOMS)]


def induced_topology(op: NbhdOperator) -> List[SubsetMask]:
    """Opens U with {x} < U for every x in U"""
    subsets = subset_table(op.ground)
    opens = []
    for U in subsets:
        if all(holds(op, 1 << x, U) for x in points_of(U, op.size)):
            opens.append(U)
    return sorted(opens)


# Continuity

def threshold_grid(f: StepFunction, grid_step: Optional[float] = None) -> np.ndarray:
    """Uniform grid on [lo, hi] plus the values of f (when few enough)"""
    step = Config.GRID_STEP if grid_step is None else grid_step
    span = f.hi - f.lo
    ticks = int(np.floor(1 / step + TAU))
    grid = [f.lo + k * step * span for k in range(ticks + 1)] + [f.hi]
    values = f.distinct_values()
    if len(values) <= Config.MAX_BREAKPOINTS:
        grid.extend(values.tolist())
    else:
        logger.warning("Function has %d distinct values; breakpoints beyond %d are left off the grid",
                       len(values), Config.MAX_BREAKPOINTS)
    grid = np.unique(np.round(np.asarray(grid, dtype=float), 12))
    return grid


def check_nbhd_continuous(op: NbhdOperator, f: StepFunction, grid_step: Optional[float] = None,
                          min_gap: Optional[float] = None) -> Verdict:
    """f^-1([lo, a]) < f^-1([lo, b)) for every pair of grid thresholds a < b

    ``min_gap`` restricts the pairs to b - a >= min_gap, for functions with a finite
    resolution such as dyadic Urysohn functions. Built-in operators are upward closed in
    the second argument, so only the smallest admissible b is decided for each a.
    """
    if f.size != op.size:
        raise WindowMismatchError("function and operator live on different windows",
                                  {'function': f.size, 'operator': op.size})
    domain = f.domain_array()
    if array_to_mask(domain) != op.ground:
        raise PreconditionError("function domain differs from the operator's ground set")
    values = f.array()
    on_domain = values[domain]
    if on_domain.size and (on_domain.min() < f.lo - TAU or on_domain.max() > f.hi + TAU):
        raise PreconditionError("function leaves its range", {'range': [f.lo, f.hi]})

    step = Config.GRID_STEP if grid_step is None else grid_step
    gap = 0.0 if min_gap is None else min_gap
    monotone = op.kind != 'Custom' or op.is_induced
    grid = threshold_grid(f, step)
    checked = 0
    for k, a in enumerate(grid):
        lower = array_to_mask(domain & (values <= a + TAU))
        candidates = grid[k + 1:][grid[k + 1:] >= a + gap - TAU]
        if monotone:
            candidates = candidates[:1]
        for b in candidates:
            upper = array_to_mask(domain & (values < b - TAU))
            checked += 1
            if not holds(op, lower, upper):
                return Verdict(axiom='continuity', verdict='FAIL',
                               witness=[points_of(lower, op.size), points_of(upper, op.size)],
                               checked_pairs=checked,
                               details={'a': float(a), 'b': float(b), 'grid_step': step, 'min_gap': gap,
                                        'smallest_b_only': monotone})
    return Verdict(axiom='continuity', verdict='PASS', checked_pairs=checked,
                   details={'grid_step': step, 'min_gap': gap, 'thresholds': len(grid),
                            'smallest_b_only': monotone})
