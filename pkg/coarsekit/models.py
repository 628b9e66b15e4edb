from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from config import Config
from .errors import WindowMismatchError

TAU = Config.FLOAT_TOL

SpaceKind = Literal['Metric', 'C0', 'Group', 'MaxULF', 'LSXA', 'HalfPlaneNonNormal', 'Finite']
OperatorKind = Literal['Topological', 'Coarse', 'Hybrid', 'Uniform', 'Custom']
VerdictValue = Literal['PASS', 'FAIL', 'INCONCLUSIVE']


class Window(BaseModel):
    """Finite ground set, points indexed 0..size-1"""
    size: int = Field(ge=1)
    labels: Optional[List[Tuple[int, ...]]] = None  # lattice coordinates
    names: Optional[List[str]] = None  # point names for finite models
    shape: Dict[str, Any] = Field(default_factory=dict)  # shorthand the window was built from

    @model_validator(mode='after')
    def _check_labels(self):
        if self.labels is not None:
            if len(self.labels) != self.size:
                raise ValueError(f"expected {self.size} labels, got {len(self.labels)}")
            if len({len(label) for label in self.labels}) > 1:
                raise ValueError("labels must have uniform arity")
            if len(set(self.labels)) != self.size:
                raise ValueError("labels must be pairwise distinct")
        if self.names is not None and len(self.names) != self.size:
            raise ValueError(f"expected {self.size} names, got {len(self.names)}")
        return self

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    def check_mask(self, mask: int, what: str = 'subset') -> int:
        if mask < 0 or mask >> self.size:
            raise WindowMismatchError(
                f"{what} does not fit a window of {self.size} points",
                {'bit_length': mask.bit_length() if mask >= 0 else None, 'size': self.size},
            )
        return mask

    def describe(self) -> Dict[str, Any]:
        description = {'size': self.size}
        description.update(self.shape)
        return description


class Family(BaseModel):
    """Ordered multiset of subsets (a cover or a scale)"""
    members: List[int]
    size: int = Field(ge=1)
    tag: str = ''

    @model_validator(mode='after')
    def _check_members(self):
        for member in self.members:
            if member < 0 or member >> self.size:
                raise ValueError(f"member does not fit a window of {self.size} points")
        return self

    def __len__(self) -> int:
        return len(self.members)


class ScaleLadder(BaseModel):
    """Finite ordered list of scales, coarsening as the index grows"""
    scales: List[Family]
    parameters: List[float]
    tag: str = ''

    @model_validator(mode='after')
    def _check_lengths(self):
        if len(self.scales) != len(self.parameters):
            raise ValueError("every ladder scale needs its generating parameter")
        return self

    def __len__(self) -> int:
        return len(self.scales)


class SpacePresentation(BaseModel):
    """Windowed model of an (h)ls-space"""
    kind: SpaceKind
    window: Window
    cutoff: float = Field(ge=0)
    ladder: List[float] = Field(default_factory=list)
    params: Dict[str, Any] = Field(default_factory=dict)

    _cache: Dict[str, Any] = PrivateAttr(default_factory=dict)

    @model_validator(mode='after')
    def _check_kind(self):
        if self.kind in ('Metric', 'C0', 'LSXA', 'HalfPlaneNonNormal', 'Group') and self.window.labels is None:
            raise ValueError(f"{self.kind} presentations need lattice labels")
        if self.kind == 'Group':
            generators = self.params.get('generators')
            if not generators:
                raise ValueError("Group presentations need a generating set")
            gens = {tuple(g) for g in generators}
            if any(tuple(-c for c in g) not in gens for g in gens):
                raise ValueError("Group generating set must be symmetric")
        if self.kind == 'LSXA' and not self.params.get('excluded'):
            raise ValueError("LSXA presentations need an excluded set")
        return self

    @property
    def size(self) -> int:
        return self.window.size

    @property
    def has_metric(self) -> bool:
        return self.kind not in ('MaxULF', 'Finite')

    def describe(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'window': self.window.describe(),
            'cutoff': self.cutoff,
            'ladder': list(self.ladder),
        }


class FiniteTopology(BaseModel):
    """Opens of a finite topology, closed under union and intersection"""
    size: int = Field(ge=1)
    opens: List[int]

    @model_validator(mode='after')
    def _check_lattice(self):
        full = (1 << self.size) - 1
        opens = set(self.opens)
        if 0 not in opens or full not in opens:
            raise ValueError("a topology contains the empty set and the whole window")
        for first in opens:
            if first < 0 or first >> self.size:
                raise ValueError("open set does not fit the window")
            for second in opens:
                if first | second not in opens or first & second not in opens:
                    raise ValueError("opens are not closed under union and intersection")
        self.opens = sorted(opens)
        return self

    def interior(self, mask: int) -> int:
        result = 0
        for open_set in self.opens:
            if open_set & ~mask == 0:
                result |= open_set
        return result

    def closure(self, mask: int) -> int:
        outside = 0
        for open_set in self.opens:
            if open_set & mask == 0:
                outside |= open_set
        return ((1 << self.size) - 1) & ~outside

    def is_open(self, mask: int) -> bool:
        return mask in self.opens


class StepFunction(BaseModel):
    """Finitely-valued map from window points into [lo, hi]"""
    values: List[float]
    lo: float
    hi: float
    domain: Optional[int] = None  # restricted domain mask; None means the whole window

    _array: Optional[np.ndarray] = PrivateAttr(default=None)

    @model_validator(mode='after')
    def _check_range(self):
        if self.lo > self.hi:
            raise ValueError(f"empty range [{self.lo}, {self.hi}]")
        values = self.array()
        if self.domain is not None:
            if self.domain < 0 or self.domain >> len(self.values):
                raise ValueError("domain does not fit the value list")
            values = values[self.domain_array()]
        if values.size and (values.min() < self.lo - TAU or values.max() > self.hi + TAU):
            raise ValueError(f"values leave the range [{self.lo}, {self.hi}]")
        return self

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def range(self) -> Tuple[float, float]:
        return (self.lo, self.hi)

    def array(self) -> np.ndarray:
        if self._array is None:
            self._array = np.asarray(self.values, dtype=float)
        return self._array

    def domain_array(self) -> np.ndarray:
        if self.domain is None:
            return np.ones(self.size, dtype=bool)
        bits = np.frombuffer(self.domain.to_bytes((self.size + 7) // 8, 'little'), dtype=np.uint8)
        return np.unpackbits(bits, bitorder='little')[:self.size].astype(bool)

    def distinct_values(self) -> np.ndarray:
        return np.unique(self.array()[self.domain_array()])


class DyadicFamily(BaseModel):
    """Subsets indexed by the dyadic rationals k/2^depth in [0, 1]"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    depth: int = Field(ge=0)
    size: int = Field(ge=1)
    sets: Dict[Fraction, int]

    @field_validator('sets')
    @classmethod
    def _check_indices(cls, sets: Dict[Fraction, int]) -> Dict[Fraction, int]:
        for index in sets:
            if not 0 <= index <= 1:
                raise ValueError(f"dyadic index {index} outside [0, 1]")
        return sets

    def indices(self) -> List[Fraction]:
        return sorted(self.sets)


class Verdict(BaseModel):
    """Shared verdict envelope for axiom, continuity and membership checks"""
    axiom: str
    verdict: VerdictValue
    witness: List[List[int]] = Field(default_factory=list)
    checked_pairs: int = 0
    mode: Literal['exhaustive', 'sampled'] = 'exhaustive'
    seed: Optional[int] = None
    details: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == 'PASS'

    @property
    def failed(self) -> bool:
        return self.verdict == 'FAIL'


class OscillationReport(BaseModel):
    """Slow-oscillation verdict for one (scale, epsilon) pair"""
    scale_id: int
    scale_parameter: float
    epsilon: float
    K: Optional[List[int]] = None  # None when no admissible exception set exists
    offending: List[int] = Field(default_factory=list)
    max_excess_diameter: float = 0.0
    witness_member: Optional[List[int]] = None
    passed: bool


class ScaleIntersection(BaseModel):
    scale_id: int
    scale_parameter: float
    intersection: List[int]
    bounded: bool


class SeparationReport(BaseModel):
    """Per-scale star intersections of two subsets"""
    scales: List[ScaleIntersection]
    overall: bool
    components: int = 1


class NormalityReport(BaseModel):
    """N4 verdicts of the coarse, topological and hybrid operators on one probe set"""
    coarse: Verdict
    topological: Verdict
    hybrid: Verdict
    consistent: bool  # both factors passing forces the hybrid verdict to pass


class WitnessFamily(BaseModel):
    """Pairs {z_i, w_i} extracted row by row from a wedge candidate"""
    rows: List[int]
    pairs: List[Tuple[int, int]]
    gaps: List[float]
    M: float
    certified: bool
    orientation: Literal['direct', 'flipped'] = 'direct'
    violations: int = 0


class TietzeStep(BaseModel):
    step: int
    bound: float  # residual bound M_k before the step
    residual: float  # measured sup residual on A after the step
    sides: Literal['both', 'lower-empty', 'upper-empty', 'none']


class TietzeReport(BaseModel):
    M: float
    center: float
    tol: float
    steps: List[TietzeStep]
    contraction_envelope: List[float]
    stated_envelope: List[float]
    max_error: float
    continuity: Optional[Verdict] = None


class RunConfig(BaseModel):
    """One CLI invocation with its overrides"""
    command: str
    space: Optional[str] = None
    subsets: Optional[str] = None
    function: Optional[str] = None
    out: str = Field(default_factory=lambda: Config().OUTPUT_DIR)
    operator: Optional[Literal['topological', 'coarse', 'hybrid', 'uniform']] = None  # None: all kinds for axioms, hybrid otherwise
    cutoff: Optional[float] = Field(default=None, gt=0)
    ladder: Optional[List[float]] = None
    depth: int = Field(default=Config.DEPTH, ge=1, le=16)
    tol: float = Field(default=Config.TOL, gt=0)
    grid_step: float = Field(default=Config.GRID_STEP, gt=0, le=0.5)
    eps_grid: List[float] = Field(default_factory=lambda: list(Config.EPS_GRID))
    seed: int = Field(default=Config.SEED, ge=0)
    candidate: Optional[str] = None
    delta: float = Field(default=0.05, ge=0, lt=1 / 6)
    m_hint: int = Field(default=0, ge=0)

    @field_validator('eps_grid')
    @classmethod
    def _check_eps(cls, eps_grid: List[float]) -> List[float]:
        if not eps_grid or any(not 0 < eps <= 1 for eps in eps_grid):
            raise ValueError("eps values must lie in (0, 1]")
        return eps_grid

    @field_validator('ladder')
    @classmethod
    def _check_ladder(cls, ladder: Optional[List[float]]) -> Optional[List[float]]:
        if ladder is not None and (not ladder or any(value <= 0 for value in ladder)):
            raise ValueError("ladder parameters must be positive")
        return ladder

    def settings(self) -> Dict[str, Any]:
        return {
            'depth': self.depth,
            'tol': self.tol,
            'grid_step': self.grid_step,
            'eps_grid': list(self.eps_grid),
            'seed': self.seed,
            'operator': self.operator,
        }
