"""
Hybrid large-scale geometry on finite windows: neighbourhood operators, Urysohn and Tietze constructions
"""

from .data_manager import DataManager
from .errors import (
    CoarsekitError,
    ConstructionError,
    CoverError,
    InputError,
    NotSlowlyOscillatingError,
    PreconditionError,
    WindowMismatchError,
)
from .models import (
    DyadicFamily,
    Family,
    FiniteTopology,
    ScaleLadder,
    SpacePresentation,
    StepFunction,
    Verdict,
    Window,
)
from .operators import NbhdOperator, check_axiom, holds, operator_for
from .constructions import build_dyadic, tietze_extend, urysohn
from .verification import check_coarsely_separated, check_slowly_oscillating, nonnormal_witness

__all__ = [
    'DataManager',
    'CoarsekitError',
    'ConstructionError',
    'CoverError',
    'InputError',
    'NotSlowlyOscillatingError',
    'PreconditionError',
    'WindowMismatchError',
    'DyadicFamily',
    'Family',
    'FiniteTopology',
    'ScaleLadder',
    'SpacePresentation',
    'StepFunction',
    'Verdict',
    'Window',
    'NbhdOperator',
    'check_axiom',
    'holds',
    'operator_for',
    'build_dyadic',
    'tietze_extend',
    'urysohn',
    'check_coarsely_separated',
    'check_slowly_oscillating',
    'nonnormal_witness',
]
