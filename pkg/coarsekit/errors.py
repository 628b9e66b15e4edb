"""Exception hierarchy shared by every coarsekit module."""

from typing import Any, Dict, Optional


class CoarsekitError(Exception):
    """Base class for all engine errors"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {'error': type(self).__name__, 'message': self.message, 'details': self.details}


class WindowMismatchError(CoarsekitError):
    """Subsets or families live on different windows"""


class CoverError(CoarsekitError):
    """A family does not cover the points an operation needs covered"""


class PreconditionError(CoarsekitError):
    """An operation was called outside its documented precondition"""


class NotSlowlyOscillatingError(PreconditionError):
    """A wedge candidate is not slowly oscillating for the ambient metric structure"""


class ConstructionError(CoarsekitError):
    """A construction step could not be completed or certified"""


class InputError(CoarsekitError):
    """Malformed or missing input files and invalid overrides"""
