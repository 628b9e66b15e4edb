import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from coarsekit import spaces  # noqa: E402
from coarsekit.core_sets import mask_of  # noqa: E402
from coarsekit.models import Family  # noqa: E402

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'data')


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def small_line():
    """Integer points 0..9, bounded radius 3"""
    return spaces.line_presentation(0, 9, cutoff=3, ladder=[1.0])


@pytest.fixture
def z_line():
    """Integer points 0..9 with the whole window bounded"""
    return spaces.line_presentation(0, 9, cutoff=9, ladder=[1.0])


@pytest.fixture
def two_block_line():
    return spaces.line_presentation(0, 200, cutoff=160, ladder=[1.0, 2.0, 4.0])


@pytest.fixture
def sierpinski_like():
    """Three points a, b, c where b and c cannot be separated by opens"""
    return spaces.finite_presentation(3, [[], [0], [0, 1], [0, 2], [0, 1, 2]], names=['a', 'b', 'c'])


@pytest.fixture
def wedge():
    return spaces.wedge_presentation(y_max=200, cutoff=40, ladder=[1.0, 2.0], locality=64)


@pytest.fixture
def blocks():
    """Blocks {0}, {1,2}, {3,4,5}, {6..9}, {10,11} of a 12 point window"""
    return [mask_of([0]), mask_of([1, 2]), mask_of([3, 4, 5]), mask_of(range(6, 10)), mask_of([10, 11])]


def family(size, *members):
    return Family(members=[mask_of(m) for m in members], size=size)
