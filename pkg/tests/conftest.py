import os
import sys

import pytest

# Add the repository root to the path so the tests can import pointspec
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pointspec.extensions import build_two_point, local_beta_for


@pytest.fixture
def split_extension():
    """alpha=2, beta=1, h=0.3: two simple bound states"""
    return build_two_point(2.0, 1.0, 0.3)


@pytest.fixture
def entangled_extension():
    """alpha=beta=1, h=0.5: degenerate ground state"""
    return build_two_point(1.0, 1.0, 0.5)


@pytest.fixture
def local_extension():
    """alpha=2, h=0.5 with beta chosen so that b12 = 0"""
    return build_two_point(2.0, local_beta_for(2.0, 0.5), 0.5)
