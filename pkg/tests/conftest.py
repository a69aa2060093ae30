import os
import sys

import pytest

# Add project root to sys.path for import resolution
_PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from src.pipelines.resources.coefficients import explicit, geometric, signed_power


@pytest.fixture
def classical():
    """T: a = 1/2, b = 2."""
    return geometric("1/2", 2)


@pytest.fixture
def signal():
    """c_k = (-1)^k / 2^k."""
    return signed_power("alternating", 2)


@pytest.fixture
def zero():
    return explicit((), 0, 2)


@pytest.fixture
def steep():
    """a = 7/10, b = 2: ab > 1, infinite eta."""
    return geometric("7/10", 2)


@pytest.fixture
def van_der_waerden():
    return geometric("1/10", 10)


@pytest.fixture
def triangle():
    """f = phi exactly (single term)."""
    return explicit(("1",), 0, 2)


def small_sequences():
    return [
        geometric("1/2", 2),
        signed_power("alternating", 2),
        signed_power("seeded:7", 2),
        explicit(("1", "-1/3", "1/4"), "1/2", 2),
        geometric("1/3", 3),
    ]
