import numpy as np
import pytest

from gwbound.offspring import (
    ExplicitFinite,
    GeometricShifted,
    GeometricTail,
    PowerTail,
    sierpinski_law,
)


@pytest.fixture(scope="session")
def law_quarter():
    """pmf {1/4, 1/4, 1/2}: a = 1.25, extinction root 1/2."""
    return ExplicitFinite([0.25, 0.25, 0.5])


@pytest.fixture(scope="session")
def law_binary():
    """pmf {0.2, 0, 0.8}: bounded support M = 2, a = 1.6."""
    return ExplicitFinite([0.2, 0.0, 0.8])


@pytest.fixture(scope="session")
def law_geom1():
    """Closed-form family, a=5, k=1; martingale limit is Exp(1)."""
    return GeometricShifted(5.0, 1)


@pytest.fixture(scope="session")
def law_sierpinski():
    return sierpinski_law()


@pytest.fixture(scope="session")
def law_power3():
    """Power tail with moment boundary 3."""
    return PowerTail(3.0, [0.0, 0.4])


@pytest.fixture(scope="session")
def law_power2():
    return PowerTail(2.0, [0.0, 0.4])


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
