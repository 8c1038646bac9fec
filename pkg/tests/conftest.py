import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fiberqed import EmitterSpec, SolverSettings, canonical_two_fiber
from fiberqed.config import Fiber, FiberArray

WAVELENGTH = 780.0
K0 = 2 * np.pi / WAVELENGTH


@pytest.fixture(scope="session")
def fast_settings():
    """Fixed truncation adequate for a <= 200 nm geometries at test tolerances."""
    return SolverSettings(m_max=12, quad_rel_tol=1e-7)


@pytest.fixture(scope="session")
def two_fiber_180_300():
    return canonical_two_fiber(180.0, 300.0)

@pytest.fixture(scope="session")
def single_fiber_200():
    return FiberArray(fibers=(Fiber(radius_nm=200.0, center_nm=(0.0, 0.0)),))


@pytest.fixture(scope="session")
def center_emitter():
    return EmitterSpec(rho_a_nm=(0.0, 0.0))
