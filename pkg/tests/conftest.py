"""
Test Fixtures for kaehler
==========================
Session-scoped rings and modules. Gröbner bases are computed once per run
and shared through the context cache.
"""

import os
import sys
import asyncio
import pytest

# Ensure project root is on path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

# Set test environment before imports
os.environ["ENVIRONMENT"] = "test"


@pytest.fixture(scope="session")
def event_loop():
    """Create a session-scoped event loop."""
    loop = asyncio.new_event_loop()
    yield loop
    loop.close()


@pytest.fixture(scope="session")
def sphere():
    """Q[x1,x2,x3]/(x1^2 + x2^2 + x3^2 - 1)."""
    from ellipsoid import build_ring
    return build_ring((2, 2, 2))


@pytest.fixture(scope="session")
def sphere_omega(sphere):
    from ellipsoid import build_kaehler
    return build_kaehler(sphere)


@pytest.fixture(scope="session")
def sphere_fields(sphere):
    """d12, d13, d23 on the sphere."""
    from ellipsoid import tangent_generators
    return tangent_generators(sphere)


@pytest.fixture(scope="session")
def ellipsoid_232():
    from ellipsoid import build_ring
    return build_ring((2, 3, 2))


@pytest.fixture(scope="session")
def sphere_p1(sphere):
    from jets import build_jet_ring
    return build_jet_ring(sphere, 1)


@pytest.fixture(scope="session")
def sphere_p2(sphere):
    from jets import build_jet_ring
    return build_jet_ring(sphere, 2)


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(0)


@pytest.fixture
def poly(sphere):
    """Parse text in the sphere ring, reduced."""
    return lambda text: sphere.reduce(sphere.parse(text))
