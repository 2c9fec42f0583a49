from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from mirrorfield.hamiltonians import SystemParams
from mirrorfield.operators import TensorLayout

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def dispersive():
    return SystemParams(nu=0.1, lam=1.0, chi=0.005)


@pytest.fixture
def small_layout():
    return TensorLayout(6, 8)


@pytest.fixture
def headline_layout():
    return TensorLayout(16, 32)
