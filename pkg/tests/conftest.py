from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np
import pytest

from evanescent._logging import configure_logging
from evanescent.layered import Incidence, MediumStack
from evanescent.wkb_phase import Grid1D, PotentialProfile

if TYPE_CHECKING:
    from collections.abc import Callable

configure_logging(stderr_level="CRITICAL")

GLASS, AIR = 1.5, 1.0
OMEGA = 2 * math.pi  # vacuum wavelength 1


@pytest.fixture
def ftir_incidence() -> Incidence:
    """Glass to air, 0.1 rad beyond the critical angle."""
    return Incidence(omega=OMEGA, theta0=math.asin(AIR / GLASS) + 0.1)


@pytest.fixture
def ftir_stack() -> MediumStack:
    return MediumStack.symmetric_gap(GLASS, AIR, 1.0)


def _rectangular_barrier(
    height: float = 1.0,
    width: float = 1.0,
    energy: float = 0.5,
    margin: float = 1.0,
    n_points: int = 3001,
) -> PotentialProfile:
    """Zero-energy form of a rectangular barrier on ``[0, width]``."""
    grid = Grid1D(x_min=-margin, x_max=width + margin, n_points=n_points)
    x = grid.points
    eps = 1e-9 * grid.spacing
    u = np.where((x >= -eps) & (x <= width + eps), height, 0.0)
    return PotentialProfile(grid, u - energy)


@pytest.fixture
def make_barrier() -> Callable[..., PotentialProfile]:
    return _rectangular_barrier


@pytest.fixture
def barrier() -> PotentialProfile:
    return _rectangular_barrier()
