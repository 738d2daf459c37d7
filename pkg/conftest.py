"""
Shared pytest fixtures
"""

import numpy as np
import pytest

from logic_blocks.geometry_block import DomainSpec, GridSpec, Transmitter
from logic_blocks.motion_block import SimConfig

SQUARE_TRANSMITTERS = (
    Transmitter(position=(-0.5, -0.5), power=10.0),
    Transmitter(position=(2.5, -0.5), power=10.0),
)


@pytest.fixture
def square_domain():
    """Empty 2 m x 2 m domain with two transmitters below it."""
    return DomainSpec(bounds=(0.0, 0.0, 2.0, 2.0), transmitters=SQUARE_TRANSMITTERS, name="empty")


@pytest.fixture
def one_square_domain():
    """2 m x 2 m domain with one 0.6 m square obstacle (PAO 9%)."""
    obstacle = ((0.7, 0.7), (1.3, 0.7), (1.3, 1.3), (0.7, 1.3))
    return DomainSpec(
        bounds=(0.0, 0.0, 2.0, 2.0),
        obstacles=(obstacle,),
        transmitters=SQUARE_TRANSMITTERS,
        name="one_square",
    )


@pytest.fixture
def square_grid():
    return GridSpec.for_bounds((0.0, 0.0, 2.0, 2.0), 50, 50)


@pytest.fixture
def tiny_domain_config():
    """1 m x 1 m domain file contents with a coarse 10 x 10 grid."""
    return {
        "name": "tiny",
        "bounds": [0.0, 0.0, 1.0, 1.0],
        "obstacles": [],
        "transmitters": [
            {"pos": [-0.5, -0.5], "k": 1.0, "pow": 10.0, "alpha": 2.0},
            {"pos": [1.5, -0.5], "k": 1.0, "pow": 10.0, "alpha": 2.0},
        ],
        "grid": {"rows": 10, "cols": 10},
    }


@pytest.fixture
def tiny_sim_config():
    return SimConfig(n_robots=5, duration=20.0, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
