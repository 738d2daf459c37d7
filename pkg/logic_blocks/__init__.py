"""
Logic Blocks Package
Stateless computational blocks for swarm mapping
"""

from logic_blocks.geometry_block import GeometryBlock
from logic_blocks.motion_block import MotionBlock
from logic_blocks.ekf_block import EkfBlock
from logic_blocks.swarm_block import SwarmBlock
from logic_blocks.density_block import DensityBlock
from logic_blocks.persistence_block import PersistenceBlock
from logic_blocks.metrics_block import MetricsBlock

__all__ = [
    'GeometryBlock',
    'MotionBlock',
    'EkfBlock',
    'SwarmBlock',
    'DensityBlock',
    'PersistenceBlock',
    'MetricsBlock',
]
