"""
Topology Threshold Agent
Computes the barcode of the smoothed grid and thresholds it into a binary map
"""

from typing import Any, Dict
import logging

from agents.base_agent import BaseAgent
from logic_blocks.persistence_block import PersistenceBlock

logger = logging.getLogger(__name__)


class TopologyThresholdAgent(BaseAgent):
    """
    Input: {'density': DensityGrid}
    Output: complex, barcode, threshold selection, binary map, Betti curve
    """

    REQUIRED_KEYS = ['density']

    def __init__(self):
        super().__init__(agent_id="topology_threshold_001", agent_type="topology_threshold")

    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        density = input_data['density']
        complex_ = PersistenceBlock.build_complex(density)
        barcode = PersistenceBlock.persistence(complex_)
        selection = PersistenceBlock.select_threshold(barcode)
        binary_map = PersistenceBlock.threshold_map(density, selection.map_gamma)

        b0, b1 = barcode.persistent_counts()
        logger.info(
            f"delta_cls={selection.delta_cls:.4f}, gamma_est={selection.gamma_est:.4f}, "
            f"persistent features: {b0} components, {b1} holes"
        )
        return {
            'complex': complex_,
            'barcode': barcode,
            'selection': selection,
            'binary_map': binary_map,
            'betti_curve': PersistenceBlock.betti_curve(complex_),
        }
