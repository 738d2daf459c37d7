"""
Map Evaluator Agent
Compares the thresholded map against ground truth and assembles the trial report
"""

from typing import Any, Dict
import logging
import math

import numpy as np

from agents.base_agent import BaseAgent
from logic_blocks.metrics_block import MetricsBlock, TrialReport
from logic_blocks.persistence_block import PersistenceBlock

logger = logging.getLogger(__name__)


class MapEvaluatorAgent(BaseAgent):
    """
    Input: {
        'binary_map': BinaryMap,
        'truth': GroundTruthMap,
        'domain': DomainSpec,
        'pao': float,
        'selection': ThresholdSelection,
        'mapping': DensityMapperAgent output (optional fields used when present),
        'rejected_updates': int, 'n_tuples': int
    }
    Output: {'report': TrialReport, 'error_map': (rows, cols) int array}
    """

    REQUIRED_KEYS = ['binary_map', 'truth', 'domain', 'selection']

    def __init__(self):
        super().__init__(agent_id="map_evaluator_001", agent_type="map_evaluator")

    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        estimate = input_data['binary_map'].free
        truth_free = input_data['truth'].free
        mapping = input_data.get('mapping') or {}
        obstacle_count = len(input_data['domain'].obstacles)

        betti = PersistenceBlock.map_betti(estimate)
        truth_betti = PersistenceBlock.map_betti(truth_free)
        coverage = mapping.get('coverage')
        selection = input_data['selection']

        report = TrialReport(
            gamma_est=selection.gamma_est,
            delta_cls=selection.delta_cls,
            mae=MetricsBlock.mae(estimate, truth_free),
            pao=float(input_data.get('pao', 0.0)),
            betti0=betti[0],
            betti1=betti[1],
            truth_betti0=truth_betti[0],
            truth_betti1=truth_betti[1],
            obstacle_count=obstacle_count,
            success=MetricsBlock.success(betti, obstacle_count),
            coverage=bool(coverage.covered) if coverage is not None else False,
            coverage_missing=len(coverage.missing) if coverage is not None else -1,
            sigma_max=float(mapping.get('sigma_max', math.nan)),
            bound_satisfied=float(mapping.get('bound_satisfied', math.nan)),
            gamma_bound_min=float(mapping.get('gamma_bound_min', math.nan)),
            rejected_updates=int(input_data.get('rejected_updates', 0)),
            n_tuples=int(input_data.get('n_tuples', 0)),
        )
        logger.info(
            f"MAE={report.mae:.4f}, betti=({report.betti0}, {report.betti1}), "
            f"obstacles={obstacle_count}, success={report.success}"
        )
        return {
            'report': report,
            'error_map': (estimate != truth_free).astype(np.int64),
        }
