"""
Density Mapper Agent
Accumulates data tuples into raw and smoothed density grids
"""

from typing import Any, Dict
import logging

from agents.base_agent import BaseAgent
from logic_blocks.density_block import DEFAULT_RHO, DensityBlock

logger = logging.getLogger(__name__)


class DensityMapperAgent(BaseAgent):
    """
    Input: {'tuples', 'grid', optional 'truth', 'rho', 'jobs'}
    Output: raw and smoothed DensityGrid, plus coverage and the
    completeness-bound check when a ground truth is given
    """

    REQUIRED_KEYS = ['tuples', 'grid']

    def __init__(self):
        super().__init__(agent_id="density_mapper_001", agent_type="density_mapper")

    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        tuples = input_data['tuples']
        grid = input_data['grid']
        rho = float(input_data.get('rho', DEFAULT_RHO))

        raw = DensityBlock.accumulate(tuples, grid, rho, jobs=int(input_data.get('jobs', 1)))
        smoothed = DensityBlock.smooth(raw)
        logger.info(f"Accumulated {len(tuples)} tuples into {int((raw.count > 0).sum())} cells")

        result = {'raw': raw, 'smoothed': smoothed}
        truth = input_data.get('truth')
        if truth is not None:
            coverage = DensityBlock.coverage_check(tuples, grid, truth)
            if not coverage.covered:
                logger.warning(f"Coverage incomplete: {len(coverage.missing)} free cells without data")
            result['coverage'] = coverage
            if tuples:
                bound_params = DensityBlock.bound_params(tuples, grid, raw)
                satisfied, min_bound = DensityBlock.completeness_check(raw, truth, bound_params)
                result.update(
                    sigma_max=bound_params.sigma_max,
                    bound_satisfied=satisfied,
                    gamma_bound_min=min_bound,
                )
        return result
