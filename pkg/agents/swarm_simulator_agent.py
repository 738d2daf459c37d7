"""
Swarm Simulator Agent
Deploys the swarm and returns the recorded data tuples
"""

from typing import Any, Dict
import logging

from agents.base_agent import BaseAgent
from logic_blocks.swarm_block import SwarmBlock

logger = logging.getLogger(__name__)


class SwarmSimulatorAgent(BaseAgent):
    """
    Input: {'domain': DomainSpec, 'sim_config': SimConfig}
    Output: {'run': SwarmRun, 'tuples': tuple of DataTuple}
    """

    REQUIRED_KEYS = ['domain', 'sim_config']

    def __init__(self):
        super().__init__(agent_id="swarm_simulator_001", agent_type="swarm_simulator")

    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        cfg = input_data['sim_config']
        logger.info(f"Deploying {cfg.n_robots} robots for {cfg.duration} s (seed {cfg.seed})")
        run = SwarmBlock.run_swarm(cfg, input_data['domain'])
        return {'run': run, 'tuples': run.tuples}
