"""
Agents Package - One agent per pipeline stage
"""

from agents.base_agent import BaseAgent
from agents.domain_loader_agent import DomainLoaderAgent
from agents.swarm_simulator_agent import SwarmSimulatorAgent
from agents.density_mapper_agent import DensityMapperAgent
from agents.topology_threshold_agent import TopologyThresholdAgent
from agents.map_evaluator_agent import MapEvaluatorAgent

__all__ = [
    'BaseAgent',
    'DomainLoaderAgent',
    'SwarmSimulatorAgent',
    'DensityMapperAgent',
    'TopologyThresholdAgent',
    'MapEvaluatorAgent',
]
