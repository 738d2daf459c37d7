"""
Orchestrator Package
Pipeline controller, artifact files and experiment runner
"""

from orchestrator.orchestrator import Orchestrator
from orchestrator.artifacts import ArtifactStore
from orchestrator.experiment import ExperimentConfig, ExperimentRunner, runtime_scaling

__all__ = ['Orchestrator', 'ArtifactStore', 'ExperimentConfig', 'ExperimentRunner', 'runtime_scaling']
