"""
Orchestrator - Runs the mapping pipeline stage by stage
"""

from typing import Any, Dict, Optional, Sequence, Union
import logging

from agents import (
    DensityMapperAgent,
    DomainLoaderAgent,
    MapEvaluatorAgent,
    SwarmSimulatorAgent,
    TopologyThresholdAgent,
)
from logic_blocks.density_block import DEFAULT_RHO
from logic_blocks.ekf_block import DataTuple
from logic_blocks.metrics_block import TrialReport
from logic_blocks.motion_block import SimConfig
from logic_blocks.persistence_block import BinaryMap, PersistenceBlock
from orchestrator.artifacts import (
    COUNTS_FILE,
    DENSITY_FILE,
    ERROR_MAP_FILE,
    SIMULATION_FILE,
    SMOOTHED_FILE,
    TIMINGS_FILE,
    ArtifactStore,
)

logger = logging.getLogger(__name__)

DomainConfig = Union[str, Dict[str, Any]]


class Orchestrator:
    """
    Pipeline controller.

    Workflow:
    1. Load and validate the domain
    2. Simulate the swarm and record data tuples
    3. Accumulate and smooth the density grid
    4. Compute persistence and threshold the map
    5. Evaluate against ground truth and write the report

    Every stage writes its artifacts, and stages 3-5 can be re-run from the
    artifacts of the previous stage.
    """

    def __init__(
        self,
        output_dir: str = "output",
        rho: float = DEFAULT_RHO,
        jobs: int = 1,
        write_timings: bool = False,
    ):
        self.store = ArtifactStore(output_dir)
        self.rho = rho
        self.jobs = jobs
        self.write_timings = write_timings

        self.domain_loader = DomainLoaderAgent()
        self.swarm_simulator = SwarmSimulatorAgent()
        self.density_mapper = DensityMapperAgent()
        self.topology_threshold = TopologyThresholdAgent()
        self.map_evaluator = MapEvaluatorAgent()

        self.stage_seconds: Dict[str, float] = {}
        logger.debug(f"Orchestrator writing to {self.store.output_dir}")

    def _require(self, result: Dict[str, Any], stage: str) -> Dict[str, Any]:
        self.stage_seconds[stage] = result['metadata']['execution_time']
        if not result['success']:
            logger.error(f"Stage '{stage}' failed: {result.get('error')}")
            raise result['exception']
        return result['data']

    def load_domain(self, config: DomainConfig, sensing_radius: float = 0.06) -> Dict[str, Any]:
        key = 'config' if isinstance(config, dict) else 'config_path'
        return self._require(
            self.domain_loader.run({key: config, 'sensing_radius': sensing_radius}), 'domain'
        )

    def simulate(self, domain_info: Dict[str, Any], sim_config: SimConfig) -> Dict[str, Any]:
        sim = self._require(
            self.swarm_simulator.run({'domain': domain_info['domain'], 'sim_config': sim_config}),
            'simulate',
        )
        self.store.write_tuples(sim['tuples'])
        self.store.write_trajectory(sim['run'].trajectory_rows())
        self.store.write_report(
            {'n_tuples': len(sim['tuples']), 'rejected_updates': sim['run'].rejected_updates},
            name=SIMULATION_FILE,
        )
        return sim

    def build_map(self, domain_info: Dict[str, Any], tuples: Optional[Sequence[DataTuple]] = None) -> Dict[str, Any]:
        if tuples is None:
            tuples = self.store.read_tuples()
        mapping = self._require(self.density_mapper.run({
            'tuples': tuples,
            'grid': domain_info['grid'],
            'truth': domain_info['truth'],
            'rho': self.rho,
            'jobs': self.jobs,
        }), 'map')
        self.store.write_grid(DENSITY_FILE, mapping['raw'].p_free)
        self.store.write_grid(SMOOTHED_FILE, mapping['smoothed'].p_free)
        self.store.write_grid(COUNTS_FILE, mapping['raw'].count)
        return mapping

    def threshold(self, density=None) -> Dict[str, Any]:
        if density is None:
            density = self.store.read_grid(SMOOTHED_FILE)
        topo = self._require(self.topology_threshold.run({'density': density}), 'threshold')
        self.store.write_barcode(topo['barcode'])
        self.store.write_pgm(topo['binary_map'].free)
        self.store.write_betti_curve(topo['betti_curve'])
        return topo

    def evaluate(
        self,
        domain_info: Dict[str, Any],
        topo: Dict[str, Any],
        mapping: Dict[str, Any],
        rejected_updates: int = 0,
    ) -> TrialReport:
        evaluation = self._require(self.map_evaluator.run({
            'binary_map': topo['binary_map'],
            'truth': domain_info['truth'],
            'domain': domain_info['domain'],
            'pao': domain_info['pao'],
            'selection': topo['selection'],
            'mapping': mapping,
            'rejected_updates': rejected_updates,
            'n_tuples': mapping.get('n_tuples', 0),
        }), 'report')
        report = evaluation['report']
        report.stage_seconds = dict(self.stage_seconds)
        self.store.write_grid(ERROR_MAP_FILE, evaluation['error_map'])
        self.store.write_report(report.to_dict())
        if self.write_timings:
            self.store.write_report(report.stage_seconds, name=TIMINGS_FILE)
        return report

    def run_pipeline(self, config: DomainConfig, sim_config: SimConfig) -> TrialReport:
        """
        Full run from domain file to report.

        Args:
            config: domain file path or parsed domain mapping
            sim_config: simulation parameters, seed included

        Returns:
            TrialReport; artifacts are written to the output directory
        """
        logger.info("Starting swarm mapping pipeline")
        domain_info = self.load_domain(config, sim_config.sensing_radius)
        logger.info(f"✓ Step 1: Domain '{domain_info['domain'].name}' loaded")

        sim = self.simulate(domain_info, sim_config)
        logger.info(f"✓ Step 2: Swarm simulated, {len(sim['tuples'])} tuples recorded")

        mapping = self.build_map(domain_info, sim['tuples'])
        mapping['n_tuples'] = len(sim['tuples'])
        logger.info("✓ Step 3: Density grid accumulated and smoothed")

        topo = self.threshold(mapping['smoothed'])
        logger.info(f"✓ Step 4: Map thresholded at gamma={topo['selection'].gamma_est:.4f}")

        report = self.evaluate(domain_info, topo, mapping, sim['run'].rejected_updates)
        logger.info(f"✓ Step 5: Report written (MAE={report.mae:.4f}, success={report.success})")
        return report

    def report_from_saved(self, config: DomainConfig, sensing_radius: float = 0.06) -> TrialReport:
        """Rebuild the report from saved tuples, simulation summary, barcode and map."""
        domain_info = self.load_domain(config, sensing_radius)
        tuples = self.store.read_tuples()
        mapping = self._require(self.density_mapper.run({
            'tuples': tuples,
            'grid': domain_info['grid'],
            'truth': domain_info['truth'],
            'rho': self.rho,
            'jobs': self.jobs,
        }), 'map')
        mapping['n_tuples'] = len(tuples)
        selection = PersistenceBlock.select_threshold(self.store.read_barcode())
        topo = {
            'selection': selection,
            'binary_map': BinaryMap(free=self.store.read_pgm(), gamma=selection.gamma_est),
        }
        rejected = int(self.store.read_report(SIMULATION_FILE)['rejected_updates'])
        return self.evaluate(domain_info, topo, mapping, rejected)

    def get_workflow_status(self) -> Dict[str, bool]:
        names = ['tuples.csv', DENSITY_FILE, SMOOTHED_FILE, 'barcode.txt', 'map.pgm', 'report.txt']
        return {name: self.store.path(name).exists() for name in names}

