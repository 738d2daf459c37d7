"""
Swarm Block - Runs the whole swarm with one filter per robot
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple
import logging

import numpy as np

from logic_blocks.ekf_block import DataTuple, EkfBlock, RssiMeasurementModel
from logic_blocks.errors import ConfigurationError
from logic_blocks.geometry_block import DomainSpec, GeometryBlock
from logic_blocks.motion_block import MotionBlock, ProximityIndex, SimConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SwarmRun:
    """
    Output of one deployment.

    Attributes:
        times: (K + 1,) step times, starting at 0
        true_states: (K + 1, N, 4) true [x, y, vx, vy]
        measurements: (K, N, l + 2) sensor outputs for steps 1..K
        estimates: (K + 1, N, 4) filter means
        tuples: recorded DataTuples ordered by (robot, time)
        rejected_updates: skipped EKF updates over all robots
    """

    times: np.ndarray
    true_states: np.ndarray
    measurements: np.ndarray
    estimates: np.ndarray
    tuples: Tuple[DataTuple, ...]
    rejected_updates: int
    record_stride: int

    def trajectory_rows(self) -> List[Tuple[float, int, float, float, float, float]]:
        """(t, j, x_true, y_true, x_est, y_est) at every record tick."""
        rows = []
        for k in range(self.record_stride, len(self.times), self.record_stride):
            for j in range(self.true_states.shape[1]):
                rows.append((
                    float(self.times[k]), j,
                    float(self.true_states[k, j, 0]), float(self.true_states[k, j, 1]),
                    float(self.estimates[k, j, 0]), float(self.estimates[k, j, 1]),
                ))
        return rows


class SwarmBlock:
    """Couples motion, sensing and filtering for N robots."""

    @staticmethod
    def robot_rngs(seed: int, n_robots: int) -> List[np.random.Generator]:
        return [np.random.default_rng(seed ^ j) for j in range(n_robots)]

    @staticmethod
    def run_swarm(cfg: SimConfig, domain: DomainSpec) -> SwarmRun:
        """
        Simulate the deployment and record one DataTuple per robot every t_rec.

        Args:
            cfg: simulation parameters
            domain: world geometry; must pass validate_geometry

        Returns:
            SwarmRun with true states, measurements, estimates and tuples
        """
        errors = [
            v for v in GeometryBlock.validate_geometry(domain, cfg.sensing_radius)
            if v.severity == "error"
        ]
        if errors:
            raise ConfigurationError(
                "Invalid domain geometry: " + "; ".join(f"[{v.rule}] {v.message}" for v in errors)
            )

        n, steps, stride = cfg.n_robots, cfg.n_steps, cfg.record_stride
        transmitters = domain.transmitters
        a = EkfBlock.transition_matrix(cfg.dt)
        q = cfg.process_noise_matrix
        noise_factor = MotionBlock.noise_factor(q)
        r = EkfBlock.measurement_covariance(cfg.filter_rssi_noise, cfg.velocity_noise, len(transmitters))
        model = RssiMeasurementModel(transmitters)

        rngs = SwarmBlock.robot_rngs(cfg.seed, n)
        states = [MotionBlock.initial_state(j, cfg, domain, rngs[j]) for j in range(n)]
        filters = [EkfBlock.initial_state(s.position, s.velocity) for s in states]

        times = cfg.dt * np.arange(steps + 1)
        true_states = np.empty((steps + 1, n, 4))
        estimates = np.empty((steps + 1, n, 4))
        measurements = np.empty((steps, n, len(transmitters) + 2))
        true_states[0] = [s.vector for s in states]
        estimates[0] = [f.mean for f in filters]
        recorded: List[List[DataTuple]] = [[] for _ in range(n)]

        logger.info(f"Simulating {n} robots for {steps} steps of {cfg.dt} s")
        for k in range(1, steps + 1):
            t = float(times[k])
            proximity = ProximityIndex(true_states[k - 1, :, :2], cfg.sensing_radius)
            for j in range(n):
                states[j] = MotionBlock.step(states[j], cfg, domain, rngs[j], proximity, noise_factor)
                m = MotionBlock.measure(states[j], cfg, transmitters, rngs[j], t)
                f = EkfBlock.predict(filters[j], a, q, cfg.dt)
                filters[j] = EkfBlock.update(f, m.z, r, model)
                true_states[k, j] = states[j].vector
                estimates[k, j] = filters[j].mean
                measurements[k - 1, j] = m.z
                if k % stride == 0:
                    recorded[j].append(EkfBlock.record(filters[j], j, t))

        rejected = sum(f.rejected_updates for f in filters)
        if rejected:
            logger.warning(f"{rejected} EKF updates were skipped as ill-conditioned")
        tuples = tuple(d for per_robot in recorded for d in per_robot)
        logger.info(f"Recorded {len(tuples)} data tuples")
        return SwarmRun(times, true_states, measurements, estimates, tuples, rejected, stride)

    @staticmethod
    def containment_violations(run: SwarmRun, domain: DomainSpec) -> int:
        """Number of recorded true positions outside the bounds or inside an obstacle."""
        positions = run.true_states[:, :, :2].reshape(-1, 2)
        xmin, ymin, xmax, ymax = domain.bounds
        inside = (
            (positions[:, 0] >= xmin) & (positions[:, 0] <= xmax)
            & (positions[:, 1] >= ymin) & (positions[:, 1] <= ymax)
        )
        bad = int(np.sum(~inside))
        if np.any(inside):
            bad += int(np.sum(~GeometryBlock.are_free(domain, positions[inside])))
        return bad


def tuples_to_arrays(tuples: Sequence[DataTuple]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stack tuples into (ids, times, mus (n, 2), sigmas (n, 2, 2))."""
    if not tuples:
        return np.empty(0, int), np.empty(0), np.empty((0, 2)), np.empty((0, 2, 2))
    return (
        np.array([d.robot_id for d in tuples], dtype=int),
        np.array([d.time for d in tuples], dtype=float),
        np.array([d.mu for d in tuples], dtype=float),
        np.array([d.sigma for d in tuples], dtype=float),
    )
