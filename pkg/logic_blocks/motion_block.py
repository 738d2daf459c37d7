"""
Motion Block - Robot random walk, collision avoidance and sensor outputs
"""

from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.spatial import cKDTree

from logic_blocks.errors import ConfigurationError, SingularityError
from logic_blocks.geometry_block import DomainSpec, GeometryBlock, Transmitter

logger = logging.getLogger(__name__)

START_EDGES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class SimConfig:
    """
    Swarm simulation parameters.

    Defaults follow the desk-scale experiments (N=50, T=300 s, v=0.2 m/s,
    p_th=0.2, sensing radius 0.06 m). Step size, record interval and the
    noise magnitudes are not published and are configurable.

    Attributes:
        n_robots: swarm size N
        duration: deployment time T (s)
        dt: integration step (s)
        speed: constant speed v (m/s)
        p_threshold: heading-resample probability per step
        sensing_radius: robot sensing radius (m)
        process_noise: 4x4 covariance Q of W; None means 0.1 * dt * I
        rssi_noise: std of the injected RSSI noise N_S
        velocity_noise: std of the injected encoder noise N_V, per axis
        record_interval: t_rec (s), a multiple of dt
        seed: master RNG seed; robot j draws from seed XOR j
        start_edge: boundary edge along which robots are deployed
        start_depth: depth of the deployment strip (m)
        assumed_rssi_noise: RSSI std assumed by the filter; None means rssi_noise
        max_resamples: heading resamples before a blocked robot holds still
    """

    n_robots: int = 50
    duration: float = 300.0
    dt: float = 0.1
    speed: float = 0.2
    p_threshold: float = 0.2
    sensing_radius: float = 0.06
    process_noise: Optional[Tuple[Tuple[float, ...], ...]] = None
    rssi_noise: float = 0.02
    velocity_noise: float = 0.01
    record_interval: float = 1.0
    seed: int = 0
    start_edge: str = "left"
    start_depth: float = 0.1
    assumed_rssi_noise: Optional[float] = None
    max_resamples: int = 100

    def __post_init__(self):
        if self.n_robots < 1:
            raise ConfigurationError("n_robots must be at least 1")
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if self.duration < 0:
            raise ConfigurationError("duration must be non-negative")
        if not 0.0 <= self.p_threshold <= 1.0:
            raise ConfigurationError(f"p_threshold must lie in [0, 1], got {self.p_threshold}")
        if self.record_interval <= 0:
            raise ConfigurationError("record_interval must be positive")
        ratio = self.record_interval / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigurationError(
                f"record_interval {self.record_interval} is not a multiple of dt {self.dt}"
            )
        if self.start_edge not in START_EDGES:
            raise ConfigurationError(f"start_edge must be one of {START_EDGES}")
        if self.rssi_noise < 0 or self.velocity_noise < 0:
            raise ConfigurationError("noise standard deviations must be non-negative")
        if self.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")
        q = self.process_noise_matrix
        if q.shape != (4, 4) or not np.allclose(q, q.T, atol=1e-12):
            raise ConfigurationError("process_noise must be a symmetric 4x4 matrix")
        if np.linalg.eigvalsh(q).min() < -1e-12:
            raise ConfigurationError("process_noise must be positive semidefinite")

    @property
    def process_noise_matrix(self) -> np.ndarray:
        if self.process_noise is None:
            return 0.1 * self.dt * np.eye(4)
        return np.asarray(self.process_noise, dtype=float)

    @property
    def filter_rssi_noise(self) -> float:
        return self.rssi_noise if self.assumed_rssi_noise is None else self.assumed_rssi_noise

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9))

    @property
    def record_stride(self) -> int:
        return int(round(self.record_interval / self.dt))

    @classmethod
    def from_dict(cls, overrides: Dict[str, Any]) -> "SimConfig":
        """Build a config from a (possibly partial) mapping of field overrides."""
        return cls().with_overrides(**overrides)

    def with_overrides(self, **overrides: Any) -> "SimConfig":
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigurationError(f"Unknown simulation parameters: {unknown}")
        if overrides.get("process_noise") is not None:
            overrides["process_noise"] = tuple(tuple(float(v) for v in row) for row in overrides["process_noise"])
        return replace(self, **overrides)


@dataclass(frozen=True, eq=False)
class RobotState:
    """True kinematic state of robot j."""

    position: np.ndarray
    velocity: np.ndarray
    heading: float
    robot_id: int

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])


@dataclass(frozen=True, eq=False)
class Measurement:
    """Sensor output z = [S_1 .. S_l, v_x, v_y] at a given time."""

    z: np.ndarray
    time: float


class ProximityIndex:
    """Read-only snapshot of robot positions for the robot-robot proximity test."""

    def __init__(self, positions: np.ndarray, radius: float):
        self.positions = np.array(positions, dtype=float)
        self.radius = radius
        self.tree = cKDTree(self.positions)

    def blocks(self, robot_id: int, old: np.ndarray, new: np.ndarray) -> bool:
        """True iff moving old -> new brings robot_id closer than radius to another robot."""
        for k in self.tree.query_ball_point(new, self.radius):
            if k == robot_id:
                continue
            other = self.positions[k]
            d_new = math.hypot(new[0] - other[0], new[1] - other[1])
            if d_new < self.radius and d_new < math.hypot(old[0] - other[0], old[1] - other[1]):
                return True
        return False


class MotionBlock:
    """Correlated random walk with reject-and-resample collision avoidance."""

    @staticmethod
    def signal_strength(tx: Transmitter, p: Sequence[float]) -> float:
        """S_i(p) = K_i * Pow_i * ||p - X_i||^-alpha."""
        dist = math.hypot(p[0] - tx.position[0], p[1] - tx.position[1])
        if dist == 0.0:
            raise SingularityError(f"Point {tuple(p)} coincides with transmitter at {tx.position}")
        return tx.strength * dist ** (-tx.alpha)

    @staticmethod
    def signal_vector(transmitters: Sequence[Transmitter], p: Sequence[float]) -> np.ndarray:
        return np.array([MotionBlock.signal_strength(tx, p) for tx in transmitters])

    @staticmethod
    def system_matrix(dt: float) -> np.ndarray:
        """A = [[I, dt I], [0, I]]."""
        a = np.eye(4)
        a[0, 2] = a[1, 3] = dt
        return a

    @staticmethod
    def noise_factor(q: np.ndarray) -> np.ndarray:
        """L with L @ L.T == Q for a PSD (possibly singular) Q."""
        w, v = np.linalg.eigh(q)
        return v * np.sqrt(np.clip(w, 0.0, None))

    @staticmethod
    def heading_velocity(heading: float, speed: float) -> np.ndarray:
        return np.array([speed * math.cos(heading), speed * math.sin(heading)])

    @staticmethod
    def initial_state(
        robot_id: int,
        cfg: SimConfig,
        domain: DomainSpec,
        rng: np.random.Generator,
        max_tries: int = 1000,
    ) -> RobotState:
        """Uniform draw in the deployment strip along cfg.start_edge."""
        xmin, ymin, xmax, ymax = domain.bounds
        depth = min(cfg.start_depth, domain.width, domain.height)
        strip = {
            "left": (xmin, ymin, xmin + depth, ymax),
            "right": (xmax - depth, ymin, xmax, ymax),
            "bottom": (xmin, ymin, xmax, ymin + depth),
            "top": (xmin, ymax - depth, xmax, ymax),
        }[cfg.start_edge]
        for _ in range(max_tries):
            p = np.array([rng.uniform(strip[0], strip[2]), rng.uniform(strip[1], strip[3])])
            if GeometryBlock.is_free(domain, p):
                heading = rng.uniform(-math.pi, math.pi)
                return RobotState(p, MotionBlock.heading_velocity(heading, cfg.speed), heading, robot_id)
        raise ConfigurationError(f"No free start position found along the {cfg.start_edge} edge")

    @staticmethod
    def step(
        state: RobotState,
        cfg: SimConfig,
        domain: DomainSpec,
        rng: np.random.Generator,
        proximity: Optional[ProximityIndex] = None,
        noise_factor: Optional[np.ndarray] = None,
    ) -> RobotState:
        """
        Advance one robot by dt.

        Args:
            state: current true state
            cfg: simulation parameters
            domain: world geometry
            rng: the robot's own generator
            proximity: snapshot of the other robots, or None to ignore them
            noise_factor: precomputed square root of Q

        Returns:
            New state; a blocked robot keeps its position after max_resamples
        """
        if noise_factor is None:
            noise_factor = MotionBlock.noise_factor(cfg.process_noise_matrix)
        heading = state.heading
        velocity = state.velocity
        if rng.random() <= cfg.p_threshold:
            heading = rng.uniform(-math.pi, math.pi)
            velocity = MotionBlock.heading_velocity(heading, cfg.speed)

        for attempt in range(cfg.max_resamples + 1):
            w = noise_factor @ rng.standard_normal(4)
            position = state.position + cfg.dt * velocity + w[:2]
            if MotionBlock._admissible(state, position, domain, proximity):
                return RobotState(position, velocity + w[2:], heading, state.robot_id)
            heading = rng.uniform(-math.pi, math.pi)
            velocity = MotionBlock.heading_velocity(heading, cfg.speed)

        logger.debug(f"Robot {state.robot_id} blocked for a full step; holding position")
        return RobotState(state.position.copy(), velocity, heading, state.robot_id)

    @staticmethod
    def _admissible(
        state: RobotState,
        position: np.ndarray,
        domain: DomainSpec,
        proximity: Optional[ProximityIndex],
    ) -> bool:
        if not domain.contains(position):
            return False
        if not GeometryBlock.is_free(domain, position):
            return False
        if GeometryBlock.segment_crosses_obstacles(domain, state.position, position):
            return False
        if proximity is not None and proximity.blocks(state.robot_id, state.position, position):
            return False
        return True

    @staticmethod
    def measure(
        state: RobotState,
        cfg: SimConfig,
        transmitters: Sequence[Transmitter],
        rng: np.random.Generator,
        time: float = 0.0,
    ) -> Measurement:
        """z = [S(X) + N_S; V + N_V]."""
        signals = MotionBlock.signal_vector(transmitters, state.position)
        n_s = cfg.rssi_noise * rng.standard_normal(len(transmitters))
        n_v = cfg.velocity_noise * rng.standard_normal(2)
        return Measurement(z=np.concatenate([signals + n_s, state.velocity + n_v]), time=time)
