"""
EKF Block - Per-robot extended Kalman filter on RSSI and encoder data
"""

from dataclasses import dataclass, replace
from typing import Sequence
import logging
import math

import numpy as np

from logic_blocks.errors import ConfigurationError, NumericalError, SingularityError
from logic_blocks.geometry_block import Transmitter
from logic_blocks.motion_block import MotionBlock

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EkfState:
    """Posterior mean [x, y, vx, vy] and covariance of one robot."""

    mean: np.ndarray
    covariance: np.ndarray
    time: float = 0.0
    rejected_updates: int = 0


@dataclass(frozen=True, eq=False)
class DataTuple:
    """Recorded position estimate: robot id, time, mean mu (2,) and covariance sigma (2, 2)."""

    robot_id: int
    time: float
    mu: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class ObservabilityReport:
    rank: int
    min_singular_value: float
    collinear: bool

    @property
    def observable(self) -> bool:
        return self.rank == 4


class RssiMeasurementModel:
    """h(x) = [S_1(X) .. S_l(X), V]."""

    def __init__(self, transmitters: Sequence[Transmitter]):
        self.transmitters = tuple(transmitters)

    @property
    def dimension(self) -> int:
        return len(self.transmitters) + 2

    def predict(self, mean: np.ndarray) -> np.ndarray:
        return np.concatenate([MotionBlock.signal_vector(self.transmitters, mean[:2]), mean[2:]])

    def jacobian(self, mean: np.ndarray) -> np.ndarray:
        return EkfBlock.full_jacobian(mean, self.transmitters)


class PositionMeasurementModel:
    """Linear model z = [X; V], used when direct position fixes replace RSSI."""

    dimension = 4

    def predict(self, mean: np.ndarray) -> np.ndarray:
        return np.array(mean, dtype=float)

    def jacobian(self, mean: np.ndarray) -> np.ndarray:
        return np.eye(4)


class EkfBlock:
    """Predict/update steps, Jacobians and observability checks."""

    INITIAL_VARIANCE = 1e-6
    PSD_TOLERANCE = 1e-9
    RANK_TOLERANCE = 1e-10
    COLLINEAR_ANGLE = 1e-8
    MAX_CONDITION = 1e12

    @staticmethod
    def initial_state(position: np.ndarray, velocity: np.ndarray, time: float = 0.0) -> EkfState:
        """Filter started at the true deployment state with a tight prior."""
        return EkfState(
            mean=np.concatenate([position, velocity]).astype(float),
            covariance=EkfBlock.INITIAL_VARIANCE * np.eye(4),
            time=time,
        )

    @staticmethod
    def transition_matrix(dt: float) -> np.ndarray:
        return MotionBlock.system_matrix(dt)

    @staticmethod
    def measurement_covariance(rssi_std: float, velocity_std: float, n_transmitters: int) -> np.ndarray:
        """R = diag(R_S^2 .. R_S^2, R_V^2, R_V^2)."""
        return np.diag([rssi_std ** 2] * n_transmitters + [velocity_std ** 2] * 2)

    @staticmethod
    def predict(state: EkfState, a: np.ndarray, q: np.ndarray, dt: float = 0.0) -> EkfState:
        """x <- A x, P <- A P A^T + Q."""
        mean = a @ state.mean
        covariance = EkfBlock._symmetrized(a @ state.covariance @ a.T + q)
        return replace(state, mean=mean, covariance=covariance, time=state.time + dt)

    @staticmethod
    def measurement_jacobian(x: np.ndarray, transmitters: Sequence[Transmitter]) -> np.ndarray:
        """
        S_X, the (l, 2) Jacobian of the RSSI vector with respect to position.

        Row i is -alpha_i K_i Pow_i (X - X_i) / ||X - X_i||^(alpha_i + 2).
        """
        rows = []
        for tx in transmitters:
            d = np.asarray(x[:2], dtype=float) - np.asarray(tx.position, dtype=float)
            r2 = float(d @ d)
            if r2 == 0.0:
                raise SingularityError(f"Jacobian undefined at transmitter position {tx.position}")
            rows.append(-tx.alpha * tx.strength * d * r2 ** (-(tx.alpha + 2.0) / 2.0))
        return np.array(rows).reshape(len(rows), 2)

    @staticmethod
    def full_jacobian(x: np.ndarray, transmitters: Sequence[Transmitter]) -> np.ndarray:
        """H = [[S_X, 0], [0, I]]."""
        l = len(transmitters)
        h = np.zeros((l + 2, 4))
        h[:l, :2] = EkfBlock.measurement_jacobian(x, transmitters)
        h[l:, 2:] = np.eye(2)
        return h

    @staticmethod
    def update(state: EkfState, z: np.ndarray, r: np.ndarray, model) -> EkfState:
        """
        Fold one measurement into the posterior.

        Args:
            state: predicted state
            z: measurement vector
            r: measurement noise covariance
            model: object with predict(mean) and jacobian(mean)

        Returns:
            Updated state; an ill-conditioned innovation leaves the state
            untouched and increments rejected_updates
        """
        h = model.jacobian(state.mean)
        p = state.covariance
        innovation = np.asarray(z, dtype=float) - model.predict(state.mean)
        s = h @ p @ h.T + r

        cond = np.linalg.cond(s) if np.all(np.isfinite(s)) else np.inf
        if not cond <= EkfBlock.MAX_CONDITION:
            logger.warning(f"Ill-conditioned innovation covariance at t={state.time:.3f}; update skipped")
            return replace(state, rejected_updates=state.rejected_updates + 1)
        try:
            gain = np.linalg.solve(s, h @ p).T
        except np.linalg.LinAlgError:
            logger.warning(f"Singular innovation covariance at t={state.time:.3f}; update skipped")
            return replace(state, rejected_updates=state.rejected_updates + 1)

        mean = state.mean + gain @ innovation
        covariance = EkfBlock._symmetrized((np.eye(4) - gain @ h) @ p)
        return replace(state, mean=mean, covariance=covariance)

    @staticmethod
    def _symmetrized(p: np.ndarray) -> np.ndarray:
        p = 0.5 * (p + p.T)
        smallest = float(np.linalg.eigvalsh(p)[0])
        if smallest < -EkfBlock.PSD_TOLERANCE:
            raise NumericalError(f"Covariance lost positive semidefiniteness (min eigenvalue {smallest:.3e})")
        return p

    @staticmethod
    def observability_report(
        x: np.ndarray, transmitters: Sequence[Transmitter], dt: float
    ) -> ObservabilityReport:
        """
        Rank test of O = [[S_X, 0], [0, I], [0, dt S_X]].

        Args:
            x: state (position in the first two entries)
            transmitters: at least two sources
            dt: step size, non-zero

        Returns:
            Numerical rank, smallest singular value and a collinearity flag
            for the first two transmitters
        """
        if dt == 0:
            raise ConfigurationError("Observability test needs a non-zero step size")
        if len(transmitters) < 2:
            raise ConfigurationError("Observability test needs at least two transmitters")
        sx = EkfBlock.measurement_jacobian(x, transmitters)
        l = len(transmitters)
        o = np.zeros((2 * l + 2, 4))
        o[:l, :2] = sx
        o[l:l + 2, 2:] = np.eye(2)
        o[l + 2:, 2:] = dt * sx
        singular_values = np.linalg.svd(o, compute_uv=False)
        rank = int(np.sum(singular_values > EkfBlock.RANK_TOLERANCE * max(singular_values[0], 1.0)))

        p = np.asarray(x[:2], dtype=float)
        u = p - np.asarray(transmitters[0].position, dtype=float)
        v = p - np.asarray(transmitters[1].position, dtype=float)
        angle = math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(u @ v))
        collinear = angle < EkfBlock.COLLINEAR_ANGLE or math.pi - angle < EkfBlock.COLLINEAR_ANGLE
        return ObservabilityReport(rank, float(singular_values[-1]), collinear)

    @staticmethod
    def record(state: EkfState, robot_id: int, time: float) -> DataTuple:
        return DataTuple(
            robot_id=robot_id,
            time=time,
            mu=state.mean[:2].copy(),
            sigma=state.covariance[:2, :2].copy(),
        )
