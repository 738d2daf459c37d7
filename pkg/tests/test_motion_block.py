"""
Tests for robot motion, proximity blocking and sensor outputs
"""

import math

import numpy as np
import pytest

from logic_blocks.errors import ConfigurationError, SingularityError
from logic_blocks.geometry_block import Transmitter
from logic_blocks.motion_block import MotionBlock, ProximityIndex, RobotState, SimConfig

NO_NOISE = tuple(tuple(0.0 for _ in range(4)) for _ in range(4))


def robot(x, y, heading=0.0, speed=0.2, robot_id=0):
    return RobotState(
        position=np.array([x, y]),
        velocity=MotionBlock.heading_velocity(heading, speed),
        heading=heading,
        robot_id=robot_id,
    )


class TestSignalStrength:
    def test_unit_distance(self):
        assert MotionBlock.signal_strength(Transmitter((0.0, 0.0)), (1.0, 0.0)) == pytest.approx(1.0)

    def test_inverse_square(self):
        assert MotionBlock.signal_strength(Transmitter((0.0, 0.0)), (0.0, 2.0)) == pytest.approx(0.25)

    def test_weak_attenuation(self):
        tx = Transmitter((0.0, 0.0), alpha=0.1)
        assert MotionBlock.signal_strength(tx, (10.0, 0.0)) == pytest.approx(10 ** -0.1)

    def test_gain_and_power_scale_the_signal(self):
        tx = Transmitter((0.0, 0.0), gain=2.0, power=3.0)
        assert MotionBlock.signal_strength(tx, (1.0, 0.0)) == pytest.approx(6.0)

    def test_singularity(self):
        with pytest.raises(SingularityError):
            MotionBlock.signal_strength(Transmitter((1.0, 1.0)), (1.0, 1.0))


class TestSimConfig:
    def test_defaults(self):
        cfg = SimConfig()
        assert cfg.n_robots == 50
        assert cfg.duration == 300.0
        assert cfg.n_steps == 3000
        assert cfg.record_stride == 10
        np.testing.assert_allclose(cfg.process_noise_matrix, 0.01 * np.eye(4))

    @pytest.mark.parametrize("overrides", [
        {"p_threshold": 1.5},
        {"record_interval": 0.25},
        {"dt": 0.0},
        {"start_edge": "diagonal"},
        {"process_noise": [[-1.0, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigurationError):
            SimConfig.from_dict(overrides)

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError):
            SimConfig.from_dict({"robots": 10})

    def test_filter_noise_defaults_to_injected_noise(self):
        assert SimConfig(rssi_noise=0.05).filter_rssi_noise == 0.05
        assert SimConfig(rssi_noise=0.05, assumed_rssi_noise=0.02).filter_rssi_noise == 0.02


class TestStep:
    def test_noise_free_straight_line(self, square_domain):
        cfg = SimConfig(p_threshold=0.0, process_noise=NO_NOISE)
        state = robot(1.0, 1.0, heading=0.3)
        moved = MotionBlock.step(state, cfg, square_domain, np.random.default_rng(0))
        np.testing.assert_array_equal(moved.position, state.position + cfg.dt * state.velocity)
        assert moved.heading == state.heading

    def test_resample_keeps_speed(self, square_domain):
        cfg = SimConfig(p_threshold=1.0, process_noise=NO_NOISE)
        state = robot(1.0, 1.0)
        rng = np.random.default_rng(3)
        for _ in range(20):
            state = MotionBlock.step(state, cfg, square_domain, rng)
            assert math.hypot(*state.velocity) == pytest.approx(cfg.speed)

    def test_wall_forces_a_new_heading(self, square_domain):
        cfg = SimConfig(p_threshold=0.0, process_noise=NO_NOISE)
        state = robot(1.99, 1.0, heading=0.0)
        moved = MotionBlock.step(state, cfg, square_domain, np.random.default_rng(1))
        assert square_domain.contains(moved.position)
        assert moved.heading != 0.0

    def test_blocked_robot_holds_position(self, square_domain):
        cfg = SimConfig(p_threshold=0.0, process_noise=NO_NOISE, max_resamples=0)
        state = robot(1.99, 1.0, heading=0.0)
        moved = MotionBlock.step(state, cfg, square_domain, np.random.default_rng(1))
        np.testing.assert_array_equal(moved.position, state.position)

    def test_never_enters_obstacle(self, one_square_domain):
        cfg = SimConfig(speed=0.5)
        rng = np.random.default_rng(9)
        state = robot(0.6, 1.0, heading=0.0)
        for _ in range(500):
            state = MotionBlock.step(state, cfg, one_square_domain, rng)
            assert one_square_domain.contains(state.position)
            assert not (0.7 <= state.position[0] <= 1.3 and 0.7 <= state.position[1] <= 1.3)

    def test_same_seed_same_path(self, square_domain):
        cfg = SimConfig()

        def walk(seed):
            rng = np.random.default_rng(seed)
            state = robot(1.0, 1.0)
            path = []
            for _ in range(50):
                state = MotionBlock.step(state, cfg, square_domain, rng)
                path.append(state.position)
            return np.array(path)

        np.testing.assert_array_equal(walk(4), walk(4))


class TestProximity:
    def test_approach_is_blocked(self):
        index = ProximityIndex(np.array([[1.0, 1.0], [1.05, 1.0]]), radius=0.06)
        assert index.blocks(0, np.array([1.0, 1.0]), np.array([1.01, 1.0]))

    def test_moving_away_is_allowed(self):
        index = ProximityIndex(np.array([[1.0, 1.0], [1.05, 1.0]]), radius=0.06)
        assert not index.blocks(0, np.array([1.0, 1.0]), np.array([0.99, 1.0]))

    def test_robot_ignores_itself(self):
        index = ProximityIndex(np.array([[1.0, 1.0]]), radius=0.06)
        assert not index.blocks(0, np.array([1.0, 1.0]), np.array([1.01, 1.0]))


class TestMeasure:
    def test_noise_free_output(self, square_domain):
        cfg = SimConfig(rssi_noise=0.0, velocity_noise=0.0)
        state = robot(1.0, 0.5, heading=0.7)
        z = MotionBlock.measure(state, cfg, square_domain.transmitters, np.random.default_rng(0)).z
        expected = np.concatenate([
            MotionBlock.signal_vector(square_domain.transmitters, state.position), state.velocity
        ])
        np.testing.assert_array_equal(z, expected)

    def test_reproducible(self, square_domain):
        cfg = SimConfig()
        state = robot(1.0, 0.5)
        a = MotionBlock.measure(state, cfg, square_domain.transmitters, np.random.default_rng(5)).z
        b = MotionBlock.measure(state, cfg, square_domain.transmitters, np.random.default_rng(5)).z
        np.testing.assert_array_equal(a, b)

    def test_sample_mean_is_unbiased(self, square_domain):
        cfg = SimConfig(rssi_noise=0.02, velocity_noise=0.01)
        state = robot(1.0, 0.5, heading=1.1)
        rng = np.random.default_rng(21)
        n = 100_000
        samples = np.array([
            MotionBlock.measure(state, cfg, square_domain.transmitters, rng).z for _ in range(n)
        ])
        expected = np.concatenate([
            MotionBlock.signal_vector(square_domain.transmitters, state.position), state.velocity
        ])
        std = np.array([0.02, 0.02, 0.01, 0.01])
        assert np.all(np.abs(samples.mean(axis=0) - expected) <= 4 * std / math.sqrt(n))
