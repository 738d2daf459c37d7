"""
Tests for the pipeline controller, the experiment runner and the command line
"""

import json

import numpy as np
import pytest

import main
from logic_blocks.errors import ConfigurationError, NumericalError
from logic_blocks.motion_block import SimConfig
from orchestrator import ArtifactStore, ExperimentConfig, ExperimentRunner, Orchestrator, runtime_scaling
from orchestrator.artifacts import SMOOTHED_FILE

ARTIFACTS = [
    'tuples.csv', 'trajectory.csv', 'density.csv', 'smoothed.csv', 'counts.csv',
    'barcode.txt', 'map.pgm', 'betti_curve.csv', 'error_map.csv', 'report.txt', 'simulation.txt',
]


@pytest.fixture
def domain_file(tmp_path, tiny_domain_config):
    path = tmp_path / 'tiny.json'
    path.write_text(json.dumps(tiny_domain_config))
    return path


@pytest.fixture
def pipeline_run(tmp_path, tiny_domain_config, tiny_sim_config):
    out = tmp_path / 'run'
    report = Orchestrator(output_dir=str(out)).run_pipeline(tiny_domain_config, tiny_sim_config)
    return out, report


class TestPipeline:
    def test_writes_every_artifact(self, pipeline_run):
        out, report = pipeline_run
        for name in ARTIFACTS:
            assert (out / name).exists(), name
        assert not (out / 'timings.txt').exists()
        assert report.n_tuples == 5 * 20
        assert 0.0 <= report.mae <= 1.0

    def test_report_file_contents(self, pipeline_run):
        out, report = pipeline_run
        saved = ArtifactStore(str(out)).read_report()
        assert saved['n_tuples'] == '100'
        assert saved['success'] in ('true', 'false')
        assert float(saved['gamma_est']) == pytest.approx(report.gamma_est)

    def test_same_seed_gives_identical_artifacts(self, tmp_path, pipeline_run, tiny_domain_config, tiny_sim_config):
        out, _ = pipeline_run
        again = tmp_path / 'again'
        Orchestrator(output_dir=str(again)).run_pipeline(tiny_domain_config, tiny_sim_config)
        for name in ARTIFACTS:
            assert (out / name).read_bytes() == (again / name).read_bytes(), name

    def test_timings_are_optional(self, tmp_path, tiny_domain_config, tiny_sim_config):
        out = tmp_path / 'timed'
        report = Orchestrator(output_dir=str(out), write_timings=True).run_pipeline(
            tiny_domain_config, tiny_sim_config
        )
        assert (out / 'timings.txt').exists()
        assert set(report.stage_seconds) == {'domain', 'simulate', 'map', 'threshold', 'report'}

    def test_map_stage_reruns_from_saved_tuples(self, pipeline_run, tiny_domain_config):
        out, _ = pipeline_run
        orchestrator = Orchestrator(output_dir=str(out))
        saved = orchestrator.store.read_grid(SMOOTHED_FILE)
        mapping = orchestrator.build_map(orchestrator.load_domain(tiny_domain_config))
        np.testing.assert_allclose(mapping['smoothed'].p_free, saved, rtol=1e-8, atol=1e-12)

    def test_threshold_stage_reruns_from_saved_grid(self, pipeline_run):
        out, _ = pipeline_run
        topo = Orchestrator(output_dir=str(out)).threshold()
        assert topo['binary_map'].free.shape == (10, 10)

    def test_report_from_saved_artifacts(self, pipeline_run, tiny_domain_config):
        out, report = pipeline_run
        rebuilt = Orchestrator(output_dir=str(out)).report_from_saved(tiny_domain_config)
        assert rebuilt.mae == report.mae
        assert rebuilt.success == report.success
        assert rebuilt.gamma_est == pytest.approx(report.gamma_est)
        assert rebuilt.rejected_updates == report.rejected_updates

    def test_saved_report_keeps_rejected_update_count(self, pipeline_run, tiny_domain_config):
        out, _ = pipeline_run
        (out / 'simulation.txt').write_text('n_tuples=100\nrejected_updates=7\n')
        rebuilt = Orchestrator(output_dir=str(out)).report_from_saved(tiny_domain_config)
        assert rebuilt.rejected_updates == 7
        assert ArtifactStore(str(out)).read_report()['rejected_updates'] == '7'

    def test_workflow_status(self, pipeline_run):
        out, _ = pipeline_run
        assert all(Orchestrator(output_dir=str(out)).get_workflow_status().values())

    def test_missing_intermediate_artifact(self, tmp_path):
        with pytest.raises(ConfigurationError):
            Orchestrator(output_dir=str(tmp_path / 'empty')).threshold()

    def test_invalid_domain_stops_the_pipeline(self, tmp_path, tiny_domain_config, tiny_sim_config):
        tiny_domain_config['transmitters'] = tiny_domain_config['transmitters'][:1]
        with pytest.raises(ConfigurationError):
            Orchestrator(output_dir=str(tmp_path / 'bad')).run_pipeline(tiny_domain_config, tiny_sim_config)


class TestExperimentRunner:
    def test_derived_seeds(self):
        a = ExperimentRunner.derive_seed(7, 10, 0)
        assert a == ExperimentRunner.derive_seed(7, 10, 0)
        assert a != ExperimentRunner.derive_seed(7, 10, 1)
        assert a != ExperimentRunner.derive_seed(7, 20, 0)
        assert 0 <= a < 2 ** 64

    def test_single_trial_reproduces_direct_run(self, tmp_path, tiny_domain_config):
        config = ExperimentConfig(
            domain=tiny_domain_config, sim={'n_robots': 3, 'duration': 8.0},
            output_dir=str(tmp_path / 'batch'), seed=4,
        )
        (job,) = ExperimentRunner(config).jobs()
        assert job.seed == 4
        ExperimentRunner(config).run()
        direct = tmp_path / 'direct'
        Orchestrator(output_dir=str(direct)).run_pipeline(
            tiny_domain_config, SimConfig(n_robots=3, duration=8.0, seed=4)
        )
        assert (direct / 'report.txt').read_bytes() == (tmp_path / 'batch' / 'report.txt').read_bytes()

    def test_sweep_table(self, tmp_path, tiny_domain_config):
        config = ExperimentConfig(
            domain=tiny_domain_config, sim={'duration': 5.0}, trials=2,
            sweep_variable='N', sweep_values=(2, 3), output_dir=str(tmp_path), seed=9,
        )
        rows = ExperimentRunner(config).sweep()
        assert [r.value for r in rows] == [2, 3]
        assert all(r.completed == 2 for r in rows)
        assert len((tmp_path / 'sweep.csv').read_text().splitlines()) == 3
        assert len((tmp_path / 'trials.csv').read_text().splitlines()) == 5
        assert (tmp_path / 'N_3' / 'trial_001' / 'report.txt').exists()

    @pytest.mark.slow
    def test_worker_count_does_not_change_results(self, tmp_path, tiny_domain_config):
        def trials_table(jobs, name):
            config = ExperimentConfig(
                domain=tiny_domain_config, sim={'duration': 5.0}, trials=2,
                sweep_variable='n_robots', sweep_values=(2, 3),
                output_dir=str(tmp_path / name), seed=9, jobs=jobs,
            )
            ExperimentRunner(config).sweep()
            return (tmp_path / name / 'trials.csv').read_bytes()

        assert trials_table(1, 'serial') == trials_table(2, 'parallel')

    def test_noise_sweep_keeps_filter_noise(self, tiny_domain_config):
        config = ExperimentConfig(
            domain=tiny_domain_config, sim={'rssi_noise': 0.1},
            sweep_variable='signal_noise', sweep_values=(0.2, 0.4),
        )
        cfg = config.sim_config(seed=1, value=0.4)
        assert cfg.rssi_noise == 0.4
        assert cfg.assumed_rssi_noise == 0.1

    def test_unknown_sweep_variable(self, tiny_domain_config):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(domain=tiny_domain_config, sweep_variable='speed', sweep_values=(1,))

    def test_bare_domain_file_is_a_single_trial(self, domain_file):
        config = ExperimentConfig.load(str(domain_file))
        assert config.trials == 1
        assert config.sweep_variable is None
        assert config.domain['name'] == 'tiny'

    def test_experiment_file_resolves_domain_path(self, tmp_path, domain_file):
        experiment = tmp_path / 'experiment.json'
        experiment.write_text(json.dumps({
            'domain': 'tiny.json', 'trials': 3, 'sweep': {'variable': 'T', 'values': [5, 10]},
        }))
        config = ExperimentConfig.load(str(experiment))
        assert config.domain == str(domain_file.resolve())
        assert config.sweep_values == (5, 10)


class TestRuntimeScaling:
    def test_small_grids(self, tmp_path):
        report = runtime_scaling(sizes=(6, 12), seed=1)
        assert report.sizes == (6, 12)
        assert all(s > 0 for s in report.seconds)
        assert np.isfinite(report.exponent)
        lines = report.write(str(tmp_path)).read_text().splitlines()
        assert lines[0] == "size,cells,seconds"
        assert lines[2].startswith("12,144,")
        assert lines[-1].startswith("exponent,,")

    @pytest.mark.parametrize("sizes", [(10,), (10, 10), (0, 10)])
    def test_needs_two_distinct_sizes(self, sizes):
        with pytest.raises(ConfigurationError):
            runtime_scaling(sizes=sizes)


class TestCommandLine:
    @pytest.fixture(autouse=True)
    def in_tmp(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)

    @pytest.fixture
    def experiment_file(self, tmp_path, domain_file):
        path = tmp_path / 'small.json'
        path.write_text(json.dumps({'domain': domain_file.name, 'sim': {'n_robots': 3, 'duration': 5.0}}))
        return path

    def test_run(self, tmp_path, experiment_file):
        out = tmp_path / 'cli'
        assert main.main(['run', '--config', str(experiment_file), '--out', str(out), '--seed', '3']) == main.EXIT_OK
        assert (out / 'report.txt').exists()

    def test_stages_one_at_a_time(self, tmp_path, experiment_file):
        out = str(tmp_path / 'staged')
        common = ['--config', str(experiment_file), '--out', out]
        assert main.main(['simulate'] + common) == main.EXIT_OK
        assert main.main(['map'] + common) == main.EXIT_OK
        assert main.main(['threshold', '--out', out]) == main.EXIT_OK
        assert main.main(['report'] + common) == main.EXIT_OK
        assert (tmp_path / 'staged' / 'report.txt').exists()

    def test_sweep(self, tmp_path, domain_file):
        experiment = tmp_path / 'experiment.json'
        experiment.write_text(json.dumps({
            'domain': 'tiny.json', 'sim': {'duration': 5.0},
            'sweep': {'variable': 'N', 'values': [2, 3]},
        }))
        out = tmp_path / 'sweep'
        assert main.main(['sweep', '--config', str(experiment), '--out', str(out), '--trials', '1']) == main.EXIT_OK
        assert (out / 'sweep.csv').exists()

    def test_missing_config_file(self, tmp_path):
        assert main.main(['run', '--config', str(tmp_path / 'missing.json')]) == main.EXIT_CONFIG

    def test_config_is_required(self):
        assert main.main(['run']) == main.EXIT_CONFIG

    def test_invalid_geometry(self, tmp_path, tiny_domain_config):
        tiny_domain_config['transmitters'][0]['pos'] = [0.5, 0.5]
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps(tiny_domain_config))
        assert main.main(['run', '--config', str(path), '--out', str(tmp_path / 'x')]) == main.EXIT_CONFIG

    def test_threshold_without_map(self, tmp_path):
        assert main.main(['threshold', '--out', str(tmp_path / 'nothing')]) == main.EXIT_CONFIG

    def test_numerical_failure(self, tmp_path, experiment_file, monkeypatch):
        def fail(self, config, sim_config):
            raise NumericalError("covariance lost positive semidefiniteness")

        monkeypatch.setattr(Orchestrator, 'run_pipeline', fail)
        assert main.main(['run', '--config', str(experiment_file), '--out', str(tmp_path / 'n')]) == main.EXIT_NUMERICAL

    @pytest.mark.slow
    def test_scaling(self, tmp_path):
        out = tmp_path / 'scaling'
        assert main.main(['scaling', '--out', str(out)]) == main.EXIT_OK
        assert len((out / 'scaling.csv').read_text().splitlines()) == 5
