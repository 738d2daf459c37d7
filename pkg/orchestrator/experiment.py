"""
Experiment Runner - Batch trials and parameter sweeps on joblib workers
"""

from dataclasses import dataclass, field
from hashlib import blake2b
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
import csv
import json
import logging
import math
import time

import numpy as np
from joblib import Parallel, delayed
from scipy import ndimage

from logic_blocks.density_block import DEFAULT_RHO
from logic_blocks.errors import ConfigurationError, InsufficientDataError
from logic_blocks.metrics_block import MetricsBlock, TrialReport
from logic_blocks.motion_block import SimConfig
from logic_blocks.persistence_block import PersistenceBlock
from orchestrator.orchestrator import Orchestrator

logger = logging.getLogger(__name__)

SWEEP_VARIABLES = {
    'n_robots': 'n_robots',
    'N': 'n_robots',
    'duration': 'duration',
    'T': 'duration',
    'signal_noise': 'rssi_noise',
}
SEED_MASK = (1 << 64) - 1
SCALING_SIZES = (25, 50, 100)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment: a domain, simulation overrides and an optional sweep.

    A file holding 'bounds' is a bare domain file and yields a single trial.
    """

    domain: Any
    sim: Dict[str, Any] = field(default_factory=dict)
    trials: int = 1
    sweep_variable: Optional[str] = None
    sweep_values: Tuple[Any, ...] = ()
    output_dir: str = "output"
    seed: int = 0
    rho: float = DEFAULT_RHO
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if self.sweep_variable is not None:
            if self.sweep_variable not in SWEEP_VARIABLES:
                raise ConfigurationError(
                    f"Unknown sweep variable {self.sweep_variable!r}; use one of {sorted(SWEEP_VARIABLES)}"
                )
            if not self.sweep_values:
                raise ConfigurationError("Sweep values must be non-empty")
        if not 0 <= self.seed <= SEED_MASK:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, 'r', encoding='utf-8') as f:
                raw = json.load(f)
        except FileNotFoundError as e:
            raise ConfigurationError(f"Config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in config file {path}: {e}") from e
        return cls.from_dict(raw, base_dir=Path(path).parent)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any], base_dir: Path = Path('.')) -> "ExperimentConfig":
        if 'bounds' in raw:
            return cls(domain=raw)
        if 'domain' not in raw:
            raise ConfigurationError("Experiment file needs a 'domain' entry")
        domain = raw['domain']
        if isinstance(domain, str):
            domain = str((base_dir / domain).resolve())
        sweep = raw.get('sweep') or {}
        return cls(
            domain=domain,
            sim=dict(raw.get('sim', {})),
            trials=int(raw.get('trials', 1)),
            sweep_variable=sweep.get('variable'),
            sweep_values=tuple(sweep.get('values', ())),
            output_dir=str(raw.get('output_dir', 'output')),
            seed=int(raw.get('seed', 0)),
            rho=float(raw.get('rho', DEFAULT_RHO)),
            jobs=int(raw.get('jobs', 1)),
        )

    def sim_config(self, seed: Optional[int] = None, value: Any = None) -> SimConfig:
        """SimConfig for one trial, with the sweep value applied."""
        overrides = dict(self.sim)
        if self.sweep_variable is not None and value is not None:
            target = SWEEP_VARIABLES[self.sweep_variable]
            if target == 'rssi_noise':
                base = SimConfig.from_dict(overrides)
                overrides.setdefault('assumed_rssi_noise', base.rssi_noise)
            overrides[target] = value
        overrides['seed'] = self.seed if seed is None else seed
        return SimConfig.from_dict(overrides)


@dataclass(frozen=True)
class TrialJob:
    value: Any
    trial: int
    seed: int
    config: ExperimentConfig
    output_dir: str


@dataclass
class TrialOutcome:
    value: Any
    trial: int
    seed: int
    report: Optional[TrialReport] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepRow:
    value: Any
    trials: int
    completed: int
    gamma_mean: float
    gamma_ci: float
    mae_mean: float
    mae_ci: float
    success_pct: float
    coverage_pct: float


def run_trial(job: TrialJob) -> TrialOutcome:
    """Run one trial; failures are returned, not raised."""
    try:
        orchestrator = Orchestrator(output_dir=job.output_dir, rho=job.config.rho)
        report = orchestrator.run_pipeline(job.config.domain, job.config.sim_config(job.seed, job.value))
        return TrialOutcome(job.value, job.trial, job.seed, report=report)
    except Exception as e:
        logger.warning(f"Trial value={job.value} #{job.trial} failed: {e}")
        return TrialOutcome(job.value, job.trial, job.seed, error=f"{type(e).__name__}: {e}")


class ExperimentRunner:
    """
    Runs every (sweep value, trial) pair and aggregates in (value, trial) order.

    Trial seeds are master XOR blake2b(value, trial), so a trial's result does
    not depend on which worker ran it.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.output_dir = Path(config.output_dir)

    @staticmethod
    def derive_seed(master: int, value: Any, trial: int) -> int:
        digest = blake2b(f"{value!r}:{trial}".encode('utf-8'), digest_size=8).digest()
        return (master ^ int.from_bytes(digest, 'big')) & SEED_MASK

    def jobs(self) -> List[TrialJob]:
        values = self.config.sweep_values if self.config.sweep_variable else (None,)
        single = self.config.sweep_variable is None and self.config.trials == 1
        jobs = []
        for value in values:
            for trial in range(self.config.trials):
                seed = self.config.seed if single else self.derive_seed(self.config.seed, value, trial)
                label = 'base' if value is None else f"{self.config.sweep_variable}_{value}"
                out = self.output_dir if single else self.output_dir / label / f"trial_{trial:03d}"
                jobs.append(TrialJob(value, trial, seed, self.config, str(out)))
        return jobs

    def run(self) -> List[TrialOutcome]:
        jobs = self.jobs()
        logger.info(f"Running {len(jobs)} trials on {self.config.jobs} worker(s)")
        if self.config.jobs > 1 and len(jobs) > 1:
            outcomes = Parallel(n_jobs=self.config.jobs)(delayed(run_trial)(job) for job in jobs)
        else:
            outcomes = [run_trial(job) for job in jobs]
        outcomes.sort(key=lambda o: (self._value_position(o.value), o.trial))
        return outcomes

    def _value_position(self, value: Any) -> int:
        if self.config.sweep_variable is None:
            return 0
        return self.config.sweep_values.index(value)

    def sweep(self) -> List[SweepRow]:
        """
        Run all trials and write sweep.csv and trials.csv.

        Returns:
            One aggregated row per sweep value (a single row without a sweep)
        """
        outcomes = self.run()
        rows = []
        values = self.config.sweep_values if self.config.sweep_variable else (None,)
        for value in values:
            group = [o for o in outcomes if o.value == value]
            rows.append(self.aggregate(value, group))
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self._write_sweep(rows)
        self._write_trials(outcomes)
        failed = sum(1 for o in outcomes if o.report is None)
        if failed:
            logger.warning(f"{failed} of {len(outcomes)} trials failed")
        return rows

    @staticmethod
    def aggregate(value: Any, group: List[TrialOutcome]) -> SweepRow:
        reports = [o.report for o in group if o.report is not None]
        gamma_mean, gamma_ci = ExperimentRunner._mean_ci([r.gamma_est for r in reports])
        mae_mean, mae_ci = ExperimentRunner._mean_ci([r.mae for r in reports])
        total = len(group)
        return SweepRow(
            value=value,
            trials=total,
            completed=len(reports),
            gamma_mean=gamma_mean,
            gamma_ci=gamma_ci,
            mae_mean=mae_mean,
            mae_ci=mae_ci,
            success_pct=100.0 * sum(r.success for r in reports) / total if total else math.nan,
            coverage_pct=100.0 * sum(r.coverage for r in reports) / total if total else math.nan,
        )

    @staticmethod
    def _mean_ci(values: List[float]) -> Tuple[float, float]:
        if not values:
            return math.nan, math.nan
        try:
            stats = MetricsBlock.batch_stats(values)
            return stats.mean, stats.half_width
        except InsufficientDataError:
            return float(values[0]), math.nan

    def _write_sweep(self, rows: List[SweepRow]) -> None:
        path = self.output_dir / 'sweep.csv'
        variable = self.config.sweep_variable or 'none'
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow([
                'variable', 'value', 'trials', 'completed', 'gamma_mean', 'gamma_ci',
                'mae_mean', 'mae_ci', 'success_pct', 'coverage_pct',
            ])
            for r in rows:
                writer.writerow([
                    variable, '' if r.value is None else r.value, r.trials, r.completed,
                    '%.9g' % r.gamma_mean, '%.9g' % r.gamma_ci, '%.9g' % r.mae_mean,
                    '%.9g' % r.mae_ci, '%.9g' % r.success_pct, '%.9g' % r.coverage_pct,
                ])
        logger.info(f"Saved sweep table to {path}")

    def _write_trials(self, outcomes: List[TrialOutcome]) -> None:
        path = self.output_dir / 'trials.csv'
        report_keys = list(TrialReport.__dataclass_fields__)
        report_keys.remove('stage_seconds')
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['value', 'trial', 'seed', 'status'] + report_keys)
            for o in outcomes:
                head = ['' if o.value is None else o.value, o.trial, o.seed]
                if o.report is None:
                    writer.writerow(head + [o.error] + [''] * len(report_keys))
                    continue
                data = o.report.to_dict()
                writer.writerow(head + ['ok'] + [
                    '%.9g' % data[k] if isinstance(data[k], float) else data[k] for k in report_keys
                ])


@dataclass(frozen=True)
class ScalingReport:
    """Persistence wall-clock time per grid size; seconds ~ cells ** exponent."""

    sizes: Tuple[int, ...]
    seconds: Tuple[float, ...]
    exponent: float

    def write(self, output_dir: str) -> Path:
        path = Path(output_dir) / 'scaling.csv'
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['size', 'cells', 'seconds'])
            for n, s in zip(self.sizes, self.seconds):
                writer.writerow([n, n * n, '%.6g' % s])
            writer.writerow(['exponent', '', '%.4g' % self.exponent])
        logger.info(f"Saved runtime scaling to {path}")
        return path


def runtime_scaling(
    sizes: Tuple[int, ...] = SCALING_SIZES, seed: int = 0, smoothing: float = 2.0
) -> ScalingReport:
    """
    Time the persistence computation on smooth random n x n density grids.

    The exponent is the least-squares slope of log(seconds) against
    log(cells). Wall-clock figures are informational and never compared
    against a threshold.

    Args:
        sizes: grid side lengths, at least two distinct values
        seed: RNG seed for the synthetic grids
        smoothing: Gaussian filter width in cells

    Returns:
        ScalingReport
    """
    if len(set(sizes)) < 2 or min(sizes) < 1:
        raise ConfigurationError("Runtime scaling needs at least two distinct positive grid sizes")
    rng = np.random.default_rng(seed)
    seconds = []
    for n in sizes:
        noise = ndimage.gaussian_filter(rng.random((n, n)), smoothing)
        span = noise.max() - noise.min()
        p = (noise - noise.min()) / span if span > 0 else np.zeros_like(noise)
        complex_ = PersistenceBlock.build_complex(p)
        start = time.perf_counter()
        PersistenceBlock.persistence(complex_)
        elapsed = max(time.perf_counter() - start, 1e-9)
        seconds.append(elapsed)
        logger.info(f"Persistence on {n}x{n} grid: {elapsed:.3f}s")
    cells = np.array(sizes, dtype=float) ** 2
    exponent = float(np.polyfit(np.log(cells), np.log(seconds), 1)[0])
    logger.info(f"Persistence runtime grows like cells^{exponent:.2f}")
    return ScalingReport(tuple(int(n) for n in sizes), tuple(seconds), exponent)
