"""
Main Entry Point for the Swarm Metric Mapping System

Usage:
    python main.py run --config domains/two_obstacles.json --seed 7 --out output
    python main.py simulate --config domains/empty.json --out output
    python main.py map --config domains/empty.json --out output
    python main.py threshold --out output
    python main.py report --config domains/empty.json --out output
    python main.py sweep --config domains/experiments/n_sweep.json --jobs 4
    python main.py scaling --out output
"""

import argparse
import logging
import sys
from dataclasses import replace

from logic_blocks.errors import (
    ConfigurationError,
    DegenerateInputError,
    NumericalError,
    SingularityError,
    UndefinedBoundError,
)
from orchestrator import ExperimentConfig, ExperimentRunner, Orchestrator, runtime_scaling

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (NumericalError, SingularityError, UndefinedBoundError, DegenerateInputError)


def setup_logging(verbose: bool = False):
    """Configure logging for the application."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(),
            logging.FileHandler('swarm_mapping.log')
        ]
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Swarm metric mapping: simulate, map, threshold and evaluate'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='Domain or experiment JSON file')
    common.add_argument('--seed', type=int, default=None, help='Master RNG seed (unsigned 64-bit)')
    common.add_argument('--out', type=str, default=None, help='Output directory')
    common.add_argument('--trials', type=int, default=None, help='Trials per sweep value')
    common.add_argument('--jobs', type=int, default=None, help='Worker processes')
    common.add_argument('--timings', action='store_true', help='Also write timings.txt')
    common.add_argument('-v', '--verbose', action='store_true', help='Debug logging')

    for name, help_text in [
        ('simulate', 'Run the swarm and save data tuples'),
        ('map', 'Accumulate and smooth saved tuples'),
        ('threshold', 'Compute the barcode and the binary map from the smoothed grid'),
        ('report', 'Evaluate the saved map against ground truth'),
        ('run', 'All stages'),
        ('sweep', 'Batch trials over a sweep variable'),
        ('scaling', 'Time persistence on 25x25, 50x50 and 100x100 grids'),
    ]:
        subparsers.add_parser(name, parents=[common], help=help_text)
    return parser


def load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    if not args.config:
        raise ConfigurationError(f"'{args.command}' needs --config")
    config = ExperimentConfig.load(args.config)
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.out is not None:
        overrides['output_dir'] = args.out
    if args.trials is not None:
        overrides['trials'] = args.trials
    if args.jobs is not None:
        overrides['jobs'] = args.jobs
    return replace(config, **overrides)


def dispatch(args: argparse.Namespace) -> int:
    logger = logging.getLogger(__name__)

    if args.command == 'threshold':
        orchestrator = Orchestrator(output_dir=args.out or 'output')
        topo = orchestrator.threshold()
        logger.info(f"gamma_est={topo['selection'].gamma_est:.6f}")
        return EXIT_OK

    if args.command == 'scaling':
        report = runtime_scaling(seed=args.seed or 0)
        report.write(args.out or 'output')
        logger.info(f"Persistence runtime exponent: {report.exponent:.2f}")
        return EXIT_OK

    experiment = load_experiment(args)
    if args.command == 'sweep':
        rows = ExperimentRunner(experiment).sweep()
        for row in rows:
            logger.info(
                f"  • {experiment.sweep_variable or 'batch'}={row.value}: "
                f"MAE={row.mae_mean:.4f}±{row.mae_ci:.4f}, success={row.success_pct:.0f}%"
            )
        return EXIT_OK

    orchestrator = Orchestrator(
        output_dir=experiment.output_dir,
        rho=experiment.rho,
        jobs=experiment.jobs,
        write_timings=args.timings,
    )
    sim_config = experiment.sim_config()
    if args.command == 'run':
        report = orchestrator.run_pipeline(experiment.domain, sim_config)
        logger.info(f"MAE={report.mae:.4f}, gamma_est={report.gamma_est:.4f}, success={report.success}")
        return EXIT_OK

    domain_info = orchestrator.load_domain(experiment.domain, sim_config.sensing_radius)
    if args.command == 'simulate':
        orchestrator.simulate(domain_info, sim_config)
    elif args.command == 'map':
        orchestrator.build_map(domain_info)
    elif args.command == 'report':
        orchestrator.report_from_saved(experiment.domain, sim_config.sensing_radius)
    return EXIT_OK


def main(argv=None) -> int:
    """Main execution function."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    logger = logging.getLogger(__name__)

    logger.info("=" * 60)
    logger.info(f"Swarm Metric Mapping - {args.command}")
    logger.info("=" * 60)

    try:
        return dispatch(args)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as e:
        logger.error(f"Numerical error: {e}")
        return EXIT_NUMERICAL
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
