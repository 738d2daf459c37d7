"""
Artifact Store - Reads and writes every pipeline artifact
"""

from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple
import csv
import logging
import math

import numpy as np

from logic_blocks.ekf_block import DataTuple
from logic_blocks.errors import ConfigurationError
from logic_blocks.persistence_block import Barcode, Interval

logger = logging.getLogger(__name__)

GRID_FORMAT = '%.9g'
TUPLE_HEADER = ['j', 't', 'mu_x', 'mu_y', 's_xx', 's_xy', 's_yy']
TRAJECTORY_HEADER = ['t', 'j', 'x_true', 'y_true', 'x_est', 'y_est']

TUPLES_FILE = 'tuples.csv'
TRAJECTORY_FILE = 'trajectory.csv'
DENSITY_FILE = 'density.csv'
SMOOTHED_FILE = 'smoothed.csv'
COUNTS_FILE = 'counts.csv'
BARCODE_FILE = 'barcode.txt'
MAP_FILE = 'map.pgm'
BETTI_FILE = 'betti_curve.csv'
ERROR_MAP_FILE = 'error_map.csv'
REPORT_FILE = 'report.txt'
TIMINGS_FILE = 'timings.txt'
SIMULATION_FILE = 'simulation.txt'


def _fmt(value: float) -> str:
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return GRID_FORMAT % value


def _fmt_exact(value: float) -> str:
    return repr(float(value))


class ArtifactStore:
    """
    Flat directory of pipeline artifacts.

    Grids are row-major CSV with one line per grid row; maps are plain PGM
    (P2) with the top image line holding the highest grid row.
    """

    def __init__(self, output_dir: str = "output"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def _require(self, name: str) -> Path:
        path = self.path(name)
        if not path.exists():
            raise ConfigurationError(f"Missing intermediate artifact {path}; run the earlier stage first")
        return path

    def write_tuples(self, tuples: Sequence[DataTuple]) -> Path:
        path = self.path(TUPLES_FILE)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(TUPLE_HEADER)
            for d in tuples:
                writer.writerow([
                    d.robot_id, _fmt_exact(d.time), _fmt_exact(d.mu[0]), _fmt_exact(d.mu[1]),
                    _fmt_exact(d.sigma[0, 0]), _fmt_exact(d.sigma[0, 1]), _fmt_exact(d.sigma[1, 1]),
                ])
        logger.info(f"Saved {len(tuples)} data tuples to {path}")
        return path

    def read_tuples(self) -> List[DataTuple]:
        tuples = []
        with open(self._require(TUPLES_FILE), 'r', encoding='utf-8') as f:
            for row in csv.DictReader(f):
                s_xy = float(row['s_xy'])
                tuples.append(DataTuple(
                    robot_id=int(row['j']),
                    time=float(row['t']),
                    mu=np.array([float(row['mu_x']), float(row['mu_y'])]),
                    sigma=np.array([[float(row['s_xx']), s_xy], [s_xy, float(row['s_yy'])]]),
                ))
        return tuples

    def write_trajectory(self, rows: Iterable[Tuple[float, int, float, float, float, float]]) -> Path:
        path = self.path(TRAJECTORY_FILE)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(TRAJECTORY_HEADER)
            for t, j, xt, yt, xe, ye in rows:
                writer.writerow([_fmt(t), j, _fmt(xt), _fmt(yt), _fmt(xe), _fmt(ye)])
        return path

    def write_grid(self, name: str, values: np.ndarray) -> Path:
        path = self.path(name)
        fmt = '%d' if np.issubdtype(np.asarray(values).dtype, np.integer) else GRID_FORMAT
        np.savetxt(path, np.asarray(values), fmt=fmt, delimiter=',')
        return path

    def read_grid(self, name: str) -> np.ndarray:
        return np.loadtxt(self._require(name), delimiter=',', ndmin=2)

    def write_barcode(self, barcode: Barcode) -> Path:
        path = self.path(BARCODE_FILE)
        with open(path, 'w', encoding='utf-8') as f:
            for i in barcode.intervals:
                f.write(f"{i.dimension},{_fmt(i.birth)},{_fmt(i.death)}\n")
        return path

    def read_barcode(self) -> Barcode:
        intervals = []
        with open(self._require(BARCODE_FILE), 'r', encoding='utf-8') as f:
            for line in f:
                if line.strip():
                    dim, birth, death = line.strip().split(',')
                    intervals.append(Interval(int(dim), float(birth), float(death)))
        return Barcode(tuple(intervals))

    def write_pgm(self, free: np.ndarray) -> Path:
        path = self.path(MAP_FILE)
        image = np.flipud(np.where(np.asarray(free, dtype=bool), 255, 0))
        rows, cols = image.shape
        with open(path, 'w', encoding='ascii', newline='\n') as f:
            f.write(f"P2\n{cols} {rows}\n255\n")
            for line in image:
                f.write(' '.join(str(int(v)) for v in line) + '\n')
        return path

    def read_pgm(self) -> np.ndarray:
        with open(self._require(MAP_FILE), 'r', encoding='ascii') as f:
            tokens = f.read().split()
        if tokens[0] != 'P2':
            raise ConfigurationError(f"Unsupported map format {tokens[0]!r}")
        cols, rows = int(tokens[1]), int(tokens[2])
        pixels = np.array([int(t) for t in tokens[4:4 + rows * cols]]).reshape(rows, cols)
        return np.flipud(pixels) > 0

    def write_betti_curve(self, curve: Sequence[Tuple[float, int, int]]) -> Path:
        path = self.path(BETTI_FILE)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(['delta', 'beta0', 'beta1'])
            for delta, b0, b1 in curve:
                writer.writerow([_fmt(delta), b0, b1])
        return path

    def write_report(self, values: Dict[str, Any], name: str = REPORT_FILE) -> Path:
        path = self.path(name)
        with open(path, 'w', encoding='utf-8') as f:
            for key, value in values.items():
                if isinstance(value, bool):
                    text = 'true' if value else 'false'
                elif isinstance(value, float):
                    text = _fmt(value)
                else:
                    text = str(value)
                f.write(f"{key}={text}\n")
        logger.info(f"Saved report to {path}")
        return path

    def read_report(self, name: str = REPORT_FILE) -> Dict[str, str]:
        with open(self._require(name), 'r', encoding='utf-8') as f:
            return dict(line.rstrip('\n').split('=', 1) for line in f if '=' in line)
