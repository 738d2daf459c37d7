"""
Density Block - Fuses recorded position estimates into a free-space density grid
"""

from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from joblib import Parallel, delayed
from scipy import ndimage, special

from logic_blocks.ekf_block import DataTuple
from logic_blocks.errors import (
    ConfigurationError,
    DegenerateInputError,
    DimensionMismatchError,
    UndefinedBoundError,
)
from logic_blocks.geometry_block import GeometryBlock, GridSpec, GroundTruthMap

logger = logging.getLogger(__name__)

DEFAULT_RHO = 0.05
BOX_SIGMAS = 5.0
TRUNCATION_SIGMAS = 10.0
DIRAC_EIGENVALUE = 1e-12
MASS_FLOOR = 1e-300
EPS = np.finfo(float).eps
LOG_CLAMP = math.log(1.0 / EPS)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """
    Per-cell free-space probability with the sums it was built from.

    Attributes:
        p_free: (rows, cols) p_i^f in [0, 1)
        count: (rows, cols) |P_i|
        sum_log: (rows, cols) sum of log(1 / (1 - p_ijk))
        saturated: (rows, cols) True where a p_ijk = 1 term was clamped
    """

    p_free: np.ndarray
    count: np.ndarray
    sum_log: np.ndarray
    saturated: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.p_free.shape


@dataclass(frozen=True, eq=False)
class BoundParams:
    sigma_max: float
    half_width: float
    counts: np.ndarray

    def __post_init__(self):
        if self.sigma_max <= 0 or self.half_width <= 0:
            raise UndefinedBoundError("Bound parameters need sigma_max > 0 and s > 0")


@dataclass(frozen=True)
class CoverageReport:
    covered: bool
    missing: Tuple[int, ...]


def _interval_mass(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Standard normal mass of [a, b], evaluated on the tail side for accuracy."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    upper = np.where(a > 0, special.ndtr(-a) - special.ndtr(-b), special.ndtr(b) - special.ndtr(a))
    return np.where(b > a, np.clip(upper, 0.0, 1.0), 0.0)


def _robot_partial(job: Tuple[np.ndarray, np.ndarray, GridSpec, float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Count, log-sum and saturation grids for one robot's tuples, in time order."""
    mus, sigmas, grid, rho = job
    count = np.zeros(grid.size, dtype=np.int64)
    sum_log = np.zeros(grid.size)
    saturated = np.zeros(grid.size, dtype=bool)
    for mu, sigma in zip(mus, sigmas):
        cells = DensityBlock.candidate_cells(grid, mu, sigma)
        if cells.size == 0:
            continue
        masses = DensityBlock.cell_masses(mu, sigma, DensityBlock.cell_rects(grid, cells))
        keep = masses > rho
        for cell, p in zip(cells[keep], masses[keep]):
            term, clamped = DensityBlock.log_term(p)
            count[cell] += 1
            sum_log[cell] += term
            saturated[cell] |= clamped
    return count, sum_log, saturated


class DensityBlock:
    """Gaussian cell masses, the log-mean score, smoothing and the completeness bound."""

    @staticmethod
    def cell_mass(d: DataTuple, rect: Sequence[float]) -> float:
        """Probability mass of N(mu, sigma) over rect = (x0, y0, x1, y1)."""
        return float(DensityBlock.cell_masses(d.mu, d.sigma, np.asarray([rect], dtype=float))[0])

    @staticmethod
    def cell_masses(mu: np.ndarray, sigma: np.ndarray, rects: np.ndarray) -> np.ndarray:
        """
        Gaussian mass over each rectangle of an (n, 4) array.

        Diagonal covariances use the closed-form product of normal CDF
        differences; general covariances are rotated onto their eigenbasis
        and integrated by 64-point Gauss-Legendre quadrature along the major
        axis, split at the projected rectangle corners.
        """
        mu = np.asarray(mu, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        rects = np.atleast_2d(np.asarray(rects, dtype=float))
        eigvals, eigvecs = np.linalg.eigh(sigma)

        if eigvals[0] < DIRAC_EIGENVALUE:
            inside = (
                (rects[:, 0] <= mu[0]) & (mu[0] < rects[:, 2])
                & (rects[:, 1] <= mu[1]) & (mu[1] < rects[:, 3])
            )
            return inside.astype(float)

        if sigma[0, 1] == 0.0 and sigma[1, 0] == 0.0:
            sx, sy = math.sqrt(sigma[0, 0]), math.sqrt(sigma[1, 1])
            mass = (
                _interval_mass((rects[:, 0] - mu[0]) / sx, (rects[:, 2] - mu[0]) / sx)
                * _interval_mass((rects[:, 1] - mu[1]) / sy, (rects[:, 3] - mu[1]) / sy)
            )
        else:
            mass = DensityBlock._rotated_masses(mu, eigvals, eigvecs, rects)
        return np.where(mass < MASS_FLOOR, 0.0, np.clip(mass, 0.0, 1.0))

    @staticmethod
    def _rotated_masses(mu, eigvals, eigvecs, rects) -> np.ndarray:
        major, minor = eigvecs[:, 1], eigvecs[:, 0]
        s_major, s_minor = math.sqrt(eigvals[1]), math.sqrt(eigvals[0])

        corners = np.stack([
            rects[:, [0, 1]], rects[:, [2, 1]], rects[:, [0, 3]], rects[:, [2, 3]]
        ], axis=1)
        proj = np.sort((corners - mu) @ major, axis=1)
        limit = TRUNCATION_SIGMAS * s_major
        lo = np.clip(proj[:, :3], -limit, limit)
        hi = np.clip(proj[:, 1:], -limit, limit)
        half = 0.5 * (hi - lo)
        t = 0.5 * (hi + lo)[..., None] + half[..., None] * _GL_NODES

        s_lo = np.full(t.shape, -np.inf)
        s_hi = np.full(t.shape, np.inf)
        for axis in (0, 1):
            base = mu[axis] + major[axis] * t
            lower = rects[:, axis][:, None, None]
            upper = rects[:, axis + 2][:, None, None]
            if minor[axis] != 0.0:
                e1 = (lower - base) / minor[axis]
                e2 = (upper - base) / minor[axis]
                s_lo = np.maximum(s_lo, np.minimum(e1, e2))
                s_hi = np.minimum(s_hi, np.maximum(e1, e2))
            else:
                outside = (base < lower) | (base > upper)
                s_hi = np.where(outside, -np.inf, s_hi)

        inner = _interval_mass(s_lo / s_minor, s_hi / s_minor)
        density = np.exp(-0.5 * (t / s_major) ** 2) / (math.sqrt(2.0 * math.pi) * s_major)
        return np.sum(_GL_WEIGHTS * half[..., None] * density * inner, axis=(1, 2))

    @staticmethod
    def candidate_cells(grid: GridSpec, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        """Row-major indices of cells meeting the 5-sigma box around mu."""
        x0, y0, x1, y1 = grid.bounds
        sx = BOX_SIGMAS * math.sqrt(max(sigma[0, 0], 0.0))
        sy = BOX_SIGMAS * math.sqrt(max(sigma[1, 1], 0.0))
        bx0, bx1 = max(mu[0] - sx, x0), min(mu[0] + sx, x1)
        by0, by1 = max(mu[1] - sy, y0), min(mu[1] + sy, y1)
        if bx0 > bx1 or by0 > by1:
            return np.empty(0, dtype=np.int64)
        w = grid.cell_width
        c0, c1 = (int(np.clip(math.floor((v - x0) / w), 0, grid.cols - 1)) for v in (bx0, bx1))
        r0, r1 = (int(np.clip(math.floor((v - y0) / w), 0, grid.rows - 1)) for v in (by0, by1))
        rows, cols = np.meshgrid(np.arange(r0, r1 + 1), np.arange(c0, c1 + 1), indexing="ij")
        return (rows * grid.cols + cols).ravel()

    @staticmethod
    def cell_rects(grid: GridSpec, cells: np.ndarray) -> np.ndarray:
        rows, cols = np.divmod(np.asarray(cells, dtype=np.int64), grid.cols)
        x0, y0 = grid.origin
        w = grid.cell_width
        return np.column_stack([x0 + cols * w, y0 + rows * w, x0 + (cols + 1) * w, y0 + (rows + 1) * w])

    @staticmethod
    def log_term(p: float) -> Tuple[float, bool]:
        """log(1 / (1 - p)), clamped at log(1 / eps) when p is numerically 1."""
        if p >= 1.0 - EPS:
            return LOG_CLAMP, True
        return min(-math.log1p(-p), LOG_CLAMP), False

    @staticmethod
    def accumulate(
        tuples: Iterable[DataTuple],
        grid: GridSpec,
        rho: float = DEFAULT_RHO,
        jobs: int = 1,
    ) -> DensityGrid:
        """
        Collect every p_ijk > rho per cell and build the raw density grid.

        Args:
            tuples: recorded data tuples, any order
            grid: target grid
            rho: inclusion tolerance in (0, 1)
            jobs: worker processes for the per-robot map step

        Returns:
            DensityGrid with counts, log sums and p_free
        """
        if not 0.0 < rho < 1.0:
            raise ConfigurationError(f"rho must lie in (0, 1), got {rho}")
        ordered = sorted(tuples, key=lambda d: (d.robot_id, d.time, float(d.mu[0]), float(d.mu[1])))
        groups: List[Tuple[np.ndarray, np.ndarray, GridSpec, float]] = []
        for _, per_robot in groupby(ordered, key=lambda d: d.robot_id):
            mine = list(per_robot)
            groups.append((
                np.array([d.mu for d in mine], dtype=float),
                np.array([d.sigma for d in mine], dtype=float),
                grid,
                rho,
            ))

        if jobs > 1 and len(groups) > 1:
            partials = Parallel(n_jobs=jobs)(delayed(_robot_partial)(g) for g in groups)
        else:
            partials = [_robot_partial(g) for g in groups]

        count = np.zeros(grid.size, dtype=np.int64)
        sum_log = np.zeros(grid.size)
        saturated = np.zeros(grid.size, dtype=bool)
        for c, s, sat in partials:
            count += c
            sum_log += s
            saturated |= sat
        if np.any(saturated):
            logger.warning(f"{int(saturated.sum())} cells had a saturated log term")
        return DensityBlock.from_sums(
            count.reshape(grid.shape), sum_log.reshape(grid.shape), saturated.reshape(grid.shape)
        )

    @staticmethod
    def from_sums(count: np.ndarray, sum_log: np.ndarray, saturated: Optional[np.ndarray] = None) -> DensityGrid:
        if saturated is None:
            saturated = np.zeros(count.shape, dtype=bool)
        p_free = DensityBlock.free_probability(DensityBlock.score_grid(count, sum_log))
        return DensityGrid(p_free=p_free, count=count, sum_log=sum_log, saturated=saturated)

    @staticmethod
    def score(probabilities: Sequence[float]) -> float:
        """s_i = mean of log(1 / (1 - p)) over P_i; 0 for an empty P_i."""
        if len(probabilities) == 0:
            return 0.0
        return sum(DensityBlock.log_term(p)[0] for p in probabilities) / len(probabilities)

    @staticmethod
    def score_grid(count: np.ndarray, sum_log: np.ndarray) -> np.ndarray:
        safe = np.where(count > 0, count, 1)
        return np.where(count > 0, sum_log / safe, 0.0)

    @staticmethod
    def free_probability(s):
        """p^f = 1 - exp(-s); scalar in, scalar out."""
        p = -np.expm1(-np.asarray(s, dtype=float))
        return float(p) if np.ndim(p) == 0 else p

    @staticmethod
    def smooth(g: DensityGrid) -> DensityGrid:
        """3x3 moving average; border cells average over the neighbors that exist."""
        kernel = np.ones((3, 3))
        total = ndimage.correlate(g.p_free, kernel, mode="constant", cval=0.0)
        neighbors = ndimage.correlate(np.ones_like(g.p_free), kernel, mode="constant", cval=0.0)
        return DensityGrid(
            p_free=total / neighbors, count=g.count, sum_log=g.sum_log, saturated=g.saturated
        )

    @staticmethod
    def coverage_check(tuples: Sequence[DataTuple], grid: GridSpec, truth: GroundTruthMap) -> CoverageReport:
        """Covered iff every truth-free cell holds at least one tuple mean."""
        if truth.occupied.shape != grid.shape:
            raise DimensionMismatchError(f"Truth shape {truth.occupied.shape} != grid {grid.shape}")
        visited = np.zeros(grid.size, dtype=bool)
        if len(tuples):
            mus = np.array([d.mu for d in tuples], dtype=float)
            x0, y0, x1, y1 = grid.bounds
            inside = (mus[:, 0] >= x0) & (mus[:, 0] <= x1) & (mus[:, 1] >= y0) & (mus[:, 1] <= y1)
            if np.any(inside):
                visited[GeometryBlock.cells_of(grid, mus[inside])] = True
        missing = np.flatnonzero(truth.free.ravel() & ~visited)
        return CoverageReport(covered=missing.size == 0, missing=tuple(int(i) for i in missing))

    @staticmethod
    def sigma_max(tuples: Sequence[DataTuple]) -> float:
        """Square root of the largest spectral norm among the recorded covariances (m)."""
        if len(tuples) == 0:
            raise DegenerateInputError("sigma_max needs at least one data tuple")
        sigmas = np.array([d.sigma for d in tuples], dtype=float)
        return float(math.sqrt(np.max(np.linalg.norm(sigmas, ord=2, axis=(1, 2)))))

    @staticmethod
    def bound_params(tuples: Sequence[DataTuple], grid: GridSpec, density: DensityGrid) -> BoundParams:
        return BoundParams(
            sigma_max=DensityBlock.sigma_max(tuples), half_width=grid.half_width, counts=density.count
        )

    @staticmethod
    def completeness_bound(bp: BoundParams, cell: int) -> float:
        """1 - (1 - (1 - exp(-s^2 / (2 sigma_max^2)))^2)^(1 / |P_i|), as written."""
        n = int(np.ravel(bp.counts)[cell])
        if n == 0:
            raise UndefinedBoundError(f"Cell {cell} has no data; bound undefined")
        return float(DensityBlock._bound_values(bp, np.array([n]))[0])

    @staticmethod
    def _bound_values(bp: BoundParams, counts: np.ndarray) -> np.ndarray:
        q = -math.expm1(-bp.half_width ** 2 / (2.0 * bp.sigma_max ** 2))
        return 1.0 - (1.0 - q * q) ** (1.0 / counts)

    @staticmethod
    def completeness_check(raw: DensityGrid, truth: GroundTruthMap, bp: BoundParams) -> Tuple[float, float]:
        """
        Empirical check of the completeness bound on the unsmoothed grid.

        Returns:
            (fraction of truth-free cells with p_free above their bound,
             smallest bound over truth-free cells with data; nan if none)
        """
        if raw.shape != truth.occupied.shape:
            raise DimensionMismatchError(f"Grid shape {raw.shape} != truth {truth.occupied.shape}")
        free = truth.free.ravel()
        if not np.any(free):
            return 1.0, float("nan")
        counts = np.ravel(bp.counts)[free]
        p = raw.p_free.ravel()[free]
        has_data = counts > 0
        bounds = np.full(counts.shape, np.nan)
        bounds[has_data] = DensityBlock._bound_values(bp, counts[has_data])
        satisfied = has_data & (p > np.where(has_data, bounds, np.inf))
        min_bound = float(np.min(bounds[has_data])) if np.any(has_data) else float("nan")
        return float(np.mean(satisfied)), min_bound
