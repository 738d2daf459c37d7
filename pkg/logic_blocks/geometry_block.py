"""
Geometry Block - World geometry, grid discretization and ground truth
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import List, Sequence, Tuple
import logging

import numpy as np

from logic_blocks.errors import ConfigurationError, OutOfDomainError

logger = logging.getLogger(__name__)

Point = Tuple[float, float]
Bounds = Tuple[float, float, float, float]

# Snap distance (in cell widths) under which a coordinate counts as lying on a cell edge
EDGE_SNAP = 1e-9


@dataclass(frozen=True)
class Transmitter:
    """Signal source located outside the domain."""

    position: Point
    gain: float = 1.0
    power: float = 1.0
    alpha: float = 2.0

    def __post_init__(self):
        if not 0.1 <= self.alpha <= 2.0:
            raise ConfigurationError(f"Attenuation exponent must lie in [0.1, 2], got {self.alpha}")
        if self.gain <= 0 or self.power <= 0:
            raise ConfigurationError("Transmitter gain and power must be positive")

    @property
    def strength(self) -> float:
        """K_i * Pow_i."""
        return self.gain * self.power


@dataclass(frozen=True)
class DomainSpec:
    """
    Rectangular domain with polygonal obstacles and external transmitters.

    Attributes:
        bounds: (xmin, ymin, xmax, ymax) in meters
        obstacles: closed polygons, counterclockwise vertex lists
        transmitters: signal sources (two by default)
        name: label used in reports
    """

    bounds: Bounds
    obstacles: Tuple[Tuple[Point, ...], ...] = ()
    transmitters: Tuple[Transmitter, ...] = ()
    name: str = "domain"

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise ConfigurationError(f"Degenerate bounds: {self.bounds}")
        for k, polygon in enumerate(self.obstacles):
            if len(polygon) < 3:
                raise ConfigurationError(f"Obstacle {k} needs at least 3 vertices")

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self) -> float:
        return self.bounds[3] - self.bounds[1]

    @property
    def area(self) -> float:
        return self.width * self.height

    @cached_property
    def obstacle_arrays(self) -> List[np.ndarray]:
        return [np.asarray(polygon, dtype=float) for polygon in self.obstacles]

    @cached_property
    def obstacle_edges(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return [(poly, np.roll(poly, -1, axis=0)) for poly in self.obstacle_arrays]

    def contains(self, p: Sequence[float]) -> bool:
        """True iff p lies in the closed bounds rectangle."""
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= p[0] <= xmax and ymin <= p[1] <= ymax

    def translated(self, dx: float, dy: float) -> "DomainSpec":
        """Rigidly translate bounds, obstacles and transmitters."""
        xmin, ymin, xmax, ymax = self.bounds
        return DomainSpec(
            bounds=(xmin + dx, ymin + dy, xmax + dx, ymax + dy),
            obstacles=tuple(
                tuple((x + dx, y + dy) for x, y in polygon) for polygon in self.obstacles
            ),
            transmitters=tuple(
                Transmitter(
                    position=(t.position[0] + dx, t.position[1] + dy),
                    gain=t.gain,
                    power=t.power,
                    alpha=t.alpha,
                )
                for t in self.transmitters
            ),
            name=self.name,
        )


@dataclass(frozen=True)
class GridSpec:
    """Square-cell grid; cell (row, col) has row-major index row * cols + col."""

    rows: int
    cols: int
    half_width: float
    origin: Point = (0.0, 0.0)

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise ConfigurationError("Grid rows and cols must be positive")
        if self.half_width <= 0:
            raise ConfigurationError("Cell half-width must be positive")

    @classmethod
    def for_bounds(cls, bounds: Bounds, rows: int, cols: int) -> "GridSpec":
        """Grid that exactly tiles the given bounds with square cells."""
        xmin, ymin, xmax, ymax = bounds
        cell_w = (xmax - xmin) / cols
        cell_h = (ymax - ymin) / rows
        if not np.isclose(cell_w, cell_h, rtol=1e-9, atol=0.0):
            raise ConfigurationError(
                f"Grid {rows}x{cols} does not give square cells on bounds {bounds}"
            )
        return cls(rows=rows, cols=cols, half_width=cell_w / 2.0, origin=(xmin, ymin))

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def cell_width(self) -> float:
        return 2.0 * self.half_width

    @property
    def bounds(self) -> Bounds:
        x0, y0 = self.origin
        return (x0, y0, x0 + self.cols * self.cell_width, y0 + self.rows * self.cell_width)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)


@dataclass(frozen=True, eq=False)
class GroundTruthMap:
    """Per-cell occupancy, shape (rows, cols); flatten() gives row-major order."""

    occupied: np.ndarray

    @property
    def free(self) -> np.ndarray:
        return ~self.occupied


@dataclass(frozen=True)
class Violation:
    """One failed geometry rule."""

    rule: str
    message: str
    severity: str = "error"


class GeometryBlock:
    """Reusable geometry kernel for domains and grids."""

    @staticmethod
    def points_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
        """
        Even-odd point-in-polygon test.

        Args:
            points: (n, 2) array
            polygon: (m, 2) vertex array

        Returns:
            Boolean array of length n
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = points[:, 0], points[:, 1]
        inside = np.zeros(len(points), dtype=bool)
        xj, yj = polygon[-1]
        for xi, yi in polygon:
            crosses = (yi > y) != (yj > y)
            if np.any(crosses):
                x_cross = (xj - xi) * (y[crosses] - yi) / (yj - yi) + xi
                hit = np.zeros_like(inside)
                hit[crosses] = x[crosses] < x_cross
                inside ^= hit
            xj, yj = xi, yi
        return inside

    @staticmethod
    def are_free(domain: DomainSpec, points: np.ndarray) -> np.ndarray:
        """Vectorized is_free for an (n, 2) array of points inside the bounds."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        xmin, ymin, xmax, ymax = domain.bounds
        outside = (
            (points[:, 0] < xmin) | (points[:, 0] > xmax)
            | (points[:, 1] < ymin) | (points[:, 1] > ymax)
        )
        if np.any(outside):
            first = points[np.argmax(outside)]
            raise OutOfDomainError(f"Point {tuple(first)} lies outside bounds {domain.bounds}")
        blocked = np.zeros(len(points), dtype=bool)
        for polygon in domain.obstacle_arrays:
            blocked |= GeometryBlock.points_in_polygon(points, polygon)
        return ~blocked

    @staticmethod
    def is_free(domain: DomainSpec, p: Sequence[float]) -> bool:
        """True iff p (inside the bounds) lies in no obstacle polygon."""
        return bool(GeometryBlock.are_free(domain, np.asarray(p, dtype=float)[None, :])[0])

    @staticmethod
    def cells_of(grid: GridSpec, points: np.ndarray) -> np.ndarray:
        """
        Row-major cell indices of points inside the grid bounds.

        Points on a shared edge go to the cell with the larger row/col index.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        x0, y0, x1, y1 = grid.bounds
        outside = (
            (points[:, 0] < x0) | (points[:, 0] > x1)
            | (points[:, 1] < y0) | (points[:, 1] > y1)
        )
        if np.any(outside):
            first = points[np.argmax(outside)]
            raise OutOfDomainError(f"Point {tuple(first)} lies outside grid bounds {grid.bounds}")
        cols = GeometryBlock._axis_index((points[:, 0] - x0) / grid.cell_width, grid.cols)
        rows = GeometryBlock._axis_index((points[:, 1] - y0) / grid.cell_width, grid.rows)
        return rows * grid.cols + cols

    @staticmethod
    def _axis_index(t: np.ndarray, n: int) -> np.ndarray:
        nearest = np.rint(t)
        on_edge = np.abs(t - nearest) < EDGE_SNAP
        index = np.where(on_edge, nearest, np.floor(t)).astype(np.int64)
        return np.clip(index, 0, n - 1)

    @staticmethod
    def cell_of(grid: GridSpec, p: Sequence[float]) -> int:
        """Row-major index of the cell containing p."""
        return int(GeometryBlock.cells_of(grid, np.asarray(p, dtype=float)[None, :])[0])

    @staticmethod
    def cell_center(grid: GridSpec, index: int) -> np.ndarray:
        row, col = divmod(int(index), grid.cols)
        x0, y0 = grid.origin
        return np.array([
            x0 + (col + 0.5) * grid.cell_width,
            y0 + (row + 0.5) * grid.cell_width,
        ])

    @staticmethod
    def cell_centers(grid: GridSpec) -> np.ndarray:
        """(rows * cols, 2) array of centers in row-major order."""
        x0, y0 = grid.origin
        xs = x0 + (np.arange(grid.cols) + 0.5) * grid.cell_width
        ys = y0 + (np.arange(grid.rows) + 0.5) * grid.cell_width
        cx, cy = np.meshgrid(xs, ys)
        return np.column_stack([cx.ravel(), cy.ravel()])

    @staticmethod
    def cell_rect(grid: GridSpec, index: int) -> Bounds:
        cx, cy = GeometryBlock.cell_center(grid, index)
        s = grid.half_width
        return (cx - s, cy - s, cx + s, cy + s)

    @staticmethod
    def polygon_area(polygon: np.ndarray) -> float:
        """Unsigned shoelace area."""
        return abs(GeometryBlock.signed_area(polygon))

    @staticmethod
    def signed_area(polygon: np.ndarray) -> float:
        polygon = np.asarray(polygon, dtype=float)
        x, y = polygon[:, 0], polygon[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @staticmethod
    def pao(domain: DomainSpec) -> float:
        """Percentage of the bounds area covered by obstacles."""
        covered = sum(GeometryBlock.polygon_area(poly) for poly in domain.obstacle_arrays)
        return 100.0 * covered / domain.area

    @staticmethod
    def segment_hits_rectangle(p: Sequence[float], q: Sequence[float], bounds: Bounds) -> bool:
        """Liang-Barsky clip of segment pq against the closed rectangle."""
        xmin, ymin, xmax, ymax = bounds
        dx, dy = q[0] - p[0], q[1] - p[1]
        t0, t1 = 0.0, 1.0
        for pk, qk in (
            (-dx, p[0] - xmin),
            (dx, xmax - p[0]),
            (-dy, p[1] - ymin),
            (dy, ymax - p[1]),
        ):
            if pk == 0:
                if qk < 0:
                    return False
                continue
            t = qk / pk
            if pk < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
            if t0 > t1:
                return False
        return True

    @staticmethod
    def segment_crosses_obstacles(domain: DomainSpec, p: np.ndarray, q: np.ndarray) -> bool:
        """True iff segment pq touches any obstacle edge."""
        for starts, ends in domain.obstacle_edges:
            if np.any(GeometryBlock._segments_intersect(p, q, starts, ends)):
                return True
        return False

    @staticmethod
    def _segments_intersect(p, q, a, b) -> np.ndarray:
        """Closed-segment intersection of pq against each segment (a[k], b[k])."""

        def orient(u, v, w):
            return np.sign((v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1])
                           - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0]))

        def on_segment(u, v, w):
            return (
                (np.minimum(u[..., 0], v[..., 0]) <= w[..., 0])
                & (w[..., 0] <= np.maximum(u[..., 0], v[..., 0]))
                & (np.minimum(u[..., 1], v[..., 1]) <= w[..., 1])
                & (w[..., 1] <= np.maximum(u[..., 1], v[..., 1]))
            )

        p = np.broadcast_to(np.asarray(p, dtype=float), a.shape)
        q = np.broadcast_to(np.asarray(q, dtype=float), a.shape)
        o1, o2 = orient(p, q, a), orient(p, q, b)
        o3, o4 = orient(a, b, p), orient(a, b, q)
        proper = (o1 != o2) & (o3 != o4)
        touching = (
            ((o1 == 0) & on_segment(p, q, a))
            | ((o2 == 0) & on_segment(p, q, b))
            | ((o3 == 0) & on_segment(a, b, p))
            | ((o4 == 0) & on_segment(a, b, q))
        )
        return proper | touching

    @staticmethod
    def validate_geometry(domain: DomainSpec, sensing_radius: float = 0.06) -> List[Violation]:
        """
        Check every DomainSpec invariant.

        Args:
            domain: domain to check
            sensing_radius: robot sensing radius; obstacle-boundary gaps below
                twice the sensing diameter are reported as warnings

        Returns:
            List of violations, empty iff all rules hold
        """
        violations: List[Violation] = []
        xmin, ymin, xmax, ymax = domain.bounds

        for k, poly in enumerate(domain.obstacle_arrays):
            strictly_inside = (
                (poly[:, 0] > xmin) & (poly[:, 0] < xmax)
                & (poly[:, 1] > ymin) & (poly[:, 1] < ymax)
            )
            if not np.all(strictly_inside):
                violations.append(Violation(
                    "obstacle_bounds", f"Obstacle {k} has vertices on or outside the bounds"
                ))
                continue
            gap = float(np.min(np.concatenate([
                poly[:, 0] - xmin, xmax - poly[:, 0], poly[:, 1] - ymin, ymax - poly[:, 1]
            ])))
            min_gap = 2.0 * (2.0 * sensing_radius)
            if gap < min_gap:
                violations.append(Violation(
                    "obstacle_gap",
                    f"Obstacle {k} is {gap:.3f} m from the boundary (< {min_gap:.3f} m)",
                    severity="warning",
                ))

        for (i, a), (j, b) in combinations(enumerate(domain.obstacle_arrays), 2):
            if GeometryBlock._polygons_overlap(a, b):
                violations.append(Violation("obstacle_overlap", f"Obstacles {i} and {j} intersect"))

        if len(domain.transmitters) < 2:
            violations.append(Violation(
                "transmitter_count",
                f"At least two transmitters are required, got {len(domain.transmitters)}",
            ))
        for k, tx in enumerate(domain.transmitters):
            if domain.contains(tx.position):
                violations.append(Violation(
                    "transmitter_placement", f"Transmitter {k} at {tx.position} is not outside the bounds"
                ))
        for (i, a), (j, b) in combinations(enumerate(domain.transmitters), 2):
            if GeometryBlock.segment_hits_rectangle(a.position, b.position, domain.bounds):
                violations.append(Violation(
                    "transmitter_line", f"Segment between transmitters {i} and {j} crosses the domain"
                ))

        for v in violations:
            log = logger.warning if v.severity == "warning" else logger.error
            log(f"[{v.rule}] {v.message}")
        return violations

    @staticmethod
    def _polygons_overlap(a: np.ndarray, b: np.ndarray) -> bool:
        b_ends = np.roll(b, -1, axis=0)
        for p, q in zip(a, np.roll(a, -1, axis=0)):
            if np.any(GeometryBlock._segments_intersect(p, q, b, b_ends)):
                return True
        return bool(
            GeometryBlock.points_in_polygon(a[:1], b)[0]
            or GeometryBlock.points_in_polygon(b[:1], a)[0]
        )

    @staticmethod
    def ground_truth(domain: DomainSpec, grid: GridSpec) -> GroundTruthMap:
        """Occupied iff the cell center lies inside an obstacle."""
        free = GeometryBlock.are_free(domain, GeometryBlock.cell_centers(grid))
        return GroundTruthMap(occupied=~free.reshape(grid.shape))
