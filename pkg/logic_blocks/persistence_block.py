"""
Persistence Block - Flag-complex filtration, barcodes and topological thresholding
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Set, Tuple, Union
import logging

import numpy as np

from logic_blocks.density_block import DensityGrid
from logic_blocks.errors import ConfigurationError, DegenerateInputError
from logic_blocks.union_find import DisjointSet

logger = logging.getLogger(__name__)

TERMINAL_VALUE = 1.0
TERMINAL_TOLERANCE = 1e-12
# Cells whose value ties the selected filtration value stay free in the final map
TIE_TOLERANCE = 1e-12
REPORT_DELTAS = tuple(round(0.05 * k, 2) for k in range(1, 20))


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """
    Flag complex of the 8-connected cell graph, filtered by f = 1 - p_free.

    Vertices are row-major cell indices. Edges and triangles hold sorted
    vertex indices in lexicographic order; triangle_edges gives the three
    edge indices forming each triangle's boundary.
    """

    shape: Tuple[int, int]
    vertex_values: np.ndarray
    edges: np.ndarray
    edge_values: np.ndarray
    triangles: np.ndarray
    triangle_values: np.ndarray
    triangle_edges: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_values)


@dataclass(frozen=True)
class Interval:
    dimension: int
    birth: float
    death: float

    @property
    def persistent(self) -> bool:
        """Infinite, or closed only by the terminal value (a p_free = 0 cell)."""
        return self.death >= TERMINAL_VALUE - TERMINAL_TOLERANCE

    def alive_at(self, delta: float) -> bool:
        return self.birth <= delta < self.death


@dataclass(frozen=True)
class Barcode:
    intervals: Tuple[Interval, ...]

    def of_dimension(self, dimension: int) -> List[Interval]:
        return [i for i in self.intervals if i.dimension == dimension]

    def alive_counts(self, delta: float) -> Tuple[int, int]:
        return tuple(
            sum(1 for i in self.of_dimension(dim) if i.alive_at(delta)) for dim in (0, 1)
        )

    def persistent_counts(self) -> Tuple[int, int]:
        return tuple(sum(1 for i in self.of_dimension(dim) if i.persistent) for dim in (0, 1))


@dataclass(frozen=True, eq=False)
class BinaryMap:
    free: np.ndarray
    gamma: float

    @property
    def occupied(self) -> np.ndarray:
        return ~self.free


@dataclass(frozen=True)
class ThresholdSelection:
    delta_cls: float
    gamma_est: float

    @property
    def map_gamma(self) -> float:
        """Cut for the final map: the delta_cls sublevel set, including its boundary cells."""
        return max(0.0, self.gamma_est - TIE_TOLERANCE)


def _values(g: Union[DensityGrid, np.ndarray]) -> np.ndarray:
    p = g.p_free if isinstance(g, DensityGrid) else np.asarray(g, dtype=float)
    if p.ndim != 2 or p.size == 0:
        raise DegenerateInputError("Filtration needs a non-empty 2-D grid")
    return p


class PersistenceBlock:
    """Sublevel persistence of the occupancy grid in dimensions 0 and 1."""

    @staticmethod
    def build_complex(g: Union[DensityGrid, np.ndarray]) -> FilteredComplex:
        """
        All vertices, 8-connectivity edges and their 3-cliques.

        Args:
            g: density grid, or a raw (rows, cols) array of p_free

        Returns:
            FilteredComplex whose simplex values are the max over vertices
        """
        p = _values(g)
        rows, cols = p.shape
        m = rows * cols
        idx = np.arange(m).reshape(rows, cols)
        values = 1.0 - p.ravel()

        pairs = [
            (idx[:, :-1], idx[:, 1:]),
            (idx[:-1, :], idx[1:, :]),
            (idx[:-1, :-1], idx[1:, 1:]),
            (idx[:-1, 1:], idx[1:, :-1]),
        ]
        u = np.concatenate([a.ravel() for a, _ in pairs])
        v = np.concatenate([b.ravel() for _, b in pairs])
        edges = np.column_stack([np.minimum(u, v), np.maximum(u, v)]).astype(np.int64)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]

        a, b = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
        c, d = idx[1:, :-1].ravel(), idx[1:, 1:].ravel()
        triangles = np.concatenate([
            np.column_stack(t) for t in ((a, b, c), (a, b, d), (a, c, d), (b, c, d))
        ]).astype(np.int64).reshape(-1, 3)
        triangles = triangles[np.lexsort((triangles[:, 2], triangles[:, 1], triangles[:, 0]))]

        edge_keys = edges[:, 0] * m + edges[:, 1]
        faces = np.stack([
            triangles[:, 0] * m + triangles[:, 1],
            triangles[:, 0] * m + triangles[:, 2],
            triangles[:, 1] * m + triangles[:, 2],
        ], axis=1)
        triangle_edges = np.searchsorted(edge_keys, faces) if len(edges) else np.empty((0, 3), np.int64)

        return FilteredComplex(
            shape=(rows, cols),
            vertex_values=values,
            edges=edges.reshape(-1, 2),
            edge_values=values[edges].max(axis=1) if len(edges) else np.empty(0),
            triangles=triangles,
            triangle_values=values[triangles].max(axis=1) if len(triangles) else np.empty(0),
            triangle_edges=triangle_edges.reshape(-1, 3),
        )

    @staticmethod
    def persistence(c: FilteredComplex) -> Barcode:
        """
        Barcode in dimensions 0 and 1.

        Components follow the elder rule on a union-find forest; loops come
        from mod-2 column reduction of the triangle-edge boundary matrix.
        Zero-length intervals are dropped.
        """
        intervals: List[Interval] = []
        edge_order = np.lexsort((np.arange(len(c.edges)), c.edge_values))

        forest = DisjointSet(c.n_vertices)
        for vertex, value in enumerate(c.vertex_values):
            forest.payload[vertex] = (float(value), vertex)
        negative = np.zeros(len(c.edges), dtype=bool)
        for e in edge_order:
            u, v = c.edges[e]
            ru, rv = forest.find(int(u)), forest.find(int(v))
            if ru == rv:
                continue
            negative[e] = True
            elder, younger = sorted((forest.payload[ru], forest.payload[rv]))
            death = float(c.edge_values[e])
            if death > younger[0]:
                intervals.append(Interval(0, younger[0], death))
            forest.payload[forest.merge(ru, rv)] = elder
        for root in sorted({forest.find(v) for v in range(c.n_vertices)}):
            intervals.append(Interval(0, forest.payload[root][0], float("inf")))

        edge_rank = np.empty(len(c.edges), dtype=np.int64)
        edge_rank[edge_order] = np.arange(len(c.edges))
        pivots: Dict[int, Set[int]] = {}
        paired = np.zeros(len(c.edges), dtype=bool)
        for t in np.lexsort((np.arange(len(c.triangles)), c.triangle_values)):
            column = {int(r) for r in edge_rank[c.triangle_edges[t]]}
            while column:
                low = max(column)
                if low not in pivots:
                    pivots[low] = column
                    edge = edge_order[low]
                    paired[edge] = True
                    birth, death = float(c.edge_values[edge]), float(c.triangle_values[t])
                    if death > birth:
                        intervals.append(Interval(1, birth, death))
                    break
                column = column ^ pivots[low]
        for e in np.flatnonzero(~negative & ~paired):
            intervals.append(Interval(1, float(c.edge_values[e]), float("inf")))

        intervals.sort(key=lambda i: (i.dimension, i.birth, i.death))
        logger.debug(f"Barcode: {len(intervals)} intervals over {c.n_vertices} vertices")
        return Barcode(tuple(intervals))

    @staticmethod
    def select_threshold(b: Barcode) -> ThresholdSelection:
        """
        Last filtration value at which a transient feature disappears.

        Persistent intervals (death at infinity or at the terminal value)
        are excluded; with no transient interval the largest birth is used.
        """
        if not b.intervals:
            raise DegenerateInputError("Cannot select a threshold from an empty barcode")
        transient = [i.death for i in b.intervals if not i.persistent]
        delta = max(transient) if transient else max(i.birth for i in b.intervals)
        return ThresholdSelection(delta_cls=float(delta), gamma_est=float(1.0 - delta))

    @staticmethod
    def threshold_map(g: Union[DensityGrid, np.ndarray], gamma: float) -> BinaryMap:
        if not 0.0 <= gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {gamma}")
        return BinaryMap(free=_values(g) > gamma, gamma=float(gamma))

    @staticmethod
    def betti_at(c: FilteredComplex, delta: float) -> Tuple[int, int]:
        """
        Betti numbers of the delta-sublevel complex, without persistence.

        beta_0 comes from union-find; beta_1 from the Euler relation
        V - E + F = beta_0 - beta_1 + beta_2, where beta_2 counts 2x2 blocks
        whose four triangles (a hollow tetrahedron) are all present.
        """
        vertices = np.flatnonzero(c.vertex_values <= delta)
        edge_mask = c.edge_values <= delta
        tri_mask = c.triangle_values <= delta

        forest = DisjointSet(c.n_vertices)
        for u, v in c.edges[edge_mask]:
            forest.merge(int(u), int(v))
        beta0 = forest.count_roots(vertices)

        present = c.triangles[tri_mask]
        beta2 = 0
        if len(present):
            cols = c.shape[1]
            corner = present.min(axis=1)
            block = (corner // cols) * cols + (present % cols).min(axis=1)
            beta2 = int(np.sum(np.bincount(block, minlength=c.n_vertices) == 4))
        beta1 = int(edge_mask.sum()) - len(vertices) + beta0 - int(tri_mask.sum()) + beta2
        return beta0, beta1

    @staticmethod
    def betti_curve(c: FilteredComplex, deltas: Sequence[float] = REPORT_DELTAS) -> List[Tuple[float, int, int]]:
        return [(float(d),) + PersistenceBlock.betti_at(c, d) for d in deltas]

    @staticmethod
    def map_betti(free: np.ndarray) -> Tuple[int, int]:
        """Betti numbers of the free cells of a binary map as a flag complex."""
        free = np.asarray(free, dtype=bool)
        if free.size == 0:
            return 0, 0
        return PersistenceBlock.betti_at(PersistenceBlock.build_complex(free.astype(float)), 0.5)
