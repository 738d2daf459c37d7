"""
Tests for the flag-complex filtration, the barcode and threshold selection
"""

from collections import deque
from itertools import product

import numpy as np
import pytest

from logic_blocks.errors import ConfigurationError, DegenerateInputError
from logic_blocks.persistence_block import Barcode, Interval, PersistenceBlock, REPORT_DELTAS


def reference_betti(present):
    """Betti numbers of the 8-connected flag complex on a boolean grid, by direct counting."""
    rows, cols = present.shape
    neighbors = [(0, 1), (1, 0), (1, 1), (1, -1)]

    seen = np.zeros_like(present)
    beta0 = 0
    for r, c in product(range(rows), range(cols)):
        if present[r, c] and not seen[r, c]:
            beta0 += 1
            queue = deque([(r, c)])
            seen[r, c] = True
            while queue:
                i, j = queue.popleft()
                for di, dj in product((-1, 0, 1), repeat=2):
                    a, b = i + di, j + dj
                    if 0 <= a < rows and 0 <= b < cols and present[a, b] and not seen[a, b]:
                        seen[a, b] = True
                        queue.append((a, b))

    vertices = int(present.sum())
    edges = 0
    for r, c in product(range(rows), range(cols)):
        for dr, dc in neighbors:
            a, b = r + dr, c + dc
            if 0 <= a < rows and 0 <= b < cols and present[r, c] and present[a, b]:
                edges += 1

    triangles = 0
    full_blocks = 0
    for r, c in product(range(rows - 1), range(cols - 1)):
        k = int(present[r:r + 2, c:c + 2].sum())
        triangles += {3: 1, 4: 4}.get(k, 0)
        full_blocks += k == 4
    beta1 = edges - vertices + beta0 - triangles + full_blocks
    return beta0, beta1


def ring_grid(inner=0.0, ring=0.8):
    p = np.full((3, 3), ring)
    p[1, 1] = inner
    return p


class TestBuildComplex:
    def test_two_by_two_block(self):
        c = PersistenceBlock.build_complex(np.ones((2, 2)))
        assert c.n_vertices == 4
        assert len(c.edges) == 6
        assert len(c.triangles) == 4
        assert np.all(c.vertex_values == 0.0)

    def test_single_cell(self):
        c = PersistenceBlock.build_complex(np.array([[0.3]]))
        assert c.n_vertices == 1
        assert len(c.edges) == 0
        assert len(c.triangles) == 0

    def test_edges_join_chebyshev_neighbors(self):
        c = PersistenceBlock.build_complex(np.zeros((4, 5)))
        rows, cols = np.divmod(c.edges, 5)
        chebyshev = np.maximum(np.abs(rows[:, 0] - rows[:, 1]), np.abs(cols[:, 0] - cols[:, 1]))
        assert np.all(chebyshev == 1)
        # horizontal + vertical + two diagonal directions
        assert len(c.edges) == 4 * 4 + 3 * 5 + 2 * 3 * 4

    def test_faces_never_exceed_cofaces(self, rng):
        for _ in range(1000):
            shape = tuple(rng.integers(2, 6, size=2))
            c = PersistenceBlock.build_complex(rng.random(shape))
            assert np.all(c.vertex_values[c.edges].max(axis=1) <= c.edge_values)
            assert np.all(c.edge_values[c.triangle_edges].max(axis=1) <= c.triangle_values)

    def test_triangle_edges_are_boundaries(self, rng):
        c = PersistenceBlock.build_complex(rng.random((4, 4)))
        for tri, edge_ids in zip(c.triangles, c.triangle_edges):
            boundary = {tuple(c.edges[e]) for e in edge_ids}
            assert boundary == {(tri[0], tri[1]), (tri[0], tri[2]), (tri[1], tri[2])}

    def test_empty_grid_rejected(self):
        with pytest.raises(DegenerateInputError):
            PersistenceBlock.build_complex(np.empty((0, 0)))


class TestPersistence:
    def test_uniform_grid_is_one_component(self):
        barcode = PersistenceBlock.persistence(PersistenceBlock.build_complex(np.full((3, 3), 0.8)))
        assert len(barcode.intervals) == 1
        (component,) = barcode.intervals
        assert component.dimension == 0
        assert component.birth == pytest.approx(0.2)
        assert component.death == float("inf")

    def test_ring_around_empty_cell(self):
        barcode = PersistenceBlock.persistence(PersistenceBlock.build_complex(ring_grid()))
        assert len(barcode.of_dimension(0)) == 1
        (loop,) = barcode.of_dimension(1)
        assert loop.birth == pytest.approx(0.2)
        assert loop.death == 1.0
        assert loop.persistent

    def test_two_separated_blobs(self):
        p = np.zeros((3, 5))
        p[:, 0] = 0.9
        p[:, 4] = 0.7
        barcode = PersistenceBlock.persistence(PersistenceBlock.build_complex(p))
        components = barcode.of_dimension(0)
        finite = [i for i in components if i.death != float("inf")]
        assert len(finite) == 1
        assert finite[0].birth == pytest.approx(0.3)
        assert finite[0].death == 1.0

    def test_alive_counts_match_direct_betti(self, rng):
        for _ in range(200):
            shape = tuple(rng.integers(1, 9, size=2))
            c = PersistenceBlock.build_complex(rng.random(shape))
            barcode = PersistenceBlock.persistence(c)
            for delta in REPORT_DELTAS:
                assert barcode.alive_counts(delta) == PersistenceBlock.betti_at(c, delta)

    def test_infinite_components_match_final_complex(self, rng):
        p = rng.random((6, 6))
        p[p < 0.3] = 0.0
        c = PersistenceBlock.build_complex(p)
        barcode = PersistenceBlock.persistence(c)
        infinite = [i for i in barcode.of_dimension(0) if i.death == float("inf")]
        assert len(infinite) == PersistenceBlock.betti_at(c, 1.0)[0]


class TestBettiAt:
    def test_matches_direct_count(self, rng):
        for _ in range(200):
            shape = tuple(rng.integers(1, 9, size=2))
            values = rng.random(shape)
            c = PersistenceBlock.build_complex(values)
            for delta in (0.1, 0.35, 0.5, 0.8):
                present = (1.0 - values) <= delta
                assert PersistenceBlock.betti_at(c, delta) == reference_betti(present)

    def test_full_block_is_contractible(self):
        c = PersistenceBlock.build_complex(np.ones((4, 4)))
        assert PersistenceBlock.betti_at(c, 0.0) == (1, 0)

    def test_annulus(self):
        free = np.ones((5, 5), dtype=bool)
        free[1:4, 1:4] = False
        assert PersistenceBlock.map_betti(free) == (1, 1)

    def test_ring_has_a_hole_but_notch_does_not(self):
        free = np.ones((3, 3), dtype=bool)
        free[1, 1] = False
        assert PersistenceBlock.map_betti(free) == (1, 1)
        free = np.ones((2, 3), dtype=bool)
        free[0, 1] = False
        assert PersistenceBlock.map_betti(free) == (1, 0)

    def test_two_blobs(self):
        free = np.zeros((3, 5), dtype=bool)
        free[:, 0] = True
        free[:, 4] = True
        assert PersistenceBlock.map_betti(free) == (2, 0)

    def test_betti_curve_uses_report_grid(self):
        curve = PersistenceBlock.betti_curve(PersistenceBlock.build_complex(ring_grid()))
        assert [d for d, _, _ in curve] == list(REPORT_DELTAS)
        assert curve[0][1:] == (0, 0)
        assert curve[-1][1:] == (1, 1)


class TestSelectThreshold:
    def test_single_transient_loop(self):
        barcode = Barcode((Interval(1, 0.2, float("inf")), Interval(1, 0.2, 0.6)))
        selection = PersistenceBlock.select_threshold(barcode)
        assert selection.delta_cls == pytest.approx(0.6)
        assert selection.gamma_est == pytest.approx(0.4)

    def test_latest_transient_death_wins(self):
        barcode = Barcode((
            Interval(0, 0.1, float("inf")),
            Interval(0, 0.3, 0.45),
            Interval(1, 0.2, 0.7),
            Interval(1, 0.25, 1.0),
        ))
        assert PersistenceBlock.select_threshold(barcode).delta_cls == pytest.approx(0.7)

    def test_only_persistent_intervals(self):
        barcode = Barcode((Interval(0, 0.15, float("inf")), Interval(1, 0.2, 1.0)))
        assert PersistenceBlock.select_threshold(barcode).delta_cls == pytest.approx(0.2)

    def test_empty_barcode(self):
        with pytest.raises(DegenerateInputError):
            PersistenceBlock.select_threshold(Barcode(()))


class TestThresholdMap:
    def test_gamma_one_marks_everything_occupied(self, rng):
        assert not PersistenceBlock.threshold_map(rng.uniform(0, 0.999, (5, 5)), 1.0).free.any()

    def test_gamma_zero_frees_positive_cells(self):
        p = np.array([[0.0, 0.2], [0.5, 0.0]])
        np.testing.assert_array_equal(PersistenceBlock.threshold_map(p, 0.0).free, p > 0)

    def test_threshold_is_strict(self):
        assert not PersistenceBlock.threshold_map(np.array([[0.4]]), 0.4).free[0, 0]

    def test_nested(self, rng):
        p = rng.random((8, 8))
        for low, high in [(0.1, 0.2), (0.3, 0.9), (0.5, 0.5)]:
            loose = PersistenceBlock.threshold_map(p, low).free
            tight = PersistenceBlock.threshold_map(p, high).free
            assert np.all(loose[tight])

    @pytest.mark.parametrize("gamma", [-0.1, 1.1])
    def test_gamma_range(self, gamma):
        with pytest.raises(ConfigurationError):
            PersistenceBlock.threshold_map(np.zeros((2, 2)), gamma)

    def test_selected_threshold_separates_free_and_occupied(self):
        truth_free = np.ones((7, 7), dtype=bool)
        truth_free[2:5, 2:5] = False
        p = np.where(truth_free, 0.85, 0.0)
        p[5, 5] = 0.5
        c = PersistenceBlock.build_complex(p)
        selection = PersistenceBlock.select_threshold(PersistenceBlock.persistence(c))
        assert selection.gamma_est == pytest.approx(0.5)
        binary = PersistenceBlock.threshold_map(p, selection.map_gamma)
        np.testing.assert_array_equal(binary.free, truth_free)
        assert PersistenceBlock.map_betti(binary.free) == (1, 1)
