import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bsfv.mesh import MeshError, build_geometric, build_uniform, from_nodes, quasi_uniformity_constant


class TestUniform:
    def test_small_mesh_by_hand(self, mesh4):
        np.testing.assert_array_equal(mesh4.nodes, [0, 1, 2, 3, 4])
        np.testing.assert_array_equal(mesh4.midpoints, [0.5, 1.5, 2.5, 3.5])
        assert mesh4.dual_lengths[1] == 1.0
        assert mesh4.dual_lengths[0] == 0.5
        assert mesh4.dual_lengths[-1] == 0.5

    def test_thirds(self):
        np.testing.assert_allclose(build_uniform(2, 1.0).primal_lengths, [1 / 3] * 3, rtol=1e-15)

    def test_benchmark_grid(self):
        m = build_uniform(100, 300.0)
        assert m.h == pytest.approx(300 / 101, rel=1e-14)
        assert m.h == pytest.approx(2.9703, abs=1e-4)
        assert m.dual_lengths.sum() == pytest.approx(300.0, rel=1e-14)
        assert m.n_interior == 100 and m.x_max == 300.0

    def test_interval_doubling_halves_h(self):
        # N + 1 intervals -> 2(N + 1) intervals
        for n in (9, 49, 99):
            assert build_uniform(2 * n + 1, 300.0).h == pytest.approx(build_uniform(n, 300.0).h / 2, rel=1e-12)

    def test_arrays_read_only(self, mesh4):
        with pytest.raises(ValueError):
            mesh4.nodes[1] = 5.0

    @pytest.mark.parametrize("n, xmax", [(1, 1.0), (0, 1.0), (2.5, 1.0), (3, 0.0), (3, -1.0)])
    def test_rejects_bad_input(self, n, xmax):
        with pytest.raises(MeshError):
            build_uniform(n, xmax)


class TestGeometric:
    def test_ratio_two(self):
        m = build_geometric(2, 7.0, 2.0)
        np.testing.assert_allclose(m.primal_lengths, [1, 2, 4], rtol=1e-14)
        np.testing.assert_allclose(m.nodes, [0, 1, 3, 7], rtol=1e-14)

    def test_ratio_two_three_interior(self):
        np.testing.assert_allclose(build_geometric(3, 15.0, 2.0).nodes, [0, 1, 3, 7, 15], rtol=1e-14)

    def test_ratio_one_is_uniform(self):
        np.testing.assert_allclose(build_geometric(2, 1.0, 1.0).nodes, build_uniform(2, 1.0).nodes, rtol=1e-15)

    @pytest.mark.parametrize("ratio", [0.0, -1.2])
    def test_rejects_ratio(self, ratio):
        with pytest.raises(MeshError):
            build_geometric(5, 1.0, ratio)


class TestFromNodes:
    @pytest.mark.parametrize("nodes", [[0, 1, 1, 2], [0, 2, 1, 3], [0.1, 1, 2, 3], [0, 1, 2], [0, 1, np.nan, 3]])
    def test_rejects(self, nodes):
        with pytest.raises(MeshError):
            from_nodes(nodes)

    def test_unresolvable_grading_rejected(self):
        with pytest.raises(MeshError):
            build_geometric(400, 30.0, 0.8)

    def test_arbitrary_nodes(self):
        m = from_nodes([0.0, 0.5, 2.0, 2.5, 4.0])
        np.testing.assert_allclose(m.dual_lengths, [0.25, 1.0, 1.0, 1.0, 0.75])


class TestQuasiUniformity:
    def test_uniform_has_half_end_cells(self):
        assert quasi_uniformity_constant(build_uniform(10, 1.0)) == pytest.approx(2.0)

    def test_geometric_ratio_two(self):
        assert quasi_uniformity_constant(build_geometric(6, 1.0, 2.0)) >= 2.0

    def test_symmetric_mesh(self):
        # dual lengths 0.5, 1.5, 2, 1.5, 0.5: largest adjacent ratio is 3
        m = from_nodes([0, 1, 3, 5, 6])
        assert quasi_uniformity_constant(m) == pytest.approx(3.0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 2000), xmax=st.floats(1e-2, 1e4), ratio=st.floats(0.8, 1.25))
def test_tiling_and_interleaving(n, xmax, ratio):
    # keep the geometric width range well inside double precision
    n_geo = min(n, 100)
    for m in (build_uniform(n, xmax), build_geometric(n_geo, xmax, ratio)):
        assert m.dual_lengths.sum() == pytest.approx(xmax, rel=1e-12)
        assert np.all(m.nodes[:-1] < m.midpoints) and np.all(m.midpoints < m.nodes[1:])
        assert m.nodes[0] == 0.0 and m.nodes[-1] == xmax


@pytest.mark.slow
def test_tiling_large():
    m = build_uniform(100_000, 300.0)
    assert m.dual_lengths.sum() == pytest.approx(300.0, rel=1e-12)
