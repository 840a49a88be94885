import math

import pytest

from grig import ops
from grig.granular import GranularRect
from grig.graph import ImageGraph, with_features
from grig.serialize import graph_to_json


def rect(k, cx, cy, rx=0, ry=0, mean=0.0, var=0.0, vmin=0.0, vmax=0.0, purity=1.0):
    return GranularRect(k, cx, cy, rx, ry, purity, var, mean, vmax, vmin)


def graph(nodes, edges, w=28, h=28):
    return with_features(ImageGraph(w, h, tuple(nodes), tuple(edges)))


class TestRotate:
    def test_quarter_turn_drops_outside(self):
        g = graph([rect(0, 1, 0)], [])
        out = ops.rotate(g, 90.0, center=(0.0, 0.0))  # (1,0) -> (0,-1), off canvas
        assert out.node_count == 0 and out.edge_count == 0

    def test_zero_is_identity(self, graphs100):
        g = graphs100[0]
        assert graph_to_json(ops.rotate(g, 0.0)) == graph_to_json(g)

    def test_four_quarter_turns_identity(self, graphs100):
        for g in graphs100[:10]:
            out = g
            for _ in range(4):
                out = ops.rotate(out, 90.0)
            assert graph_to_json(out) == graph_to_json(g)

    def test_quarter_turn_swaps_extents(self):
        g = graph([rect(0, 10, 10, rx=3, ry=1)], [])
        out = ops.rotate(g, 90.0)
        assert (out.nodes[0].rx, out.nodes[0].ry) == (1, 3)
        out = ops.rotate(g, 180.0)
        assert (out.nodes[0].rx, out.nodes[0].ry) == (3, 1)

    def test_arbitrary_angle_rounds_centers(self):
        g = graph([rect(0, 20, 14)], [])
        out = ops.rotate(g, 30.0, center=(14.0, 14.0))
        n = out.nodes[0]
        # Eq: x' = 6*cos30 + 0*sin30 + 14, y' = 0*cos30 - 6*sin30 + 14
        assert n.cx == round(6 * math.cos(math.radians(30)) + 14)
        assert n.cy == int(math.floor(-6 * math.sin(math.radians(30)) + 14 + 0.5))

    def test_drop_removes_incident_edges(self):
        g = graph([rect(0, 0, 14), rect(1, 1, 14, rx=1)], [(0, 1)])
        out = ops.rotate(g, 37.0, center=(27.0, 14.0))  # pushes left nodes off canvas
        assert out.edge_count == 0


class TestFlips:
    def test_vertical_maps_row(self):
        g = graph([rect(0, 3, 4)], [])
        out = ops.flip_vertical(g)
        assert (out.nodes[0].cx, out.nodes[0].cy) == (3, 23)

    def test_raw_formula_variant(self):
        g = graph([rect(0, 3, 4)], [])
        out = ops.flip_vertical(g, raw_formula=True)
        assert (out.nodes[0].cx, out.nodes[0].cy) == (3, 24)
        edge_row = graph([rect(0, 3, 0)], [])  # y=0 maps to h, off canvas
        assert ops.flip_vertical(edge_row, raw_formula=True).node_count == 0

    def test_involutions(self, graphs100):
        for g in graphs100[:10]:
            assert graph_to_json(ops.flip_horizontal(ops.flip_horizontal(g))) == graph_to_json(g)
            assert graph_to_json(ops.flip_vertical(ops.flip_vertical(g))) == graph_to_json(g)

    def test_edge_set_preserved(self, graphs100):
        for g in graphs100[:10]:
            assert ops.flip_horizontal(g).edges == g.edges
            assert ops.flip_vertical(g).edges == g.edges

    def test_full_canvas_node_fixed_point(self):
        g = graph([rect(0, 13, 13, rx=13, ry=13)], [], w=27, h=27)
        assert graph_to_json(ops.flip_vertical(g)) == graph_to_json(g)
        assert graph_to_json(ops.flip_horizontal(g)) == graph_to_json(g)


class TestDownsample:
    def test_zero_is_identity(self, graphs100):
        g = graphs100[1]
        assert graph_to_json(ops.downsample(g, 0)) == graph_to_json(g)

    def test_identical_nodes_keep_variance(self):
        a = rect(0, 5, 5, rx=1, ry=1, mean=10.0, var=4.0, vmin=8.0, vmax=12.0)
        b = rect(1, 7, 5, rx=1, ry=1, mean=10.0, var=4.0, vmin=8.0, vmax=12.0)
        out = ops.downsample(graph([a, b], [(0, 1)]), 1)
        assert out.node_count == 1
        assert math.isclose(out.nodes[0].variance, 4.0)
        assert math.isclose(out.nodes[0].v_mean, 10.0)

    def test_pooled_moments(self):
        a = rect(0, 5, 5, mean=0.0, var=0.0)
        b = rect(1, 6, 5, mean=10.0, var=0.0)
        out = ops.downsample(graph([a, b], [(0, 1)]), 1)
        assert math.isclose(out.nodes[0].v_mean, 5.0)
        assert math.isclose(out.nodes[0].variance, 25.0)

    def test_pooled_variance_never_negative(self):
        # Fractional means make the pooled-moment subtraction cancel; the
        # result must clamp at zero rather than dip below it.
        m = 77.0 + 1.0 / 3.0
        a = rect(0, 10, 10, rx=1, ry=0, mean=m, var=0.0, vmin=m, vmax=m)
        b = rect(1, 12, 10, rx=1, ry=1, mean=m, var=0.0, vmin=m, vmax=m)
        out = ops.downsample(graph([a, b], [(0, 1)]), 1)
        assert out.nodes[0].variance >= 0.0

    def test_merges_closest_pair_first(self):
        g = graph([rect(0, 0, 0, rx=5), rect(1, 10, 0, rx=5), rect(2, 11, 0, rx=5)], [(0, 1), (0, 2), (1, 2)])
        out = ops.downsample(g, 1)
        assert out.node_count == 2
        # nodes 1 and 2 (distance 1) merged; node 0 survives unchanged
        assert out.nodes[0].cx == 0

    def test_counts_decrease_no_dupes(self, graphs100):
        g = graphs100[2]
        k = min(5, g.node_count - 1)
        out = ops.downsample(g, k)
        assert out.node_count == g.node_count - k
        assert len(set(out.edges)) == len(out.edges)
        assert all(i < j for i, j in out.edges)

    def test_k_too_large(self):
        g = graph([rect(0, 1, 1)], [])
        with pytest.raises(ValueError):
            ops.downsample(g, 1)


class TestUpsample:
    def test_zero_is_identity(self, graphs100):
        g = graphs100[3]
        assert graph_to_json(ops.upsample(g, 0, seed=1)) == graph_to_json(g)

    def test_seed_reproducible(self, graphs100):
        g = graphs100[3]
        a = ops.upsample(g, 7, seed=123)
        b = ops.upsample(g, 7, seed=123)
        assert graph_to_json(a) == graph_to_json(b)
        c = ops.upsample(g, 7, seed=124)
        assert graph_to_json(c) != graph_to_json(a)

    def test_adds_exactly_k(self, graphs100):
        g = graphs100[4]
        assert ops.upsample(g, 9, seed=0).node_count == g.node_count + 9

    def test_single_pixel_parent_duplicates(self):
        g = graph([rect(0, 4, 4, mean=7.0, vmin=7.0, vmax=7.0)], [])
        out = ops.upsample(g, 1, seed=5)
        child = out.nodes[1]
        assert (child.cx, child.cy, child.rx, child.ry) == (4, 4, 0, 0)
        assert child.v_mean == 7.0
        assert out.edges == ((0, 1),)

    def test_child_always_touches_parent(self, graphs100):
        g = graphs100[5]
        out = ops.upsample(g, 10, seed=3)
        for k in range(g.node_count, out.node_count):
            assert any(k in e for e in out.edges)


class TestExtractSubgraph:
    def test_full_canvas_identity(self, graphs100):
        g = graphs100[6]
        out = ops.extract_subgraph(g, (0, 0, g.width - 1, g.height - 1))
        assert graph_to_json(out) == graph_to_json(g)

    def test_empty_region_result(self):
        g = graph([rect(0, 20, 20)], [])
        out = ops.extract_subgraph(g, (0, 0, 5, 5))
        assert out.node_count == 0 and out.width == 6 and out.height == 6

    def test_split_overlap_pair(self):
        g = graph([rect(0, 2, 2, rx=2, ry=2), rect(1, 6, 2, rx=2, ry=2)], [(0, 1)])
        out = ops.extract_subgraph(g, (0, 0, 3, 4))
        assert out.node_count == 1 and out.edge_count == 0
        assert (out.nodes[0].cx, out.nodes[0].cy) == (2, 2)

    def test_translation(self):
        g = graph([rect(0, 10, 12, rx=1, ry=1)], [])
        out = ops.extract_subgraph(g, (8, 9, 14, 15))
        assert (out.nodes[0].cx, out.nodes[0].cy) == (2, 3)
        assert (out.width, out.height) == (7, 7)

    def test_idempotent(self, graphs100):
        g = graphs100[7]
        region = (3, 2, 20, 22)
        once = ops.extract_subgraph(g, region)
        twice = ops.extract_subgraph(once, (0, 0, once.width - 1, once.height - 1))
        assert graph_to_json(once) == graph_to_json(twice)

    def test_never_grows(self, graphs100):
        g = graphs100[8]
        out = ops.extract_subgraph(g, (4, 4, 20, 20))
        assert out.node_count <= g.node_count and out.edge_count <= g.edge_count

    def test_invalid_region(self):
        g = graph([rect(0, 1, 1)], [])
        with pytest.raises(ValueError):
            ops.extract_subgraph(g, (5, 0, 2, 2))
        with pytest.raises(ValueError):
            ops.extract_subgraph(g, (0, 0, 28, 5))
