"""Geometric and sampling operations performed directly on image graphs.

All functions return new graphs; inputs are never mutated.  Rectangles
stay axis-aligned throughout: rotation transforms centers (swapping
extents on quarter turns), so arbitrary angles are an approximation that
keeps the original edge set.  Upsampling uses numpy's PCG64 generator, so
equal seeds reproduce bit-identical graphs on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .granular import GranularRect
from .graph import ImageGraph, rect_overlap, with_features

_EXACT_COS = {0: 1.0, 90: 0.0, 180: -1.0, 270: 0.0}
_EXACT_SIN = {0: 0.0, 90: 1.0, 180: 0.0, 270: -1.0}


@dataclass(frozen=True)
class TransformSpec:
    """Parsed description of one transform, as accepted by the CLI."""

    kind: str  # rotate | flip_vertical | flip_horizontal | upsample | downsample
    angle: float = 0.0
    center: tuple[float, float] | None = None
    count: int = 0
    seed: int = 0
    region: tuple[int, int, int, int] | None = None


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def _rebuild(
    g: ImageGraph,
    keep_nodes: list[GranularRect],
    keep_edges: set[tuple[int, int]],
    width: int | None = None,
    height: int | None = None,
) -> ImageGraph:
    """Reindex ids to 0..n-1 and recompute features when the input had them."""
    nodes = tuple(
        GranularRect(k, n.cx, n.cy, n.rx, n.ry, n.purity, n.variance, n.v_mean, n.v_max, n.v_min)
        for k, n in enumerate(keep_nodes)
    )
    out = ImageGraph(
        width if width is not None else g.width,
        height if height is not None else g.height,
        nodes,
        tuple(sorted(keep_edges)),
    )
    return with_features(out) if g.features is not None else out


def _remap_edges(edges, id_map) -> set[tuple[int, int]]:
    out = set()
    for i, j in edges:
        if i in id_map and j in id_map:
            a, b = id_map[i], id_map[j]
            out.add((a, b) if a < b else (b, a))
    return out


def rotate(g: ImageGraph, theta_degrees: float, center: tuple[float, float] | None = None) -> ImageGraph:
    """Rotate node centers about ``center`` (canvas center by default).

    Quarter-turn angles use exact +/-1/0 trig and swap rx/ry on 90/270;
    other angles round centers to the nearest pixel and keep extents.
    Nodes whose centers leave the canvas are dropped with their edges.
    """
    if center is None:
        center = ((g.width - 1) / 2.0, (g.height - 1) / 2.0)
    cx, cy = center
    q = theta_degrees % 360.0
    if q in _EXACT_COS:
        cos_t, sin_t = _EXACT_COS[q], _EXACT_SIN[q]
        swap = q in (90.0, 270.0)
    else:
        rad = math.radians(theta_degrees)
        cos_t, sin_t = math.cos(rad), math.sin(rad)
        swap = False

    kept = []
    id_map = {}
    for n in g.nodes:
        nx = (n.cx - cx) * cos_t + (n.cy - cy) * sin_t + cx
        ny = (n.cy - cy) * cos_t - (n.cx - cx) * sin_t + cy
        px, py = _round_half_up(nx), _round_half_up(ny)
        if not (0 <= px < g.width and 0 <= py < g.height):
            continue
        rx, ry = (n.ry, n.rx) if swap else (n.rx, n.ry)
        id_map[n.id] = len(kept)
        kept.append(GranularRect(0, px, py, rx, ry, n.purity, n.variance, n.v_mean, n.v_max, n.v_min))
    return _rebuild(g, kept, _remap_edges(g.edges, id_map))


def flip_vertical(g: ImageGraph, raw_formula: bool = False) -> ImageGraph:
    """Mirror centers across the horizontal midline: y' = (h-1) - y.

    ``raw_formula`` applies y' = h - y instead (no 0-index correction);
    centers pushed off the canvas are then dropped.
    """
    return _flip(g, vertical=True, raw_formula=raw_formula)


def flip_horizontal(g: ImageGraph, raw_formula: bool = False) -> ImageGraph:
    """Mirror centers across the vertical midline: x' = (w-1) - x."""
    return _flip(g, vertical=False, raw_formula=raw_formula)


def _flip(g: ImageGraph, vertical: bool, raw_formula: bool) -> ImageGraph:
    offset = 0 if raw_formula else 1
    kept = []
    id_map = {}
    for n in g.nodes:
        if vertical:
            px, py = n.cx, g.height - offset - n.cy
        else:
            px, py = g.width - offset - n.cx, n.cy
        if not (0 <= px < g.width and 0 <= py < g.height):
            continue
        id_map[n.id] = len(kept)
        kept.append(GranularRect(0, px, py, n.rx, n.ry, n.purity, n.variance, n.v_mean, n.v_max, n.v_min))
    return _rebuild(g, kept, _remap_edges(g.edges, id_map))


def _merge_pair(g: ImageGraph, nodes: list[GranularRect], edges: set[tuple[int, int]], i: int, j: int):
    a, b = nodes[i], nodes[j]
    ax0, ay0, ax1, ay1 = a.covered_bounds(g.width, g.height)
    bx0, by0, bx1, by1 = b.covered_bounds(g.width, g.height)
    area_a = (ax1 - ax0 + 1) * (ay1 - ay0 + 1)
    area_b = (bx1 - bx0 + 1) * (by1 - by0 + 1)
    total = area_a + area_b

    cx = _round_half_up((area_a * a.cx + area_b * b.cx) / total)
    cy = _round_half_up((area_a * a.cy + area_b * b.cy) / total)
    ux0, uy0 = min(ax0, bx0), min(ay0, by0)
    ux1, uy1 = max(ax1, bx1), max(ay1, by1)
    rx = (ux1 - ux0 + 1) // 2  # ceil of half the union span
    ry = (uy1 - uy0 + 1) // 2

    mean = (area_a * a.v_mean + area_b * b.v_mean) / total
    second = area_a * (a.variance + a.v_mean**2) + area_b * (b.variance + b.v_mean**2)
    variance = max(0.0, second / total - mean * mean)  # cancellation can dip a hair below zero
    purity = (area_a * a.purity + area_b * b.purity) / total
    merged = GranularRect(
        0, cx, cy, rx, ry, purity, variance, mean, max(a.v_max, b.v_max), min(a.v_min, b.v_min)
    )

    neighbors = set()
    for u, v in edges:
        if u in (i, j):
            neighbors.add(v)
        elif v in (i, j):
            neighbors.add(u)
    neighbors -= {i, j}

    # Merged node takes slot i; node j disappears and higher ids shift down.
    def shift(k: int) -> int:
        return k - 1 if k > j else k

    new_nodes = [merged if k == i else n for k, n in enumerate(nodes) if k != j]
    new_edges = set()
    for u, v in edges:
        if u in (i, j) or v in (i, j):
            continue
        a2, b2 = shift(u), shift(v)
        new_edges.add((a2, b2) if a2 < b2 else (b2, a2))
    mi = shift(i)
    for nb in neighbors:
        nb2 = shift(nb)
        new_edges.add((mi, nb2) if mi < nb2 else (nb2, mi))
    return new_nodes, new_edges


def downsample(g: ImageGraph, k: int) -> ImageGraph:
    """Merge the closest connected node pair, k times.

    Distance is Euclidean between centers over existing edges; ties pick
    the lexicographically lowest pair.  Merged statistics are pooled
    moments weighted by covered area (double-counting any shared pixels,
    as no image access is assumed).
    """
    if k >= g.node_count:
        raise ValueError(f"cannot merge {k} times with only {g.node_count} nodes")
    nodes = list(g.nodes)
    edges = set(g.edges)
    for _ in range(k):
        if not edges:
            raise ValueError("graph has no edges left to merge")
        best = None
        for i, j in sorted(edges):
            d = (nodes[i].cx - nodes[j].cx) ** 2 + (nodes[i].cy - nodes[j].cy) ** 2
            if best is None or d < best[0]:
                best = (d, i, j)
        _, i, j = best
        nodes, edges = _merge_pair(g, nodes, edges, i, j)
    return _rebuild(g, nodes, edges)


def upsample(g: ImageGraph, k: int, seed: int) -> ImageGraph:
    """Add k nodes, each a random sub-rectangle of a uniformly chosen
    existing node (children become candidate parents for later draws).

    Children inherit the parent's statistics; their edges are recomputed
    against every node.  Draw order per step: parent index, center x,
    center y, x extent, y extent, all from PCG64(seed).
    """
    if g.node_count < 1:
        raise ValueError("upsample needs at least one node")
    rng = np.random.Generator(np.random.PCG64(seed))
    nodes = list(g.nodes)
    edges = set(g.edges)
    for _ in range(k):
        parent = nodes[int(rng.integers(0, len(nodes)))]
        x0, y0, x1, y1 = parent.covered_bounds(g.width, g.height)
        ccx = int(rng.integers(x0, x1 + 1))
        ccy = int(rng.integers(y0, y1 + 1))
        crx = int(rng.integers(0, min(ccx - x0, x1 - ccx) + 1))
        cry = int(rng.integers(0, min(ccy - y0, y1 - ccy) + 1))
        child = GranularRect(
            len(nodes), ccx, ccy, crx, cry,
            parent.purity, parent.variance, parent.v_mean, parent.v_max, parent.v_min,
        )
        for other in nodes:
            if rect_overlap(child, other):
                edges.add((other.id, child.id))
        nodes.append(child)
    return _rebuild(g, nodes, edges)


def extract_subgraph(g: ImageGraph, region: tuple[int, int, int, int]) -> ImageGraph:
    """Nodes whose centers fall in the region, translated so the region's
    minimum corner becomes the origin; the new canvas is the region.

    Nominal extents are kept: coverage clamps at canvas edges, so the new
    canvas clips exactly at the region boundary.  Edges survive when both
    endpoints do; statistics keep their pre-clip values.
    """
    x0, y0, x1, y1 = region
    if not (0 <= x0 <= x1 < g.width and 0 <= y0 <= y1 < g.height):
        raise ValueError(f"region {region} invalid for {g.width}x{g.height} canvas")
    kept = []
    id_map = {}
    for n in g.nodes:
        if x0 <= n.cx <= x1 and y0 <= n.cy <= y1:
            id_map[n.id] = len(kept)
            kept.append(
                GranularRect(
                    0, n.cx - x0, n.cy - y0, n.rx, n.ry,
                    n.purity, n.variance, n.v_mean, n.v_max, n.v_min,
                )
            )
    return _rebuild(g, kept, _remap_edges(g.edges, id_map), width=x1 - x0 + 1, height=y1 - y0 + 1)


def apply_transform(g: ImageGraph, spec: TransformSpec) -> ImageGraph:
    if spec.kind == "rotate":
        return rotate(g, spec.angle, spec.center)
    if spec.kind == "flip_vertical":
        return flip_vertical(g)
    if spec.kind == "flip_horizontal":
        return flip_horizontal(g)
    if spec.kind == "upsample":
        return upsample(g, spec.count, spec.seed)
    if spec.kind == "downsample":
        return downsample(g, spec.count)
    if spec.kind == "subgraph":
        return extract_subgraph(g, spec.region)
    raise ValueError(f"unknown transform kind {spec.kind!r}")
