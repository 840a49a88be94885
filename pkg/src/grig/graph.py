"""Image graph construction: overlap edges and per-node feature vectors.

Two rectangles form an undirected edge when their pixel sets share at
least one pixel.  Edges are found with a divide-and-conquer sweep over
x-extents that stabs y-interval lists, so the work is O(m log m + |E|)
rather than all-pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .granular import GranularRect, SearchParams, partition
from .imaging import GrayImage

FEATURE_DIM = 10
DEGREE_CAP = 32


@dataclass(frozen=True)
class ImageGraph:
    """Nodes (rectangles, in id order), undirected overlap edges (i < j,
    lexicographically sorted), and the source canvas dimensions."""

    width: int
    height: int
    nodes: tuple[GranularRect, ...]
    edges: tuple[tuple[int, int], ...]
    features: np.ndarray | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"canvas must be at least 1x1, got {self.width}x{self.height}")
        for k, node in enumerate(self.nodes):
            if node.id != k:
                raise ValueError(f"node ids must be contiguous from 0; found {node.id} at position {k}")
        n = len(self.nodes)
        for i, j in self.edges:
            if not (0 <= i < j < n):
                raise ValueError(f"edge ({i},{j}) invalid for {n} nodes")

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(len(self.nodes), dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


def rect_overlap(a: GranularRect, b: GranularRect) -> bool:
    """True when the two rectangles share at least one pixel (closed
    intervals on both axes)."""
    return abs(a.cx - b.cx) <= a.rx + b.rx and abs(a.cy - b.cy) <= a.ry + b.ry


def _stab(group_a, group_b, xl, xr, yl, yr, out):
    # Merge-walk two rect-index lists sorted by low y edge, reporting pairs
    # whose half-open y-intervals overlap.  The split guarantees x-overlap
    # only up to coordinate ties, so each report re-checks x exactly.
    group_a = sorted(group_a, key=lambda k: yl[k])
    group_b = sorted(group_b, key=lambda k: yl[k])
    i = 0
    j = 0
    while i < len(group_a) and j < len(group_b):
        a = group_a[i]
        b = group_b[j]
        if yl[a] < yl[b]:
            k = j
            top = yr[a]
            while k < len(group_b) and yl[group_b[k]] < top:
                other = group_b[k]
                if other != a and xl[a] < xr[other] and xl[other] < xr[a]:
                    out.add((a, other) if a < other else (other, a))
                k += 1
            i += 1
        else:
            k = i
            top = yr[b]
            while k < len(group_a) and yl[group_a[k]] < top:
                other = group_a[k]
                if other != b and xl[b] < xr[other] and xl[other] < xr[b]:
                    out.add((b, other) if b < other else (other, b))
                k += 1
            j += 1


def _detect(entries, xl, xr, yl, yr, out):
    m = len(entries)
    if m < 2:
        return
    mid = m // 2
    left = entries[:mid]
    right = entries[mid:]
    x_lo = left[0][0]
    x_mid = left[-1][0]
    x_hi = right[-1][0]
    s11 = [k for _, k in left if xr[k] <= x_mid]
    s12 = [k for _, k in left if xr[k] >= x_hi]
    s22 = [k for _, k in right if xl[k] > x_mid]
    s21 = [k for _, k in right if xl[k] <= x_lo]
    _stab(s12, s22, xl, xr, yl, yr, out)
    _stab(s21, s11, xl, xr, yl, yr, out)
    _stab(s12, s21, xl, xr, yl, yr, out)
    _detect(left, xl, xr, yl, yr, out)
    _detect(right, xl, xr, yl, yr, out)


def build_edges(rects: list[GranularRect]) -> list[tuple[int, int]]:
    """All overlapping pairs, sorted lexicographically."""
    m = len(rects)
    if m < 2:
        return []
    # Half-open interval bounds; a shared pixel means strict overlap.
    xl = np.empty(m, dtype=np.int64)
    xr = np.empty(m, dtype=np.int64)
    yl = np.empty(m, dtype=np.int64)
    yr = np.empty(m, dtype=np.int64)
    for k, r in enumerate(rects):
        xl[k] = r.cx - r.rx
        xr[k] = r.cx + r.rx + 1
        yl[k] = r.cy - r.ry
        yr[k] = r.cy + r.ry + 1
    # The split logic needs distinct endpoint values, so the sweep runs on
    # endpoint ranks.  Right edges rank before left edges at equal value,
    # which keeps touching intervals non-overlapping; strict inequalities
    # survive ranking, so no true pair can be lost.
    raw = []
    for k in range(m):
        raw.append((int(xl[k]), 0, k))
        raw.append((int(xr[k]), -1, k))  # right edges first on value ties
    raw.sort()
    xl_rank = np.empty(m, dtype=np.int64)
    xr_rank = np.empty(m, dtype=np.int64)
    entries = []
    for rank, (_, kind, k) in enumerate(raw):
        if kind == 0:
            xl_rank[k] = rank
        else:
            xr_rank[k] = rank
        entries.append((rank, k))
    out: set[tuple[int, int]] = set()
    _detect(entries, xl_rank, xr_rank, yl, yr, out)
    # Exact closed-interval filter over the candidate set.
    result = [
        (i, j)
        for (i, j) in out
        if xl[i] < xr[j] and xl[j] < xr[i] and yl[i] < yr[j] and yl[j] < yr[i]
    ]
    return sorted(result)


def node_feature_vector(rect: GranularRect, degree: int, width: int, height: int) -> np.ndarray:
    """Fixed 10-slot node attribute vector, all entries in [0, 1].

    Layout: center x/y fractions, covered width/height fractions, mean,
    variance, max and min intensity (scaled), purity, capped degree.
    """
    x0, y0, x1, y1 = rect.covered_bounds(width, height)
    return np.array(
        [
            rect.cx / width,
            rect.cy / height,
            (x1 - x0 + 1) / width,
            (y1 - y0 + 1) / height,
            rect.v_mean / 255.0,
            rect.variance / (255.0 * 255.0),
            rect.v_max / 255.0,
            rect.v_min / 255.0,
            rect.purity,
            min(degree, DEGREE_CAP) / DEGREE_CAP,
        ],
        dtype=np.float64,
    )


def feature_matrix(graph: ImageGraph) -> np.ndarray:
    deg = graph.degrees()
    out = np.empty((graph.node_count, FEATURE_DIM), dtype=np.float64)
    for k, rect in enumerate(graph.nodes):
        out[k] = node_feature_vector(rect, int(deg[k]), graph.width, graph.height)
    return out


def with_features(graph: ImageGraph) -> ImageGraph:
    return ImageGraph(graph.width, graph.height, graph.nodes, graph.edges, feature_matrix(graph))


def build_graph(img: GrayImage, params: SearchParams | None = None, compute_features: bool = True) -> ImageGraph:
    """Partition the image and assemble the overlap graph."""
    rects = partition(img, params)
    edges = build_edges(rects)
    g = ImageGraph(img.width, img.height, tuple(rects), tuple(edges))
    return with_features(g) if compute_features else g
