"""Brute-force reference implementations and partition verification.

Everything here favors obviousness over speed and shares no computation
code with the production paths: edges come from literal pixel-set
intersection, statistics from plain accumulation loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .granular import GranularRect, SearchParams, VisitMask, _grow_core, grow_region
from .imaging import GrayImage, gaussian_smooth, gradient_magnitude

STAT_TOLERANCE = 1e-9


def _pixel_set(rect: GranularRect) -> frozenset[tuple[int, int]]:
    return frozenset(
        (x, y)
        for x in range(rect.cx - rect.rx, rect.cx + rect.rx + 1)
        for y in range(rect.cy - rect.ry, rect.cy + rect.ry + 1)
    )


def brute_edges(rects: list[GranularRect]) -> list[tuple[int, int]]:
    """Every overlapping pair, found by materializing and intersecting
    pixel sets; quadratic on purpose."""
    pix = [_pixel_set(r) for r in rects]
    out = []
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            if not pix[i].isdisjoint(pix[j]):
                out.append((i, j))
    return out


def brute_region_stats(
    img: GrayImage, rect: GranularRect, thr1: float
) -> tuple[float, float, float, float, float]:
    """(purity, mean, variance, min, max) over the rect's covered pixels,
    recomputed from scratch."""
    v = img.values
    x0, y0, x1, y1 = rect.covered_bounds(img.width, img.height)
    center = float(v[rect.cy, rect.cx])
    values = []
    abnormal = 0
    for y in range(y0, y1 + 1):
        for x in range(x0, x1 + 1):
            pv = float(v[y, x])
            values.append(pv)
            if abs(pv - center) > thr1:
                abnormal += 1
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((pv - mean) ** 2 for pv in values) / n
    purity = 1.0 - abnormal / n
    return purity, mean, var, min(values), max(values)


@dataclass(frozen=True)
class Violation:
    kind: str
    rect_id: int  # -1 for whole-partition problems
    detail: str


@dataclass
class PartitionReport:
    image_shape: tuple[int, int]
    rect_count: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        head = f"{self.rect_count} rects on {self.image_shape[1]}x{self.image_shape[0]}: "
        if self.ok:
            return head + "no violations"
        return head + f"{len(self.violations)} violations"


def verify_partition(
    img: GrayImage, params: SearchParams, rects: list[GranularRect]
) -> PartitionReport:
    """Check a partition result against every contract it must satisfy:
    coverage, bounds, statistics recomputation (within 1e-9), seed
    validity under the gradient ordering, and growth replay.

    Violations are data, not errors; the report lists each one with the
    offending rect id.
    """
    w, h = img.width, img.height
    report = PartitionReport((h, w), len(rects))
    bad = report.violations.append

    for pos, r in enumerate(rects):
        if r.id != pos:
            bad(Violation("id-order", r.id, f"id {r.id} at position {pos}"))

    # Bounds: seeds inside the canvas, sane extents, covered box non-empty.
    for r in rects:
        if not (0 <= r.cx < w and 0 <= r.cy < h):
            bad(Violation("bounds", r.id, f"center ({r.cx},{r.cy}) outside {w}x{h}"))
        elif r.rx < 0 or r.ry < 0:
            bad(Violation("bounds", r.id, f"negative extents ({r.rx},{r.ry})"))

    # Coverage: every pixel inside at least one covered box.
    cover = VisitMask.blank(w, h)
    for r in rects:
        x0, y0, x1, y1 = r.covered_bounds(w, h)
        cover.flags[y0 : y1 + 1, x0 : x1 + 1] = True
    uncovered = int(cover.flags.size - np.count_nonzero(cover.flags))
    if uncovered:
        bad(Violation("coverage", -1, f"{uncovered} pixels not covered by any rect"))

    # Statistics: stored values match a from-scratch recomputation.
    for r in rects:
        if not (0 <= r.cx < w and 0 <= r.cy < h):
            continue
        purity, mean, var, vmin, vmax = brute_region_stats(img, r, params.thr1)
        for name, stored, fresh in (
            ("purity", r.purity, purity),
            ("v_mean", r.v_mean, mean),
            ("variance", r.variance, var),
            ("v_min", r.v_min, vmin),
            ("v_max", r.v_max, vmax),
        ):
            if abs(stored - fresh) > STAT_TOLERANCE:
                bad(Violation("stats", r.id, f"{name} stored {stored!r} != recomputed {fresh!r}"))
        if not (r.v_min <= r.v_mean <= r.v_max):
            bad(Violation("stats", r.id, "v_min <= v_mean <= v_max violated"))

    # Seed validity: each center was unvisited when picked and had minimal
    # gradient (ties by row-major index) among then-unvisited pixels.
    grad = gradient_magnitude(gaussian_smooth(img, params.sigma)).magnitudes.ravel()
    visited = VisitMask.blank(w, h).flags.ravel()
    for r in rects:
        if not (0 <= r.cx < w and 0 <= r.cy < h):
            continue
        seed = r.cy * w + r.cx
        if visited[seed]:
            bad(Violation("seed", r.id, f"seed pixel ({r.cx},{r.cy}) already visited"))
        else:
            open_idx = np.flatnonzero(~visited)  # ascending, so argmin's first hit is the tie-break winner
            best = int(open_idx[np.argmin(grad[open_idx])])
            if seed != best:
                bad(
                    Violation(
                        "seed",
                        r.id,
                        f"seed ({r.cx},{r.cy}) grad {grad[seed]!r}; expected pixel "
                        f"({best % w},{best // w}) grad {grad[best]!r}",
                    )
                )
        x0, y0, x1, y1 = r.covered_bounds(w, h)
        flat = (np.arange(y0, y1 + 1)[:, None] * w + np.arange(x0, x1 + 1)[None, :]).ravel()
        visited[flat] = True

    # Replay: growing again from the stored center reproduces the rect.
    t_carry = params.p_thr
    raw = np.ascontiguousarray(img.values)
    for r in rects:
        if not (0 <= r.cx < w and 0 <= r.cy < h):
            continue
        if params.global_schedule:
            rx, ry, purity, var, _, _, _, t_carry = _grow_core(
                raw, w, h, r.cx, r.cy, t_carry, params.thr1, params.var_thr, params.growth
            )
            regrown = (int(rx), int(ry), float(purity), float(var))
        else:
            g = grow_region(img, (r.cx, r.cy), params)
            regrown = (g.rx, g.ry, g.purity, g.variance)
        if regrown != (r.rx, r.ry, r.purity, r.variance):
            bad(
                Violation(
                    "replay",
                    r.id,
                    f"stored (rx,ry,purity,var)=({r.rx},{r.ry},{r.purity!r},{r.variance!r})"
                    f" != regrown {regrown!r}",
                )
            )
    return report
