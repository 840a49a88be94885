"""Gradient-seeded adaptive rectangle growth.

The search picks the lowest-gradient unvisited pixel as a center and grows
an axis-aligned rectangle around it, one pixel per step, alternating x and
y.  Each gated step must keep region purity above a multiplicatively
rising threshold and variance below a fixed ceiling.  Coverage clamps at
the canvas: a step that cannot add pixels on an axis stops that axis
without consuming a threshold bump, so centers near a border still grow
toward the far edge.

Region statistics are maintained incrementally (integer running sum, sum
of squares, and abnormal-pixel count updated per added strip), which keeps
the whole-image search linear in covered pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .imaging import GradientMap, GrayImage, gaussian_smooth, gradient_magnitude

DEFAULT_PURITY = 0.85
DEFAULT_GRAY_DIFF = 10.0
DEFAULT_VARIANCE_CEILING = 400.0
DEFAULT_GROWTH = 1.005
DEFAULT_SIGMA = 1.0


@dataclass(frozen=True)
class SearchParams:
    """Knobs of the rectangle search.

    ``global_schedule`` carries the rising purity threshold across regions
    within one partition run instead of resetting it per region; kept for
    comparison, off by default.
    """

    p_thr: float = DEFAULT_PURITY
    thr1: float = DEFAULT_GRAY_DIFF
    var_thr: float = DEFAULT_VARIANCE_CEILING
    growth: float = DEFAULT_GROWTH
    sigma: float = DEFAULT_SIGMA
    global_schedule: bool = False

    def __post_init__(self):
        if not 0.0 < self.p_thr <= 1.0:
            raise ValueError(f"p_thr must be in (0, 1], got {self.p_thr}")
        if not 0.0 <= self.thr1 <= 255.0:
            raise ValueError(f"thr1 must be in [0, 255], got {self.thr1}")
        if self.var_thr < 0.0:
            raise ValueError(f"var_thr must be >= 0, got {self.var_thr}")
        if self.growth < 1.0:
            raise ValueError(f"growth must be >= 1, got {self.growth}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class GranularRect:
    """One structural block: center, half-extents, and region statistics.

    ``rx``/``ry`` count accepted growth steps; the pixels actually covered
    are the nominal box [cx-rx, cx+rx] x [cy-ry, cy+ry] clamped to the
    canvas (see ``covered_bounds``).  Statistics are over covered pixels.
    """

    id: int
    cx: int
    cy: int
    rx: int
    ry: int
    purity: float
    variance: float
    v_mean: float
    v_max: float
    v_min: float

    def covered_bounds(self, width: int, height: int) -> tuple[int, int, int, int]:
        """Clamped (x0, y0, x1, y1), inclusive pixel bounds."""
        return (
            max(0, self.cx - self.rx),
            max(0, self.cy - self.ry),
            min(width - 1, self.cx + self.rx),
            min(height - 1, self.cy + self.ry),
        )

    def covered_area(self, width: int, height: int) -> int:
        x0, y0, x1, y1 = self.covered_bounds(width, height)
        return (x1 - x0 + 1) * (y1 - y0 + 1)


@dataclass
class VisitMask:
    """Per-pixel visited flags; bits only flip False -> True during a run."""

    flags: np.ndarray

    @classmethod
    def blank(cls, width: int, height: int) -> "VisitMask":
        return cls(np.zeros((height, width), dtype=bool))

    def all_visited(self) -> bool:
        return bool(self.flags.all())


def _covered_block(img: GrayImage, cx: int, cy: int, rx: int, ry: int) -> np.ndarray:
    if rx < 0 or ry < 0:
        raise ValueError(f"half-extents must be non-negative, got rx={rx} ry={ry}")
    if not (0 <= cx < img.width and 0 <= cy < img.height):
        raise ValueError(
            f"rectangle center ({cx},{cy}) outside the {img.width}x{img.height} canvas"
        )
    return img.values[max(0, cy - ry) : cy + ry + 1, max(0, cx - rx) : cx + rx + 1]


def region_purity(img: GrayImage, cx: int, cy: int, rx: int, ry: int, thr1: float) -> float:
    """Fraction of region pixels whose absolute gray difference from the
    center pixel is within thr1.  The region is the rect's covered
    (canvas-clamped) pixel box."""
    block = _covered_block(img, cx, cy, rx, ry).astype(np.float64)
    center = float(img.values[cy, cx])
    abnormal = int(np.count_nonzero(np.abs(block - center) > thr1))
    return 1.0 - abnormal / block.size


def region_stats(img: GrayImage, cx: int, cy: int, rx: int, ry: int) -> tuple[float, float, float, float]:
    """(mean, population variance, min, max) over the covered pixels."""
    block = _covered_block(img, cx, cy, rx, ry).astype(np.float64)
    return float(block.mean()), float(block.var()), float(block.min()), float(block.max())


@njit(cache=True)
def _grow_core(v, w, h, cx, cy, t0, thr1, var_thr, growth):  # pragma: no cover - jitted
    fc = np.float64(v[cy, cx])
    x0 = cx
    x1 = cx
    y0 = cy
    y1 = cy
    c = np.int64(v[cy, cx])
    s = c
    q = c * c
    abn = np.int64(0)
    area = np.int64(1)
    vmin = c
    vmax = c
    rx = 0
    ry = 0
    t = t0
    stop_x = False
    stop_y = False
    x_turn = True
    while not (stop_x and stop_y):
        if stop_x:
            use_x = False
        elif stop_y:
            use_x = True
        else:
            use_x = x_turn
        ds = np.int64(0)
        dq = np.int64(0)
        dabn = np.int64(0)
        dn = np.int64(0)
        dmin = vmin
        dmax = vmax
        if use_x:
            nl = x0 - 1
            nr = x1 + 1
            ok_l = nl >= 0
            ok_r = nr <= w - 1
            if not ok_l and not ok_r:
                stop_x = True
            else:
                if ok_l:
                    for yy in range(y0, y1 + 1):
                        pv = np.int64(v[yy, nl])
                        ds += pv
                        dq += pv * pv
                        if abs(np.float64(pv) - fc) > thr1:
                            dabn += 1
                        if pv < dmin:
                            dmin = pv
                        if pv > dmax:
                            dmax = pv
                        dn += 1
                if ok_r:
                    for yy in range(y0, y1 + 1):
                        pv = np.int64(v[yy, nr])
                        ds += pv
                        dq += pv * pv
                        if abs(np.float64(pv) - fc) > thr1:
                            dabn += 1
                        if pv < dmin:
                            dmin = pv
                        if pv > dmax:
                            dmax = pv
                        dn += 1
                na = area + dn
                mean = np.float64(s + ds) / na
                purity = 1.0 - np.float64(abn + dabn) / na
                var = np.float64(q + dq) / na - mean * mean
                if purity < t or var > var_thr:
                    stop_x = True
                else:
                    s += ds
                    q += dq
                    abn += dabn
                    area = na
                    vmin = dmin
                    vmax = dmax
                    if ok_l:
                        x0 = nl
                    if ok_r:
                        x1 = nr
                    rx += 1
                t = t * growth
        else:
            nt = y0 - 1
            nb = y1 + 1
            ok_t = nt >= 0
            ok_b = nb <= h - 1
            if not ok_t and not ok_b:
                stop_y = True
            else:
                if ok_t:
                    for xx in range(x0, x1 + 1):
                        pv = np.int64(v[nt, xx])
                        ds += pv
                        dq += pv * pv
                        if abs(np.float64(pv) - fc) > thr1:
                            dabn += 1
                        if pv < dmin:
                            dmin = pv
                        if pv > dmax:
                            dmax = pv
                        dn += 1
                if ok_b:
                    for xx in range(x0, x1 + 1):
                        pv = np.int64(v[nb, xx])
                        ds += pv
                        dq += pv * pv
                        if abs(np.float64(pv) - fc) > thr1:
                            dabn += 1
                        if pv < dmin:
                            dmin = pv
                        if pv > dmax:
                            dmax = pv
                        dn += 1
                na = area + dn
                mean = np.float64(s + ds) / na
                purity = 1.0 - np.float64(abn + dabn) / na
                var = np.float64(q + dq) / na - mean * mean
                if purity < t or var > var_thr:
                    stop_y = True
                else:
                    s += ds
                    q += dq
                    abn += dabn
                    area = na
                    vmin = dmin
                    vmax = dmax
                    if ok_t:
                        y0 = nt
                    if ok_b:
                        y1 = nb
                    ry += 1
                t = t * growth
        x_turn = not use_x
    mean = np.float64(s) / area
    purity = 1.0 - np.float64(abn) / area
    var = np.float64(q) / area - mean * mean
    return rx, ry, purity, var, mean, np.float64(vmin), np.float64(vmax), t


@njit(cache=True)
def _partition_core(v, order, p_thr, thr1, var_thr, growth, global_schedule):  # pragma: no cover - jitted
    h, w = v.shape
    n = w * h
    visited = np.zeros(n, dtype=np.uint8)
    out = np.empty((n, 9), dtype=np.float64)
    count = 0
    t_carry = p_thr
    for oi in range(n):
        idx = order[oi]
        if visited[idx]:
            continue
        cy = idx // w
        cx = idx - cy * w
        t0 = t_carry if global_schedule else p_thr
        rx, ry, purity, var, mean, vmin, vmax, t_end = _grow_core(
            v, w, h, cx, cy, t0, thr1, var_thr, growth
        )
        t_carry = t_end
        x0 = max(0, cx - rx)
        x1 = min(w - 1, cx + rx)
        y0 = max(0, cy - ry)
        y1 = min(h - 1, cy + ry)
        for yy in range(y0, y1 + 1):
            base = yy * w
            for xx in range(x0, x1 + 1):
                visited[base + xx] = 1
        out[count, 0] = cx
        out[count, 1] = cy
        out[count, 2] = rx
        out[count, 3] = ry
        out[count, 4] = purity
        out[count, 5] = var
        out[count, 6] = mean
        out[count, 7] = vmin
        out[count, 8] = vmax
        count += 1
    return out[:count]


def _require_raw(img: GrayImage) -> np.ndarray:
    if img.values.dtype != np.uint8:
        raise TypeError("the rectangle search reads raw 8-bit intensities; got a real-valued image")
    return np.ascontiguousarray(img.values)


def _rect_from_row(row: np.ndarray, rect_id: int) -> GranularRect:
    return GranularRect(
        id=rect_id,
        cx=int(row[0]),
        cy=int(row[1]),
        rx=int(row[2]),
        ry=int(row[3]),
        purity=float(row[4]),
        variance=float(row[5]),
        v_mean=float(row[6]),
        v_min=float(row[7]),
        v_max=float(row[8]),
    )


def grow_region(img: GrayImage, center: tuple[int, int], params: SearchParams) -> GranularRect:
    """Grow one rectangle from ``center`` and return it with final statistics."""
    v = _require_raw(img)
    cx, cy = center
    if not (0 <= cx < img.width and 0 <= cy < img.height):
        raise ValueError(f"center {center} outside {img.width}x{img.height} canvas")
    rx, ry, purity, var, mean, vmin, vmax, _ = _grow_core(
        v, img.width, img.height, cx, cy, params.p_thr, params.thr1, params.var_thr, params.growth
    )
    return GranularRect(0, cx, cy, int(rx), int(ry), float(purity), float(var), float(mean), float(vmax), float(vmin))


def gradient_order(img: GrayImage, params: SearchParams) -> tuple[GradientMap, np.ndarray]:
    """Gradient map of the smoothed image plus flat pixel indices sorted by
    (magnitude ascending, row-major index ascending)."""
    smoothed = gaussian_smooth(img, params.sigma)
    grad = gradient_magnitude(smoothed)
    order = np.argsort(grad.magnitudes.ravel(), kind="stable")
    return grad, order


def partition(img: GrayImage, params: SearchParams | None = None) -> list[GranularRect]:
    """Cover the whole image with granular rectangles.

    Centers are taken in rising-gradient order from pixels not yet covered
    by any accepted rectangle; regions may overlap pixels covered earlier.
    Deterministic for fixed inputs.
    """
    params = params or SearchParams()
    v = _require_raw(img)
    _, order = gradient_order(img, params)
    rows = _partition_core(
        v, order, params.p_thr, params.thr1, params.var_thr, params.growth, params.global_schedule
    )
    return [_rect_from_row(rows[i], i) for i in range(rows.shape[0])]
