"""Self-contained test fixtures: a GRIG byte writer implementing the
container contract directly, plus procedural digit images for the
end-to-end pipeline test."""

from __future__ import annotations

import struct
import zlib

import numpy as np

SEG = {
    "A": ((0.0, 0.0), (1.0, 0.0)),
    "B": ((1.0, 0.0), (1.0, 0.5)),
    "C": ((1.0, 0.5), (1.0, 1.0)),
    "D": ((0.0, 1.0), (1.0, 1.0)),
    "E": ((0.0, 0.5), (0.0, 1.0)),
    "F": ((0.0, 0.0), (0.0, 0.5)),
    "G": ((0.0, 0.5), (1.0, 0.5)),
}
DIGITS = ["ABCDEF", "BC", "ABGED", "ABGCD", "FGBC", "AFGCD", "AFGEDC", "ABC", "ABCDEFG", "ABCDFG"]


def write_grig(graphs, feature_dim=10, class_count=10) -> bytes:
    """graphs: iterable of (label, features (n,F) float32, edges (m,2) u32)."""
    out = bytearray(struct.pack("<4sHHHHI", b"GRIG", 1, feature_dim, class_count, 0, len(graphs)))
    for label, feats, edges in graphs:
        feats = np.ascontiguousarray(feats, dtype=np.float32)
        edges = np.ascontiguousarray(edges, dtype=np.uint32).reshape(-1, 2)
        out += struct.pack("<HII", label, feats.shape[0], edges.shape[0])
        out += feats.tobytes()
        out += edges.tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def digit_idx_bytes(count: int, seed: int) -> tuple[bytes, bytes]:
    """28x28 seven-segment digit images in IDX format."""
    rng = np.random.Generator(np.random.PCG64(seed))
    side = 28
    yy, xx = np.mgrid[0:side, 0:side]
    images = np.empty((count, side, side), dtype=np.uint8)
    labels = np.empty(count, dtype=np.uint8)
    for i in range(count):
        digit = int(rng.integers(0, 10))
        canvas = np.maximum(rng.normal(6.0, 5.0, (side, side)), 0.0)
        ox, oy = 8.0 + rng.uniform(-2.5, 2.5), 5.0 + rng.uniform(-2.0, 2.0)
        sx, sy = 11.0 + rng.uniform(-2.0, 2.0), 17.0 + rng.uniform(-2.0, 2.0)
        thick = rng.uniform(1.1, 1.9)
        fg = rng.uniform(170.0, 250.0)
        for name in DIGITS[digit]:
            (ax, ay), (bx, by) = SEG[name]
            ax, ay = ox + ax * sx, oy + ay * sy
            bx, by = ox + bx * sx, oy + by * sy
            for t in np.linspace(0.0, 1.0, 24):
                px, py = ax + (bx - ax) * t, ay + (by - ay) * t
                canvas[(xx - px) ** 2 + (yy - py) ** 2 <= thick * thick] = fg
        canvas += rng.normal(0.0, 3.0, (side, side))
        images[i] = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
        labels[i] = digit
    img_b = struct.pack(">IIII", 0x803, count, side, side) + images.tobytes()
    lab_b = struct.pack(">II", 0x801, count) + labels.tobytes()
    return img_b, lab_b


def separable_graph(rng, label, class_count, feature_dim=10):
    """Chain graph whose feature slot 4 encodes the class band."""
    n = int(rng.integers(3, 12))
    feats = rng.uniform(0, 1, (n, feature_dim)).astype(np.float32)
    feats[:, 4] = label / class_count + rng.uniform(0, 1.0 / class_count, n)
    edges = np.array([(i, i + 1) for i in range(n - 1)], dtype=np.uint32).reshape(-1, 2)
    return label, feats, edges
