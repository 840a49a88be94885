"""GRIG container reader and in-memory graph batches.

Implements the binary contract directly (little-endian header ``GRIG`` /
version / feature_dim / class_count / reserved / graph_count, per-graph
label + float32 features + u32 edge pairs, CRC32 trailer).  Stored edges
are one direction (src < dst); loading symmetrizes them and adds a self
loop per node, which is what the attention layers expect.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"GRIG"
VERSION = 1
_HEADER = struct.Struct("<4sHHHHI")
_GRAPH_HEAD = struct.Struct("<HII")


class GrigLoadError(ValueError):
    """Base class for container failures."""


class GrigMagicError(GrigLoadError):
    pass


class GrigVersionError(GrigLoadError):
    pass


class GrigChecksumError(GrigLoadError):
    pass


class GrigTruncatedError(GrigLoadError):
    pass


class GrigInvariantError(GrigLoadError):
    pass


@dataclass
class LoadedGraph:
    label: int
    features: np.ndarray  # (n, F) float32
    edge_src: np.ndarray  # directed, symmetrized, with self loops
    edge_dst: np.ndarray

    @property
    def node_count(self) -> int:
        return self.features.shape[0]


@dataclass
class GraphBatch:
    """A whole dataset held in memory."""

    feature_dim: int
    class_count: int
    graphs: list[LoadedGraph]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.graphs)

    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.graphs], dtype=np.int64)


def _symmetrize(n: int, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    loops = np.arange(n, dtype=np.int64)
    if pairs.size:
        src = np.concatenate([pairs[:, 0], pairs[:, 1], loops])
        dst = np.concatenate([pairs[:, 1], pairs[:, 0], loops])
    else:
        src = dst = loops
    return src.astype(np.int64), dst.astype(np.int64)


def load_grig(source: str | Path | bytes) -> GraphBatch:
    """Parse, checksum-verify, and validate a GRIG container."""
    metadata = {}
    if isinstance(source, bytes):
        data = source
    else:
        path = Path(source)
        data = path.read_bytes()
        sidecar = path.with_name(path.name + ".meta.json")
        if sidecar.exists():
            metadata = json.loads(sidecar.read_text())

    if len(data) < _HEADER.size + 4:
        raise GrigTruncatedError(f"{len(data)} bytes is shorter than header + checksum")
    magic, version, feature_dim, class_count, _, graph_count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise GrigMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise GrigVersionError(f"unsupported version {version}")
    stored = struct.unpack_from("<I", data, len(data) - 4)[0]
    if stored != zlib.crc32(data[:-4]):
        raise GrigChecksumError("checksum mismatch")

    off = _HEADER.size
    end = len(data) - 4
    graphs = []
    for gi in range(graph_count):
        if off + _GRAPH_HEAD.size > end:
            raise GrigTruncatedError(f"graph {gi} header exceeds payload")
        label, n, e = _GRAPH_HEAD.unpack_from(data, off)
        off += _GRAPH_HEAD.size
        fbytes, ebytes = n * feature_dim * 4, e * 8
        if off + fbytes + ebytes > end:
            raise GrigTruncatedError(f"graph {gi} payload exceeds container")
        feats = np.frombuffer(data, dtype="<f4", count=n * feature_dim, offset=off).reshape(n, feature_dim).copy()
        off += fbytes
        pairs = np.frombuffer(data, dtype="<u4", count=e * 2, offset=off).reshape(-1, 2).astype(np.int64)
        off += ebytes
        if class_count and label >= class_count:
            raise GrigInvariantError(f"graph {gi} label {label} >= class_count {class_count}")
        if e:
            if pairs.max() >= n:
                raise GrigInvariantError(f"graph {gi} edge index out of range")
            if not (pairs[:, 0] < pairs[:, 1]).all():
                raise GrigInvariantError(f"graph {gi} edge not stored src < dst")
        src, dst = _symmetrize(n, pairs)
        graphs.append(LoadedGraph(int(label), feats, src, dst))
    if off != end:
        raise GrigTruncatedError(f"{end - off} trailing bytes before checksum")
    return GraphBatch(feature_dim, class_count, graphs, metadata)
