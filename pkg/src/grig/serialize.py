"""Persistence: canonical JSON for single graphs, GRIG binary for datasets.

GRIG layout (all little-endian):

    magic        4 bytes  b"GRIG"
    version      u16      1
    feature_dim  u16
    class_count  u16
    reserved     u16      0
    graph_count  u32
    per graph:
        label        u16
        node_count   u32
        edge_count   u32
        features     f32 x node_count*feature_dim, row-major
        edges        u32 pairs, src < dst, lexicographically sorted
    crc32        u32      over every preceding byte

The checksummed region contains nothing nondeterministic; run metadata
(source, parameters, timestamp) lives in a JSON sidecar next to the file.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .granular import GranularRect
from .graph import FEATURE_DIM, ImageGraph

GRIG_MAGIC = b"GRIG"
GRIG_VERSION = 1
_HEADER = struct.Struct("<4sHHHHI")
_GRAPH_HEAD = struct.Struct("<HII")


class GrigError(ValueError):
    """Base class for GRIG container failures."""


class GrigMagicError(GrigError):
    pass


class GrigVersionError(GrigError):
    pass


class GrigChecksumError(GrigError):
    pass


class GrigTruncatedError(GrigError):
    pass


class GrigInvariantError(GrigError):
    pass


class GraphJsonError(ValueError):
    """A graph JSON document is malformed or violates graph invariants."""


@dataclass(frozen=True)
class GraphRecord:
    """One labeled graph: float32 feature matrix plus u32 edge pairs."""

    label: int
    features: np.ndarray  # (node_count, feature_dim) float32
    edges: np.ndarray  # (edge_count, 2) uint32, src < dst, sorted

    @property
    def node_count(self) -> int:
        return self.features.shape[0]


@dataclass
class GraphDataset:
    feature_dim: int
    class_count: int
    graphs: list[GraphRecord]
    metadata: dict = field(default_factory=dict)


def graph_to_json(g: ImageGraph) -> str:
    """Canonical, byte-stable JSON for one graph (full rect fidelity)."""
    doc = {
        "format": "grig-graph",
        "version": 1,
        "width": g.width,
        "height": g.height,
        "nodes": [
            {
                "id": n.id,
                "cx": n.cx,
                "cy": n.cy,
                "rx": n.rx,
                "ry": n.ry,
                "purity": n.purity,
                "variance": n.variance,
                "v_mean": n.v_mean,
                "v_max": n.v_max,
                "v_min": n.v_min,
            }
            for n in g.nodes
        ],
        "edges": [[i, j] for i, j in g.edges],
        "features": None if g.features is None else [[float(x) for x in row] for row in g.features],
    }
    return json.dumps(doc, sort_keys=True, indent=1)


_NODE_KEYS = ("id", "cx", "cy", "rx", "ry", "purity", "variance", "v_mean", "v_max", "v_min")


def graph_from_json(text: str) -> ImageGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphJsonError(f"not valid JSON: {e}") from None
    if not isinstance(doc, dict) or doc.get("format") != "grig-graph":
        raise GraphJsonError("missing or unknown 'format' marker")
    if doc.get("version") != 1:
        raise GraphJsonError(f"unsupported graph document version {doc.get('version')!r}")
    try:
        width = int(doc["width"])
        height = int(doc["height"])
        raw_nodes = doc["nodes"]
        raw_edges = doc["edges"]
    except (KeyError, TypeError, ValueError) as e:
        raise GraphJsonError(f"malformed document: {e}") from None
    if width < 1 or height < 1:
        raise GraphJsonError(f"canvas {width}x{height} is not positive")

    nodes = []
    for k, raw in enumerate(raw_nodes):
        missing = [key for key in _NODE_KEYS if key not in raw]
        if missing:
            raise GraphJsonError(f"node {k} is missing keys {missing}")
        node = GranularRect(
            id=int(raw["id"]),
            cx=int(raw["cx"]),
            cy=int(raw["cy"]),
            rx=int(raw["rx"]),
            ry=int(raw["ry"]),
            purity=float(raw["purity"]),
            variance=float(raw["variance"]),
            v_mean=float(raw["v_mean"]),
            v_max=float(raw["v_max"]),
            v_min=float(raw["v_min"]),
        )
        if node.id != k:
            raise GraphJsonError(f"node at position {k} has id {node.id}; ids must be 0..n-1 in order")
        if node.rx < 0 or node.ry < 0:
            raise GraphJsonError(f"node {k} has negative half-extents ({node.rx},{node.ry})")
        if not (0 <= node.cx < width and 0 <= node.cy < height):
            raise GraphJsonError(f"node {k} center ({node.cx},{node.cy}) outside {width}x{height} canvas")
        nodes.append(node)

    n = len(nodes)
    edges = []
    seen = set()
    for raw in raw_edges:
        if len(raw) != 2:
            raise GraphJsonError(f"edge entry {raw!r} is not a pair")
        i, j = int(raw[0]), int(raw[1])
        for idx in (i, j):
            if not 0 <= idx < n:
                raise GraphJsonError(f"dangling edge ({i},{j}): node index {idx} out of range for {n} nodes")
        if i == j:
            raise GraphJsonError(f"self-loop edge ({i},{j})")
        if i > j:
            raise GraphJsonError(f"edge ({i},{j}) not stored as src < dst")
        if (i, j) in seen:
            raise GraphJsonError(f"duplicate edge ({i},{j})")
        seen.add((i, j))
        edges.append((i, j))
    if edges != sorted(edges):
        raise GraphJsonError("edges are not in canonical lexicographic order")

    features = doc.get("features")
    feat_arr = None
    if features is not None:
        if n == 0:
            if features:
                raise GraphJsonError(f"feature matrix present for 0 nodes")
            feat_arr = np.zeros((0, FEATURE_DIM), dtype=np.float64)
        else:
            feat_arr = np.asarray(features, dtype=np.float64)
            if feat_arr.ndim != 2 or feat_arr.shape[0] != n:
                raise GraphJsonError(f"feature matrix shape {feat_arr.shape} does not match {n} nodes")
    return ImageGraph(width, height, tuple(nodes), tuple(edges), feat_arr)


def record_from_graph(g: ImageGraph, label: int) -> GraphRecord:
    """Flatten a graph to its trainable form (float32 features, u32 edges)."""
    feats = g.features
    if feats is None:
        from .graph import feature_matrix

        feats = feature_matrix(g)
    edges = np.asarray(g.edges, dtype=np.uint32).reshape(-1, 2)
    return GraphRecord(int(label), feats.astype(np.float32), edges)


def dataset_from_graphs(
    graphs: list[ImageGraph],
    labels: list[int],
    class_count: int,
    metadata: dict | None = None,
) -> GraphDataset:
    if len(graphs) != len(labels):
        raise ValueError(f"{len(graphs)} graphs but {len(labels)} labels")
    records = [record_from_graph(g, lab) for g, lab in zip(graphs, labels)]
    return GraphDataset(FEATURE_DIM, class_count, records, dict(metadata or {}))


class _CrcWriter:
    def __init__(self, sink: BinaryIO):
        self.sink = sink
        self.crc = 0

    def write(self, data: bytes):
        self.sink.write(data)
        self.crc = zlib.crc32(data, self.crc)


def write_dataset(ds: GraphDataset, sink: str | Path | BinaryIO) -> None:
    """Write the binary container; for path sinks, metadata goes to a
    ``<path>.meta.json`` sidecar (outside the checksummed region)."""
    if isinstance(sink, (str, Path)):
        path = Path(sink)
        with open(path, "wb") as fh:
            _write_dataset_stream(ds, fh)
        if ds.metadata:
            path.with_name(path.name + ".meta.json").write_text(
                json.dumps(ds.metadata, sort_keys=True, indent=1)
            )
    else:
        _write_dataset_stream(ds, sink)


def _write_dataset_stream(ds: GraphDataset, fh: BinaryIO) -> None:
    if not 0 <= ds.feature_dim <= 0xFFFF:
        raise ValueError(f"feature_dim {ds.feature_dim} out of u16 range")
    if not 0 <= ds.class_count <= 0xFFFF:
        raise ValueError(f"class_count {ds.class_count} out of u16 range")
    w = _CrcWriter(fh)
    w.write(_HEADER.pack(GRIG_MAGIC, GRIG_VERSION, ds.feature_dim, ds.class_count, 0, len(ds.graphs)))
    for gi, rec in enumerate(ds.graphs):
        if not 0 <= rec.label < max(ds.class_count, 1):
            raise ValueError(f"graph {gi} label {rec.label} outside {ds.class_count} classes")
        feats = np.ascontiguousarray(rec.features, dtype=np.float32)
        if feats.ndim != 2 or feats.shape[1] != ds.feature_dim:
            raise ValueError(f"graph {gi} feature matrix {feats.shape} != (*, {ds.feature_dim})")
        edges = np.ascontiguousarray(rec.edges, dtype=np.uint32).reshape(-1, 2)
        if edges.size and not (edges[:, 0] < edges[:, 1]).all():
            raise ValueError(f"graph {gi} has an edge not ordered src < dst")
        w.write(_GRAPH_HEAD.pack(rec.label, feats.shape[0], edges.shape[0]))
        w.write(feats.tobytes())
        w.write(edges.tobytes())
    fh.write(struct.pack("<I", w.crc))


def read_dataset(source: str | Path | bytes | BinaryIO) -> GraphDataset:
    """Parse and fully validate a GRIG container."""
    sidecar = {}
    if isinstance(source, (str, Path)):
        path = Path(source)
        data = path.read_bytes()
        meta_path = path.with_name(path.name + ".meta.json")
        if meta_path.exists():
            sidecar = json.loads(meta_path.read_text())
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()

    if len(data) < _HEADER.size + 4:
        raise GrigTruncatedError(f"container of {len(data)} bytes is shorter than header + checksum")
    magic, version, feature_dim, class_count, reserved, graph_count = _HEADER.unpack_from(data, 0)
    if magic != GRIG_MAGIC:
        raise GrigMagicError(f"bad magic {magic!r}")
    if version != GRIG_VERSION:
        raise GrigVersionError(f"unsupported container version {version}")

    stored_crc = struct.unpack_from("<I", data, len(data) - 4)[0]
    actual_crc = zlib.crc32(data[:-4])
    if stored_crc != actual_crc:
        raise GrigChecksumError(f"checksum mismatch: stored 0x{stored_crc:08x}, computed 0x{actual_crc:08x}")

    body = memoryview(data)[: len(data) - 4]
    off = _HEADER.size
    graphs = []
    for gi in range(graph_count):
        if off + _GRAPH_HEAD.size > len(body):
            raise GrigTruncatedError(f"graph {gi} header exceeds container size")
        label, node_count, edge_count = _GRAPH_HEAD.unpack_from(body, off)
        off += _GRAPH_HEAD.size
        feat_bytes = node_count * feature_dim * 4
        edge_bytes = edge_count * 8
        if off + feat_bytes + edge_bytes > len(body):
            raise GrigTruncatedError(f"graph {gi} payload exceeds container size")
        feats = np.frombuffer(body, dtype="<f4", count=node_count * feature_dim, offset=off)
        feats = feats.reshape(node_count, feature_dim).copy()
        off += feat_bytes
        edges = np.frombuffer(body, dtype="<u4", count=edge_count * 2, offset=off).reshape(-1, 2).copy()
        off += edge_bytes
        if class_count and label >= class_count:
            raise GrigInvariantError(f"graph {gi} label {label} >= class_count {class_count}")
        if edge_count:
            if edges.max() >= node_count:
                raise GrigInvariantError(f"graph {gi} has an edge index >= node count {node_count}")
            if not (edges[:, 0] < edges[:, 1]).all():
                raise GrigInvariantError(f"graph {gi} has an edge not stored as src < dst")
        graphs.append(GraphRecord(int(label), feats, edges))
    if off != len(body):
        raise GrigTruncatedError(f"{len(body) - off} unexpected trailing bytes before checksum")
    return GraphDataset(feature_dim, class_count, graphs, sidecar)
