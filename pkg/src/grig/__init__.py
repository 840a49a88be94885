"""Granular-rectangle image graphs.

Converts raster images into multi-granularity structural graphs: adaptive
gradient-seeded rectangle growth, overlap edges, fixed-width node feature
vectors, graph-level geometric ops, and a verifiable binary dataset
container for downstream training.
"""

from .granular import GranularRect, SearchParams, grow_region, partition, region_purity, region_stats
from .graph import FEATURE_DIM, ImageGraph, build_edges, build_graph, node_feature_vector, rect_overlap
from .imaging import (
    GradientMap,
    GradientOp,
    GrayImage,
    RgbImage,
    decode_cifar10,
    decode_mnist_idx,
    encode_mnist_idx,
    gaussian_smooth,
    gradient_magnitude,
    to_grayscale,
)
from .ops import downsample, extract_subgraph, flip_horizontal, flip_vertical, rotate, upsample
from .serialize import (
    GraphDataset,
    GraphRecord,
    dataset_from_graphs,
    graph_from_json,
    graph_to_json,
    read_dataset,
    write_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "FEATURE_DIM",
    "GradientMap",
    "GradientOp",
    "GranularRect",
    "GraphDataset",
    "GraphRecord",
    "GrayImage",
    "ImageGraph",
    "RgbImage",
    "SearchParams",
    "build_edges",
    "build_graph",
    "dataset_from_graphs",
    "decode_cifar10",
    "decode_mnist_idx",
    "downsample",
    "encode_mnist_idx",
    "extract_subgraph",
    "flip_horizontal",
    "flip_vertical",
    "gaussian_smooth",
    "gradient_magnitude",
    "graph_from_json",
    "graph_to_json",
    "grow_region",
    "node_feature_vector",
    "partition",
    "read_dataset",
    "rect_overlap",
    "region_purity",
    "region_stats",
    "rotate",
    "to_grayscale",
    "upsample",
    "write_dataset",
]
