"""Graph-attention classification baseline over GRIG graph datasets."""

from .attention import attention_csv, attention_scores, export_attention
from .config import PRESETS, BlockSpec, GatConfig, preset
from .data import GraphBatch, GrigLoadError, LoadedGraph, load_grig
from .model import GatClassifier, build_model, expected_parameter_count, parameter_count
from .train import TrainReport, evaluate, train_eval

__version__ = "0.1.0"

__all__ = [
    "BlockSpec",
    "GatClassifier",
    "GatConfig",
    "GraphBatch",
    "GrigLoadError",
    "LoadedGraph",
    "PRESETS",
    "TrainReport",
    "attention_csv",
    "attention_scores",
    "build_model",
    "evaluate",
    "expected_parameter_count",
    "export_attention",
    "load_grig",
    "parameter_count",
    "preset",
    "train_eval",
]
