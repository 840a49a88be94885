"""Last-layer attention readout for region-importance inspection.

Per graph, each node's score is the mean (over heads and over directed
edges where the node is the source, self loop included) of the final
block's attention coefficients, then normalized to sum to 1 within the
graph.  High scores mark nodes whose features neighbors attend to most.
The CSV output (graph_index, node_id, score) feeds the converter's viz
command.
"""

from __future__ import annotations

import io

import numpy as np
import torch

from .data import LoadedGraph
from .model import GatClassifier
from .train import assemble


@torch.no_grad()
def attention_scores(model: GatClassifier, graph: LoadedGraph) -> np.ndarray:
    """Normalized per-node scores for one graph; sums to 1."""
    model.eval()
    x, src, dst, gid, _ = assemble([graph])
    _, alpha = model(x, src, dst, gid, 1, return_attention=True)
    per_edge = alpha.mean(dim=1)  # mean over heads
    n = graph.node_count
    sums = torch.zeros(n, dtype=per_edge.dtype)
    sums.scatter_add_(0, src, per_edge)
    counts = torch.zeros(n, dtype=per_edge.dtype)
    counts.scatter_add_(0, src, torch.ones_like(per_edge))
    scores = (sums / counts.clamp_min(1.0)).numpy()
    total = scores.sum()
    if total > 0:
        scores = scores / total
    model.train()
    return scores


def export_attention(model: GatClassifier, graphs: list[LoadedGraph], top_n: int) -> list[list[tuple[int, float]]]:
    """Top-n (node id, score) per graph, scores normalized per graph."""
    out = []
    for g in graphs:
        scores = attention_scores(model, g)
        order = np.argsort(-scores, kind="stable")[:top_n]
        out.append([(int(i), float(scores[i])) for i in order])
    return out


def attention_csv(rows: list[list[tuple[int, float]]]) -> str:
    buf = io.StringIO()
    buf.write("graph_index,node_id,score\n")
    for gi, entries in enumerate(rows):
        for node_id, score in entries:
            buf.write(f"{gi},{node_id},{score!r}\n")
    return buf.getvalue()
