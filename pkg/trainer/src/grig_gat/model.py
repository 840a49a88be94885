"""Graph-attention classifier over batched node-feature graphs.

Attention follows the classic formulation: per-edge score
LeakyReLU(a_src . Wh_src + a_dst . Wh_dst), softmax over each
destination's incoming edges, weighted sum of transformed sources.
Blocks pair a single-head layer (to dim1) with a multi-head concatenated
layer (to heads * dim2), with an additive residual when widths line up.
Readout concatenates per-graph mean and max pooling into a linear
classifier.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .config import BlockSpec, GatConfig

LEAKY_SLOPE = 0.2


class GraphAttentionLayer(nn.Module):
    def __init__(self, in_dim: int, out_dim: int, heads: int):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.heads = heads
        self.weight = nn.Parameter(torch.empty(in_dim, heads * out_dim))
        self.att_src = nn.Parameter(torch.empty(heads, out_dim))
        self.att_dst = nn.Parameter(torch.empty(heads, out_dim))
        self.reset_parameters()

    def reset_parameters(self):
        gain = math.sqrt(2.0 / (1.0 + LEAKY_SLOPE**2))
        nn.init.xavier_uniform_(self.weight, gain=gain)
        nn.init.xavier_uniform_(self.att_src, gain=gain)
        nn.init.xavier_uniform_(self.att_dst, gain=gain)

    def forward(self, x: torch.Tensor, src: torch.Tensor, dst: torch.Tensor):
        n = x.shape[0]
        h = (x @ self.weight).view(n, self.heads, self.out_dim)
        score_src = (h * self.att_src).sum(-1)  # (n, H)
        score_dst = (h * self.att_dst).sum(-1)
        e = nn.functional.leaky_relu(score_src[src] + score_dst[dst], LEAKY_SLOPE)  # (E, H)

        # Numerically stable softmax grouped by destination node.
        idx = dst.unsqueeze(-1).expand_as(e)
        emax = torch.full((n, self.heads), float("-inf"), dtype=e.dtype, device=e.device)
        emax.scatter_reduce_(0, idx, e, reduce="amax", include_self=True)
        w = torch.exp(e - emax[dst])
        denom = torch.zeros(n, self.heads, dtype=e.dtype, device=e.device)
        denom.scatter_add_(0, idx, w)
        alpha = w / denom[dst].clamp_min(1e-16)

        out = torch.zeros(n, self.heads, self.out_dim, dtype=h.dtype, device=h.device)
        out.scatter_add_(0, idx.unsqueeze(-1).expand(-1, -1, self.out_dim), alpha.unsqueeze(-1) * h[src])
        return out.reshape(n, self.heads * self.out_dim), alpha


class GatBlock(nn.Module):
    def __init__(self, in_dim: int, spec: BlockSpec):
        super().__init__()
        self.first = GraphAttentionLayer(in_dim, spec.dim1, heads=1)
        self.second = GraphAttentionLayer(spec.dim1, spec.dim2, heads=spec.heads)
        self.residual = in_dim == spec.out_dim

    def forward(self, x, src, dst):
        h, _ = self.first(x, src, dst)
        h = nn.functional.elu(h)
        y, alpha = self.second(h, src, dst)
        if self.residual:
            y = y + x
        return nn.functional.elu(y), alpha


class GatClassifier(nn.Module):
    def __init__(self, feature_dim: int, class_count: int, cfg: GatConfig):
        super().__init__()
        blocks = []
        width = feature_dim
        for spec in cfg.blocks:
            blocks.append(GatBlock(width, spec))
            width = spec.out_dim
        self.blocks = nn.ModuleList(blocks)
        self.classifier = nn.Linear(2 * width, class_count)

    def forward(self, x, src, dst, graph_id, n_graphs, return_attention=False):
        alpha = None
        for block in self.blocks:
            x, alpha = block(x, src, dst)
        width = x.shape[1]
        idx = graph_id.unsqueeze(-1).expand(-1, width)
        mean_pool = torch.zeros(n_graphs, width, dtype=x.dtype, device=x.device)
        mean_pool.scatter_add_(0, idx, x)
        counts = torch.zeros(n_graphs, dtype=x.dtype, device=x.device)
        counts.scatter_add_(0, graph_id, torch.ones_like(graph_id, dtype=x.dtype))
        mean_pool = mean_pool / counts.clamp_min(1.0).unsqueeze(-1)
        max_pool = torch.full((n_graphs, width), float("-inf"), dtype=x.dtype, device=x.device)
        max_pool.scatter_reduce_(0, idx, x, reduce="amax", include_self=True)
        # Graphs with no nodes would otherwise pool to -inf.
        max_pool = torch.where(counts.unsqueeze(-1) > 0, max_pool, torch.zeros_like(max_pool))
        logits = self.classifier(torch.cat([mean_pool, max_pool], dim=1))
        if return_attention:
            return logits, alpha
        return logits


def build_model(feature_dim: int, class_count: int, cfg: GatConfig) -> GatClassifier:
    if class_count < 2:
        raise ValueError(f"need at least 2 classes, got {class_count}")
    torch.manual_seed(cfg.seed)
    return GatClassifier(feature_dim, class_count, cfg)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def expected_parameter_count(feature_dim: int, class_count: int, cfg: GatConfig) -> int:
    """Closed-form count for the block layout (used by the CLI table)."""
    total = 0
    width = feature_dim
    for b in cfg.blocks:
        total += width * b.dim1 + 2 * b.dim1  # single-head layer + its attention vectors
        total += b.heads * (b.dim1 * b.dim2 + 2 * b.dim2)
        width = b.out_dim
    total += 2 * width * class_count + class_count
    return total
