"""Seeded training loop: momentum SGD with plateau-halved learning rate."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .config import GatConfig
from .data import GraphBatch, LoadedGraph
from .model import GatClassifier, build_model, parameter_count


def _pin_single_thread():
    # Parallel scatter-adds accumulate in nondeterministic order; a single
    # op thread keeps seeded reruns bit-stable (and is faster at these
    # graph sizes anyway).
    if torch.get_num_threads() != 1:
        torch.set_num_threads(1)


@dataclass
class EvalPoint:
    iteration: int
    lr: float
    train_acc: float
    test_acc: float


@dataclass
class TrainReport:
    param_count: int
    history: list[EvalPoint] = field(default_factory=list)
    final_train_acc: float = 0.0
    final_test_acc: float = 0.0
    best_test_acc: float = 0.0
    wall_time_s: float = 0.0
    iterations_run: int = 0
    diverged: bool = False
    seed: int = 0

    def to_json(self) -> str:
        doc = {
            "param_count": self.param_count,
            "final_train_acc": self.final_train_acc,
            "final_test_acc": self.final_test_acc,
            "best_test_acc": self.best_test_acc,
            "wall_time_s": self.wall_time_s,
            "iterations_run": self.iterations_run,
            "diverged": self.diverged,
            "seed": self.seed,
            "history": [
                {"iteration": p.iteration, "lr": p.lr, "train_acc": p.train_acc, "test_acc": p.test_acc}
                for p in self.history
            ],
        }
        return json.dumps(doc, indent=1)


def assemble(graphs: list[LoadedGraph]):
    """Concatenate graphs into one disjoint-union tensor batch."""
    feats, srcs, dsts, gids, labels = [], [], [], [], []
    offset = 0
    for gi, g in enumerate(graphs):
        n = g.node_count
        feats.append(g.features)
        srcs.append(g.edge_src + offset)
        dsts.append(g.edge_dst + offset)
        gids.append(np.full(n, gi, dtype=np.int64))
        labels.append(g.label)
        offset += n
    x = torch.from_numpy(np.concatenate(feats).astype(np.float32))
    src = torch.from_numpy(np.concatenate(srcs))
    dst = torch.from_numpy(np.concatenate(dsts))
    gid = torch.from_numpy(np.concatenate(gids))
    y = torch.tensor(labels, dtype=torch.int64)
    return x, src, dst, gid, y


@torch.no_grad()
def evaluate(model: GatClassifier, graphs: list[LoadedGraph], chunk: int = 512) -> float:
    """Top-1 accuracy in percent."""
    _pin_single_thread()
    model.eval()
    correct = 0
    for lo in range(0, len(graphs), chunk):
        part = graphs[lo : lo + chunk]
        x, src, dst, gid, y = assemble(part)
        logits = model(x, src, dst, gid, len(part))
        correct += int((logits.argmax(dim=1) == y).sum())
    model.train()
    return 100.0 * correct / max(1, len(graphs))


def train_eval(train_batch: GraphBatch, test_batch: GraphBatch, cfg: GatConfig) -> tuple[GatClassifier, TrainReport]:
    """Train a classifier and report accuracy over time.

    Deterministic for a fixed seed on a fixed backend: batch order comes
    from a PCG64 stream and the model from torch.manual_seed.  Training
    aborts (report.diverged) if the loss stops being finite.
    """
    _pin_single_thread()
    if train_batch.feature_dim != test_batch.feature_dim:
        raise ValueError("train/test feature dimensions differ")
    if not train_batch.graphs:
        raise ValueError("training set is empty")
    class_count = max(train_batch.class_count, 2)
    model = build_model(train_batch.feature_dim, class_count, cfg)
    report = TrainReport(param_count=parameter_count(model), seed=cfg.seed)

    opt = torch.optim.SGD(
        model.parameters(), lr=cfg.lr_start, momentum=cfg.momentum, weight_decay=cfg.weight_decay
    )
    loss_fn = nn.CrossEntropyLoss()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    graphs = train_batch.graphs
    batch_size = min(cfg.batch_size, len(graphs))
    order = rng.permutation(len(graphs))
    cursor = 0

    # Fixed subsample keeps the train-accuracy probe cheap on big sets.
    probe_idx = rng.permutation(len(graphs))[: min(len(graphs), 2000)]
    probe = [graphs[i] for i in probe_idx]

    lr = cfg.lr_start
    best = -1.0
    stale = 0
    t0 = time.perf_counter()
    it = 0
    while it < cfg.max_iterations:
        if cursor + batch_size > len(order):
            order = rng.permutation(len(graphs))
            cursor = 0
        take = order[cursor : cursor + batch_size]
        cursor += batch_size
        x, src, dst, gid, y = assemble([graphs[i] for i in take])
        logits = model(x, src, dst, gid, len(take))
        loss = loss_fn(logits, y)
        if not torch.isfinite(loss):
            report.diverged = True
            break
        opt.zero_grad()
        loss.backward()
        opt.step()
        it += 1

        if it % cfg.eval_every == 0 or it == cfg.max_iterations:
            test_acc = evaluate(model, test_batch.graphs)
            train_acc = evaluate(model, probe)
            report.history.append(EvalPoint(it, lr, train_acc, test_acc))
            if test_acc > best + 1e-9:
                best = test_acc
                stale = 0
            else:
                stale += 1
                if stale >= cfg.plateau_patience and lr > cfg.lr_floor:
                    lr = max(cfg.lr_floor, lr / 2.0)
                    for group in opt.param_groups:
                        group["lr"] = lr
                    stale = 0

    report.iterations_run = it
    report.wall_time_s = time.perf_counter() - t0
    report.final_test_acc = evaluate(model, test_batch.graphs)
    report.final_train_acc = evaluate(model, probe)
    report.best_test_acc = max(best, report.final_test_acc)
    return model, report
