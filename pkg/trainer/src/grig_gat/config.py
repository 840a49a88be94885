"""Model and optimizer configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BlockSpec:
    """One attention block: first dimension, second dimension, head count.

    The first attention layer is single-head to ``dim1``; the second has
    ``heads`` heads of width ``dim2``, concatenated, so the block emits
    heads * dim2 channels.  This is the layout that reproduces the
    published parameter counts (within 8% on all four configurations).
    """

    dim1: int
    dim2: int
    heads: int

    @property
    def out_dim(self) -> int:
        return self.heads * self.dim2


@dataclass
class GatConfig:
    blocks: list[BlockSpec]
    lr_start: float = 0.4
    lr_floor: float = 0.005
    momentum: float = 0.9
    weight_decay: float = 8e-4
    batch_size: int = 96
    max_iterations: int = 20_000
    eval_every: int = 250
    plateau_patience: int = 3  # evals without improvement before lr /= 2
    seed: int = 0

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("at least one block is required")
        for b in self.blocks:
            if b.dim1 < 1 or b.dim2 < 1 or b.heads < 1:
                raise ValueError(f"invalid block spec {b}")


# Named presets mirroring the published configurations.
PRESETS: dict[str, list[BlockSpec]] = {
    "mnist-a": [BlockSpec(8, 8, 8), BlockSpec(8, 16, 4), BlockSpec(16, 24, 4)],
    "mnist-b": [BlockSpec(8, 16, 8), BlockSpec(16, 24, 4), BlockSpec(24, 32, 2)],
    "mnist-c": [BlockSpec(8, 16, 20), BlockSpec(16, 32, 16), BlockSpec(32, 48, 8)],
    "cifar-o": [BlockSpec(13, 16, 16), BlockSpec(16, 32, 8), BlockSpec(32, 64, 4)],
    "cifar-u2": [BlockSpec(13, 16, 16), BlockSpec(16, 32, 8), BlockSpec(32, 64, 4), BlockSpec(64, 128, 2)],
    "cifar-u4": [BlockSpec(13, 16, 24), BlockSpec(16, 32, 12), BlockSpec(32, 64, 6)],
}


def preset(name: str, **overrides) -> GatConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    return GatConfig(blocks=list(PRESETS[name]), **overrides)
