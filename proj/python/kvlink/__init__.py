"""Python bindings for the kvlink latency model and optimizer."""

from ._kvlink import (
    Infeasible,
    KvNotDominant,
    LinkUnusable,
    ModelSpec,
    Workload,
    __version__,
    broadcast_rate,
    decision,
    derive_constants,
    kv_bits_per_token,
    multi_round,
    ofdma_rate,
    path_loss_db,
    ratio_sweep,
    single_round,
    validate,
)

__all__ = [
    "Infeasible",
    "KvNotDominant",
    "LinkUnusable",
    "ModelSpec",
    "Workload",
    "__version__",
    "broadcast_rate",
    "decision",
    "derive_constants",
    "kv_bits_per_token",
    "multi_round",
    "ofdma_rate",
    "path_loss_db",
    "ratio_sweep",
    "single_round",
    "validate",
]
