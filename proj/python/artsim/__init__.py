"""Artist similarity embeddings: graph-convolutional metric learning."""

from ._core import (
    ArtistGraph,
    EvalReport,
    EvalRow,
    ModelConfig,
    ModelParams,
    Split,
    SyntheticConfig,
    TrainConfig,
    TrainResult,
    bundle_fingerprint,
    checkpoint_metadata,
    embed,
    evaluate,
    generate_synthetic,
    init_params,
    load_checkpoint,
    ndcg_at_k,
    read_bundle,
    save_checkpoint,
    train,
    write_bundle,
)

__all__ = [
    "ArtistGraph",
    "EvalReport",
    "EvalRow",
    "ModelConfig",
    "ModelParams",
    "Split",
    "SyntheticConfig",
    "TrainConfig",
    "TrainResult",
    "bundle_fingerprint",
    "checkpoint_metadata",
    "embed",
    "evaluate",
    "generate_synthetic",
    "init_params",
    "load_checkpoint",
    "ndcg_at_k",
    "read_bundle",
    "save_checkpoint",
    "train",
    "write_bundle",
]
