"""Toy-scale flow-matching trainer for the melstream engine."""

from .dataset import DatasetSpec, corpus_hash, make_toy_dataset
from .torchnet import BlockNet, build_torch_net, tau_embedding
from .train import TrainConfig, export_bundle, lr_at, prepare_frames, train

__all__ = [
    "BlockNet",
    "DatasetSpec",
    "TrainConfig",
    "build_torch_net",
    "corpus_hash",
    "export_bundle",
    "lr_at",
    "make_toy_dataset",
    "prepare_frames",
    "tau_embedding",
    "train",
]

__version__ = "0.1.0"
