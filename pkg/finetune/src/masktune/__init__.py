"""masktune: masked-LM fine-tuning from precomputed mask datasets + fill-mask serving."""

__version__ = "0.1.0"

from masktune.errors import DatasetError, MasktuneError, SpecError
from masktune.training import TrainReport, TrainSpec, extend_vocab, train

__all__ = [
    "DatasetError",
    "MasktuneError",
    "SpecError",
    "TrainReport",
    "TrainSpec",
    "extend_vocab",
    "train",
]
