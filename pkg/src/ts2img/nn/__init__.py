"""Self-contained neural-network core: layers, models, training, checkpoints."""

from .checkpoint import build_provenance, load_checkpoint, load_manifest, save_checkpoint
from .gradcheck import GradCheckReport, check_model_gradients, relative_error
from .layers import (
    Activation,
    BatchNorm,
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool1D,
    MaxPool2D,
)
from .model import EVAL, TRAIN, FusionModel, Model, backprop, concat_backward, concat_forward
from .ops import (
    batchnorm_forward,
    conv_forward,
    dense_forward,
    dropout_forward,
    relu,
    sigmoid,
    softmax,
    softmax_xent,
)
from .train import History, TrainConfig, train

__all__ = [
    "Activation",
    "BatchNorm",
    "Conv1D",
    "Conv2D",
    "Dense",
    "Dropout",
    "EVAL",
    "Flatten",
    "FusionModel",
    "GradCheckReport",
    "History",
    "Layer",
    "MaxPool1D",
    "MaxPool2D",
    "Model",
    "TRAIN",
    "TrainConfig",
    "backprop",
    "batchnorm_forward",
    "build_provenance",
    "check_model_gradients",
    "concat_backward",
    "concat_forward",
    "conv_forward",
    "dense_forward",
    "dropout_forward",
    "load_checkpoint",
    "load_manifest",
    "relative_error",
    "relu",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "softmax_xent",
    "train",
]
