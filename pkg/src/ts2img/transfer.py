"""Architecture builders and the two transfer protocols.

build_cnn1d produces the default raw-signal classifier: per block Conv1D,
batch norm, relu, dropout, then max pooling (dropout sits before pooling on
purpose), followed by a flatten, a relu dense stage, and a softmax head.
build_cnn2d is the image-branch analogue. transfer_head imports a trained
base without its classification head, freezes the requested depth, and
appends a fresh seeded head. build_fusion joins an image branch and a
raw-signal branch by feature concatenation under a shared head that trains
end-to-end while respecting per-branch freezing.

The synthetic task builders at the bottom stand in for private recordings:
they create image-texture classification sources, windowed signal tasks,
and a two-modality task whose label is the XOR of one bit carried only by
the image and one bit carried only by the raw signal.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encode import GASF, encode_series
from .errors import ConfigError, PlanError, ShapeError
from .nn import (
    Activation,
    BatchNorm,
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    FusionModel,
    MaxPool1D,
    MaxPool2D,
    Model,
    load_checkpoint,
)
from .nn.layers import Layer


@dataclass
class ArchSpec1D:
    """Shape of the 1-D convolutional classifier.

    conv_blocks lists (filters, kernel, stride) per block. Every block is
    Conv1D -> BatchNorm -> relu -> Dropout -> MaxPool, with batch norm and
    dropout omitted when disabled.
    """

    conv_blocks: tuple[tuple[int, int, int], ...] = ((32, 7, 1), (64, 5, 1))
    batch_norm: bool = True
    dropout_rate: float = 0.5
    pool: int = 2
    dense: tuple[int, ...] = (64,)
    n_classes: int = 2

    def validate(self) -> None:
        if not self.conv_blocks:
            raise ConfigError("at least one conv block is required")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {self.dropout_rate}")
        if self.pool < 1:
            raise ConfigError(f"pool must be >= 1, got {self.pool}")
        if self.n_classes < 2:
            raise ConfigError(f"n_classes must be >= 2, got {self.n_classes}")


@dataclass
class ArchSpec2D:
    """Shape of the 2-D convolutional image branch."""

    conv_blocks: tuple[tuple[int, int, int], ...] = ((8, 5, 2), (16, 3, 1))
    batch_norm: bool = True
    dropout_rate: float = 0.25
    pool: int = 2
    dense: tuple[int, ...] = (32,)
    n_classes: int = 2

    validate = ArchSpec1D.validate


def _conv_blocks_1d(spec: ArchSpec1D) -> list[Layer]:
    layers: list[Layer] = []
    for i, (filters, kernel, stride) in enumerate(spec.conv_blocks, start=1):
        layers.append(Conv1D(filters, kernel, stride, init="he", name=f"block{i}_conv"))
        if spec.batch_norm:
            layers.append(BatchNorm(name=f"block{i}_bn"))
        layers.append(Activation("relu", name=f"block{i}_relu"))
        if spec.dropout_rate > 0:
            layers.append(Dropout(spec.dropout_rate, name=f"block{i}_drop"))
        layers.append(MaxPool1D(spec.pool, name=f"block{i}_pool"))
    return layers


def _conv_blocks_2d(spec: ArchSpec2D) -> list[Layer]:
    layers: list[Layer] = []
    for i, (filters, kernel, stride) in enumerate(spec.conv_blocks, start=1):
        layers.append(Conv2D(filters, kernel, stride, init="he", name=f"block{i}_conv"))
        if spec.batch_norm:
            layers.append(BatchNorm(name=f"block{i}_bn"))
        layers.append(Activation("relu", name=f"block{i}_relu"))
        if spec.dropout_rate > 0:
            layers.append(Dropout(spec.dropout_rate, name=f"block{i}_drop"))
        layers.append(MaxPool2D(spec.pool, name=f"block{i}_pool"))
    return layers


def _dense_feature_layers(widths, prefix: str = "dense") -> list[Layer]:
    layers: list[Layer] = [Flatten(name="flatten")]
    for j, width in enumerate(widths, start=1):
        layers.append(Dense(width, init="he", name=f"{prefix}{j}"))
        layers.append(Activation("relu", name=f"{prefix}{j}_relu"))
    return layers


def _head_layers(n_classes: int, prefix: str = "head") -> list[Layer]:
    return [
        Dense(n_classes, init="glorot", name=prefix),
        Activation("softmax", name=f"{prefix}_softmax"),
    ]


def build_cnn1d(
    spec: ArchSpec1D, input_shape=(100, 3), seed: int = 0, dtype=np.float32
) -> Model:
    """The default raw-signal classifier over [window, channels] inputs.

    Raises a shape error during construction when the receptive field of
    any block no longer fits the shrinking sequence.
    """
    spec.validate()
    layers = _conv_blocks_1d(spec) + _dense_feature_layers(spec.dense) + _head_layers(
        spec.n_classes
    )
    return Model(layers, input_shape, seed=seed, dtype=dtype)


def build_cnn2d(
    spec: ArchSpec2D, input_shape=(100, 100, 3), seed: int = 0, dtype=np.float32
) -> Model:
    """The image classifier over [side, side, planes] stacks."""
    spec.validate()
    layers = _conv_blocks_2d(spec) + _dense_feature_layers(spec.dense) + _head_layers(
        spec.n_classes
    )
    return Model(layers, input_shape, seed=seed, dtype=dtype)


ALL_BUT_HEAD = "all-but-head"


@dataclass
class TransferPlan:
    """How to re-purpose a trained base for a new label set.

    freeze is either "all-but-head" (every imported layer frozen) or an
    integer count of leading layers to freeze; new_head lists the widths of
    fresh relu dense layers inserted before the new softmax classifier.
    """

    base_checkpoint: str | Path
    freeze: int | str = ALL_BUT_HEAD
    new_head: tuple[int, ...] = (64,)


def strip_classifier(layers: list[Layer]) -> list[Layer]:
    """Drop the final Dense classifier and everything after it."""
    last_dense = None
    for i, layer in enumerate(layers):
        if isinstance(layer, Dense):
            last_dense = i
    if last_dense is None:
        raise PlanError("base model has no dense classifier to replace")
    trunk = layers[:last_dense]
    if not trunk:
        raise PlanError("stripping the classifier leaves the base model empty")
    return trunk


def transfer_head(plan: TransferPlan, n_classes_target: int, seed: int = 0) -> Model:
    """Import a base checkpoint without its classifier and add a new head.

    Imported parameters are copied bitwise; frozen layers are marked
    untrainable (batch-norm layers then hold their running statistics
    still). The new head gets a fresh init from the given seed.
    """
    if n_classes_target < 2:
        raise PlanError(f"target class count must be >= 2, got {n_classes_target}")
    base = load_checkpoint(plan.base_checkpoint)
    if isinstance(base, FusionModel):
        raise PlanError("transfer_head expects a sequential base model")
    trunk = [copy.deepcopy(layer) for layer in strip_classifier(base.layers)]
    if plan.freeze == ALL_BUT_HEAD:
        n_frozen = len(trunk)
    else:
        n_frozen = int(plan.freeze)
        if not 0 <= n_frozen <= len(trunk):
            raise PlanError(
                f"cannot freeze {n_frozen} layers: the imported trunk has {len(trunk)}"
            )
    for layer in trunk[:n_frozen]:
        layer.trainable = False
    for layer in trunk[n_frozen:]:
        layer.trainable = True
    head: list[Layer] = []
    for j, width in enumerate(plan.new_head, start=1):
        head.append(Dense(width, init="he", name=f"tl_dense{j}"))
        head.append(Activation("relu", name=f"tl_dense{j}_relu"))
    head += _head_layers(n_classes_target, prefix="tl_head")
    return Model(trunk + head, base.input_shape, seed=seed, dtype=base.dtype)


def freeze_model(model: Model) -> Model:
    """Mark every layer untrainable (used for fusion branch freezing)."""
    for layer in model.layers:
        layer.trainable = False
    return model


@dataclass
class FusionSpec:
    """Two feature branches plus the shared head trained on top."""

    branch_image: Model
    branch_raw: Model
    head: tuple[int, ...] = (32,)
    n_classes: int = 2
    seed: int = 0


def build_fusion(spec: FusionSpec) -> FusionModel:
    """Join the two branches by concatenation under a fresh seeded head."""
    if spec.n_classes < 2:
        raise ConfigError(f"n_classes must be >= 2, got {spec.n_classes}")
    head: list[Layer] = []
    for j, width in enumerate(spec.head, start=1):
        head.append(Dense(width, init="he", name=f"fusion_dense{j}"))
        head.append(Activation("relu", name=f"fusion_dense{j}_relu"))
    head += _head_layers(spec.n_classes, prefix="fusion_head")
    return FusionModel(spec.branch_image, spec.branch_raw, head, seed=spec.seed)


def feature_trunk(model: Model) -> list[Layer]:
    """The layers a transfer keeps: everything before the classifier."""
    return strip_classifier(model.layers)


def make_feature_branch(base: Model) -> Model:
    """Copy a trained model, drop its classifier, freeze what remains."""
    trunk = [copy.deepcopy(layer) for layer in strip_classifier(base.layers)]
    for layer in trunk:
        layer.trainable = False
    return Model(trunk, base.input_shape, seed=base.seed, dtype=base.dtype)


def pretrain_source_2d(images, labels, spec: ArchSpec2D | None = None, cfg=None, seed: int = 0):
    """Train the image-branch source model on an encoded-image task.

    Returns (model, history). Divergence during training propagates.
    """
    from .nn import TrainConfig, train

    images = np.asarray(images)
    if images.ndim != 4:
        raise ShapeError(
            f"images must be [n, side, side, planes], got shape {images.shape}"
        )
    labels = np.asarray(labels)
    n_classes = int(labels.max()) + 1
    spec = spec or ArchSpec2D(n_classes=n_classes)
    if spec.n_classes != n_classes:
        spec = ArchSpec2D(
            conv_blocks=spec.conv_blocks,
            batch_norm=spec.batch_norm,
            dropout_rate=spec.dropout_rate,
            pool=spec.pool,
            dense=spec.dense,
            n_classes=n_classes,
        )
    model = build_cnn2d(spec, input_shape=images.shape[1:], seed=seed)
    history = train(model, images, labels, cfg or TrainConfig(seed=seed))
    return model, history


# ---------------------------------------------------------------------------
# Synthetic task builders (no private recordings required)
# ---------------------------------------------------------------------------


def make_signal_windows(
    n_windows: int,
    n_classes: int,
    length: int = 100,
    n_channels: int = 3,
    seed: int = 0,
    base_freq: float = 1.0,
    freq_step: float = 0.35,
    noise_sigma: float = 0.35,
    class_offset: float = 0.0,
):
    """Windows whose class is coded by carrier frequency.

    Class c uses frequency base_freq * (1 + freq_step * (c + class_offset))
    cycles per window; channels share the frequency but differ in phase and
    amplitude. Returns (x [n, length, channels] float32, y [n] int64).
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length, dtype=np.float64) / length
    y = rng.integers(0, n_classes, size=n_windows)
    x = np.empty((n_windows, length, n_channels), dtype=np.float32)
    for i in range(n_windows):
        freq = base_freq * (1.0 + freq_step * (y[i] + class_offset))
        for c in range(n_channels):
            phase = rng.uniform(0.0, 2.0 * math.pi)
            amp = 1.0 + 0.3 * c
            wave = amp * np.sin(2.0 * math.pi * freq * t + phase)
            x[i, :, c] = wave + rng.normal(0.0, noise_sigma, size=length)
    return x, y.astype(np.int64)


def make_texture_images(
    n_images: int,
    n_classes: int = 3,
    side: int = 32,
    n_planes: int = 3,
    method: str = GASF,
    seed: int = 0,
    freq_step: float = 0.6,
    noise_sigma: float = 0.2,
    class_offset: float = 0.0,
):
    """Encoded-image textures whose class is coded by carrier frequency.

    Each image encodes n_planes phase-shifted sinusoids of the class
    frequency. Returns (x [n, side, side, planes] float32, y [n] int64).
    """
    rng = np.random.default_rng(seed)
    t = np.arange(side, dtype=np.float64) / side
    y = rng.integers(0, n_classes, size=n_images)
    x = np.empty((n_images, side, side, n_planes), dtype=np.float32)
    for i in range(n_images):
        freq = 2.0 * (1.0 + freq_step * (y[i] + class_offset))
        for p in range(n_planes):
            phase = rng.uniform(0.0, 2.0 * math.pi)
            signal = np.sin(2.0 * math.pi * freq * t + phase)
            signal = signal + rng.normal(0.0, noise_sigma, size=side)
            x[i, :, :, p] = encode_series(signal, method).matrix
    return x, y.astype(np.int64)


def make_fusion_xor_task(
    n_samples: int,
    side: int = 32,
    length: int = 64,
    seed: int = 0,
    image_noise: float = 0.15,
    raw_noise: float = 0.25,
):
    """A two-modality task whose label needs both branches.

    Bit A is carried only by the image texture (slow versus fast carrier);
    bit B is carried only by the raw window (small versus large amplitude).
    The label is A xor B, so each modality alone is independent of the
    label and only the fused model can beat chance.

    Returns ((x_image [n, side, side, 1], x_raw [n, length, 2]), y, bits)
    where bits is the (a, b) pair per sample for diagnostics.
    """
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, size=n_samples)
    b = rng.integers(0, 2, size=n_samples)
    y = (a ^ b).astype(np.int64)
    t_img = np.arange(side, dtype=np.float64) / side
    t_raw = np.arange(length, dtype=np.float64) / length
    x_image = np.empty((n_samples, side, side, 1), dtype=np.float32)
    x_raw = np.empty((n_samples, length, 2), dtype=np.float32)
    for i in range(n_samples):
        freq = 2.0 if a[i] == 0 else 5.0
        phase = rng.uniform(0.0, 2.0 * math.pi)
        signal = np.sin(2.0 * math.pi * freq * t_img + phase)
        signal = signal + rng.normal(0.0, image_noise, size=side)
        x_image[i, :, :, 0] = encode_series(signal, GASF).matrix
        amp = 0.5 if b[i] == 0 else 2.0
        for c in range(2):
            phase_r = rng.uniform(0.0, 2.0 * math.pi)
            x_raw[i, :, c] = amp * np.sin(
                2.0 * math.pi * 3.0 * t_raw + phase_r
            ) + rng.normal(0.0, raw_noise, size=length)
    return (x_image, x_raw), y, (a.astype(np.int64), b.astype(np.int64))
