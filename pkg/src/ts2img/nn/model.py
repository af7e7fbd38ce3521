"""Sequential and two-branch fusion models with reverse-mode gradients.

A Model owns an ordered layer list, one seeded generator (used for both
weight initialisation and dropout masks), and a mode flag. All compute is
float32 by default; gradient checking rebuilds models in float64. Training
uses the logits trick: when the final layer is a softmax activation it is
peeled off and the softmax cross-entropy loss supplies the gradient with
respect to the logits directly.

A FusionModel runs two branch models, concatenates their feature vectors,
and feeds a shared head. Per-branch freezing is respected: frozen layers
contribute no gradient entries and their parameters never move.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, ShapeError, StateError
from . import ops
from .layers import Activation, Layer

TRAIN = "train"
EVAL = "eval"


def _check_unique_names(layers) -> None:
    seen = set()
    for layer in layers:
        if layer.name in seen:
            raise DomainError(f"duplicate layer name {layer.name!r}")
        seen.add(layer.name)


class Model:
    """An ordered stack of layers over a fixed input shape."""

    def __init__(self, layers, input_shape, seed: int = 0, dtype=np.float32):
        layers = list(layers)
        if not layers:
            raise DomainError("a model needs at least one layer")
        _check_unique_names(layers)
        self.layers: list[Layer] = layers
        self.input_shape = tuple(int(d) for d in input_shape)
        self.seed = int(seed)
        self.dtype = np.dtype(dtype)
        self.rng = np.random.default_rng(self.seed)
        self.mode = EVAL
        shape = self.input_shape
        for layer in self.layers:
            if layer.built:
                shape = layer.out_shape(shape)
            else:
                shape = layer.build(shape, self.rng, self.dtype)
        self.output_shape = tuple(int(d) for d in shape)

    # -- forward ---------------------------------------------------------

    def _coerce(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[1:] != self.input_shape:
            raise ShapeError(
                f"input shape {x.shape[1:]} does not match model input {self.input_shape}"
            )
        return x

    def forward(self, x, train: bool | None = None) -> np.ndarray:
        """Run all layers. train defaults to the model's current mode."""
        use_train = (self.mode == TRAIN) if train is None else bool(train)
        h = self._coerce(x)
        for layer in self.layers:
            h = layer.forward(h, train=use_train, rng=self.rng)
        return h

    def forward_partial(self, x, n_layers: int, train: bool = False) -> np.ndarray:
        """Run only the first n_layers (probe for trunk activations)."""
        if not 0 <= n_layers <= len(self.layers):
            raise DomainError(
                f"n_layers must lie in [0, {len(self.layers)}], got {n_layers}"
            )
        h = self._coerce(x)
        for layer in self.layers[:n_layers]:
            h = layer.forward(h, train=train, rng=self.rng)
        return h

    def predict_proba(self, x, batch_size: int = 256) -> np.ndarray:
        """Eval-mode class probabilities, computed in batches."""
        x = self._coerce(x)
        outputs = [
            self.forward(x[i : i + batch_size], train=False)
            for i in range(0, len(x), batch_size)
        ]
        return np.concatenate(outputs, axis=0)

    def predict(self, x, batch_size: int = 256) -> np.ndarray:
        return np.argmax(self.predict_proba(x, batch_size), axis=1)

    # -- parameters ------------------------------------------------------

    def parameters(self) -> dict[str, np.ndarray]:
        """All parameters and state arrays keyed 'layer.array'."""
        out = {}
        for layer in self.layers:
            for key, value in {**layer.params(), **layer.state()}.items():
                out[f"{layer.name}.{key}"] = value
        return out

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        layer_name, _, key = name.rpartition(".")
        for layer in self.layers:
            if layer.name == layer_name:
                layer.set_array(key, value)
                return
        raise ShapeError(f"no layer named {layer_name!r}")

    def trainable_parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for layer in self.layers:
            if not layer.trainable:
                continue
            for key, value in layer.params().items():
                out[f"{layer.name}.{key}"] = value
        return out

    # -- training internals ----------------------------------------------

    def _training_layers(self):
        """Layers run during a train step; a trailing softmax is peeled."""
        last = self.layers[-1]
        if isinstance(last, Activation) and last.fn == "softmax":
            return self.layers[:-1]
        return self.layers

    def loss_eval(self, x, targets) -> float:
        """Train-path loss with no gradient work (finite differences)."""
        h = self._coerce(x)
        for layer in self._training_layers():
            h = layer.forward(h, train=True, rng=self.rng)
        loss, _ = ops.softmax_xent(h, targets)
        return loss

    def train_step(self, x, targets):
        """One forward/backward pass.

        Returns (loss, grads, logits, input_grad) where grads maps
        'layer.param' to the gradient for every trainable parameter; frozen
        layers have no entry.
        """
        if self.mode != TRAIN:
            raise StateError("model must be in train mode to backpropagate")
        h = self._coerce(x)
        run = self._training_layers()
        for layer in run:
            h = layer.forward(h, train=True, rng=self.rng)
        loss, dh = ops.softmax_xent(h, targets)
        logits = h
        for layer in reversed(run):
            dh = layer.backward(dh)
        grads = {}
        for layer in run:
            if not layer.trainable:
                continue
            for key, g in layer.grads().items():
                grads[f"{layer.name}.{key}"] = g
        return loss, grads, logits, dh


def backprop(model, batch, targets) -> tuple[float, dict[str, np.ndarray]]:
    """Loss plus named gradients for one batch (train mode required)."""
    loss, grads, _, _ = model.train_step(batch, targets)
    return loss, grads


def concat_forward(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Join two [batch, features] blocks along the feature axis."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(
            f"concatenation needs rank-2 inputs, got {a.shape} and {b.shape}"
        )
    if a.shape[0] != b.shape[0]:
        raise ShapeError(
            f"concatenation batch sizes differ: {a.shape[0]} vs {b.shape[0]}"
        )
    return np.concatenate([a, b], axis=1)


def concat_backward(dy: np.ndarray, width_a: int) -> tuple[np.ndarray, np.ndarray]:
    """Split the upstream gradient back into the two branch gradients."""
    return dy[:, :width_a], dy[:, width_a:]


class FusionModel:
    """Two feature branches joined by concatenation under a shared head.

    Branch models must end in a rank-1 feature vector. The head is built on
    the concatenated width. Forward input is the pair (x_image, x_raw).
    """

    def __init__(self, branch_image: Model, branch_raw: Model, head_layers, seed: int = 0):
        for label, branch in (("image", branch_image), ("raw", branch_raw)):
            if len(branch.output_shape) != 1:
                raise ShapeError(
                    f"{label} branch must emit a feature vector, got shape "
                    f"{branch.output_shape}"
                )
        if branch_image.dtype != branch_raw.dtype:
            raise ShapeError(
                f"branch dtypes differ: {branch_image.dtype} vs {branch_raw.dtype}"
            )
        self.branch_image = branch_image
        self.branch_raw = branch_raw
        self.width_image = int(branch_image.output_shape[0])
        width = self.width_image + int(branch_raw.output_shape[0])
        self.head = Model(head_layers, (width,), seed=seed, dtype=branch_image.dtype)
        self.dtype = branch_image.dtype
        self.seed = int(seed)
        self.mode = EVAL

    @property
    def output_shape(self):
        return self.head.output_shape

    def _parts(self):
        return (("image", self.branch_image), ("raw", self.branch_raw), ("head", self.head))

    def _set_mode(self, mode: str) -> None:
        self.mode = mode
        for _, part in self._parts():
            part.mode = mode

    def _split_input(self, x):
        if not isinstance(x, (tuple, list)) or len(x) != 2:
            raise ShapeError("fusion input must be the pair (x_image, x_raw)")
        return x

    def forward(self, x, train: bool | None = None) -> np.ndarray:
        use_train = (self.mode == TRAIN) if train is None else bool(train)
        xi, xr = self._split_input(x)
        fi = self.branch_image.forward(xi, train=use_train)
        fr = self.branch_raw.forward(xr, train=use_train)
        return self.head.forward(concat_forward(fi, fr), train=use_train)

    def predict_proba(self, x, batch_size: int = 256) -> np.ndarray:
        xi, xr = self._split_input(x)
        outputs = [
            self.forward((xi[i : i + batch_size], xr[i : i + batch_size]), train=False)
            for i in range(0, len(xi), batch_size)
        ]
        return np.concatenate(outputs, axis=0)

    def predict(self, x, batch_size: int = 256) -> np.ndarray:
        return np.argmax(self.predict_proba(x, batch_size), axis=1)

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, part in self._parts():
            for name, value in part.parameters().items():
                out[f"{prefix}.{name}"] = value
        return out

    def set_parameter(self, name: str, value: np.ndarray) -> None:
        prefix, _, rest = name.partition(".")
        for label, part in self._parts():
            if label == prefix:
                part.set_parameter(rest, value)
                return
        raise ShapeError(f"no fusion part named {prefix!r}")

    def trainable_parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, part in self._parts():
            for name, value in part.trainable_parameters().items():
                out[f"{prefix}.{name}"] = value
        return out

    def loss_eval(self, x, targets) -> float:
        xi, xr = self._split_input(x)
        fi = self.branch_image.forward(xi, train=True)
        fr = self.branch_raw.forward(xr, train=True)
        h = concat_forward(fi, fr)
        for layer in self.head._training_layers():
            h = layer.forward(h, train=True, rng=self.head.rng)
        loss, _ = ops.softmax_xent(h, targets)
        return loss

    def train_step(self, x, targets):
        """One forward/backward pass through both branches and the head."""
        if self.mode != TRAIN:
            raise StateError("model must be in train mode to backpropagate")
        xi, xr = self._split_input(x)
        fi = self.branch_image.forward(xi, train=True)
        fr = self.branch_raw.forward(xr, train=True)
        h = concat_forward(fi, fr)
        head_run = self.head._training_layers()
        for layer in head_run:
            h = layer.forward(h, train=True, rng=self.head.rng)
        loss, dh = ops.softmax_xent(h, targets)
        logits = h
        for layer in reversed(head_run):
            dh = layer.backward(dh)
        di, dr = concat_backward(dh, self.width_image)
        for layer in reversed(self.branch_image.layers):
            di = layer.backward(di)
        for layer in reversed(self.branch_raw.layers):
            dr = layer.backward(dr)
        grads = {}
        for prefix, part, run in (
            ("image", self.branch_image, self.branch_image.layers),
            ("raw", self.branch_raw, self.branch_raw.layers),
            ("head", self.head, head_run),
        ):
            for layer in run:
                if not layer.trainable:
                    continue
                for key, g in layer.grads().items():
                    grads[f"{prefix}.{layer.name}.{key}"] = g
        return loss, grads, logits, (di, dr)
