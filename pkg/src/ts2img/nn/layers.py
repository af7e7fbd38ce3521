"""Layer objects: parameter storage plus forward and backward passes.

Every layer follows the same protocol. build(in_shape, rng, dtype)
initialises parameters from the model's generator and returns the output
shape (shapes exclude the batch axis). forward caches whatever backward
needs; backward consumes the upstream gradient, stores parameter gradients,
and returns the gradient with respect to its input. Parameter gradients are
sums over the batch, which pairs with the loss gradient already carrying
the 1/batch factor.

Weight initialisation is uniform He (limit sqrt(6 / fan_in)) for layers
feeding rectified units and uniform Glorot (limit sqrt(6 / (fan_in +
fan_out))) otherwise; the architecture builders pick the scheme because
only they know which activation follows.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError, ShapeError
from . import ops


class Layer:
    """Shared protocol; concrete layers override the relevant pieces."""

    kind = "Layer"
    PARAM_KEYS: tuple[str, ...] = ()
    STATE_KEYS: tuple[str, ...] = ()

    def __init__(self, name: str):
        self.name = name
        self.trainable = True
        self.built = False

    def build(self, in_shape, rng, dtype):
        """Create parameters; returns the output shape. Idempotent layers
        that hold no parameters only need out_shape."""
        self.built = True
        return self.out_shape(in_shape)

    def out_shape(self, in_shape):
        return tuple(in_shape)

    def forward(self, x, train: bool = False, rng=None):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def params(self) -> dict[str, np.ndarray]:
        return {key: getattr(self, key) for key in self.PARAM_KEYS}

    def grads(self) -> dict[str, np.ndarray]:
        return {key: getattr(self, "d_" + key) for key in self.PARAM_KEYS}

    def state(self) -> dict[str, np.ndarray]:
        return {key: getattr(self, key) for key in self.STATE_KEYS}

    def set_array(self, key: str, value: np.ndarray) -> None:
        """Install a parameter or state array, validating its shape."""
        if key not in self.PARAM_KEYS and key not in self.STATE_KEYS:
            raise ShapeError(f"layer {self.name!r} has no array named {key!r}")
        current = getattr(self, key)
        value = np.asarray(value)
        if current is not None and tuple(current.shape) != tuple(value.shape):
            raise ShapeError(
                f"layer {self.name!r} array {key!r}: stored shape {tuple(value.shape)} "
                f"does not match expected {tuple(current.shape)}"
            )
        setattr(self, key, value.astype(current.dtype if current is not None else value.dtype))

    def config(self) -> dict:
        """JSON-serialisable constructor arguments (see checkpoint module)."""
        return {}

    def astype(self, dtype) -> None:
        """Convert parameters and state in place (used by gradient checks)."""
        for key in (*self.PARAM_KEYS, *self.STATE_KEYS):
            arr = getattr(self, key)
            if arr is not None:
                setattr(self, key, arr.astype(dtype))


def _uniform_init(rng, shape, fan_in: int, fan_out: int, scheme: str, dtype):
    if scheme == "he":
        limit = math.sqrt(6.0 / fan_in)
    elif scheme == "glorot":
        limit = math.sqrt(6.0 / (fan_in + fan_out))
    else:
        raise DomainError(f"unknown init scheme {scheme!r}; expected 'he' or 'glorot'")
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Dense(Layer):
    """Affine layer y = x @ w + b."""

    kind = "Dense"
    PARAM_KEYS = ("w", "b")

    def __init__(self, units: int, init: str = "glorot", name: str = "dense"):
        super().__init__(name)
        if units < 1:
            raise DomainError(f"dense units must be >= 1, got {units}")
        self.units = int(units)
        self.init = init
        self.w = None
        self.b = None
        self.d_w = None
        self.d_b = None

    def build(self, in_shape, rng, dtype):
        if len(in_shape) != 1:
            raise ShapeError(
                f"{self.name}: dense input must be a feature vector, got shape {in_shape}"
            )
        fan_in = int(in_shape[0])
        self.w = _uniform_init(rng, (fan_in, self.units), fan_in, self.units, self.init, dtype)
        self.b = np.zeros(self.units, dtype=dtype)
        self.built = True
        return (self.units,)

    def out_shape(self, in_shape):
        if len(in_shape) != 1:
            raise ShapeError(
                f"{self.name}: dense input must be a feature vector, got shape {in_shape}"
            )
        return (self.units,)

    def forward(self, x, train=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.w.shape[0]:
            raise ShapeError(
                f"{self.name}: input {x.shape} does not match weights {self.w.shape}"
            )
        self._x = x
        return x @ self.w + self.b

    def backward(self, dy):
        self.d_w = self._x.T @ dy
        self.d_b = dy.sum(axis=0)
        return dy @ self.w.T

    def config(self):
        return {"units": self.units, "init": self.init}


class Conv1D(Layer):
    """Valid 1-D cross-correlation over [batch, length, channels]."""

    kind = "Conv1D"
    PARAM_KEYS = ("w",)

    def __init__(
        self, filters: int, kernel: int, stride: int = 1, init: str = "he", name: str = "conv"
    ):
        super().__init__(name)
        if filters < 1 or kernel < 1 or stride < 1:
            raise DomainError(
                f"filters, kernel, and stride must be >= 1, got "
                f"({filters}, {kernel}, {stride})"
            )
        self.filters = int(filters)
        self.kernel = int(kernel)
        self.stride = int(stride)
        self.init = init
        self.w = None
        self.d_w = None

    def build(self, in_shape, rng, dtype):
        out = self.out_shape(in_shape)
        c_in = int(in_shape[1])
        fan_in = self.kernel * c_in
        fan_out = self.kernel * self.filters
        self.w = _uniform_init(
            rng, (self.kernel, c_in, self.filters), fan_in, fan_out, self.init, dtype
        )
        self.built = True
        return out

    def out_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ShapeError(
                f"{self.name}: input must be (length, channels), got shape {in_shape}"
            )
        length = int(in_shape[0])
        l_out = (length - self.kernel) // self.stride + 1
        if self.kernel > length or l_out < 1:
            raise ShapeError(
                f"{self.name}: kernel {self.kernel} (stride {self.stride}) does not fit "
                f"input length {length}"
            )
        return (l_out, self.filters)

    def forward(self, x, train=False, rng=None):
        if x.ndim != 3 or x.shape[2] != self.w.shape[1]:
            raise ShapeError(
                f"{self.name}: input {x.shape} does not match kernels {self.w.shape}"
            )
        patches, l_out = ops.conv1d_patches(x, self.kernel, self.stride)
        self._flat = patches.reshape(x.shape[0], l_out, -1)
        self._in_length = x.shape[1]
        return self._flat @ self.w.reshape(-1, self.filters)

    def backward(self, dy):
        batch, l_out, _ = dy.shape
        flat2 = self._flat.reshape(-1, self._flat.shape[2])
        dflat = dy.reshape(-1, self.filters)
        self.d_w = (flat2.T @ dflat).reshape(self.w.shape)
        dpatches = (dflat @ self.w.reshape(-1, self.filters).T).reshape(
            batch, l_out, self.kernel, self.w.shape[1]
        )
        dx = np.zeros((batch, self._in_length, self.w.shape[1]), dtype=dy.dtype)
        starts = np.arange(l_out) * self.stride
        for k in range(self.kernel):
            dx[:, starts + k, :] += dpatches[:, :, k, :]
        return dx

    def config(self):
        return {
            "filters": self.filters,
            "kernel": self.kernel,
            "stride": self.stride,
            "init": self.init,
        }


class Conv2D(Layer):
    """Valid 2-D cross-correlation over [batch, height, width, channels]."""

    kind = "Conv2D"
    PARAM_KEYS = ("w",)

    def __init__(
        self, filters: int, kernel: int, stride: int = 1, init: str = "he", name: str = "conv2d"
    ):
        super().__init__(name)
        if filters < 1 or kernel < 1 or stride < 1:
            raise DomainError(
                f"filters, kernel, and stride must be >= 1, got "
                f"({filters}, {kernel}, {stride})"
            )
        self.filters = int(filters)
        self.kernel = int(kernel)
        self.stride = int(stride)
        self.init = init
        self.w = None
        self.d_w = None

    def build(self, in_shape, rng, dtype):
        out = self.out_shape(in_shape)
        c_in = int(in_shape[2])
        fan_in = self.kernel * self.kernel * c_in
        fan_out = self.kernel * self.kernel * self.filters
        self.w = _uniform_init(
            rng,
            (self.kernel, self.kernel, c_in, self.filters),
            fan_in,
            fan_out,
            self.init,
            dtype,
        )
        self.built = True
        return out

    def out_shape(self, in_shape):
        if len(in_shape) != 3:
            raise ShapeError(
                f"{self.name}: input must be (height, width, channels), got shape {in_shape}"
            )
        height, width = int(in_shape[0]), int(in_shape[1])
        h_out = (height - self.kernel) // self.stride + 1
        w_out = (width - self.kernel) // self.stride + 1
        if self.kernel > height or self.kernel > width or h_out < 1 or w_out < 1:
            raise ShapeError(
                f"{self.name}: kernel {self.kernel} (stride {self.stride}) does not fit "
                f"input plane ({height}, {width})"
            )
        return (h_out, w_out, self.filters)

    def forward(self, x, train=False, rng=None):
        if x.ndim != 4 or x.shape[3] != self.w.shape[2]:
            raise ShapeError(
                f"{self.name}: input {x.shape} does not match kernels {self.w.shape}"
            )
        patches, h_out, w_out = ops.conv2d_patches(x, self.kernel, self.kernel, self.stride)
        self._flat = patches.reshape(x.shape[0], h_out, w_out, -1)
        self._in_hw = (x.shape[1], x.shape[2])
        return self._flat @ self.w.reshape(-1, self.filters)

    def backward(self, dy):
        batch, h_out, w_out, _ = dy.shape
        c_in = self.w.shape[2]
        flat2 = self._flat.reshape(-1, self._flat.shape[3])
        dflat = dy.reshape(-1, self.filters)
        self.d_w = (flat2.T @ dflat).reshape(self.w.shape)
        dpatches = (dflat @ self.w.reshape(-1, self.filters).T).reshape(
            batch, h_out, w_out, self.kernel, self.kernel, c_in
        )
        dx = np.zeros((batch, *self._in_hw, c_in), dtype=dy.dtype)
        row_starts = np.arange(h_out) * self.stride
        col_starts = np.arange(w_out) * self.stride
        for i in range(self.kernel):
            rows = (row_starts + i)[:, None]
            for j in range(self.kernel):
                cols = (col_starts + j)[None, :]
                dx[:, rows, cols, :] += dpatches[:, :, :, i, j, :]
        return dx

    def config(self):
        return {
            "filters": self.filters,
            "kernel": self.kernel,
            "stride": self.stride,
            "init": self.init,
        }


class MaxPool1D(Layer):
    """Non-overlapping max pooling along the length axis (stride = pool)."""

    kind = "MaxPool1D"

    def __init__(self, pool: int, name: str = "pool"):
        super().__init__(name)
        if pool < 1:
            raise DomainError(f"pool size must be >= 1, got {pool}")
        self.pool = int(pool)

    def out_shape(self, in_shape):
        if len(in_shape) != 2:
            raise ShapeError(
                f"{self.name}: input must be (length, channels), got shape {in_shape}"
            )
        length = int(in_shape[0])
        l_out = length // self.pool
        if l_out < 1:
            raise ShapeError(
                f"{self.name}: pool {self.pool} does not fit input length {length}"
            )
        return (l_out, int(in_shape[1]))

    def forward(self, x, train=False, rng=None):
        batch, length, channels = x.shape
        l_out = length // self.pool
        windows = x[:, : l_out * self.pool, :].reshape(batch, l_out, self.pool, channels)
        # argmax takes the first maximal index, which fixes tie routing
        self._argmax = np.argmax(windows, axis=2)
        self._in_shape = x.shape
        return np.take_along_axis(windows, self._argmax[:, :, None, :], axis=2)[:, :, 0, :]

    def backward(self, dy):
        batch, l_out, channels = dy.shape
        dwin = np.zeros((batch, l_out, self.pool, channels), dtype=dy.dtype)
        np.put_along_axis(dwin, self._argmax[:, :, None, :], dy[:, :, None, :], axis=2)
        dx = np.zeros(self._in_shape, dtype=dy.dtype)
        dx[:, : l_out * self.pool, :] = dwin.reshape(batch, l_out * self.pool, channels)
        return dx

    def config(self):
        return {"pool": self.pool}


class MaxPool2D(Layer):
    """Non-overlapping max pooling over square blocks (stride = pool)."""

    kind = "MaxPool2D"

    def __init__(self, pool: int, name: str = "pool2d"):
        super().__init__(name)
        if pool < 1:
            raise DomainError(f"pool size must be >= 1, got {pool}")
        self.pool = int(pool)

    def out_shape(self, in_shape):
        if len(in_shape) != 3:
            raise ShapeError(
                f"{self.name}: input must be (height, width, channels), got shape {in_shape}"
            )
        h_out = int(in_shape[0]) // self.pool
        w_out = int(in_shape[1]) // self.pool
        if h_out < 1 or w_out < 1:
            raise ShapeError(
                f"{self.name}: pool {self.pool} does not fit input plane "
                f"({in_shape[0]}, {in_shape[1]})"
            )
        return (h_out, w_out, int(in_shape[2]))

    def forward(self, x, train=False, rng=None):
        batch, height, width, channels = x.shape
        p = self.pool
        h_out, w_out = height // p, width // p
        cropped = x[:, : h_out * p, : w_out * p, :]
        blocks = cropped.reshape(batch, h_out, p, w_out, p, channels)
        blocks = blocks.transpose(0, 1, 3, 2, 4, 5).reshape(batch, h_out, w_out, p * p, channels)
        # row-major order inside each block; argmax picks the first maximum
        self._argmax = np.argmax(blocks, axis=3)
        self._in_shape = x.shape
        return np.take_along_axis(blocks, self._argmax[:, :, :, None, :], axis=3)[:, :, :, 0, :]

    def backward(self, dy):
        batch, h_out, w_out, channels = dy.shape
        p = self.pool
        dblocks = np.zeros((batch, h_out, w_out, p * p, channels), dtype=dy.dtype)
        np.put_along_axis(dblocks, self._argmax[:, :, :, None, :], dy[:, :, :, None, :], axis=3)
        dcropped = (
            dblocks.reshape(batch, h_out, w_out, p, p, channels)
            .transpose(0, 1, 3, 2, 4, 5)
            .reshape(batch, h_out * p, w_out * p, channels)
        )
        dx = np.zeros(self._in_shape, dtype=dy.dtype)
        dx[:, : h_out * p, : w_out * p, :] = dcropped
        return dx

    def config(self):
        return {"pool": self.pool}


class BatchNorm(Layer):
    """Per-feature normalisation over every axis but the last.

    Train mode normalises by the batch mean and population variance and
    updates running statistics with momentum 0.9. Eval mode, and any frozen
    layer regardless of mode, normalises by the running statistics and
    leaves them untouched; that keeps a frozen trunk's outputs stable while
    a new head trains above it.
    """

    kind = "BatchNorm"
    PARAM_KEYS = ("gamma", "beta")
    STATE_KEYS = ("running_mean", "running_var")

    def __init__(self, momentum: float = 0.9, eps: float = 1e-5, name: str = "bn"):
        super().__init__(name)
        if not 0.0 <= momentum < 1.0:
            raise DomainError(f"momentum must lie in [0, 1), got {momentum}")
        self.momentum = float(momentum)
        self.eps = float(eps)
        self.gamma = None
        self.beta = None
        self.running_mean = None
        self.running_var = None
        self.d_gamma = None
        self.d_beta = None

    def build(self, in_shape, rng, dtype):
        features = int(in_shape[-1])
        self.gamma = np.ones(features, dtype=dtype)
        self.beta = np.zeros(features, dtype=dtype)
        self.running_mean = np.zeros(features, dtype=dtype)
        self.running_var = np.ones(features, dtype=dtype)
        self.built = True
        return tuple(in_shape)

    def forward(self, x, train=False, rng=None):
        use_batch = train and self.trainable
        axes = tuple(range(x.ndim - 1))
        if use_batch:
            if x.shape[0] < 2:
                raise DomainError(
                    f"{self.name}: batch normalisation needs batch size >= 2 in train mode"
                )
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self._std = np.sqrt(var + self.eps)
            self._xhat = (x - mean) / self._std
            m = self.momentum
            self.running_mean = (m * self.running_mean + (1.0 - m) * mean).astype(
                self.running_mean.dtype
            )
            self.running_var = (m * self.running_var + (1.0 - m) * var).astype(
                self.running_var.dtype
            )
            self._used_batch = True
            return self._xhat * self.gamma + self.beta
        self._used_batch = False
        self._eval_std = np.sqrt(self.running_var + self.eps)
        self._xhat = (x - self.running_mean) / self._eval_std
        return self._xhat * self.gamma + self.beta

    def backward(self, dy):
        axes = tuple(range(dy.ndim - 1))
        self.d_gamma = (dy * self._xhat).sum(axis=axes)
        self.d_beta = dy.sum(axis=axes)
        if self._used_batch:
            dxhat = dy * self.gamma
            mean_dxhat = dxhat.mean(axis=axes, keepdims=True)
            mean_dxhat_xhat = (dxhat * self._xhat).mean(axis=axes, keepdims=True)
            return (dxhat - mean_dxhat - self._xhat * mean_dxhat_xhat) / self._std
        # running statistics are constants, so the map is affine
        return dy * self.gamma / self._eval_std

    def config(self):
        return {"momentum": self.momentum, "eps": self.eps}


class Dropout(Layer):
    """Inverted dropout driven by the model's seeded generator."""

    kind = "Dropout"

    def __init__(self, rate: float, name: str = "drop"):
        super().__init__(name)
        if not 0.0 <= rate < 1.0:
            raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = float(rate)

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise DomainError(f"{self.name}: train-mode dropout needs a random generator")
        keep = (rng.random(x.shape) >= self.rate).astype(x.dtype)
        self._mask = keep / x.dtype.type(1.0 - self.rate)
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask

    def config(self):
        return {"rate": self.rate}


class Flatten(Layer):
    """Collapse all non-batch axes into one feature axis."""

    kind = "Flatten"

    def out_shape(self, in_shape):
        n = 1
        for d in in_shape:
            n *= int(d)
        return (n,)

    def forward(self, x, train=False, rng=None):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._in_shape)


class Activation(Layer):
    """Named elementwise (or row-wise for softmax) nonlinearity."""

    kind = "Activation"

    def __init__(self, fn: str, name: str = "act"):
        super().__init__(name)
        ops.activation_fn(fn)  # validates the name
        self.fn = fn

    def forward(self, x, train=False, rng=None):
        if self.fn == "relu":
            self._mask = x > 0
            return ops.relu(x)
        out = ops.activation_fn(self.fn)(x)
        self._out = out
        return out

    def backward(self, dy):
        if self.fn == "relu":
            return dy * self._mask
        if self.fn == "sigmoid":
            return dy * self._out * (1.0 - self._out)
        # softmax Jacobian applied row-wise: s * (dy - sum(dy * s))
        s = self._out
        return s * (dy - np.sum(dy * s, axis=-1, keepdims=True))

    def config(self):
        return {"fn": self.fn}


LAYER_KINDS = {
    cls.kind: cls
    for cls in (
        Dense,
        Conv1D,
        Conv2D,
        MaxPool1D,
        MaxPool2D,
        BatchNorm,
        Dropout,
        Flatten,
        Activation,
    )
}
