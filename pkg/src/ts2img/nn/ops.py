"""Array-level forward operations and the softmax cross-entropy loss.

These are the pure functions behind the layer objects: no caching, no
parameter storage. Layers re-use the patch helpers so the forward math
exists in exactly one place.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, ShapeError


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise logistic function, stable for large negative inputs."""
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(x, 0)."""
    return np.maximum(x, 0)


def softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the last axis, shifted by the row max."""
    z = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


_ACTIVATIONS = {"relu": relu, "sigmoid": sigmoid, "softmax": softmax}


def activation_fn(name: str):
    try:
        return _ACTIVATIONS[name]
    except KeyError:
        raise DomainError(
            f"unknown activation {name!r}; expected one of {sorted(_ACTIVATIONS)}"
        ) from None


def dense_forward(x, w, b, activation: str | None = None) -> np.ndarray:
    """Affine map x @ w + b with an optional named activation."""
    x = np.asarray(x)
    w = np.asarray(w)
    b = np.asarray(b)
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeError(
            f"dense shapes do not agree: input {x.shape} vs weights {w.shape}"
        )
    if b.shape != (w.shape[1],):
        raise ShapeError(f"bias shape {b.shape} does not match weights {w.shape}")
    y = x @ w + b
    if activation is not None:
        y = activation_fn(activation)(y)
    return y


def conv1d_patches(x: np.ndarray, kernel: int, stride: int):
    """Gather sliding windows: [batch, l_out, kernel, c_in]."""
    if x.ndim != 3:
        raise ShapeError(f"1-D convolution input must be [batch, length, channels], got {x.shape}")
    _, length, _ = x.shape
    if kernel > length:
        raise ShapeError(f"kernel length {kernel} exceeds input length {length}")
    if stride < 1:
        raise DomainError(f"stride must be >= 1, got {stride}")
    l_out = (length - kernel) // stride + 1
    idx = np.arange(l_out)[:, None] * stride + np.arange(kernel)[None, :]
    return x[:, idx, :], l_out


def conv2d_patches(x: np.ndarray, kh: int, kw: int, stride: int):
    """Gather sliding blocks: [batch, h_out, w_out, kh, kw, c_in]."""
    if x.ndim != 4:
        raise ShapeError(
            f"2-D convolution input must be [batch, height, width, channels], got {x.shape}"
        )
    _, height, width, _ = x.shape
    if kh > height or kw > width:
        raise ShapeError(
            f"kernel ({kh}, {kw}) exceeds input plane ({height}, {width})"
        )
    if stride < 1:
        raise DomainError(f"stride must be >= 1, got {stride}")
    h_out = (height - kh) // stride + 1
    w_out = (width - kw) // stride + 1
    rows = np.arange(h_out)[:, None] * stride + np.arange(kh)[None, :]
    cols = np.arange(w_out)[:, None] * stride + np.arange(kw)[None, :]
    patches = x[:, rows[:, None, :, None], cols[None, :, None, :], :]
    return patches, h_out, w_out


def conv_forward(x, kernels, stride: int = 1, dim: int = 1) -> np.ndarray:
    """Valid cross-correlation (no padding, no input flip).

    dim=1: x is [batch, length, c_in], kernels [kernel, c_in, filters].
    dim=2: x is [batch, h, w, c_in], kernels [kh, kw, c_in, filters].
    Output length along each convolved axis is floor((n - k) / stride) + 1.
    """
    x = np.asarray(x)
    kernels = np.asarray(kernels)
    if dim == 1:
        if kernels.ndim != 3:
            raise ShapeError(f"1-D kernels must be [kernel, c_in, filters], got {kernels.shape}")
        if x.ndim != 3 or x.shape[2] != kernels.shape[1]:
            raise ShapeError(
                f"channel mismatch: input {x.shape} vs kernels {kernels.shape}"
            )
        patches, l_out = conv1d_patches(x, kernels.shape[0], stride)
        flat = patches.reshape(x.shape[0], l_out, -1)
        return flat @ kernels.reshape(-1, kernels.shape[2])
    if dim == 2:
        if kernels.ndim != 4:
            raise ShapeError(f"2-D kernels must be [kh, kw, c_in, filters], got {kernels.shape}")
        if x.ndim != 4 or x.shape[3] != kernels.shape[2]:
            raise ShapeError(
                f"channel mismatch: input {x.shape} vs kernels {kernels.shape}"
            )
        patches, h_out, w_out = conv2d_patches(x, kernels.shape[0], kernels.shape[1], stride)
        flat = patches.reshape(x.shape[0], h_out, w_out, -1)
        return flat @ kernels.reshape(-1, kernels.shape[3])
    raise DomainError(f"dim must be 1 or 2, got {dim}")


def batchnorm_forward(
    x,
    gamma,
    beta,
    mode: str = "train",
    running_mean=None,
    running_var=None,
    eps: float = 1e-5,
) -> np.ndarray:
    """Normalise over every axis but the last, then scale and shift.

    Train mode uses the batch mean and population variance and requires at
    least two rows; eval mode uses the supplied running statistics.
    """
    x = np.asarray(x)
    if mode == "train":
        if x.shape[0] < 2:
            raise DomainError("batch normalisation needs batch size >= 2 in train mode")
        axes = tuple(range(x.ndim - 1))
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
    elif mode == "eval":
        if running_mean is None or running_var is None:
            raise DomainError("eval-mode batch normalisation needs running statistics")
        mean = np.asarray(running_mean)
        var = np.asarray(running_var)
    else:
        raise DomainError(f"mode must be 'train' or 'eval', got {mode!r}")
    return (x - mean) / np.sqrt(var + eps) * gamma + beta


def dropout_forward(x, rate: float, mode: str = "train", rng=None) -> np.ndarray:
    """Inverted dropout: scale kept units by 1/(1-rate); identity in eval."""
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
    x = np.asarray(x)
    if mode != "train" or rate == 0.0:
        return x
    if rng is None:
        raise DomainError("train-mode dropout needs the model's random generator")
    keep = (rng.random(x.shape) >= rate).astype(x.dtype)
    return x * keep / x.dtype.type(1.0 - rate)


def softmax_xent(logits, targets) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient with respect to logits.

    Uses the log-sum-exp form, so extreme logits do not overflow. The
    gradient is (softmax(logits) - onehot(targets)) / batch.
    """
    z = np.asarray(logits)
    t = np.asarray(targets)
    if z.ndim != 2:
        raise ShapeError(f"logits must be [batch, classes], got {z.shape}")
    batch, n_classes = z.shape
    if t.shape != (batch,):
        raise ShapeError(f"targets shape {t.shape} does not match batch {batch}")
    if not np.issubdtype(t.dtype, np.integer):
        raise DomainError("targets must be integer class indices")
    if batch == 0:
        raise DomainError("cannot score an empty batch")
    if t.min() < 0 or t.max() >= n_classes:
        raise DomainError(
            f"target classes must lie in [0, {n_classes - 1}], got "
            f"[{t.min()}, {t.max()}]"
        )
    zmax = np.max(z, axis=1, keepdims=True)
    shifted = z - zmax
    lse = np.log(np.sum(np.exp(shifted), axis=1))
    rows = np.arange(batch)
    nll = lse - shifted[rows, t]
    loss = float(nll.mean())
    probs = np.exp(shifted - lse[:, None])
    grad = probs
    grad[rows, t] -= 1.0
    grad /= batch
    return loss, grad.astype(z.dtype, copy=False)
