"""Image encodings of rescaled series: angular fields and transition fields.

The two angular fields start from the polar view of a [-1, 1] series
(angle arccos(x), radius i/N). The summation field is cos(phi_i + phi_j)
and the difference field is sin(phi_i - phi_j); both are computed here in
their algebraic forms, which are exact in the same way the trigonometric
definitions are and need no angle evaluation. The Markov transition field
quantile-bins the series, estimates a first-order transition matrix from
consecutive pairs, and spreads those probabilities over every index pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .series import RescaledSeries, Window, _as_values, rescale_minmax

GASF = "gasf"
GADF = "gadf"
MTF = "mtf"
METHODS = (GASF, GADF, MTF)

RGB_XYZ = "rgb_xyz"
GRAY_SINGLE = "gray_single"
PLANES_XYZA = "planes_xyza"
LAYOUTS = (RGB_XYZ, GRAY_SINGLE, PLANES_XYZA)

ACCEL_CHANNELS = ("accel_x", "accel_y", "accel_z")
DEFAULT_MTF_BINS = 8


@dataclass
class PolarSeries:
    """Angular view of a rescaled series.

    phi holds arccos of the values; r holds t_i / N for 1-based t_i. The
    radius regularises the polar picture but does not enter either angular
    field matrix, so it is carried for rendering and inspection only.
    """

    phi: np.ndarray
    r: np.ndarray
    n_regularizer: int


@dataclass
class EncodedImage:
    """One encoded plane: an n x n matrix plus its nominal value range."""

    method: str
    matrix: np.ndarray
    value_range: tuple[float, float]
    source_channel: str = ""

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown encoding method {self.method!r}")
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"encoded matrix must be square, got shape {m.shape}")
        self.matrix = m

    @property
    def side(self) -> int:
        return int(self.matrix.shape[0])


@dataclass
class MarkovModel:
    """Quantile bin edges plus a row-stochastic transition matrix."""

    q: int
    bin_edges: np.ndarray
    transition: np.ndarray


@dataclass
class ImageStack:
    """Ordered encoded planes of equal size sharing one method."""

    layout: str
    planes: list[EncodedImage]

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise DomainError(f"unknown stack layout {self.layout!r}")
        expected = {RGB_XYZ: 3, GRAY_SINGLE: 1, PLANES_XYZA: 4}[self.layout]
        if len(self.planes) != expected:
            raise DomainError(
                f"layout {self.layout!r} needs {expected} planes, got {len(self.planes)}"
            )
        sides = {p.side for p in self.planes}
        if len(sides) != 1:
            raise DomainError(f"plane sizes differ: {sorted(sides)}")
        methods = {p.method for p in self.planes}
        if len(methods) != 1:
            raise DomainError(f"planes mix encoding methods: {sorted(methods)}")

    @property
    def side(self) -> int:
        return self.planes[0].side

    def as_tensor(self) -> np.ndarray:
        """Channels-last [side, side, n_planes] float64 view of the stack."""
        return np.stack([p.matrix for p in self.planes], axis=-1)


def _rescaled_values(x) -> np.ndarray:
    """Accept a RescaledSeries or array already inside [-1, 1]."""
    if isinstance(x, RescaledSeries):
        return x.values
    v = _as_values(x)
    if np.any(v < -1.0) or np.any(v > 1.0):
        raise DomainError(
            "values fall outside [-1, 1]; apply rescale_minmax before encoding"
        )
    return v


def to_polar(x, n_regularizer: int | None = None) -> PolarSeries:
    """Angles arccos(x) and radii t/N of a [-1, 1] series (t is 1-based)."""
    v = _rescaled_values(x)
    n = v.size if n_regularizer is None else int(n_regularizer)
    if n < 1:
        raise DomainError(f"the radius regulariser must be positive, got {n}")
    phi = np.arccos(v)
    r = np.arange(1, v.size + 1, dtype=np.float64) / n
    return PolarSeries(phi, r, n)


def gasf(x, source_channel: str = "") -> EncodedImage:
    """Summation field: cos(phi_i + phi_j) = x_i x_j - s_i s_j, s = sqrt(1 - x^2).

    Symmetric with diagonal 2 x_i^2 - 1. Entries are clamped to [-1, 1]
    after evaluation to absorb floating-point overshoot.
    """
    v = _rescaled_values(x)
    s = np.sqrt(np.maximum(0.0, 1.0 - v * v))
    g = np.outer(v, v) - np.outer(s, s)
    np.clip(g, -1.0, 1.0, out=g)
    return EncodedImage(GASF, g, (-1.0, 1.0), source_channel)


def gadf(x, source_channel: str = "") -> EncodedImage:
    """Difference field: sin(phi_i - phi_j) = s_i x_j - x_i s_j for row i.

    Antisymmetric with an exactly zero diagonal. Rows index i, so entry
    [i, j] compares sample i against sample j.
    """
    v = _rescaled_values(x)
    s = np.sqrt(np.maximum(0.0, 1.0 - v * v))
    d = np.outer(s, v) - np.outer(v, s)
    np.clip(d, -1.0, 1.0, out=d)
    return EncodedImage(GADF, d, (-1.0, 1.0), source_channel)


def fit_markov(x, q: int) -> MarkovModel:
    """Estimate a q-bin first-order transition matrix from one series.

    Bin edges are the empirical quantiles at k/q for k = 1..q-1, taken at
    the sorted value of rank floor(k * (n - 1) / q). A value lands in the
    lowest bin j with x <= edge_j, or in the last bin. Transition counts
    come from consecutive pairs; each occupied row is normalised by its own
    count and every empty row becomes uniform 1/q.
    """
    v = _as_values(x)
    if q < 2:
        raise DomainError(f"quantile bin count must be at least 2, got {q}")
    n = v.size
    if n < 2:
        raise DomainError("need at least 2 samples to count transitions")
    xs = np.sort(v)
    ranks = (np.arange(1, q) * (n - 1)) // q
    edges = xs[ranks]
    bins = np.searchsorted(edges, v, side="left")
    counts = np.zeros((q, q), dtype=np.float64)
    np.add.at(counts, (bins[:-1], bins[1:]), 1.0)
    rows = counts.sum(axis=1)
    transition = np.empty_like(counts)
    empty = rows == 0
    transition[empty] = 1.0 / q
    transition[~empty] = counts[~empty] / rows[~empty, None]
    return MarkovModel(int(q), edges, transition)


def mtf(
    x,
    model: MarkovModel | None = None,
    q: int = DEFAULT_MTF_BINS,
    source_channel: str = "",
) -> EncodedImage:
    """Transition field: entry [i, j] is W[bin(x_i), bin(x_j)].

    Fits the Markov model on the series itself unless one is supplied.
    """
    v = _as_values(x)
    if model is None:
        model = fit_markov(v, q)
    bins = np.searchsorted(model.bin_edges, v, side="left")
    m = model.transition[np.ix_(bins, bins)]
    return EncodedImage(MTF, m, (0.0, 1.0), source_channel)


def encode_series(values, method: str, q: int = DEFAULT_MTF_BINS, source_channel: str = "") -> EncodedImage:
    """Rescale a raw series and encode it with the named method."""
    if method not in METHODS:
        raise DomainError(f"unknown encoding method {method!r}")
    rescaled = rescale_minmax(values)
    if method == GASF:
        return gasf(rescaled, source_channel)
    if method == GADF:
        return gadf(rescaled, source_channel)
    return mtf(rescaled.values, q=q, source_channel=source_channel)


def compose_stack(
    window: Window,
    method: str,
    layout: str,
    q: int = DEFAULT_MTF_BINS,
    channel: str | None = None,
) -> ImageStack:
    """Encode a window's channels into an image stack.

    rgb_xyz encodes the three accelerometer channels in x, y, z order;
    planes_xyza appends a fourth plane encoding the per-sample mean of the
    three raw channels (averaged before any rescaling). gray_single encodes
    one named channel; the name may be omitted only when the window has
    exactly one channel. Each plane is rescaled independently.
    """
    if layout not in LAYOUTS:
        raise DomainError(f"unknown stack layout {layout!r}")
    if layout == GRAY_SINGLE:
        if channel is None:
            if len(window.channels) != 1:
                raise DomainError(
                    "gray_single needs an explicit channel name when a window "
                    f"has {len(window.channels)} channels"
                )
            channel = next(iter(window.channels))
        if channel not in window.channels:
            raise DomainError(f"window is missing channel {channel!r}")
        plane = encode_series(window.channels[channel], method, q, channel)
        return ImageStack(layout, [plane])
    for name in ACCEL_CHANNELS:
        if name not in window.channels:
            raise DomainError(f"window is missing channel {name!r}")
    planes = [
        encode_series(window.channels[name], method, q, name)
        for name in ACCEL_CHANNELS
    ]
    if layout == PLANES_XYZA:
        avg = (
            window.channels[ACCEL_CHANNELS[0]]
            + window.channels[ACCEL_CHANNELS[1]]
            + window.channels[ACCEL_CHANNELS[2]]
        ) / 3.0
        planes.append(encode_series(avg, method, q, "accel_avg"))
    return ImageStack(layout, planes)
