"""Time-series containers, value rescaling, and sliding-window segmentation.

A Series is a single uniformly sampled signal; a MultiChannelSeries groups
equal-length channels under one sample rate. rescale_minmax maps a series
into [-1, 1], which is the domain the angular-field encoders require, and
segment_windows cuts aligned channels into fixed-length overlapping windows
with majority labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError

DEFAULT_WINDOW = 100
DEFAULT_STEP = 20


def _as_values(x) -> np.ndarray:
    """Coerce a Series or array-like to a finite 1-D float64 array."""
    v = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if v.ndim != 1:
        raise DomainError(f"expected a 1-D series, got shape {v.shape}")
    if v.size == 0:
        raise DomainError("expected a non-empty series")
    if not np.all(np.isfinite(v)):
        raise DomainError("series contains non-finite values")
    return v


@dataclass
class Series:
    """A uniformly sampled signal. Values must be finite."""

    values: np.ndarray
    name: str = ""
    sample_rate_hz: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise DomainError(
                f"series {self.name!r}: values must be 1-D, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError(f"series {self.name!r}: non-finite values are not admitted")
        self.values = v

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass
class MultiChannelSeries:
    """Named channels of equal length sharing one sample rate."""

    channels: dict[str, np.ndarray]
    sample_rate_hz: float = 0.0

    def __post_init__(self):
        if not self.channels:
            raise DomainError("a multi-channel series needs at least one channel")
        coerced = {}
        lengths = set()
        for name, values in self.channels.items():
            v = _as_values(values)
            coerced[name] = v
            lengths.add(v.size)
        if len(lengths) != 1:
            sizes = {name: v.size for name, v in coerced.items()}
            raise DomainError(f"channel lengths differ: {sizes}")
        self.channels = coerced

    def __len__(self) -> int:
        return int(next(iter(self.channels.values())).size)


@dataclass
class RescaledSeries:
    """A series mapped into [-1, 1]. degenerate marks constant inputs."""

    values: np.ndarray
    degenerate: bool = False

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass
class Window:
    """A fixed-length slice of aligned channels with one label."""

    start_index: int
    length: int
    channels: dict[str, np.ndarray]
    label: int
    participant_id: int = 0


def rescale_minmax(s) -> RescaledSeries:
    """Map a series into [-1, 1] by its own min and max.

    Each value becomes ((x - max) + (x - min)) / (max - min), then the result
    is clamped to [-1, 1] to absorb floating-point overshoot. A constant
    series has no spread to normalise by; it maps to all zeros with the
    degenerate flag set.
    """
    x = _as_values(s)
    lo = float(x.min())
    hi = float(x.max())
    if hi == lo:
        return RescaledSeries(np.zeros_like(x), degenerate=True)
    scaled = ((x - hi) + (x - lo)) / (hi - lo)
    np.clip(scaled, -1.0, 1.0, out=scaled)
    return RescaledSeries(scaled, degenerate=False)


def window_label(frame_labels) -> int:
    """Majority label of a window; ties go to the label seen latest.

    [1, 2] is a tie between 1 and 2; the last occurrence of 2 is later, so
    the window gets label 2.
    """
    labels = [int(l) for l in frame_labels]
    if not labels:
        raise DomainError("window_label needs at least one frame label")
    counts: dict[int, int] = {}
    last_seen: dict[int, int] = {}
    for idx, lab in enumerate(labels):
        counts[lab] = counts.get(lab, 0) + 1
        last_seen[lab] = idx
    best = max(counts.values())
    tied = [lab for lab, c in counts.items() if c == best]
    return max(tied, key=lambda lab: last_seen[lab])


def segment_windows(
    channels,
    labels=None,
    window: int = DEFAULT_WINDOW,
    step: int = DEFAULT_STEP,
    participant_id: int = 0,
    start_offset: int = 0,
) -> list[Window]:
    """Cut aligned channels into overlapping fixed-length windows.

    Produces floor((n - window) / step) + 1 windows when n >= window and
    none otherwise. Every window starts at a multiple of step and its label
    is the majority label of its frames (0 when no labels are given).
    Call once per participant; windows never span participants. When the
    channels are one chunk of a longer recording, start_offset shifts the
    recorded start indices so (participant, start) stays a unique key
    across chunks.
    """
    if isinstance(channels, MultiChannelSeries):
        channels = channels.channels
    if window < 2:
        raise DomainError(f"window length must be at least 2, got {window}")
    if step < 1:
        raise DomainError(f"step must be at least 1, got {step}")
    arrays = {name: _as_values(v) for name, v in channels.items()}
    if not arrays:
        raise DomainError("segment_windows needs at least one channel")
    sizes = {v.size for v in arrays.values()}
    if len(sizes) != 1:
        raise DomainError(
            f"channel lengths differ: { {name: v.size for name, v in arrays.items()} }"
        )
    n = sizes.pop()
    lab = None
    if labels is not None:
        lab = np.asarray(labels)
        if lab.ndim != 1 or lab.size != n:
            raise DomainError(
                f"labels must align with frames: {lab.shape} vs length {n}"
            )
    if n < window:
        return []
    count = (n - window) // step + 1
    out = []
    for i in range(count):
        a = i * step
        seg = {name: v[a : a + window] for name, v in arrays.items()}
        label = window_label(lab[a : a + window]) if lab is not None else 0
        out.append(
            Window(start_offset + a, window, seg, int(label), int(participant_id))
        )
    return out


def windows_to_arrays(
    windows: Sequence[Window],
    channel_order: Sequence[str] | None = None,
    dtype=np.float32,
):
    """Stack windows into (x, y, participants) arrays for model training.

    x has shape [n_windows, window_length, n_channels] with channels in
    channel_order (sorted channel names when omitted).
    """
    if not windows:
        raise DomainError("cannot assemble arrays from an empty window list")
    first = windows[0]
    order = list(channel_order) if channel_order is not None else sorted(first.channels)
    for name in order:
        if name not in first.channels:
            raise DomainError(f"window is missing channel {name!r}")
    x = np.empty((len(windows), first.length, len(order)), dtype=dtype)
    y = np.empty(len(windows), dtype=np.int64)
    groups = np.empty(len(windows), dtype=np.int64)
    for i, w in enumerate(windows):
        if w.length != first.length:
            raise DomainError(
                f"window lengths differ: {w.length} vs {first.length}"
            )
        for j, name in enumerate(order):
            x[i, :, j] = w.channels[name]
        y[i] = w.label
        groups[i] = w.participant_id
    return x, y, groups
