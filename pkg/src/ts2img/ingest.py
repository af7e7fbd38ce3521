"""Dataset readers and a deterministic synthetic physiology generator.

parse_wisdm reads the public smartphone-accelerometer format: comma
separated `user,activity,timestamp,x,y,z` records terminated by `;`, one
record per line in the well-formed case. Malformed lines are skipped and
counted, never fatal. parse_physio_csv reads a generic header-first CSV of
physiological channels. generate_synthetic produces a bit-reproducible
multi-participant dataset whose class structure is controlled by a single
separability knob, for experiments that need labelled data without any
private recordings.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, RowError, SchemaError
from .series import Window, segment_windows

ACTIVITY_LABELS = (
    "Walking",
    "Jogging",
    "Upstairs",
    "Downstairs",
    "Sitting",
    "Standing",
)
ACTIVITY_TO_CLASS = {name: i for i, name in enumerate(ACTIVITY_LABELS)}
WISDM_SAMPLE_RATE_HZ = 20.0

# Resting-state centres used when a synthetic channel matches a known name.
CHANNEL_BASELINES = {
    "hr": 79.4,
    "hrv": 773.8,
    "eda": 320.4,
    "body_temp": 33.5,
}
SYNTH_SAMPLE_RATE_HZ = 8.0


@dataclass
class ActivityRecord:
    """One accelerometer sample with its user and activity annotation."""

    user_id: int
    activity: str
    timestamp: int
    accel_x: float
    accel_y: float
    accel_z: float


@dataclass
class ParseStats:
    """Line-level accounting for parse_wisdm.

    A non-empty line is accepted when every record segment on it parses,
    rejected otherwise; accepted + rejected always equals total_lines.
    rejected_lines keeps the first ten 1-based offending line numbers.
    """

    total_lines: int = 0
    accepted: int = 0
    rejected: int = 0
    rejected_lines: list[int] = field(default_factory=list)


def _decode(stream) -> str:
    if isinstance(stream, (bytes, bytearray)):
        return bytes(stream).decode("utf-8", errors="replace")
    data = stream.read()
    if isinstance(data, bytes):
        return data.decode("utf-8", errors="replace")
    return data


def _parse_wisdm_record(segment: str) -> ActivityRecord | None:
    parts = [p.strip() for p in segment.split(",")]
    if len(parts) != 6:
        return None
    if any(p == "" for p in parts):
        return None
    user, activity, timestamp, ax, ay, az = parts
    if activity not in ACTIVITY_TO_CLASS:
        return None
    try:
        return ActivityRecord(
            int(user), activity, int(timestamp), float(ax), float(ay), float(az)
        )
    except ValueError:
        return None


def parse_wisdm(stream) -> tuple[list[ActivityRecord], ParseStats]:
    """Parse the raw accelerometer format from bytes or a file object.

    Returns every well-formed record in file order plus line accounting.
    Lines holding several `;`-terminated records contribute all their
    well-formed records; the line itself counts as rejected if any segment
    on it fails to parse.
    """
    text = _decode(stream)
    records: list[ActivityRecord] = []
    stats = ParseStats()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        stats.total_lines += 1
        segments = [s for s in line.split(";") if s.strip()]
        parsed = [_parse_wisdm_record(s) for s in segments]
        records.extend(r for r in parsed if r is not None)
        if segments and all(r is not None for r in parsed):
            stats.accepted += 1
        else:
            stats.rejected += 1
            if len(stats.rejected_lines) < 10:
                stats.rejected_lines.append(lineno)
    return records, stats


@dataclass
class WisdmRun:
    """A contiguous stretch of one activity for one user, time-sorted."""

    user_id: int
    activity: str
    channels: dict[str, np.ndarray]

    def __len__(self) -> int:
        return int(self.channels["accel_x"].size)


def group_wisdm_runs(records: Sequence[ActivityRecord]) -> list[WisdmRun]:
    """Split records into per-(user, activity) runs in file order.

    A run ends whenever the user or the activity changes. Within a run the
    records are sorted stably by timestamp, so equal timestamps keep their
    file order. Windows are later cut inside runs only, which is what keeps
    them from spanning users or activities.
    """
    runs: list[tuple[int, str, list[ActivityRecord]]] = []
    current: tuple[int, str, list[ActivityRecord]] | None = None
    for rec in records:
        if current is None or rec.user_id != current[0] or rec.activity != current[1]:
            if current is not None and current[2]:
                runs.append(current)
            current = (rec.user_id, rec.activity, [])
        current[2].append(rec)
    if current is not None and current[2]:
        runs.append(current)
    out = []
    for user, activity, recs in runs:
        ordered = sorted(recs, key=lambda r: r.timestamp)
        channels = {
            "accel_x": np.array([r.accel_x for r in ordered], dtype=np.float64),
            "accel_y": np.array([r.accel_y for r in ordered], dtype=np.float64),
            "accel_z": np.array([r.accel_z for r in ordered], dtype=np.float64),
        }
        out.append(WisdmRun(user, activity, channels))
    return out


def wisdm_windows(
    records: Sequence[ActivityRecord], window: int = 100, step: int = 20
) -> list[Window]:
    """Cut per-run windows; each window is labelled with its activity class.

    Window start indices count frames along each user's whole timeline, not
    within the run, so (user, start) identifies a window uniquely even when
    a user contributes several activity runs.
    """
    out: list[Window] = []
    frames_seen: dict[int, int] = {}
    for run in group_wisdm_runs(records):
        offset = frames_seen.get(run.user_id, 0)
        frames_seen[run.user_id] = offset + len(run)
        if len(run) < window:
            continue
        labels = np.full(len(run), ACTIVITY_TO_CLASS[run.activity], dtype=np.int64)
        out.extend(
            segment_windows(
                run.channels,
                labels,
                window=window,
                step=step,
                participant_id=run.user_id,
                start_offset=offset,
            )
        )
    return out


@dataclass
class PhysioFrame:
    """One sampling instant: timestamp in ms plus named channel values."""

    timestamp: int
    channels: dict[str, float]
    label: int | None = None
    user: int | None = None


def parse_physio_csv(
    stream, schema: Sequence[str], skip_bad_rows: bool = False
) -> list[PhysioFrame]:
    """Read a header-first CSV holding a timestamp and declared channels.

    The header must contain `timestamp` and every name in schema; `label`
    and `user` columns are picked up when present. A non-numeric cell
    raises a row error naming its 1-based line (the header is line 1),
    unless skip_bad_rows is set, in which case the row is dropped.
    """
    text = _decode(stream)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise SchemaError("empty file: missing header row")
    header = [h.strip() for h in header]
    if "timestamp" not in header:
        raise SchemaError("header is missing required column 'timestamp'")
    for name in schema:
        if name not in header:
            raise SchemaError(f"header is missing declared channel {name!r}")
    index = {name: header.index(name) for name in header}
    has_label = "label" in index
    has_user = "user" in index
    frames: list[PhysioFrame] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(cell.strip() == "" for cell in row):
            continue
        try:
            frames.append(
                _parse_physio_row(row, index, schema, has_label, has_user, lineno)
            )
        except RowError:
            if skip_bad_rows:
                continue
            raise
    return frames


def _parse_physio_row(row, index, schema, has_label, has_user, lineno) -> PhysioFrame:
    def cell(column: str) -> str:
        try:
            return row[index[column]].strip()
        except IndexError:
            raise RowError(f"row is missing column {column!r}", lineno) from None

    def number(column: str) -> float:
        text = cell(column)
        try:
            return float(text)
        except ValueError:
            raise RowError(
                f"non-numeric value {text!r} in column {column!r}", lineno
            ) from None

    timestamp = int(number("timestamp"))
    channels = {name: number(name) for name in schema}
    label = None
    if has_label and cell("label") != "":
        label = int(number("label"))
    user = None
    if has_user and cell("user") != "":
        user = int(number("user"))
    return PhysioFrame(timestamp, channels, label, user)


@dataclass
class ChannelSpec:
    """Shape of one synthetic channel: carrier frequency, swing, noise."""

    name: str
    base_freq_hz: float
    amplitude: float
    noise_sigma: float


DEFAULT_CHANNEL_SPECS = (
    ChannelSpec("hr", 0.08, 11.6, 0.8),
    ChannelSpec("hrv", 0.05, 152.6, 8.0),
    ChannelSpec("eda", 0.03, 158.0, 6.0),
)


@dataclass
class SynthConfig:
    """Knobs of the synthetic generator.

    class_separability = 0 makes every class statistically identical; 1
    spreads class means and carrier frequencies as far as the channel
    amplitudes allow. min_window is the window length the per-participant
    streams must be able to support.
    """

    n_participants: int = 20
    n_classes: int = 5
    frames_per_participant: int = 2000
    channel_specs: tuple[ChannelSpec, ...] = DEFAULT_CHANNEL_SPECS
    seed: int = 0
    class_separability: float = 0.5
    sample_rate_hz: float = SYNTH_SAMPLE_RATE_HZ
    min_window: int = 100

    def validate(self) -> None:
        if self.n_participants < 1:
            raise ConfigError(f"n_participants must be >= 1, got {self.n_participants}")
        if self.n_classes < 2:
            raise ConfigError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.frames_per_participant < self.min_window:
            raise ConfigError(
                f"frames_per_participant ({self.frames_per_participant}) is shorter "
                f"than the window length it must support ({self.min_window})"
            )
        if not 0.0 <= self.class_separability <= 1.0:
            raise ConfigError(
                f"class_separability must lie in [0, 1], got {self.class_separability}"
            )
        if not self.channel_specs:
            raise ConfigError("at least one channel spec is required")
        if self.sample_rate_hz <= 0:
            raise ConfigError(f"sample rate must be positive, got {self.sample_rate_hz}")


def generate_synthetic(config: SynthConfig) -> dict[int, list[PhysioFrame]]:
    """Generate labelled frames per participant, bit-identical per config.

    Each participant's stream is split into contiguous segments that cycle
    through the classes in a seeded order, so every participant sees every
    class when the stream is long enough. Class k (0-based) multiplies each
    channel's carrier frequency by (1 + separability * k) and shifts its
    mean by separability * k * amplitude / 2. Participants differ by seeded
    phase and mean offsets, which is what makes leave-one-participant-out
    evaluation meaningful.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    sep = config.class_separability
    n_frames = config.frames_per_participant
    period_ms = 1000.0 / config.sample_rate_hz
    seg_len = max(config.min_window, n_frames // (2 * config.n_classes) or 1)
    dataset: dict[int, list[PhysioFrame]] = {}
    for participant in range(1, config.n_participants + 1):
        phase = rng.uniform(0.0, 2.0 * math.pi, size=len(config.channel_specs))
        mean_shift = rng.normal(0.0, 0.05, size=len(config.channel_specs))
        labels = _segment_labels(n_frames, seg_len, config.n_classes, rng)
        t = np.arange(n_frames, dtype=np.float64) / config.sample_rate_hz
        k = (labels - 1).astype(np.float64)
        frames_channels = {}
        for ci, spec in enumerate(config.channel_specs):
            baseline = CHANNEL_BASELINES.get(spec.name, 0.0)
            freq = spec.base_freq_hz * (1.0 + sep * k)
            mean = baseline + mean_shift[ci] * spec.amplitude + sep * k * spec.amplitude / 2.0
            wave = spec.amplitude * np.sin(2.0 * math.pi * freq * t + phase[ci])
            noise = rng.normal(0.0, spec.noise_sigma, size=n_frames)
            frames_channels[spec.name] = mean + wave + noise
        frames = [
            PhysioFrame(
                timestamp=int(round(i * period_ms)),
                channels={
                    name: float(values[i]) for name, values in frames_channels.items()
                },
                label=int(labels[i]),
                user=participant,
            )
            for i in range(n_frames)
        ]
        dataset[participant] = frames
    return dataset


def _segment_labels(n_frames: int, seg_len: int, n_classes: int, rng) -> np.ndarray:
    """Contiguous class segments cycling through a seeded class order."""
    order = rng.permutation(n_classes) + 1
    labels = np.empty(n_frames, dtype=np.int64)
    pos = 0
    i = 0
    while pos < n_frames:
        labels[pos : pos + seg_len] = order[i % n_classes]
        pos += seg_len
        i += 1
    return labels


def frames_to_channels(
    frames: Sequence[PhysioFrame], schema: Sequence[str]
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Stack frames into channel arrays plus an aligned label array.

    Frames without a label contribute label 0.
    """
    if not frames:
        raise DomainError("cannot assemble channels from an empty frame list")
    channels = {}
    for name in schema:
        try:
            channels[name] = np.array([f.channels[name] for f in frames], dtype=np.float64)
        except KeyError:
            raise DomainError(f"frames are missing channel {name!r}") from None
    labels = np.array(
        [f.label if f.label is not None else 0 for f in frames], dtype=np.int64
    )
    return channels, labels


def windows_from_frames(
    frames: Sequence[PhysioFrame],
    schema: Sequence[str],
    window: int = 100,
    step: int = 20,
    participant_id: int = 0,
) -> list[Window]:
    """Window one participant's frames over the declared channels."""
    channels, labels = frames_to_channels(frames, schema)
    return segment_windows(
        channels, labels, window=window, step=step, participant_id=participant_id
    )


def write_physio_csv(frames: Iterable[PhysioFrame], path, schema: Sequence[str]) -> None:
    """Write frames as a header-first CSV that parse_physio_csv reads back."""
    frames = list(frames)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["timestamp", *schema, "label", "user"])
        for frame in frames:
            writer.writerow(
                [
                    frame.timestamp,
                    *[repr(frame.channels[name]) for name in schema],
                    "" if frame.label is None else frame.label,
                    "" if frame.user is None else frame.user,
                ]
            )
