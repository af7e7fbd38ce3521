"""Rescaling, window labelling, and segmentation."""

import numpy as np
import pytest

from ts2img.errors import DomainError
from ts2img.series import (
    MultiChannelSeries,
    Series,
    rescale_minmax,
    segment_windows,
    window_label,
    windows_to_arrays,
)


def test_rescale_known_values():
    # ((x - max) + (x - min)) / (max - min) maps [0, 5, 10] onto [-1, 0, 1]
    out = rescale_minmax(np.array([0.0, 5.0, 10.0]))
    np.testing.assert_allclose(out.values, [-1.0, 0.0, 1.0])
    assert not out.degenerate

    out = rescale_minmax(np.array([2.0, 4.0]))
    np.testing.assert_allclose(out.values, [-1.0, 1.0])


def test_rescale_endpoints_hit_exactly():
    rng = np.random.default_rng(7)
    for _ in range(200):
        v = rng.normal(size=rng.integers(2, 50)) * rng.uniform(0.01, 1e4)
        out = rescale_minmax(v)
        assert out.values.min() == -1.0
        assert out.values.max() == 1.0
        assert np.all(out.values >= -1.0) and np.all(out.values <= 1.0)
        # rescaling preserves the ordering of samples
        assert np.array_equal(np.argsort(v, kind="stable"), np.argsort(out.values, kind="stable"))


def test_rescale_constant_is_degenerate():
    out = rescale_minmax(np.full(8, 3.25))
    assert out.degenerate
    np.testing.assert_array_equal(out.values, np.zeros(8))


def test_rescale_rejects_bad_input():
    with pytest.raises(DomainError):
        rescale_minmax(np.array([1.0, np.nan]))
    with pytest.raises(DomainError):
        rescale_minmax(np.array([[1.0, 2.0]]))
    with pytest.raises(DomainError):
        rescale_minmax(np.array([]))


def test_rescale_accepts_series_objects():
    s = Series(np.array([1.0, 3.0]), name="hr")
    np.testing.assert_allclose(rescale_minmax(s).values, [-1.0, 1.0])


def test_series_rejects_non_finite():
    with pytest.raises(DomainError):
        Series(np.array([0.0, np.inf]))


def test_multichannel_requires_equal_lengths():
    with pytest.raises(DomainError):
        MultiChannelSeries({"a": np.zeros(3), "b": np.zeros(4)})
    m = MultiChannelSeries({"a": np.zeros(3), "b": np.ones(3)})
    assert len(m) == 3


def test_window_label_majority():
    assert window_label([0, 0, 1]) == 0
    assert window_label([2, 2, 2, 5]) == 2


def test_window_label_tie_goes_to_latest():
    assert window_label([1, 2]) == 2
    assert window_label([2, 1]) == 1
    assert window_label([3, 3, 0, 0, 3, 0]) == 0
    with pytest.raises(DomainError):
        window_label([])


def test_segment_count_matches_formula():
    rng = np.random.default_rng(11)
    for _ in range(300):
        n = int(rng.integers(1, 200))
        window = int(rng.integers(2, 60))
        step = int(rng.integers(1, 30))
        wins = segment_windows({"a": rng.normal(size=max(n, 1))}, window=window, step=step)
        expected = (n - window) // step + 1 if n >= window else 0
        assert len(wins) == expected
        for k, w in enumerate(wins):
            assert w.start_index == k * step
            assert w.length == window


def test_segment_windows_slices_and_labels():
    values = np.arange(10, dtype=np.float64)
    labels = np.array([0, 0, 0, 1, 1, 1, 1, 2, 2, 2])
    wins = segment_windows({"a": values}, labels, window=4, step=3, participant_id=9)
    assert [w.start_index for w in wins] == [0, 3, 6]
    np.testing.assert_array_equal(wins[1].channels["a"], [3, 4, 5, 6])
    # frames 0..3 hold labels 0,0,0,1 so the majority is 0
    assert [w.label for w in wins] == [0, 1, 2]
    assert all(w.participant_id == 9 for w in wins)


def test_segment_windows_start_offset():
    wins = segment_windows({"a": np.zeros(10)}, window=4, step=3, start_offset=100)
    assert [w.start_index for w in wins] == [100, 103, 106]


def test_segment_windows_validation():
    with pytest.raises(DomainError):
        segment_windows({"a": np.zeros(10)}, window=1)
    with pytest.raises(DomainError):
        segment_windows({"a": np.zeros(10)}, step=0)
    with pytest.raises(DomainError):
        segment_windows({"a": np.zeros(10), "b": np.zeros(9)})
    with pytest.raises(DomainError):
        segment_windows({"a": np.zeros(10)}, labels=np.zeros(9), window=4)
    with pytest.raises(DomainError):
        segment_windows({})


def test_windows_to_arrays_sorted_channel_order():
    wins = segment_windows(
        {"z": np.arange(6.0), "a": np.arange(6.0) * 10},
        labels=np.array([0, 0, 1, 1, 1, 1]),
        window=3,
        step=3,
        participant_id=4,
    )
    x, y, groups = windows_to_arrays(wins)
    assert x.shape == (2, 3, 2)
    # sorted names put channel "a" first
    np.testing.assert_allclose(x[0, :, 0], [0.0, 10.0, 20.0])
    np.testing.assert_allclose(x[0, :, 1], [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(y, [0, 1])
    np.testing.assert_array_equal(groups, [4, 4])


def test_windows_to_arrays_explicit_order_and_errors():
    wins = segment_windows({"a": np.arange(4.0), "b": np.arange(4.0)}, window=2, step=2)
    x, _, _ = windows_to_arrays(wins, channel_order=["b", "a"])
    assert x.shape == (2, 2, 2)
    with pytest.raises(DomainError):
        windows_to_arrays([])
    with pytest.raises(DomainError):
        windows_to_arrays(wins, channel_order=["missing"])
