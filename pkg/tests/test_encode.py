"""Field encodings checked against independent constructions."""

import numpy as np
import pytest

from ts2img.encode import (
    ACCEL_CHANNELS,
    GASF,
    GADF,
    GRAY_SINGLE,
    MTF,
    PLANES_XYZA,
    RGB_XYZ,
    ImageStack,
    compose_stack,
    encode_series,
    fit_markov,
    gadf,
    gasf,
    mtf,
    to_polar,
)
from ts2img.errors import DomainError
from ts2img.series import Window, rescale_minmax


def mtf_reference(values, q):
    """Count-and-index construction of the transition field.

    Pure-Python quantile bins, pair counts, and row normalisation; written
    without searchsorted or fancy indexing so it fails independently.
    """
    v = [float(t) for t in values]
    n = len(v)
    xs = sorted(v)
    edges = [xs[(k * (n - 1)) // q] for k in range(1, q)]

    def bin_of(val):
        for j, e in enumerate(edges):
            if val <= e:
                return j
        return q - 1

    bins = [bin_of(t) for t in v]
    counts = [[0.0] * q for _ in range(q)]
    for a, b in zip(bins, bins[1:]):
        counts[a][b] += 1.0
    w = []
    for row in counts:
        s = sum(row)
        w.append([c / s for c in row] if s else [1.0 / q] * q)
    return np.array([[w[bins[i]][bins[j]] for j in range(n)] for i in range(n)])


def test_gasf_gadf_known_values():
    x = np.array([-1.0, 0.0, 1.0])
    np.testing.assert_allclose(
        gasf(x).matrix,
        [[1.0, 0.0, -1.0], [0.0, -1.0, 0.0], [-1.0, 0.0, 1.0]],
        atol=1e-15,
    )
    np.testing.assert_allclose(
        gadf(x).matrix,
        [[0.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 0.0]],
        atol=1e-15,
    )


def test_fields_match_trig_construction():
    # cos(phi_i + phi_j) and sin(phi_i - phi_j) on the arccos angles
    rng = np.random.default_rng(3)
    for _ in range(100):
        v = rescale_minmax(rng.normal(size=rng.integers(2, 40))).values
        phi = np.arccos(v)
        np.testing.assert_allclose(
            gasf(v).matrix, np.cos(phi[:, None] + phi[None, :]), atol=1e-12
        )
        np.testing.assert_allclose(
            gadf(v).matrix, np.sin(phi[:, None] - phi[None, :]), atol=1e-12
        )


def test_field_structure():
    rng = np.random.default_rng(4)
    for _ in range(50):
        v = rescale_minmax(rng.normal(size=rng.integers(2, 30))).values
        g = gasf(v).matrix
        d = gadf(v).matrix
        np.testing.assert_allclose(g, g.T, atol=1e-15)
        np.testing.assert_allclose(d, -d.T, atol=1e-15)
        np.testing.assert_allclose(np.diag(g), 2.0 * v * v - 1.0, atol=1e-12)
        np.testing.assert_array_equal(np.diag(d), np.zeros(v.size))
        assert g.min() >= -1.0 and g.max() <= 1.0
        assert d.min() >= -1.0 and d.max() <= 1.0


def test_fields_reject_unscaled_input():
    with pytest.raises(DomainError):
        gasf(np.array([0.0, 2.0]))
    with pytest.raises(DomainError):
        gadf(np.array([-3.0, 0.5]))


def test_to_polar():
    p = to_polar(np.array([1.0, 0.0, -1.0]))
    np.testing.assert_allclose(p.phi, [0.0, np.pi / 2.0, np.pi])
    np.testing.assert_allclose(p.r, [1.0 / 3.0, 2.0 / 3.0, 1.0])
    assert p.n_regularizer == 3
    p = to_polar(np.array([0.0, 0.0]), n_regularizer=8)
    np.testing.assert_allclose(p.r, [0.125, 0.25])
    with pytest.raises(DomainError):
        to_polar(np.array([0.0]), n_regularizer=0)


def test_mtf_known_values():
    # 1,1,2,2 with two bins: the low bin splits evenly, the high bin stays
    m = mtf(np.array([1.0, 1.0, 2.0, 2.0]), q=2)
    np.testing.assert_allclose(
        m.matrix,
        [
            [0.5, 0.5, 0.5, 0.5],
            [0.5, 0.5, 0.5, 0.5],
            [0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
        ],
    )
    # 1,2,1,2 alternates so each bin always leaves
    m = mtf(np.array([1.0, 2.0, 1.0, 2.0]), q=2)
    np.testing.assert_allclose(
        m.matrix,
        [
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
        ],
    )


def test_markov_constant_series():
    model = fit_markov(np.full(3, 5.0), q=4)
    np.testing.assert_allclose(model.transition[0], [1.0, 0.0, 0.0, 0.0])
    for row in model.transition[1:]:
        np.testing.assert_allclose(row, [0.25, 0.25, 0.25, 0.25])
    np.testing.assert_allclose(mtf(np.full(3, 5.0), q=4).matrix, np.ones((3, 3)))


def test_markov_rows_stochastic():
    rng = np.random.default_rng(5)
    for _ in range(100):
        v = rng.normal(size=rng.integers(2, 60))
        q = int(rng.integers(2, 9))
        model = fit_markov(v, q)
        assert model.transition.shape == (q, q)
        np.testing.assert_allclose(model.transition.sum(axis=1), np.ones(q), atol=1e-12)
        assert model.transition.min() >= 0.0


def test_mtf_matches_reference():
    rng = np.random.default_rng(6)
    for _ in range(100):
        n = int(rng.integers(2, 13))
        q = int(rng.integers(2, 5))
        v = np.round(rng.normal(size=n), 1)  # ties are the interesting case
        np.testing.assert_array_equal(mtf(v, q=q).matrix, mtf_reference(v, q))


def test_mtf_validation():
    with pytest.raises(DomainError):
        fit_markov(np.array([1.0, 2.0]), q=1)
    with pytest.raises(DomainError):
        fit_markov(np.array([1.0]), q=2)


def test_encode_series_dispatch():
    v = np.array([3.0, 1.0, 2.0, 4.0])
    for method in (GASF, GADF, MTF):
        img = encode_series(v, method, source_channel="hr")
        assert img.method == method
        assert img.side == 4
        assert img.source_channel == "hr"
    assert encode_series(v, GASF).value_range == (-1.0, 1.0)
    assert encode_series(v, MTF).value_range == (0.0, 1.0)
    with pytest.raises(DomainError):
        encode_series(v, "nope")


def test_encode_series_rescales_internally():
    v = np.array([10.0, 30.0, 20.0])
    np.testing.assert_allclose(
        encode_series(v, GASF).matrix, gasf(rescale_minmax(v)).matrix
    )


def _accel_window(rng, n=16):
    channels = {name: rng.normal(size=n) for name in ACCEL_CHANNELS}
    return Window(0, n, channels, 0, 1)


def test_compose_stack_rgb():
    rng = np.random.default_rng(8)
    w = _accel_window(rng)
    stack = compose_stack(w, GASF, RGB_XYZ)
    assert stack.layout == RGB_XYZ
    assert [p.source_channel for p in stack.planes] == list(ACCEL_CHANNELS)
    t = stack.as_tensor()
    assert t.shape == (16, 16, 3)
    for i, name in enumerate(ACCEL_CHANNELS):
        np.testing.assert_allclose(t[:, :, i], encode_series(w.channels[name], GASF).matrix)


def test_compose_stack_planes_xyza():
    rng = np.random.default_rng(9)
    w = _accel_window(rng)
    stack = compose_stack(w, MTF, PLANES_XYZA, q=4)
    assert len(stack.planes) == 4
    avg = (w.channels["accel_x"] + w.channels["accel_y"] + w.channels["accel_z"]) / 3.0
    np.testing.assert_allclose(
        stack.planes[3].matrix, encode_series(avg, MTF, q=4).matrix
    )


def test_compose_stack_gray():
    rng = np.random.default_rng(10)
    w = Window(0, 12, {"hr": rng.normal(size=12)}, 0, 1)
    stack = compose_stack(w, GADF, GRAY_SINGLE)
    assert len(stack.planes) == 1
    assert stack.planes[0].source_channel == "hr"
    # a second channel makes the bare form ambiguous
    w2 = Window(0, 12, {"hr": rng.normal(size=12), "eda": rng.normal(size=12)}, 0, 1)
    with pytest.raises(DomainError):
        compose_stack(w2, GADF, GRAY_SINGLE)
    stack2 = compose_stack(w2, GADF, GRAY_SINGLE, channel="eda")
    assert stack2.planes[0].source_channel == "eda"
    with pytest.raises(DomainError):
        compose_stack(w2, GADF, GRAY_SINGLE, channel="absent")


def test_compose_stack_requires_accel_channels():
    w = Window(0, 8, {"hr": np.arange(8.0)}, 0, 1)
    with pytest.raises(DomainError):
        compose_stack(w, GASF, RGB_XYZ)


def test_image_stack_validation():
    a = encode_series(np.arange(5.0), GASF)
    b = encode_series(np.arange(6.0), GASF)
    c = encode_series(np.arange(5.0), GADF)
    with pytest.raises(DomainError):
        ImageStack(RGB_XYZ, [a, a])
    with pytest.raises(DomainError):
        ImageStack(RGB_XYZ, [a, a, b])
    with pytest.raises(DomainError):
        ImageStack(RGB_XYZ, [a, a, c])
    with pytest.raises(DomainError):
        ImageStack("odd", [a])
