import numpy as np
import pytest

import xosc  # noqa: F401
from xosc.errors import InputError


def test_window(forced_channels):
    window = forced_channels.osc.window(10.0, 20.0)
    assert window.sizes["time"] == 100
    assert window["time"].values[0] == pytest.approx(10.0)


def test_condition(forced_channels):
    conditioned = forced_channels.osc.condition()
    assert conditioned.shape == forced_channels.shape
    assert conditioned.values[:, 0] == pytest.approx(0.0, abs=1e-12)


def test_goertzel(tones):
    chans = tones(0.5, {"a": 0.0, "b": 30.0}, {"a": 2.0, "b": 1.0}, duration=60.0)
    phasors = chans.osc.goertzel(0.5)
    assert set(phasors) == {"a", "b"}
    assert phasors["a"].magnitude == pytest.approx(2.0, rel=1e-9)
    assert phasors["b"].angle == pytest.approx(30.0, abs=1e-9)


def test_dominant_frequency(forced_channels):
    assert forced_channels.osc.dominant_frequency((0.1, 2.0)) == pytest.approx(
        0.4, abs=0.01
    )
    band = xosc.FrequencyBand(0.1, 2.0)
    assert forced_channels.osc.dominant_frequency(
        band
    ) == forced_channels.osc.dominant_frequency((0.1, 2.0))


def test_mode_shape(forced_channels):
    shape = forced_channels.osc.mode_shape(0.4, reference="a")
    assert shape.attrs["reference"] == "a"
    assert shape["angle"].sel(channel="c").item() == pytest.approx(30.0, abs=0.5)


def test_matrix_pencil(ringdown_channels):
    (mode,) = ringdown_channels.osc.matrix_pencil(2, reference="a")
    assert mode.frequency == pytest.approx(0.41, abs=1e-6)


def test_shape_methods(natural_shape):
    phasors = natural_shape.osc.to_complex()
    np.testing.assert_allclose(np.abs(phasors.values), [1.0, 0.8, 0.9, 0.7, 0.6])
    assert natural_shape.osc.magnitude_filter(0.85) == ["a", "c"]

    rotated = xosc.rotate(natural_shape, 15.0)
    result = rotated.osc.align(natural_shape)
    assert result.delta == pytest.approx(-15.0, abs=1e-9)
    assert result.channels_used == tuple("abcde")


def test_align_common_channels(natural_shape):
    partial = xosc.subset(natural_shape, ["a", "b", "d"])
    result = partial.osc.align(natural_shape)
    assert result.channels_used == ("a", "b", "d")
    weighted = partial.osc.align(natural_shape, ["a", "b"], weighted=True)
    assert weighted.channels_used == ("a", "b")


def test_wrong_object(forced_channels, natural_shape):
    with pytest.raises(InputError, match="DataArray of channels"):
        natural_shape.osc.window(0.0, 1.0)
    with pytest.raises(InputError, match="mode-shape Dataset"):
        forced_channels.osc.to_complex()


def test_invalid_channels():
    da = xosc.make_channels({"a": np.ones(10)}, 10.0).rename(channel="sensor")
    with pytest.raises(InputError):
        da.osc.condition()
