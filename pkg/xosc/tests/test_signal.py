import numpy as np
import pytest
import scipy.signal
import xarray as xr

import xosc
from xosc.errors import (
    DegenerateInputError,
    InputError,
    InsufficientDataError,
    InvalidFrequencyError,
    NoPeakError,
)
from xosc.signal import _goertzel


def test_make_channels():
    chans = xosc.make_channels({"a": [0.0, 1.0, 0.0], "b": [1.0, 0.0, 1.0]}, 10.0, 5.0)
    assert chans.dims == ("channel", "time")
    assert list(chans["channel"].values) == ["a", "b"]
    assert chans.attrs == {"sample_rate": 10.0, "start_time": 5.0}
    np.testing.assert_allclose(chans["time"].values, [5.0, 5.1, 5.2])


@pytest.mark.parametrize(
    "data,rate,error",
    [
        ({"a": [0.0, 1.0], "b": [0.0, 1.0, 2.0]}, 10.0, InputError),
        ({"a": [0.0, np.nan, 1.0]}, 10.0, InputError),
        ({"a": [0.0, np.inf]}, 10.0, InputError),
        ({"a": [1.0]}, 10.0, DegenerateInputError),
        ({"a": [0.0, 1.0]}, 0.0, InputError),
        ({}, 10.0, InputError),
    ],
)
def test_make_channels_invalid(data, rate, error):
    with pytest.raises(error):
        xosc.make_channels(data, rate)


def test_validate_channels_promotes_series():
    series = xr.DataArray(
        np.zeros(20), dims="time", coords={"time": np.arange(20) / 4.0}, name="pmu1"
    )
    chans = xosc.validate_channels(series)
    assert chans.dims == ("channel", "time")
    assert chans["channel"].values.tolist() == ["pmu1"]
    assert chans.attrs["sample_rate"] == pytest.approx(4.0)
    assert chans.attrs["start_time"] == 0.0


def test_select_window_half_open():
    chans = xosc.make_channels({"a": np.arange(100.0)}, 10.0)
    window = xosc.select_window(chans, 1.0, 2.0)
    assert window.sizes["time"] == 10
    assert window.attrs["start_time"] == 1.0
    assert window.values[0, 0] == 10.0

    with pytest.raises(InputError, match="holds no samples"):
        xosc.select_window(chans, 50.0, 60.0)


@pytest.mark.parametrize(
    "samples",
    [np.full(64, 0.05), 0.3 + 0.01 * np.arange(64.0)],
    ids=["constant", "ramp"],
)
def test_condition_removes_mean_and_trend(samples):
    out = xosc.condition(xosc.make_channels({"a": samples}, 10.0))
    np.testing.assert_allclose(out.values, 0.0, atol=1e-12)


def test_condition_keeps_metadata():
    chans = xosc.make_channels({"x": np.random.default_rng(0).normal(size=50)}, 30.0)
    out = xosc.condition(chans)
    assert out.sizes == chans.sizes
    assert out.attrs["sample_rate"] == 30.0
    assert out["channel"].values.tolist() == ["x"]
    assert out.values[0, 0] == 0.0


def test_condition_too_short():
    chans = xr.DataArray([[1.0]], dims=("channel", "time"), attrs={"sample_rate": 1.0})
    with pytest.raises(DegenerateInputError):
        xosc.condition(chans)


def test_condition_ramp_plus_sinusoid():
    t = np.arange(800) / 10.0
    chans = xosc.make_channels({"a": 0.02 * t + np.cos(2 * np.pi * 0.25 * t)}, 10.0)
    conditioned = xosc.condition(chans)
    x = conditioned.values[0]
    n = np.arange(x.size)
    oracle = 2 / x.size * abs(np.sum(x * np.exp(-2j * np.pi * 0.25 / 10.0 * n)))
    phasor = xosc.goertzel_phasor(conditioned, 0.25)
    assert phasor.magnitude == pytest.approx(oracle, rel=0.05)
    # a Hann taper halves the amplitude of a centred tone
    assert phasor.magnitude == pytest.approx(0.5, rel=0.05)


def test_parseval_mean_square():
    rng = np.random.default_rng(3)
    chans = xosc.make_channels({"a": rng.normal(size=512)}, 10.0)
    x = xosc.condition(chans).values[0]
    freqs, power = scipy.signal.periodogram(
        x, fs=10.0, window="boxcar", detrend=False, scaling="density"
    )
    assert np.sum(power) * (freqs[1] - freqs[0]) == pytest.approx(
        np.mean(x**2), rel=1e-6
    )


def test_goertzel_bin_aligned():
    t = np.arange(800) / 10.0
    series = xosc.make_channels(
        {"a": 0.01 * np.cos(2 * np.pi * 0.25 * t + np.radians(30.0))}, 10.0
    )
    phasor = xosc.goertzel_phasor(series, 0.25)
    assert phasor.magnitude == pytest.approx(0.01, rel=1e-3)
    assert phasor.angle == pytest.approx(30.0, abs=0.1)


def test_goertzel_zero_series():
    series = xosc.make_channels({"a": np.zeros(100)}, 10.0)
    assert xosc.goertzel_phasor(series, 1.0).magnitude == 0.0


def test_goertzel_linear():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(2, 300))
    px = xosc.goertzel_phasor(xosc.make_channels({"x": x}, 10.0), 0.7)
    py = xosc.goertzel_phasor(xosc.make_channels({"y": y}, 10.0), 0.7)
    pxy = xosc.goertzel_phasor(xosc.make_channels({"xy": x + y}, 10.0), 0.7)
    np.testing.assert_allclose(
        pxy.to_complex(), px.to_complex() + py.to_complex(), rtol=1e-9
    )


@pytest.mark.parametrize("f_target", [0.37, 1.0, 2.3, 3.8])
def test_goertzel_matches_direct_dft(f_target):
    x = np.random.default_rng(7).normal(size=500)
    n = np.arange(x.size)
    direct = np.sum(x * np.exp(-2j * np.pi * f_target / 10.0 * n))
    np.testing.assert_allclose(_goertzel(x, f_target, 10.0), direct, rtol=1e-9)


@pytest.mark.parametrize("f_target", [0.0, -1.0, 5.0, 7.0])
def test_goertzel_invalid_frequency(f_target):
    series = xosc.make_channels({"a": np.zeros(100)}, 10.0)
    with pytest.raises(InvalidFrequencyError):
        xosc.goertzel_phasor(series, f_target)


def test_welch_segment_length():
    assert xosc.welch_segment_length(1200, 10.0) == 256
    assert xosc.welch_segment_length(50, 10.0) == 50
    assert xosc.welch_segment_length(1200, 10.0, segment_seconds=20.0) == 200
    with pytest.raises(InsufficientDataError):
        xosc.welch_segment_length(100, 10.0, segment_seconds=20.0)


@pytest.mark.parametrize(
    "frequency,band", [(0.25, (0.1, 0.5)), (0.7, (0.5, 0.9)), (0.25, (0.1, 2.0))]
)
def test_dominant_frequency(tones, frequency, band):
    chans = tones(frequency, {"a": 0.0})
    found = xosc.dominant_frequency(chans, xosc.FrequencyBand(*band))
    assert found == pytest.approx(frequency, abs=0.01)
    assert band[0] <= found <= band[1]


def test_dominant_frequency_permutation_and_zero_channel(tones):
    band = xosc.FrequencyBand(0.1, 2.0)
    chans = tones(0.6, {"a": 0.0, "b": 50.0, "c": -20.0}, noise=0.05)
    reference = xosc.dominant_frequency(chans, band)
    permuted = chans.isel(channel=[2, 0, 1])
    assert xosc.dominant_frequency(permuted, band) == reference

    zero = xr.zeros_like(chans.isel(channel=[0])).assign_coords(channel=["z"])
    padded = xr.concat([chans, zero], dim="channel")
    assert xosc.dominant_frequency(padded, band) == pytest.approx(reference, abs=1e-12)


def test_dominant_frequency_noise_only():
    chans = xosc.make_channels(
        {"a": np.random.default_rng(11).normal(size=1200)}, 10.0
    )
    band = xosc.FrequencyBand(0.1, 2.0)
    peak = xosc.spectral_peak(chans, band)
    assert peak.prominence < 10
    with pytest.raises(NoPeakError, match="no spectral peak"):
        xosc.dominant_frequency(chans, band, min_prominence=10.0)


def test_dominant_frequency_flat():
    chans = xosc.make_channels({"a": np.zeros(600)}, 10.0)
    with pytest.raises(NoPeakError, match="no spectral peak"):
        xosc.dominant_frequency(chans, xosc.FrequencyBand(0.1, 2.0))


def test_dominant_frequency_band_above_nyquist(tones):
    with pytest.raises(InvalidFrequencyError, match="Nyquist"):
        xosc.dominant_frequency(tones(0.5, {"a": 0.0}), xosc.FrequencyBand(0.1, 6.0))


def test_spectral_mode_shape(tones):
    angles = {"a": 0.0, "b": -40.0, "c": 100.0}
    mags = {"a": 1.0, "b": 0.5, "c": 2.0}
    shape = xosc.spectral_mode_shape(tones(0.5, angles, mags), 0.5, "a")
    xosc.validate_mode_shape(shape)
    assert shape.attrs["reference"] == "a"
    assert shape["angle"].sel(channel="a").item() == 0.0
    np.testing.assert_allclose(shape["angle"].values, [0.0, -40.0, 100.0], atol=0.01)
    np.testing.assert_allclose(shape["magnitude"].values, [1.0, 0.5, 2.0], rtol=1e-3)
    np.testing.assert_allclose(shape["normalized"].values, [0.5, 0.25, 1.0], rtol=1e-3)
    assert shape.attrs["segment_length"] == 256


def test_spectral_mode_shape_identical_channels(tones):
    shape = xosc.spectral_mode_shape(tones(0.3, {"a": 25.0, "b": 25.0}), 0.3, "b")
    np.testing.assert_allclose(shape["angle"].values, 0.0, atol=1e-9)
    np.testing.assert_allclose(shape["magnitude"].values[0], shape["magnitude"].values[1])


def test_spectral_mode_shape_half_period_delay():
    f = 0.5
    t = np.arange(1200) / 10.0
    a = np.cos(2 * np.pi * f * t)
    b = np.cos(2 * np.pi * f * (t - 1 / (2 * f)))
    shape = xosc.spectral_mode_shape(xosc.make_channels({"a": a, "b": b}, 10.0), f, "a")
    assert abs(xosc.wrap_angle(shape["angle"].sel(channel="b").item() - 180.0)) < 1.0


def test_spectral_mode_shape_scaling(tones):
    chans = tones(0.45, {"a": 0.0, "b": 70.0, "c": -150.0}, noise=0.1, seed=5)
    shape = xosc.spectral_mode_shape(chans, 0.45, "a")
    scaled = xosc.spectral_mode_shape(chans * 3.7, 0.45, "a")
    np.testing.assert_allclose(scaled["angle"].values, shape["angle"].values, atol=1e-6)
    np.testing.assert_allclose(
        scaled["magnitude"].values, 3.7 * shape["magnitude"].values, rtol=1e-9
    )


def test_spectral_mode_shape_matches_grid_response(ring6):
    forcing = xosc.Forcing(bus=2, frequency=0.45, amplitude=0.1)
    channels = xosc.simulate(ring6, forcing, 120.0, 10.0, start="steady")
    response = xosc.frequency_response(ring6, 0.45, 2, 0.1)
    ref = int(np.argmax(np.abs(response)))

    shape = xosc.spectral_mode_shape(channels, 0.45, ring6.labels[ref])
    expected = np.degrees(np.angle(response / response[ref]))
    np.testing.assert_allclose(
        xosc.wrap_angle(shape["angle"].values - expected), 0.0, atol=5.0
    )
    np.testing.assert_allclose(shape["magnitude"].values, np.abs(response), rtol=0.02)


def test_spectral_mode_shape_errors(tones):
    chans = tones(0.5, {"a": 0.0, "b": 10.0}, duration=20.0)
    with pytest.raises(InputError, match="reference"):
        xosc.spectral_mode_shape(chans, 0.5, "zz")
    with pytest.raises(InsufficientDataError):
        xosc.spectral_mode_shape(chans, 0.5, "a", segment_seconds=60.0)


def test_channel_amplitudes_and_strongest(tones):
    chans = tones(0.5, {"a": 0.0, "b": 0.0, "c": 0.0}, {"a": 0.2, "b": 1.5, "c": 0.7})
    amplitude = xosc.channel_amplitudes(chans, 0.5)
    np.testing.assert_allclose(amplitude.values, [0.2, 1.5, 0.7], rtol=1e-6)
    assert xosc.strongest_channel(chans, 0.5) == "b"
