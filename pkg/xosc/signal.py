"""Time-series conditioning and single-frequency spectral estimation.

A set of PMU channels is an :class:`xarray.DataArray` with dimensions
``("channel", "time")``, a ``sample_rate`` attribute in Hz and a
``start_time`` attribute in seconds. See :func:`make_channels`.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
import scipy.signal
import xarray as xr
from numpy.typing import ArrayLike

from .config import FrequencyBand
from .errors import (
    DegenerateInputError,
    InputError,
    InsufficientDataError,
    InvalidFrequencyError,
    NoPeakError,
)
from .shapes import Phasor, mode_shape

logger = logging.getLogger(__name__)

# zero-padding factor of the Welch periodogram used for peak picking
_NFFT_FACTOR = 4


def make_channels(
    data: Mapping[str, ArrayLike],
    sample_rate: float,
    start_time: float = 0.0,
) -> xr.DataArray:
    """Build a validated channel array from a mapping of sample arrays.

    Parameters
    ----------
    data : mapping
        ``{channel_id: samples}``; every entry must have the same length.
    sample_rate : float
        Samples per second.
    start_time : float, default 0.0
        Time stamp of the first sample, in seconds.

    Returns
    -------
    xarray.DataArray
        Dimensions ``("channel", "time")``.

    Examples
    --------
    >>> chans = make_channels({"a": [0.0, 1.0, 0.0], "b": [1.0, 0.0, 1.0]}, 10.0)
    >>> chans.sizes["channel"], chans.attrs["sample_rate"]
    (2, 10.0)
    """
    if not data:
        raise InputError("at least one channel is required")
    arrays = {str(k): np.asarray(v, dtype=float) for k, v in data.items()}
    lengths = {a.shape for a in arrays.values()}
    if len(lengths) != 1 or len(next(iter(lengths))) != 1:
        raise InputError(
            "all channels must be one-dimensional and share the same length; "
            "trim them to a common window first"
        )
    if not (np.isfinite(sample_rate) and sample_rate > 0):
        raise InputError(f"sample_rate must be positive, got {sample_rate}")
    n = next(iter(lengths))[0]
    time = start_time + np.arange(n) / sample_rate
    channels = xr.DataArray(
        np.vstack(list(arrays.values())),
        dims=("channel", "time"),
        coords={"channel": list(arrays), "time": time},
        attrs={"sample_rate": float(sample_rate), "start_time": float(start_time)},
    )
    return validate_channels(channels)


def validate_channels(channels: xr.DataArray) -> xr.DataArray:
    """Check the channel invariants and return a ``("channel", "time")`` array.

    A one-dimensional series along ``time`` is promoted to a single channel.
    """
    if not isinstance(channels, xr.DataArray):
        raise InputError("channels must be an xarray.DataArray")
    if "time" not in channels.dims:
        raise InputError("channels need a 'time' dimension")
    if "channel" not in channels.dims:
        if "channel" in channels.coords:
            channels = channels.expand_dims("channel")
        else:
            name = str(channels.name) if channels.name is not None else "channel_0"
            channels = channels.expand_dims(channel=[name])
    if channels.ndim != 2:
        raise InputError(
            f"channels must have dims ('channel', 'time'), got {channels.dims}"
        )
    channels = channels.transpose("channel", "time")

    sample_rate = channels.attrs.get("sample_rate")
    if sample_rate is None:
        if channels.sizes["time"] < 2:
            raise DegenerateInputError("at least two samples are required")
        sample_rate = 1.0 / float(np.median(np.diff(channels["time"].values)))
        channels = channels.assign_attrs(sample_rate=sample_rate)
    if not (np.isfinite(sample_rate) and sample_rate > 0):
        raise InputError(f"sample_rate must be positive, got {sample_rate}")
    if channels.sizes["time"] < 2:
        raise DegenerateInputError("at least two samples are required")
    if channels.sizes["channel"] == 0:
        raise InputError("at least one channel is required")
    ids = [str(c) for c in channels["channel"].values]
    if len(set(ids)) != len(ids):
        raise InputError("channel ids must be unique")
    if not np.all(np.isfinite(channels.values)):
        raise InputError("samples must be finite (no NaN or infinity)")
    if "start_time" not in channels.attrs:
        channels = channels.assign_attrs(
            start_time=float(channels["time"].values[0])
        )
    return channels


def select_window(channels: xr.DataArray, t0: float, t1: float) -> xr.DataArray:
    """Samples with ``t0 <= time < t1``."""
    channels = validate_channels(channels)
    time = channels["time"].values
    keep = np.flatnonzero((time >= t0) & (time < t1))
    if keep.size == 0:
        raise InputError(f"window [{t0}, {t1}) holds no samples")
    window = channels.isel(time=keep)
    return window.assign_attrs(start_time=float(time[keep[0]]))


def condition(series: xr.DataArray) -> xr.DataArray:
    """Remove mean and linear trend, then apply a Hann taper.

    Works channel by channel along ``time``; ids, sample rate and length are
    unchanged.
    """
    if series.sizes.get("time", 0) < 2:
        raise DegenerateInputError("at least two samples are required")
    series = validate_channels(series)
    n = series.sizes["time"]
    detrended = scipy.signal.detrend(series.values, axis=-1, type="linear")
    taper = scipy.signal.windows.hann(n, sym=False)
    return series.copy(data=detrended * taper)


def _check_frequency(f_target: float, sample_rate: float) -> None:
    if not (np.isfinite(f_target) and 0 < f_target < sample_rate / 2):
        raise InvalidFrequencyError(
            f"frequency {f_target} Hz is outside (0, {sample_rate / 2}) Hz"
        )


def _goertzel(x: np.ndarray, f_target: float, sample_rate: float) -> np.ndarray:
    """Single-bin DFT ``sum(x[n] * exp(-j w n))`` along the last axis."""
    w = 2 * np.pi * f_target / sample_rate
    s = scipy.signal.lfilter([1.0], [1.0, -2.0 * np.cos(w), 1.0], x, axis=-1)
    n = x.shape[-1]
    y = s[..., -1] - np.exp(-1j * w) * s[..., -2]
    return np.exp(-1j * w * (n - 1)) * y


def goertzel_phasor(series: xr.DataArray, f_target: float) -> Phasor:
    """Phasor of one channel at ``f_target``.

    Normalised so that ``A * cos(2 pi f_target t + phi)`` sampled over a whole
    number of cycles returns magnitude ``A`` and angle ``phi`` (degrees), with
    ``t`` counted from the first sample.
    """
    series = validate_channels(series)
    if series.sizes["channel"] != 1:
        raise InputError("goertzel_phasor expects a single channel")
    _check_frequency(f_target, series.attrs["sample_rate"])
    x = series.values[0]
    value = 2.0 / x.size * _goertzel(x, f_target, series.attrs["sample_rate"])
    return Phasor.from_complex(complex(value))


def channel_amplitudes(channels: xr.DataArray, f_target: float) -> xr.DataArray:
    """Goertzel amplitude of every channel at ``f_target`` over the whole record."""
    channels = validate_channels(channels)
    fs = channels.attrs["sample_rate"]
    _check_frequency(f_target, fs)
    x = channels.values - channels.values.mean(axis=-1, keepdims=True)
    amplitude = 2.0 / x.shape[-1] * np.abs(_goertzel(x, f_target, fs))
    return xr.DataArray(
        amplitude,
        dims="channel",
        coords={"channel": channels["channel"].values},
        name="amplitude",
    )


def strongest_channel(channels: xr.DataArray, f_target: float) -> str:
    """Channel with the largest amplitude at ``f_target``; ties go to the lowest id."""
    amplitude = channel_amplitudes(_sorted_channels(channels), f_target)
    return str(amplitude["channel"].values[int(np.argmax(amplitude.values))])


def welch_segment_length(
    n_samples: int, sample_rate: float, segment_seconds: float | None = None
) -> int:
    """Welch segment length in samples.

    With ``segment_seconds=None`` this is the longest power of two that still
    yields at least six segments at 50 % overlap. Records too short for a
    16-sample segment are analysed as a single segment.
    """
    if segment_seconds is not None:
        length = int(round(segment_seconds * sample_rate))
        if length < 2:
            raise InputError("a Welch segment needs at least two samples")
        if length > n_samples:
            raise InsufficientDataError(
                f"{n_samples} samples do not fill one {length}-sample Welch segment"
            )
        return length
    limit = 2 * n_samples / 7
    if limit < 16:
        logger.debug("record of %d samples analysed as one segment", n_samples)
        return n_samples
    return int(2 ** np.floor(np.log2(limit)))


@dataclass(frozen=True)
class SpectralPeak:
    """Peak of the channel-averaged periodogram within a band.

    ``prominence`` is the peak power over the median power in the band.
    """

    frequency: float
    prominence: float


def _sorted_channels(channels: xr.DataArray) -> xr.DataArray:
    order = np.argsort([str(c) for c in channels["channel"].values], kind="stable")
    return channels.isel(channel=order)


def spectral_peak(
    channels: xr.DataArray,
    band: FrequencyBand,
    segment_seconds: float | None = None,
) -> SpectralPeak:
    """Locate the strongest spectral peak of ``channels`` inside ``band``.

    The channel-averaged Welch periodogram is searched within the band and the
    peak is refined by 3-point parabolic interpolation on log-power.
    """
    channels = _sorted_channels(validate_channels(channels))
    fs = channels.attrs["sample_rate"]
    band.check(fs)
    n = channels.sizes["time"]
    nperseg = welch_segment_length(n, fs, segment_seconds)
    freqs, power = scipy.signal.welch(
        channels.values,
        fs=fs,
        window="hann",
        nperseg=nperseg,
        noverlap=nperseg // 2,
        nfft=_NFFT_FACTOR * nperseg,
        detrend="constant",
        scaling="density",
        axis=-1,
    )
    average = np.mean(power, axis=0)

    inside = np.flatnonzero((freqs >= band.f_lo) & (freqs <= band.f_hi))
    if inside.size == 0:
        raise InsufficientDataError(
            f"band [{band.f_lo}, {band.f_hi}] Hz holds no frequency bin; use "
            "longer segments"
        )
    in_band = average[inside]
    top = in_band.max()
    if top <= 0 or top - in_band.min() <= np.finfo(float).eps * top:
        raise NoPeakError(
            f"spectrum is flat in [{band.f_lo}, {band.f_hi}] Hz; no spectral peak"
        )

    k = int(np.argmax(in_band))
    frequency = float(freqs[inside[k]])
    if 0 < k < in_band.size - 1 and np.all(in_band[k - 1 : k + 2] > 0):
        a, b, c = np.log(in_band[k - 1 : k + 2])
        curvature = a - 2 * b + c
        if curvature < 0:
            offset = 0.5 * (a - c) / curvature
            frequency += offset * (freqs[1] - freqs[0])
    frequency = float(np.clip(frequency, band.f_lo, band.f_hi))

    median = float(np.median(in_band))
    prominence = float(top / median) if median > 0 else float("inf")
    logger.debug(
        "spectral peak %.4f Hz, prominence %.1f (nperseg=%d)",
        frequency,
        prominence,
        nperseg,
    )
    return SpectralPeak(frequency=frequency, prominence=prominence)


def dominant_frequency(
    channels: xr.DataArray,
    band: FrequencyBand,
    segment_seconds: float | None = None,
    min_prominence: float | None = None,
) -> float:
    """Frequency (Hz) of the strongest oscillation inside ``band``.

    Parameters
    ----------
    channels : xarray.DataArray
        One or more channels sharing a sample rate.
    band : FrequencyBand
        Search band; must lie below the Nyquist frequency.
    segment_seconds : float, optional
        Welch segment length; see :func:`welch_segment_length`.
    min_prominence : float, optional
        If given, a peak whose power is less than ``min_prominence`` times the
        median band power raises :class:`~xosc.errors.NoPeakError`.

    Returns
    -------
    float
        Peak frequency within ``[band.f_lo, band.f_hi]``.
    """
    peak = spectral_peak(channels, band, segment_seconds)
    if min_prominence is not None and peak.prominence < min_prominence:
        raise NoPeakError(
            f"no spectral peak: prominence {peak.prominence:.2f} at "
            f"{peak.frequency:.4f} Hz is below {min_prominence}"
        )
    return peak.frequency


def spectral_mode_shape(
    channels: xr.DataArray,
    f_target: float,
    reference: str,
    segment_seconds: float | None = None,
) -> xr.Dataset:
    """Forced-oscillation mode shape from Welch-averaged cross-spectra.

    Each channel's angle is the phase of its cross-spectrum with
    ``reference`` at ``f_target``; its magnitude is the RMS of the segment
    amplitudes, so a sinusoid of amplitude ``A`` reports ``A``.
    """
    channels = validate_channels(channels)
    ids = [str(c) for c in channels["channel"].values]
    if reference not in ids:
        raise InputError(f"reference channel {reference!r} is not among the channels")
    fs = channels.attrs["sample_rate"]
    _check_frequency(f_target, fs)

    n = channels.sizes["time"]
    nperseg = welch_segment_length(n, fs, segment_seconds)
    step = max(nperseg // 2, 1)
    segments = np.lib.stride_tricks.sliding_window_view(
        channels.values, nperseg, axis=-1
    )[:, ::step, :]
    segments = segments - segments.mean(axis=-1, keepdims=True)
    taper = scipy.signal.windows.hann(nperseg, sym=False)
    if not taper.sum() > 0:
        raise InsufficientDataError("segments are too short to taper")

    spectra = 2.0 / taper.sum() * _goertzel(segments * taper, f_target, fs)
    ref_spectrum = spectra[ids.index(reference)]
    cross = np.sum(spectra * np.conj(ref_spectrum), axis=-1)
    magnitude = np.sqrt(np.mean(np.abs(spectra) ** 2, axis=-1))
    if magnitude[ids.index(reference)] == 0:
        raise DegenerateInputError(
            f"reference channel {reference!r} carries no energy at {f_target} Hz"
        )

    shape = mode_shape(
        ids,
        magnitude,
        np.degrees(np.angle(cross)),
        frequency=f_target,
        reference=reference,
    )
    return shape.assign_attrs(segments=int(segments.shape[1]), segment_length=nperseg)
