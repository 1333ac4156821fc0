"""Mode shapes and phasors.

A mode shape is an :class:`xarray.Dataset` along a ``channel`` dimension with
``magnitude``, ``angle`` (degrees, wrapped to ``(-180, 180]``) and
``normalized`` variables, and ``frequency`` / ``reference`` attributes. The
reference channel's angle is exactly zero.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import xarray as xr
from numpy.typing import ArrayLike

from .errors import DegenerateInputError, InputError
from .utils import wrap_angle


@dataclass(frozen=True)
class Phasor:
    """One complex phasor: ``magnitude`` and ``angle`` in degrees."""

    magnitude: float
    angle: float

    def __post_init__(self) -> None:
        if not self.magnitude >= 0:
            raise InputError("phasor magnitude must be non-negative")

    @classmethod
    def from_complex(cls, value: complex) -> Phasor:
        return cls(float(abs(value)), float(wrap_angle(np.degrees(np.angle(value)))))

    def to_complex(self) -> complex:
        return complex(self.magnitude * np.exp(1j * np.radians(self.angle)))


def mode_shape(
    channel: Sequence[str],
    magnitude: ArrayLike,
    angle: ArrayLike,
    *,
    frequency: float,
    reference: str,
) -> xr.Dataset:
    """Build a mode shape from magnitudes and angles (degrees).

    Angles are re-referenced so that ``reference`` sits at zero.
    """
    channel = [str(c) for c in channel]
    magnitude = np.asarray(magnitude, dtype=float)
    angle = np.asarray(angle, dtype=float)

    if len(channel) == 0:
        raise InputError("a mode shape needs at least one channel")
    if len(set(channel)) != len(channel):
        raise InputError("channel ids of a mode shape must be unique")
    if magnitude.shape != (len(channel),) or angle.shape != (len(channel),):
        raise InputError("magnitude and angle must have one entry per channel")
    if not (np.all(np.isfinite(magnitude)) and np.all(np.isfinite(angle))):
        raise InputError("mode shape magnitudes and angles must be finite")
    if np.any(magnitude < 0):
        raise InputError("mode shape magnitudes must be non-negative")
    if reference not in channel:
        raise InputError(f"reference channel {reference!r} is not in the shape")
    if not (np.isfinite(frequency) and frequency > 0):
        raise InputError("mode shape frequency must be positive")

    ref = channel.index(reference)
    angle = wrap_angle(angle - angle[ref])
    angle[ref] = 0.0

    peak = magnitude.max()
    normalized = magnitude / peak if peak > 0 else np.zeros_like(magnitude)

    return xr.Dataset(
        {
            "magnitude": ("channel", magnitude),
            "angle": ("channel", angle),
            "normalized": ("channel", normalized),
        },
        coords={"channel": channel},
        attrs={"frequency": float(frequency), "reference": reference},
    )


def mode_shape_from_phasors(
    phasors: ArrayLike,
    channel: Sequence[str],
    *,
    frequency: float,
    reference: str,
) -> xr.Dataset:
    """Build a mode shape from complex phasors, one per channel."""
    phasors = np.asarray(phasors, dtype=complex)
    channel = [str(c) for c in channel]
    if reference not in channel:
        raise InputError(f"reference channel {reference!r} is not in the shape")
    if abs(phasors[channel.index(reference)]) == 0:
        raise DegenerateInputError(
            f"reference channel {reference!r} has zero amplitude; its phase "
            "is undefined"
        )
    return mode_shape(
        channel,
        np.abs(phasors),
        np.degrees(np.angle(phasors)),
        frequency=frequency,
        reference=reference,
    )


def validate_mode_shape(shape: xr.Dataset, *, gauge_fixed: bool = True) -> xr.Dataset:
    """Check the mode-shape invariants and return ``shape`` unchanged.

    With ``gauge_fixed=False`` the reference angle may differ from zero, as in
    a shape produced by :func:`rotate`.
    """
    if not isinstance(shape, xr.Dataset):
        raise InputError("a mode shape must be an xarray.Dataset")
    missing = {"magnitude", "angle"} - set(shape.data_vars)
    if missing or "channel" not in shape.dims:
        raise InputError("a mode shape needs 'magnitude' and 'angle' along 'channel'")
    reference = shape.attrs.get("reference")
    if reference not in shape["channel"].values:
        raise InputError(f"reference channel {reference!r} is not in the shape")
    magnitude = shape["magnitude"].values
    angle = shape["angle"].values
    if not (np.all(np.isfinite(magnitude)) and np.all(magnitude >= 0)):
        raise InputError("mode shape magnitudes must be finite and non-negative")
    if np.any(angle <= -180) or np.any(angle > 180):
        raise InputError("mode shape angles must be wrapped to (-180, 180]")
    if gauge_fixed and shape["angle"].sel(channel=reference).item() != 0:
        raise InputError("the reference channel angle must be exactly 0")
    return shape


def to_complex(shape: xr.Dataset) -> xr.DataArray:
    """Complex phasors of a mode shape."""
    return shape["magnitude"] * np.exp(1j * np.radians(shape["angle"]))


def subset(shape: xr.Dataset, channels: Sequence[str]) -> xr.Dataset:
    """Restrict to ``channels``, keeping the mode-shape invariants.

    If the reference channel is dropped, the strongest remaining channel
    becomes the new reference.
    """
    channels = [c for c in shape["channel"].values if c in set(channels)]
    if not channels:
        raise InputError("no channel left in the mode shape")
    sub = shape.sel(channel=channels)
    reference = shape.attrs["reference"]
    if reference not in channels:
        reference = str(sub["channel"].values[int(np.argmax(sub["magnitude"].values))])
    return mode_shape(
        channels,
        sub["magnitude"].values,
        sub["angle"].values,
        frequency=shape.attrs["frequency"],
        reference=reference,
    )


def shape_to_dict(shape: xr.Dataset) -> dict[str, Any]:
    return {
        "frequency": float(shape.attrs["frequency"]),
        "reference": str(shape.attrs["reference"]),
        "channels": {
            str(c): {"magnitude": float(m), "angle": float(a)}
            for c, m, a in zip(
                shape["channel"].values,
                shape["magnitude"].values,
                shape["angle"].values,
                strict=True,
            )
        },
    }


def shape_from_dict(data: Mapping[str, Any]) -> xr.Dataset:
    try:
        entries = data["channels"]
        channel = list(entries)
        return mode_shape(
            channel,
            [float(entries[c]["magnitude"]) for c in channel],
            [float(entries[c]["angle"]) for c in channel],
            frequency=float(data["frequency"]),
            reference=str(data["reference"]),
        )
    except (KeyError, TypeError) as err:
        raise InputError(f"malformed mode shape document: {err!r}") from err


def rotate(shape: xr.Dataset, angle: float) -> xr.Dataset:
    """Add ``angle`` degrees to every channel.

    The result leaves the reference gauge: its reference angle is
    ``wrap(angle)``. Angle comparisons such as :func:`xosc.align_shapes` accept
    it; builders like :func:`mode_shape` would pin the reference back to zero.
    """
    return shape.assign(angle=("channel", wrap_angle(shape["angle"].values + angle)))
