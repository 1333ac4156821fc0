"""Magnitude thresholding, constant-angle alignment and angle-difference ranking."""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import xarray as xr

from .errors import InputError
from .shapes import validate_mode_shape
from .utils import wrap_angle


@dataclass(frozen=True)
class AlignmentResult:
    """Outcome of :func:`align_shapes`.

    Attributes
    ----------
    delta : float
        Constant shift (degrees) added to the forced-shape angles.
    diffs : dict
        ``{channel: wrap(natural - (forced + delta))}`` in degrees.
    rms : float
        Root mean square of ``diffs`` (weighted if the alignment was).
    channels_used : tuple of str
    weights : dict
        Per-channel weights of the objective (all 1 when unweighted).
    """

    delta: float
    diffs: dict[str, float]
    rms: float
    channels_used: tuple[str, ...]
    weights: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "delta": self.delta,
            "diffs": dict(self.diffs),
            "rms": self.rms,
            "channels_used": list(self.channels_used),
            "weights": dict(self.weights),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> AlignmentResult:
        return cls(
            delta=float(data["delta"]),
            diffs={str(k): float(v) for k, v in data["diffs"].items()},
            rms=float(data["rms"]),
            channels_used=tuple(str(c) for c in data["channels_used"]),
            weights={str(k): float(v) for k, v in data.get("weights", {}).items()},
        )


class VerdictKind(str, enum.Enum):
    SINGLE_SOURCE = "single_source"
    AMBIGUOUS = "ambiguous"
    NO_SOURCE = "no_source"


@dataclass(frozen=True)
class Verdict:
    """Result of the dominance test: the source channel(s), if any."""

    kind: VerdictKind
    channels: tuple[str, ...] = ()

    @classmethod
    def single(cls, channel: str) -> Verdict:
        return cls(VerdictKind.SINGLE_SOURCE, (channel,))

    @classmethod
    def ambiguous(cls, channels: Iterable[str]) -> Verdict:
        return cls(VerdictKind.AMBIGUOUS, tuple(channels))

    @classmethod
    def none(cls) -> Verdict:
        return cls(VerdictKind.NO_SOURCE)

    @property
    def source(self) -> str | None:
        """The source channel of a single-source verdict."""
        return self.channels[0] if self.kind is VerdictKind.SINGLE_SOURCE else None

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "channels": list(self.channels)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Verdict:
        return cls(VerdictKind(data["kind"]), tuple(str(c) for c in data["channels"]))


def magnitude_filter(shape: xr.Dataset, threshold_fraction: float) -> list[str]:
    """Channels whose magnitude is at least ``threshold_fraction`` of the maximum.

    The strongest channel always qualifies. Order follows the shape.
    """
    if shape.sizes.get("channel", 0) == 0:
        raise InputError("cannot filter an empty mode shape")
    validate_mode_shape(shape, gauge_fixed=False)
    if not 0 <= threshold_fraction <= 1:
        raise InputError("threshold_fraction must lie in [0, 1]")
    magnitude = shape["magnitude"].values
    keep = magnitude >= threshold_fraction * magnitude.max()
    return [str(c) for c in shape["channel"].values[keep]]


def _objective(residuals: np.ndarray, weights: np.ndarray, delta: float) -> float:
    diff = wrap_angle(residuals - delta)
    return float(np.sqrt(np.sum(weights * diff**2) / np.sum(weights)))


def _refine(
    residuals: np.ndarray, weights: np.ndarray, center: float, width: float
) -> float:
    """Exact minimiser of the wrapped RMS over ``[center - width, center + width]``.

    The objective is quadratic between the shifts where some residual wraps,
    so each such segment has a closed-form minimiser.
    """
    local = wrap_angle(residuals - center)
    # shifts (relative to center) at which a residual crosses +-180
    cuts = np.concatenate([local - 180.0, local + 180.0])
    cuts = np.sort(cuts[(cuts > -width) & (cuts < width)])
    edges = np.concatenate([[-width], cuts, [width]])

    best_t, best_value = 0.0, np.inf
    for lo, hi in zip(edges[:-1], edges[1:], strict=True):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        unwrapped = wrap_angle(local - mid) + mid
        t = float(np.clip(np.sum(weights * unwrapped) / np.sum(weights), lo, hi))
        value = np.sum(weights * wrap_angle(local - t) ** 2)
        if value < best_value or (value == best_value and abs(t) < abs(best_t)):
            best_t, best_value = t, value
    return float(wrap_angle(center + best_t))


def align_shapes(
    forced: xr.Dataset,
    natural: xr.Dataset,
    channels: Sequence[str],
    *,
    weighted: bool = False,
    search_width: float = 30.0,
) -> AlignmentResult:
    """Rotate the forced shape by the constant angle that best matches the natural one.

    The shift ``delta`` minimises the RMS over ``channels`` of
    ``wrap(natural_angle - (forced_angle + delta))``. The circular mean of the
    angle differences is the first guess; the wrapped objective is then
    minimised exactly within ``search_width`` degrees of it.

    Parameters
    ----------
    forced, natural : xarray.Dataset
        Mode shapes.
    channels : sequence of str
        At least two channels present in both shapes.
    weighted : bool, default False
        Weight each channel by the product of its normalised magnitudes in the
        two shapes.
    search_width : float, default 30.0
        Half-width (degrees) of the refinement window, at most 180.

    Returns
    -------
    AlignmentResult
    """
    validate_mode_shape(forced, gauge_fixed=False)
    validate_mode_shape(natural, gauge_fixed=False)
    channels = list(dict.fromkeys(str(c) for c in channels))
    if len(channels) < 2:
        raise InputError("alignment needs at least two channels")
    for shape, label in ((forced, "forced"), (natural, "natural")):
        missing = set(channels) - {str(c) for c in shape["channel"].values}
        if missing:
            raise InputError(f"channels {sorted(missing)} missing from the {label} shape")
    if not 0 < search_width <= 180:
        raise InputError("search_width must lie in (0, 180]")

    f = forced.sel(channel=channels)
    n = natural.sel(channel=channels)
    residuals = wrap_angle(n["angle"].values - f["angle"].values)
    if weighted:
        weights = (f["magnitude"].values / forced["magnitude"].values.max()) * (
            n["magnitude"].values / natural["magnitude"].values.max()
        )
        if not np.sum(weights) > 0:
            raise InputError("all alignment weights are zero")
    else:
        weights = np.ones(len(channels))

    guess = float(np.degrees(np.angle(np.sum(weights * np.exp(1j * np.radians(residuals))))))
    delta = _refine(residuals, weights, guess, search_width)
    diffs = wrap_angle(residuals - delta)

    return AlignmentResult(
        delta=delta,
        diffs={c: float(d) for c, d in zip(channels, diffs, strict=True)},
        rms=_objective(residuals, weights, delta),
        channels_used=tuple(channels),
        weights={c: float(w) for c, w in zip(channels, weights, strict=True)},
    )


def rank_differences(result: AlignmentResult) -> list[tuple[str, float]]:
    """``(channel, |diff|)`` pairs, largest first, ties by channel id."""
    return sorted(
        ((c, abs(d)) for c, d in result.diffs.items()), key=lambda p: (-p[1], p[0])
    )


def dominance_verdict(
    ranked: Sequence[tuple[str, float]], ratio_k: float, min_angle: float
) -> Verdict:
    """Decide whether one channel's angle difference dominates the rest.

    Parameters
    ----------
    ranked : sequence of (str, float)
        Output of :func:`rank_differences`.
    ratio_k : float
        The top difference must be at least ``ratio_k`` times the second for
        a single source.
    min_angle : float
        Differences below this many degrees are not evidence of a source.
    """
    if not ratio_k > 1:
        raise InputError("ratio_k must be greater than 1")
    if not min_angle > 0:
        raise InputError("min_angle must be positive")
    if not ranked:
        return Verdict.none()

    top_channel, top = ranked[0]
    if top < min_angle:
        return Verdict.none()
    second = ranked[1][1] if len(ranked) > 1 else 0.0
    if top >= ratio_k * second:
        return Verdict.single(top_channel)
    return Verdict.ambiguous(c for c, d in ranked if d >= top / ratio_k)
