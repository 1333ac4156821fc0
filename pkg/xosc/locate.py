"""End-to-end source location and the angle-weighted triangulation fallback."""

from __future__ import annotations

import logging
import warnings
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, TypeVar

import numpy as np
import shapely
import xarray as xr

from .align import (
    AlignmentResult,
    Verdict,
    VerdictKind,
    align_shapes,
    dominance_verdict,
    magnitude_filter,
    rank_differences,
)
from .config import PipelineConfig
from .errors import (
    DegenerateWeightsError,
    InputError,
    NoPeakError,
    PipelineError,
    XoscError,
)
from .ringdown import matrix_pencil, select_mode
from .shapes import shape_from_dict, shape_to_dict, subset, validate_mode_shape
from .signal import (
    dominant_frequency,
    spectral_mode_shape,
    strongest_channel,
    validate_channels,
)
from .utils import from_tangent_plane, to_tangent_plane, wrap_angle

logger = logging.getLogger(__name__)

T = TypeVar("T")

REPORT_SCHEMA = "v1"
TRIANGULATION_NOTE = (
    "triangulated point is an angle-difference weighted centroid, a placeholder "
    "for a dedicated triangulation method"
)


@dataclass(frozen=True)
class GeoPoint:
    """Geographic position of a measurement point, in degrees."""

    latitude: float
    longitude: float

    def __post_init__(self) -> None:
        if not -90 <= self.latitude <= 90:
            raise InputError(f"latitude must lie in [-90, 90], got {self.latitude}")
        if not -180 < self.longitude <= 180:
            raise InputError(
                f"longitude must lie in (-180, 180], got {self.longitude}"
            )

    def to_point(self) -> shapely.Point:
        return shapely.Point(self.longitude, self.latitude)

    def to_dict(self) -> dict[str, float]:
        return {"latitude": self.latitude, "longitude": self.longitude}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GeoPoint:
        return cls(float(data["latitude"]), float(data["longitude"]))


def triangulate(
    candidates: Sequence[tuple[str, float]], geo: Mapping[str, GeoPoint]
) -> GeoPoint:
    """Weighted centroid of the candidate channels, weights ``|diff|``.

    The average is taken on an azimuthal equidistant plane touching the
    sphere at the unweighted centroid of the candidates, then projected back.

    Parameters
    ----------
    candidates : sequence of (str, float)
        ``(channel, angle difference)`` pairs, e.g. the ambiguous part of a
        ranking. Channels without coordinates are ignored.
    geo : mapping
        ``{channel: GeoPoint}``.

    Returns
    -------
    GeoPoint

    Examples
    --------
    >>> geo = {"a": GeoPoint(30.0, -85.0), "b": GeoPoint(32.0, -85.0)}
    >>> p = triangulate([("a", 20.0), ("b", 20.0)], geo)
    >>> round(p.latitude, 6), round(p.longitude, 6)
    (31.0, -85.0)
    """
    located = [(c, abs(float(d))) for c, d in candidates if c in geo]
    if len(located) < 2:
        raise InputError(
            f"triangulation needs at least two geolocated candidates, got {len(located)}"
        )
    weights = np.array([w for _, w in located])
    if not np.all(np.isfinite(weights)):
        raise InputError("triangulation weights must be finite")
    if not weights.sum() > 0:
        raise DegenerateWeightsError("all triangulation weights are zero")
    points = [geo[c] for c, _ in located]

    nonzero = np.flatnonzero(weights > 0)
    if nonzero.size == 1:
        return points[int(nonzero[0])]

    lat = np.array([p.latitude for p in points])
    # longitudes unwrapped around the first point, so a cluster across the
    # antimeridian keeps its centroid
    lon = wrap_angle(np.array([p.longitude for p in points]) - points[0].longitude)
    lon = lon + points[0].longitude
    center = shapely.MultiPoint(np.column_stack([lon, lat])).centroid
    lon_0 = float(wrap_angle(center.x))
    xy = to_tangent_plane(lat, lon, center.y, lon_0)
    mean = np.average(xy, axis=0, weights=weights)
    out_lat, out_lon = from_tangent_plane(mean, center.y, lon_0)
    return GeoPoint(float(out_lat[0]), float(out_lon[0]))


@dataclass(frozen=True)
class LocationReport:
    """Every intermediate result of :func:`locate_source`.

    ``forcing_frequency`` and the later fields are ``None`` when the run
    stopped early with a no-source verdict. ``diagnostics`` is a list of
    ``{"stage": ..., "message": ...}`` notes.
    """

    verdict: Verdict
    config: PipelineConfig
    forcing_frequency: float | None = None
    natural_frequency: float | None = None
    natural_damping_ratio: float | None = None
    forced_shape: xr.Dataset | None = field(default=None, repr=False)
    natural_shape: xr.Dataset | None = field(default=None, repr=False)
    alignment: AlignmentResult | None = None
    ranking: list[tuple[str, float]] = field(default_factory=list)
    triangulated: GeoPoint | None = None
    diagnostics: list[dict[str, str]] = field(default_factory=list)

    @property
    def source(self) -> str | None:
        return self.verdict.source

    def recompute_verdict(self) -> Verdict:
        """Apply the dominance test to :attr:`ranking` with the echoed config."""
        return dominance_verdict(self.ranking, self.config.ratio_k, self.config.min_angle)

    def to_dict(self) -> dict[str, Any]:
        def _shape(shape):
            return None if shape is None else shape_to_dict(shape)

        return {
            "schema": REPORT_SCHEMA,
            "config": self.config.to_dict(),
            "forcing_frequency": self.forcing_frequency,
            "natural_frequency": self.natural_frequency,
            "natural_damping_ratio": self.natural_damping_ratio,
            "forced_shape": _shape(self.forced_shape),
            "natural_shape": _shape(self.natural_shape),
            "alignment": None if self.alignment is None else self.alignment.to_dict(),
            "ranking": [{"channel": c, "diff": d} for c, d in self.ranking],
            "verdict": self.verdict.to_dict(),
            "triangulated": (
                None if self.triangulated is None else self.triangulated.to_dict()
            ),
            "diagnostics": [dict(d) for d in self.diagnostics],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> LocationReport:
        def _shape(doc):
            return None if doc is None else shape_from_dict(doc)

        def _float(value):
            return None if value is None else float(value)

        return cls(
            verdict=Verdict.from_dict(data["verdict"]),
            config=PipelineConfig.from_dict(data["config"]),
            forcing_frequency=_float(data.get("forcing_frequency")),
            natural_frequency=_float(data.get("natural_frequency")),
            natural_damping_ratio=_float(data.get("natural_damping_ratio")),
            forced_shape=_shape(data.get("forced_shape")),
            natural_shape=_shape(data.get("natural_shape")),
            alignment=(
                None
                if data.get("alignment") is None
                else AlignmentResult.from_dict(data["alignment"])
            ),
            ranking=[(str(r["channel"]), float(r["diff"])) for r in data["ranking"]],
            triangulated=(
                None
                if data.get("triangulated") is None
                else GeoPoint.from_dict(data["triangulated"])
            ),
            diagnostics=[dict(d) for d in data.get("diagnostics", [])],
        )


def _stage(stage: str, func: Callable[..., T], *args: Any, **kwargs: Any) -> T:
    try:
        return func(*args, **kwargs)
    except XoscError as err:
        raise PipelineError(stage, str(err)) from err


def locate_source(
    forced: xr.DataArray,
    *,
    ringdown: xr.DataArray | None = None,
    baseline: xr.Dataset | None = None,
    config: PipelineConfig | None = None,
    geo: Mapping[str, GeoPoint] | None = None,
) -> LocationReport:
    """Locate the source of a forced oscillation by mode-shape comparison.

    The forcing frequency is the dominant spectral peak of the forced window.
    The forced mode shape at that frequency is compared with the shape of the
    natural mode closest to it, identified from ring-down data or taken from a
    baseline. After the best constant rotation, the channel whose angle
    deviates most from the natural shape is the source, provided it dominates
    the other deviations.

    Parameters
    ----------
    forced : xarray.DataArray
        Channels recorded during the forced oscillation.
    ringdown : xarray.DataArray, optional
        Channels recorded after the forcing stopped.
    baseline : xarray.Dataset, optional
        Natural mode shape known in advance. Ignored, with a warning, when
        ``ringdown`` is given as well.
    config : PipelineConfig, optional
    geo : mapping, optional
        ``{channel: GeoPoint}``; used to triangulate ambiguous verdicts.

    Returns
    -------
    LocationReport
        A missing spectral peak gives a no-source report instead of an error.

    Raises
    ------
    PipelineError
        Any other stage failure, with the stage name and the original error
        chained.
    """
    config = PipelineConfig() if config is None else config
    diagnostics: list[dict[str, str]] = []

    def note(stage: str, message: str) -> None:
        diagnostics.append({"stage": stage, "message": message})

    forced = _stage("input", validate_channels, forced)
    time = forced["time"].values
    note(
        "input",
        f"forced window {time[0]:.6g} s to {time[-1]:.6g} s, "
        f"{forced.sizes['time']} samples, {forced.sizes['channel']} channels at "
        f"{forced.attrs['sample_rate']:.6g} Hz",
    )
    if ringdown is None and baseline is None:
        raise PipelineError(
            "input", "either ring-down data or a baseline shape is required"
        )
    if ringdown is not None and baseline is not None:
        message = "both ring-down data and a baseline shape given; baseline ignored"
        warnings.warn(message, UserWarning, stacklevel=2)
        note("input", message)
        baseline = None

    try:
        frequency = dominant_frequency(
            forced,
            config.band,
            config.welch_segment_seconds,
            min_prominence=config.min_prominence,
        )
    except NoPeakError as err:
        note("dominant_frequency", str(err))
        logger.info("no forced oscillation found: %s", err)
        return LocationReport(
            verdict=Verdict.none(), config=config, diagnostics=diagnostics
        )
    except XoscError as err:
        raise PipelineError("dominant_frequency", str(err)) from err
    note("dominant_frequency", f"forcing frequency {frequency:.6g} Hz")

    reference = config.reference_channel
    if reference is None:
        reference = _stage("reference", strongest_channel, forced, frequency)
    elif reference not in forced["channel"].values:
        raise PipelineError(
            "reference", f"reference channel {reference!r} is not in the forced window"
        )
    note("reference", f"phase reference {reference}")

    forced_shape = _stage(
        "spectral_mode_shape",
        spectral_mode_shape,
        forced,
        frequency,
        reference,
        config.welch_segment_seconds,
    )
    note(
        "spectral_mode_shape",
        f"{forced_shape.attrs['segments']} segments of "
        f"{forced_shape.attrs['segment_length']} samples",
    )

    if ringdown is not None:
        ringdown = _stage("matrix_pencil", validate_channels, ringdown)
        rd_time = ringdown["time"].values
        note(
            "matrix_pencil",
            f"ring-down window {rd_time[0]:.6g} s to {rd_time[-1]:.6g} s",
        )
        modes = _stage(
            "matrix_pencil",
            matrix_pencil,
            ringdown,
            config.model_order,
            reference=reference if reference in ringdown["channel"].values else None,
        )
        mode = _stage("select_mode", select_mode, modes, frequency, config.mode_tol)
        natural_shape = mode.shape
        natural_frequency = mode.frequency
        natural_damping = mode.damping_ratio
        note(
            "select_mode",
            f"natural mode {mode.frequency:.6g} Hz, damping ratio "
            f"{mode.damping_ratio:.4g}, fit error {mode.fit_error:.3g}",
        )
    else:
        natural_shape = _stage("baseline", validate_mode_shape, baseline)
        natural_frequency = float(natural_shape.attrs["frequency"])
        natural_damping = None
        note("baseline", f"baseline natural shape at {natural_frequency:.6g} Hz")
        if abs(natural_frequency - frequency) > config.mode_tol:
            message = (
                f"baseline frequency {natural_frequency:.6g} Hz is more than "
                f"{config.mode_tol} Hz from the forcing frequency"
            )
            warnings.warn(message, UserWarning, stacklevel=2)
            note("baseline", message)

    natural_ids = {str(c) for c in natural_shape["channel"].values}
    common = [str(c) for c in forced_shape["channel"].values if c in natural_ids]
    dropped = sorted(set(map(str, forced_shape["channel"].values)) - set(common))
    if dropped:
        note("align", f"channels without a natural-shape entry: {dropped}")
    if len(common) < 2:
        raise PipelineError(
            "align", "fewer than two channels are shared by the forced and natural shapes"
        )

    kept = _stage(
        "magnitude_filter",
        magnitude_filter,
        subset(forced_shape, common),
        config.threshold_fraction,
    )
    note(
        "magnitude_filter",
        f"{len(kept)} of {len(common)} channels at or above "
        f"{config.threshold_fraction:g} of the largest magnitude",
    )
    if len(kept) < 2:
        raise PipelineError(
            "magnitude_filter", "fewer than two channels pass the magnitude threshold"
        )

    alignment = _stage(
        "align",
        align_shapes,
        forced_shape,
        natural_shape,
        kept,
        weighted=config.weighted_alignment,
    )
    ranking = rank_differences(alignment)
    verdict = _stage(
        "verdict", dominance_verdict, ranking, config.ratio_k, config.min_angle
    )
    note(
        "verdict",
        f"{verdict.kind.value} (ratio_k {config.ratio_k:g}, min_angle "
        f"{config.min_angle:g} deg)",
    )

    triangulated = None
    if verdict.kind is VerdictKind.AMBIGUOUS and geo:
        candidates = [(c, d) for c, d in ranking if c in verdict.channels]
        try:
            triangulated = triangulate(candidates, geo)
            note("triangulate", TRIANGULATION_NOTE)
        except XoscError as err:
            message = f"triangulation skipped: {err}"
            warnings.warn(message, UserWarning, stacklevel=2)
            note("triangulate", message)

    logger.info(
        "verdict %s %s at %.4f Hz", verdict.kind.value, list(verdict.channels), frequency
    )
    return LocationReport(
        verdict=verdict,
        config=config,
        forcing_frequency=frequency,
        natural_frequency=natural_frequency,
        natural_damping_ratio=natural_damping,
        forced_shape=forced_shape,
        natural_shape=natural_shape,
        alignment=alignment,
        ranking=ranking,
        triangulated=triangulated,
        diagnostics=diagnostics,
    )
