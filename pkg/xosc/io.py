"""Channel CSV files, geo tables, mode-shape files and JSON reports.

CSV layout: a header row, a first column ``t`` in seconds and one column per
channel. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import io
import json
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import xarray as xr

from .align import Verdict, VerdictKind, dominance_verdict
from .config import PipelineConfig
from .errors import InputError, ParseError, XoscError
from .locate import REPORT_SCHEMA, GeoPoint, LocationReport
from .shapes import shape_from_dict, shape_to_dict, validate_mode_shape
from .signal import make_channels, validate_channels

TIME_COLUMN = "t"
# tolerated deviation of a time step from the median step, relative
JITTER_TOLERANCE = 1e-6


def _read_table(path: str | Path) -> tuple[pd.DataFrame, int, np.ndarray]:
    """Parse a commented CSV; also return the header and row line numbers."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from err
    lines = [
        i
        for i, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise ParseError(f"{path} holds no header row")
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            comment="#",
            skipinitialspace=True,
            float_precision="round_trip",
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise ParseError(f"{path} is not a valid CSV file: {err}") from err
    # pandas renames repeated headers, so look at the raw header row
    raw = [c.strip() for c in text.splitlines()[lines[0] - 1].split(",")]
    if len(set(raw)) != len(raw):
        raise ParseError("duplicate column names", line=lines[0])
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame, lines[0], np.asarray(lines[1:])


def _numeric(frame: pd.DataFrame) -> pd.DataFrame:
    return frame.apply(pd.to_numeric, errors="coerce")


def load_csv(path: str | Path, *, trim_common: bool = False) -> xr.DataArray:
    """Read uniformly sampled channels from a CSV file.

    Parameters
    ----------
    path : str or Path
    trim_common : bool, default False
        Drop leading and trailing rows in which some channel is empty, so
        channels of different extent are cut to their common window.
        Interior gaps remain an error.

    Returns
    -------
    xarray.DataArray
        Dims ``("channel", "time")``; see :func:`xosc.make_channels`.

    Raises
    ------
    ParseError
        Missing ``t`` column, empty or non-numeric cells, non-increasing time
        or sampling jitter above ``1e-6`` of the sample interval. The message
        names the offending line.
    """
    frame, header, lines = _read_table(path)
    if TIME_COLUMN not in frame.columns:
        raise ParseError(f"missing time column {TIME_COLUMN!r}", line=header)
    if frame.columns[0] != TIME_COLUMN:
        raise ParseError(f"the first column must be {TIME_COLUMN!r}", line=header)
    names = list(frame.columns[1:])
    if not names:
        raise ParseError("no channel columns")

    values = _numeric(frame)
    if trim_common:
        complete = np.flatnonzero(values[names].notna().all(axis=1).to_numpy())
        if complete.size:
            keep = slice(int(complete[0]), int(complete[-1]) + 1)
            values, lines = values.iloc[keep], lines[keep]

    bad = values.isna().to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise ParseError(
            f"NaN or non-numeric cell in column {values.columns[col]!r}",
            line=int(lines[row]),
        )
    if len(values) < 2:
        raise ParseError("at least two data rows are required")

    time = values[TIME_COLUMN].to_numpy(dtype=float)
    step = np.diff(time)
    if np.any(step <= 0):
        row = int(np.flatnonzero(step <= 0)[0]) + 1
        raise ParseError(
            "time column is not strictly increasing", line=int(lines[row])
        )
    dt = float(np.median(step))
    jitter = np.abs(step - dt) > JITTER_TOLERANCE * dt
    if np.any(jitter):
        row = int(np.flatnonzero(jitter)[0]) + 1
        raise ParseError(
            f"sampling jitter exceeds {JITTER_TOLERANCE:g} of the {dt:g} s interval",
            line=int(lines[row]),
        )

    sample_rate = (len(time) - 1) / (time[-1] - time[0])
    data = {name: values[name].to_numpy(dtype=float) for name in names}
    return make_channels(data, sample_rate, start_time=float(time[0]))


def write_csv(channels: xr.DataArray, path: str | Path) -> None:
    """Write channels in the layout read by :func:`load_csv`."""
    channels = validate_channels(channels)
    frame = pd.DataFrame(
        channels.values.T, columns=[str(c) for c in channels["channel"].values]
    )
    frame.insert(0, TIME_COLUMN, channels["time"].values)
    frame.to_csv(path, index=False, float_format="%.17g")


def load_geo(path: str | Path) -> dict[str, GeoPoint]:
    """Read ``channel,lat,lon`` rows into ``{channel: GeoPoint}``."""
    frame, header, lines = _read_table(path)
    missing = {"channel", "lat", "lon"} - set(frame.columns)
    if missing:
        raise ParseError(f"geo file lacks columns {sorted(missing)}", line=header)
    coords = _numeric(frame[["lat", "lon"]])
    out: dict[str, GeoPoint] = {}
    for row, (channel, lat, lon) in enumerate(
        zip(frame["channel"].astype(str), coords["lat"], coords["lon"], strict=True)
    ):
        channel = channel.strip()
        if channel in out:
            raise ParseError(f"duplicate channel {channel!r}", line=int(lines[row]))
        try:
            out[channel] = GeoPoint(float(lat), float(lon))
        except InputError as err:
            raise ParseError(str(err), line=int(lines[row])) from err
    return out


def write_json(data: Mapping[str, Any], path: str | Path) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def read_json(path: str | Path) -> dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON: {err.msg}", line=err.lineno) from err
    if not isinstance(data, dict):
        raise ParseError(f"{path} must hold a JSON object")
    return data


def write_shape(shape: xr.Dataset, path: str | Path) -> None:
    write_json(shape_to_dict(validate_mode_shape(shape)), path)


def load_shape(path: str | Path) -> xr.Dataset:
    """Read a mode-shape file.

    A whole report is accepted too; its natural shape is used.
    """
    data = read_json(path)
    if "channels" not in data and data.get("natural_shape") is not None:
        data = data["natural_shape"]
    return shape_from_dict(data)


_REQUIRED = {
    "schema": str,
    "config": dict,
    "ranking": list,
    "verdict": dict,
    "diagnostics": list,
}
_OPTIONAL = {
    "forcing_frequency": (int, float),
    "natural_frequency": (int, float),
    "natural_damping_ratio": (int, float),
    "forced_shape": dict,
    "natural_shape": dict,
    "alignment": dict,
    "triangulated": dict,
}


def validate_report(document: Mapping[str, Any]) -> Mapping[str, Any]:
    """Check a report document against the ``v1`` schema and return it.

    Besides keys and types, the verdict must follow from the ranking under
    the echoed ``ratio_k`` and ``min_angle``, and a triangulated point may
    only accompany an ambiguous verdict.
    """
    for key, kind in _REQUIRED.items():
        if not isinstance(document.get(key), kind):
            raise ParseError(f"report key {key!r} is missing or not a {kind.__name__}")
    if document["schema"] != REPORT_SCHEMA:
        raise ParseError(f"unsupported report schema {document['schema']!r}")
    for key, kind in _OPTIONAL.items():
        value = document.get(key)
        if value is not None and not isinstance(value, kind):
            raise ParseError(f"report key {key!r} has the wrong type")

    try:
        config = PipelineConfig.from_dict(document["config"])
        verdict = Verdict.from_dict(document["verdict"])
        ranking = [(str(r["channel"]), float(r["diff"])) for r in document["ranking"]]
        for note in document["diagnostics"]:
            if set(note) != {"stage", "message"}:
                raise ParseError("diagnostics entries need 'stage' and 'message'")
        if document.get("triangulated") is not None:
            GeoPoint.from_dict(document["triangulated"])
        for key in ("forced_shape", "natural_shape"):
            if document.get(key) is not None:
                shape_from_dict(document[key])
    except (KeyError, TypeError) as err:
        raise ParseError(f"malformed report: {err!r}") from err
    except ParseError:
        raise
    except XoscError as err:
        raise ParseError(f"malformed report: {err}") from err

    if [d for _, d in ranking] != sorted((d for _, d in ranking), reverse=True):
        raise ParseError("ranking is not sorted by decreasing difference")
    if dominance_verdict(ranking, config.ratio_k, config.min_angle) != verdict:
        raise ParseError("verdict does not follow from the ranking and config")
    if (
        document.get("triangulated") is not None
        and verdict.kind is not VerdictKind.AMBIGUOUS
    ):
        raise ParseError("only an ambiguous verdict may carry a triangulated point")
    return document


def write_report(report: LocationReport, path: str | Path) -> None:
    write_json(validate_report(report.to_dict()), path)


def read_report(path: str | Path) -> dict[str, Any]:
    """Read and validate a report document."""
    return dict(validate_report(read_json(path)))


def load_report(path: str | Path) -> LocationReport:
    return LocationReport.from_dict(read_report(path))
