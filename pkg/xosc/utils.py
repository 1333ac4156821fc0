import numpy as np
from numpy.typing import ArrayLike
from pyproj import CRS, Transformer

# spherical datum shared by the geographic and tangent-plane CRS
_EARTH_RADIUS = 6371008.8


def wrap_angle(angle: ArrayLike) -> np.ndarray:
    """Wrap degrees to ``(-180, 180]``; ``180`` stays ``+180``.

    Angles already in range are returned unchanged, bit for bit.
    """
    angle = np.asarray(angle, dtype=float)
    wrapped = 180.0 - np.mod(180.0 - angle, 360.0)
    # np.mod may round up to the modulus itself
    wrapped = np.where(wrapped <= -180.0, 180.0, wrapped)
    return np.where((angle > -180.0) & (angle <= 180.0), angle, wrapped)[()]


def _geographic() -> CRS:
    return CRS.from_dict({"proj": "longlat", "R": _EARTH_RADIUS, "no_defs": True})


def tangent_plane(lat_0: float, lon_0: float) -> CRS:
    """Azimuthal equidistant plane touching the sphere at ``(lat_0, lon_0)``."""
    return CRS.from_dict(
        {
            "proj": "aeqd",
            "lat_0": lat_0,
            "lon_0": lon_0,
            "R": _EARTH_RADIUS,
            "units": "m",
            "no_defs": True,
        }
    )


def to_tangent_plane(
    lat: ArrayLike, lon: ArrayLike, lat_0: float, lon_0: float
) -> np.ndarray:
    """Project geographic points to ``(x, y)`` metres around ``(lat_0, lon_0)``."""
    transformer = Transformer.from_crs(
        _geographic(), tangent_plane(lat_0, lon_0), always_xy=True
    )
    x, y = transformer.transform(np.asarray(lon, float), np.asarray(lat, float))
    return np.column_stack([np.atleast_1d(x), np.atleast_1d(y)])


def from_tangent_plane(
    xy: ArrayLike, lat_0: float, lon_0: float
) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`to_tangent_plane`; returns ``(lat, lon)``."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    transformer = Transformer.from_crs(
        tangent_plane(lat_0, lon_0), _geographic(), always_xy=True
    )
    lon, lat = transformer.transform(xy[:, 0], xy[:, 1])
    return np.atleast_1d(lat), wrap_angle(np.atleast_1d(lon))
