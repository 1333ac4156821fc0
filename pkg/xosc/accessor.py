from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING

import xarray as xr

from .align import AlignmentResult, align_shapes, magnitude_filter
from .config import FrequencyBand
from .errors import InputError
from .ringdown import ModalEstimate, matrix_pencil
from .shapes import Phasor, to_complex, validate_mode_shape
from .signal import (
    condition,
    dominant_frequency,
    goertzel_phasor,
    select_window,
    spectral_mode_shape,
    validate_channels,
)

if TYPE_CHECKING:
    from matplotlib.figure import Figure


@xr.register_dataarray_accessor("osc")
@xr.register_dataset_accessor("osc")
class OscAccessor:
    """Oscillation analysis methods.

    On a DataArray of channels (dims ``("channel", "time")``) the series
    methods are available; on a mode-shape Dataset the shape methods.

    Examples
    --------
    >>> import numpy as np
    >>> import xosc
    >>> t = np.arange(600) / 10.0
    >>> chans = xosc.make_channels(
    ...     {"a": np.cos(2 * np.pi * 0.5 * t), "b": np.sin(2 * np.pi * 0.5 * t)}, 10.0
    ... )
    >>> shape = chans.osc.mode_shape(0.5, reference="a")
    >>> round(float(shape["angle"].sel(channel="b")), 1)
    -90.0
    """

    def __init__(self, xarray_obj: xr.Dataset | xr.DataArray) -> None:
        self._obj = xarray_obj

    def _series(self, method: str) -> xr.DataArray:
        if not isinstance(self._obj, xr.DataArray):
            raise InputError(f"`osc.{method}()` works on a DataArray of channels")
        return validate_channels(self._obj)

    def _shape(self, method: str) -> xr.Dataset:
        if not isinstance(self._obj, xr.Dataset):
            raise InputError(f"`osc.{method}()` works on a mode-shape Dataset")
        return self._obj

    # channel series

    def window(self, t0: float, t1: float) -> xr.DataArray:
        """Samples with ``t0 <= time < t1``."""
        return select_window(self._series("window"), t0, t1)

    def condition(self) -> xr.DataArray:
        """Detrended, Hann-tapered copy; see :func:`xosc.condition`."""
        return condition(self._series("condition"))

    def goertzel(self, f_target: float) -> dict[str, Phasor]:
        """Phasor of every channel at ``f_target``."""
        series = self._series("goertzel")
        return {
            str(c): goertzel_phasor(series.sel(channel=[c]), f_target)
            for c in series["channel"].values
        }

    def dominant_frequency(
        self,
        band: FrequencyBand | tuple[float, float],
        segment_seconds: float | None = None,
        min_prominence: float | None = None,
    ) -> float:
        """Strongest spectral peak inside ``band``; see :func:`xosc.dominant_frequency`."""
        if not isinstance(band, FrequencyBand):
            band = FrequencyBand(*band)
        return dominant_frequency(
            self._series("dominant_frequency"), band, segment_seconds, min_prominence
        )

    def mode_shape(
        self,
        f_target: float,
        reference: str,
        segment_seconds: float | None = None,
    ) -> xr.Dataset:
        """Cross-spectral mode shape at ``f_target``; see :func:`xosc.spectral_mode_shape`."""
        return spectral_mode_shape(
            self._series("mode_shape"), f_target, reference, segment_seconds
        )

    def matrix_pencil(
        self, model_order: int | None = None, *, reference: str | None = None
    ) -> list[ModalEstimate]:
        """Modes of a ring-down record; see :func:`xosc.matrix_pencil`."""
        return matrix_pencil(
            self._series("matrix_pencil"), model_order, reference=reference
        )

    def to_csv(self, path: str | Path) -> None:
        """Write the channels in the CSV layout read by :func:`xosc.load_csv`."""
        from .io import write_csv

        write_csv(self._series("to_csv"), path)

    # mode shapes

    def to_complex(self) -> xr.DataArray:
        """Complex phasors of the shape."""
        shape = validate_mode_shape(self._shape("to_complex"), gauge_fixed=False)
        return to_complex(shape)

    def magnitude_filter(self, threshold_fraction: float = 0.3) -> list[str]:
        """Channels at or above ``threshold_fraction`` of the largest magnitude."""
        return magnitude_filter(self._shape("magnitude_filter"), threshold_fraction)

    def align(
        self,
        natural: xr.Dataset,
        channels: Sequence[str] | None = None,
        *,
        weighted: bool = False,
    ) -> AlignmentResult:
        """Align this forced shape to ``natural``; see :func:`xosc.align_shapes`.

        ``channels`` defaults to the channels present in both shapes.
        """
        forced = self._shape("align")
        if channels is None:
            natural_ids = {str(c) for c in natural["channel"].values}
            channels = [str(c) for c in forced["channel"].values if c in natural_ids]
        return align_shapes(forced, natural, channels, weighted=weighted)

    def compass(
        self,
        natural: xr.Dataset,
        alignment: AlignmentResult | None = None,
        path: str | Path | None = None,
    ) -> Figure:
        """Compass plot against ``natural``; see :func:`xosc.render_compass`."""
        from .plotting import render_compass

        forced = self._shape("compass")
        if alignment is None:
            alignment = self.align(natural)
        return render_compass(forced, natural, alignment, path)
