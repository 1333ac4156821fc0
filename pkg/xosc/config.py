from __future__ import annotations

import dataclasses
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, InvalidFrequencyError


@dataclass(frozen=True)
class FrequencyBand:
    """Search band ``[f_lo, f_hi]`` in Hz.

    Only ``0 < f_lo < f_hi`` is checked on construction; the Nyquist bound
    depends on the data and is checked by :meth:`check`.
    """

    f_lo: float
    f_hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.f_lo) and math.isfinite(self.f_hi)):
            raise InvalidFrequencyError("band edges must be finite")
        if not 0 < self.f_lo < self.f_hi:
            raise InvalidFrequencyError(
                f"band must satisfy 0 < f_lo < f_hi, got [{self.f_lo}, {self.f_hi}]"
            )

    def check(self, sample_rate: float) -> None:
        if self.f_hi >= sample_rate / 2:
            raise InvalidFrequencyError(
                f"band upper edge {self.f_hi} Hz is not below the Nyquist "
                f"frequency {sample_rate / 2} Hz"
            )

    def contains(self, frequency: float) -> bool:
        return self.f_lo <= frequency <= self.f_hi

    @classmethod
    def parse(cls, text: str) -> FrequencyBand:
        """Parse ``"lo:hi"``."""
        try:
            lo, hi = (float(v) for v in text.split(":"))
        except ValueError as err:
            raise ConfigError(f"band must look like 'lo:hi', got {text!r}") from err
        return cls(lo, hi)

    def to_list(self) -> list[float]:
        return [self.f_lo, self.f_hi]


@dataclass(frozen=True)
class PipelineConfig:
    """Every free parameter of :func:`xosc.locate_source`.

    Parameters
    ----------
    band : FrequencyBand
        Band searched for the forcing frequency.
    welch_segment_seconds : float, optional
        Welch segment length. ``None`` picks the longest power-of-two segment
        giving at least six segments at 50 % overlap.
    threshold_fraction : float
        Channels with a forced-shape magnitude below this fraction of the
        maximum are excluded from the alignment.
    ratio_k : float
        How many times larger the top angle difference must be than the
        runner-up for a single-source verdict.
    min_angle : float
        Angle difference (degrees) below which no source is reported.
    mode_tol : float
        Largest gap (Hz) between forcing and natural frequency.
    reference_channel : str, optional
        Phase reference. ``None`` uses the channel with the largest
        amplitude at the forcing frequency.
    weighted_alignment : bool
        Weight the RMS objective by the channel magnitudes.
    min_prominence : float
        Smallest peak-to-median band power ratio accepted as a forced
        oscillation.
    model_order : int, optional
        Matrix pencil order for ring-down data; ``None`` selects it from the
        singular values.
    """

    band: FrequencyBand = field(default_factory=lambda: FrequencyBand(0.1, 2.0))
    welch_segment_seconds: float | None = None
    threshold_fraction: float = 0.3
    ratio_k: float = 1.5
    min_angle: float = 10.0
    mode_tol: float = 0.1
    reference_channel: str | None = None
    weighted_alignment: bool = False
    min_prominence: float = 10.0
    model_order: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.band, FrequencyBand):
            raise ConfigError("band must be a FrequencyBand")
        if self.welch_segment_seconds is not None and not (
            self.welch_segment_seconds > 0
        ):
            raise ConfigError("welch_segment_seconds must be positive")
        if not 0 <= self.threshold_fraction <= 1:
            raise ConfigError("threshold_fraction must lie in [0, 1]")
        if not self.ratio_k > 1:
            raise ConfigError("ratio_k must be greater than 1")
        if not self.min_angle > 0:
            raise ConfigError("min_angle must be positive")
        if not self.mode_tol > 0:
            raise ConfigError("mode_tol must be positive")
        if not self.min_prominence >= 1:
            raise ConfigError("min_prominence must be at least 1")
        if self.model_order is not None and self.model_order < 2:
            raise ConfigError("model_order must be at least 2")

    def replace(self, **changes: Any) -> PipelineConfig:
        """Return a copy with ``changes`` applied, skipping ``None`` values."""
        return dataclasses.replace(
            self, **{k: v for k, v in changes.items() if v is not None}
        )

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["band"] = self.band.to_list()
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PipelineConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "band" in kwargs:
            band = kwargs["band"]
            if isinstance(band, str):
                kwargs["band"] = FrequencyBand.parse(band)
            else:
                try:
                    lo, hi = band
                except (TypeError, ValueError) as err:
                    raise ConfigError("band must be a [lo, hi] pair") from err
                kwargs["band"] = FrequencyBand(float(lo), float(hi))
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> PipelineConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path} is not valid JSON: {err}") from err
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must hold a JSON object")
        return cls.from_dict(data)
