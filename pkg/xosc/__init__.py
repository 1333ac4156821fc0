from importlib.metadata import PackageNotFoundError, version

from .accessor import OscAccessor  # noqa: F401
from .align import (  # noqa: F401
    AlignmentResult,
    Verdict,
    VerdictKind,
    align_shapes,
    dominance_verdict,
    magnitude_filter,
    rank_differences,
)
from .config import FrequencyBand, PipelineConfig  # noqa: F401
from .errors import (  # noqa: F401
    ConfigError,
    DegenerateInputError,
    DegenerateWeightsError,
    InputError,
    InsufficientDataError,
    InvalidFrequencyError,
    ModelError,
    NoMatchingModeError,
    NoModeError,
    NoPeakError,
    ParseError,
    PipelineError,
    XoscError,
)
from .io import (  # noqa: F401
    load_csv,
    load_geo,
    load_report,
    load_shape,
    read_report,
    validate_report,
    write_csv,
    write_report,
    write_shape,
)
from .locate import GeoPoint, LocationReport, locate_source, triangulate  # noqa: F401
from .plotting import render_compass  # noqa: F401
from .ringdown import ModalEstimate, matrix_pencil, select_mode  # noqa: F401
from .shapes import (  # noqa: F401
    Phasor,
    mode_shape,
    mode_shape_from_phasors,
    rotate,
    subset,
    to_complex,
    validate_mode_shape,
)
from .signal import (  # noqa: F401
    SpectralPeak,
    channel_amplitudes,
    condition,
    dominant_frequency,
    goertzel_phasor,
    make_channels,
    select_window,
    spectral_mode_shape,
    spectral_peak,
    strongest_channel,
    validate_channels,
    welch_segment_length,
)
from .simgrid import (  # noqa: F401
    Forcing,
    GridModel,
    Scenario,
    frequency_response,
    integrate,
    make_scenario,
    natural_modes,
    scenario_channels,
    simulate,
    source_deviations,
)
from .sweep import SweepSummary, run_sweep  # noqa: F401
from .utils import wrap_angle  # noqa: F401

try:
    __version__ = version("xosc")
except PackageNotFoundError:  # noqa
    # package is not installed
    pass
