"""Linearised multi-machine swing-equation simulator.

The model is ``M d2(delta)/dt2 + D d(delta)/dt + L delta = e_bus u(t)`` with a
sinusoidal power injection ``u`` at one bus. Its frequency response, natural
modes and exactly discretised trajectories are the ground truth against which
the locator is checked.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg
import xarray as xr
from numpy.typing import ArrayLike

from .align import align_shapes, magnitude_filter, rank_differences
from .errors import InputError, ModelError
from .ringdown import ModalEstimate
from .shapes import mode_shape_from_phasors

logger = logging.getLogger(__name__)

INERTIA_RANGE = (3.0, 10.0)
DAMPING_RANGE = (0.5, 2.0)
LINE_WEIGHT_RANGE = (2.0, 10.0)
MAX_SCENARIO_DAMPING = 0.05
# natural frequencies eligible for a scenario, inside the default search band
SCENARIO_FREQUENCY_RANGE = (0.15, 1.5)
MIN_MODE_SEPARATION = 0.03
# identifiability of a scenario source in the noise-free forced steady state,
# with margins over the default verdict thresholds (10 deg, ratio 1.5)
IDENTIFY_THRESHOLDS = (0.25, 0.3, 0.35)
MIN_IDENTIFY_CHANNELS = 3
MIN_SOURCE_DEVIATION = 12.0
IDENTIFY_RATIO = 1.8


@dataclass(frozen=True, eq=False)
class GridModel:
    """Inertia, damping and synchronising-coefficient Laplacian of ``n`` buses."""

    inertia: np.ndarray
    damping: np.ndarray
    laplacian: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        inertia = np.asarray(self.inertia, dtype=float)
        damping = np.asarray(self.damping, dtype=float)
        laplacian = np.asarray(self.laplacian, dtype=float)
        n = inertia.size
        labels = tuple(self.labels) or tuple(f"bus{i}" for i in range(n))
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "damping", damping)
        object.__setattr__(self, "laplacian", laplacian)
        object.__setattr__(self, "labels", labels)

        if inertia.ndim != 1 or n < 2:
            raise ModelError("a grid model needs at least two buses")
        if damping.shape != (n,) or laplacian.shape != (n, n) or len(labels) != n:
            raise ModelError("inertia, damping, laplacian and labels disagree in size")
        if len(set(labels)) != n:
            raise ModelError("bus labels must be unique")
        if not np.all(inertia > 0):
            raise ModelError("inertia must be positive at every bus")
        if not np.all(damping >= 0):
            raise ModelError("damping must be non-negative at every bus")
        scale = max(1.0, float(np.abs(laplacian).max()))
        if not np.allclose(laplacian, laplacian.T, rtol=0, atol=1e-12 * scale):
            raise ModelError("laplacian must be symmetric")
        if not np.allclose(laplacian.sum(axis=1), 0, rtol=0, atol=1e-12 * scale):
            raise ModelError("laplacian rows must sum to zero")
        if np.any(laplacian[~np.eye(n, dtype=bool)] > 0):
            raise ModelError("laplacian off-diagonal entries must be non-positive")
        eigenvalues = scipy.linalg.eigvalsh(laplacian)
        if np.sum(eigenvalues < 1e-9 * scale) != 1:
            raise ModelError("network graph is not connected")

    @property
    def n(self) -> int:
        return self.inertia.size

    @classmethod
    def from_edges(
        cls,
        edges: Sequence[tuple[int, int, float]],
        inertia: ArrayLike,
        damping: ArrayLike,
        labels: Sequence[str] = (),
    ) -> GridModel:
        """Build the Laplacian from ``(i, j, weight)`` lines."""
        n = np.asarray(inertia).size
        laplacian = np.zeros((n, n))
        for i, j, w in edges:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise ModelError(f"invalid line ({i}, {j})")
            laplacian[i, j] -= w
            laplacian[j, i] -= w
            laplacian[i, i] += w
            laplacian[j, j] += w
        return cls(np.asarray(inertia), np.asarray(damping), laplacian, tuple(labels))

    def state_matrix(self) -> np.ndarray:
        """``A`` of ``d/dt [delta, omega] = A [delta, omega]``."""
        n = self.n
        inv_m = 1.0 / self.inertia
        a = np.zeros((2 * n, 2 * n))
        a[:n, n:] = np.eye(n)
        a[n:, :n] = -inv_m[:, None] * self.laplacian
        a[n:, n:] = -np.diag(inv_m * self.damping)
        return a

    def input_vector(self, bus: int) -> np.ndarray:
        b = np.zeros(2 * self.n)
        b[self.n + bus] = 1.0 / self.inertia[bus]
        return b

    def energy(self, states: ArrayLike) -> np.ndarray:
        """``0.5 omega' M omega + 0.5 delta' L delta`` for each state row."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        delta, omega = states[:, : self.n], states[:, self.n :]
        kinetic = 0.5 * np.einsum("ti,i,ti->t", omega, self.inertia, omega)
        potential = 0.5 * np.einsum("ti,ij,tj->t", delta, self.laplacian, delta)
        return kinetic + potential

    def to_dict(self) -> dict[str, Any]:
        return {
            "labels": list(self.labels),
            "inertia": self.inertia.tolist(),
            "damping": self.damping.tolist(),
            "laplacian": self.laplacian.tolist(),
        }


@dataclass(frozen=True)
class Forcing:
    """Power injection ``amplitude * cos(2 pi frequency t + phase)`` at ``bus``."""

    bus: int
    frequency: float
    amplitude: float = 1.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.bus < 0:
            raise InputError("forcing bus index must be non-negative")
        if not self.frequency > 0:
            raise InputError("forcing frequency must be positive")
        if not self.amplitude >= 0:
            raise InputError("forcing amplitude must be non-negative")

    def check(self, model: GridModel) -> None:
        if self.bus >= model.n:
            raise InputError(f"forcing bus {self.bus} is not in a {model.n}-bus model")

    def to_dict(self) -> dict[str, Any]:
        return {
            "bus": self.bus,
            "frequency": self.frequency,
            "amplitude": self.amplitude,
            "phase": self.phase,
        }


def natural_modes(model: GridModel) -> list[ModalEstimate]:
    """Oscillatory eigenmodes of the unforced system, by ascending frequency.

    Shapes are the rotor-speed parts of the eigenvectors, referenced to the
    bus with the largest participation. The rigid-body mode is excluded.
    """
    eigenvalues, vectors = scipy.linalg.eig(model.state_matrix())
    scale = float(np.abs(eigenvalues).max())
    oscillatory = np.flatnonzero(eigenvalues.imag > 1e-5 * scale)

    modes = []
    for k in oscillatory:
        lam = eigenvalues[k]
        speed = vectors[model.n :, k]
        magnitude = np.abs(speed)
        reference = int(np.flatnonzero(magnitude >= (1 - 1e-9) * magnitude.max())[0])
        speed = speed / magnitude.max()
        frequency = float(lam.imag / (2 * np.pi))
        modes.append(
            ModalEstimate(
                frequency=frequency,
                damping_ratio=float(-lam.real / abs(lam)),
                shape=mode_shape_from_phasors(
                    speed,
                    model.labels,
                    frequency=frequency,
                    reference=model.labels[reference],
                ),
            )
        )
    return sorted(modes, key=lambda m: m.frequency)


def frequency_response(
    model: GridModel,
    frequency: float,
    bus: int,
    amplitude: float = 1.0,
    phase: float = 0.0,
    *,
    states: bool = False,
) -> np.ndarray:
    """Steady-state phasors of the response to a sinusoidal injection.

    Solves ``(j Omega I - A) X = B U`` directly. By default returns the bus
    frequency deviations ``omega / 2 pi`` (Hz); ``states=True`` returns the
    full ``[delta, omega]`` phasor vector.
    """
    if not frequency > 0:
        raise InputError("frequency must be positive")
    omega = 2 * np.pi * frequency
    a = model.state_matrix()
    rhs = model.input_vector(bus) * amplitude * np.exp(1j * np.radians(phase))
    x = np.linalg.solve(1j * omega * np.eye(a.shape[0]) - a, rhs)
    return x if states else x[model.n :] / (2 * np.pi)


def _transition(
    model: GridModel, frequency: float, amplitude: float, bus: int, h: float
) -> np.ndarray:
    # augmented state [delta, omega, cos, sin] of the forcing oscillator
    n2 = 2 * model.n
    omega = 2 * np.pi * frequency
    a = np.zeros((n2 + 2, n2 + 2))
    a[:n2, :n2] = model.state_matrix()
    a[:n2, n2] = model.input_vector(bus) * amplitude
    a[n2, n2 + 1] = -omega
    a[n2 + 1, n2] = omega
    return scipy.linalg.expm(a * h)


def integrate(
    model: GridModel,
    forcing: Forcing,
    n_samples: int,
    sample_rate: float,
    *,
    start: str = "rest",
    forcing_off_at: float | None = None,
    initial_state: ArrayLike | None = None,
) -> np.ndarray:
    """States ``[delta, omega]`` at ``n_samples`` instants ``k / sample_rate``.

    The forced linear system is advanced with its exact discretisation: the
    matrix exponential of the state matrix augmented by the forcing
    oscillator. The forcing stops at the first sample at or after
    ``forcing_off_at``.

    Parameters
    ----------
    start : {"rest", "steady"}
        Start from equilibrium or on the forced periodic steady state.
    initial_state : array-like, optional
        Explicit ``[delta, omega]`` start; overrides ``start``.
    """
    forcing.check(model)
    if not (np.isfinite(sample_rate) and sample_rate > 0):
        raise InputError("sample_rate must be positive")
    if n_samples < 1:
        raise InputError("at least one sample is required")
    n2 = 2 * model.n
    h = 1.0 / sample_rate

    if initial_state is not None:
        x0 = np.asarray(initial_state, dtype=float)
        if x0.shape != (n2,):
            raise InputError(f"initial_state must have {n2} entries")
    elif start == "rest":
        x0 = np.zeros(n2)
    elif start == "steady":
        x0 = frequency_response(
            model,
            forcing.frequency,
            forcing.bus,
            forcing.amplitude,
            forcing.phase,
            states=True,
        ).real
    else:
        raise InputError(f"start must be 'rest' or 'steady', got {start!r}")

    phase = np.radians(forcing.phase)
    z = np.concatenate([x0, [np.cos(phase), np.sin(phase)]])
    step_on = _transition(model, forcing.frequency, forcing.amplitude, forcing.bus, h)
    step_off = _transition(model, forcing.frequency, 0.0, forcing.bus, h)

    out = np.empty((n_samples, n2))
    for k in range(n_samples):
        out[k] = z[:n2]
        forced = forcing_off_at is None or k * h < forcing_off_at
        z = (step_on if forced else step_off) @ z
    return out


def simulate(
    model: GridModel,
    forcing: Forcing,
    duration: float,
    sample_rate: float,
    noise_snr_db: float | None = None,
    seed: int = 0,
    *,
    start: str = "rest",
    forcing_off_at: float | None = None,
    initial_state: ArrayLike | None = None,
) -> xr.DataArray:
    """Per-bus frequency deviation (Hz) of the forced system.

    Parameters
    ----------
    model : GridModel
    forcing : Forcing
    duration : float
        Seconds; ``duration * sample_rate`` must give at least 64 samples.
    sample_rate : float
        Samples per second.
    noise_snr_db : float, optional
        Adds white measurement noise at this per-channel signal-to-noise ratio.
    seed : int, default 0
        Seed of the noise generator.
    start, forcing_off_at, initial_state
        See :func:`integrate`.

    Returns
    -------
    xarray.DataArray
        Dims ``("channel", "time")``, one channel per bus label.
    """
    if not (np.isfinite(duration) and duration > 0):
        raise InputError("duration must be positive")
    if not (np.isfinite(sample_rate) and sample_rate > 0):
        raise InputError("sample_rate must be positive")
    n_samples = int(round(duration * sample_rate))
    if n_samples < 64:
        raise InputError(f"at least 64 samples are required, got {n_samples}")

    states = integrate(
        model,
        forcing,
        n_samples,
        sample_rate,
        start=start,
        forcing_off_at=forcing_off_at,
        initial_state=initial_state,
    )
    data = states[:, model.n :].T / (2 * np.pi)

    if noise_snr_db is not None:
        rng = np.random.default_rng(seed)
        power = np.mean(data**2, axis=1, keepdims=True)
        sigma = np.sqrt(power / 10 ** (noise_snr_db / 10))
        data = data + sigma * rng.standard_normal(data.shape)

    return xr.DataArray(
        data,
        dims=("channel", "time"),
        coords={"channel": list(model.labels), "time": np.arange(n_samples) / sample_rate},
        attrs={"sample_rate": float(sample_rate), "start_time": 0.0},
    )


@dataclass(frozen=True, eq=False)
class Scenario:
    """A generated test case and its ground truth."""

    model: GridModel
    forcing: Forcing
    natural: ModalEstimate = field(repr=False)
    seed: int = 0

    @property
    def source_bus(self) -> int:
        return self.forcing.bus

    @property
    def source_channel(self) -> str:
        return self.model.labels[self.forcing.bus]

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "source_bus": self.source_bus,
            "source_channel": self.source_channel,
            "forcing": self.forcing.to_dict(),
            "natural": self.natural.to_dict(),
            "model": self.model.to_dict(),
        }


def _ring_plus_chords(
    n: int, rng: np.random.Generator
) -> list[tuple[int, int, float]]:
    pairs = [(i, (i + 1) % n) for i in range(n)]
    ring = {tuple(sorted(p)) for p in pairs}
    others = [p for p in itertools.combinations(range(n), 2) if p not in ring]
    picks = rng.choice(len(others), size=min(n // 2, len(others)), replace=False)
    pairs += [others[i] for i in sorted(picks)]
    weights = rng.uniform(*LINE_WEIGHT_RANGE, size=len(pairs))
    return [(i, j, float(w)) for (i, j), w in zip(pairs, weights, strict=True)]


def _separated(modes: Sequence[ModalEstimate], separation: float) -> list[bool]:
    frequencies = np.array([m.frequency for m in modes])
    out = []
    for i, f in enumerate(frequencies):
        others = np.delete(frequencies, i)
        out.append(others.size == 0 or bool(np.min(np.abs(others - f)) >= separation))
    return out


def source_deviations(
    model: GridModel,
    natural: ModalEstimate,
    forcing: Forcing,
    threshold_fraction: float,
) -> list[tuple[str, float]]:
    """Noise-free angle-difference ranking of a forced steady state.

    The forced shape is the exact frequency response to ``forcing``; it is
    thresholded at ``threshold_fraction`` and aligned to ``natural.shape``,
    as the locator does with measured data.
    """
    response = frequency_response(model, forcing.frequency, forcing.bus)
    forced = mode_shape_from_phasors(
        response,
        model.labels,
        frequency=forcing.frequency,
        reference=model.labels[int(np.argmax(np.abs(response)))],
    )
    kept = magnitude_filter(forced, threshold_fraction)
    if len(kept) < 2:
        return [(c, 0.0) for c in kept]
    return rank_differences(align_shapes(forced, natural.shape, kept))


def _identifiable(model: GridModel, natural: ModalEstimate, forcing: Forcing) -> bool:
    source = model.labels[forcing.bus]
    for threshold in IDENTIFY_THRESHOLDS:
        ranked = source_deviations(model, natural, forcing, threshold)
        if len(ranked) < MIN_IDENTIFY_CHANNELS or ranked[0][0] != source:
            return False
        top, second = ranked[0][1], ranked[1][1]
        if top < MIN_SOURCE_DEVIATION or top < IDENTIFY_RATIO * second:
            return False
    return True


def make_scenario(
    n_buses: int,
    seed: int,
    resonance_offset: float = 0.0,
    *,
    amplitude: float = 0.1,
    max_retries: int = 2000,
) -> Scenario:
    """Random ring-plus-chords grid forced near one of its lightly damped modes.

    The forcing bus is drawn uniformly first. Grids are then drawn, with
    inertia, damping and line weights from fixed ranges, until one has a mode
    with damping ratio below 5 %, a frequency in ``SCENARIO_FREQUENCY_RANGE``
    and at least ``MIN_MODE_SEPARATION`` Hz to every other mode, whose forced
    response at that bus is identifiable: in the noise-free steady state the
    bus passes the magnitude threshold and carries the largest angle
    difference by a margin (``MIN_SOURCE_DEVIATION``, ``IDENTIFY_RATIO``) at
    every threshold in ``IDENTIFY_THRESHOLDS``. The least damped qualifying
    mode is used; the forcing frequency is its frequency plus
    ``resonance_offset``. The result depends only on the arguments.
    """
    if n_buses < 4:
        raise InputError("a scenario needs at least four buses")
    rng = np.random.default_rng(seed)
    bus = int(rng.integers(n_buses))
    phase = float(rng.uniform(-180.0, 180.0))
    f_lo, f_hi = SCENARIO_FREQUENCY_RANGE

    for attempt in range(max_retries):
        edges = _ring_plus_chords(n_buses, rng)
        model = GridModel.from_edges(
            edges,
            inertia=rng.uniform(*INERTIA_RANGE, size=n_buses),
            damping=rng.uniform(*DAMPING_RANGE, size=n_buses),
        )
        modes = natural_modes(model)
        separated = _separated(modes, MIN_MODE_SEPARATION)
        candidates = [
            m
            for m, apart in zip(modes, separated, strict=True)
            if apart
            and m.damping_ratio < MAX_SCENARIO_DAMPING
            and f_lo <= m.frequency <= f_hi
            and m.frequency + resonance_offset > 0
        ]
        for natural in sorted(candidates, key=lambda m: (m.damping_ratio, m.frequency)):
            forcing = Forcing(
                bus=bus,
                frequency=natural.frequency + resonance_offset,
                amplitude=amplitude,
                phase=phase,
            )
            if _identifiable(model, natural, forcing):
                logger.debug(
                    "scenario seed %d accepted after %d attempts", seed, attempt + 1
                )
                return Scenario(
                    model=model, forcing=forcing, natural=natural, seed=seed
                )
    raise ModelError(
        f"no grid with an identifiable light mode at bus {bus} after "
        f"{max_retries} attempts (seed {seed})"
    )


def scenario_channels(
    scenario: Scenario,
    duration: float = 120.0,
    sample_rate: float = 10.0,
    snr_db: float | None = 20.0,
    seed: int = 0,
    ringdown_seconds: float = 0.0,
) -> xr.DataArray:
    """Measurements of a scenario: a forced window, optionally followed by ring-down.

    The forced window starts on the periodic steady state, as a window taken
    well into a sustained event would. With ``ringdown_seconds > 0`` the
    forcing is removed at ``duration`` and the free response is appended.
    """
    return simulate(
        scenario.model,
        scenario.forcing,
        duration + ringdown_seconds,
        sample_rate,
        noise_snr_db=snr_db,
        seed=seed,
        start="steady",
        forcing_off_at=duration if ringdown_seconds > 0 else None,
    )
