"""Natural-mode identification from ring-down records (matrix pencil)."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg
import xarray as xr

from .errors import InputError, NoMatchingModeError, NoModeError
from .shapes import mode_shape_from_phasors, shape_from_dict, shape_to_dict
from .signal import validate_channels

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModalEstimate:
    """One identified oscillatory mode.

    Attributes
    ----------
    frequency : float
        Damped frequency in Hz.
    damping_ratio : float
        Fraction of critical damping; negative for a growing mode.
    shape : xarray.Dataset
        Per-channel amplitude and angle of the mode, reference-relative.
    fit_error : float
        Normalised RMS error of reconstructing the input from the returned
        modes (zero when the estimate does not come from data).
    energy : float
        Ranking key: observed energy of the mode summed over channels.
    """

    frequency: float
    damping_ratio: float
    shape: xr.Dataset = field(compare=False, repr=False)
    fit_error: float = 0.0
    energy: float = 0.0

    def __post_init__(self) -> None:
        if not self.frequency > 0:
            raise InputError("mode frequency must be positive")
        if not self.damping_ratio > -1:
            raise InputError("damping ratio must be greater than -1")
        if not self.fit_error >= 0:
            raise InputError("fit error must be non-negative")

    @property
    def sigma(self) -> float:
        """Real part of the pole in 1/s."""
        omega = 2 * np.pi * self.frequency
        return float(-self.damping_ratio * omega / np.sqrt(1 - self.damping_ratio**2))

    def to_dict(self) -> dict[str, Any]:
        return {
            "frequency": self.frequency,
            "damping_ratio": self.damping_ratio,
            "fit_error": self.fit_error,
            "energy": self.energy,
            "shape": shape_to_dict(self.shape),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModalEstimate:
        return cls(
            frequency=float(data["frequency"]),
            damping_ratio=float(data["damping_ratio"]),
            shape=shape_from_dict(data["shape"]),
            fit_error=float(data.get("fit_error", 0.0)),
            energy=float(data.get("energy", 0.0)),
        )


def _window_energy(sigma: np.ndarray, duration: float) -> np.ndarray:
    # integral of exp(2 sigma t) over [0, duration]
    out = np.full(sigma.shape, duration, dtype=float)
    nonzero = np.abs(sigma) * duration > 1e-12
    s = sigma[nonzero]
    out[nonzero] = np.expm1(2 * s * duration) / (2 * s)
    return out


def matrix_pencil(
    channels: xr.DataArray,
    model_order: int | None = None,
    *,
    reference: str | None = None,
    svd_threshold: float = 1e-3,
) -> list[ModalEstimate]:
    """Identify damped oscillatory modes with the multi-channel matrix pencil.

    The Hankel matrices of all channels (pencil parameter ``L = N // 3``) are
    stacked, reduced to their ``model_order`` dominant right singular vectors,
    and the shifted-pencil eigenvalues give the discrete poles. Residues come
    from a least-squares fit of the oscillatory poles to every channel.

    Parameters
    ----------
    channels : xarray.DataArray
        Ring-down record, dims ``("channel", "time")``.
    model_order : int, optional
        Number of complex exponentials, ``2 <= model_order <= N // 3``. ``None``
        keeps the singular values above ``svd_threshold`` times the largest.
    reference : str, optional
        Phase reference of the returned shapes. ``None`` (or a reference with
        no amplitude in a mode) uses the strongest channel of each mode.
    svd_threshold : float, default 1e-3
        Relative singular-value cut-off of the automatic order selection.

    Returns
    -------
    list of ModalEstimate
        At most ``model_order // 2`` modes, by decreasing energy.
    """
    channels = validate_channels(channels)
    ids = [str(c) for c in channels["channel"].values]
    x = channels.values
    fs = channels.attrs["sample_rate"]
    n = x.shape[1]
    pencil = n // 3

    if model_order is not None and not 2 <= model_order <= pencil:
        raise InputError(
            f"model_order must lie in [2, {pencil}] for {n} samples, got {model_order}"
        )
    if reference is not None and reference not in ids:
        raise InputError(f"reference channel {reference!r} is not among the channels")
    if not np.any(x):
        raise NoModeError("ring-down data are identically zero")

    hankel = np.vstack(
        [scipy.linalg.hankel(row[: n - pencil], row[n - pencil - 1 :]) for row in x]
    )
    _, singular, vh = scipy.linalg.svd(hankel, full_matrices=False)
    if singular[0] == 0:
        raise NoModeError("ring-down data are rank deficient")
    if model_order is None:
        model_order = max(int(np.sum(singular / singular[0] > svd_threshold)), 2)
        model_order = min(model_order, pencil)
        logger.debug("matrix pencil order %d selected from singular values", model_order)

    v = vh[:model_order].conj().T
    poles_z = scipy.linalg.eigvals(np.linalg.pinv(v[:-1]) @ v[1:])
    poles_s = np.log(poles_z.astype(complex)) * fs

    oscillatory = poles_s.imag > 1e-9 * fs
    if not np.any(oscillatory):
        raise NoModeError("no oscillatory pole found in the ring-down data")
    z = poles_z[oscillatory]
    s = poles_s[oscillatory]

    steps = np.arange(n)[:, None]
    basis = np.hstack([z[None, :] ** steps, np.conj(z)[None, :] ** steps])
    residues, *_ = scipy.linalg.lstsq(basis, x.T.astype(complex))
    fitted = (basis @ residues).real.T
    norm = np.linalg.norm(x)
    fit_error = float(np.linalg.norm(x - fitted) / norm)

    residues = residues[: z.size]  # (mode, channel)
    energy = np.sum(np.abs(residues) ** 2, axis=1) * _window_energy(s.real, n / fs)
    frequency = s.imag / (2 * np.pi)
    damping = -s.real / np.abs(s)

    order = sorted(range(z.size), key=lambda i: (-energy[i], frequency[i]))
    modes = []
    for i in order[: model_order // 2]:
        amplitude = 2 * residues[i]
        ref = reference
        if ref is None or abs(amplitude[ids.index(ref)]) == 0:
            ref = ids[int(np.argmax(np.abs(amplitude)))]
        modes.append(
            ModalEstimate(
                frequency=float(frequency[i]),
                damping_ratio=float(damping[i]),
                shape=mode_shape_from_phasors(
                    amplitude, ids, frequency=float(frequency[i]), reference=ref
                ),
                fit_error=fit_error,
                energy=float(energy[i]),
            )
        )
    logger.debug(
        "matrix pencil found %d modes, fit error %.3g", len(modes), fit_error
    )
    return modes


def select_mode(
    modes: Sequence[ModalEstimate], f_target: float, tol: float
) -> ModalEstimate:
    """The mode closest to ``f_target``, if it lies within ``tol`` Hz.

    Ties are broken by the lower fit error.
    """
    if not modes:
        raise InputError("no modes to select from")
    if not tol > 0:
        raise InputError("tol must be positive")
    best = min(modes, key=lambda m: (abs(m.frequency - f_target), m.fit_error))
    gap = abs(best.frequency - f_target)
    if gap > tol:
        raise NoMatchingModeError(
            f"no mode within {tol} Hz of {f_target} Hz; nearest is "
            f"{best.frequency:.4f} Hz ({gap:.4f} Hz away)",
            nearest=best,
        )
    return best
