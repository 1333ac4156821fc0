from __future__ import annotations

from pathlib import Path

import numpy as np
import xarray as xr

from .align import AlignmentResult, rank_differences
from .errors import InputError
from .utils import wrap_angle

FORCED_COLOR = "tab:red"
NATURAL_COLOR = "tab:blue"
HIGHLIGHT_COLOR = "gold"


def _import_figure():
    try:
        import matplotlib
        from matplotlib.figure import Figure
        from matplotlib.lines import Line2D
    except ImportError as err:
        raise ImportError(
            "The matplotlib package is required for `render_compass()`. "
            "You can install it using 'conda install -c conda-forge matplotlib' or "
            "'pip install matplotlib'."
        ) from err
    return matplotlib, Figure, Line2D


def _normalized(shape: xr.Dataset, channels: list[str]) -> np.ndarray:
    magnitude = shape["magnitude"].values
    peak = magnitude.max()
    scaled = magnitude / peak if peak > 0 else np.zeros_like(magnitude)
    index = {str(c): i for i, c in enumerate(shape["channel"].values)}
    return np.array([scaled[index[c]] for c in channels])


def _arrow(ax, theta, radius, color, gid, width):
    ann = ax.annotate(
        "",
        xy=(theta, radius),
        xytext=(0.0, 0.0),
        arrowprops={"arrowstyle": "-|>", "color": color, "lw": width},
    )
    ann.arrow_patch.set_gid(gid)
    return ann


def render_compass(
    forced: xr.Dataset,
    natural: xr.Dataset,
    alignment: AlignmentResult,
    path: str | Path | None = None,
    *,
    figsize: tuple[float, float] = (5.0, 5.0),
    title: str | None = None,
):
    """Compass plot of the forced and natural shapes after alignment.

    One arrow per shared channel and shape is drawn at its angle and
    normalised magnitude on the unit circle; forced arrows are rotated by
    ``alignment.delta``. The channel ranked first by angle difference gets a
    marker at the tip of its forced arrow.

    Arrows carry SVG ids ``forced-<channel>`` and ``natural-<channel>``; the
    marker has id ``highlight-<channel>``.

    Parameters
    ----------
    forced, natural : xarray.Dataset
        Mode shapes sharing at least one channel.
    alignment : AlignmentResult
    path : str or Path, optional
        Where to save the figure as SVG.
    figsize : tuple, default (5, 5)
    title : str, optional

    Returns
    -------
    matplotlib.figure.Figure
    """
    natural_ids = {str(c) for c in natural["channel"].values}
    channels = [str(c) for c in forced["channel"].values if str(c) in natural_ids]
    if not channels:
        raise InputError("the forced and natural shapes share no channel")

    matplotlib, Figure, Line2D = _import_figure()

    forced_angle = wrap_angle(
        forced["angle"].sel(channel=channels).values + alignment.delta
    )
    natural_angle = natural["angle"].sel(channel=channels).values
    forced_radius = _normalized(forced, channels)
    natural_radius = _normalized(natural, channels)
    ranking = rank_differences(alignment) if alignment.diffs else []
    top = ranking[0][0] if ranking else None

    fig = Figure(figsize=figsize)
    ax = fig.add_subplot(projection="polar")
    ax.set_ylim(0, 1.1)
    ax.set_rticks([0.5, 1.0])
    ax.grid(True, alpha=0.4)

    for i, channel in enumerate(channels):
        width = 2.5 if channel == top else 1.2
        _arrow(
            ax,
            np.radians(natural_angle[i]),
            natural_radius[i],
            NATURAL_COLOR,
            f"natural-{channel}",
            width,
        )
        _arrow(
            ax,
            np.radians(forced_angle[i]),
            forced_radius[i],
            FORCED_COLOR,
            f"forced-{channel}",
            width,
        )
        ax.text(
            np.radians(forced_angle[i]),
            min(forced_radius[i] + 0.08, 1.08),
            channel,
            fontsize=7,
            ha="center",
        )
    if top is not None and top in channels:
        i = channels.index(top)
        ax.plot(
            [np.radians(forced_angle[i])],
            [forced_radius[i]],
            marker="o",
            markersize=10,
            markerfacecolor="none",
            markeredgecolor=HIGHLIGHT_COLOR,
            markeredgewidth=2,
            linestyle="none",
            gid=f"highlight-{top}",
        )

    ax.legend(
        handles=[
            Line2D([0], [0], color=FORCED_COLOR, label="forced (aligned)"),
            Line2D([0], [0], color=NATURAL_COLOR, label="natural"),
        ],
        loc="upper left",
        bbox_to_anchor=(1.0, 1.1),
        fontsize=8,
    )
    if title is None:
        title = (
            f"{forced.attrs.get('frequency', float('nan')):.3f} Hz, "
            f"delta {alignment.delta:.1f} deg"
        )
    ax.set_title(title, fontsize=9)

    if path is not None:
        with matplotlib.rc_context({"svg.hashsalt": "xosc"}):
            fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    return fig
