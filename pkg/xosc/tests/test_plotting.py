import xml.etree.ElementTree as ET

import numpy as np
import pytest

import xosc
from xosc.errors import InputError

matplotlib = pytest.importorskip("matplotlib")
matplotlib.use("Agg")

from matplotlib.text import Annotation  # noqa: E402


@pytest.fixture()
def distorted(natural_shape):
    angles = natural_shape["angle"].values.copy()
    angles[2] += 60.0
    forced = xosc.mode_shape(
        natural_shape["channel"].values,
        natural_shape["magnitude"].values,
        angles,
        frequency=0.4,
        reference="a",
    )
    return forced, xosc.align_shapes(forced, natural_shape, list("abcde"))


def _arrows(fig):
    ax = fig.axes[0]
    return {
        t.arrow_patch.get_gid(): np.asarray(t.xy)
        for t in ax.texts
        if isinstance(t, Annotation)
    }


def test_svg_ids(tmp_path, natural_shape, distorted):
    forced, alignment = distorted
    path = tmp_path / "compass.svg"
    xosc.render_compass(forced, natural_shape, alignment, path)

    ids = {el.get("id") for el in ET.parse(path).iter() if el.get("id")}
    for channel in "abcde":
        assert f"forced-{channel}" in ids
        assert f"natural-{channel}" in ids
    assert "highlight-c" in ids
    assert not any(i.startswith("highlight-") and i != "highlight-c" for i in ids)


def test_svg_is_deterministic(tmp_path, natural_shape, distorted):
    forced, alignment = distorted
    xosc.render_compass(forced, natural_shape, alignment, tmp_path / "one.svg")
    xosc.render_compass(forced, natural_shape, alignment, tmp_path / "two.svg")
    assert (tmp_path / "one.svg").read_bytes() == (tmp_path / "two.svg").read_bytes()


def test_rotation_is_undone(natural_shape):
    forced = xosc.rotate(natural_shape, -30.0)
    alignment = xosc.align_shapes(forced, natural_shape, list("abcde"))
    arrows = _arrows(xosc.render_compass(forced, natural_shape, alignment))
    for channel in "abcde":
        np.testing.assert_allclose(
            arrows[f"forced-{channel}"], arrows[f"natural-{channel}"], atol=1e-9
        )


def test_arrow_lengths_are_normalized(natural_shape, distorted):
    forced, alignment = distorted
    arrows = _arrows(xosc.render_compass(forced, natural_shape, alignment))
    assert arrows["natural-a"][1] == pytest.approx(1.0)
    assert arrows["natural-e"][1] == pytest.approx(0.6)


def test_highlight_marks_top_channel(natural_shape, distorted):
    forced, alignment = distorted
    fig = xosc.render_compass(forced, natural_shape, alignment, title="event 7")
    ax = fig.axes[0]
    assert [line.get_gid() for line in ax.lines] == ["highlight-c"]
    assert ax.get_title() == "event 7"


def test_accessor_compass(natural_shape, distorted):
    forced, _ = distorted
    fig = forced.osc.compass(natural_shape)
    assert "highlight-c" in [line.get_gid() for line in fig.axes[0].lines]


def test_no_common_channels(natural_shape, distorted):
    _, alignment = distorted
    other = xosc.mode_shape(["x", "y"], [1, 1], [0, 10], frequency=0.4, reference="x")
    with pytest.raises(InputError, match="share no channel"):
        xosc.render_compass(other, natural_shape, alignment)


def test_simulated_source_is_highlighted(tmp_path, scenario, scenario_report):
    path = tmp_path / "scenario.svg"
    fig = xosc.render_compass(
        scenario_report.forced_shape,
        scenario_report.natural_shape,
        scenario_report.alignment,
        path,
    )
    highlight = f"highlight-{scenario.source_channel}"
    assert [line.get_gid() for line in fig.axes[0].lines] == [highlight]
    assert highlight in {el.get("id") for el in ET.parse(path).iter()}
