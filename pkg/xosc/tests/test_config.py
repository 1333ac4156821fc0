import json

import pytest

import xosc
from xosc.errors import ConfigError, InvalidFrequencyError


def test_defaults():
    config = xosc.PipelineConfig()
    assert config.band == xosc.FrequencyBand(0.1, 2.0)
    assert config.threshold_fraction == 0.3
    assert config.ratio_k == 1.5
    assert config.min_angle == 10.0
    assert config.mode_tol == 0.1
    assert config.reference_channel is None
    assert config.weighted_alignment is False


@pytest.mark.parametrize(
    "kwargs",
    [
        {"threshold_fraction": 1.5},
        {"ratio_k": 1.0},
        {"min_angle": 0.0},
        {"mode_tol": -0.1},
        {"welch_segment_seconds": 0.0},
        {"min_prominence": 0.5},
        {"model_order": 1},
        {"band": (0.1, 2.0)},
    ],
)
def test_invalid(kwargs):
    with pytest.raises(ConfigError):
        xosc.PipelineConfig(**kwargs)


def test_band():
    band = xosc.FrequencyBand.parse("0.2:0.9")
    assert band.to_list() == [0.2, 0.9]
    assert band.contains(0.5)
    assert not band.contains(1.0)
    band.check(10.0)
    with pytest.raises(InvalidFrequencyError):
        band.check(1.5)
    with pytest.raises(InvalidFrequencyError):
        xosc.FrequencyBand(0.9, 0.2)
    with pytest.raises(ConfigError, match="lo:hi"):
        xosc.FrequencyBand.parse("0.2-0.9")


def test_replace_skips_none():
    config = xosc.PipelineConfig().replace(ratio_k=2.0, reference_channel=None)
    assert config.ratio_k == 2.0
    assert config.reference_channel is None


def test_dict_round_trip():
    config = xosc.PipelineConfig(
        band=xosc.FrequencyBand(0.2, 1.0), reference_channel="a", weighted_alignment=True
    )
    assert xosc.PipelineConfig.from_dict(config.to_dict()) == config


def test_from_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"band": "0.3:0.8", "min_angle": 15}))
    config = xosc.PipelineConfig.from_file(path)
    assert config.band == xosc.FrequencyBand(0.3, 0.8)
    assert config.min_angle == 15

    path.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ConfigError, match="unknown"):
        xosc.PipelineConfig.from_file(path)

    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        xosc.PipelineConfig.from_file(path)
