import json

import pytest

import xosc
from xosc.errors import InputError
from xosc.sweep import run_trial

pytest.importorskip("joblib")


@pytest.fixture(scope="module")
def summary():
    return xosc.run_sweep(3, seed=10, n_buses=6, duration=60.0)


def test_summary(summary):
    assert len(summary.trials) == 3
    assert [t.trial for t in summary.trials] == [0, 1, 2]
    assert [t.seed for t in summary.trials] == [10, 11, 12]
    for rate in (summary.single_source_rate, summary.top2_rate, summary.distortion_rate):
        assert 0.0 <= rate <= 1.0
    assert all(abs(t.offset) <= 0.02 for t in summary.trials)
    document = summary.to_dict()
    assert document["trials"] == 3
    assert len(document["results"]) == 3


def test_deterministic(summary):
    again = xosc.run_sweep(3, seed=10, n_buses=6, duration=60.0)
    assert [t.to_dict() for t in again.trials] == [t.to_dict() for t in summary.trials]


def test_parallel_matches_serial(summary):
    parallel = xosc.run_sweep(3, seed=10, n_buses=6, duration=60.0, n_jobs=2)
    assert [t.to_dict() for t in parallel.trials] == [
        t.to_dict() for t in summary.trials
    ]


def test_trial_files(tmp_path):
    result = run_trial(4, 21, 0.0, n_buses=6, duration=60.0, out_dir=tmp_path)
    assert result.source.startswith("bus")
    if result.error is None:
        truth = json.loads((tmp_path / "trial_0004_truth.json").read_text())
        assert truth["source_channel"] == result.source
        assert truth["offset"] == 0.0
        report = xosc.read_report(tmp_path / "trial_0004_report.json")
        assert report["verdict"]["kind"] == result.verdict
        assert result.hit == (result.channels == (result.source,))


def test_sweep_output_dir(tmp_path):
    xosc.run_sweep(2, seed=1, out_dir=tmp_path / "out", n_buses=6, duration=60.0)
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["trials"] == 2
    truths = list((tmp_path / "out").glob("trial_*_truth.json"))
    assert len(truths) == 2 - summary["failures"]


def test_invalid_trials():
    with pytest.raises(InputError):
        xosc.run_sweep(0)


def test_config_is_used():
    strict = xosc.PipelineConfig(min_angle=179.0)
    summary = xosc.run_sweep(2, seed=3, n_buses=6, duration=60.0, config=strict)
    assert all(t.verdict in ("no_source", "error") for t in summary.trials)


@pytest.mark.slow
def test_localisation_rates():
    summary = xosc.run_sweep(200, seed=0, n_buses=10, n_jobs=-1)
    assert summary.failures == 0
    assert summary.single_source_rate >= 0.95
    assert summary.top2_rate >= 0.99
    assert summary.distortion_rate >= 0.95
    assert all(abs(t.offset) <= 0.02 for t in summary.trials)
