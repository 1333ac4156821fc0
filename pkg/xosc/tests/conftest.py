import numpy as np
import pytest

import xosc

NATURAL_ANGLES = {"a": 0.0, "b": 20.0, "c": -30.0, "d": 45.0, "e": 10.0}
NATURAL_MAGNITUDES = {"a": 1.0, "b": 0.8, "c": 0.9, "d": 0.7, "e": 0.6}


def _tones(frequency, magnitudes, angles, duration, sample_rate, noise, seed, decay):
    rng = np.random.default_rng(seed)
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    envelope = np.exp(-decay * t)
    data = {
        c: magnitudes[c] * envelope * np.cos(2 * np.pi * frequency * t + np.radians(a))
        + noise * rng.standard_normal(t.size)
        for c, a in angles.items()
    }
    return xosc.make_channels(data, sample_rate)


@pytest.fixture(scope="session")
def tones():
    # factory of multi-channel (optionally decaying) sinusoids
    def make(
        frequency,
        angles,
        magnitudes=None,
        duration=120.0,
        sample_rate=10.0,
        noise=0.0,
        seed=0,
        decay=0.0,
    ):
        if magnitudes is None:
            magnitudes = dict.fromkeys(angles, 1.0)
        return _tones(
            frequency, magnitudes, angles, duration, sample_rate, noise, seed, decay
        )

    return make


@pytest.fixture(scope="session")
def natural_shape():
    return xosc.mode_shape(
        list(NATURAL_ANGLES),
        list(NATURAL_MAGNITUDES.values()),
        list(NATURAL_ANGLES.values()),
        frequency=0.4,
        reference="a",
    )


@pytest.fixture(scope="session")
def forced_channels(tones):
    # channel c pushed 60 degrees away from the natural shape
    angles = dict(NATURAL_ANGLES, c=NATURAL_ANGLES["c"] + 60.0)
    return tones(0.4, angles, NATURAL_MAGNITUDES, noise=0.01)


@pytest.fixture(scope="session")
def ambiguous_channels(tones):
    angles = dict(
        NATURAL_ANGLES, c=NATURAL_ANGLES["c"] + 60.0, d=NATURAL_ANGLES["d"] + 55.0
    )
    return tones(0.4, angles, NATURAL_MAGNITUDES, noise=0.01, seed=1)


@pytest.fixture(scope="session")
def ringdown_channels(tones):
    return tones(0.41, NATURAL_ANGLES, NATURAL_MAGNITUDES, duration=60.0, decay=0.05)


@pytest.fixture(scope="session")
def two_mass():
    # f = sqrt(2 k / M) / (2 pi) with k = 8, M = 2
    return xosc.GridModel.from_edges([(0, 1, 8.0)], inertia=[2.0, 2.0], damping=[0, 0])


@pytest.fixture(scope="session")
def ring6():
    edges = [(i, (i + 1) % 6, w) for i, w in enumerate([3.0, 5.0, 4.0, 6.0, 2.5, 7.0])]
    return xosc.GridModel.from_edges(
        edges + [(0, 3, 4.0)],
        inertia=[4.0, 6.0, 5.0, 8.0, 3.5, 7.0],
        damping=[1.0, 0.6, 1.5, 0.8, 1.2, 0.7],
    )


@pytest.fixture(scope="session")
def ring10():
    rng = np.random.default_rng(42)
    edges = [(i, (i + 1) % 10, float(w)) for i, w in enumerate(rng.uniform(2, 10, 10))]
    return xosc.GridModel.from_edges(
        edges,
        inertia=rng.uniform(3, 10, 10),
        damping=rng.uniform(0.5, 2, 10),
    )


@pytest.fixture(scope="session")
def scenario():
    return xosc.make_scenario(10, seed=3, resonance_offset=0.01)


@pytest.fixture(scope="session")
def scenario_report(scenario):
    channels = xosc.scenario_channels(scenario, seed=3)
    return xosc.locate_source(channels, baseline=scenario.natural.shape)


@pytest.fixture(scope="session")
def twin_pendants():
    # stiff four-bus core; bus4 and bus5 hang on bus0 and are tied to each
    # other, so forcing both alike keeps their responses identical
    core = [(i, j, 200.0) for i in range(4) for j in range(i + 1, 4)]
    inertia = np.full(6, 5.0)
    return xosc.GridModel.from_edges(
        core + [(0, 4, 3.0), (0, 5, 3.0), (4, 5, 20.0)],
        inertia=inertia,
        damping=0.3 * inertia,
    )


@pytest.fixture(scope="session")
def twin_forced(twin_pendants):
    natural = xosc.natural_modes(twin_pendants)[0]
    runs = [
        xosc.simulate(
            twin_pendants,
            xosc.Forcing(bus=bus, frequency=natural.frequency, amplitude=0.1),
            240.0,
            10.0,
            noise_snr_db=40.0,
            seed=bus,
            start="steady",
        )
        for bus in (4, 5)
    ]
    return runs[0].copy(data=runs[0].values + runs[1].values), natural
