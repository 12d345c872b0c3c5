import os

import numpy as np
import pytest

from radarlab.scene import DelayDoppler
from radarlab.signal_core import WaveformSpec, generate_waveform
from radarlab.synth import NodeScenario

# acceptance lines collected by tests/test_acceptance.py, printed at the end
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("RADARLAB_FULL_SCALE") == "1":
        return
    skip = pytest.mark.skip(reason="opt-in: set RADARLAB_FULL_SCALE=1")
    for item in items:
        if "full_scale" in item.keywords:
            item.add_marker(skip)


def make_scenario(
    spec,
    L=4,
    tau_samples=3.37,
    doppler_bins=2.3,
    a=0.8 + 0.3j,
    b=10.0 * np.exp(0.7j),
    d=1.0,
    sigma_n2=0.0,
    sigma_e2=0.0,
    seed=3,
    clutter_power=10.0,
):
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) * np.exp(-np.arange(L) / 3)
    if L:
        c *= np.sqrt(clutter_power / np.sum(np.abs(c) ** 2))
    target = DelayDoppler(tau_samples * spec.dt, doppler_bins * spec.doppler_bin)
    return NodeScenario(a, b, d, c, sigma_n2, sigma_e2, spec, target)


@pytest.fixture
def small_spec():
    return WaveformSpec(bandwidth=8e6, sample_rate=25e6, n_samples=256, max_delay_samples=12)


@pytest.fixture
def small_waveform(small_spec):
    return generate_waveform(small_spec, seed=5)
