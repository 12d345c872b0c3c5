import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from radarlab.errors import ConfigError, GeometryError
from radarlab.scene import (
    SPEED_OF_LIGHT,
    NodeGeometry,
    TargetState,
    bistatic_amplitudes,
    bistatic_range,
    delay_doppler,
    is_identifiable,
    jacobian,
    sigma2_for_snr,
)

coords = st.floats(-5e3, 5e3, allow_nan=False)


def _geom():
    return NodeGeometry([0.0, 0.0], [1000.0, 0.0])


def test_rejects_coincident_nodes():
    with pytest.raises(GeometryError):
        NodeGeometry([1.0, 2.0], [1.0, 2.0])


def test_rejects_zero_speed():
    with pytest.raises(ConfigError):
        TargetState([0.0, 100.0], [0.0, 0.0])


def test_target_on_baseline_has_zero_delay():
    dd = delay_doppler(_geom(), TargetState([400.0, 0.0], [1.0, 1.0]))
    assert dd.tau == pytest.approx(0.0, abs=1e-15)


def test_delay_from_path_difference():
    g = _geom()
    t = TargetState([500.0, 1200.0], [3.0, -4.0])
    r = np.hypot(500, 1200) * 2 - 1000
    assert delay_doppler(g, t).tau == pytest.approx(r / SPEED_OF_LIGHT, rel=1e-12)
    assert bistatic_range(g, t.position) == pytest.approx(r, rel=1e-12)


def test_approaching_target_has_positive_doppler():
    g = _geom()
    t = TargetState([500.0, 1200.0], [0.0, -30.0])
    assert delay_doppler(g, t).omega > 0


@settings(max_examples=60)
@given(coords, coords, st.floats(-300, 300), st.floats(-300, 300))
def test_delay_nonnegative(x, y, vx, vy):
    assume(np.hypot(vx, vy) > 1e-6 and np.hypot(x, y) > 1 and np.hypot(x - 1000, y) > 1)
    assert delay_doppler(_geom(), TargetState([x, y], [vx, vy])).tau >= 0


def test_jacobian_matches_finite_difference():
    g = NodeGeometry([-300.0, 50.0], [900.0, -120.0])
    theta = np.array([420.0, 1730.0, 25.0, -41.0])
    J = jacobian(g, TargetState.from_vector(theta))
    h = np.array([1e-3, 1e-3, 1e-4, 1e-4])
    fd = np.zeros((2, 4))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h[i]
        p = delay_doppler(g, TargetState.from_vector(theta + e))
        m = delay_doppler(g, TargetState.from_vector(theta - e))
        fd[:, i] = [(p.tau - m.tau) / (2 * h[i]), (p.omega - m.omega) / (2 * h[i])]
    for row in range(2):
        assert np.linalg.norm(fd[row] - J[row]) / np.linalg.norm(J[row]) < 1e-6


def test_identifiability_needs_two_nodes():
    t = TargetState([400.0, 1500.0], [10.0, 5.0])
    g1 = NodeGeometry([0.0, 0.0], [1000.0, 0.0])
    g2 = NodeGeometry([0.0, 0.0], [-200.0, 900.0])
    assert not is_identifiable([g1], t)
    assert is_identifiable([g1, g2], t)


def test_radar_equation_magnitudes():
    g = _geom()
    t = TargetState([500.0, 1200.0], [1.0, 0.0])
    a, b, d = bistatic_amplitudes(g, t, transmit_power=1e4, rcs=10.0, seed=3)
    lam = SPEED_OF_LIGHT / g.carrier_frequency
    R = np.hypot(500, 1200)
    echo = 1e4 * 10.0 * lam**2 / ((4 * np.pi) ** 3 * R**4)
    assert abs(d) ** 2 == pytest.approx(echo, rel=1e-12)
    assert abs(b) ** 2 == pytest.approx(1e-3 * abs(a) ** 2, rel=1e-12)
    assert bistatic_amplitudes(g, t, 1e4, 10.0, seed=3) == (a, b, d)


def test_sigma2_for_snr():
    assert sigma2_for_snr(2.0, 10.0) == pytest.approx(0.4)
