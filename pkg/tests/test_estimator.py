import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radarlab.errors import ConfigError, OptimizerError, UnderdeterminedError
from radarlab.estimator import (
    AmbiguitySurface,
    DelayDopplerGrid,
    GlobalNode,
    NodeProcessor,
    ReferenceInterpolator,
    build_canceller,
    criterion,
    estimate_global,
    estimate_node,
    global_likelihood,
    refine,
    threshold_peaks,
)
from radarlab.scene import NodeGeometry, TargetState, delay_doppler
from radarlab.signal_core import WaveformSpec, clutter_basis, generate_waveform
from radarlab.synth import NodeScenario, synthesize

from conftest import make_scenario


def _grid(spec, M=None):
    M = spec.max_delay_samples if M is None else M
    return DelayDopplerGrid.from_bins(spec, np.arange(0, M + 1), np.arange(-5, 6))


def test_canceller_annihilates_basis(small_waveform):
    N = small_waveform.spec.n_samples
    B = clutter_basis(small_waveform.samples(-4, N - 1), N, 4)
    c = build_canceller(B)
    assert np.max(np.abs(c.project(B.matrix))) < 1e-12
    with pytest.raises(ConfigError):
        build_canceller(B, "bogus")


def test_criterion_scale_invariant(small_waveform):
    spec = small_waveform.spec
    N = spec.n_samples
    c = build_canceller(clutter_basis(small_waveform.samples(-3, N - 1), N, 3))
    rng = np.random.default_rng(1)
    y = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    a = small_waveform.samples(0, N - 1, 2.2 * spec.dt)
    assert criterion(y, (3 - 2j) * a, c) == pytest.approx(criterion(y, a, c), rel=1e-12)


def test_interpolator_reproduces_noise_free_delays(small_waveform):
    spec = small_waveform.spec
    N, M = spec.n_samples, spec.max_delay_samples
    x = small_waveform.samples(-M, N - 1)
    interp = ReferenceInterpolator(x, N, spec.dt)
    for shift in (0.0, 3.0, 4.63, M - 0.2):
        exact = small_waveform.samples(0, N - 1, shift * spec.dt)
        assert np.max(np.abs(interp.delayed(shift * spec.dt) - exact)) < 1e-11


def test_interpolator_adjoint_dot_test(small_spec):
    N, M = small_spec.n_samples, small_spec.max_delay_samples
    rng = np.random.default_rng(2)
    interp = ReferenceInterpolator(np.zeros(N + M, complex), N, small_spec.dt)
    u = rng.standard_normal(N + M) + 1j * rng.standard_normal(N + M)
    g = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    tau = 5.3 * small_spec.dt
    lhs = np.vdot(g, interp.apply_delay(u, tau))
    rhs = np.vdot(interp.apply_delay_adjoint(g, tau), u)
    assert abs(lhs - rhs) < 1e-10 * abs(lhs)


def test_surface_matches_pointwise_criterion(small_waveform):
    spec = small_waveform.spec
    sc = make_scenario(spec, L=3, sigma_n2=1e-3, sigma_e2=0.1)
    snap = synthesize(small_waveform, sc, 3)
    proc = NodeProcessor(snap, 3, spec.dt)
    grid = DelayDopplerGrid.from_bins(spec, np.arange(0, 8) + 0.5, np.arange(-3, 4) * 0.7)
    surf = proc.surface(grid)
    assert surf.values.shape == grid.shape
    for i, tau in enumerate(grid.tau_axis):
        for j, om in enumerate(grid.omega_axis):
            assert surf.values[i, j] == pytest.approx(proc.criterion(tau, om), rel=1e-9)


def test_surface_masks_cells_inside_the_interference_span(small_waveform):
    spec = small_waveform.spec
    sc = make_scenario(spec, L=3)
    proc = NodeProcessor(synthesize(small_waveform, sc, 0), 3, spec.dt)
    surf = proc.surface(_grid(spec))
    # zero Doppler and delays 0..L coincide with basis columns
    j0 = int(np.argmin(np.abs(surf.omega_axis)))
    assert surf.masked[:4, j0].all()
    assert not surf.masked[5:, j0].any()
    assert np.all(surf.values[surf.masked] == 0.0)


def test_noise_free_peak_sits_on_nearest_cell(small_waveform):
    spec = small_waveform.spec
    sc = make_scenario(spec, L=3, tau_samples=7.1, doppler_bins=-1.9)
    proc = NodeProcessor(synthesize(small_waveform, sc, 0), 3, spec.dt)
    (i, j), _ = proc.surface(_grid(spec)).peak
    assert (i, j) == (7, 3)


def test_threshold_peaks_orders_local_maxima():
    vals = np.zeros((5, 5))
    vals[1, 1], vals[3, 3], vals[3, 4] = 5.0, 9.0, 2.0
    surf = AmbiguitySurface(np.arange(5.0), np.arange(5.0), vals, np.zeros((5, 5), bool))
    peaks = threshold_peaks(surf, 1.0)
    assert [(p[0], p[1]) for p in peaks] == [(3.0, 3.0), (1.0, 1.0)]
    assert threshold_peaks(surf, 10.0) == []
    with pytest.raises(ConfigError):
        threshold_peaks(surf, -1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_refine_finds_quadratic_optimum(x0, y0):
    target = np.array([x0, y0])
    res = refine(lambda p: -np.sum((p - target) ** 2 * [1.0, 4.0]), [0.0, 0.0], [1.0, 1.0], tol=1e-9)
    assert res.converged
    np.testing.assert_allclose(res.point, target, atol=1e-7)


def test_refine_rejects_non_finite_objective():
    with pytest.raises(OptimizerError):
        refine(lambda p: np.nan, [0.0], [1.0])


def test_noise_free_estimate_is_exact(small_waveform):
    spec = small_waveform.spec
    sc = make_scenario(spec, L=4, tau_samples=6.37, doppler_bins=1.61)
    res = estimate_node(synthesize(small_waveform, sc, 0), _grid(spec), 4, spec.dt, tol=1e-10, max_iter=2000)
    assert res.converged
    assert abs(res.tau - sc.target.tau) < 1e-8 * spec.dt
    assert abs(res.omega - sc.target.omega) < 1e-8 * spec.doppler_bin


def test_grid_only_estimate(small_waveform):
    spec = small_waveform.spec
    sc = make_scenario(spec, L=4, tau_samples=6.0, doppler_bins=2.0)
    res = estimate_node(synthesize(small_waveform, sc, 0), _grid(spec), 4, spec.dt, do_refine=False)
    assert res.iterations == 0
    assert res.tau == pytest.approx(sc.target.tau)
    assert res.omega == pytest.approx(sc.target.omega)


# -- global mode -------------------------------------------------------------

CARRIER = 1e11  # raised so that m/s velocities span several Doppler bins at N = 256


def _global_setup():
    spec = WaveformSpec(8e6, 25e6, 256, 16)
    w = generate_waveform(spec, 9)
    target = TargetState([500.0, 150.0], [300.0, -200.0])
    geoms = [
        NodeGeometry([0.0, 0.0], [1000.0, 0.0], CARRIER),
        NodeGeometry([0.0, 0.0], [600.0, 600.0], CARRIER),
        NodeGeometry([900.0, 400.0], [200.0, -50.0], CARRIER),
    ]
    nodes = []
    for k, g in enumerate(geoms):
        dd = delay_doppler(g, target)
        sc = NodeScenario(1.0, 5.0, 1.0, np.array([0.5, 0.2j]), 0.0, 0.0, spec, dd)
        snap = synthesize(w, sc, k)
        nodes.append(GlobalNode(NodeProcessor(snap, 2, spec.dt), g))
    return spec, target, nodes


def test_global_needs_rank_four():
    _, target, nodes = _global_setup()
    axes = [np.array([v - 1, v, v + 1]) for v in target.as_vector()]
    with pytest.raises(UnderdeterminedError):
        estimate_global(nodes[:1], axes)


def test_global_noise_free_recovers_state():
    _, target, nodes = _global_setup()
    theta = target.as_vector()
    axes = [
        theta[0] + np.arange(-2, 3) * 4.0,
        theta[1] + np.arange(-2, 3) * 4.0,
        theta[2] + np.arange(-2, 3) * 40.0,
        theta[3] + np.arange(-2, 3) * 40.0,
    ]
    res = estimate_global(nodes, axes, tol=1e-10, max_iter=4000)
    np.testing.assert_allclose(res.point[:2], theta[:2], atol=1e-4)
    np.testing.assert_allclose(res.point[2:], theta[2:], atol=1e-3)
    assert global_likelihood(res.point, nodes) >= global_likelihood(res.grid_point, nodes)
