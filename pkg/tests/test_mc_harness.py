import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from radarlab.analysis import AnalysisNode, total_covariance
from radarlab.errors import ConfigError
from radarlab.estimator import refine
from radarlab.mc_harness import CampaignConfig, GridSpec, compare_theory, run_campaign, summarize
from radarlab.signal_core import WaveformSpec, generate_waveform

from conftest import make_scenario

SPEC = WaveformSpec(8e6, 25e6, 256, 12)


def _cfg(**kw):
    sc = make_scenario(SPEC, L=4, tau_samples=5.37, doppler_bins=2.3, sigma_n2=1e-5, sigma_e2=0.05)
    base = dict(scenario=sc, n_trials=6, sweep_axis="sc_snr_db", sweep_values=(5.0, 15.0), root_seed=11)
    base.update(kw)
    return CampaignConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError):
        _cfg(n_trials=0)
    with pytest.raises(ConfigError):
        _cfg(sweep_axis="bogus")
    with pytest.raises(ConfigError):
        _cfg(sweep_values=(1.0, float("inf")))
    with pytest.raises(ConfigError):
        _cfg(sweep_values=())


def test_sweep_sets_noise_from_snr():
    pts = _cfg().points()
    assert [v for v, _ in pts] == [5.0, 15.0]
    assert pts[1][1].sigma_e2 == pytest.approx(10 ** -1.5)
    pts = _cfg(sweep_axis="rc_snr_db", sweep_values=(40.0,)).points()
    assert pts[0][1].sigma_n2 == pytest.approx(abs(pts[0][1].a) ** 2 * 1e-4)


def test_zero_noise_single_trial_is_exact():
    sc = make_scenario(SPEC, L=4, tau_samples=5.37, doppler_bins=2.3)
    rep = run_campaign(CampaignConfig(sc, 1, tol=1e-10, max_iter=2000))
    p = rep.points[0]
    assert p.n_ok == 1 and p.n_outlier == 0
    assert p.rmse[0] < 1e-8 * SPEC.dt
    assert p.rmse[1] < 1e-8 * SPEC.doppler_bin


def test_same_seed_same_report():
    r1, r2 = run_campaign(_cfg()), run_campaign(_cfg())
    assert r1.to_csv() == r2.to_csv()
    for p1, p2 in zip(r1.points, r2.points):
        np.testing.assert_array_equal(p1.errors, p2.errors)
    assert run_campaign(_cfg(root_seed=12)).to_csv() != r1.to_csv()


def test_process_pool_matches_serial():
    assert run_campaign(_cfg(threads=2)).to_csv() == run_campaign(_cfg()).to_csv()


def test_report_fields():
    rep = run_campaign(_cfg())
    assert rep.to_csv().splitlines()[0].split(",") == list(rep.CSV_COLUMNS)
    for p in rep.points:
        assert np.all(p.rmse >= 0)
        assert p.n_ok + p.n_outlier == 6
        assert p.wall_time > 0


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (17, 2), elements=st.floats(-1e3, 1e3)), st.randoms(use_true_random=False))
def test_rmse_is_permutation_invariant(errors, rnd):
    outlier = np.zeros(17, bool)
    outlier[::5] = True
    perm = list(range(17))
    rnd.shuffle(perm)
    a = summarize(errors, outlier)
    b = summarize(errors[perm], outlier[perm])
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert a[2:] == b[2:]


def test_outliers_excluded_and_counted():
    errors = np.array([[1.0, 1.0], [1.0, -1.0], [1e6, 1e6]])
    rmse, bias, n_ok, n_out = summarize(errors, np.array([False, False, True]))
    np.testing.assert_allclose(rmse, [1.0, 1.0])
    np.testing.assert_allclose(bias, [1.0, 0.0])
    assert (n_ok, n_out) == (2, 1)
    rmse, _, n_ok, _ = summarize(errors, np.ones(3, bool))
    assert n_ok == 0 and np.all(np.isnan(rmse))


def test_gaussian_toy_covariance():
    # quadratic criterion with a Gaussian-perturbed peak: the maximiser is the
    # perturbation itself, so its covariance is known in closed form
    n = 2000
    sigma = np.array([2.0, 0.5])
    rng = np.random.default_rng(5)
    errors = []
    for z in rng.standard_normal((n, 2)) * sigma:
        res = refine(lambda p, z=z: -np.sum((p - z) ** 2 * [1.0, 3.0]), [0.0, 0.0], [1.0, 1.0], tol=1e-8)
        errors.append(res.point)
    rmse, _, _, _ = summarize(np.array(errors), np.zeros(n, bool))
    assert np.all(np.abs(rmse**2 / sigma**2 - 1) < 3 / math.sqrt(n))


def test_compare_theory_passthrough_and_mismatch():
    cfg = _cfg()
    rep = run_campaign(cfg)
    rows = compare_theory(rep, rep.theory)
    for row, cov, p in zip(rows, rep.theory, rep.points):
        np.testing.assert_array_equal(row.sqrt_crb, np.sqrt(np.diag(cov.crb)))
        np.testing.assert_array_equal(row.ratio_total, p.rmse / np.sqrt(np.diag(cov.total)))
    with pytest.raises(ConfigError):
        compare_theory(rep, rep.theory[:1])


def test_theory_matches_analysis_module():
    cfg = _cfg(sweep_axis="none", sweep_values=())
    rep = run_campaign(cfg)
    w = generate_waveform(SPEC, cfg.waveform_seed)
    cov = total_covariance([AnalysisNode(w, cfg.scenario)], with_spectral=False)
    np.testing.assert_array_equal(rep.points[0].sqrt_total, np.sqrt(np.diag(cov.total)))


def test_grid_spec_inclusive_axes():
    g = GridSpec(0, 4, 1, -1, 1, 0.5).build(SPEC)
    assert g.shape == (5, 5)
    with pytest.raises(ConfigError):
        GridSpec(3, 1, 1).build(SPEC)
