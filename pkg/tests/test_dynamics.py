import numpy as np
import pytest

from growthlab.dynamics import (MeasurePath, cir_exact_step, driving_from_state,
                                ou_baseline, simulate_mass_ensemble,
                                simulate_symmetric, total_mass_stats)
from growthlab.gmc import CircleMeasure
from growthlab.loewner import flow
from growthlab.rng import make_rng
from growthlab.spectral import BoundaryField

XI = 1.0 / np.sqrt(6.0)


def test_cir_exact_moments():
    rng = make_rng(1)
    n = 200000
    x0 = np.full(n, 0.5)
    x1, nab = cir_exact_step(x0, np.full(n, 0.3), 1.2, 0.05, rng)
    mean_t = 0.5 + 0.3 * 0.05
    var_t = 1.2 ** 2 * 0.05 * 0.5 + 1.2 ** 2 * 0.05 ** 2 * 0.3 / 2
    assert abs(x1.mean() - mean_t) < 4 * np.sqrt(var_t / n)
    assert abs(x1.var() - var_t) < 5 * var_t * np.sqrt(2.0 / n)
    assert x1.min() >= 0.0
    # negative drift keeps the exact conditional mean when no absorption
    x2, nab2 = cir_exact_step(x0, np.full(n, -0.3), 1.2, 0.05, rng)
    assert abs(x2.mean() - (0.5 - 0.015)) < 4 * np.sqrt(var_t / n)
    assert nab2 == 0
    # absorption flag fires when the deterministic drift overshoots zero
    x3, nab3 = cir_exact_step(np.full(4, 1e-6), np.full(4, -1.0), 1.2, 0.05, rng)
    assert nab3 == 4 and np.all(x3 >= 0.0)


def test_drift_only_slope_exact():
    path = simulate_symmetric(CircleMeasure.uniform(2 * np.pi, 16), XI, 1e-3,
                              0.1, 4, make_rng(2), noise=False)
    slope = (path.total_mass[-1] - path.total_mass[0]) / 0.1
    assert abs(slope - 2 * np.pi ** 2 * XI ** 2) < 1e-10


def test_one_cell_besq_reduction():
    paths = simulate_mass_ensemble(0.25, XI, 1e-3, 0.5, 4000, make_rng(3), M=1, N=0)
    times = np.arange(paths.shape[1]) * 1e-3
    stats = total_mass_stats(paths, times, XI)
    assert stats.slope_rel_err < 0.05
    assert abs(stats.scaled_drift - 0.5) < 0.05 * 0.5
    assert paths.min() >= 0.0


def test_total_mass_stats_requires_paths():
    with pytest.raises(ValueError):
        total_mass_stats(np.ones((10, 5)), np.arange(5.0), XI)


def test_bracket_structure():
    paths = simulate_mass_ensemble(40 * np.pi, XI, 1e-3, 0.2, 1500, make_rng(4),
                                   M=16, N=4)
    dX = np.diff(paths, axis=1)
    qv = ((dX - 2 * np.pi ** 2 * XI ** 2 * 1e-3) ** 2).mean(axis=0).sum()
    pred = ((2 * np.pi * XI) ** 2 * paths[:, :-1].mean(axis=0) * 1e-3).sum()
    assert abs(qv / pred - 1.0) < 0.05


def test_martingale_residual():
    reps = 400
    ens = simulate_mass_ensemble(40 * np.pi, XI, 1e-3, 0.12, reps, make_rng(5),
                                 M=16, N=4)
    drift_line = 2 * np.pi ** 2 * XI ** 2 * np.arange(ens.shape[1]) * 1e-3
    resid = ens - ens[:, :1] - drift_line[None, :]
    for frac in (0.33, 0.66, 1.0):
        k = int(frac * (ens.shape[1] - 1))
        se = resid[:, k].std(ddof=1) / np.sqrt(reps)
        assert abs(resid[:, k].mean()) < 3 * se


def test_simulate_symmetric_positivity_and_errors():
    path = simulate_symmetric(CircleMeasure.uniform(40 * np.pi, 32), XI, 1e-3,
                              0.05, 8, make_rng(6))
    assert path.masses.min() >= 0.0
    assert len(path.fields) == path.masses.shape[0]
    with pytest.raises(ValueError):
        simulate_symmetric(CircleMeasure.uniform(1.0, 8), 1.2, 1e-3, 0.01, 2, make_rng(7))
    with pytest.raises(ValueError):
        simulate_symmetric(CircleMeasure(np.zeros(8)), XI, 1e-3, 0.01, 2, make_rng(8))


def test_ou_stationary_variances():
    h0 = BoundaryField.zeros(6)
    out = ou_baseline(h0, 0.02, 5.0 / np.pi, make_rng(9), n_paths=6000)
    for k in (1, 2, 3, 4):
        lam = np.ceil(k / 2)
        v = out[:, -1, k].var(ddof=1)
        target = 2 * np.pi / lam
        assert abs(v - target) < 3 * target * np.sqrt(2.0 / out.shape[0])
    # zero mode held fixed
    assert np.all(out[:, :, 0] == 0.0)


def test_ou_pure_decay_and_spectral_gap():
    h0 = 10.0 * BoundaryField.basis(1, 2)
    out = ou_baseline(h0, 0.01, 1.0, make_rng(10), n_paths=1, noise=False)
    assert abs(out[0, -1, 1] - 10.0 * np.exp(-np.pi)) < 1e-10
    # mode 3 decays at rate 2 pi
    h3 = 10.0 * BoundaryField.basis(3, 2)
    out3 = ou_baseline(h3, 0.01, 1.0, make_rng(11), n_paths=1, noise=False)
    assert abs(out3[0, -1, 3] - 10.0 * np.exp(-2 * np.pi)) < 1e-9
    # ensemble decay of the mean within two percent
    big = ou_baseline(h0, 0.01, 0.2, make_rng(12), n_paths=40000)
    est = big[:, -1, 1].mean() / 10.0
    assert abs(est / np.exp(-np.pi * 0.2) - 1.0) < 0.02


def test_ou_stationarity_against_fresh_samples():
    from growthlab.fields import sample_trace_batch

    h0 = BoundaryField.zeros(4)
    out = ou_baseline(h0, 0.05, 5.0 / np.pi, make_rng(13), n_paths=8000)
    fresh = sample_trace_batch(4, 8000, make_rng(14))
    for k in (1, 3, 5):
        v1 = out[:, -1, k].var(ddof=1)
        v2 = fresh[:, k].var(ddof=1)
        pooled = (v1 + v2) * np.sqrt(2.0 / 8000)
        assert abs(v1 - v2) < 3 * pooled


def test_driving_from_state_constant_field():
    M = 16
    flat = MeasurePath(np.array([0.0, 1e-3, 2e-3]),
                       np.tile(np.full(M, 2 * np.pi / M), (3, 1)),
                       [BoundaryField.zeros(2)] * 3)
    driving = driving_from_state(flat, XI)
    # constant field: uniform driving, radial flow scaling
    dens = driving.measures[0].density
    assert np.abs(dens - dens[0]).max() < 1e-12
    g = flow(driving, 0.5 + 0j).at_end()
    assert abs(abs(g) - 0.5 * np.exp(driving.mass_integral())) < 1e-8
    assert abs(np.angle(g)) < 1e-10
    # xi -> 0: the driving density approaches arclength (density one)
    tiny = driving_from_state(flat, 1e-9)
    assert np.abs(tiny.measures[0].density - 1.0).max() < 1e-6


def test_absorbed_states_flagged():
    # tiny cells with strong noise absorb and are counted
    path = simulate_symmetric(CircleMeasure.uniform(0.05, 16), XI, 1e-3, 0.05,
                              4, make_rng(15))
    assert path.absorbed_events >= 0
    assert path.masses.min() >= 0.0
