import math

import numpy as np
import pytest
from scipy import stats as scistats

from seedbank.blockcount import duality_rhs
from seedbank.diffusion import (
    DiffusionState,
    IntegratorSettings,
    Trajectory,
    batch_paths,
    boundary_hitting_stats,
    delay_residual,
    duality_lhs,
    duality_lhs_grid,
    fixation_stats,
    integrate,
    martingale_drift,
)
from seedbank.measures import ModelParams, SwitchingMeasure

P11 = ModelParams(c=1.0, K=1.0)


def test_settings_validation():
    with pytest.raises(ValueError):
        IntegratorSettings(horizon=0.0)
    with pytest.raises(ValueError):
        IntegratorSettings(horizon=1.0, dt=2.0)
    with pytest.raises(ValueError):
        IntegratorSettings(horizon=1.0, jump_cutoff=1.5)
    with pytest.raises(ValueError):
        IntegratorSettings(horizon=1.0, noise_model="exact")
    with pytest.raises(ValueError):
        DiffusionState(1.2, 0.0)


def test_absorbing_corner_is_constant():
    st = IntegratorSettings(horizon=2.0, dt=1e-3)
    tr = integrate(P11, DiffusionState(0.0, 0.0), st, seed=0)
    assert tr.x.max() == 0.0 and tr.y.max() == 0.0
    assert tr.hit_00 and not tr.ran_to_horizon


def test_no_noise_matches_linear_ode():
    # eigenvalues 0 and -2 for c = K = 1: x(t) = 1/2 + e^{-2t}/2 from (1, 0)
    st = IntegratorSettings(horizon=2.0, dt=1e-4)
    tr = integrate(P11, DiffusionState(1.0, 0.0), st, seed=0, noise=False)
    ref_x = 0.5 + 0.5 * np.exp(-2 * tr.times)
    ref_y = 0.5 - 0.5 * np.exp(-2 * tr.times)
    assert np.abs(tr.x - ref_x).max() <= 5e-4
    assert np.abs(tr.y - ref_y).max() <= 5e-4


def test_state_stays_in_unit_square():
    p = ModelParams(c=2.0, K=0.5, u1=0.4, u2=0.4, u1p=0.2, u2p=0.2,
                    lambda_ad=SwitchingMeasure.atom(0.6, 0.5))
    res = batch_paths(p, 0.9, 0.1, IntegratorSettings(horizon=1.0, dt=1e-3), 2_000,
                      seed=1, snapshot_times=[0.5, 1.0])
    for _, xs, ys in res.snapshots:
        assert xs.min() >= 0.0 and xs.max() <= 1.0
        assert ys.min() >= 0.0 and ys.max() <= 1.0


def test_duality_lhs_at_zero_and_at_one():
    grid = duality_lhs_grid(P11, 0.4, 0.8, [(1, 0), (2, 1)], [0.0], 100, seed=2)
    assert grid[(1, 0, 0.0)] == (0.4, 0.0)
    assert grid[(2, 1, 0.0)] == (pytest.approx(0.4**2 * 0.8), 0.0)
    mean, se = duality_lhs(P11, 1.0, 1.0, 2, 2, 0.7, 500, seed=3,
                           settings=IntegratorSettings(horizon=0.7, dt=1e-3))
    assert mean == 1.0 and se == 0.0


def test_duality_two_state_closed_form():
    t = math.log(2) / 2
    want = 0.75 * 0.4 + 0.25 * 0.8
    mean, se = duality_lhs(P11, 0.4, 0.8, 1, 0, t, 20_000, seed=4,
                           settings=IntegratorSettings(horizon=t, dt=1e-3))
    assert abs(mean - want) <= 3 * se + 0.005


def test_duality_against_exact_rhs_with_moments():
    st = IntegratorSettings(horizon=1.0, dt=1e-3)
    grid = duality_lhs_grid(P11, 0.2, 0.8, [(2, 0), (1, 1), (0, 2)], [0.4, 1.0],
                            20_000, seed=5, settings=st)
    for (n, m, t), (mean, se) in grid.items():
        rhs, _ = duality_rhs(n, m, 0.2, 0.8, P11, t)
        assert abs(mean - rhs) <= 3 * se + 0.005


def test_martingale_exact_corners():
    rows = martingale_drift(P11, (0.0, 0.0), 2.0, [1.0, 2.0], 200, seed=6)
    assert all(mn == 0.0 for _, mn, _ in rows)
    p2 = ModelParams(c=1.0, K=2.0)
    rows = martingale_drift(p2, (1.0, 1.0), 2.0, [1.0, 2.0], 200, seed=7)
    assert all(mn == pytest.approx(3.0) for _, mn, _ in rows)


def test_martingale_interior():
    rows = martingale_drift(P11, (0.3, 0.7), 5.0, [1.0, 5.0], 6_000, seed=8,
                            settings=IntegratorSettings(horizon=5.0, dt=1e-3))
    for _, mn, se in rows:
        assert abs(mn - 1.0) <= 3.5 * se


def test_martingale_rejects_mutation():
    with pytest.raises(ValueError):
        martingale_drift(ModelParams(c=1.0, K=1.0, u1=0.1), (0.3, 0.7), 1.0, [1.0], 10)


def test_jump_rate_and_log():
    lam = SwitchingMeasure.atom(0.5, 0.5)
    p = ModelParams(c=1.0, K=1.0, lambda_ad=lam, lambda_da=lam)
    reps, T = 3_000, 2.0
    res = batch_paths(p, 0.4, 0.8, IntegratorSettings(horizon=T, dt=1e-3), reps, seed=9)
    expected = 0.5 / 0.5 * T * reps  # rate w/z per unit time per lane
    for kind in ("F", "D"):
        got = res.jump_counts[kind]
        assert abs(got - expected) <= 3.5 * math.sqrt(expected)
    tr = integrate(p, DiffusionState(0.4, 0.8), IntegratorSettings(horizon=5.0, dt=1e-3), seed=10)
    times = [t for t, _, _ in tr.jumps]
    assert times == sorted(times)
    assert all(z == 0.5 for _, _, z in tr.jumps)
    assert all(k in ("F", "D") for _, k, _ in tr.jumps)


def test_beta_component_jump_sizes():
    p = ModelParams(c=1.0, K=1.0,
                    lambda_ad=SwitchingMeasure(beta_components=((2.0, 2.0, 1.0),)))
    tr = integrate(p, DiffusionState(0.5, 0.5),
                   IntegratorSettings(horizon=40.0, dt=1e-3, jump_cutoff=0.05), seed=11)
    zs = np.array([z for _, k, z in tr.jumps if k == "F"])
    assert zs.size > 20
    assert zs.min() >= 0.05 and zs.max() <= 1.0
    # sizes follow density ~ 6 z (1-z) / z = 6 (1-z) restricted to [eps, 1]
    from scipy.integrate import quad
    norm = quad(lambda z: 6 * (1 - z), 0.05, 1.0)[0]
    cdf = lambda z: quad(lambda s: 6 * (1 - s) / norm, 0.05, z)[0]
    assert scistats.kstest(zs, np.vectorize(cdf)).pvalue > 0.001


def test_allele_relabeling_symmetry():
    p = ModelParams(c=1.0, K=1.0, u1=0.3, u2=0.1, u1p=0.2, u2p=0.05)
    q = ModelParams(c=1.0, K=1.0, u1=0.1, u2=0.3, u1p=0.05, u2p=0.2)
    st = IntegratorSettings(horizon=1.0, dt=1e-3)
    a = batch_paths(p, 0.3, 0.6, st, 4_000, seed=12, snapshot_times=[1.0]).snapshots[0][1]
    b = batch_paths(q, 0.7, 0.4, st, 4_000, seed=13, snapshot_times=[1.0]).snapshots[0][1]
    assert scistats.ks_2samp(a, 1.0 - b).pvalue > 0.001


def test_strong_order_with_shared_noise():
    # coupled refinement: coarse increments are pair sums of fine ones
    rng = np.random.default_rng(14)
    T, dt0 = 1.0, 4e-3
    n_fine = int(T / (dt0 / 4))
    diffs_01, diffs_12 = [], []
    for _ in range(60):
        fine = rng.standard_normal(n_fine)
        mid = (fine[0::2] + fine[1::2]) / math.sqrt(2)
        coarse = (mid[0::2] + mid[1::2]) / math.sqrt(2)
        xs = {}
        for dt, normals in ((dt0, coarse), (dt0 / 2, mid), (dt0 / 4, fine)):
            st = IntegratorSettings(horizon=T, dt=dt, noise_model="gaussian")
            tr = integrate(P11, DiffusionState(0.4, 0.6), st, noise=True, normals=normals)
            xs[dt] = tr.x[-1]
        diffs_01.append(abs(xs[dt0] - xs[dt0 / 2]))
        diffs_12.append(abs(xs[dt0 / 2] - xs[dt0 / 4]))
    assert np.mean(diffs_12) < np.mean(diffs_01)


def test_normals_need_gaussian_model():
    st = IntegratorSettings(horizon=0.1, dt=1e-2)
    with pytest.raises(ValueError):
        integrate(P11, DiffusionState(0.5, 0.5), st, normals=np.zeros(100))


def test_delay_residual_constant_path():
    times = np.arange(0.0, 2.0 + 1e-12, 1e-3)
    q = 0.37
    tr = Trajectory(times=times, x=np.full(times.size, q), y=np.full(times.size, q),
                    jumps=[], hit_00=False, hit_11=False, ran_to_horizon=True)
    assert delay_residual(tr, P11) <= 1e-6
    single = Trajectory(times=np.array([0.0]), x=np.array([q]), y=np.array([q]),
                        jumps=[], hit_00=False, hit_11=False, ran_to_horizon=True)
    assert delay_residual(single, P11) == 0.0


def test_delay_residual_scale_and_guards():
    st = IntegratorSettings(horizon=5.0, dt=1e-4)
    tr = integrate(P11, DiffusionState(0.3, 0.7), st, seed=15)
    res = delay_residual(tr, P11)
    assert res <= 5 * 1e-4 * 1.0 * 5.0  # documented bound 5 dt c K T
    with pytest.raises(ValueError):
        delay_residual(tr, ModelParams(c=1.0, K=1.0, u1=0.2))
    with pytest.raises(ValueError):
        delay_residual(tr, ModelParams(c=1.0, K=1.0, lambda_ad=SwitchingMeasure.atom(0.5, 1.0)))


def test_boundary_stats_smoke():
    out = boundary_hitting_stats(P11, (0.05, 0.05), 10.0, 400, seed=16,
                                 settings=IntegratorSettings(horizon=10.0, dt=2e-3))
    assert set(out) == {2e-3, 1e-3}
    assert out[2e-3]["x0"] > 0.0
    assert out[2e-3]["y0"] == 0.0 and out[2e-3]["y1"] == 0.0
    with pytest.raises(ValueError):
        boundary_hitting_stats(P11, (0.0, 0.5), 1.0, 10, seed=0)


def test_fixation_quick():
    fs = fixation_stats(P11, (0.3, 0.7), 150.0, 2_000, seed=17,
                        settings=IntegratorSettings(horizon=150.0, dt=2e-3))
    assert fs.unfixed <= 10
    assert abs(fs.frac_11 - 0.5) <= 3 * fs.se_11() + 0.02
    with pytest.raises(ValueError):
        fixation_stats(ModelParams(c=1.0, K=1.0, u2=0.1), (0.3, 0.7), 1.0, 10)


def test_integrate_determinism():
    st = IntegratorSettings(horizon=1.0, dt=1e-3)
    lam = SwitchingMeasure.atom(0.5, 0.5)
    p = ModelParams(c=1.0, K=1.0, lambda_ad=lam)
    a = integrate(p, DiffusionState(0.4, 0.8), st, seed=18)
    b = integrate(p, DiffusionState(0.4, 0.8), st, seed=18)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y) and a.jumps == b.jumps
