import numpy as np
import pytest

from dynspike import systems as ds
from dynspike.infodyn import (
    acf,
    ais,
    mutual_info,
    mutual_info_shuffle_baseline,
)


def _traj_array(x):
    out = np.zeros((len(x), 3))
    out[:, 0] = x
    out[:, 1] = np.roll(x, 1)
    out[:, 2] = -x
    return out


def test_ais_iid_noise_near_shuffle_baseline():
    rng = np.random.default_rng(0)
    states = rng.random((5000, 3))
    res = ais(states)
    # independence: MI is pure estimator bias; compare against permutation
    base = []
    for axis in range(3):
        x = states[:, axis]
        perm = rng.permutation(len(x))
        base.append(ais(_traj_array(x[perm])).per_axis[0])
    assert res.mean <= np.mean(base) + 0.05


def test_ais_persistent_cycle_full_entropy():
    # deterministic cycle covering 8 bins uniformly: MI = H = 3 bits
    x = np.tile(np.arange(8, dtype=float), 1000)
    res = ais(_traj_array(x))
    assert res.per_axis[0] == pytest.approx(3.0, abs=0.05)


def test_ais_lorenz_attractor_value():
    # measured with the attractor probe convention (warm start, 16 bins)
    from dynspike.harness import probes

    res = probes.mode_ais(ds.lorenz(), warmup=10.0)
    assert res.mean == pytest.approx(2.64, abs=0.3)


def test_ais_degenerate_axis_flagged():
    states = np.zeros((200, 3))
    states[:, 0] = np.sin(np.linspace(0, 20, 200))
    res = ais(states)
    assert 1 in res.degenerate_axes and 2 in res.degenerate_axes
    assert res.per_axis[1] == 0.0


def test_ais_affine_invariance():
    rng = np.random.default_rng(1)
    x = np.cumsum(rng.normal(size=600))
    a = ais(_traj_array(x))
    b = ais(_traj_array(2.5 * x - 17.0))
    assert np.allclose(a.per_axis, b.per_axis, atol=1e-12)


def test_ais_bounded_by_log_bins():
    rng = np.random.default_rng(2)
    x = np.cumsum(rng.normal(size=2000))
    for bins in (4, 8, 16):
        res = ais(_traj_array(x), bins=bins)
        assert 0.0 <= res.per_axis.max() <= np.log2(bins) + 1e-9


def test_ais_length_floor():
    with pytest.raises(ValueError):
        ais(np.random.default_rng(0).random((40, 3)))


def test_acf_starts_at_one():
    rng = np.random.default_rng(3)
    x = rng.normal(size=500)
    res = acf(x, dt=0.1)
    assert res.acf[0] == pytest.approx(1.0, abs=1e-12)


def test_acf_white_noise_immediate_decay():
    rng = np.random.default_rng(4)
    res = acf(rng.normal(size=20000), dt=0.5)
    assert res.tau_corr < 0.5


def test_acf_ou_recovery():
    # single-realization crossing jitter is ~8-15%, so average a few
    # independent paths; the analytic ACF is exp(-lag/tau)
    from dynspike.meanfield import OUParams, ou_simulate

    tau = 2.0
    taus = []
    for seed in range(3):
        x = ou_simulate(
            OUParams(mu=0.0, sigma2=1.0, tau_corr=tau, h=0.05), 100000,
            rng=np.random.default_rng(seed),
        )
        taus.append(acf(x, dt=0.05, max_lag=400).tau_corr)
    assert np.mean(taus) == pytest.approx(tau, rel=0.10)


def test_acf_constant_series_error():
    with pytest.raises(ValueError):
        acf(np.ones(500), dt=0.1)


def test_acf_exceeds_window():
    x = np.linspace(0.0, 1.0, 200)  # ramp: stays correlated at short lags
    res = acf(x, dt=1.0, max_lag=5)
    assert res.exceeds_window and res.tau_corr == np.inf


def test_mode_tau_corr_values():
    from dynspike.harness import probes

    tau_diss, div_d = probes.mode_tau_corr(ds.mixed_oscillator(10.0))
    tau_trans, div_t = probes.mode_tau_corr(ds.mixed_oscillator(2.0))
    tau_exp, div_e = probes.mode_tau_corr(ds.mixed_oscillator(-1.5))
    assert not div_d and tau_diss == pytest.approx(2.59, rel=0.5)
    assert not div_t and tau_trans < tau_diss
    assert div_e and tau_exp == np.inf


def test_mutual_info_identity_uniform():
    rng = np.random.default_rng(6)
    x = rng.random(4000)
    mi = mutual_info(x, x, bins=20)
    assert mi == pytest.approx(np.log2(20), abs=0.15)


def test_mutual_info_independent_below_baseline():
    rng = np.random.default_rng(7)
    x = rng.random((2000, 3))
    y = rng.random((2000, 3))
    mi = mutual_info(x, y)
    base = mutual_info_shuffle_baseline(x, y, n_perm=5, rng=8)
    assert mi <= base + 0.05


def test_mutual_info_onehot_labels():
    rng = np.random.default_rng(9)
    y = rng.integers(0, 10, size=5000)
    x = np.eye(10)[y]
    assert mutual_info(x, y) == pytest.approx(np.log2(10), abs=0.02)


def test_mutual_info_symmetry():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(500, 2))
    y = x @ np.array([[1.0, 0.3], [0.2, 0.8]]) + 0.1 * rng.normal(size=(500, 2))
    assert mutual_info(x, y) == pytest.approx(mutual_info(y, x), abs=1e-9)


def test_mutual_info_pca_path_and_bounds():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(500, 40))
    y = rng.integers(0, 4, size=500)
    mi = mutual_info(x, y, bins=20, pca_dims=10)
    assert 0.0 <= mi <= np.log2(4) + 1e-9


def test_mutual_info_degenerate_covariance():
    x = np.zeros((300, 15))  # constant high-dim input: PCA skipped, binned raw
    y = np.arange(300) % 3
    assert mutual_info(x, y) == pytest.approx(0.0, abs=1e-12)


def test_mutual_info_needs_samples():
    with pytest.raises(ValueError):
        mutual_info(np.random.rand(50), np.random.rand(50))
