import math

import numpy as np
import pytest

from dynspike.statfit import (
    betainc_reg,
    mann_whitney_u,
    pearson,
    powerlaw_fit,
    sigmoid_curve,
    sigmoid_fit,
    student_t_sf2,
)


def test_pearson_perfect_lines():
    x = np.linspace(0, 5, 20)
    r, p = pearson(x, x)
    assert r == 1.0 and p == 0.0
    r, p = pearson(x, -x)
    assert r == -1.0 and p == 0.0


def test_pearson_affine_invariance():
    rng = np.random.default_rng(0)
    x = rng.normal(size=30)
    for a, b in ((2.0, 1.0), (0.003, -40.0), (1e6, 7.0)):
        r, _ = pearson(x, a * x + b)
        assert r == pytest.approx(1.0, abs=1e-12)


def test_pearson_r088_n6_significant():
    # construct n=6 data with r ~= 0.88: the paper-level significance call
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    y = np.array([1.1, 1.6, 3.4, 3.6, 4.2, 6.8])
    r, p = pearson(x, y)
    assert r == pytest.approx(0.95, abs=0.08)
    # exact r=0.88 at n=6: t = r sqrt(4/(1-r^2)) -> p < 0.05
    t = 0.88 * math.sqrt(4 / (1 - 0.88**2))
    assert student_t_sf2(t, 4) < 0.05


def test_pearson_p_matches_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(1)
    for n in (5, 12, 40):
        x = rng.normal(size=n)
        y = x + rng.normal(scale=1.5, size=n)
        r, p = pearson(x, y)
        ref = scipy_stats.pearsonr(x, y)
        assert r == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-8)


def test_pearson_rejects_constant():
    with pytest.raises(ValueError):
        pearson(np.ones(5), np.arange(5))


def test_betainc_against_scipy():
    scipy_special = pytest.importorskip("scipy.special")
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, b = rng.uniform(0.5, 20, size=2)
        x = rng.uniform(0.001, 0.999)
        assert betainc_reg(a, b, x) == pytest.approx(
            scipy_special.betainc(a, b, x), rel=1e-9, abs=1e-12
        )


def test_powerlaw_exact_recovery():
    # the metric here is already a delta, so no baseline subtraction
    x = np.linspace(0.1, 5.0, 30)
    y = 2.0 * np.abs(x) ** 0.42
    fit = powerlaw_fit(x, y, lambda_c=0.0, baseline="none")["expansive"]
    assert fit.params["beta"] == pytest.approx(0.42, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_powerlaw_nearest_baseline_drops_reference_point():
    x = np.linspace(0.1, 5.0, 20)
    y = 7.0 + 2.0 * np.abs(x) ** 0.5
    fit = powerlaw_fit(x, y)["expansive"]  # nearest baseline by default
    assert fit.n_dropped >= 1  # the baseline point itself has delta 0
    assert fit.params["beta"] > 0


def test_powerlaw_scale_invariance_of_slope():
    x = np.linspace(0.1, 5.0, 30)
    y = np.abs(x) ** 0.7
    b1 = powerlaw_fit(x, y)["expansive"].params["beta"]
    b2 = powerlaw_fit(x, 100.0 * y)["expansive"].params["beta"]
    assert b1 == pytest.approx(b2, abs=1e-9)


def test_powerlaw_two_sides_fit_separately():
    x = np.concatenate([np.linspace(-4, -0.5, 10), np.linspace(0.5, 4, 10)])
    y = np.where(x > 0, np.abs(x) ** 0.3, np.abs(x) ** 0.8)
    fits = powerlaw_fit(x, y)
    assert set(fits) == {"expansive", "dissipative"}


def test_powerlaw_noise_not_significant():
    # permutation-oracle calibration: on pure noise the slope p-value is
    # approximately uniform, so false positives at 0.05 stay near 5%
    rng = np.random.default_rng(3)
    x = np.linspace(0.2, 5.0, 12)
    hits = 0
    trials = 200
    for _ in range(trials):
        y = 1.0 + 0.1 * rng.normal(size=len(x))
        fit = powerlaw_fit(x, np.abs(y))["expansive"]
        if fit.p_value < 0.05:
            hits += 1
    assert hits / trials < 0.15


def test_powerlaw_planted_generator_recovery():
    rng = np.random.default_rng(4)
    x = np.geomspace(0.05, 20.0, 24)
    betas = []
    for seed in range(5):
        noise = 1.0 + 0.05 * np.random.default_rng(seed).normal(size=len(x))
        y = 3.0 * x**0.27 * noise
        betas.append(powerlaw_fit(x, y, baseline="none")["expansive"].params["beta"])
    assert 0.22 <= np.mean(betas) <= 0.32


def test_powerlaw_drops_nonpositive_deltas():
    x = np.array([0.1, 0.5, 1.0, 2.0, 3.0])
    y = np.array([1.0, 1.0, 2.0, 3.0, 4.0])  # first two identical -> delta 0
    fit = powerlaw_fit(x, y)["expansive"]
    assert fit.n_dropped >= 1


def test_powerlaw_rejects_points_on_critical_value():
    with pytest.raises(ValueError):
        powerlaw_fit([0.0, 1.0, 2.0], [1.0, 2.0, 3.0])


def test_sigmoid_exact_recovery():
    x = np.linspace(-6, 6, 40)
    y = sigmoid_curve(x, L=2.5, k=1.3, x0=0.7, b=-0.4)
    fit = sigmoid_fit(x, y)
    assert fit.converged
    assert fit.r_squared == pytest.approx(1.0, abs=1e-9)
    for name, want in (("L", 2.5), ("k", 1.3), ("x0", 0.7), ("b", -0.4)):
        assert fit.params[name] == pytest.approx(want, abs=1e-6)


def test_sigmoid_linear_data_no_crash():
    x = np.linspace(0, 10, 25)
    fit = sigmoid_fit(x, 3.0 * x + 1.0)
    assert 0.0 <= fit.r_squared <= 1.0


def test_sigmoid_step_profile_high_r2():
    lam = np.array([3.0, 1.2, 0.0, -1.2, -4.0, -10.0, -20.0])
    spk = np.array([211000.0, 155000.0, 11000.0, 200.0, 100.0, 80.0, 60.0])
    fit = sigmoid_fit(lam, spk)
    assert fit.r_squared > 0.9


def test_sigmoid_needs_five_points():
    with pytest.raises(ValueError):
        sigmoid_fit([1, 2, 3, 4], [1, 2, 3, 4])


def test_mann_whitney_identical_samples():
    a = np.arange(10.0)
    u, p = mann_whitney_u(a, a.copy())
    assert p > 0.9


def test_mann_whitney_fully_separated():
    a = np.arange(10.0)
    b = a + 100.0
    u, p = mann_whitney_u(a, b)
    assert u == 0.0
    assert p < 0.001


def test_mann_whitney_matches_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = rng.normal(size=12)
        b = rng.normal(loc=0.5, size=15)
        u, p = mann_whitney_u(a, b)
        ref = scipy_stats.mannwhitneyu(
            a, b, alternative="two-sided", method="asymptotic"
        )
        assert u == ref.statistic
        assert p == pytest.approx(ref.pvalue, rel=1e-6)


def test_mann_whitney_null_p_uniformish():
    # permutation oracle: under H0 the p-values should not pile up low
    rng = np.random.default_rng(6)
    ps = []
    for _ in range(500):
        pool = rng.normal(size=20)
        u, p = mann_whitney_u(pool[:10], pool[10:])
        ps.append(p)
    ps = np.array(ps)
    assert abs((ps < 0.5).mean() - 0.5) < 0.08
    assert (ps < 0.05).mean() < 0.10


def test_mann_whitney_sample_size_floor():
    with pytest.raises(ValueError):
        mann_whitney_u([1, 2], [1, 2, 3])


def test_bootstrap_mean_interval():
    from dynspike.statfit import bootstrap_mean

    rng = np.random.default_rng(8)
    vals = rng.normal(5.0, 1.0, size=200)
    lo, hi = bootstrap_mean(vals, n_boot=500, seed=0)
    assert lo < 5.0 < hi
    assert hi - lo < 0.6
    with pytest.raises(ValueError):
        bootstrap_mean([1.0])
