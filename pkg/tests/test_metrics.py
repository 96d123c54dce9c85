import numpy as np
import pytest

from dynspike import metrics, snn


def _trace_from_spikes(spike_layers, kind="lif"):
    return snn.ForwardTrace(
        spikes=[np.asarray(s, dtype=float) for s in spike_layers],
        v_pre=[np.asarray(s, dtype=float) for s in spike_layers],
        seq=np.zeros((spike_layers[0].shape[1], spike_layers[0].shape[0], 1)),
        logits=np.asarray(spike_layers[-1], dtype=float),
        kind=kind,
    )


def test_firing_rate_extremes():
    ones = np.ones((4, 2, 5))
    zeros = np.zeros((4, 2, 5))
    trace = _trace_from_spikes([ones, zeros])
    assert metrics.firing_rate(trace) == [1.0, 0.0]


def test_synchrony_cv_constant_zero():
    s = np.ones((6, 3, 4))
    trace = _trace_from_spikes([s])
    assert metrics.synchrony_cv(trace)[0] == pytest.approx(0.0)


def test_synchrony_cv_alternating_is_one():
    s = np.zeros((4, 1, 6))
    s[1::2, 0, :] = 1.0  # population rate alternates 0, 1
    trace = _trace_from_spikes([s])
    assert metrics.synchrony_cv(trace)[0] == pytest.approx(1.0)


def test_synchrony_silent_layer_flagged_nan():
    trace = _trace_from_spikes([np.zeros((4, 2, 3))])
    assert np.isnan(metrics.synchrony_cv(trace)[0])


def test_pairwise_correlation_duplicated_trains():
    rng = np.random.default_rng(0)
    base = (rng.random((8, 1, 1)) > 0.5).astype(float)
    layer = np.repeat(base, 4, axis=2)
    trace = _trace_from_spikes([layer])
    assert metrics.pairwise_correlation(trace)[0] == pytest.approx(1.0)


def test_pairwise_correlation_independent_near_zero():
    rng = np.random.default_rng(1)
    layer = (rng.random((10_000, 1, 12)) > 0.5).astype(float)
    trace = _trace_from_spikes([layer])
    assert metrics.pairwise_correlation(trace)[0] <= 0.03


def test_rate_cv_examples():
    assert metrics.rate_cv(np.full(10, 3.3)) == pytest.approx(0.0)
    x = np.array([-1.0, 3.0])  # mean 1, std 2
    assert metrics.rate_cv(x) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        metrics.rate_cv([1.0])


def _trained_toy(seed=0):
    from dynspike import tasks

    data = tasks.gen_blobs(300, d=5, n_classes=3, spread=0.06, rng=seed)
    tr, te = data.split(0.25, rng=1)
    X = np.repeat(tr.features[:, None, :] * 3.0, 4, axis=1)
    Xte = np.repeat(te.features[:, None, :] * 3.0, 4, axis=1)
    model = snn.build_network([5, 24, 24, 24, 3], "lif", T=4, seed=seed)
    snn.train(model, (X, tr.labels), (Xte, te.labels),
              snn.TrainConfig(lr=2e-3, max_epochs=25, patience=25, seed=seed))
    return model, Xte, te.labels


def test_deletion_p0_exact_and_no_rng():
    model, Xte, yte = _trained_toy()
    clean, _ = snn.evaluate(model, Xte, yte)
    out = metrics.deletion_robustness(model, Xte, yte, [0.0], reps=3, seed=1)
    out2 = metrics.deletion_robustness(model, Xte, yte, [0.0], reps=3, seed=999)
    assert out[0.0] == clean == out2[0.0]


def test_deletion_monotone_information_removal():
    model, Xte, yte = _trained_toy()
    out = metrics.deletion_robustness(model, Xte, yte, [0.0, 0.8], reps=5, seed=0)
    assert out[0.8] <= out[0.0]


def test_deletion_rejects_out_of_range():
    model, Xte, yte = _trained_toy()
    with pytest.raises(ValueError):
        metrics.deletion_robustness(model, Xte, yte, [0.9])


def test_jacobi_matches_numpy_eigh():
    rng = np.random.default_rng(2)
    for n in (3, 10, 40):
        A = rng.normal(size=(n, n))
        A = (A + A.T) / 2
        vals, vecs = metrics.jacobi_eigh(A)
        ref = np.linalg.eigvalsh(A)[::-1]
        assert np.allclose(vals, ref, atol=1e-8)
        assert np.allclose(vecs @ np.diag(vals) @ vecs.T, A, atol=1e-8)


def test_effective_dim_rank_one():
    rng = np.random.default_rng(3)
    u = rng.normal(size=10)
    X = np.outer(rng.normal(size=50), u)
    assert metrics.effective_dim(X) == 1


def test_effective_dim_isotropic():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(10_000, 20))
    assert metrics.effective_dim(X) >= 19


def test_effective_dim_caps_at_rank():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(4, 50))  # rank <= 3 after centering
    assert metrics.effective_dim(X) <= 3


def test_linear_probe_separated_clusters():
    rng = np.random.default_rng(6)
    y = rng.integers(0, 2, size=400)
    X = (y * 10.0 + rng.normal(0, 0.1, size=400))[:, None]
    res = metrics.linear_probe(X, y)
    assert res.accuracy == 1.0


def test_linear_probe_shuffled_labels_chance():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(600, 8))
    y = rng.integers(0, 3, size=600)
    res = metrics.linear_probe(X, y, seed=0)
    n_test = res.n_test
    sigma = np.sqrt((1 / 3) * (2 / 3) / n_test)
    assert abs(res.accuracy - 1 / 3) <= 3 * sigma + 0.05


def test_linear_probe_single_class_rejected():
    with pytest.raises(ValueError):
        metrics.linear_probe(np.random.rand(50, 3), np.zeros(50, int))


def test_probe_train_not_worse_than_heldout_in_expectation():
    # sanity over 10 seeds, allow 2 violations
    rng = np.random.default_rng(8)
    violations = 0
    gaps = []
    for seed in range(10):
        y = rng.integers(0, 2, size=1500)
        X = y[:, None] * 1.0 + rng.normal(0, 1.25, size=(1500, 4))
        res = metrics.linear_probe(X, y, seed=seed)
        gaps.append(res.train_accuracy - res.accuracy)
        if res.train_accuracy + 0.02 < res.accuracy:
            violations += 1
    assert violations <= 2
    assert np.mean(gaps) >= -0.005


def test_ib_plane_structure():
    from dynspike import infodyn

    rng = np.random.default_rng(9)
    y = rng.integers(0, 3, size=400)
    x_in = np.eye(3)[y] + 0.01 * rng.normal(size=(400, 3))
    random_layer = rng.normal(size=(400, 4))
    plane = metrics.ib_plane([x_in.copy(), random_layer], x_in, y)
    assert len(plane) == 2
    # the identity layer carries more input info than the random layer
    assert plane[0][0] > plane[1][0]
    # the random layer's label MI is pure plug-in bias: permutation oracle
    base = infodyn.mutual_info_shuffle_baseline(random_layer, y, n_perm=5, rng=10)
    assert plane[1][1] <= base + 0.05


def test_activity_stats_shapes():
    model, Xte, yte = _trained_toy()
    stats = metrics.activity_stats(model, Xte[:32])
    L = model.n_layers
    for field in (stats.firing_rate, stats.synchrony_cv, stats.pairwise_corr,
                  stats.rate_cv, stats.mean_current, stats.std_current):
        assert len(field) == L
    assert all(0.0 <= r <= 1.0 for r in stats.firing_rate)
