import numpy as np
import pytest

from dynspike import systems as ds
from dynspike.encoders import (
    EncoderSpec,
    batch_encode,
    batch_encode_cached,
    cache_key,
    encode,
    load_cache,
    save_cache,
)
from dynspike.systems import EncodingConfig


def dyn_spec(delta=2.0, **kw):
    return EncoderSpec(
        "dynamical", system=ds.mixed_oscillator(delta), config=EncodingConfig(**kw)
    )


def test_rate_zero_feature_never_spikes():
    out = encode(EncoderSpec("rate", T=50), np.zeros(4), rng=0)
    assert out.kind == "binary_spikes"
    assert np.all(out.values == 0.0)


def test_rate_frequency_matches_feature():
    # empirical frequency within 3 binomial sigmas over 10^4 steps
    T = 10_000
    feats = np.array([0.2, 0.5, 0.9])
    out = encode(EncoderSpec("rate", T=T), feats, rng=1)
    freq = out.values.mean(axis=0)
    sigma = np.sqrt(feats * (1 - feats) / T)
    assert np.all(np.abs(freq - feats) <= 3 * sigma)


def test_latency_single_spike_and_monotone():
    T = 8
    feats = np.linspace(0, 1, 9)
    out = encode(EncoderSpec("latency", T=T), feats, rng=0)
    assert np.all(out.values.sum(axis=0) == 1.0)
    steps = np.argmax(out.values, axis=0)
    assert steps[-1] == 0  # max feature spikes first
    assert np.all(np.diff(steps) <= 0)


def test_phase_rule_direct_evaluation():
    out = encode(EncoderSpec("phase", T=4), np.array([0.25]), rng=0)
    assert out.values[0, 0] == 1.0  # sin(pi/2) >= 0
    t = np.arange(4)
    expected = (np.sin(0.25 * 2 * np.pi - t) >= 0).astype(float)
    assert np.array_equal(out.values[:, 0], expected)


def test_ttfs_hand_simulated():
    out = encode(EncoderSpec("ttfs", T=6), np.array([0.25]), rng=0)
    assert np.array_equal(out.values[:, 0], [1, 1, 0, 0, 0, 0])


def test_ttfs_count_floor_and_monotone():
    T = 12
    feats = np.linspace(0.0, 1.0, 41)
    out = encode(EncoderSpec("ttfs", T=T), feats, rng=0)
    counts = out.values.sum(axis=0)
    expected = np.minimum(np.floor(feats / 0.1 + 1e-9), T)
    assert np.array_equal(counts, expected)
    assert np.all(np.diff(counts) >= 0)


def test_delta_adjacent_differences():
    out = encode(EncoderSpec("delta", T=3, threshold=0.1), np.array([0.05, 0.3, 0.31]), rng=0)
    # diffs vs previous entry (first vs 0): [0.05, 0.25, 0.01] -> spike only at 1
    assert np.array_equal(out.values[0], [0, 1, 0])
    assert np.array_equal(out.values[0], out.values[-1])


def test_burst_threshold_decay():
    out = encode(EncoderSpec("burst", T=4, threshold=0.5, decay=0.95), np.array([0.52]), rng=0)
    # th: 0.5 (fire), 0.475 (fire), 0.451 (fire), 0.429 (fire)
    assert np.all(out.values == 1.0)
    out = encode(EncoderSpec("burst", T=3, threshold=0.5), np.array([0.3]), rng=0)
    assert np.all(out.values == 0.0)


def test_default_replicates_current():
    feats = np.array([0.2, -1.5, 3.0])
    out = encode(EncoderSpec("default", T=5), feats, rng=0)
    assert out.kind == "analog_current"
    assert np.all(out.values == feats)


def test_dynamical_shape_and_zero_fixed_point():
    spec = dyn_spec()
    out = encode(spec, np.zeros(7), rng=0)
    assert out.values.shape == (5, 21)
    assert np.all(out.values == 0.0)
    assert out.kind == "analog_current"


def test_dynamical_output_width_always_3d():
    for d in (1, 4, 9):
        out = encode(dyn_spec(), np.linspace(0.1, 0.9, d), rng=0)
        assert out.values.shape == (5, 3 * d)


def test_normalized_variants_reject_out_of_range():
    for variant in ("rate", "latency", "phase", "ttfs"):
        with pytest.raises(ValueError):
            encode(EncoderSpec(variant), np.array([1.2]), rng=0)
        with pytest.raises(ValueError):
            encode(EncoderSpec(variant), np.array([-0.1]), rng=0)


def test_batch_encode_empty():
    out = batch_encode(dyn_spec(), np.zeros((0, 7)))
    assert out.shape == (0, 5, 21)


def test_batch_encode_deterministic_bytes():
    rng = np.random.default_rng(0)
    X = rng.random((20, 5))
    a = batch_encode(EncoderSpec("rate", T=7), X, seed=3)
    b = batch_encode(EncoderSpec("rate", T=7), X, seed=3)
    assert a.tobytes() == b.tobytes()
    c = batch_encode(EncoderSpec("rate", T=7), X, seed=4)
    assert a.tobytes() != c.tobytes()


def test_batch_encode_expansive_guard_holds_at_horizon():
    rng = np.random.default_rng(1)
    X = rng.random((100, 7))
    out = batch_encode(dyn_spec(-1.5), X)
    assert np.all(np.isfinite(out))


def test_batch_encode_row_error_reports_index():
    X = np.array([[0.5], [1.5]])
    with pytest.raises(ValueError, match="row 1"):
        batch_encode(EncoderSpec("rate", T=3), X, seed=0)


def test_batch_matches_single_encode():
    rng = np.random.default_rng(2)
    X = rng.random((6, 3))
    batch = batch_encode(dyn_spec(5.0), X)
    for i in range(6):
        single = encode(dyn_spec(5.0), X[i])
        assert np.allclose(batch[i], single.values, atol=1e-12)


def test_cache_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    X = rng.random((10, 4))
    spec = dyn_spec(1.0)
    key = cache_key(spec, X, 0)
    path = tmp_path / "enc.npz"
    values = batch_encode(spec, X)
    save_cache(path, values, 0, key)
    loaded, header = load_cache(path)
    assert np.array_equal(loaded, values)
    assert header["spec_hash"] == key and header["dtype"] == "f64"
    assert header["shape"] == list(values.shape)


def test_batch_encode_cached_hits(tmp_path):
    rng = np.random.default_rng(4)
    X = rng.random((8, 3))
    spec = dyn_spec(2.0)
    a = batch_encode_cached(spec, X, cache_dir=tmp_path)
    files = list(tmp_path.glob("enc_*.npz"))
    assert len(files) == 1
    b = batch_encode_cached(spec, X, cache_dir=tmp_path)
    assert np.array_equal(a, b)
    assert len(list(tmp_path.glob("enc_*.npz"))) == 1


def test_spec_validation():
    with pytest.raises(ValueError):
        EncoderSpec("nope")
    with pytest.raises(ValueError):
        EncoderSpec("dynamical")  # missing system
    with pytest.raises(ValueError):
        EncoderSpec("rate", threshold=0.0)
    with pytest.raises(ValueError):
        EncoderSpec("burst", decay=1.0)
