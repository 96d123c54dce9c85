import numpy as np
import pytest

from dynspike import backends
from dynspike import systems as ds
from dynspike.backends import numpy_backend


def _both():
    impls = [("numpy", numpy_backend)]
    try:
        impls.append(("compiled", backends.get_backend("compiled")))
    except ImportError:
        pass
    return impls


HAS_COMPILED = len(_both()) == 2


def test_numpy_derivative_matches_reference():
    rng = np.random.default_rng(0)
    for sys in [ds.lorenz(), ds.chua(), ds.aizawa(), ds.mixed_oscillator(-0.5)]:
        S = rng.uniform(-2, 2, size=(50, 3))
        batch = numpy_backend._deriv(
            sys.system_id, np.asarray(sys.params, dtype=float), S
        )
        for i in range(50):
            assert np.allclose(batch[i], ds.derivative(sys, S[i]), atol=1e-14)


def test_numpy_jacobian_matches_reference():
    rng = np.random.default_rng(1)
    for sys in [ds.rossler(), ds.nose_hoover(), ds.sprott_c(), ds.chua()]:
        for s in rng.uniform(-2, 2, size=(20, 3)):
            J = numpy_backend._jac(sys.system_id, np.asarray(sys.params, dtype=float), s)
            assert np.allclose(J, ds.jacobian(sys, s), atol=1e-14)


@pytest.mark.skipif(not HAS_COMPILED, reason="compiled backend not built")
def test_traj_batch_backends_agree():
    nb = numpy_backend
    cb = backends.get_backend("compiled")
    rng = np.random.default_rng(2)
    for sys in [ds.lorenz(), ds.mixed_oscillator(2.0), ds.aizawa()]:
        p = np.asarray(sys.params, dtype=float)
        s0 = rng.uniform(-1, 1, size=(8, 3))
        a, ok_a = nb.traj_batch(sys.system_id, p, s0, 0.01, 160, 5, False, 1e12)
        b, ok_b = cb.traj_batch(sys.system_id, p, s0, 0.01, 160, 5, False, 1e12)
        assert np.array_equal(ok_a, ok_b)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@pytest.mark.skipif(not HAS_COMPILED, reason="compiled backend not built")
def test_lyap_core_backends_agree():
    nb = numpy_backend
    cb = backends.get_backend("compiled")
    sys = ds.lorenz()
    p = np.asarray(sys.params, dtype=float)
    s0 = np.array([1.0, 0.2, -1.0])
    ra = nb.lyap_core(sys.system_id, p, s0, 0.01, 3000, 5, 0, 1e-10, 1e12)
    rb = cb.lyap_core(sys.system_id, p, s0, 0.01, 3000, 5, 0, 1e-10, 1e12)
    assert ra[3] == rb[3] == 0
    assert ra[1] == rb[1] and ra[2] == rb[2]
    assert np.allclose(ra[0], rb[0], rtol=1e-8, atol=1e-10)


@pytest.mark.skipif(not HAS_COMPILED, reason="compiled backend not built")
def test_blowup_detection_agrees():
    nb = numpy_backend
    cb = backends.get_backend("compiled")
    sys = ds.mixed_oscillator(-1.5)
    p = np.asarray(sys.params, dtype=float)
    s0 = np.array([[1.0, 0.2, -1.0]])
    a, ok_a = nb.traj_batch(sys.system_id, p, s0, 0.01, 200, 10, False, 1e12)
    b, ok_b = cb.traj_batch(sys.system_id, p, s0, 0.01, 200, 10, False, 1e12)
    assert not ok_a[0] and not ok_b[0]
    _, steps_a = nb.integrate_states(sys.system_id, p, s0[0], 0.01, 2000, 1e12)
    _, steps_b = cb.integrate_states(sys.system_id, p, s0[0], 0.01, 2000, 1e12)
    assert steps_a == steps_b < 2000


def test_expm3_against_scipy():
    scipy_linalg = pytest.importorskip("scipy.linalg")
    rng = np.random.default_rng(3)
    for _ in range(20):
        M = rng.normal(0, 1.0, size=(3, 3))
        ours = numpy_backend.expm3(M, 1e-12)
        ref = scipy_linalg.expm(M)
        assert np.allclose(ours, ref, rtol=1e-9, atol=1e-10)


def test_backend_name_valid():
    assert backends.backend_name() in ("numpy", "compiled")
