"""Cross-backend agreement: the jitted kernels must compute the same
arithmetic as their numpy twins."""

import os
import subprocess
import sys

import numpy as np
import pytest

from driftkit import kernels


def batches(n_batches=200, max_n=64, zmax=12.0, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n_batches):
        n = int(rng.integers(1, max_n + 1))
        z = rng.uniform(-zmax, zmax, size=n)
        y = (rng.random(n) < rng.random()).astype(np.float64)
        a1 = float(rng.uniform(0.05, 25.0))
        a0 = float(rng.uniform(0.05, 25.0))
        lam = float(rng.choice([0.0, 0.001, 0.01, 0.1, 0.5]))
        yield z, y, a1, a0, lam


def test_sigmoid_backends_agree_within_ulps():
    # numpy's vectorized exp and libm's exp may round the last bit
    # differently, so agreement is within a couple of ulp, not bitwise
    rng = np.random.default_rng(1)
    z = np.concatenate([rng.uniform(-40, 40, 5000), [-750.0, 750.0, 0.0]])
    a = kernels.sigmoid_np(z)
    b = kernels.sigmoid_nb(z)
    ulps = np.abs(a - b) / np.spacing(np.maximum(np.abs(a), np.abs(b)))
    assert ulps.max() <= 4.0


def test_loss_grad_backends_agree():
    for z, y, a1, a0, lam in batches():
        g_np = kernels.loss_grad_np(z, y, a1, a0, lam)
        g_nb = kernels.loss_grad_nb(z, y, a1, a0, lam)
        np.testing.assert_allclose(g_np, g_nb, rtol=1e-12, atol=1e-300)


def test_loss_forward_backends_agree():
    # numpy sums pairwise, the jit loop serially: equal to ~1e-15 relative
    for z, y, a1, a0, lam in batches():
        f_np = kernels.loss_forward_np(z, y, a1, a0, lam)
        f_nb = kernels.loss_forward_nb(z, y, a1, a0, lam)
        assert f_np == pytest.approx(f_nb, rel=1e-12)


def test_adamw_backends_bit_identical():
    rng = np.random.default_rng(2)
    n = 257
    p1 = rng.standard_normal(n)
    p2 = p1.copy()
    m1 = np.zeros(n)
    m2 = np.zeros(n)
    v1 = np.zeros(n)
    v2 = np.zeros(n)
    for t in range(1, 20):
        g = rng.standard_normal(n)
        wd = 0.0 if t % 3 == 0 else 1e-2
        c1 = 1.0 - 0.9**t
        c2 = 1.0 - 0.999**t
        kernels.adamw_update_np(p1, g, m1, v1, c1, c2, 1e-3, 0.9, 0.999, 1e-8, wd)
        kernels.adamw_update_nb(p2, g, m2, v2, c1, c2, 1e-3, 0.9, 0.999, 1e-8, wd)
        assert np.array_equal(p1, p2) and np.array_equal(m1, m2) and np.array_equal(v1, v2)


def test_loss_forward_extreme_logits_finite():
    z = np.array([-1e300, -1e6, 1e6, 1e300])
    y = np.array([1.0, 0.0, 1.0, 0.0])
    for fn in (kernels.loss_forward_np, kernels.loss_forward_nb):
        assert np.isfinite(fn(z, y, 1.0, 1.0, 0.0))


def _backend_in_subprocess(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("DRIFTKIT_NUMBA", None)
    else:
        env["DRIFTKIT_NUMBA"] = env_value
    out = subprocess.run(
        [sys.executable, "-c", "from driftkit import kernels; print(kernels.backend())"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    return out.stdout.strip()


def test_env_flag_forces_numpy_backend():
    assert _backend_in_subprocess("0") == "numpy"


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")
def test_default_backend_is_numba_when_available():
    assert _backend_in_subprocess(None) == "numba"
    assert _backend_in_subprocess("1") == "numba"


def test_dispatch_matches_flag():
    expected = kernels.sigmoid_nb if kernels.USE_NUMBA else kernels.sigmoid_np
    assert kernels.sigmoid is expected
