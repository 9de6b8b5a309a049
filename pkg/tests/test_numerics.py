import mpmath
import numpy as np
import pytest

from driftkit.errors import ConfigError, NumericError, ShapeError
from driftkit.numerics import (
    as_matrix,
    dropout_mask,
    ensure_finite,
    make_rng,
    matmul,
    relu,
    relu_grad,
    sigmoid,
)

mpmath.mp.dps = 50


def test_make_rng_reproducible():
    a = make_rng(123).random(5)
    b = make_rng(123).random(5)
    assert np.array_equal(a, b)
    c = make_rng(124).random(5)
    assert not np.array_equal(a, c)


def test_sigmoid_against_high_precision():
    zs = [-700.0, -30.0, -5.0, -1e-8, 0.0, 1e-8, 0.5, 5.0, 30.0, 700.0]
    for z in zs:
        want = float(1 / (1 + mpmath.e ** (-mpmath.mpf(z))))
        got = sigmoid(z)
        assert got == pytest.approx(want, rel=1e-15, abs=1e-300), z


def test_sigmoid_array_matches_scalar():
    z = np.linspace(-40, 40, 17)
    arr = sigmoid(z)
    assert arr.shape == z.shape
    for i, zi in enumerate(z):
        assert arr[i] == sigmoid(float(zi))


def test_sigmoid_saturates_without_overflow():
    z = np.array([-1e8, 1e8])
    p = sigmoid(z)
    assert p[0] == 0.0 and p[1] == 1.0
    assert np.all(np.isfinite(p))


def test_sigmoid_preserves_shape():
    z = np.zeros((3, 5))
    assert sigmoid(z).shape == (3, 5)


def test_relu_and_grad():
    x = np.array([[-2.0, -0.0, 0.0, 3.5]])
    assert np.array_equal(relu(x), [[0.0, 0.0, 0.0, 3.5]])
    # the kink at exactly zero takes gradient 0
    assert np.array_equal(relu_grad(x), [[0.0, 0.0, 0.0, 1.0]])


def test_matmul_matches_numpy_and_checks_shapes():
    rng = make_rng(0)
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((4, 2))
    assert np.array_equal(matmul(a, b), a @ b)
    with pytest.raises(ShapeError):
        matmul(a, a)
    with pytest.raises(ShapeError):
        matmul(a, rng.standard_normal(4))


def test_as_matrix():
    m = as_matrix([[1, 2], [3, 4]], rows=2, cols=2)
    assert m.dtype == np.float64 and m.shape == (2, 2)
    with pytest.raises(ShapeError):
        as_matrix([1, 2, 3])
    with pytest.raises(ShapeError):
        as_matrix([[1, 2]], rows=2)


def test_dropout_mask_values_and_rate():
    rng = make_rng(7)
    mask = dropout_mask((200, 50), 0.3, rng)
    kept = mask > 0
    assert set(np.unique(mask)) <= {0.0, 1.0 / 0.7}
    # empirical keep rate close to 1 - rate
    assert abs(kept.mean() - 0.7) < 0.02
    # inverted scaling keeps the mask mean near 1
    assert abs(mask.mean() - 1.0) < 0.05


def test_dropout_mask_rate_zero_is_identity_and_skips_rng():
    rng = make_rng(3)
    before = rng.bit_generator.state
    mask = dropout_mask((4, 4), 0.0, rng)
    assert np.array_equal(mask, np.ones((4, 4)))
    assert rng.bit_generator.state == before


def test_dropout_mask_rejects_bad_rate():
    with pytest.raises(ConfigError):
        dropout_mask((2, 2), 1.0, make_rng(0))
    with pytest.raises(ConfigError):
        dropout_mask((2, 2), -0.1, make_rng(0))


def test_ensure_finite():
    ensure_finite(np.array([1.0, 2.0]), "ok")
    with pytest.raises(NumericError, match="logits"):
        ensure_finite(np.array([1.0, np.nan]), "logits")
    with pytest.raises(NumericError):
        ensure_finite(np.array([np.inf]), "x")
