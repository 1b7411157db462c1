import math

import numpy as np
import pytest

from pricegrid.errors import ConfigError
from pricegrid.svm import GramPool, KernelSpec, kernel_eval, kernel_matrix


def test_rbf_zero_distance_is_one():
    x = np.array([1.0, -2.0, 0.5])
    assert kernel_eval(KernelSpec("rbf", gamma=0.7), x, x.copy()) == pytest.approx(1.0)


def test_rbf_known_value():
    # gamma = 0.01 and squared distance 100 -> exp(-1)
    x = np.zeros(1)
    z = np.array([10.0])
    k = kernel_eval(KernelSpec("rbf", gamma=0.01), x, z)
    assert k == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_linear_orthogonal_vectors():
    assert kernel_eval(KernelSpec("linear"), np.array([1.0, 0.0]), np.array([0.0, 3.0])) == 0.0


def test_poly_and_sigmoid_formulas():
    x = np.array([1.0, 2.0])
    z = np.array([0.5, -1.0])
    dot = 1.0 * 0.5 + 2.0 * -1.0
    poly = kernel_eval(KernelSpec("poly", gamma=0.5, degree=3, coef0=1.0), x, z)
    assert poly == pytest.approx((0.5 * dot + 1.0) ** 3)
    sig = kernel_eval(KernelSpec("sigmoid", gamma=0.2, coef0=-0.3), x, z)
    assert sig == pytest.approx(math.tanh(0.2 * dot - 0.3))


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        kernel_eval(KernelSpec("linear"), np.ones(2), np.ones(3))
    with pytest.raises(ValueError):
        kernel_matrix(KernelSpec("linear"), np.ones((2, 2)), np.ones((2, 3)))


def test_gamma_required_and_positive():
    with pytest.raises(ConfigError):
        KernelSpec("rbf")
    with pytest.raises(ConfigError):
        KernelSpec("rbf", gamma=-1.0)
    with pytest.raises(ConfigError):
        KernelSpec("warp")


def test_symmetry_property():
    rng = np.random.default_rng(0)
    specs = [
        KernelSpec("rbf", gamma=0.3),
        KernelSpec("linear"),
        KernelSpec("poly", gamma=0.5, degree=2, coef0=1.0),
        KernelSpec("sigmoid", gamma=0.1, coef0=0.2),
    ]
    for _ in range(25):
        x = rng.normal(size=6)
        z = rng.normal(size=6)
        for spec in specs:
            assert abs(kernel_eval(spec, x, z) - kernel_eval(spec, z, x)) <= 1e-12


def test_matrix_agrees_with_elementwise_eval():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(5, 4))
    B = rng.normal(size=(3, 4))
    for spec in (KernelSpec("rbf", gamma=0.2), KernelSpec("linear"),
                 KernelSpec("poly", gamma=0.3, degree=2, coef0=0.5)):
        K = kernel_matrix(spec, A, B)
        for i in range(5):
            for j in range(3):
                assert K[i, j] == pytest.approx(kernel_eval(spec, A[i], B[j]), abs=1e-9)


def test_pool_matrix_exactly_symmetric_and_cached():
    rng = np.random.default_rng(2)
    pool = GramPool(rng.normal(size=(40, 7)))
    spec = KernelSpec("rbf", gamma=0.4)
    K1 = pool.kernel(spec)
    assert np.array_equal(K1, K1.T)
    assert pool.kernel(KernelSpec("rbf", gamma=0.4)) is K1  # cache hit
    K2 = pool.kernel(KernelSpec("rbf", gamma=0.8))
    assert K2 is not K1


def test_pool_block_matches_direct_slice():
    rng = np.random.default_rng(3)
    pool = GramPool(rng.normal(size=(30, 5)))
    spec = KernelSpec("linear")
    K = pool.kernel(spec)
    rows = np.array([2, 5, 11, 17], dtype=np.int64)
    cols = np.array([0, 3, 29], dtype=np.int64)
    assert np.array_equal(pool.block(spec, rows, cols), K[np.ix_(rows, cols)])
    assert np.array_equal(pool.submatrix(spec, rows), K[np.ix_(rows, rows)])
