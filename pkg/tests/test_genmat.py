import numpy as np
import pytest

from qrpivot.genmat import KahanParams, kahan, random_gaussian, symmetrized_kahan


def test_params_validation():
    with pytest.raises(ValueError):
        KahanParams(0, 0.5)
    with pytest.raises(ValueError):
        KahanParams(5, -0.1)
    with pytest.raises(ValueError):
        KahanParams(5, 1.5)
    with pytest.raises(ValueError):
        KahanParams(5, 1.0)  # s = 0 only representable at order 1
    with pytest.raises(ValueError):
        kahan(KahanParams(5, 0.5, precision="half"))


def test_c_zero_gives_identity():
    assert np.array_equal(kahan(KahanParams(4, 0.0)), np.eye(4))


def test_s_complements_c():
    p = KahanParams(3, 0.6)
    assert p.s == pytest.approx(0.8, rel=1e-15)


def test_kahan_order_one():
    assert np.array_equal(kahan(KahanParams(1, 0.3)), np.array([[1.0]]))


def test_kahan_order_two():
    k = kahan(KahanParams(2, 0.6))
    s = KahanParams(2, 0.6).s
    assert k[0, 0] == 1.0
    assert k[0, 1] == -0.6
    assert k[1, 0] == 0.0
    assert k[1, 1] == np.float64(s)


def test_kahan_diagonal_powers():
    p = KahanParams(3, 0.6)
    k = kahan(p)
    s = np.float64(p.s)
    assert k[0, 0] == 1.0
    assert k[1, 1] == s
    assert k[2, 2] == pytest.approx(s * s, rel=2 * np.finfo(np.float64).eps)


def test_kahan_strictly_lower_zero():
    k = kahan(KahanParams(40, 0.37))
    assert np.all(np.tril(k, -1) == 0)


def test_kahan_unit_columns():
    # Each column has exact unit norm in exact arithmetic (c^2 + s^2 = 1).
    k = kahan(KahanParams(60, 0.45))
    norms = np.linalg.norm(k, axis=0)
    assert np.allclose(norms, 1.0, rtol=0, atol=60 * np.finfo(np.float64).eps)


def test_kahan_single_precision_dtype():
    k = kahan(KahanParams(8, 0.5, precision="single"))
    assert k.dtype == np.float32


def test_symmetrized_order_one():
    assert np.array_equal(symmetrized_kahan(KahanParams(1, 0.3)),
                          np.array([[2.0]]))


def test_symmetrized_order_two():
    m = symmetrized_kahan(KahanParams(2, 0.6))
    k = kahan(KahanParams(2, 0.6))
    assert np.array_equal(m, k + k.T)
    assert m[0, 0] == 2.0
    assert m[0, 1] == -0.6
    assert m[1, 0] == -0.6


def test_symmetrized_is_symmetric():
    m = symmetrized_kahan(KahanParams(33, 0.7))
    assert np.array_equal(m, m.T)


def test_random_deterministic():
    a = random_gaussian(9, 7, field="complex", seed=42)
    b = random_gaussian(9, 7, field="complex", seed=42)
    assert np.array_equal(a, b)
    c = random_gaussian(9, 7, field="complex", seed=43)
    assert not np.array_equal(a, c)


def test_random_shapes_and_dtypes():
    assert random_gaussian(4, 6, field="real", seed=0).shape == (4, 6)
    assert random_gaussian(4, 6, field="real", seed=0).dtype == np.float64
    assert random_gaussian(4, 6, field="complex", seed=0).dtype == np.complex128
    assert (random_gaussian(4, 6, field="real", seed=0,
                            precision="single").dtype == np.float32)


def test_random_complex_unit_variance():
    z = random_gaussian(1000, 1000, field="complex", seed=1)
    mean_sq = float(np.mean(np.abs(z) ** 2))
    assert 0.99 <= mean_sq <= 1.01


def test_random_rejects_bad_field():
    with pytest.raises(ValueError):
        random_gaussian(3, 3, field="quaternion", seed=0)
