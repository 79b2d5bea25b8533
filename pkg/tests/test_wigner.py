import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from fracwave.wigner import wigner_D, wigner_d_explicit, wigner_d_table


def test_table_matches_explicit_sum():
    beta = np.linspace(0.01, np.pi - 0.01, 17)
    table = wigner_d_table(6, beta)
    for l in range(7):
        for m in range(-l, l + 1):
            for n in range(-l, l + 1):
                ref = wigner_d_explicit(l, m, n, beta)
                assert np.allclose(table[l][m + l, n + l], ref, atol=1e-13)


def test_known_values():
    b = 0.7
    t = wigner_d_table(1, np.array([b]))
    assert t[0][0, 0, 0] == pytest.approx(1.0)
    assert t[1][1, 1, 0] == pytest.approx(np.cos(b))
    assert t[1][2, 2, 0] == pytest.approx((1 + np.cos(b)) / 2)


def test_d_is_orthogonal():
    beta = np.array([0.3, 1.9])
    for l, d in enumerate(wigner_d_table(5, beta)):
        for j in range(len(beta)):
            M = d[:, :, j]
            assert np.allclose(M @ M.T, np.eye(2 * l + 1), atol=1e-12)


def test_D_is_a_homomorphism(rng):
    a = rng.uniform(0, 2 * np.pi, 3) * [1, 0.5, 1]
    c = rng.uniform(0, 2 * np.pi, 3) * [1, 0.5, 1]
    ra = Rotation.from_euler("ZYZ", a)
    rc = Rotation.from_euler("ZYZ", c)
    prod = (ra * rc).as_euler("ZYZ")
    for l in range(4):
        lhs = wigner_D(l, *prod)
        rhs = wigner_D(l, *a) @ wigner_D(l, *c)
        assert np.allclose(lhs, rhs, atol=1e-12)
