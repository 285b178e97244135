"""The numba and numpy kernels must agree (bitwise on the discrete side)."""

import numpy as np
import pytest

from cellgame import kernels as K
from cellgame.nonatomic import NonatomicInstance, uniform_profile


def _instance(rng, m, n):
    gains = 1.0 - rng.random((m, n))
    beta = rng.uniform(0.05, 0.6, m)
    return gains, beta, float(rng.uniform(0.5, 2.0))


@pytest.mark.parametrize("seed", range(10))
def test_deviation_kernels_agree(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 7)), int(rng.integers(1, 5))
    gains, beta, s2 = _instance(rng, m, n)
    a = rng.integers(n, size=m).astype(np.int64)
    np.testing.assert_array_equal(K.profile_costs_nb(gains, beta, s2, a), K.profile_costs_np(gains, beta, s2, a))
    for i in range(m):
        for nb, npy in ((K.deviation_costs_nb, K.deviation_costs_np), (K.deviation_tolled_costs_nb, K.deviation_tolled_costs_np)):
            c1, l1 = nb(gains, beta, s2, a, i)
            c2, l2 = npy(gains, beta, s2, a, i)
            np.testing.assert_array_equal(c1, c2)
            np.testing.assert_array_equal(l1, l2)
        for lexi in (False, True):
            for tolled in (False, True):
                for u in (-1.0, 0.3, 0.99):
                    r1 = K.choose_move_nb(gains, beta, s2, a, i, lexi, tolled, 0.0, u)
                    r2 = K.choose_move_np(gains, beta, s2, a, i, lexi, tolled, 0.0, u)
                    assert int(r1[0]) == r2[0] and r1[1] == r2[1] and r1[2] == r2[2]


@pytest.mark.parametrize("seed", range(6))
def test_enumeration_kernels_agree(seed):
    rng = np.random.default_rng(100 + seed)
    m, n = int(rng.integers(1, 6)), int(rng.integers(1, 4))
    gains, beta, s2 = _instance(rng, m, n)
    for tolled in (False, True):
        s1, ne1 = K.enumerate_profiles_nb(gains, beta, s2, tolled, 0.0)
        s2_, ne2 = K.enumerate_profiles_np(gains, beta, s2, tolled, 0.0, chunk=7)
        np.testing.assert_array_equal(s1, s2_)
        np.testing.assert_array_equal(ne1, ne2)
    target = K.profile_costs_np(gains, beta, s2, rng.integers(n, size=m).astype(np.int64))
    assert K.find_dominator_nb(gains, beta, s2, target, 0.0) == K.find_dominator_np(gains, beta, s2, target, 0.0, chunk=5)


@pytest.mark.parametrize("tolled", [False, True])
def test_pairwise_descent_backends_agree(tolled):
    rng = np.random.default_rng(3)
    for _ in range(5):
        nl, n = int(rng.integers(1, 5)), int(rng.integers(2, 5))
        gamma = rng.uniform(0.01, 0.05, nl)
        mass = rng.uniform(0.2, 1.0, nl)
        mass *= 0.7 * n / (gamma @ mass)
        inst = NonatomicInstance(1.0 - rng.random((nl, n)), gamma, mass)
        m0 = uniform_profile(inst)
        a, it1, r1 = K.pairwise_descent_nb(inst.g, inst.sinr_density, m0, tolled, 1e-10, 10_000, 1e-9)
        b, it2, r2 = K.pairwise_descent_np(inst.g, inst.sinr_density, m0, tolled, 1e-10, 10_000, 1e-9)
        assert r1 <= 1e-10
        # same arithmetic in the same order, so the iterates coincide exactly
        assert it1 == it2 and r1 == r2
        assert np.array_equal(a, b)
