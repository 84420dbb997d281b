import itertools

import numpy as np
import pytest

from qkztrace.core import (
    ModelParams,
    SpectralVars,
    TensorMap,
    all_eps,
    block_sizes,
    counts_of,
    eps_to_partition,
    minimal_eps,
    partition_to_eps,
    weight_block,
    weight_exponents,
)


def test_params_validation():
    P = ModelParams(N=3, q=0.4)
    assert P.y == (1.0, 1.0)
    with pytest.raises(ValueError):
        ModelParams(N=1, q=0.4)
    with pytest.raises(ValueError):
        ModelParams(N=2, q=1.2)
    with pytest.raises(ValueError):
        ModelParams(N=2, q=0.4, y=(0.0,))


def test_spectral_roundtrip():
    S = SpectralVars(zeta=(2.0, 1j), xi=(0.5,))
    assert S.m == 2 and S.n == 1
    assert S.z(2) == (4.0 + 0j, -1 + 0j)
    with pytest.raises(ValueError):
        SpectralVars(zeta=(0.0,), xi=())


def test_partition_roundtrip_examples():
    assert eps_to_partition((0, 1, 0), 2) == ((1, 3), (2,))
    assert partition_to_eps(((1, 3), (2,))) == (0, 1, 0)
    assert minimal_eps((1, 0, 1, 2)) == (0, 2, 3, 3)
    block = weight_block((1, 1))
    assert block == [(0, 1), (1, 0)]


def test_partition_roundtrip_exhaustive():
    for N in (2, 3, 4):
        for n in range(1, 5):
            for eps in all_eps(n, N):
                assert partition_to_eps(eps_to_partition(eps, N)) == eps


def test_lex_order_n2():
    assert all_eps(2, 2) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_weight_exponents():
    # wt v_j = Lambda_{j+1} - Lambda_j; Lambda_0 = Lambda_N = 0
    assert weight_exponents(0, 1, 3) == 1
    assert weight_exponents(2, 2, 3) == -1
    for N in (2, 3, 4):
        for i in range(1, N):
            assert sum(weight_exponents(j, i, N) for j in range(N)) == 0
    with pytest.raises(ValueError):
        weight_exponents(3, 1, 3)
    with pytest.raises(ValueError):
        weight_exponents(0, 0, 3)


def test_block_sizes_match_binomials():
    sizes = block_sizes(3, 2)
    assert sizes[(1, 2)] == 3 and sizes[(3, 0)] == 1


def test_compose_identity_and_oracle():
    rng = np.random.default_rng(0)
    N, n = 2, 2
    A = TensorMap(N, n, n, rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    I = TensorMap.identity(N, n)
    assert np.allclose((A @ I).table, A.table)
    B = TensorMap(N, n, n, rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    assert np.allclose((A @ B).table, A.table @ B.table)
    with pytest.raises(ValueError):
        TensorMap(N, 2, 1) @ A


def test_compose_dense_oracle_shapes():
    rng = np.random.default_rng(1)
    for N in (2, 3):
        for m, k, n in itertools.product((1, 2, 3), repeat=3):
            A = TensorMap(N, m, k, rng.normal(size=(N**m, N**k)))
            B = TensorMap(N, k, n, rng.normal(size=(N**k, N**n)))
            assert np.allclose((A @ B).table, A.table @ B.table)


def test_block_extraction_weight_conservation():
    N = 2
    T = TensorMap(N, 2, 2)
    T.set((0, 1), (1, 0), 2.0)
    blk = T.block((1, 1), (1, 1))
    assert blk.shape == (2, 2)
    assert blk[0, 1] == 2.0
    assert counts_of((0, 1), 2) == (1, 1)
