import numpy as np
import pytest

from qkztrace.core import ModelParams, SpectralVars, TensorMap
from qkztrace.qkz import (
    K1,
    K2,
    bar_shift_scalar,
    exchange_residual,
    qkz_residual,
    sample_spectral,
    swap_op,
)
from qkztrace.qspecial import level_from_x, x_from_level
from qkztrace.rmatrix import rbar_slots, yH_diag


def test_K1_single_site_is_twist():
    P = ModelParams(N=3, q=0.4, x=0.2, y=(0.7, 1.3))
    K = K1(1, (1.1,), P)
    assert np.allclose(K.table, yH_diag(P.y, 1, -1, 1, 3).table)
    K2_ = K2(1, (0.9,), P)
    assert np.allclose(K2_.table, yH_diag(P.y, 1, -1, 1, 3).table)


def test_K1_hand_composed_m2():
    P = ModelParams(N=2, q=0.45, x=0.3, y=(1.0,))
    zeta = (1.2, 0.8 * np.exp(0.5j))
    # site 1: (y^{-H})_1 Rbar_{12}(z1/z2); site 2: Rbar_{21}(x^{-1} z2/z1) (y^{-H})_2
    want1 = yH_diag(P.y, 1, -1, 2, 2) @ rbar_slots(2, 1, 2, zeta[0] / zeta[1], P)
    assert np.allclose(K1(1, zeta, P).table, want1.table)
    want2 = rbar_slots(2, 2, 1, zeta[1] / (P.x * zeta[0]), P) @ yH_diag(P.y, 2, -1, 2, 2)
    assert np.allclose(K1(2, zeta, P).table, want2.table)


def test_K_weight_block_diagonal():
    P = ModelParams(N=3, q=0.4, x=0.25, y=(0.8, 1.1))
    K = K1(2, (1.0, 1.3, 0.7j), P)
    assert K.weight_violation() == 0.0


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_transpose_identity(N, n):
    """tK_i^{(2)}(.|x,y) = K_i^{(1)}(.|x^{-1},y) exactly as matrices."""
    rng = np.random.default_rng(7 * N + n)
    P = ModelParams(N=N, q=0.4, x=0.3, y=tuple(0.5 + rng.uniform(0, 1, N - 1)))
    Pinv = ModelParams(N=N, q=P.q, x=1 / P.x, y=P.y)
    for _ in range(10):
        S = sample_spectral(n, 0, rng, P)
        for i in range(1, n + 1):
            lhs = K2(i, S.zeta, P).transpose().table
            rhs = K1(i, S.zeta, Pinv).table
            assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_residuals_zero_function():
    P = ModelParams(N=2, q=0.4, x=0.2)
    S = SpectralVars(zeta=(1.0, 1.5), xi=(0.8, 1.2))

    def zero(zeta, xi):
        return TensorMap(2, 2, 2)

    assert qkz_residual(zero, "zeta", 1, S, P) == 0.0
    assert exchange_residual(zero, "xi", 1, S, P) == 0.0


def test_exchange_double_application_consistency():
    """Applying the exchange relation twice returns the original: the swap
    factor times Rbar telescopes by unitarity."""
    P = ModelParams(N=3, q=0.4)
    rng = np.random.default_rng(11)
    S = sample_spectral(2, 0, rng, P)
    z1, z2 = S.zeta
    pref12 = (z2 / z1) ** (P.N - 1)
    pref21 = (z1 / z2) ** (P.N - 1)
    Pm = swap_op(2, 1, P.N)
    R12 = rbar_slots(2, 1, 2, z1 / z2, P)
    R21 = rbar_slots(2, 1, 2, z2 / z1, P)
    prod = pref21 * pref12 * (Pm @ R21 @ Pm @ R12).table
    assert np.max(np.abs(prod - np.eye(9))) < 1e-12


def test_level_dictionary_roundtrip():
    q, N = 0.4, 3
    x = x_from_level(1.0, q, N)
    assert level_from_x(x, q, N) == pytest.approx(1.0)


def test_sample_spectral_reproducible():
    P = ModelParams(N=2, q=0.4)
    a = sample_spectral(2, 2, 42, P)
    b = sample_spectral(2, 2, 42, P)
    assert a == b
    assert all(0.5 <= abs(z) <= 2.0 for z in a.zeta + a.xi)
