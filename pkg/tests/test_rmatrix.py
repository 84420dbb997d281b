import numpy as np
import pytest

from qkztrace.core import ModelParams, TensorMap, counts_of
from qkztrace.qkz import sample_spectral
from qkztrace.rmatrix import (
    RMatrixPoleError,
    apply_rbar_slots,
    rbar,
    rbar_entry,
    rbar_homogeneous,
    rbar_slots,
    yH_diag,
)


def test_diagonal_and_b_value():
    P = ModelParams(N=2, q=0.5)
    R = rbar(0.5, P)
    for j in range(2):
        assert R.get((j, j), (j, j)) == 1.0
    # b = q(1-z)/(1-q^2 z) with z = zeta^2 = 0.25
    assert R.get((0, 1), (0, 1)) == pytest.approx(0.4)
    assert rbar_entry(0.5, P, 0, 1, 0, 1) == pytest.approx(0.4)


def test_root_of_unity_pure_permutation():
    P = ModelParams(N=3, q=0.4)
    zeta = np.exp(2j * np.pi / 3)  # zeta^3 = 1 so b = 0
    R = rbar(zeta, P)
    assert R.get((0, 1), (0, 1)) == pytest.approx(0.0, abs=1e-14)


def test_multiset_conservation_and_dynkin():
    P = ModelParams(N=4, q=0.3 + 0.1j)
    zeta = 1.3 * np.exp(0.7j)
    R = rbar(zeta, P)
    N = P.N
    for i in range(N):
        for j in range(N):
            for ip in range(N):
                for jp in range(N):
                    v = R.get((ip, jp), (i, j))
                    if sorted((i, j)) != sorted((ip, jp)):
                        assert v == 0
                    s = lambda a: (a + 1) % N
                    assert R.get((s(ip), s(jp)), (s(i), s(j))) == pytest.approx(v, abs=1e-15)


def test_pole_guard():
    P = ModelParams(N=2, q=0.5)
    with pytest.raises(RMatrixPoleError):
        rbar(2.0, P)  # q^2 zeta^2 = 1


@pytest.mark.parametrize("N", [2, 3, 4])
def test_yang_baxter_and_unitarity(N):
    P = ModelParams(N=N, q=0.37)
    rng = np.random.default_rng(100 + N)
    worst_ybe = worst_uni = 0.0
    for _ in range(100 // N):
        S = sample_spectral(3, 0, rng, P)
        z1, z2, z3 = S.zeta
        R12 = rbar_slots(3, 1, 2, z1 / z2, P)
        R13 = rbar_slots(3, 1, 3, z1 / z3, P)
        R23 = rbar_slots(3, 2, 3, z2 / z3, P)
        lhs = (R12 @ R13 @ R23).table
        rhs = (R23 @ R13 @ R12).table
        worst_ybe = max(worst_ybe, np.max(np.abs(lhs - rhs)))
        # unitarity: P Rbar(1/zeta) P Rbar(zeta) = id
        zeta = z1 / z2
        from qkztrace.qkz import swap_op

        Pm = swap_op(2, 1, N)
        prod = (Pm @ rbar(1 / zeta, P) @ Pm @ rbar(zeta, P)).table
        worst_uni = max(worst_uni, np.max(np.abs(prod - np.eye(N * N))))
    assert worst_ybe < 1e-11
    assert worst_uni < 1e-11


def test_apply_rbar_slots_state():
    P = ModelParams(N=2, q=0.5)
    zeta = 0.7
    state = np.zeros(4, dtype=complex)
    T = TensorMap(2, 2, 2)
    state[T.flat((0, 1))] = 1.0
    out = apply_rbar_slots(state, 1, 2, zeta, P)
    R = rbar(zeta, P)
    assert out[T.flat((0, 1))] == pytest.approx(R.get((0, 1), (0, 1)))
    assert out[T.flat((1, 0))] == pytest.approx(R.get((1, 0), (0, 1)))
    # weight of the state is conserved
    for idx in np.nonzero(out)[0]:
        assert counts_of(T.unflat(idx, 2), 2) == (1, 1)


def test_apply_then_inverse_is_identity():
    P = ModelParams(N=3, q=0.45)
    zeta = 1.2 * np.exp(0.4j)
    from qkztrace.qkz import swap_op

    Pm = swap_op(2, 1, 3)
    T = TensorMap.identity(3, 2)
    once = apply_rbar_slots(T, 1, 2, zeta, P)
    undone = Pm @ apply_rbar_slots(Pm @ once, 1, 2, 1 / zeta, P)
    assert np.max(np.abs(undone.table - T.table)) < 1e-12


def test_yH_diag():
    N = 2
    I = yH_diag((1.0,), 1, 1, 1, N)
    assert np.allclose(I.table, np.eye(2))
    y = (0.7 + 0.2j,)
    up = yH_diag(y, 1, 1, 1, N)
    down = yH_diag(y, 1, -1, 1, N)
    assert np.allclose((up @ down).table, np.eye(2))
    # <h_1, wt v_0> = 1 so y^H v_0 = y_1 v_0
    assert up.get((0,), (0,)) == pytest.approx(y[0])
    assert up.get((1,), (1,)) == pytest.approx(1 / y[0])


def test_yH_telescoping_product_is_one():
    N, y = 4, (0.5, 1.3 - 0.4j, 2.0)
    up = yH_diag(y, 1, 1, 1, N)
    prod = np.prod([up.get((j,), (j,)) for j in range(N)])
    assert prod == pytest.approx(1.0)


def test_homogeneous_root_independence():
    P = ModelParams(N=3, q=0.4)
    z = 0.8 * np.exp(0.5j)
    tables = [rbar_homogeneous(z, P, root_index=k).table for k in range(3)]
    for t in tables[1:]:
        assert np.max(np.abs(t - tables[0])) < 1e-12
    # diagonal entries match the principal picture
    R = rbar(z ** (1 / 3), P)
    H = rbar_homogeneous(z, P)
    for i in range(3):
        for j in range(3):
            assert H.get((i, j), (i, j)) == pytest.approx(R.get((i, j), (i, j)), abs=1e-14)


def test_homogeneous_n2_asymmetric_c():
    P = ModelParams(N=2, q=0.5)
    z = 0.6 + 0.2j
    H = rbar_homogeneous(z, P)
    c_up = H.get((1, 0), (0, 1))  # zeta^{N theta(1)+0-1} * zeta^{1-0} = zeta^N = z
    c_dn = H.get((0, 1), (1, 0))
    q = P.q
    assert c_up == pytest.approx((1 - q**2) * z / (1 - q**2 * z), rel=1e-12)
    assert c_dn == pytest.approx((1 - q**2) / (1 - q**2 * z), rel=1e-12)
