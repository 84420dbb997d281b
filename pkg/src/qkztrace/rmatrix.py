"""Trigonometric R-matrix on V (x) V, slot application and twist diagonals.

Index convention, used everywhere downstream: upper indices are inputs,
    Rbar(zeta)(v_i (x) v_j) = sum_{i',j'} Rbar(zeta)^{ij}_{i'j'} v_{i'} (x) v_{j'},
so the dense table is laid out as table[out, in].  Entries vanish unless
{i',j'} = {i,j} as multisets, equal-letter diagonal entries are 1.
"""

from __future__ import annotations

import numpy as np

from .core import ModelParams, TensorMap, weight_exponents

__all__ = [
    "RMatrixPoleError",
    "rbar_entry",
    "rbar",
    "rbar_homogeneous",
    "rbar_slots",
    "apply_rbar_slots",
    "yH_diag",
]

POLE_GUARD = 1e-8


class RMatrixPoleError(ArithmeticError):
    pass


def _bc(zeta, P: ModelParams):
    q, N = P.q, P.N
    zN = zeta**N
    den = 1 - q**2 * zN
    if abs(den) < POLE_GUARD:
        raise RMatrixPoleError(f"R-matrix pole: |1 - q^2 zeta^N| = {abs(den):.3e}")
    b = q * (1 - zN) / den
    return b, den


def rbar_entry(zeta, P: ModelParams, i, j, ip, jp):
    """Component Rbar(zeta)^{ij}_{i'j'}."""
    N, q = P.N, P.q
    if not all(0 <= v < N for v in (i, j, ip, jp)):
        raise ValueError("letter out of range")
    b, den = _bc(zeta, P)
    if i == j:
        return 1.0 + 0.0j if (ip, jp) == (i, j) else 0.0 + 0.0j
    if (ip, jp) == (i, j):
        return b
    if (ip, jp) == (j, i):
        theta_step = 1 if j - i >= 0 else 0
        return (1 - q**2) / den * zeta ** (N * theta_step + i - j)
    return 0.0 + 0.0j


def rbar(zeta, P: ModelParams):
    """Full N^2 x N^2 operator on V (x) V as a TensorMap."""
    N = P.N
    R = TensorMap(N, 2, 2)
    b, den = _bc(zeta, P)
    q = P.q
    for i in range(N):
        R.set((i, i), (i, i), 1.0)
        for j in range(N):
            if i == j:
                continue
            R.set((i, j), (i, j), b)
            theta_step = 1 if j - i >= 0 else 0
            R.set((j, i), (i, j), (1 - q**2) / den * zeta ** (N * theta_step + i - j))
    return R


def rbar_homogeneous(z, P: ModelParams, root_index=0):
    """Homogeneous-picture matrix: Rbar_h(z)^{ij}_{i'j'} = Rbar(zeta)^{ij}_{i'j'} zeta^{i'-i}
    for any N-th root zeta of z; the result is root-independent."""
    if z == 0:
        raise ValueError("z must be nonzero")
    N = P.N
    zeta = z ** (1.0 / N) * np.exp(2j * np.pi * root_index / N)
    R = rbar(zeta, P)
    H = TensorMap(N, 2, 2)
    for i in range(N):
        for j in range(N):
            for ip in range(N):
                for jp in range(N):
                    v = R.get((ip, jp), (i, j))
                    if v != 0:
                        H.set((ip, jp), (i, j), v * zeta ** (ip - i))
    return H


def _slot_operator(op2, arity, a, b, N):
    """Extend a two-site operator to slots (a, b) of V^{(x)arity}, 1-based."""
    if a == b or not (1 <= a <= arity and 1 <= b <= arity):
        raise ValueError("slots must be distinct and in range")
    dim = N**arity
    out = np.zeros((dim, dim), dtype=complex)
    T = TensorMap(N, arity, arity)
    for col in range(dim):
        eps = T.unflat(col, arity)
        ea, eb = eps[a - 1], eps[b - 1]
        for ip in range(N):
            for jp in range(N):
                v = op2.get((ip, jp), (ea, eb))
                if v == 0:
                    continue
                new = list(eps)
                new[a - 1], new[b - 1] = ip, jp
                out[T.flat(tuple(new)), col] += v
    return TensorMap(N, arity, arity, out)


def rbar_slots(arity, a, b, zeta_ratio, P: ModelParams):
    """Rbar_{ab}(zeta_ratio) acting on slots (a, b) of V^{(x)arity}."""
    return _slot_operator(rbar(zeta_ratio, P), arity, a, b, P.N)


def apply_rbar_slots(target, a, b, zeta_ratio, P: ModelParams):
    """Apply Rbar_{ab} to a TensorMap (on its output space) or a flat state vector."""
    if isinstance(target, TensorMap):
        op = rbar_slots(target.m, a, b, zeta_ratio, P)
        return op @ target
    vec = np.asarray(target, dtype=complex)
    arity = int(round(np.log(vec.size) / np.log(P.N)))
    op = rbar_slots(arity, a, b, zeta_ratio, P)
    return op.table @ vec


def yH_diag(yvec, slot, sign, arity, N):
    """Diagonal y^{+-H} on one slot: letter j picks up prod_i y_i^{+-<h_i, wt v_j>}."""
    yvec = tuple(complex(v) for v in yvec)
    if len(yvec) != N - 1:
        raise ValueError("y must have N-1 entries")
    if any(v == 0 for v in yvec):
        raise ValueError("twist entries must be nonzero")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    letter_factor = []
    for j in range(N):
        f = 1.0 + 0.0j
        for i in range(1, N):
            e = weight_exponents(j, i, N)
            if e:
                f *= yvec[i - 1] ** (sign * e)
        letter_factor.append(f)
    dim = N**arity
    diag = np.ones(dim, dtype=complex)
    T = TensorMap(N, arity, arity)
    for idx in range(dim):
        eps = T.unflat(idx, arity)
        diag[idx] = letter_factor[eps[slot - 1]]
    return TensorMap(N, arity, arity, np.diag(diag))
