"""Shift operators of the difference system and residual meters.

The equations are checked in matrix form.  For the exchange relations the
paper-style statement "components follow the spectral point" becomes an
explicit slot swap on the output (zeta side) or input (xi side) space:

    Swap_i[G(..zeta_{i+1},zeta_i..)] = (zeta_{i+1}/zeta_i)^{N-1} Rbar_{i,i+1}(zeta_i/zeta_{i+1}) G
    G(..xi_{i+1},xi_i..) Swap_i     = (xi_i/xi_{i+1})^{N-1} G Rbar_{i,i+1}(xi_i/xi_{i+1})

For a function normalized like Gbar the x-shift equations carry the extra
power factor computed by `bar_shift_scalar`; the plain normalization drops it.
"""

from __future__ import annotations

import numpy as np

from .core import ModelParams, SpectralVars, TensorMap, block_relative_residual
from .rmatrix import rbar_slots, yH_diag

__all__ = [
    "swap_op",
    "K1",
    "K2",
    "bar_shift_scalar",
    "exchange_residual",
    "qkz_residual",
    "sample_spectral",
]


def swap_op(arity, i, N):
    """Permutation operator exchanging slots i, i+1 (1-based)."""
    if not 1 <= i < arity:
        raise ValueError("slot out of range")
    dim = N**arity
    T = TensorMap(N, arity, arity)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        eps = list(T.unflat(col, arity))
        eps[i - 1], eps[i] = eps[i], eps[i - 1]
        out[T.flat(tuple(eps)), col] = 1.0
    return TensorMap(N, arity, arity, out)


def K1(i, zeta, P: ModelParams):
    """K_i^{(1)}(zeta|x,y) on V^{(x)m}:
    Rbar_{i,i-1}(x^{-1} z_i/z_{i-1}) ... Rbar_{i,1}(x^{-1} z_i/z_1)
    (y^{-H})_i Rbar_{i,m}(z_i/z_m) ... Rbar_{i,i+1}(z_i/z_{i+1})."""
    m = len(zeta)
    if not 1 <= i <= m:
        raise ValueError("site out of range")
    factors = []
    for j in range(i - 1, 0, -1):
        factors.append(rbar_slots(m, i, j, P.x**-1 * zeta[i - 1] / zeta[j - 1], P))
    factors.append(yH_diag(P.y, i, -1, m, P.N))
    for j in range(m, i, -1):
        factors.append(rbar_slots(m, i, j, zeta[i - 1] / zeta[j - 1], P))
    op = TensorMap.identity(P.N, m)
    for f in reversed(factors):
        op = f @ op
    return op


def K2(i, xi, P: ModelParams):
    """K_i^{(2)}(xi|x,y) on V^{(x)n}:
    Rbar_{i,i+1}(xi_i/xi_{i+1}) ... Rbar_{i,n}(xi_i/xi_n)
    (y^{-H})_i Rbar_{i,1}(x xi_i/xi_1) ... Rbar_{i,i-1}(x xi_i/xi_{i-1})."""
    n = len(xi)
    if not 1 <= i <= n:
        raise ValueError("site out of range")
    factors = []
    for j in range(i + 1, n + 1):
        factors.append(rbar_slots(n, i, j, xi[i - 1] / xi[j - 1], P))
    factors.append(yH_diag(P.y, i, -1, n, P.N))
    for j in range(1, i):
        factors.append(rbar_slots(n, i, j, P.x * xi[i - 1] / xi[j - 1], P))
    op = TensorMap.identity(P.N, n)
    for f in reversed(factors):
        op = f @ op
    return op


def bar_shift_scalar(side, i, S: SpectralVars, P: ModelParams):
    """Power factor relating the Gbar-normalized shift equation to the
    K-operator form: [x^{i-1} prod ratios]^{N-1}."""
    if side == "zeta":
        val = P.x ** (i - 1)
        zi = S.zeta[i - 1]
        for xi in S.xi:
            val *= zi / xi
        for j, zj in enumerate(S.zeta, start=1):
            if j != i:
                val *= zj / zi
    elif side == "xi":
        val = P.x ** (i - 1)
        xii = S.xi[i - 1]
        for z in S.zeta:
            val *= z / xii
        for j, xj in enumerate(S.xi, start=1):
            if j != i:
                val *= xii / xj
    else:
        raise ValueError("side must be 'zeta' or 'xi'")
    return val ** (P.N - 1)


def _swap_tuple(tup, i):
    out = list(tup)
    out[i - 1], out[i] = out[i], out[i - 1]
    return tuple(out)


def exchange_residual(Gfun, side, i, S: SpectralVars, P: ModelParams):
    """Relative residual of the adjacent-exchange relation at slots (i, i+1)."""
    G0 = Gfun(S.zeta, S.xi)
    if side == "zeta":
        Gs = Gfun(_swap_tuple(S.zeta, i), S.xi)
        lhs = swap_op(G0.m, i, P.N) @ Gs
        pref = (S.zeta[i] / S.zeta[i - 1]) ** (P.N - 1)
        R = rbar_slots(G0.m, i, i + 1, S.zeta[i - 1] / S.zeta[i], P)
        rhs = R @ G0
    elif side == "xi":
        Gs = Gfun(S.zeta, _swap_tuple(S.xi, i))
        lhs = Gs @ swap_op(G0.n, i, P.N)
        pref = (S.xi[i - 1] / S.xi[i]) ** (P.N - 1)
        R = rbar_slots(G0.n, i, i + 1, S.xi[i - 1] / S.xi[i], P)
        rhs = G0 @ R
    else:
        raise ValueError("side must be 'zeta' or 'xi'")
    rhs = TensorMap(rhs.N, rhs.m, rhs.n, pref * rhs.table)
    return block_relative_residual(lhs, rhs)


def qkz_residual(Gfun, side, i, S: SpectralVars, P: ModelParams, normalization="bar"):
    """Relative residual of the x-shift equation at site i.

    side='zeta': G(.., x^{-1} zeta_i, ..) vs s * K_i^{(1)} G;
    side='xi':   G(..|.., x xi_i, ..)    vs s * G K_i^{(2)}.
    normalization='bar' includes the power factor of the Gbar system,
    'plain' sets it to 1.
    """
    if normalization not in ("bar", "plain"):
        raise ValueError("normalization must be 'bar' or 'plain'")
    G0 = Gfun(S.zeta, S.xi)
    scal = bar_shift_scalar(side, i, S, P) if normalization == "bar" else 1.0
    if side == "zeta":
        shifted = list(S.zeta)
        shifted[i - 1] = S.zeta[i - 1] / P.x
        lhs = Gfun(tuple(shifted), S.xi)
        rhs = K1(i, S.zeta, P) @ G0
    elif side == "xi":
        shifted = list(S.xi)
        shifted[i - 1] = S.xi[i - 1] * P.x
        lhs = Gfun(S.zeta, tuple(shifted))
        rhs = G0 @ K2(i, S.xi, P)
    else:
        raise ValueError("side must be 'zeta' or 'xi'")
    rhs = TensorMap(rhs.N, rhs.m, rhs.n, scal * rhs.table)
    return block_relative_residual(lhs, rhs)


def sample_spectral(m, n, rng, P: ModelParams = None, margin=1e-6, tries=200):
    """Draw spectral points from the annulus 0.5 < |zeta| < 2, rejecting
    coincidences zeta_i^N = zeta_j^N (coefficient poles) and R-matrix poles."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)

    def draw(count):
        radius = rng.uniform(0.5, 2.0, size=count)
        angle = rng.uniform(0.0, 2 * np.pi, size=count)
        return tuple(radius * np.exp(1j * angle))

    N = P.N if P is not None else 2
    for _ in range(tries):
        zeta, xi = draw(m), draw(n)
        pts = zeta + xi
        powers = [v**N for v in pts]
        ok = True
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                if abs(powers[a] - powers[b]) < margin:
                    ok = False
        if P is not None:
            for a in range(len(pts)):
                for b in range(len(pts)):
                    if a != b and abs(1 - P.q**2 * powers[a] / powers[b]) < margin:
                        ok = False
        if ok:
            return SpectralVars(zeta=zeta, xi=xi)
    raise RuntimeError("could not draw generic spectral points")
