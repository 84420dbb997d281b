"""Closed-form x=0 matrix elements, Hecke reconstruction and determinants.

Everything here lives at x = 0, where the trace degenerates to the
highest-to-highest matrix element.  Minimal (sorted) components have a
closed form; arbitrary components are reconstructed by the two adjacent
exchange recursions, which strictly lower the lexicographic rank and
terminate on extremal components with permuted spectral tuples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ModelParams,
    SpectralVars,
    counts_of,
    minimal_eps,
    weight_block,
)

__all__ = [
    "WeightBalance",
    "wcond_holds",
    "constant_Cij",
    "matelem_x0",
    "extremal_constant",
    "extremal_f0",
    "HeckeCoeffs",
    "hecke_expand",
    "gbar_x0_matrix",
    "block_size",
    "n_exponent",
    "det_factorization_residual",
    "q1_diag_matrix",
    "q1_diag_check",
    "permuted_tuple",
]

COEFF_POLE_MARGIN = 1e-6


def _binom(n, r):
    if r < 0 or n < 0 or r > n:
        return 0
    return math.comb(n, r)


def _half(n):
    if n % 2:
        raise ArithmeticError("exponent is not an even integer")
    return n // 2


@dataclass(frozen=True)
class WeightBalance:
    """Highest-weight indices and letter counts of a matrix element."""

    N: int
    i: int
    j: int
    k: tuple
    l: tuple

    def __post_init__(self):
        if len(self.k) != self.N or len(self.l) != self.N:
            raise ValueError("counts must have N entries")
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        object.__setattr__(self, "l", tuple(int(v) for v in self.l))
        object.__setattr__(self, "i", self.i % self.N)
        object.__setattr__(self, "j", self.j % self.N)

    @property
    def m(self):
        return sum(self.k)

    @property
    def n(self):
        return sum(self.l)

    @property
    def r0(self):
        return self.k[self.N - 1] - self.l[self.N - 1]

    def K(self, r):
        if r < 0 or r >= self.N:
            return 0
        return sum(self.k[: r + 1])

    def L(self, r):
        if r < 0 or r >= self.N:
            return 0
        return sum(self.l[: r + 1])

    def balanced(self):
        return wcond_holds(self.N, self.i, self.j, self.k, self.l)


def wcond_holds(N, i, j, k, l):
    """Weight condition: k_r - l_r = k_{r-1} - l_{r-1} + d_{r,i} - d_{r,j}
    for all r, with the wraparound k_{-1} = k_{N-1}."""
    for r in range(N):
        prev = (r - 1) % N
        if k[r] - l[r] != k[prev] - l[prev] + (r == i % N) - (r == j % N):
            return False
    return True


def constant_Cij(W: WeightBalance, P: ModelParams):
    """The scalar constant of the closed-form minimal matrix element."""
    N, i, j = W.N, W.i, W.j
    k, l = W.k, W.l
    m, n, r0 = W.m, W.n, W.r0
    eps, mu = minimal_eps(k), minimal_eps(l)
    KN2, LN2 = W.K(N - 2), W.L(N - 2)

    s1 = 0
    for a in range(1, m + 1):
        s = (i - 1 + a) % N
        s1 += (N - s) * (N - 1 - s)
    for b in range(1, n + 1):
        s = (j - 1 + b) % N
        s1 += (N - s) * (N - 1 - s)
    s1 = _half(s1)

    s2 = (
        -i * r0 * (N - 1)
        + sum((N - 1 - r) * k[r] for r in range(N - 1))
        + (1 if j == 0 else 0) * (n + m) * (N - 1)
        + (N * (N + 1) // 2 + 1) * (k[0] + l[0])
    )

    s3 = 0
    if 1 <= i < j:
        s3 += _half((j - i) * (N - j) * (N - j - 1))
    if i > j >= 1:
        s3 += _half((i - j) * (N - i) * (N - 1 + i - 2 * j))

    s4 = _half((k[0] + l[0]) * sum((N - 1 - r) * (N + 2 + r) * (k[r] + l[r]) for r in range(1, N)))

    s5 = 0
    for b in range(2, KN2 + 1):
        s5 += (b - 1) * (N - 1 - eps[b - 1])
    for b in range(2, LN2 + 1):
        s5 += (b - 1) * (N - 1 - mu[b - 1])
    for a in range(1, KN2 + 1):
        for b in range(1, LN2 + 1):
            s5 += N - 1 - max(eps[a - 1], mu[b - 1])

    e1 = (
        _half((N + 1) * ((i - j) * (i - j - 1) + r0 * r0 * N * (N - 1) + 2 * j * r0 * N - 2 * i * r0 * (N - 1)))
        + (j + 1) * (-W.K(j - 1) + W.L(j - 1))
        - N * _binom(KN2, 2)
        - (N - 1) * _binom(LN2, 2)
    )
    e2 = (
        N * (-KN2 + LN2) * (k[N - 1] - l[N - 1])
        + LN2 * l[N - 1]
        - sum((N - 1 - r) * k[r] for r in range(N - 1))
        + sum((r + 1) * _binom(k[r], 2) for r in range(N - 1))
        + sum(r * _binom(l[r], 2) for r in range(N - 1))
    )
    e3 = -sum((r + 1) * k[r] * l[r] for r in range(N - 1)) + N * KN2 * LN2

    return (-1) ** ((s1 + s2 + s3 + s4 + s5) % 2) * P.q ** (e1 + e2 + e3)


def matelem_x0(W: WeightBalance, S: SpectralVars, P: ModelParams):
    """Minimal-component matrix element at x = 0 in closed form.

    Returns exactly 0 when the weight condition fails.
    """
    if not W.balanced():
        return 0.0 + 0.0j
    N, j = W.N, W.j
    eps, mu = minimal_eps(W.k), minimal_eps(W.l)
    m, n = W.m, W.n
    if S.m != m or S.n != n:
        raise ValueError("spectral tuple lengths do not match the counts")
    q = P.q
    zv, uv = S.z(N), S.u(N)
    val = constant_Cij(W, P)
    for a in range(1, m + 1):
        val *= S.zeta[a - 1] ** ((N - 1) * (m - n + 1 - a) - eps[a - 1] + j)
    for b in range(1, n + 1):
        val *= S.xi[b - 1] ** ((N - 1) * (b - 1) + mu[b - 1] - j)
    for a in range(W.K(j - 1)):
        val /= zv[a]
    for b in range(W.L(j - 1)):
        val *= uv[b]
    for a in range(m):
        for b in range(n):
            if eps[a] < mu[b]:
                val *= zv[a] - q * uv[b]
            elif eps[a] > mu[b]:
                val *= uv[b] - q * zv[a]
    for a in range(m):
        for b in range(m):
            if eps[a] < eps[b]:
                den = zv[a] - q**2 * zv[b]
                if den == 0:
                    raise ZeroDivisionError("pole z_a = q^2 z_b")
                val /= den
    for a in range(n):
        for b in range(n):
            if mu[a] < mu[b]:
                den = uv[a] - q**2 * uv[b]
                if den == 0:
                    raise ZeroDivisionError("pole u_a = q^2 u_b")
                val /= den
    return val


def extremal_constant(counts, P: ModelParams):
    """Constant of the extremal component.

    Equal to the i = j = 0 minimal constant at equal counts; kept as its own
    closed form (a pure q-power in the partial sums, no sign) and
    cross-checked against constant_Cij in the tests.
    """
    N = len(counts)
    KN2 = sum(counts[: N - 1])
    e = _half(KN2 * KN2 - sum(v * v for v in counts[: N - 1])) + KN2 * counts[N - 1]
    return P.q**e


def extremal_f0(S: SpectralVars, counts, P: ModelParams, yvec=None):
    """Extremal component at x = 0: the y-weighted sum over highest weights
    of the minimal diagonal matrix elements, in product form.

    Accepts arbitrary ordered spectral tuples so the determinant machinery
    can evaluate it at permuted arguments.
    """
    N = len(counts)
    n = sum(counts)
    if S.m != n or S.n != n:
        raise ValueError("extremal component needs m = n = sum(counts)")
    y = yvec if yvec is not None else P.y
    q = P.q
    zv, uv = S.z(N), S.u(N)
    eps = minimal_eps(counts)
    val = extremal_constant(counts, P)
    for a in range(1, n + 1):
        val *= (S.zeta[a - 1] / S.xi[a - 1]) ** ((N - 1) * (1 - a))
        val *= (S.xi[a - 1] / S.zeta[a - 1]) ** eps[a - 1]
    for a in range(n):
        for b in range(n):
            if eps[a] < eps[b]:
                num = (zv[a] - q * uv[b]) * (uv[a] - q * zv[b])
                den = (zv[a] - q**2 * zv[b]) * (uv[a] - q**2 * uv[b])
                if den == 0:
                    raise ZeroDivisionError("pole in extremal pair product")
                val *= num / den
    Kpart = [sum(counts[: r + 1]) for r in range(N)]
    twist = 0.0 + 0.0j
    for i in range(N):
        term = 1.0 + 0.0j if i == 0 else complex(y[i - 1])
        for a in range(n):
            term *= (S.zeta[a] / S.xi[a]) ** i
        upto = 0 if i == 0 else Kpart[i - 1]
        for a in range(upto):
            term *= uv[a] / zv[a]
        twist += term
    return val * twist


@dataclass(frozen=True)
class HeckeCoeffs:
    """Scalar coefficients of the two adjacent-exchange recursions."""

    N: int
    q: complex

    def _den(self, zeta):
        d = 1 - zeta**self.N
        if abs(d) < COEFF_POLE_MARGIN * max(1.0, abs(zeta) ** self.N):
            raise ZeroDivisionError("exchange coefficient pole zeta^N = 1")
        return d

    def a1(self, zeta):
        return zeta ** (self.N - 1) * (1 - self.q**2 * zeta**self.N) / (self.q * self._den(zeta))

    def a2(self, zeta):
        return zeta ** (1 - self.N) * (1 - self.q**2 * zeta**self.N) / (self.q * self._den(zeta))

    def a3(self, k, l, zeta):
        return -(zeta ** (self.N + k - l)) * (1 - self.q**2) / (self.q * self._den(zeta))

    def a4(self, k, l, zeta):
        return -(zeta ** (l - k)) * (1 - self.q**2) / (self.q * self._den(zeta))


def _descents(seq):
    return [i for i in range(len(seq) - 1) if seq[i] > seq[i + 1]]


def hecke_expand(eps, mu, S: SpectralVars, P: ModelParams, yvec=None, strategy="first", _memo=None):
    """Component Gbar(zeta|xi|0,y)^eps_mu by exchange recursion down to the
    extremal component.  `strategy` picks which adjacent descent to reduce
    ('first' or 'last'); the result is reduction-order independent.
    """
    N = P.N
    eps, mu = tuple(eps), tuple(mu)
    if counts_of(eps, N) != counts_of(mu, N):
        return 0.0 + 0.0j
    if _memo is None:
        _memo = {}
    H = HeckeCoeffs(N, P.q)

    def rec(e, zt, u, xt):
        key = (e, zt, u, xt)
        if key in _memo:
            return _memo[key]
        de = _descents(e)
        if de:
            i = de[0] if strategy == "first" else de[-1]
            l_, k_ = e[i], e[i + 1]
            ratio = zt[i] / zt[i + 1]
            e_sw = e[:i] + (k_, l_) + e[i + 2 :]
            z_sw = zt[:i] + (zt[i + 1], zt[i]) + zt[i + 2 :]
            val = H.a3(k_, l_, ratio) * rec(e_sw, zt, u, xt) + H.a1(ratio) * rec(e_sw, z_sw, u, xt)
        else:
            dm = _descents(u)
            if dm:
                i = dm[0] if strategy == "first" else dm[-1]
                l_, k_ = u[i], u[i + 1]
                ratio = xt[i] / xt[i + 1]
                u_sw = u[:i] + (k_, l_) + u[i + 2 :]
                x_sw = xt[:i] + (xt[i + 1], xt[i]) + xt[i + 2 :]
                val = H.a4(k_, l_, ratio) * rec(e, zt, u_sw, xt) + H.a2(ratio) * rec(e, zt, u_sw, x_sw)
            else:
                val = extremal_f0(SpectralVars(zeta=zt, xi=xt), counts_of(e, N), P, yvec)
        _memo[key] = val
        return val

    return rec(eps, S.zeta, mu, S.xi)


def block_size(counts, n=None):
    """prod_a binom(n - K_{a-1}, k_a): dimension of the weight block."""
    N = len(counts)
    n = sum(counts) if n is None else n
    size, used = 1, 0
    for a in range(N - 1):
        size *= _binom(n - used, counts[a])
        used += counts[a]
    return size


def gbar_x0_matrix(S: SpectralVars, counts, P: ModelParams, yvec=None):
    """Full weight-block matrix of Gbar(.|.|0,y) via the exchange recursion."""
    block = weight_block(counts)
    memo = {}
    M = np.empty((len(block), len(block)), dtype=complex)
    for r, e in enumerate(block):
        for c, u in enumerate(block):
            M[r, c] = hecke_expand(e, u, S, P, yvec, _memo=memo)
    return M


def n_exponent(counts, n=None):
    """n(k_0,...,k_{N-1}): multiplicity of the pair prefactor in the
    determinant factorization."""
    N = len(counts)
    n = sum(counts) if n is None else n
    total = 0
    for low in range(N):
        for high in range(low + 1, N):
            kp = list(counts)
            kp[low] -= 1
            kp[high] -= 1
            if kp[low] < 0 or kp[high] < 0:
                continue
            term, used = 1, 0
            for jj in range(N - 1):
                term *= _binom(n - 2 - used, kp[jj])
                used += kp[jj]
            total += term
    return total


def permuted_tuple(values, partition):
    """Reorder a spectral tuple by a partition: M_0 block first, then M_1, ..."""
    return tuple(values[p - 1] for part in partition for p in part)


def det_factorization_residual(S: SpectralVars, counts, P: ModelParams, yvec=None):
    """Relative residual of det Gbar = (prod_{i<j} a1 a2)^{n(k)} det(f-matrix)."""
    n = sum(counts)
    block = weight_block(counts)
    parts = [tuple(tuple(p + 1 for p, letter in enumerate(e) if letter == r) for r in range(len(counts))) for e in block]
    lhs = np.linalg.det(gbar_x0_matrix(S, counts, P, yvec))
    H = HeckeCoeffs(P.N, P.q)
    pref = 1.0 + 0.0j
    for a in range(n):
        for b in range(a + 1, n):
            pref *= H.a1(S.zeta[a] / S.zeta[b]) * H.a2(S.xi[a] / S.xi[b])
    fmat = np.empty((len(block), len(block)), dtype=complex)
    for r, Mp in enumerate(parts):
        for c, Lp in enumerate(parts):
            Sp = SpectralVars(zeta=permuted_tuple(S.zeta, Mp), xi=permuted_tuple(S.xi, Lp))
            fmat[r, c] = extremal_f0(Sp, counts, P, yvec)
    rhs = pref ** n_exponent(counts) * np.linalg.det(fmat)
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-300)


def q1_diag_matrix(zvec, counts, q=1.0, uvec=None):
    """The D-matrix of the q = 1, zeta = xi degeneration (general q, u kept
    so the caller can probe the generic matrix as well)."""
    N = len(counts)
    n = sum(counts)
    zvec = tuple(complex(v) for v in zvec)
    uvec = zvec if uvec is None else tuple(complex(v) for v in uvec)
    block = weight_block(counts)
    parts = [tuple(tuple(p + 1 for p, letter in enumerate(e) if letter == r) for r in range(N)) for e in block]
    D = np.empty((len(block), len(block)), dtype=complex)
    for ri, Mp in enumerate(parts):
        for ci, Lp in enumerate(parts):
            val = 1.0 + 0.0j
            for r in range(N):
                for ll in range(r + 1, N):
                    for a in Mp[r]:
                        for b in Lp[ll]:
                            val *= zvec[a - 1] - q * uvec[b - 1]
                    for a in Lp[r]:
                        for b in Mp[ll]:
                            val *= uvec[a - 1] - q * zvec[b - 1]
            tw = 0.0 + 0.0j
            for j in range(N):
                term = 1.0 + 0.0j
                for r in range(j):
                    for a in Mp[r]:
                        term /= zvec[a - 1]
                    for a in Lp[r]:
                        term *= uvec[a - 1]
                tw += term
            D[ri, ci] = val * tw
    return D


def q1_diag_check(zvec, counts):
    """Off-diagonal vanishing and the determinant value of the q = 1,
    zeta = xi matrix.  Returns (is_diagonal, det, reference)."""
    N = len(counts)
    D = q1_diag_matrix(zvec, counts)
    scale = np.max(np.abs(D)) + 1e-300
    off = D - np.diag(np.diag(D))
    is_diag = bool(np.max(np.abs(off)) < 1e-12 * scale)
    det = complex(np.linalg.det(D))
    P_size = block_size(counts)
    block = weight_block(counts)
    parts = [tuple(tuple(p + 1 for p, letter in enumerate(e) if letter == r) for r in range(N)) for e in block]
    ref = complex(N) ** P_size
    for Mp in parts:
        for r in range(N):
            for ll in range(r + 1, N):
                for a in Mp[r]:
                    for b in Mp[ll]:
                        ref *= (zvec[a - 1] - zvec[b - 1]) ** 2
    return is_diag, det, ref
