"""q-series and theta kernels plus the scalar normalizers of the model.

All infinite products are truncated under TruncationControl; every kernel
accepts numpy arrays for its main argument so quadrature grids evaluate in
one shot.  Zero denominators raise PoleError on scalar input instead of
returning inf, so callers can treat removable singularities themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModelParams, SpectralVars

__all__ = [
    "TruncationControl",
    "PoleError",
    "ScalarTriple",
    "qpoch",
    "qpoch2",
    "theta",
    "theta_lattice",
    "h_sigma",
    "normalizer_Fbar",
    "normalizer_F",
    "theta_ratio_T",
    "structure_scalars",
    "level_from_x",
    "x_from_level",
]

HARD_NODE_CAP = 2**14


class PoleError(ArithmeticError):
    """A truncated product or theta factor vanished in a denominator."""


@dataclass(frozen=True)
class TruncationControl:
    max_terms: int = 400
    term_tol: float = 1e-17
    lattice_radius: int = 12
    quad_nodes: int = 256
    quad_tol: float = 1e-10
    dps: int = 0  # >0 switches scalar q-series to mpmath with that precision

    def __post_init__(self):
        if min(self.max_terms, self.lattice_radius, self.quad_nodes) <= 0:
            raise ValueError("truncation controls must be positive")
        if self.quad_tol <= 0 or self.term_tol <= 0:
            raise ValueError("tolerances must be positive")


DEFAULT_TRUNC = TruncationControl()


def _nterms(p, zscale, t):
    """Smallest K with |p|^K * zscale below term_tol (capped)."""
    ap = abs(p)
    if ap >= 1:
        raise ValueError("base must satisfy |p| < 1")
    if zscale == 0:
        return 1
    if ap == 0:
        return 1
    k = int(math.log(t.term_tol / max(zscale, t.term_tol)) / math.log(ap)) + 2
    return max(1, min(k, t.max_terms))


def _mp_qpoch(z, p, t):
    import mpmath as mp

    with mp.workdps(t.dps):
        zz, pp = mp.mpc(z), mp.mpc(p)
        acc = mp.mpc(1)
        pk = mp.mpc(1)
        for _ in range(_nterms(p, abs(z), t)):
            acc *= 1 - pk * zz
            pk *= pp
        return complex(acc)


def qpoch(z, p, t=DEFAULT_TRUNC):
    """(z; p)_oo = prod_{k>=0} (1 - p^k z), truncated."""
    if t.dps and np.isscalar(z):
        return _mp_qpoch(z, p, t)
    zz = np.asarray(z, dtype=complex)
    zscale = float(np.max(np.abs(zz))) if zz.size else 0.0
    K = _nterms(p, zscale, t)
    acc = np.ones_like(zz)
    pk = 1.0 + 0.0j
    for _ in range(K):
        acc = acc * (1 - pk * zz)
        pk *= p
    return acc if isinstance(z, np.ndarray) else complex(acc)


def qpoch2(z, p1, p2, t=DEFAULT_TRUNC):
    """(z; p1, p2)_oo = prod_{r,s>=0} (1 - p1^r p2^s z), truncated."""
    if abs(p1) >= 1 or abs(p2) >= 1:
        raise ValueError("bases must satisfy |p| < 1")
    zz = np.asarray(z, dtype=complex)
    zscale = float(np.max(np.abs(zz))) if zz.size else 0.0
    K2 = _nterms(p2, zscale, t)
    acc = np.ones_like(zz)
    p2s = 1.0 + 0.0j
    for _ in range(K2):
        acc = acc * qpoch(p2s * zz, p1, t)
        p2s *= p2
    return acc if isinstance(z, np.ndarray) else complex(acc)


def theta(z, p, t=DEFAULT_TRUNC):
    """theta_p(z) = (z;p)_oo (p/z;p)_oo (p;p)_oo.  Quasi-periodic:
    theta_p(pz) = -z^{-1} theta_p(z)."""
    zz = np.asarray(z, dtype=complex)
    if np.any(zz == 0):
        raise PoleError("theta requires z != 0")
    val = qpoch(zz, p, t) * qpoch(p / zz, p, t) * qpoch(p, p, t)
    return val if isinstance(z, np.ndarray) else complex(val)


def _cartan_matrix(N):
    A = 2 * np.eye(N - 1, dtype=int)
    for i in range(N - 2):
        A[i, i + 1] = A[i + 1, i] = -1
    return A


def _lattice_points(N, radius):
    grids = np.meshgrid(*([np.arange(-radius, radius + 1)] * (N - 1)), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def theta_lattice(i, zvec, p, N, t=DEFAULT_TRUNC):
    """Root-lattice theta: sum over alpha = sum m_j alpha_j of
    p^{(alpha|alpha)/2 + (alpha|Lambda_i)} prod_j z_j^{(alpha|Lambda_j)}
    with (alpha|Lambda_j) = m_j and the A_{N-1} Cartan pairing.

    Entries of zvec may be arrays (a common quadrature-grid shape); the sum
    broadcasts over them.  The radius grows until the boundary shell is
    negligible relative to the accumulated sum.
    """
    if not 0 <= i <= N - 1:
        raise ValueError("index i out of range")
    if abs(p) >= 1:
        raise ValueError("need |p| < 1")
    zs = [np.asarray(z, dtype=complex) for z in zvec]
    if len(zs) != N - 1:
        raise ValueError("zvec must have N-1 entries")
    A = _cartan_matrix(N)
    radius = max(2, min(4, t.lattice_radius))
    prev_shape = np.broadcast(*zs).shape
    total = np.zeros(prev_shape, dtype=complex)
    done_norm = -1
    while True:
        pts = _lattice_points(N, radius)
        norms = np.max(np.abs(pts), axis=1)
        shell_val = np.zeros(prev_shape, dtype=complex)
        new_val = np.zeros(prev_shape, dtype=complex)
        for mvec in pts[norms > done_norm]:
            quad = int(mvec @ A @ mvec) // 2
            exp_i = quad + (int(mvec[i - 1]) if i >= 1 else 0)
            term = np.full(prev_shape, p**exp_i, dtype=complex)
            for j, mj in enumerate(mvec):
                if mj:
                    term = term * zs[j] ** int(mj)
            new_val = new_val + term
            if np.max(np.abs(mvec)) == radius:
                shell_val = shell_val + term
        total = total + new_val
        shell = float(np.max(np.abs(shell_val)))
        scale = float(np.max(np.abs(total))) + 1e-300
        if shell < t.term_tol * scale or radius >= t.lattice_radius:
            break
        done_norm = radius
        radius = min(radius + 2, t.lattice_radius)
    return total if total.shape else complex(total)


def _curly(z, P: ModelParams, t):
    """{z} = (z; q^{2N}, x^N)_oo."""
    return qpoch2(z, P.q ** (2 * P.N), P.x**P.N, t)


def h_sigma(z, sigma, P: ModelParams, t=DEFAULT_TRUNC):
    """h^{(sigma)}(z|x), sigma in {-1,0,+1}:
    {q^{1+s} x^N / z} {q^{1+s} z} / ({q^{2N-1+s} x^N / z} {q^{2N-1+s} z}).
    Symmetric under z -> x^N/z."""
    if sigma not in (-1, 0, 1):
        raise ValueError("sigma must be -1, 0 or +1")
    q, xN = P.q, P.x**P.N
    a, b = q ** (1 + sigma), q ** (2 * P.N - 1 + sigma)
    num = _curly(a * xN / z, P, t) * _curly(a * z, P, t)
    den = _curly(b * xN / z, P, t) * _curly(b * z, P, t)
    if np.isscalar(den) and den == 0:
        raise PoleError("h_sigma denominator vanished")
    return num / den


def normalizer_Fbar(zvars, uvars, P: ModelParams, t=DEFAULT_TRUNC):
    """Fbar(z|u|x) built from h^{(+)}, h^{(0)}, h^{(-)} cross products."""
    val = 1.0 + 0.0j
    m, n = len(zvars), len(uvars)
    for a in range(m):
        for b in range(a + 1, m):
            val *= h_sigma(zvars[b] / zvars[a], +1, P, t)
    for a in range(n):
        for b in range(m):
            val /= h_sigma(uvars[a] / zvars[b], 0, P, t)
    for a in range(n):
        for b in range(a + 1, n):
            val *= h_sigma(uvars[a] / uvars[b], -1, P, t)
    return val


def theta_ratio_T(S: SpectralVars, P: ModelParams, t=DEFAULT_TRUNC):
    """(prod theta_x(-xi_b/zeta_a) / [prod_{a<b} theta_x(-zeta_b/zeta_a)
    prod_{a<b} theta_x(-xi_a/xi_b)])^{N-1}; F = Fbar * this."""
    num = 1.0 + 0.0j
    for zeta in S.zeta:
        for xi in S.xi:
            num *= theta(-xi / zeta, P.x, t)
    den = 1.0 + 0.0j
    for a in range(S.m):
        for b in range(a + 1, S.m):
            den *= theta(-S.zeta[b] / S.zeta[a], P.x, t)
    for a in range(S.n):
        for b in range(a + 1, S.n):
            den *= theta(-S.xi[a] / S.xi[b], P.x, t)
    if den == 0:
        raise PoleError("theta factor vanished in F normalizer")
    return (num / den) ** (P.N - 1)


def normalizer_F(S: SpectralVars, P: ModelParams, t=DEFAULT_TRUNC):
    zv, uv = S.z(P.N), S.u(P.N)
    return normalizer_Fbar(zv, uv, P, t) * theta_ratio_T(S, P, t)


@dataclass(frozen=True)
class ScalarTriple:
    r: complex
    rstar: complex
    tau: complex


def structure_scalars(zeta, P: ModelParams, t=DEFAULT_TRUNC):
    """The scalars r, r*, tau at a spectral point, with z = zeta^N.

    r carries the prefactor zeta^{1-N}; that power is pinned by the exchange
    functional equation of F (and by the N>=3 Hecke coefficients), and
    reduces to the familiar zeta^{-1} at N = 2.
    """
    if zeta == 0:
        raise ValueError("zeta must be nonzero")
    q, N = P.q, P.N
    z = zeta**N
    p = q ** (2 * N)

    def pr(w):
        return qpoch(w, p, t)

    den_r = pr(p * z) * pr(q**2 / z)
    den_rs = pr(p * z) * pr(q ** (2 * N - 2) / z)
    den_tau = theta(q / z, p, t)
    if den_r == 0 or den_rs == 0 or den_tau == 0:
        raise PoleError("structure scalar denominator vanished")
    r = zeta ** (1 - N) * pr(p / z) * pr(q**2 * z) / den_r
    rstar = -(zeta**-1) * pr(p / z) * pr(q ** (2 * N - 2) * z) / den_rs
    tau = zeta ** (1 - N) * theta(q * z, p, t) / den_tau
    return ScalarTriple(r=r, rstar=rstar, tau=tau)


def level_from_x(x, q, N):
    """Level k of the shift equation via x^{-N} = q^{2(k+N)} (principal branch)."""
    return complex(np.log(x**-N) / (2 * np.log(q))) - N


def x_from_level(k, q, N):
    return complex(q ** (-2.0 * (k + N) / N))
