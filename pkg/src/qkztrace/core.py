"""Parameter records, weight-basis combinatorics and tensor-map algebra.

Vectors of the N-dimensional module V carry letters 0..N-1.  A component
index for V^{(x)n} is a tuple eps = (eps_1,...,eps_n); its partition form is
M = (M_0,...,M_{N-1}) with M_r the sorted 1-based positions j where
eps_j = r.  Operators are stored dense over all letter tuples; weight
conservation shows up as a block zero pattern.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "SpectralVars",
    "TensorMap",
    "weight_exponents",
    "eps_to_partition",
    "partition_to_eps",
    "minimal_eps",
    "counts_of",
    "lex_rank",
    "weight_block",
    "all_eps",
    "block_sizes",
    "dynkin_shift",
]


@dataclass(frozen=True)
class ModelParams:
    """Rank, deformation, elliptic parameter and twist of the model.

    q must satisfy 0 < |q| < 1.  The bound |x| < |q|^(2/N) is what the trace
    contours need; it is enforced by the contour code, not here, so that
    x = 0 matrix-element work can use the same record.
    """

    N: int
    q: complex
    x: complex = 0.0
    y: tuple = ()

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("rank N must be >= 2")
        if not 0 < abs(self.q) < 1:
            raise ValueError("need 0 < |q| < 1")
        y = tuple(complex(v) for v in self.y) if self.y else (1.0 + 0.0j,) * (self.N - 1)
        if len(y) != self.N - 1:
            raise ValueError("twist y must have N-1 entries")
        if any(v == 0 for v in y):
            raise ValueError("twist entries must be nonzero")
        object.__setattr__(self, "q", complex(self.q))
        object.__setattr__(self, "x", complex(self.x))
        object.__setattr__(self, "y", y)

    def trace_domain_ok(self):
        return abs(self.x) < abs(self.q) ** (2.0 / self.N)


@dataclass(frozen=True)
class SpectralVars:
    """Ordered spectral points: zeta (type I slots) and xi (type II slots)."""

    zeta: tuple
    xi: tuple

    def __post_init__(self):
        z = tuple(complex(v) for v in self.zeta)
        x = tuple(complex(v) for v in self.xi)
        if any(v == 0 for v in z + x):
            raise ValueError("spectral points must be nonzero")
        object.__setattr__(self, "zeta", z)
        object.__setattr__(self, "xi", x)

    @property
    def m(self):
        return len(self.zeta)

    @property
    def n(self):
        return len(self.xi)

    def z(self, N):
        """Principal-to-homogeneous variables z_a = zeta_a^N."""
        return tuple(v**N for v in self.zeta)

    def u(self, N):
        return tuple(v**N for v in self.xi)


def weight_exponents(j, i, N):
    """<h_i, wt v_j> for letter j (0..N-1) and Cartan index i (1..N-1).

    wt v_j = Lambda_{j+1} - Lambda_j with Lambda_0 = Lambda_N = 0 in the
    sl_N identification, so the value is delta_{i,j+1} - delta_{i,j}.
    """
    if not 0 <= j <= N - 1:
        raise ValueError("letter out of range")
    if not 1 <= i <= N - 1:
        raise ValueError("Cartan index out of range")
    return (1 if i == j + 1 else 0) - (1 if i == j else 0)


def eps_to_partition(eps, N):
    """Partition form M_r = sorted 1-based positions with letter r."""
    M = [[] for _ in range(N)]
    for pos, letter in enumerate(eps, start=1):
        if not 0 <= letter < N:
            raise ValueError("letter out of range")
        M[letter].append(pos)
    return tuple(tuple(part) for part in M)


def partition_to_eps(M):
    n = sum(len(part) for part in M)
    eps = [None] * n
    for r, part in enumerate(M):
        for pos in part:
            eps[pos - 1] = r
    if any(v is None for v in eps):
        raise ValueError("partition does not cover 1..n")
    return tuple(eps)


def counts_of(eps, N):
    k = [0] * N
    for letter in eps:
        k[letter] += 1
    return tuple(k)


def minimal_eps(counts):
    """Sorted sequence (0^{k_0} 1^{k_1} ...), the lex-minimal element."""
    out = []
    for r, k in enumerate(counts):
        out.extend([r] * k)
    return tuple(out)


def weight_block(counts):
    """All letter tuples with the given counts, in lexicographic order."""
    seen = sorted(set(itertools.permutations(minimal_eps(counts))))
    return [tuple(e) for e in seen]


def lex_rank(eps, N):
    block = weight_block(counts_of(eps, N))
    return block.index(tuple(eps))


def all_eps(n, N):
    return list(itertools.product(range(N), repeat=n))


def block_sizes(n, N):
    """Map counts -> dimension of the weight block of V^{(x)n}."""
    sizes = {}
    for eps in all_eps(n, N):
        k = counts_of(eps, N)
        sizes[k] = sizes.get(k, 0) + 1
    return sizes


def dynkin_shift(eps, N, steps=1):
    return tuple((v + steps) % N for v in eps)


@dataclass
class TensorMap:
    """Linear map V^{(x)n} -> V^{(x)m} stored dense on letter tuples.

    table[out_index, in_index] over the lexicographic enumeration of
    letter tuples; helpers translate between tuples and flat indices.
    """

    N: int
    m: int
    n: int
    table: np.ndarray = field(default=None)

    def __post_init__(self):
        shape = (self.N**self.m, self.N**self.n)
        if self.table is None:
            self.table = np.zeros(shape, dtype=complex)
        else:
            self.table = np.asarray(self.table, dtype=complex)
            if self.table.shape != shape:
                raise ValueError("table shape mismatch")

    @classmethod
    def identity(cls, N, n):
        return cls(N, n, n, np.eye(N**n, dtype=complex))

    def flat(self, eps):
        idx = 0
        for v in eps:
            idx = idx * self.N + v
        return idx

    def unflat(self, idx, arity):
        out = []
        for _ in range(arity):
            out.append(idx % self.N)
            idx //= self.N
        return tuple(reversed(out))

    def get(self, eps_out, eps_in):
        return self.table[self.flat(eps_out), self.flat(eps_in)]

    def set(self, eps_out, eps_in, value):
        self.table[self.flat(eps_out), self.flat(eps_in)] = value

    def compose(self, other):
        """self after other: (self . other)(v) = self(other(v))."""
        if self.n != other.m or self.N != other.N:
            raise ValueError("arity mismatch in composition")
        return TensorMap(self.N, self.m, other.n, self.table @ other.table)

    def __matmul__(self, other):
        return self.compose(other)

    def transpose(self):
        return TensorMap(self.N, self.n, self.m, self.table.T.copy())

    def block(self, counts_out, counts_in):
        """Dense submatrix of one weight block pair."""
        rows = [self.flat(e) for e in weight_block(counts_out)]
        cols = [self.flat(e) for e in weight_block(counts_in)]
        return self.table[np.ix_(rows, cols)]

    def weight_violation(self):
        """Largest entry that breaks letter-count conservation."""
        worst = 0.0
        for i in range(self.table.shape[0]):
            eo = self.unflat(i, self.m)
            ko = counts_of(eo, self.N)
            for j in range(self.table.shape[1]):
                ei = self.unflat(j, self.n)
                if self.m == self.n and counts_of(ei, self.N) != ko:
                    worst = max(worst, abs(self.table[i, j]))
        return worst

    def norm(self):
        return float(np.linalg.norm(self.table))


def block_relative_residual(A, B, counts_list=None):
    """max over weight blocks of ||A-B|| / (||A|| + ||B|| + eps)."""
    if A.m != B.m or A.n != B.n or A.N != B.N:
        raise ValueError("shape mismatch")
    if counts_list is None:
        counts_list = sorted(block_sizes(A.n, A.N)) if A.m == A.n else [None]
    worst = 0.0
    for counts in counts_list:
        if counts is None:
            a, b = A.table, B.table
        else:
            a, b = A.block(counts, counts), B.block(counts, counts)
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        worst = max(worst, np.linalg.norm(a - b) / (na + nb + 1e-300))
    return float(worst)
