"""Elliptic trace functions: the general-rank integrand, its rank-two
numerical evaluation, and the rank-two closed forms.

The rank-two evaluator integrates over origin-centered circles with
explicit correction residues for prescription points that no circle can
honor (each v-contour's u-ladder is inverted: a larger-modulus point must
stay inside while a smaller one stays outside).  Radii come from a slot
search over the prescribed point families; corrections are extra node sets
and nest inside the iterated quadrature.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .contours import nested_quadrature
from .core import ModelParams, SpectralVars, counts_of, dynkin_shift
from .matelem import _half
from .qspecial import DEFAULT_TRUNC, qpoch, theta, theta_lattice
from .qspecial import _curly as _curly_impl

__all__ = [
    "ContourPinchError",
    "constant_Ctr",
    "trace_integrand",
    "trace_prefactor",
    "trace_component_n2",
    "gbar_trace_n2",
    "example_closed_forms",
    "example2_matrix",
    "Q_solution",
    "det_equation_residual",
    "theta_x4_recombination_residual",
]


class ContourPinchError(ArithmeticError):
    """No valid circle separation: spectral points pinch the contour."""


def _curly(z, P, t):
    return _curly_impl(z, P, t)


def _aux_sets(eps, mu, N):
    A2 = [a for a in range(1, len(eps) + 1) if eps[a - 1] <= N - 2]
    B2 = [b for b in range(1, len(mu) + 1) if mu[b - 1] <= N - 2]
    return A2, B2


def constant_Ctr(eps, mu, i, P: ModelParams, t=DEFAULT_TRUNC):
    """Scalar constant of the weight-i trace integrand."""
    N, q, x = P.N, P.q, P.x
    m, n = len(eps), len(mu)
    k, l = counts_of(eps, N), counts_of(mu, N)
    r0 = k[N - 1] - l[N - 1]
    A2, B2 = _aux_sets(eps, mu, N)
    KN2, LN2 = len(A2), len(B2)

    sgn = 0
    for a in range(1, m + 1):
        s = (i + a - 1) % N
        sgn += (N - s) * (N - 1 - s)
    for b in range(1, n + 1):
        s = (i + b - 1) % N
        sgn += (N - s) * (N - 1 - s)
    sgn = _half(sgn)

    S = (
        i * r0 * (N - 1)
        + sgn
        + r0 * (N - 1) * (N - 2) * (N - 3) // 3
        + r0 * (r0 + 1) * (N - 1) // 2
        + KN2
        + n * LN2
        + sum(a * k[a] for a in range(1, N - 1))
        + sum(A2)
        + sum(B2)
        + sum(max(eps[a - 1], mu[b - 1]) for a in A2 for b in B2)
    )
    for ai, a in enumerate(A2):
        for b in A2[ai + 1 :]:
            S += max(eps[a - 1], eps[b - 1]) + (1 if eps[a - 1] <= eps[b - 1] else 0)
    for bi, a in enumerate(B2):
        for b in B2[bi + 1 :]:
            S += max(mu[a - 1], mu[b - 1]) + (1 if mu[a - 1] >= mu[b - 1] else 0)

    E = (
        i * r0 * (N + 1)
        + r0 * r0 * N * (N - 1) * (N + 1) // 2
        - n * (N + 1) * LN2
        + (N - 1) * KN2 * LN2
        + sum(b * l[b] for b in range(1, N - 1))
        + (N + 1) * (-sum(A2) + sum(B2))
        - sum(max(eps[a - 1], mu[b - 1]) for a in A2 for b in B2)
    )

    xN = x**N
    val = (-1) ** (S % 2) * q**E
    val *= (_curly(q**2 * xN, P, t) / _curly(q ** (2 * N) * xN, P, t)) ** m
    val *= (_curly(xN, P, t) / _curly(q ** (2 * N - 2) * xN, P, t)) ** n
    val *= qpoch(xN, xN, t) ** (sum((N - 1 - a) * (k[a] + l[a]) for a in range(N - 1)) - 1)
    val *= qpoch(q**2, xN, t) ** sum((N - 1 - a) * k[a] for a in range(N - 1))
    val *= qpoch(q**-2, xN, t) ** sum((N - 1 - b) * l[b] for b in range(N - 1))
    return val


def trace_prefactor(eps, mu, i, S: SpectralVars, P: ModelParams):
    N = P.N
    m, n = len(eps), len(mu)
    val = 1.0 + 0.0j
    for a in range(1, m + 1):
        val *= S.zeta[a - 1] ** ((N - 1) * (m - n - a + 1) - eps[a - 1] + i)
    for b in range(1, n + 1):
        val *= S.xi[b - 1] ** ((N - 1) * (b - 1) + mu[b - 1] - i)
    return val


def trace_integrand(eps, mu, i, env, S: SpectralVars, P: ModelParams, t=DEFAULT_TRUNC):
    """Weight-i trace integrand at the auxiliary assignment
    env[('w', a, k)] / env[('v', b, k)]; entries may be numpy arrays.

    Includes the scalar constant, all coupling factors, the twist monomial
    and the lattice theta.  The zeta/xi prefactor and the dlog measures are
    applied by the caller.
    """
    N, q, x = P.N, P.q, P.x
    xN = x**N
    m, n = len(eps), len(mu)
    zv, uv = S.z(N), S.u(N)
    A2, B2 = _aux_sets(eps, mu, N)
    k_cnt, l_cnt = counts_of(eps, N), counts_of(mu, N)

    def wex(a, kk):
        return eps[a - 1] + 1 <= kk <= N

    def vex(b, kk):
        return mu[b - 1] + 1 <= kk <= N

    def wv(a, kk):
        return q ** (N + 1) * zv[a - 1] if kk == N else env[("w", a, kk)]

    def vv(b, kk):
        return q ** (N + 1) * uv[b - 1] if kk == N else env[("v", b, kk)]

    val = np.asarray(constant_Ctr(eps, mu, i, P, t) + 0.0j)
    for a in A2:
        val = val / zv[a - 1]
    for b in A2:
        for a in range(1, b):
            val = val / zv[a - 1]
    for a in B2:
        for b in range(a + 1, n + 1):
            val = val / uv[b - 1]

    # letter-pattern monomials on the auxiliary variables
    for ai, a in enumerate(A2):
        for b in A2[ai + 1 :]:
            ea, eb = eps[a - 1], eps[b - 1]
            if ea <= eb:
                val = val * wv(a, eb + 1)
            if ea < eb:
                val = val / wv(a, eb)
    for bi, a in enumerate(B2):
        for b in B2[bi + 1 :]:
            ma, mb = mu[a - 1], mu[b - 1]
            if ma >= mb:
                val = val * vv(b, ma + 1)
            if ma > mb:
                val = val / vv(b, ma)
    for a in A2:
        for b in B2:
            ea, mb = eps[a - 1], mu[b - 1]
            if ea < mb:
                val = val * wv(a, mb)
            if ea > mb:
                val = val * vv(b, ea)
    for a in A2:
        val = val * wv(a, N - 1) ** l_cnt[N - 1]
    for b in B2:
        val = val * vv(b, N - 1) ** k_cnt[N - 1]
    for a in A2:
        for b in range(a + 1, m + 1):
            if eps[b - 1] == N - 1:
                val = val / wv(a, N - 1)
    for b in B2:
        for a in range(1, b):
            if mu[a - 1] == N - 1:
                val = val / vv(b, N - 1)
    for a in A2:
        val = val * wv(a, eps[a - 1] + 1)

    def px(z):
        return qpoch(z, xN, t)

    pxN = qpoch(xN, xN, t)

    # w-w couplings over ordered pairs (a, b), adjacent levels
    for a in range(1, m + 1):
        for b in range(1, m + 1):
            for kk in range(1, N):
                if wex(a, kk) and wex(b, kk + 1):
                    up = q * wv(a, kk) / wv(b, kk + 1)
                    dn = q * wv(b, kk + 1) / wv(a, kk)
                    if a < b:
                        val = val * (1 - up)
                    elif a > b:
                        val = val * (1 - dn)
                    val = val / (px(up) * px(dn))
    # v-v couplings
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            for kk in range(1, N):
                if vex(a, kk) and vex(b, kk + 1):
                    up = vv(a, kk) / (q * vv(b, kk + 1))
                    dn = vv(b, kk + 1) / (q * vv(a, kk))
                    if a < b:
                        val = val * (1 - dn)
                    elif a > b:
                        val = val * (1 - up)
                    val = val / (px(up) * px(dn))
    # w-v couplings
    for a in range(1, m + 1):
        for b in range(1, n + 1):
            for kk in range(1, N):
                if wex(a, kk) and vex(b, kk + 1):
                    val = val * theta(vv(b, kk + 1) / wv(a, kk), xN, t) / pxN
                if wex(a, kk + 1) and vex(b, kk):
                    val = val * theta(wv(a, kk + 1) / vv(b, kk), xN, t) / pxN
                if wex(a, kk) and vex(b, kk):
                    val = val * pxN**2 / (
                        theta(q * vv(b, kk) / wv(a, kk), xN, t) * theta(q * wv(a, kk) / vv(b, kk), xN, t)
                    )
    # same-level same-kind couplings
    for a in range(1, m + 1):
        for b in range(a + 1, m + 1):
            for kk in range(1, N):
                if wex(a, kk) and wex(b, kk):
                    r = wv(b, kk) / wv(a, kk)
                    val = val * theta(r, xN, t) / pxN
                    val = val * px(q**2 * xN / r) * px(q**2 * r)
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            for kk in range(1, N):
                if vex(a, kk) and vex(b, kk):
                    r = vv(a, kk) / vv(b, kk)
                    val = val * theta(r, xN, t) / pxN
                    val = val * px(q**-2 * r) * px(q**-2 * xN / r)

    # twist monomial and the lattice theta
    g = [None] * (N + 1)
    g[0] = ((-1.0 + 0.0j) ** ((m - n) * (N - 1))) ** -1
    gN_inv = q ** ((m - n) * (N + 1))
    for a in range(1, m + 1):
        gN_inv = gN_inv * zv[a - 1]
    for b in range(1, n + 1):
        gN_inv = gN_inv / uv[b - 1]
    g[N] = 1.0 / gN_inv
    for j in range(1, N):
        gj = complex(P.y[j - 1]) + 0.0j
        for a in range(1, m + 1):
            if eps[a - 1] + 1 <= j:
                gj = gj / wv(a, j)
        for b in range(1, n + 1):
            if mu[b - 1] + 1 <= j:
                gj = gj * vv(b, j)
        g[j] = gj
    if i >= 1:
        val = val * g[i]
    # the principal grading contributes x^{-sum m_j} on the root lattice,
    # so each lattice argument carries an extra 1/x
    args = [g[j - 1] ** -1 * g[j] ** 2 * g[j + 1] ** -1 / x for j in range(1, N)]
    val = val * theta_lattice(i, args, xN, N, t)
    return val


# -- rank-two contours ------------------------------------------------------


def _n2_requirements(eps, mu, S, P, lmax=6):
    """Prescribed point families for the rank-two trace contours.

    The v-contours are nested outermost, so their constraints are the fixed
    point families (the u-ladders and the pinch images of the w-ladders at
    odd q-powers); the inner w-contours see the v positions as points and
    carry ring constraints checked per node at run time.  Sides at each
    ladder base follow the x = 0 prescription validated by the residue
    engine; x^{+-2l} shifts continue them inward/outward.
    """
    q, x = P.q, P.x
    zv, uv = S.z(2), S.u(2)
    m, n = len(eps), len(mu)
    A2, B2 = _aux_sets(eps, mu, 2)
    out = {}
    x2 = x**2

    for a in A2:
        req = []
        for l in range(lmax):
            for b in range(1, m + 1):
                req.append(("point", q**4 * x2**l * zv[b - 1], +1))
                req.append(("point", q**2 * x2**-l * zv[b - 1], -1))
            for b in range(1, n + 1):
                if l >= 1:
                    req.append(("point", q**3 * x2**l * uv[b - 1], +1))
                    req.append(("point", q**3 * x2**-l * uv[b - 1], -1))
        for b in B2:
            for l in range(lmax):
                for sgn in (+1, -1):
                    req.append(("ring", (q**sgn * x2**l, ("v", b)), +1))
                    if l >= 1:
                        req.append(("ring", (q**sgn * x2**-l, ("v", b)), -1))
        out[("w", a)] = req
    for b in B2:
        req = []
        for l in range(lmax):
            for c in range(1, n + 1):
                req.append(("point", q**2 * x2**l * uv[c - 1], +1))
                req.append(("point", q**4 * x2**-l * uv[c - 1], -1))
            for a in range(1, m + 1):
                # pinch images of the w-ladders: odd q-powers of z_a
                for r in range(0, 6):
                    pt = q ** (2 * r + 1) * zv[a - 1]
                    if l == 0:
                        req.append(("point", pt, +1 if r >= 2 else -1))
                    else:
                        req.append(("point", pt * x2**l, +1))
                        req.append(("point", pt * x2**-l, -1))
        out[("v", b)] = req
    return out


def _n2_plan(eps, mu, S, P):
    """Radii (slot search over the point families) and correction data."""
    reqs = _n2_requirements(eps, mu, S, P)
    variables = list(reqs)
    if not variables:
        return [], {}, {}
    order = [v for v in variables if v[0] == "v"] + [v for v in variables if v[0] == "w"]

    def point_reqs(var):
        merged = {}
        for kind, payload, side in reqs[var]:
            if kind != "point" or abs(payload) == 0:
                continue
            key = (round(payload.real, 14), round(payload.imag, 14))
            merged[key] = (payload, side)
        return list(merged.values())

    best = None
    cand_lists = []
    for var in order:
        mags = sorted({abs(p) for p, _ in point_reqs(var)})
        slots = [mags[0] * 0.5]
        for lo, hi in zip(mags, mags[1:]):
            if hi / lo > 1.05:
                slots.append(math.sqrt(lo * hi))
        slots.append(mags[-1] * 2.0)
        cand_lists.append(slots)
    for combo in itertools.product(*cand_lists):
        radii = dict(zip(order, combo))
        ncorr = 0
        margin = float("inf")
        corr = {v: [] for v in order}
        for var in order:
            r = radii[var]
            for p, side in point_reqs(var):
                have = +1 if abs(p) < r else -1
                margin = min(margin, max(abs(p), r) / min(abs(p), r))
                if have != side:
                    corr[var].append((p, side))
                    ncorr += 1
        score = (ncorr, -margin)
        if best is None or score < best[0]:
            best = (score, radii, corr, margin)
    score, radii, corr, margin = best
    if margin < 1.08:
        raise ContourPinchError("no circle separation for the trace contours (|x| too large?)")
    rings = {var: [(pl[0], pl[1], sd) for k, pl, sd in reqs[var] if k == "ring"] for var in order}
    return order, radii, {"points": corr, "rings": rings}


def trace_component_n2(eps, mu, i, S: SpectralVars, P: ModelParams, t=DEFAULT_TRUNC, nodes=None):
    """Numerical weight-i trace component at N = 2 through the contour
    integral (components without auxiliary integrals evaluate directly)."""
    if P.N != 2:
        raise ValueError("trace_component_n2 requires N = 2")
    if not P.trace_domain_ok():
        raise ContourPinchError("|x| >= |q| : trace contours are pinched")
    if counts_of(eps, 2)[0] - counts_of(mu, 2)[0] != counts_of(eps, 2)[1] - counts_of(mu, 2)[1]:
        return 0.0 + 0.0j
    nodes = nodes or t.quad_nodes
    pref = trace_prefactor(eps, mu, i, S, P)
    A2, B2 = _aux_sets(eps, mu, 2)
    if not A2 and not B2:
        return pref * complex(trace_integrand(eps, mu, i, {}, S, P, t))
    order, radii, plan = _n2_plan(eps, mu, S, P)

    def radius_of(var):
        return radii[var]

    def corrections_of(var, env):
        r = radius_of(var)
        items = [(p, side) for p, side in plan["points"][var]]
        for mult, partner, side in plan["rings"][var]:
            p = mult * env[(partner[0], partner[1], 1)]
            have = +1 if abs(p) < r else -1
            if have != side:
                items.append((p, side))
        out = []
        locs = [p for p, _ in items]
        for p, side in items:
            dist = min([abs(abs(p) - r), abs(p) * 0.5] + [abs(p - o) for o in locs if abs(p - o) > 1e-12])
            out.append((p, side, 0.3 * dist))
        return out

    def integrand(env):
        return trace_integrand(eps, mu, i, env, S, P, t)

    qorder = [(k, f, 1) for (k, f) in order]
    val = nested_quadrature(
        qorder,
        lambda v: radius_of((v[0], v[1])),
        lambda v, env: corrections_of((v[0], v[1]), env),
        integrand,
        nodes=nodes,
        tiny_nodes=max(48, nodes // 4),
        measure="dlog",
    )
    return pref * val


def gbar_trace_n2(eps, mu, S: SpectralVars, P: ModelParams, t=DEFAULT_TRUNC, nodes=None):
    """Summed trace component at N = 2 (both highest weights)."""
    return sum(trace_component_n2(eps, mu, i, S, P, t, nodes) for i in range(2))


# -- rank-two closed forms ---------------------------------------------------


def example_closed_forms(which, S: SpectralVars, P: ModelParams, t=DEFAULT_TRUNC):
    """Printed rank-two closed forms.

    which=1: all-(letter 1) component for any n, general x and scalar twist;
    which=2: the (0,1|0,1) component at x = q^2, unit twist, n = 2;
    which='2det': the corresponding 2x2 block determinant.
    """
    q = P.q
    n = S.n
    if which == 1:
        x = P.x
        y = complex(P.y[0])
        val = qpoch(x**2, x**2, t)
        ratio = 1.0 + 0.0j
        for j in range(1, n + 1):
            val *= (S.xi[j - 1] / S.zeta[j - 1]) ** j
            ratio *= S.zeta[j - 1] / S.xi[j - 1]
        return val * theta(-y * ratio, x, t)
    if which in (2, "2det"):
        if n != 2:
            raise ValueError("the second closed form is for n = 2")
        x = q**2
        zv, uv = S.z(2), S.u(2)
        ratio = (S.xi[0] / S.zeta[0]) * (S.xi[1] / S.zeta[1])
        if which == 2:
            val = q * qpoch(q**4, q**4, t)
            val *= (S.xi[0] / S.zeta[0]) * (S.xi[1] / S.zeta[1])
            val *= theta(-q * ratio, q**2, t) / (uv[0] - q**2 * uv[1])
            val *= uv[1] * (1 - (S.zeta[0] * S.xi[0]) / (S.zeta[1] * S.xi[1]))
            return val
        val = -(q**2) * qpoch(q**4, q**4, t) ** 2
        for j in (1, 2):
            val *= (S.xi[j - 1] / S.zeta[j - 1]) ** (2 * j)
        val *= (zv[1] - q**2 * zv[0]) / (uv[0] - q**2 * uv[1])
        val *= theta(-q * ratio, q**2, t) ** 2
        return val
    raise ValueError("which must be 1, 2 or '2det'")


def example2_matrix(S: SpectralVars, P: ModelParams, t=DEFAULT_TRUNC):
    """Full 2x2 action on the mixed-letter block at x = q^2, unit twist:
    rows/columns ordered [(0,1), (1,0)]."""
    q = P.q
    zv, uv = S.z(2), S.u(2)
    ratio = (S.xi[0] / S.zeta[0]) * (S.xi[1] / S.zeta[1])
    common = qpoch(q**4, q**4, t)
    common *= (S.xi[0] / S.zeta[0]) * (S.xi[1] / S.zeta[1])
    common *= theta(-q * ratio, q**2, t) / (uv[0] - q**2 * uv[1]) * uv[1]
    diag = q * (1 - (S.zeta[0] * S.xi[0]) / (S.zeta[1] * S.xi[1]))
    off = -(S.xi[0] / S.xi[1]) * (1 - q**2 * (S.zeta[0] * S.xi[1]) / (S.zeta[1] * S.xi[0]))
    M = np.array([[diag, off], [off, diag]], dtype=complex) * common
    return M


def Q_solution(S: SpectralVars, k0, n, P: ModelParams, t=DEFAULT_TRUNC):
    """One solution of the rank-two determinant equation system at x = q^2,
    unit twist, on the block with k0 letters 0."""
    q = P.q
    zv, uv = S.z(2), S.u(2)
    b1 = math.comb(n - 2, k0 - 1) if 0 <= k0 - 1 <= n - 2 else 0
    b2 = math.comb(n, k0)
    first = 1.0 + 0.0j
    for j in range(1, n + 1):
        first *= (S.xi[j - 1] / S.zeta[j - 1]) ** (n - 1)
    for kk in range(n):
        for kp in range(kk + 1, n):
            first *= (zv[kp] - q**2 * zv[kk]) / (uv[kk] - q**2 * uv[kp])
    second = 1.0 + 0.0j
    ratio = 1.0 + 0.0j
    for j in range(1, n + 1):
        second *= (S.xi[j - 1] / S.zeta[j - 1]) ** (j - 1)
        ratio *= S.xi[j - 1] / S.zeta[j - 1]
    second *= theta(-ratio, q**2, t)
    return first**b1 * second**b2


def det_equation_residual(detfun, k0, n, S: SpectralVars, P: ModelParams, t=DEFAULT_TRUNC):
    """Max relative residual of the four rank-two determinant functional
    equations for a candidate block-determinant function detfun(zeta, xi)."""
    q = P.q
    b1 = math.comb(n - 2, k0 - 1) if 0 <= k0 - 1 <= n - 2 else 0
    b2 = math.comb(n, k0)
    x = P.x
    res = []

    def rel(a, b):
        return abs(a - b) / (abs(a) + abs(b) + 1e-300)

    base = detfun(S.zeta, S.xi)
    for i in range(n - 1):
        zsw = list(S.zeta)
        zsw[i], zsw[i + 1] = zsw[i + 1], zsw[i]
        zi, zi1 = S.zeta[i] ** 2, S.zeta[i + 1] ** 2
        pref = (S.zeta[i + 1] / S.zeta[i]) ** b2 * ((zi - q**2 * zi1) / (zi1 - q**2 * zi)) ** b1
        res.append(rel(pref * base, detfun(tuple(zsw), S.xi)))
        xsw = list(S.xi)
        xsw[i], xsw[i + 1] = xsw[i + 1], xsw[i]
        ui, ui1 = S.xi[i] ** 2, S.xi[i + 1] ** 2
        pref = (S.xi[i] / S.xi[i + 1]) ** b2 * ((ui - q**2 * ui1) / (ui1 - q**2 * ui)) ** b1
        res.append(rel(pref * base, detfun(S.zeta, tuple(xsw))))
    zrot = S.zeta[1:] + (S.zeta[0],)
    pref = (-1.0) ** ((n - 1) * b1)
    for j in range(n):
        pref *= (S.zeta[0] / S.xi[j]) ** b2
    lhs = detfun((S.zeta[0] / x,) + S.zeta[1:], S.xi)
    res.append(rel(lhs, pref * detfun(zrot, S.xi)))
    xrot = S.xi[1:] + (S.xi[0],)
    pref = (-1.0) ** ((n - 1) * b1)
    for j in range(n):
        pref *= (S.zeta[j] / S.xi[0]) ** b2
    lhs = detfun(S.zeta, (x * S.xi[0],) + S.xi[1:])
    res.append(rel(lhs, pref * detfun(S.zeta, xrot)))
    return max(res)


def theta_x4_recombination_residual(X, x, tpar, t=DEFAULT_TRUNC):
    """Residual of the quarter-base recombination
    theta_{x^4}(-x X^2) + (-1)^t X theta_{x^4}(-x^3 X^2) = theta_x((-1)^{t+1} X)."""
    lhs = theta(-x * X**2, x**4, t) + (-1.0) ** tpar * X * theta(-(x**3) * X**2, x**4, t)
    rhs = theta((-1.0) ** (tpar + 1) * X, x, t)
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-300)
