"""Integral formula for x = 0 matrix elements and its contour evaluation.

The integrand is a product of factors linear in every integration variable,
so iterated contour integration closes on sums of such products: a residue
substitutes one variable by a monomial in the remaining ones.  Each factor
carries the inside/outside orientation of its poles, assigned from the
contour prescription when the integrand is built and inherited through
substitutions.  Poles that arise with no assigned orientation are classified
by the family hierarchy (w-contours enclose the v/u ladders, v-contours
exclude the w/z ladders; within one kind, higher family index lies inside)
or, within a single ladder, by magnitude against the ladder backbone
q^{k+1} z_a with a |q|^(1/2) safety margin.

Evaluation routes, mutually independent:
  * residue_eval        - closed substitution recipe (minimal components),
  * contour_integrate_x0 - successive residues driven only by Cauchy's
                           theorem and the orientation data (any ordering),
  * quadrature_x0        - nested circles with correction residues (small
                           variable counts; contours.py).
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field

from .core import ModelParams, SpectralVars, counts_of, minimal_eps
from .exactfield import QC, mag2
from .matelem import WeightBalance, _half, wcond_holds

__all__ = [
    "DegeneratePointError",
    "AmbiguousContourError",
    "Factor",
    "IntegrandX0",
    "build_integrand_x0",
    "constant_Cbar",
    "integrand_x0_value",
    "integrand_homogeneity_degree",
    "residue_eval",
    "contour_integrate_x0",
]

UNIT = -1
INSIDE, OUTSIDE = 1, -1


class DegeneratePointError(ArithmeticError):
    """A residue substitution landed on another factor's pole."""


class AmbiguousContourError(ArithmeticError):
    """A pole could not be classified against the contour prescription."""


@dataclass(frozen=True)
class Factor:
    """(ca * T[ra] + cb * T[rb]) ** exp; refs index the variable/const table."""

    exp: int
    ca: object
    ra: int
    cb: object
    rb: int
    orient: tuple = ()  # ((var_ref, +-1), ...)

    def side(self, ref):
        """(coef of ref, coef of the other part, other ref) or None."""
        if self.ra == ref and self.ca != 0:
            return self.ca, self.cb, self.rb
        if self.rb == ref and self.cb != 0:
            return self.cb, self.ca, self.ra
        return None

    def orientation_of(self, ref):
        for r, o in self.orient:
            if r == ref:
                return o
        return None


@dataclass
class IntegrandX0:
    """Built integrand: ordered variables, tagged constants, factor list."""

    N: int
    nvars: int
    var_tags: list  # (kind, fam, level)
    const_vals: list
    const_tags: list
    factors: list
    coeff: object  # scalar from the per-factor sign conventions
    prefactor: object  # full zeta/xi monomial prefactor incl. the constant
    q: object
    base_mag: dict = field(default_factory=dict)
    ladder_idx: set = field(default_factory=set)

    def ref_tag(self, ref):
        if ref == UNIT:
            return None
        if ref < self.nvars:
            return self.var_tags[ref][:2]
        return self.const_tags[ref - self.nvars]

    def ref_mag(self, ref):
        """Contour radius for variables (graded ladder backbone), |value|
        for constants.  The w-radii are pushed out and the v-radii pulled in
        by half a |q|-power per level so that every intra-ladder neighbor
        pole falls strictly on its prescribed side of the circle."""
        if ref == UNIT:
            return 1.0
        if ref < self.nvars:
            kind, fam, level = self.var_tags[ref]
            absq = abs(complex(self.q))
            skew = absq ** (-0.5 * level) if kind == "w" else absq ** (0.5 * level)
            return absq ** (level + 1) * skew * self.base_mag[(kind, fam)]
        return abs(complex(self.const_vals[ref - self.nvars]))

    def const_value(self, ref):
        if ref == UNIT:
            return 1
        if ref < self.nvars:
            raise ValueError("ref is an integration variable")
        return self.const_vals[ref - self.nvars]


def constant_Cbar(eps, mu, i, j, q, N):
    """Scalar constant in front of the integral."""
    m, n = len(eps), len(mu)
    k, l = counts_of(eps, N), counts_of(mu, N)
    r0 = k[N - 1] - l[N - 1]
    s1 = 0
    for a in range(1, m + 1):
        s = (i - 1 + a) % N
        s1 += (N - s) * (N - 1 - s)
    for b in range(1, n + 1):
        s = (j - 1 + b) % N
        s1 += (N - s) * (N - 1 - s)
    s1 = _half(s1)
    s2 = -i * r0 * (N - 1) + (1 if j == 0 else 0) * (n + m) * (N - 1) + (N * (N + 1) // 2 + 1) * (k[0] + l[0])
    s3 = 0
    if 1 <= i < j:
        s3 += _half((j - i) * (N - j) * (N - j - 1))
    if i > j >= 1:
        s3 += _half((i - j) * (N - i) * (N - 1 + i - 2 * j))
    s4 = _half((k[0] + l[0]) * sum((N - 1 - r) * (N + 2 + r) * (k[r] + l[r]) for r in range(1, N)))
    e1 = _half((N + 1) * ((i - j) * (i - j - 1) + r0 * r0 * N * (N - 1) + 2 * j * r0 * N - 2 * i * r0 * (N - 1)))
    sign = -1 if (s1 + s2 + s3 + s4) % 2 else 1
    return sign * q**e1


def _monomial_prefactor(eps, mu, i, j, q, zeta_vals, xi_vals, N):
    m, n = len(eps), len(mu)
    val = constant_Cbar(eps, mu, i, j, q, N)
    for a in range(1, m + 1):
        val = val * zeta_vals[a - 1] ** ((N - 1) * (m - n + 1 - a) + j - eps[a - 1])
    for b in range(1, n + 1):
        val = val * xi_vals[b - 1] ** ((N - 1) * (b - 1) - j + mu[b - 1])
    return val


def build_integrand_x0(eps, mu, i, j, q, zeta_vals, xi_vals, N):
    """Assemble the x = 0 integrand for component (eps, mu) and highest
    weights (i, j).  Works over complex or exact Gaussian-rational values."""
    eps, mu = tuple(eps), tuple(mu)
    m, n = len(eps), len(mu)
    one = q / q
    z = [zv**N for zv in zeta_vals]
    u = [xv**N for xv in xi_vals]

    var_tags, var_index = [], {}
    for a in range(1, m + 1):
        for k in range(eps[a - 1] + 1, N):
            var_index[("w", a, k)] = len(var_tags)
            var_tags.append(("w", a, k))
    for b in range(1, n + 1):
        for k in range(mu[b - 1] + 1, N):
            var_index[("v", b, k)] = len(var_tags)
            var_tags.append(("v", b, k))
    nvars = len(var_tags)

    const_vals, const_tags, const_index = [], [], {}

    def wref(a, k):
        if k <= N - 1:
            return var_index[("w", a, k)]
        key = ("w", a)
        if key not in const_index:
            const_index[key] = nvars + len(const_vals)
            const_vals.append(q ** (N + 1) * z[a - 1])
            const_tags.append(key)
        return const_index[key]

    def vref(b, k):
        if k <= N - 1:
            return var_index[("v", b, k)]
        key = ("v", b)
        if key not in const_index:
            const_index[key] = nvars + len(const_vals)
            const_vals.append(q ** (N + 1) * u[b - 1])
            const_tags.append(key)
        return const_index[key]

    def w_exists(a, k):
        return eps[a - 1] + 1 <= k <= N

    def v_exists(b, k):
        return mu[b - 1] + 1 <= k <= N

    factors = []
    ladder_idx = set()
    coeff = one
    zero = 0 * one

    def add(exp, ca, ra, cb, rb, orient=(), ladder=False):
        if ladder:
            ladder_idx.add(len(factors))
        factors.append(Factor(exp, ca, ra, cb, rb, tuple(p for p in orient if p is not None)))

    def ori(ref, flag):
        return (ref, flag) if 0 <= ref < nvars else None

    # leading monomials of the weight-j insertion
    for a in range(1, m + 1):
        if eps[a - 1] <= j - 1:
            add(-1, one, wref(a, j), zero, UNIT)
    for b in range(1, n + 1):
        if mu[b - 1] <= j - 1:
            add(+1, one, vref(b, j), zero, UNIT)

    # w self-ladders: (q^{-1}-q) w_k / [(w_k - q^{-1} w_{k+1})(w_k - q w_{k+1})]
    for a in range(1, m + 1):
        for k in range(eps[a - 1] + 1, N):
            lo, hi = wref(a, k), wref(a, k + 1)
            add(+1, one / q - q, lo, zero, UNIT, ladder=True)
            add(-1, one, lo, -(one / q), hi, (ori(lo, OUTSIDE), ori(hi, INSIDE)), ladder=True)
            add(-1, one, lo, -q, hi, (ori(lo, INSIDE), ori(hi, OUTSIDE)), ladder=True)

    # v self-ladders: (q^{-1}-q) v_{k+1} / [(v_k - q^{-1} v_{k+1})(v_k - q v_{k+1})]
    for b in range(1, n + 1):
        for k in range(mu[b - 1] + 1, N):
            lo, hi = vref(b, k), vref(b, k + 1)
            add(+1, one / q - q, hi, zero, UNIT, ladder=True)
            add(-1, one, lo, -(one / q), hi, (ori(lo, INSIDE), ori(hi, OUTSIDE)), ladder=True)
            add(-1, one, lo, -q, hi, (ori(lo, OUTSIDE), ori(hi, INSIDE)), ladder=True)

    # w-w cross factors (a < b)
    for a in range(1, m + 1):
        for b in range(a + 1, m + 1):
            for k in range(1, N + 1):  # -1/(w^{(a)}_k - q w^{(b)}_{k-1})
                if w_exists(a, k) and w_exists(b, k - 1):
                    ra, rb = wref(a, k), wref(b, k - 1)
                    coeff = coeff * (-one)
                    add(-1, one, ra, -q, rb, (ori(ra, INSIDE), ori(rb, OUTSIDE)))
            for k in range(1, N):  # 1/(w^{(a)}_k - q w^{(b)}_{k+1})
                if w_exists(a, k) and w_exists(b, k + 1):
                    ra, rb = wref(a, k), wref(b, k + 1)
                    add(-1, one, ra, -q, rb, (ori(ra, INSIDE), ori(rb, OUTSIDE)))
            for k in range(1, N):  # (w^{(a)}_k - q^2 w^{(b)}_k)(w^{(a)}_k - w^{(b)}_k)
                if w_exists(a, k) and w_exists(b, k):
                    ra, rb = wref(a, k), wref(b, k)
                    add(+1, one, ra, -(q**2), rb)
                    add(+1, one, ra, -one, rb)

    # v-v cross factors (a < b)
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            for k in range(1, N + 1):  # -1/(v^{(b)}_k - q^{-1} v^{(a)}_{k-1})
                if v_exists(b, k) and v_exists(a, k - 1):
                    ra, rb = vref(b, k), vref(a, k - 1)
                    coeff = coeff * (-one)
                    add(-1, one, ra, -(one / q), rb, (ori(ra, INSIDE), ori(rb, OUTSIDE)))
            for k in range(1, N):  # 1/(v^{(b)}_k - q^{-1} v^{(a)}_{k+1})
                if v_exists(b, k) and v_exists(a, k + 1):
                    ra, rb = vref(b, k), vref(a, k + 1)
                    add(-1, one, ra, -(one / q), rb, (ori(ra, INSIDE), ori(rb, OUTSIDE)))
            for k in range(1, N):  # (v^{(b)}_k - q^{-2} v^{(a)}_k)(v^{(b)}_k - v^{(a)}_k)
                if v_exists(b, k) and v_exists(a, k):
                    ra, rb = vref(b, k), vref(a, k)
                    add(+1, one, ra, -(one / q**2), rb)
                    add(+1, one, ra, -one, rb)

    # w-v cross factors (all a, b)
    for a in range(1, m + 1):
        for b in range(1, n + 1):
            for k in range(1, N):  # (w^{(a)}_k - v^{(b)}_{k+1})
                if w_exists(a, k) and v_exists(b, k + 1):
                    add(+1, one, wref(a, k), -one, vref(b, k + 1))
            for k in range(1, N + 1):  # (v^{(b)}_{k-1} - w^{(a)}_k)
                if v_exists(b, k - 1) and w_exists(a, k):
                    add(+1, one, vref(b, k - 1), -one, wref(a, k))
            for k in range(1, N):  # 1/[(w_k - q v_k)(w_k - q^{-1} v_k)]
                if w_exists(a, k) and v_exists(b, k):
                    ra, rb = wref(a, k), vref(b, k)
                    add(-1, one, ra, -q, rb, (ori(ra, INSIDE), ori(rb, OUTSIDE)))
                    add(-1, one, ra, -(one / q), rb, (ori(ra, INSIDE), ori(rb, OUTSIDE)))

    base_mag = {}
    for a in range(1, m + 1):
        base_mag[("w", a)] = abs(complex(z[a - 1]))
    for b in range(1, n + 1):
        base_mag[("v", b)] = abs(complex(u[b - 1]))
    return IntegrandX0(
        N=N,
        nvars=nvars,
        var_tags=var_tags,
        const_vals=const_vals,
        const_tags=const_tags,
        factors=factors,
        coeff=coeff,
        prefactor=_monomial_prefactor(eps, mu, i, j, q, zeta_vals, xi_vals, N),
        q=q,
        base_mag=base_mag,
        ladder_idx=ladder_idx,
    )


def integrand_x0_value(ig: IntegrandX0, env):
    """Evaluate coeff * prod(factors) at a full variable assignment
    env[(kind, fam, level)] -> value.  The prefactor is not included."""
    byref = {}
    for ref, tag in enumerate(ig.var_tags):
        byref[ref] = env[tag]
    val = ig.coeff

    def look(ref):
        if ref == UNIT:
            return 1
        if ref < ig.nvars:
            return byref[ref]
        return ig.const_vals[ref - ig.nvars]

    for f in ig.factors:
        base = f.ca * look(f.ra) + f.cb * look(f.rb)
        if f.exp < 0 and mag2(base) == 0:
            raise DegeneratePointError("integrand evaluated on a pole")
        val = val * base**f.exp
    return val


def integrand_homogeneity_degree(ig: IntegrandX0):
    """Power of lambda^N picked up by coeff*prod(factors) when z, u, w, v
    are all scaled by lambda^N (exponent bookkeeping guard)."""
    return sum(f.exp for f in ig.factors)


def residue_eval(W: WeightBalance, S: SpectralVars = None, P: ModelParams = None, q=None, zeta_vals=None, xi_vals=None):
    """Closed evaluation of the integral by the successive substitution
    w^{(a)}_k -> q^{k+1} z_a, v^{(b)}_k -> q^{k+1} u_b (minimal components):
    every self-ladder triple contributes q^{-1} (w side) or 1 (v side), the
    outside w-residues contribute the overall sign."""
    N = W.N
    q = P.q if q is None else q
    zeta_vals = S.zeta if zeta_vals is None else zeta_vals
    xi_vals = S.xi if xi_vals is None else xi_vals
    zero = 0 * q
    if not W.balanced():
        return zero
    eps, mu = minimal_eps(W.k), minimal_eps(W.l)
    ig = build_integrand_x0(eps, mu, W.i, W.j, q, zeta_vals, xi_vals, N)
    z = [zv**N for zv in zeta_vals]
    u = [xv**N for xv in xi_vals]

    def backbone(tag):
        kind, fam, level = tag
        base = z[fam - 1] if kind == "w" else u[fam - 1]
        return q ** (level + 1) * base

    env = {tag: backbone(tag) for tag in ig.var_tags}
    npairs_w = sum(N - 1 - e for e in eps)
    val = ig.coeff * q ** (-npairs_w)

    def look(ref):
        if ref == UNIT:
            return 1
        if ref < ig.nvars:
            return env[ig.var_tags[ref]]
        return ig.const_vals[ref - ig.nvars]

    for idx, f in enumerate(ig.factors):
        if idx in ig.ladder_idx:
            continue
        base = f.ca * look(f.ra) + f.cb * look(f.rb)
        if f.exp < 0 and mag2(base) == 0:
            raise DegeneratePointError("substitution landed on a pole")
        val = val * base**f.exp
    sign = (-1) ** (sum((N - 1 - r) * W.k[r] for r in range(N)) % 2)
    return ig.prefactor * sign * val


def _qpower_of(s, q):
    """Integer p with |s| = |q|^p, or None."""
    a = abs(complex(s))
    aq = abs(complex(q))
    if a == 0:
        return None
    p = round(math.log(a) / math.log(aq))
    if abs(a - aq**p) <= 1e-9 * a:
        return p
    return None


def _classify(ig: IntegrandX0, xref, s, ro, f: Factor):
    """Inside/outside of a pole of variable `xref` at location s*T[ro].

    Priority: the factor's own orientation (assigned at construction from
    the contour lists, inherited through substitutions); then the origin
    rule; then kind/family hierarchy; then the same-ladder q-power rules;
    magnitude with a |q|^(1/2) margin decides the generic cases.
    """
    if ro == UNIT and mag2(s) == 0:
        return INSIDE  # pole at the origin: the contour circles the origin
    kind_x, fam_x, lvl_x = ig.var_tags[xref]
    tag_loc = ig.ref_tag(ro)
    ratio = abs(complex(s)) * ig.ref_mag(ro) / ig.ref_mag(xref)

    def by_circle():
        if abs(ratio - 1.0) < 1e-10:
            raise AmbiguousContourError(
                f"pole of {ig.var_tags[xref]} lies on its contour circle (tag {tag_loc})"
            )
        return INSIDE if ratio < 1.0 else OUTSIDE

    if tag_loc is None:
        return by_circle()
    p = _qpower_of(s, ig.q)
    if p is None:
        return by_circle()
    # normalize the shift to the variable's own ladder level:
    # q^p * chain(level l') = q^{jt} * chain(level l_x) with jt = p + l' - l_x
    lvl_o = ig.var_tags[ro][2] if ro < ig.nvars else ig.N
    jt = p + (lvl_o - lvl_x)
    if tag_loc[0] != kind_x:
        # listed reach: w-contours enclose the q^{+-1}-shifted v ladder,
        # v-contours exclude the q^{+-1}-shifted w ladder; deeper by circle
        if abs(jt) <= 1:
            return INSIDE if kind_x == "w" else OUTSIDE
        return by_circle()
    if tag_loc[1] != fam_x:
        # nesting by family: higher w-families lie inside lower w-contours,
        # higher v-families lie outside lower v-contours
        if abs(jt) <= 2:
            if kind_x == "w":
                return INSIDE if tag_loc[1] > fam_x else OUTSIDE
            return INSIDE if tag_loc[1] < fam_x else OUTSIDE
        return by_circle()
    # same ladder: the q-shift direction decides, oppositely for w and v;
    # unshifted chain points fall back to the level-graded circle radii
    if p == 0:
        return by_circle()
    if kind_x == "w":
        return INSIDE if p > 0 else OUTSIDE
    return INSIDE if p < 0 else OUTSIDE


def _substitute(f: Factor, xref, s, ro):
    """Replace T[xref] -> s * T[ro] inside the factor."""
    ca, ra, cb, rb = f.ca, f.ra, f.cb, f.rb
    if ra == xref:
        ca, ra = ca * s, ro
    if rb == xref:
        cb, rb = cb * s, ro
    if ra == rb:
        ca, cb, rb = ca + cb, 0 * ca, UNIT
    orient = tuple((r, o) for r, o in f.orient if r != xref)
    return Factor(f.exp, ca, ra, cb, rb, orient)


def successive_residues(ig: IntegrandX0, collision_tol=1e-9, route='auto', trace=None):
    """Integrate out all variables in ladder order by residue sums.

    Per term and variable the cheaper route is taken: sum of inside poles,
    or minus the outside poles (plus the explicit residue at infinity when
    the degree is exactly -1; for degree >= 0 the inside route is forced).
    """
    exact = isinstance(ig.q, QC)

    def is_const(ref):
        return ref == UNIT or ref >= ig.nvars

    def fold(coeff, nf):
        """Return (coeff', factor-or-None); folds fully-constant factors."""
        if not (is_const(nf.ra) and is_const(nf.rb)):
            return coeff, nf
        base = nf.ca * ig.const_value(nf.ra) + nf.cb * ig.const_value(nf.rb)
        if mag2(base) == 0:
            if nf.exp < 0:
                raise DegeneratePointError("substitution hit a pole")
            return 0 * coeff, None
        return coeff * base**nf.exp, None

    terms = [(ig.coeff, tuple(ig.factors))]
    for xref in range(ig.nvars):
        new_terms = []
        for coeff, facs in terms:
            if mag2(coeff) == 0:
                continue
            xfacs, rest = [], []
            for f in facs:
                (xfacs if f.side(xref) else rest).append(f)
            if not xfacs:
                continue  # plain measure: a variable-free integrand integrates to 0

            def root_of(f):
                cx, co, ro = f.side(xref)
                if co == 0:
                    return 0 * cx, UNIT
                return -co / cx, ro

            def same_root(pa, pb):
                (sa, ra_), (sb, rb_) = pa, pb
                if ra_ != rb_:
                    return False
                if exact:
                    return sa == sb
                scale = max(abs(complex(sa)), abs(complex(sb)), 1e-300)
                return abs(complex(sa) - complex(sb)) < collision_tol * scale

            # cancel numerator/denominator pairs sharing a root (the residue
            # flow produces them; the pole is removable there)
            changed = True
            while changed:
                changed = False
                nums = [f for f in xfacs if f.exp == 1]
                dens = [f for f in xfacs if f.exp == -1]
                for fn in nums:
                    for fd in dens:
                        if same_root(root_of(fn), root_of(fd)):
                            cn, _, _ = fn.side(xref)
                            cd, _, _ = fd.side(xref)
                            coeff = coeff * (cn / cd)
                            xfacs = [f for f in xfacs if f is not fn and f is not fd]
                            changed = True
                            break
                    if changed:
                        break
            if not xfacs:
                continue

            deg = 0
            poles = []  # (s, r, factor, multiplicity)
            for f in xfacs:
                cx, co, ro = f.side(xref)
                deg += f.exp
                if f.exp >= 0:
                    continue
                if f.exp <= -3:
                    raise DegeneratePointError("pole of order three or higher in one factor")
                s, r = root_of(f)
                poles.append((s, r, f, -f.exp))
            # group by root and classify each root once
            groups = []  # [(s, r), [(f, mult), ...], side]
            for s, r, f, mult in poles:
                for g in groups:
                    if same_root((s, r), g[0]):
                        g[1].append((f, mult))
                        break
                else:
                    side = _classify(ig, xref, s, r, f)
                    if trace is not None:
                        trace.append((xref, s, r, side))
                    groups.append([(s, r), [(f, mult)], side])
            inside = [g for g in groups if g[2] == INSIDE]
            outside = [g for g in groups if g[2] == OUTSIDE]

            def clean(gr):
                return all(sum(m for _, m in g[1]) <= 2 for g in gr)

            n_in = sum(len(g[1]) for g in inside)
            n_out = sum(len(g[1]) for g in outside)
            if route == "inside":
                use_outside = False
            else:
                use_outside = (deg <= -2 and n_out < n_in) or (deg == -1 and n_out + 1 < n_in)
            chosen = outside if use_outside else inside
            if not clean(chosen):
                alt = inside if use_outside else outside
                if clean(alt) and (use_outside or deg <= -1):
                    chosen, use_outside = alt, not use_outside
                else:
                    raise DegeneratePointError("pole of order three or higher")
            route_sign = -1 if use_outside else 1
            for (s, r), fgroup, _side in chosen:
                total_mult = sum(m for _, m in fgroup)
                gset = [f for f, _ in fgroup]
                if total_mult == 2:
                    cprod = coeff * route_sign
                    for f, m in fgroup:
                        cf, _, _ = f.side(xref)
                        cprod = cprod / cf**m
                    others = [f for f in xfacs if all(f is not gf for gf in gset)]
                    for g in others:
                        cg = g.side(xref)[0]
                        piece_coeff = cprod * g.exp * cg
                        new_facs = list(rest)
                        dead = False
                        for f in others:
                            nf = _substitute(f, xref, s, r)
                            if f is g:
                                nf = Factor(nf.exp - 1, nf.ca, nf.ra, nf.cb, nf.rb, nf.orient)
                            piece_coeff, kept = fold(piece_coeff, nf)
                            if kept is not None:
                                new_facs.append(kept)
                            elif mag2(piece_coeff) == 0:
                                dead = True
                                break
                        if not dead:
                            new_terms.append((piece_coeff, tuple(new_facs)))
                    continue
                f0 = gset[0]
                cx, _, _ = f0.side(xref)
                new_coeff = coeff * route_sign / cx
                new_facs = list(rest)
                dead = False
                for f in xfacs:
                    if f is f0:
                        continue
                    new_coeff, kept = fold(new_coeff, _substitute(f, xref, s, r))
                    if kept is not None:
                        new_facs.append(kept)
                    elif mag2(new_coeff) == 0:
                        dead = True
                        break
                if not dead:
                    new_terms.append((new_coeff, tuple(new_facs)))
            if use_outside and deg == -1:
                # minus the residue at infinity: + (leading coefficient term)
                lead = coeff
                for f in xfacs:
                    cx, _, _ = f.side(xref)
                    lead = lead * cx**f.exp
                new_terms.append((lead, tuple(rest)))
        terms = new_terms

    total = 0 * ig.coeff
    for coeff, facs in terms:
        val = coeff
        for f in facs:
            base = f.ca * ig.const_value(f.ra) + f.cb * ig.const_value(f.rb)
            if f.exp < 0 and mag2(base) == 0:
                raise DegeneratePointError("final evaluation hit a pole")
            val = val * base**f.exp
        total = total + val
    return total


def contour_integrate_x0(
    eps,
    mu,
    i,
    j,
    S: SpectralVars = None,
    P: ModelParams = None,
    engine="residues",
    q=None,
    zeta_vals=None,
    xi_vals=None,
    nodes=None,
    route="auto",
):
    """Contour evaluation of the x = 0 matrix-element integral for an
    arbitrary component ordering (eps, mu).

    engine='residues': successive-residue engine (any number of variables;
    exact when fed QC values).  engine='quadrature': nested circle
    quadrature with correction residues (small cases; see contours.py).
    """
    if P is not None:
        N = P.N
        q = P.q if q is None else q
    else:
        N = max(max(eps, default=0), max(mu, default=0), i, j) + 1
    zeta_vals = S.zeta if zeta_vals is None else zeta_vals
    xi_vals = S.xi if xi_vals is None else xi_vals
    k, l = counts_of(eps, N), counts_of(mu, N)
    if not wcond_holds(N, i, j, k, l):
        return 0 * q
    if engine == "quadrature":
        from .contours import quadrature_x0

        return quadrature_x0(eps, mu, i, j, q, zeta_vals, xi_vals, N, nodes=nodes)
    if engine != "residues":
        raise ValueError("engine must be 'residues' or 'quadrature'")
    ig = build_integrand_x0(eps, mu, i, j, q, zeta_vals, xi_vals, N)
    return ig.prefactor * successive_residues(ig, route=route)
