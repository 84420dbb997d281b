"""Nested circle quadrature with correction residues.

A prescribed contour that cannot be realized as an origin-centered circle
(the chains force some larger-modulus points inside and smaller ones
outside) is evaluated as a circle plus explicit corrections: a missed
required-inside pole contributes +(tiny-circle residue), a wrongly enclosed
required-outside pole contributes -(tiny-circle residue).  Corrections are
just extra node sets, so they nest like ordinary quadrature nodes; they are
only admissible when the pole location is computable at that nesting level,
i.e. references constants or outer variables.
"""

from __future__ import annotations

import math

import numpy as np

from .residues import (
    INSIDE,
    OUTSIDE,
    UNIT,
    AmbiguousContourError,
    IntegrandX0,
    _classify,
    build_integrand_x0,
    successive_residues,
)

__all__ = ["QuadratureUnavailableError", "nested_quadrature", "quadrature_x0"]


class QuadratureUnavailableError(RuntimeError):
    """No admissible circle/correction plan exists for this integrand."""


def _circle_nodes(nodes):
    return np.exp(2j * np.pi * np.arange(nodes) / nodes)


def nested_quadrature(order, radius_of, corrections_of, integrand, nodes=128, tiny_nodes=64, measure="plain"):
    """Iterated contour integral over the variables in `order` (outermost
    first).  radius_of(name) -> circle radius; corrections_of(name, env) ->
    list of (point, sign); integrand(env) -> value, broadcasting over numpy
    arrays in the innermost slot.  measure 'plain' integrates dX/(2 pi i),
    'dlog' integrates dX/(2 pi i X)."""
    th = _circle_nodes(nodes)
    th_tiny = _circle_nodes(tiny_nodes)

    def level(idx, env):
        name = order[idx]
        total = 0.0 + 0.0j
        plans = [(None, radius_of(name) * th, 1)]
        for entry in corrections_of(name, env):
            if len(entry) == 3:
                point, sign, delta = entry
            else:
                point, sign = entry
                delta = 0.25 * min(abs(point), abs(abs(point) - radius_of(name)))
            plans.append((point, point + delta * th_tiny, sign))
        for center, xs, sign in plans:
            if idx == len(order) - 1:
                env2 = dict(env)
                env2[name] = xs
                vals = integrand(env2)
            else:
                vals = np.array([level(idx + 1, {**env, name: x}) for x in xs])
            if measure == "plain":
                jac = xs if center is None else xs - center
            else:
                jac = np.ones_like(xs) if center is None else (xs - center) / xs
            total += sign * np.mean(jac * vals)
        return total

    return level(0, {})


def quadrature_x0(eps, mu, i, j, q, zeta_vals, xi_vals, N, nodes=None, tiny_nodes=64):
    """Circle-quadrature evaluation of the x = 0 integral (small cases).

    Variables nest in ladder order with the w chains outermost.  The plan is
    feasibility-checked: every factor pole must either fall naturally on its
    prescribed side of the circles or admit a correction whose location is
    computable at its nesting level.
    """
    nodes = nodes or 128
    ig = build_integrand_x0(eps, mu, i, j, complex(q), [complex(z) for z in zeta_vals], [complex(x) for x in xi_vals], N)
    nv = ig.nvars
    if nv == 0:
        val = ig.coeff
        for f in ig.factors:
            base = f.ca * ig.const_value(f.ra) + f.cb * ig.const_value(f.rb)
            val = val * base**f.exp
        return ig.prefactor * val
    if nv > 4:
        raise QuadratureUnavailableError("too many variables for dense quadrature")

    # the ladder order integrates first, so it is innermost: the outermost-
    # first nesting order is its reverse
    order = list(reversed(range(nv)))
    pos = {ref: n for n, ref in enumerate(order)}

    # collect the pole requirements by tracing the residue flow: every pole
    # of every partially integrated stage, with its prescribed side
    tr = []
    successive_residues(ig, trace=tr)
    seen = set()
    requirements = []
    for ref, s, ro, need in tr:
        key = (ref, ro, round(complex(s).real, 12), round(complex(s).imag, 12))
        if key in seen:
            continue
        seen.add(key)
        requirements.append((ref, complex(s), ro, need))

    # candidate radii per variable: slot midpoints between the magnitudes of
    # the constant-located requirement points, bracketing the backbone
    def candidates(ref):
        mags = sorted(
            {abs(s) * abs(ig.const_vals[ro - nv]) for r2, s, ro, _ in requirements if r2 == ref and ro >= nv}
            | {abs(s) for r2, s, ro, _ in requirements if r2 == ref and ro == UNIT and abs(s) > 0}
            | {ig.ref_mag(ref)}
        )
        slots = [mags[0] * 0.45]
        for a, b in zip(mags, mags[1:]):
            slots.append(math.sqrt(a * b))
        slots.append(mags[-1] * 2.2)
        return slots

    import itertools as _it

    best = None
    cand_lists = [candidates(r) for r in order]
    for combo in _it.product(*cand_lists):
        radii_try = dict(zip(order, combo))
        ok = True
        ncorr = 0
        corr = {ref: [] for ref in order}
        margin = float("inf")
        for ref, s, ro, need in requirements:
            if ro == UNIT or ro >= nv:
                locmag = abs(s) * (1.0 if ro == UNIT else abs(ig.const_vals[ro - nv]))
                if locmag == 0:
                    continue  # origin pole is inside any circle
                have = INSIDE if locmag < radii_try[ref] else OUTSIDE
                margin = min(margin, max(locmag, radii_try[ref]) / min(locmag, radii_try[ref]))
                if need != have:
                    corr[ref].append((s, ro, 1 if need == INSIDE else -1))
                    ncorr += 1
            else:
                locmag = abs(s) * radii_try[ro]
                have = INSIDE if locmag < radii_try[ref] else OUTSIDE
                margin = min(margin, max(locmag, radii_try[ref]) / min(locmag, radii_try[ref]))
                if need == have:
                    continue
                if pos[ro] < pos[ref]:
                    corr[ref].append((s, ro, 1 if need == INSIDE else -1))
                    ncorr += 1
                else:
                    ok = False
                    break
        if ok:
            score = (ncorr, -margin)
            if best is None or score < best[0]:
                best = (score, radii_try, corr, margin)
    if best is None:
        raise QuadratureUnavailableError("no admissible radius assignment for this component")
    _, radii, plans, plan_margin = best
    if plan_margin < 1.15:
        raise QuadratureUnavailableError(f"contour margins too thin for quadrature ({plan_margin:.3f})")

    # all singular locations, for safe tiny-circle radii: fixed points and
    # origin-centered rings traced by variable-referencing poles
    sing_points = {ref: [] for ref in order}
    sing_rings = {ref: [] for ref in order}
    for ref, s, ro, _need in requirements:
        if ro == UNIT:
            if abs(s) > 0:
                sing_rings[ref].append(abs(s))
        elif ro >= nv:
            sing_points[ref].append(s * ig.const_vals[ro - nv])
        else:
            sing_rings[ref].append(abs(s) * radii[ro])

    def radius_of(ref):
        return radii[ref]

    def corrections_of(ref, env):
        out = []
        for s, ro, sign in plans[ref]:
            if ro == UNIT:
                base = 1.0
            elif ro < nv:
                base = env[ro]
            else:
                base = ig.const_vals[ro - nv]
            p = s * base
            dist = min(
                [abs(abs(p) - radii[ref]), abs(p)]
                + [abs(p - pt) for pt in sing_points[ref] if abs(p - pt) > 1e-14]
                + [abs(abs(p) - rr) for rr in sing_rings[ref] if abs(abs(p) - rr) > 1e-14]
            )
            out.append((p, sign, 0.4 * dist))
        return out

    def integrand(env):
        val = ig.coeff

        def look(r):
            if r == UNIT:
                return 1.0
            if r < nv:
                return env[r]
            return ig.const_vals[r - nv]

        for f in ig.factors:
            base = f.ca * look(f.ra) + f.cb * look(f.rb)
            val = val * base**f.exp
        return val

    val = nested_quadrature(order, radius_of, corrections_of, integrand, nodes=nodes, tiny_nodes=tiny_nodes)
    return ig.prefactor * val
