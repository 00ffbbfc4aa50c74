"""Preimages, unit-circle seeds and branch points."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .core import (
    INF,
    BlaschkeSpec,
    Family,
    Sign,
    SpherePoint,
    chordal,
    evaluate,
    numerator_denominator,
    to_polynomial,
)

CLUSTER_RADIUS = 1e-4
CLUSTER_WIDEN = (1e-3, 1e-2)  # high multiplicities scatter like eps**(1/m)
MERGE_RESIDUAL = 1e-13
RESIDUAL_TOL = 1e-8


class NonConvergence(RuntimeError):
    pass


@dataclass
class RootSet:
    roots: list[SpherePoint]
    multiplicities: list[int]
    residuals: list[float]

    @property
    def total(self) -> int:
        return sum(self.multiplicities)

    def expanded(self) -> list[SpherePoint]:
        out = []
        for z, m in zip(self.roots, self.multiplicities):
            out.extend([z] * m)
        return out

    def finite(self) -> np.ndarray:
        return np.array([z for z in self.roots if z is not INF], dtype=complex)

    def nearest(self, z: SpherePoint) -> tuple[int, float, float]:
        """Index of the root nearest to z, its distance and the runner-up distance."""
        d = sorted((chordal(z, r), i) for i, r in enumerate(self.roots))
        second = d[1][0] if len(d) > 1 else math.inf
        return d[0][1], d[0][0], second


@dataclass
class BranchPoint:
    location: SpherePoint
    order: int
    critical_value: SpherePoint
    source: str = field(default="closed-form")


def _poly_newton(c: np.ndarray, z: complex, iters: int = 8) -> complex:
    """Polish a simple root; the input is kept if the iteration does not improve |p|."""
    dc = P.polyder(c)
    z0, f0 = z, abs(P.polyval(z, c))
    for _ in range(iters):
        f = P.polyval(z, c)
        df = P.polyval(z, dc)
        if df == 0:
            break
        step = f / df
        z -= step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    return z if abs(P.polyval(z, c)) <= f0 else z0


def _cluster(points: np.ndarray, radius: float = CLUSTER_RADIUS) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, z in enumerate(points):
        for g in groups:
            if any(chordal(z, points[j]) < radius for j in g):
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def _merged_groups(spec, raw: np.ndarray, w: SpherePoint) -> list[list[int]]:
    """Clusters whose centroid is a root to working precision; the rest stay single.

    Radii widen in stages so a fivefold root scattered to ~1e-3 still merges,
    while distinct nearby roots fail the centroid residual and stay apart.
    """
    out: list[list[int]] = []
    todo = list(range(len(raw)))
    for radius in (CLUSTER_RADIUS, *CLUSTER_WIDEN):
        rest = []
        for g in _cluster(raw[todo], radius):
            g = [todo[k] for k in g]
            if len(g) > 1 and chordal(evaluate(spec, complex(np.mean(raw[g]))), w) < MERGE_RESIDUAL:
                out.append(g)
            else:
                rest += g
        todo = rest
    return out + [[j] for j in todo]


def preimages(spec, w: SpherePoint) -> RootSet:
    """All degree-many preimages of w, with multiplicities."""
    deg = spec.degree
    if w is not INF and abs(w) > 1:
        num, den = numerator_denominator(spec)
        c = np.zeros(deg + 1, dtype=complex)
        c[: len(den)] += den
        c[: len(num)] -= num / complex(w)
    else:
        c = to_polynomial(spec, w).coeffs
    scale = np.max(np.abs(c))
    eff = int(np.flatnonzero(np.abs(c) > 1e-13 * scale)[-1])
    n_inf = deg - eff
    if n_inf and np.any(c[eff + 1:] != 0):
        # tiny but nonzero leading terms: their roots are huge, so solve in u = 1/z
        nz = np.flatnonzero(c)
        lo, hi = int(nz[0]), int(nz[-1])
        u = np.roots(c[lo:hi + 1])  # ascending z-coefficients read as descending in u
        with np.errstate(all="ignore"):
            z = 1 / u
        far = ~np.isfinite(z) | (np.abs(z) > 1e150)  # chordally indistinguishable from inf
        raw = np.concatenate([z[~far], np.zeros(lo, dtype=complex)])
        n_inf = deg - hi + int(far.sum())
    else:
        c = c[: eff + 1]
        raw = np.roots(c[::-1]) if eff > 0 else np.array([], dtype=complex)

    roots: list[SpherePoint] = []
    mults: list[int] = []
    for g in _merged_groups(spec, raw, w):
        if len(g) == 1:
            roots.append(complex(_poly_newton(c, complex(raw[g[0]]))))
        else:
            roots.append(complex(np.mean(raw[g])))
        mults.append(len(g))
    if n_inf > 0:
        roots.append(INF)
        mults.append(n_inf)
    residuals = [chordal(evaluate(spec, z), w) for z in roots]
    bad = [r for r in residuals if not r < RESIDUAL_TOL]
    if bad:
        raise NonConvergence(f"preimages of {w!r}: residual {max(bad):.3g} exceeds {RESIDUAL_TOL}")
    return RootSet(roots, mults, residuals)


def unit_circle_seeds(spec: BlaschkeSpec) -> list[complex]:
    """Solutions of B(z) = seed value, starting at -e^{i alpha}.

    Products are ordered counter-clockwise; quotients follow the lift of
    repeated counter-clockwise turns of the target circle.
    """
    if spec.sign is Sign.PLUS and spec.r < 1:
        rs = preimages(spec, spec.seed_value)
        start = cmath.phase(-cmath.exp(1j * spec.alpha))

        def ccw(z: complex) -> float:
            t = (cmath.phase(z) - start) % (2 * math.pi)
            return 0.0 if t > 2 * math.pi - 1e-9 else t

        return sorted((z for z in rs.roots if z is not INF), key=ccw)
    from .continuation import circle_lift_order

    return circle_lift_order(spec)


# -- critical points ------------------------------------------------------

def _closed_form_critical(spec: BlaschkeSpec) -> list[complex]:
    r, alpha, n = spec.r, spec.alpha, spec.n
    if spec.family is Family.TWO_ZERO:
        q, d = r * r, 2
    else:
        q, d = r ** (2 * n), 2 * n
    if spec.sign is Sign.PLUS:
        b, disc = 3 - q * q, (3 - q * q) ** 2 - 4 * q * q
    else:
        b, disc = 3 * q * q - 1, (1 - q * q) * (1 - 9 * q * q)
    root = cmath.sqrt(disc)
    # the two roots multiply to 1; take the large one without cancellation
    big = (b + root) / (2 * q) if abs(b + root) >= abs(b - root) else (b - root) / (2 * q)
    out: list[complex] = []
    for Y in (1 / big, big):
        base = Y ** (1.0 / d) if Y != 0 else 0j
        for j in range(d):
            out.append(cmath.exp(1j * alpha) * base * cmath.exp(2j * math.pi * j / d))
    unique: list[complex] = []
    for z in out:
        if all(abs(z - u) > 1e-9 * max(1.0, abs(z)) for u in unique):
            unique.append(z)
    return unique


def critical_polynomial(spec) -> np.ndarray:
    """Coefficients of P'Q - PQ', whose roots are the finite critical points."""
    num, den = numerator_denominator(spec)
    return P.polysub(P.polymul(P.polyder(num), den), P.polymul(num, P.polyder(den)))


def _polish_critical(W: np.ndarray, z: complex) -> complex:
    scale = max(1.0, abs(z)) ** (len(W) - 1)
    before = abs(P.polyval(z, W)) / scale
    cand = _poly_newton(W, z, iters=6)
    if abs(cand - z) < 1e-6 * max(1.0, abs(z)) and abs(P.polyval(cand, W)) / scale < 0.5 * before:
        return complex(cand)
    return z


def _refine_multiple(spec, z: SpherePoint) -> tuple[SpherePoint, int]:
    """Replace z by the merged multiple preimage of B(z) next to it, if any.

    Multiple roots are recovered as cluster centroids, which are far more
    accurate than a closed form evaluated near a vanishing discriminant.
    """
    rs = preimages(spec, evaluate(spec, z))
    i, dist, _ = rs.nearest(z)
    if dist < 1e-6 and rs.multiplicities[i] >= 2:
        return rs.roots[i], rs.multiplicities[i]
    return z, 1


def local_order(spec, z: SpherePoint) -> int:
    """Local multiplicity of B at z (1 at regular points)."""
    return _refine_multiple(spec, z)[1]


def branch_points(spec: BlaschkeSpec) -> list[BranchPoint]:
    """The full critical set: multiple zeros and poles plus the closed-form critical points."""
    out: list[BranchPoint] = []
    for w in (0j, INF):
        rs = preimages(spec, w)
        for z, m in zip(rs.roots, rs.multiplicities):
            if m >= 2:
                out.append(BranchPoint(z, m, w, source="zero" if w == 0 else "pole"))
    W = critical_polynomial(spec)
    for z in _closed_form_critical(spec):
        z, order = _refine_multiple(spec, _polish_critical(W, z))
        if any(p.location is not INF and abs(p.location - z) < 1e-7 for p in out):
            continue
        out.append(BranchPoint(z, order, evaluate(spec, z)))
    return out


def generic_critical_points(spec) -> list[complex]:
    """Finite critical points from the roots of P'Q - PQ' (closed-form independent)."""
    W = critical_polynomial(spec)
    W = np.trim_zeros(W, "b")
    return [complex(z) for z in np.roots(W[::-1])]
