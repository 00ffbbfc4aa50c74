"""Simultaneous continuation: lifting rays and circles of the w-plane through B.

Tracking is a predictor-corrector scheme (Euler predictor, Newton corrector)
with step halving/doubling.  Critical values lying on a path are handled
explicitly: the lift stops just before, jumps across the critical point by
the local k-th root model and resumes on the continuing branch.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import (
    INF,
    BlaschkeSpec,
    SpherePoint,
    chordal,
    chordal_array,
    evaluate,
    evaluate_array,
    involution_h,
    to_sphere,
    value_and_derivative_array,
)
from .roots import BranchPoint, branch_points, preimages

DT_INIT = 1e-3
DT_MIN = 1e-9
DT_MAX = 1e-2
MAX_STEP = 0.05
CORRECTOR_TOL = 1e-11
END_EPS = 1e-8
PASS_EPS = 1e-7
SNAP_RADIUS = 1e-3


class PathLost(RuntimeError):
    pass


class BranchAmbiguity(RuntimeError):
    pass


class ArcEnd(enum.Enum):
    ZERO = "zero"
    POLE = "pole"
    BRANCH_POINT = "branch-point"
    OPEN = "open"


# -- paths in the target sphere ---------------------------------------------

@dataclass(frozen=True)
class Ray:
    """w(tau) = tau * e^{i direction}, or e^{i direction} / tau when ``inverted``.

    ``tau_end`` may be +-inf (only for non-inverted rays); an inverted ray
    passes through the point at infinity when tau crosses 0.
    """

    direction: float
    tau_start: float
    tau_end: float
    inverted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "direction", self.direction % (2 * math.pi))
        if self.tau_start == self.tau_end:
            raise ValueError("degenerate ray")
        if math.isinf(self.tau_start):
            raise ValueError("tau_start must be finite")

    def tau(self, t: float) -> float:
        if math.isinf(self.tau_end):
            return math.copysign(math.inf, self.tau_end) if t >= 1 else self.tau_start / (1 - t)
        return self.tau_start + t * (self.tau_end - self.tau_start)

    def _t_of_tau(self, tau: float) -> float:
        if math.isinf(self.tau_end):
            return 1.0 if math.isinf(tau) else 1 - self.tau_start / tau
        return (tau - self.tau_start) / (self.tau_end - self.tau_start)

    def w(self, t: float) -> SpherePoint:
        tau = self.tau(t)
        unit = cmath.exp(1j * self.direction)
        if self.inverted:
            return INF if tau == 0 else unit / tau
        return INF if math.isinf(tau) else tau * unit

    def locate(self, v: SpherePoint) -> list[float]:
        if v is INF:
            tau = 0.0 if self.inverted else math.inf
        else:
            if v == 0:
                if self.inverted:
                    return []
                tau = 0.0
            else:
                x = v * cmath.exp(-1j * self.direction)
                if abs(x.imag) > 1e-9 * max(1.0, abs(x)):
                    return []
                tau = 1 / x.real if self.inverted else x.real
        if math.isinf(tau) and not math.isinf(self.tau_end):
            return []
        if math.isinf(self.tau_end) and not math.isinf(tau) and tau * self.tau_start <= 0:
            return []
        t = self._t_of_tau(tau)
        return [t] if -1e-12 <= t <= 1 + 1e-12 else []


@dataclass(frozen=True)
class CirclePath:
    """w(t) = radius * e^{i theta}, theta running linearly from theta_start to theta_end."""

    theta_start: float
    theta_end: float
    radius: float = 1.0

    def tau(self, t: float) -> float:
        return self.theta_start + t * (self.theta_end - self.theta_start)

    def w(self, t: float) -> complex:
        return self.radius * cmath.exp(1j * self.tau(t))

    def locate(self, v: SpherePoint) -> list[float]:
        if v is INF or abs(abs(v) - self.radius) > 1e-9 * self.radius:
            return []
        lo, hi = sorted((self.theta_start, self.theta_end))
        span = self.theta_end - self.theta_start
        th = cmath.phase(v)
        k = math.floor((lo - th) / (2 * math.pi))
        out = []
        for j in range(k, k + int(abs(span) / (2 * math.pi)) + 3):
            cand = th + 2 * math.pi * j
            if lo - 1e-12 <= cand <= hi + 1e-12:
                out.append((cand - self.theta_start) / span)
        return sorted(out)


def radial_path(direction: float, rho0: float, rho1: float) -> Ray:
    """Radial segment between moduli rho0 and rho1 (either may be 0 or inf)."""
    if math.isinf(rho0):
        return Ray(direction, 0.0, 1.0 / rho1, inverted=True)
    if rho0 == 0 or math.isinf(rho1) or rho1 == 0:
        return Ray(direction, rho0, rho1)
    return Ray(direction, rho0, rho1)


def _t_at_distance(path, t_target: float, t_from: float, eps: float) -> float:
    """Parameter between t_from and t_target whose image is eps (chordal) from w(t_target)."""
    wt = path.w(t_target)
    if chordal(path.w(t_from), wt) <= eps:
        return t_from
    lo, hi = t_from, t_target
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if chordal(path.w(mid), wt) > eps:
            lo = mid
        else:
            hi = mid
    return lo


# -- arcs -------------------------------------------------------------------

@dataclass
class LiftedArc:
    seed_index: int
    samples: list[tuple[float, complex]]
    terminal: SpherePoint
    terminal_kind: ArcEnd
    label: str = ""
    passed: list[complex] = field(default_factory=list)

    @property
    def points(self) -> np.ndarray:
        return np.array([np.inf if z is INF else z for _, z in self.samples], dtype=complex)

    @property
    def start(self) -> complex:
        return self.samples[0][1]


@dataclass
class GammaCurve:
    components: list[np.ndarray]
    self_intersections: list[complex]
    turns: list[int]
    seed_order: list[complex]


@lru_cache(maxsize=64)
def _critical_cache(spec: BlaschkeSpec) -> tuple[BranchPoint, ...]:
    return tuple(branch_points(spec))


def critical_set(spec: BlaschkeSpec) -> tuple[BranchPoint, ...]:
    return _critical_cache(spec)


def _is_critical_value(spec, w: SpherePoint) -> bool:
    return any(chordal(bp.critical_value, w) < 1e-12 for bp in critical_set(spec))


# -- the tracker ------------------------------------------------------------

def _newton(spec, z: np.ndarray, w: complex, max_iter: int = 8):
    """Newton iteration on B(z) = w; returns (z, iterations, converged, first step size)."""
    first = None
    target = np.full(z.shape, w)
    for it in range(max_iter + 1):
        b, db = value_and_derivative_array(spec, z)
        if it > 0 and np.all(chordal_array(b, target) < CORRECTOR_TOL):
            return z, it, True, first
        if it == max_iter:
            break
        with np.errstate(all="ignore"):
            step = (b - w) / db
        if first is None:
            first = np.abs(step)
        z = z - step
        if not np.all(np.abs(z) < 1e100):  # diverging (or nan); let the caller shrink the step
            return z, it + 1, False, first
    return z, max_iter, False, first


def track(spec, path, z: np.ndarray, t0: float, t1: float, max_step: float = MAX_STEP,
          dt_max: float = DT_MAX, dt_init: float = DT_INIT):
    """Follow the roots ``z`` of B = w(t0) along the path to t1.

    Returns the accepted parameters and root arrays (first entry at t0).
    """
    z = np.array(z, dtype=complex)
    ts, zs = [t0], [z.copy()]
    if t1 == t0:
        return ts, zs
    sgn = 1.0 if t1 > t0 else -1.0
    t, dt = t0, dt_init
    wc = path.w(t)
    while (t1 - t) * sgn > 1e-15:
        h = min(dt, abs(t1 - t))
        tn = t1 if h == abs(t1 - t) else t + sgn * h
        wn = path.w(tn)
        if wn is INF:
            raise PathLost("tracking target reached infinity; stop short of the endpoint")
        b, db = value_and_derivative_array(spec, z)
        pred = z + (wn - wc) / db
        corr, iters, ok, first = _newton(spec, pred, wn)
        accept = ok and iters <= 5 and np.all(np.isfinite(corr))
        if accept:
            pstep = np.abs(pred - z)
            accept = bool(np.all(first <= 0.5 * pstep + 1e-12 * (1 + np.abs(z))))
        if accept:
            accept = bool(np.all(chordal_array(corr, z) < max_step))
        if accept and len(corr) > 1:
            d = np.abs(corr[:, None] - corr[None, :]) + np.eye(len(corr))
            accept = bool(d.min() > 1e-9)
        if accept:
            t, z, wc = tn, corr, wn
            ts.append(t)
            zs.append(z.copy())
            if iters <= 2:
                dt = min(2 * dt, dt_max)
        else:
            dt *= 0.5
            if dt < DT_MIN:
                raise PathLost(f"step size underflow at t={t:.12g}")
    return ts, zs


def _snap(spec, z: complex, w: SpherePoint) -> tuple[SpherePoint, int]:
    rs = preimages(spec, w)
    i, d1, d2 = rs.nearest(z)
    if not (d1 < SNAP_RADIUS * 20 and d1 < 0.5 * d2):
        raise BranchAmbiguity(f"cannot identify the endpoint of a lift near {z!r} (d={d1:.3g}, next={d2:.3g})")
    return rs.roots[i], rs.multiplicities[i]


def _terminal_kind(w: SpherePoint, mult: int) -> ArcEnd:
    if w is INF:
        return ArcEnd.POLE
    if w == 0:
        return ArcEnd.ZERO
    return ArcEnd.BRANCH_POINT if mult >= 2 else ArcEnd.OPEN


def _cross(spec, path, z: complex, t_before: float, t_event: float, t_end: float):
    """Continue a single lift across the critical value w(t_event).

    A regular preimage (k = 1) is stepped over the same way, so the arc
    keeps an exact sample at t_event.  Returns (preimage hit or None,
    its order, z after, t after)."""
    v = path.w(t_event)
    rs = preimages(spec, v)
    i, d1, d2 = rs.nearest(z)
    if not d1 < 0.5 * d2:
        return None, 0, z, t_before
    c, k = rs.roots[i], rs.multiplicities[i]
    # work in the 1/z chart when the branch point is at infinity
    flip = c is INF
    cz, zz = (0j, 1 / z) if flip else (c, z)
    sgn = 1.0 if t_end > t_event else -1.0
    t_after = t_event + (t_event - t_before)
    if (t_end - t_after) * sgn < 0:
        t_after = t_end
    w_after = path.w(t_after)
    # outgoing branch closest to straight ahead
    j = (k - 1) // 2
    rot = [cz + (zz - cz) * cmath.exp(1j * math.pi * (2 * m + 1) / k) for m in range(k)]
    guess = 1 / rot[j] if flip else rot[j]
    z_out, _, ok, _ = _newton(spec, np.array([guess]), w_after, max_iter=30)
    z_out = complex(z_out[0])
    if not ok:
        raise PathLost("corrector failed after crossing a branch point")
    zo = 1 / z_out if flip else z_out
    best = min(range(k), key=lambda m: abs(rot[m] - zo))
    if best != j:
        raise BranchAmbiguity(f"lift left branch point {c!r} on an unexpected sheet")
    return c, k, z_out, t_after


def lift_path(spec, seed: complex, path, seed_index: int = 0, max_step: float = MAX_STEP,
              label: str = "") -> LiftedArc:
    """Lift ``path`` (t in [0, 1]) from ``seed``, crossing interior critical values."""
    w0 = path.w(0.0)
    if chordal(evaluate(spec, seed), w0) >= 1e-8:
        raise ValueError("seed is not a preimage of the path start")
    events = []
    # zero and infinity are always events so arcs keep exact samples there
    for v in [bp.critical_value for bp in critical_set(spec)] + [0j, INF]:
        for t in path.locate(v):
            if 1e-9 < t < 1 - 1e-9 and all(abs(t - e) > 1e-12 for e in events):
                events.append(t)
    events.sort()
    samples: list[tuple[float, complex]] = []
    passed: list[complex] = []
    z, t = complex(seed), 0.0
    for te in events + [1.0]:
        is_end = te == 1.0
        w_target = path.w(te)
        if is_end and not (w_target is INF or _is_critical_value(spec, w_target)):
            t_stop = te
        else:
            eps = END_EPS if is_end else PASS_EPS
            t_stop = _t_at_distance(path, te, t, eps)
        ts, zs = track(spec, path, np.array([z]), t, t_stop, max_step)
        samples.extend((path.tau(tt), complex(zz[0])) for tt, zz in zip(ts if not samples else ts[1:], zs if not samples else zs[1:]))
        z, t = complex(zs[-1][0]), ts[-1]
        if is_end:
            break
        c, k, z_after, t_after = _cross(spec, path, z, t, te, 1.0)
        if c is not None:
            if k >= 2:
                passed.append(c)
            samples.append((path.tau(te), c))
            samples.append((path.tau(t_after), z_after))
            z, t = z_after, t_after
    w_end = path.w(1.0)
    if t >= 1.0 and w_end is not INF and not _is_critical_value(spec, w_end):
        return LiftedArc(seed_index, samples, samples[-1][1], ArcEnd.OPEN, label, passed)
    term, mult = _snap(spec, z, w_end)
    if term is not INF:
        samples.append((path.tau(1.0), term))
    return LiftedArc(seed_index, samples, term, _terminal_kind(w_end, mult), label, passed)


def lift_ray(spec, seed: complex, ray: Ray, seed_index: int = 0, max_step: float = MAX_STEP) -> LiftedArc:
    """Predictor-corrector lift of a ray of the w-plane starting at ``seed``."""
    return lift_path(spec, seed, ray, seed_index, max_step)


def split_arc(arc: LiftedArc, tau: float) -> tuple[LiftedArc, LiftedArc]:
    """Cut an arc at the sample whose parameter equals ``tau``."""
    idx = next(i for i, (t, _) in enumerate(arc.samples) if t == tau)
    head = arc.samples[: idx + 1]
    tail = arc.samples[idx:]
    at = head[-1][1]
    cut = ArcEnd.ZERO if tau == 0 and not arc.label.startswith("out") else ArcEnd.POLE
    return (
        LiftedArc(arc.seed_index, head, at, cut, arc.label, [p for p in arc.passed if p != at]),
        LiftedArc(arc.seed_index, tail, arc.terminal, arc.terminal_kind, arc.label + "-ext", []),
    )


def _opposite_ray_extents(spec) -> tuple[float | None, float | None]:
    """Moduli of the critical values on the ray opposite to the seed value.

    Returns (largest inner modulus, smallest outer modulus) or None."""
    w0 = spec.seed_value
    inner, outer = [], []
    for bp in critical_set(spec):
        v = bp.critical_value
        if v is INF or v == 0:
            continue
        x = v / -w0
        if abs(x.imag) < 1e-9 * abs(x) and x.real > 0:
            (inner if x.real < 1 else outer).append(x.real)
    return (max(inner) if inner else None, min(outer) if outer else None)


def simultaneous_continuation(spec: BlaschkeSpec, seeds: list[complex] | None = None,
                              max_step: float = MAX_STEP) -> list[LiftedArc]:
    """Lift the inward and outward seed rays (and their extensions) from every seed."""
    from .roots import unit_circle_seeds

    if seeds is None:
        seeds = unit_circle_seeds(spec)
    direction = cmath.phase(spec.seed_value)
    inner, outer = _opposite_ray_extents(spec)
    arcs: list[LiftedArc] = []
    errors = []
    for j, s in enumerate(seeds):
        try:
            if inner is None:
                arcs.append(lift_path(spec, s, Ray(direction, 1.0, 0.0), j, max_step, "in"))
            else:
                full = lift_path(spec, s, Ray(direction, 1.0, -inner), j, max_step, "in")
                arcs.extend(split_arc(full, 0.0))
            if outer is None:
                arcs.append(lift_path(spec, s, Ray(direction, 1.0, math.inf), j, max_step, "out"))
            else:
                full = lift_path(spec, s, Ray(direction, 1.0, -1.0 / outer, inverted=True), j, max_step, "out")
                arcs.extend(split_arc(full, 0.0))
        except (PathLost, BranchAmbiguity) as exc:
            errors.append(f"seed {j}: {exc}")
    if errors:
        raise PathLost("; ".join(errors))
    return arcs


def terminal_census(spec, arcs: list[LiftedArc]) -> dict[str, int]:
    """Count arc terminals at the named multiple zeros and poles."""
    a = spec.a
    named = {"a": a, "-a": -a, "0": 0j, "1/conj(a)": 1 / a.conjugate(), "-1/conj(a)": -1 / a.conjugate(), "inf": INF}
    out = {k: 0 for k in named}
    for arc in arcs:
        if arc.label.endswith("-ext"):
            continue
        for k, p in named.items():
            if chordal(arc.terminal, p) < 1e-9:
                out[k] += 1
    return out


# -- the curve Gamma ----------------------------------------------------------

class RootIndex:
    def __init__(self, pts):
        self.pts = list(pts)

    def nearest(self, z):
        d = sorted((abs(z - p), i) for i, p in enumerate(self.pts))
        return d[0][1], d[0][0], (d[1][0] if len(d) > 1 else math.inf)


def _circle_loops(spec: BlaschkeSpec, max_step: float):
    """Closed lifts of repeated turns of the unit circle.

    Each loop is a list of (z, seed index or -1) ending back at its first seed.
    Branch points on the circle are passed straight through.
    """
    phi = cmath.phase(spec.seed_value)
    rs = preimages(spec, spec.seed_value)
    seeds = [z for z in rs.roots if z is not INF]
    index = RootIndex(seeds)
    zeta0 = -cmath.exp(1j * spec.alpha)
    current = index.nearest(zeta0)[0]
    visited = [False] * len(seeds)
    loops, crossings = [], []
    while True:
        first = current
        loop: list[tuple[complex, int]] = []
        while True:
            visited[current] = True
            arc = lift_path(spec, seeds[current], CirclePath(phi, phi + 2 * math.pi), current, max_step, "gamma")
            crossings.extend(arc.passed)
            i, d1, d2 = index.nearest(arc.samples[-1][1])
            if not (d1 < 1e-6 and d1 < 0.5 * d2):
                raise PathLost("circle lift did not return to a seed")
            loop.append((seeds[current], current))
            loop.extend((z, -1) for _, z in arc.samples[1:-1])
            current = i
            if current == first:
                break
            if visited[current]:
                raise PathLost("circle lift entered a visited seed out of order")
        loop.append((seeds[first], first))
        loops.append(loop)
        rest = [i for i, v in enumerate(visited) if not v]
        if not rest:
            break
        key = lambda i: ((cmath.phase(seeds[i]) - cmath.phase(zeta0)) % (2 * math.pi), round(abs(seeds[i]), 9))
        current = min(rest, key=key)
    unique: list[complex] = []
    for c in crossings:
        if all(abs(c - u) > 1e-9 for u in unique):
            unique.append(c)
    return seeds, loops, unique


def _splice(loops: list, crossings: list[complex]) -> list:
    """Merge closed loops that meet at a crossing into single closed loops."""
    loops = [list(l) for l in loops]
    merged = True
    while merged:
        merged = False
        for a in range(len(loops)):
            for b in range(a + 1, len(loops)):
                for c in crossings:
                    ia = next((k for k, (z, _) in enumerate(loops[a]) if abs(z - c) < 1e-9), None)
                    ib = next((k for k, (z, _) in enumerate(loops[b]) if abs(z - c) < 1e-9), None)
                    if ia is None or ib is None:
                        continue
                    body = loops[b][:-1]
                    rotated = body[ib:] + body[:ib]
                    loops[a] = loops[a][:ia] + rotated + loops[a][ia:]
                    del loops[b]
                    merged = True
                    break
                if merged:
                    break
            if merged:
                break
    return loops


def circle_lift_order(spec: BlaschkeSpec) -> list[complex]:
    """Seeds in the order met along the lift of successive turns of the unit circle."""
    return trace_gamma(spec, MAX_STEP).seed_order


def trace_gamma(spec: BlaschkeSpec, max_step: float = 0.01) -> GammaCurve:
    """Preimage of the unit circle as closed lifted curves, one per connected component."""
    seeds, loops, crossings = _circle_loops(spec, max_step)
    joined = _splice(loops, crossings)
    turns = [sum(1 for _, i in loop[:-1] if i >= 0) for loop in joined]
    order: list[complex] = []
    for loop in joined:
        order.extend(seeds[i] for _, i in loop[:-1] if i >= 0 and seeds[i] not in order)
    comps = [np.array([z for z, _ in loop], dtype=complex) for loop in joined]
    return GammaCurve(comps, crossings, turns, order)


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two polylines, measured on the unit sphere.

    Vertices are lifted by inverse stereographic projection, so the result is
    in the chordal metric and h acts as an isometry (the antipodal map)."""
    pa, pb = to_sphere(a), to_sphere(b)
    return max(_directed(pa, pb), _directed(pb, pa))


def _directed(a: np.ndarray, b: np.ndarray) -> float:
    p0 = b[:-1]
    seg = b[1:] - p0
    L = np.einsum("ij,ij->i", seg, seg)
    L[L == 0] = 1.0
    worst = 0.0
    for p in a:
        t = np.clip(np.einsum("ij,ij->i", p - p0, seg) / L, 0.0, 1.0)
        worst = max(worst, float(np.min(np.linalg.norm(p0 + t[:, None] * seg - p, axis=1))))
    return worst


def h_image(points: np.ndarray) -> np.ndarray:
    return np.array([involution_h(complex(z)) for z in points], dtype=complex)
