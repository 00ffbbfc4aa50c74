"""Fundamental domains as faces of a lifted skeleton, and the cover transformations.

The target sphere is cut along a skeleton S: the ray through the seed value
w0 from 0 to Infinity, radial slits reaching every critical value off that
ray, and (for quotients) the unit circle.  The complement of S consists of
simply connected regions free of critical values, so its preimage under B is
a union of faces each mapped bijectively.  Faces are found by lifting every
edge of S, building a rotation system at each lifted vertex and walking
half-edges.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .continuation import (
    BranchAmbiguity,
    CirclePath,
    PathLost,
    Ray,
    _t_at_distance,
    critical_set,
    track,
)
from .core import (
    INF,
    BlaschkeSpec,
    Family,
    GeneralSpec,
    SpherePoint,
    chordal,
    evaluate,
    evaluate_array,
    involution_h,
)
from .roots import preimages, unit_circle_seeds

DIRECTION_EPS = 1e-7
CRITICAL_EPS = 1e-8
TRANSPORT_DT = 0.1
TRANSPORT_STEP = 0.2
OFFSET = 1e-4
ON_SKELETON = 1e-10


class TopologyError(RuntimeError):
    pass


class SelectionAmbiguity(RuntimeError):
    pass


class DomainKind(enum.Enum):
    I = "i-domain"
    E = "e-domain"
    FULL = "full"


# -- skeleton in the target sphere ------------------------------------------

@dataclass(frozen=True)
class SkeletonEdge:
    tail: int
    head: int
    path: Ray | CirclePath
    kind: str


@dataclass
class Skeleton:
    vertices: list[SpherePoint]
    edges: list[SkeletonEdge]
    critical: list[bool]
    circle: bool
    faces: int
    phi0: float
    slits: list[tuple[float, float, float]]  # (direction, modulus from, modulus to)

    def index(self, w: SpherePoint) -> int:
        return next(i for i, v in enumerate(self.vertices) if chordal(v, w) < 1e-9)


def _has_circle(spec) -> bool:
    return not spec.is_product_like


def _on_ray(v: complex, phi: float) -> bool:
    x = v * cmath.exp(-1j * phi)
    return abs(x.imag) < 1e-9 * abs(x) and x.real > 0


def build_skeleton(spec: BlaschkeSpec) -> Skeleton:
    """Cut graph S whose complement holds no critical value."""
    w0 = spec.seed_value
    phi0 = cmath.phase(w0) % (2 * math.pi)
    circle = _has_circle(spec)
    values: list[SpherePoint] = []
    for bp in critical_set(spec):
        if all(chordal(bp.critical_value, u) > 1e-9 for u in values):
            values.append(bp.critical_value)

    verts: list[SpherePoint] = []
    crit: list[bool] = []

    def vid(w: SpherePoint) -> int:
        for i, u in enumerate(verts):
            if chordal(u, w) < 1e-9:
                return i
        verts.append(w)
        crit.append(any(chordal(w, v) < 1e-9 for v in values))
        return len(verts) - 1

    def chain(direction, points, kind):
        """Radial edges through the given points, ordered by modulus."""
        moduli = [math.inf if p is INF else abs(p) for p in points]
        ids = [vid(p) for p in points]
        return [SkeletonEdge(ids[k], ids[k + 1], Ray(direction, moduli[k], moduli[k + 1]), kind)
                for k in range(len(points) - 1)]

    edges: list[SkeletonEdge] = []
    on_ray: list[SpherePoint] = [0j, w0 / abs(w0), INF]
    groups: dict[tuple[float, bool], list[complex]] = {}
    circle_points = [w0 / abs(w0)]
    for v in values:
        if v is INF or v == 0:
            continue
        if _on_ray(v, phi0):
            if all(abs(v - u) > 1e-12 for u in on_ray if u is not INF):
                on_ray.append(v)
            continue
        if circle and abs(abs(v) - 1) < 1e-9:
            circle_points.append(v)
            continue
        key = (round(cmath.phase(v) % (2 * math.pi), 9), abs(v) < 1)
        groups.setdefault(key, []).append(v)
    edges += chain(phi0, sorted(on_ray, key=lambda p: math.inf if p is INF else abs(p)), "ray")
    slits = []
    for (_, inner), vals in sorted(groups.items()):
        vals = sorted(vals, key=abs)
        th = cmath.phase(vals[-1]) % (2 * math.pi)
        unit = cmath.exp(1j * th)
        if circle:
            points = vals + [unit] if inner else [unit] + vals
            circle_points.append(unit)
        else:
            points = [0j] + vals if inner else vals + [INF]
        mods = [math.inf if p is INF else abs(p) for p in points]
        slits.append((th, min(mods), max(mods)))
        edges += chain(th, points, "slit")
    if circle:
        pts = sorted({round((cmath.phase(p) - phi0) % (2 * math.pi), 12): p for p in circle_points}.items())
        angs = [phi0 + a for a, _ in pts] + [phi0 + 2 * math.pi]
        ids = [vid(p) for _, p in pts] + [vid(pts[0][1])]
        for k in range(len(pts)):
            edges.append(SkeletonEdge(ids[k], ids[k + 1], CirclePath(angs[k], angs[k + 1]), "circle"))
    faces = 2 if circle else 1
    if len(verts) - len(edges) + faces != 2:
        raise TopologyError("skeleton is not a connected planar graph with the expected faces")
    return Skeleton(verts, edges, crit, circle, faces, phi0, slits)


# -- lifting ----------------------------------------------------------------

@dataclass
class LiftedEdge:
    edge: int
    sheet: int
    tail: tuple[int, int]  # (skeleton vertex, preimage index)
    head: tuple[int, int]
    midpoint: complex
    depart_tail: SpherePoint
    depart_head: SpherePoint
    samples: np.ndarray


def _endpoint_parameter(sk: Skeleton, edge: SkeletonEdge, end: int) -> float:
    v = edge.head if end else edge.tail
    t_end = 1.0 if end else 0.0
    eps = CRITICAL_EPS if (sk.critical[v] or sk.vertices[v] is INF) else DIRECTION_EPS
    return _t_at_distance(edge.path, t_end, 0.5, eps)


def _snap_all(fibre, zs: np.ndarray) -> list[int]:
    out = []
    for z in zs:
        i, d1, d2 = fibre.nearest(complex(z))
        if not (d1 < 0.2 and d1 < 0.5 * d2):
            raise BranchAmbiguity(f"lifted edge end {complex(z)!r} is not near a unique vertex preimage (d={d1:.3g}, next={d2:.3g}, fibre={fibre.roots}, mult={fibre.multiplicities})")
        out.append(i)
    return out


def lift_skeleton(spec, sk: Skeleton, fibres: list, max_step: float = 0.05) -> list[LiftedEdge]:
    out: list[LiftedEdge] = []
    deg = spec.degree
    for ei, edge in enumerate(sk.edges):
        wm = edge.path.w(0.5)
        mid = preimages(spec, wm)
        if mid.total != deg or any(m != 1 for m in mid.multiplicities) or INF in mid.roots:
            raise TopologyError(f"skeleton edge {ei} midpoint is not a regular value")
        z0 = np.array(mid.roots, dtype=complex)
        ends = []
        for end in (0, 1):
            t_stop = _endpoint_parameter(sk, edge, end)
            ts, zs = track(spec, edge.path, z0, 0.5, t_stop, max_step)
            ends.append((np.array(zs), _snap_all(fibres[edge.head if end else edge.tail], zs[-1])))
        (back, tail_idx), (fwd, head_idx) = ends
        for s in range(deg):
            poly = np.concatenate([back[::-1, s], fwd[1:, s]])
            out.append(LiftedEdge(ei, s, (edge.tail, tail_idx[s]), (edge.head, head_idx[s]), z0[s],
                                  complex(back[-1, s]), complex(fwd[-1, s]), poly))
    return out


def _departure_angle(vertex: SpherePoint, depart: complex) -> float:
    if vertex is INF:
        return cmath.phase(1 / depart)
    return cmath.phase(depart - vertex)


# -- faces ------------------------------------------------------------------

HalfEdge = tuple[int, int]  # (lifted edge index, +1 forward / -1 backward)


def _walk_faces(lifted: list[LiftedEdge], fibres, sk: Skeleton) -> list[list[HalfEdge]]:
    outgoing: dict[tuple[int, int], list[tuple[float, HalfEdge]]] = {}
    for k, le in enumerate(lifted):
        tv = sk.vertices[le.tail[0]]
        hv = sk.vertices[le.head[0]]
        tail_pt = fibres[le.tail[0]].roots[le.tail[1]]
        head_pt = fibres[le.head[0]].roots[le.head[1]]
        outgoing.setdefault(le.tail, []).append((_departure_angle(tail_pt, le.depart_tail), (k, 1)))
        outgoing.setdefault(le.head, []).append((_departure_angle(head_pt, le.depart_head), (k, -1)))
        del tv, hv
    order: dict[HalfEdge, tuple[tuple[int, int], int]] = {}
    for v, lst in outgoing.items():
        lst.sort()
        angs = [a for a, _ in lst]
        gaps = np.diff(angs + [angs[0] + 2 * math.pi]) if len(angs) > 1 else [1.0]
        if min(gaps) < 1e-6:
            raise TopologyError(f"coincident edge directions at lifted vertex {v}")
        outgoing[v] = lst
        for pos, (_, he) in enumerate(lst):
            order[he] = (v, pos)

    def origin(he: HalfEdge):
        le = lifted[he[0]]
        return le.tail if he[1] > 0 else le.head

    seen: set[HalfEdge] = set()
    faces: list[list[HalfEdge]] = []
    for start in order:
        if start in seen:
            continue
        face = []
        he = start
        while he not in seen:
            seen.add(he)
            face.append(he)
            twin = (he[0], -he[1])
            v, pos = order[twin]
            lst = outgoing[v]
            he = lst[(pos - 1) % len(lst)][1]
        if he != start:
            raise TopologyError("face walk did not close")
        faces.append(face)
    return faces


@dataclass
class FundamentalDomain:
    index: int | tuple[int, int]
    boundary: list[HalfEdge]
    kind: DomainKind
    bounded: bool
    sample_interior_point: complex


@dataclass
class Atlas:
    spec: BlaschkeSpec
    skeleton: Skeleton
    lifted: list[LiftedEdge]
    fibres: list
    domains: list[FundamentalDomain]
    seeds: list[complex]
    pairs: list[tuple[int, int]] = field(default_factory=list)
    _refs: dict = field(default_factory=dict, repr=False)

    @property
    def degree(self) -> int:
        return self.spec.degree

    @property
    def is_quotient(self) -> bool:
        return self.skeleton.circle

    def branch_points(self) -> list[tuple[SpherePoint, int]]:
        """Lifted skeleton vertices where B is not locally injective, with their orders."""
        out = []
        for fib in self.fibres:
            for z, m in zip(fib.roots, fib.multiplicities):
                if m >= 2:
                    out.append((z, m))
        return out

    def branch_point_count(self, finite_only: bool = True) -> int:
        """Branch points counted with multiplicity (order - 1)."""
        return sum(m - 1 for z, m in self.branch_points() if not (finite_only and z is INF))

    def fundamental_count(self) -> int:
        return len(self.pairs) if self.is_quotient else len(self.domains)


def _edge_tangent(path, t: float) -> complex:
    if isinstance(path, CirclePath):
        return 1j * cmath.exp(1j * path.tau(t)) * math.copysign(1.0, path.theta_end - path.theta_start)
    if math.isinf(path.tau_end):
        sgn = math.copysign(1.0, path.tau_end)
    else:
        sgn = math.copysign(1.0, path.tau_end - path.tau_start)
    return cmath.exp(1j * path.direction) * sgn


def _newton_to(spec, z: complex, w: complex, iters: int = 40) -> complex:
    from .core import derivative

    for _ in range(iters):
        b = evaluate(spec, z)
        d = derivative(spec, z)
        if b is INF or d is INF or d == 0:
            break
        step = (b - w) / d
        z -= step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    return z


def _face_sample(spec, sk: Skeleton, le: LiftedEdge, orient: int) -> complex:
    path = sk.edges[le.edge].path
    wm = path.w(0.5)
    tangent = _edge_tangent(path, 0.5) * orient
    w = wm + OFFSET * max(min(abs(wm), 1.0), 1e-3) * 1j * tangent
    z = _newton_to(spec, le.midpoint, w)
    if chordal(evaluate(spec, z), w) > 1e-10 or abs(z - le.midpoint) > 0.1:
        raise TopologyError("could not place a face sample point")
    return z


def ring_bi_index(j: int, n: int) -> tuple[int, int]:
    """Linear seed label to (p mod n, q mod 3) for the ring family."""
    return ((j // 3 + (n + 1) // 2) % n, j % 3)


def ring_linear_index(p: int, q: int, n: int) -> int:
    return 3 * ((p - (n + 1) // 2) % n) + (q % 3)


def assemble_domains(spec: BlaschkeSpec, arcs=None, gamma=None, max_step: float = 0.05) -> Atlas:
    """Faces of the lifted skeleton, labelled by the seed on their boundary.

    When ``arcs`` (from simultaneous continuation) or ``gamma`` are given,
    their terminals and crossings are checked against the lifted vertices.
    """
    sk = build_skeleton(spec)
    fibres = [preimages(spec, w) for w in sk.vertices]
    lifted = lift_skeleton(spec, sk, fibres, max_step)
    faces = _walk_faces(lifted, fibres, sk)
    deg = spec.degree
    n_vertices = sum(len(f.roots) for f in fibres)
    if n_vertices - len(lifted) + len(faces) != 2 or len(faces) != deg * sk.faces:
        raise TopologyError(
            f"V - E + F = {n_vertices} - {len(lifted)} + {len(faces)}; expected {deg * sk.faces} faces")

    face_of: dict[HalfEdge, int] = {he: f for f, face in enumerate(faces) for he in face}
    seeds = unit_circle_seeds(spec)
    w0_id = sk.index(spec.seed_value)
    fib0 = fibres[w0_id]
    seed_slot = [fib0.nearest(s)[0] for s in seeds]

    def starting(kind, tail_vertex):
        for ei, e in enumerate(sk.edges):
            if e.kind == kind and e.tail == tail_vertex:
                if kind == "ray" and e.path.tau_start != 1.0:
                    continue
                return ei
        raise TopologyError(f"no {kind} edge leaving w0")

    key_edge = starting("circle" if sk.circle else "ray", w0_id)
    by_tail = {le.tail[1]: k for k, le in enumerate(lifted) if le.edge == key_edge}
    labels: dict[int, tuple[int, DomainKind]] = {}
    pairs = []
    for j, slot in enumerate(seed_slot):
        k = by_tail[slot]
        left = face_of[(k, 1)]
        if sk.circle:
            right = face_of[(k, -1)]
            labels[left] = (j, DomainKind.I)
            labels[right] = (j, DomainKind.E)
            pairs.append((left, right))
        else:
            labels[left] = (j, DomainKind.FULL)
    if len(labels) != len(faces):
        raise TopologyError("faces are not in bijection with seeds")

    domains: list[FundamentalDomain] = []
    for f, face in enumerate(faces):
        j, kind = labels[f]
        k, orient = face[0]
        sample = _face_sample(spec, sk, lifted[k], orient)
        bval = abs(evaluate(spec, sample)) if evaluate(spec, sample) is not INF else math.inf
        if kind is DomainKind.I and not bval < 1 or kind is DomainKind.E and not bval > 1:
            raise TopologyError(f"face {f} sample lies on the wrong side of the unit circle")
        touches_inf = any(
            fibres[v].roots[i] is INF
            for he in face
            for v, i in [lifted[he[0]].tail if he[1] > 0 else lifted[he[0]].head]
        )
        index = ring_bi_index(j, spec.n) if getattr(spec, "family", None) is Family.RING_ZEROS else j
        domains.append(FundamentalDomain(index, list(face), kind, not touches_inf, sample))
    order = sorted(range(len(domains)), key=lambda f: (labels[f][0], labels[f][1].value))
    remap = {old: new for new, old in enumerate(order)}
    domains = [domains[f] for f in order]
    pairs = [(remap[a], remap[b]) for a, b in pairs]
    atlas = Atlas(spec, sk, lifted, fibres, domains, seeds, pairs)
    if arcs is not None:
        _check_arcs(atlas, arcs)
    if gamma is not None:
        _check_gamma(atlas, gamma)
    return atlas


def _lifted_vertex_points(atlas: Atlas) -> list[SpherePoint]:
    return [z for fib in atlas.fibres for z in fib.roots]


def _check_arcs(atlas: Atlas, arcs) -> None:
    pts = _lifted_vertex_points(atlas)
    for arc in arcs:
        if arc.label.endswith("-ext") and arc.terminal_kind.value == "open":
            continue
        if not any(chordal(arc.terminal, p) < 1e-6 for p in pts):
            raise TopologyError(f"arc terminal {arc.terminal!r} is not a skeleton vertex")


def _check_gamma(atlas: Atlas, gamma) -> None:
    pts = _lifted_vertex_points(atlas)
    for c in gamma.self_intersections:
        if not any(chordal(c, p) < 1e-6 for p in pts):
            raise TopologyError(f"self-intersection {c!r} is not a skeleton vertex")


# -- point location by path lifting -------------------------------------------

def _radii(atlas: Atlas) -> tuple[float, float]:
    inner = [m for _, a, b in atlas.skeleton.slits for m in (a, b) if 0 < m < 1]
    outer = [m for _, a, b in atlas.skeleton.slits for m in (a, b) if 1 < m < math.inf]
    for v in atlas.skeleton.vertices:
        if v is not INF and v != 0:
            (inner if abs(v) < 1 else outer if abs(v) > 1 else []).append(abs(v))
    return 0.5 * min(inner + [1.0]), 2.0 * max(outer + [1.0])


def _side(atlas: Atlas, w: complex) -> int:
    """0 for the region inside the circle (or the only region), 1 outside."""
    return 1 if atlas.is_quotient and abs(w) > 1 else 0


def _route(atlas: Atlas, w: complex) -> list:
    """Paths from w to the reference point of its region avoiding the skeleton."""
    phi0 = atlas.skeleton.phi0
    if atlas.is_quotient:
        rho_in, rho_out = _radii(atlas)
        rho = rho_out if abs(w) > 1 else rho_in
    else:
        rho = 1.0
    th = cmath.phase(w)
    th = phi0 + (th - phi0) % (2 * math.pi)
    paths = []
    m = abs(w)
    if abs(m - rho) > 1e-15 * rho:
        # geometric chunks: a linear parameter is far too coarse next to 0 or infinity
        k = max(1, math.ceil(abs(math.log(rho / m)) / math.log(4.0)))
        radii = [m * (rho / m) ** (i / k) for i in range(k)] + [rho]
        for r0, r1 in zip(radii, radii[1:]):
            if min(r0, r1) > 1:
                paths.append(Ray(th, 1 / r0, 1 / r1, inverted=True))
            else:
                paths.append(Ray(th, r0, r1))
    ref = phi0 + math.pi
    if abs(th - ref) > 1e-15:
        paths.append(CirclePath(th, ref, rho))
    return paths


def _nudge(atlas: Atlas, w: SpherePoint) -> complex:
    """Move w off the skeleton (boundary points go to a neighbouring face)."""
    if w is INF:
        w = 1e12 * cmath.exp(1j * (atlas.skeleton.phi0 + 1e-3))
    elif w == 0:
        w = 1e-12 * cmath.exp(1j * (atlas.skeleton.phi0 + 1e-3))
    sk = atlas.skeleton
    th = cmath.phase(w) % (2 * math.pi)
    on_dir = abs(((th - sk.phi0) + math.pi) % (2 * math.pi) - math.pi) < ON_SKELETON
    on_dir = on_dir or any(abs(((th - d) + math.pi) % (2 * math.pi) - math.pi) < ON_SKELETON for d, _, _ in sk.slits)
    if on_dir:
        w *= cmath.exp(1j * 1e-8)
    if sk.circle and abs(abs(w) - 1) < ON_SKELETON:
        w *= 1 - 1e-8
    return w


def _transport(atlas: Atlas, w: complex, z: np.ndarray) -> np.ndarray:
    for path in _route(atlas, w):
        _, zs = track(atlas.spec, path, z, 0.0, 1.0, TRANSPORT_STEP, TRANSPORT_DT, TRANSPORT_DT)
        z = zs[-1]
    return z


def _references(atlas: Atlas, side: int) -> np.ndarray:
    if side not in atlas._refs:
        pts, idx = [], []
        for d, dom in enumerate(atlas.domains):
            if _side(atlas, evaluate(atlas.spec, dom.sample_interior_point)) == side:
                pts.append(dom.sample_interior_point)
                idx.append(d)
        refs = np.empty(len(pts), dtype=complex)
        for k, z in enumerate(pts):
            refs[k] = _transport(atlas, complex(evaluate(atlas.spec, z)), np.array([z]))[0]
        atlas._refs[side] = (refs, idx)
    return atlas._refs[side]


def fibre_labels(atlas: Atlas, w: SpherePoint) -> tuple[list[SpherePoint], list[int]]:
    """All preimages of w with the index of the domain containing each."""
    spec = atlas.spec
    true = preimages(spec, w).expanded()
    wn = _nudge(atlas, w)
    near = np.array(preimages(spec, wn).roots, dtype=complex)
    if len(near) != spec.degree:
        raise SelectionAmbiguity("nudged value is still critical")
    end = _transport(atlas, wn, near)
    refs, idx = _references(atlas, _side(atlas, wn))
    labels_near = []
    for z in end:
        d = np.abs(refs - z)
        o = np.argsort(d)
        if not d[o[0]] < 0.5 * d[o[1]]:
            raise SelectionAmbiguity("transported preimage is not near a unique reference")
        labels_near.append(idx[o[0]])
    if sorted(labels_near) != sorted(idx):
        raise SelectionAmbiguity("fibre labels are not a permutation")
    labels = []
    for z in true:
        k = int(np.argmin([chordal(z, complex(p)) for p in near]))
        labels.append(labels_near[k])
    return true, labels


def _linear(atlas: Atlas, d: int) -> int:
    idx = atlas.domains[d].index
    return ring_linear_index(*idx, atlas.spec.n) if isinstance(idx, tuple) else idx


def locate(atlas: Atlas, z: SpherePoint) -> int:
    """Index (into atlas.domains) of the face containing z."""
    pts, labels = fibre_labels(atlas, evaluate(atlas.spec, z))
    k = min(range(len(pts)), key=lambda i: chordal(pts[i], z))
    return labels[k]


def _target(atlas: Atlas, label: int, k) -> int:
    if isinstance(k, tuple):
        n = atlas.spec.n
        p0, q0 = ring_bi_index(_linear(atlas, label), n)
        return ring_linear_index(p0 + k[0], q0 + k[1], n)
    return (_linear(atlas, label) + int(k)) % atlas.degree


def _select(atlas: Atlas, fibre, z: SpherePoint, k) -> SpherePoint:
    pts, labels = fibre
    here = min(range(len(pts)), key=lambda i: chordal(pts[i], z))
    target = _target(atlas, labels[here], k)
    hits = [i for i, d in enumerate(labels) if _linear(atlas, d) == target]
    if len(hits) != 1:
        raise SelectionAmbiguity(f"{len(hits)} preimages fall in the target domain")
    return pts[hits[0]]


def cover_transform_apply(atlas: Atlas, k, z: SpherePoint) -> SpherePoint:
    """S_k(z): the preimage of B(z) in the domain k steps on from the one holding z.

    ``k`` is an integer mod 3n, or a pair (p, q) for the ring family.
    """
    return _select(atlas, fibre_labels(atlas, evaluate(atlas.spec, z)), z, k)


# -- group verification ----------------------------------------------------

@dataclass
class GroupReport:
    closure: float
    identity: float
    inverse: float
    invariance: float
    samples: int
    failures: list[str]

    @property
    def max_deviation(self) -> float:
        return max(self.closure, self.identity, self.inverse, self.invariance)

    @property
    def passed(self) -> bool:
        return not self.failures and self.max_deviation < 1e-7


def verify_group(atlas: Atlas, sample_count: int = 200, seed: int = 0) -> GroupReport:
    """Check S_k o S_j = S_(k+j), S_0 = id, S_(-j) o S_j = id and B o S_k = B on random points.

    The fibre of S_j(z) is recomputed from B(S_j(z)) so that closure and
    inverses are tested against an independent labelling.
    """
    from .core import sample_sphere

    rng = np.random.default_rng(seed)
    spec, deg = atlas.spec, atlas.degree
    dev = dict(closure=0.0, identity=0.0, inverse=0.0, invariance=0.0)
    failures: list[str] = []
    ring = getattr(spec, "family", None) is Family.RING_ZEROS
    zs = sample_sphere(rng, sample_count)
    for z in zs:
        z = complex(z)
        if ring:
            n = spec.n
            j = (int(rng.integers(n)), int(rng.integers(3)))
            k = (int(rng.integers(n)), int(rng.integers(3)))
            jk, inv, zero = ((j[0] + k[0]) % n, (j[1] + k[1]) % 3), ((-j[0]) % n, (-j[1]) % 3), (0, 0)
        else:
            j, k = int(rng.integers(deg)), int(rng.integers(deg))
            jk, inv, zero = (j + k) % deg, (-j) % deg, 0
        try:
            fz = fibre_labels(atlas, evaluate(spec, z))
            a = _select(atlas, fz, z, j)
            fa = fibre_labels(atlas, evaluate(spec, a))
            b = _select(atlas, fa, a, k)
            back = _select(atlas, fa, a, inv)
            c = _select(atlas, fz, z, jk)
            ident = _select(atlas, fz, z, zero)
        except (SelectionAmbiguity, PathLost, BranchAmbiguity) as exc:
            failures.append(f"z={z!r}: {exc}")
            continue
        dev["closure"] = max(dev["closure"], chordal(b, c))
        dev["identity"] = max(dev["identity"], chordal(ident, z))
        dev["inverse"] = max(dev["inverse"], chordal(back, z))
        dev["invariance"] = max(dev["invariance"], chordal(evaluate(spec, a), evaluate(spec, z)))
    return GroupReport(samples=len(zs), failures=failures, **dev)


def p2_domain_count(spec: BlaschkeSpec | GeneralSpec) -> int:
    """2(p + N) + 1 for B written as z^(2p+1) times N h-symmetric factor pairs."""
    if isinstance(spec, GeneralSpec):
        p, pairs = spec.p, len(spec.zeros)
    else:
        e = abs(spec.exponent)
        p = (e - 1) // 2
        pairs = sum(f.m * f.d // 2 for f in spec.factors)
        if e % 2 == 0:
            raise ValueError("even exponent has no projective-plane descent")
    return 2 * (p + pairs) + 1


def h_partner(atlas: Atlas, d: int) -> int:
    """Domain containing h of the sample point of domain d."""
    return locate(atlas, involution_h(atlas.domains[d].sample_interior_point))
