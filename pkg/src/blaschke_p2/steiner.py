"""The projective plane as Steiner's Roman surface, and mesh export."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import INF, SpherePoint, evaluate_array, to_sphere
from .render import AnnuliPalette, colors_array


def sphere_from_plane(z: SpherePoint) -> np.ndarray:
    """Inverse stereographic projection from the north pole (Infinity -> (0, 0, 1))."""
    if z is INF:
        return np.array([0.0, 0.0, 1.0])
    return sphere_from_plane_array(np.array([complex(z)]))[0]


def sphere_from_plane_array(z: np.ndarray) -> np.ndarray:
    return to_sphere(z)


def plane_from_sphere(p: np.ndarray) -> np.ndarray:
    """Stereographic projection from the north pole; the pole itself maps to inf."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (p[..., 0] + 1j * p[..., 1]) / (1 - p[..., 2])
    return np.where(p[..., 2] >= 1.0, np.inf + 0j, z)


def roman_projection(p, scale: float = 1.0) -> np.ndarray:
    """(x, y, z) -> (yz, xz, xy); even in p, so antipodal points agree."""
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return scale * np.stack([y * z, x * z, x * y], axis=-1)


def composite(z: np.ndarray, scale: float = 1.0) -> np.ndarray:
    return roman_projection(sphere_from_plane_array(z), scale)


def _resample(p: np.ndarray, max_len: float) -> np.ndarray:
    if len(p) < 2:
        return p
    out = [p[0]]
    for a, b in zip(p[:-1], p[1:]):
        k = int(np.ceil(np.linalg.norm(b - a) / max_len))
        for j in range(1, k + 1):
            q = a + (b - a) * (j / k)
            out.append(q / np.linalg.norm(q))
    return np.array(out)


def project_arcs(curves, max_segment: float = 0.01, scale: float = 1.0) -> list[np.ndarray]:
    """3-D polylines on the Roman surface for lifted arcs, Gamma components or raw point arrays."""
    polylines = []
    for c in curves:
        if hasattr(c, "samples"):
            pts = np.array([np.inf if z is INF else z for _, z in c.samples], dtype=complex)
        else:
            pts = np.asarray(c, dtype=complex)
        if len(pts) == 0:
            continue
        sphere = _resample(sphere_from_plane_array(pts), max_segment)
        polylines.append(roman_projection(sphere, scale))
    return polylines


# -- meshes ------------------------------------------------------------------

@dataclass
class Mesh:
    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    faces: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))
    colors: np.ndarray | None = None  # (n, 3) uint8

    def __post_init__(self):
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")


def icosphere(subdivision: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit icosahedron refined ``subdivision`` times (20 * 4**s triangles)."""
    if subdivision < 0:
        raise ValueError("subdivision must be non-negative")
    t = (1 + 5 ** 0.5) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    v = [np.array(p, dtype=float) / np.linalg.norm(p) for p in verts]
    for _ in range(subdivision):
        cache: dict[tuple[int, int], int] = {}

        def mid(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = v[a] + v[b]
                v.append(m / np.linalg.norm(m))
                cache[key] = len(v) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.array(v), np.array(faces, dtype=np.int64)


def vertex_colors(spec, palette: AnnuliPalette, sphere_pts: np.ndarray) -> np.ndarray:
    """Pulled-back colors, evaluated at the antipodal representative with |z| <= 1.

    B commutes with h, so both representatives carry the same point of the
    projective plane; fixing one makes antipodal vertices bit-identical.
    """
    x, y, z = sphere_pts[:, 0], sphere_pts[:, 1], sphere_pts[:, 2]
    flip = (z > 0) | ((z == 0) & ((y > 0) | ((y == 0) & (x > 0))))
    rep = np.where(flip[:, None], -sphere_pts, sphere_pts)
    z = plane_from_sphere(rep)
    with np.errstate(all="ignore"):
        w = evaluate_array(spec, z)
    return colors_array(palette, np.where(np.isfinite(w), w, np.inf + 0j))


def surface_mesh(spec, palette: AnnuliPalette, subdivision: int = 4, scale: float = 1.0,
                 keep_sphere: bool = False) -> Mesh:
    """Colored icosphere pushed onto the Roman surface (or left on the sphere)."""
    pts, faces = icosphere(subdivision)
    colors = vertex_colors(spec, palette, pts)
    verts = pts if keep_sphere else roman_projection(pts, scale)
    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    return Mesh(verts, faces[area > 1e-12], colors)


def _fmt(x: float) -> str:
    s = f"{x:.9g}"
    return "0" if s == "-0" else s


def write_mesh(mesh: Mesh, path: str | Path, fmt: str = "obj") -> Path:
    """ASCII OBJ (``v x y z r g b``) or PLY with uchar vertex colors."""
    path = Path(path)
    fmt = fmt.lower()
    cols = mesh.colors if mesh.colors is not None else np.full((len(mesh.vertices), 3), 255, np.uint8)
    lines: list[str] = []
    if fmt == "obj":
        for p, c in zip(mesh.vertices, cols):
            lines.append("v " + " ".join(_fmt(x) for x in p) + " " + " ".join(_fmt(x / 255) for x in c))
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    elif fmt == "ply":
        lines += ["ply", "format ascii 1.0", f"element vertex {len(mesh.vertices)}",
                  "property float x", "property float y", "property float z",
                  "property uchar red", "property uchar green", "property uchar blue",
                  f"element face {len(mesh.faces)}", "property list uchar int vertex_indices", "end_header"]
        for p, c in zip(mesh.vertices, cols):
            lines.append(" ".join(_fmt(x) for x in p) + " " + " ".join(str(int(x)) for x in c))
        lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
    else:
        raise ValueError(f"unknown mesh format {fmt!r}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write mesh to {path}: {exc}") from exc
    return path


def write_polylines(polylines: list[np.ndarray], path: str | Path) -> Path:
    """OBJ with one ``l`` element per polyline."""
    path = Path(path)
    lines, base = [], 1
    for poly in polylines:
        lines += ["v " + " ".join(_fmt(x) for x in p) for p in poly]
        lines.append("l " + " ".join(str(base + k) for k in range(len(poly))))
        base += len(poly)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="ascii")
    return path
