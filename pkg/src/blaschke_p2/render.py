"""Annuli domain coloring: colors are pulled back from the target plane through B."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from matplotlib.colors import hsv_to_rgb
from PIL import Image

from .core import INF, SpherePoint, chordal, evaluate_array

RGB = tuple[int, int, int]


@dataclass(frozen=True)
class AnnuliPalette:
    """Regions: inner disk |w| < r0, annuli r_{j-1} <= |w| < r_j, outer |w| >= r_m.

    Hue is constant per region, saturation grows counter-clockwise with
    arg w in [0, 2pi), brightness grows outward inside each region.
    """

    radii: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    hues: tuple[float, ...] = (0.0, 60.0, 120.0, 180.0, 240.0, 300.0)
    s_min: float = 0.25
    s_max: float = 1.0
    v_min: float = 0.35
    v_max: float = 1.0
    reverse_saturation: bool = False

    def __post_init__(self):
        r = self.radii
        if not r or any(x <= 0 for x in r) or any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("radii must be positive and strictly increasing")
        if not self.s_min < self.s_max or not self.v_min < self.v_max:
            raise ValueError("need s_min < s_max and v_min < v_max")
        if len(self.hues) != self.region_count:
            raise ValueError(f"palette needs {self.region_count} hues, got {len(self.hues)}")

    @property
    def region_count(self) -> int:
        return len(self.radii) + 1

    @classmethod
    def evenly_spaced(cls, radii, **kw) -> "AnnuliPalette":
        k = len(radii) + 1
        return cls(radii=tuple(radii), hues=tuple(360.0 * j / k for j in range(k)), **kw)


def _hsv_arrays(palette: AnnuliPalette, w: np.ndarray):
    w = np.asarray(w, dtype=complex)
    inf = ~np.isfinite(w)
    m = np.where(inf, 0.0, np.abs(w))
    radii = np.array(palette.radii)
    region = np.searchsorted(radii, m, side="right")
    region = np.where(inf, len(radii), region)

    lo = np.concatenate([[0.0], radii])[region]
    hi = np.concatenate([radii, [np.inf]])[region]
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(region == len(radii), 1.0 - radii[-1] / np.where(m > 0, m, 1.0), (m - lo) / (hi - lo))
    frac = np.where(inf, 1.0, np.clip(frac, 0.0, 1.0))

    arg = np.where(inf | (m == 0), 0.0, np.mod(np.angle(w), 2 * np.pi)) / (2 * np.pi)
    if palette.reverse_saturation:
        arg = 1.0 - arg
    s = palette.s_min + (palette.s_max - palette.s_min) * arg
    s = np.where(inf, palette.s_max, s)
    v = palette.v_min + (palette.v_max - palette.v_min) * frac
    h = np.array(palette.hues, dtype=float)[region] / 360.0
    return h % 1.0, s, v


def colors_array(palette: AnnuliPalette, w: np.ndarray) -> np.ndarray:
    """uint8 RGB for an array of target values (non-finite entries are Infinity)."""
    h, s, v = _hsv_arrays(palette, w)
    rgb = hsv_to_rgb(np.stack([h, s, v], axis=-1))
    return np.floor(rgb * 255.0 + 0.5).astype(np.uint8)


def color_at(palette: AnnuliPalette, w: SpherePoint) -> RGB:
    w = complex(np.inf) if w is INF else complex(w)
    r, g, b = colors_array(palette, np.array([w]))[0]
    return int(r), int(g), int(b)


# -- rasters -----------------------------------------------------------------

@dataclass(frozen=True)
class Viewport:
    center: complex = 0j
    half_width: float = 2.2
    half_height: float = 2.2

    def pixel_centers(self, width: int, height: int) -> np.ndarray:
        x = self.center.real - self.half_width + (np.arange(width) + 0.5) * (2 * self.half_width / width)
        y = self.center.imag + self.half_height - (np.arange(height) + 0.5) * (2 * self.half_height / height)
        return x[None, :] + 1j * y[:, None]

    def to_pixel(self, z: complex, width: int, height: int) -> tuple[float, float]:
        col = (z.real - (self.center.real - self.half_width)) * width / (2 * self.half_width) - 0.5
        row = ((self.center.imag + self.half_height) - z.imag) * height / (2 * self.half_height) - 0.5
        return col, row


@dataclass
class Raster:
    width: int
    height: int
    viewport: Viewport
    pixels: np.ndarray = field(repr=False)  # (height, width, 3) uint8

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("raster must be at least 1x1")
        if self.pixels.shape != (self.height, self.width, 3) or self.pixels.dtype != np.uint8:
            raise ValueError("pixel buffer must be (height, width, 3) uint8")

    def copy(self) -> "Raster":
        return replace(self, pixels=self.pixels.copy())


def _render(fn, palette, viewport, width, height, supersample) -> Raster:
    if supersample:
        big = viewport.pixel_centers(2 * width, 2 * height)
        rgb = colors_array(palette, fn(big)).astype(np.uint16)
        rgb = rgb.reshape(height, 2, width, 2, 3).sum(axis=(1, 3))
        pix = ((rgb + 2) // 4).astype(np.uint8)
    else:
        pix = colors_array(palette, fn(viewport.pixel_centers(width, height)))
    return Raster(width, height, viewport, np.ascontiguousarray(pix))


def render_pullback(spec, palette: AnnuliPalette, viewport: Viewport, width: int, height: int,
                    supersample: bool = False) -> Raster:
    """Color each pixel center z by color_at(palette, B(z))."""

    def fn(z):
        with np.errstate(all="ignore"):
            w = evaluate_array(spec, z)
        return np.where(np.isfinite(w), w, np.inf + 0j)

    return _render(fn, palette, viewport, width, height, supersample)


def render_annuli(palette: AnnuliPalette, viewport: Viewport, width: int, height: int) -> Raster:
    """The target-plane chart itself (color of w = z)."""
    return _render(lambda z: z, palette, viewport, width, height, False)


# -- arc overlays ------------------------------------------------------------

def seed_colors(count: int) -> list[RGB]:
    """Fully saturated, evenly spaced hues, one per seed."""
    hsv = np.stack([np.arange(count) / max(count, 1), np.ones(count), np.ones(count)], axis=-1)
    return [tuple(int(c) for c in row) for row in np.floor(hsv_to_rgb(hsv) * 255 + 0.5).astype(int)]


def _bresenham(x0: int, y0: int, x1: int, y1: int):
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx, sy = (1 if x0 < x1 else -1), (1 if y0 < y1 else -1)
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _stamp(pix: np.ndarray, x: int, y: int, color, stroke: int) -> None:
    h, w, _ = pix.shape
    r0 = (stroke - 1) // 2
    r1 = stroke // 2
    ya, yb = max(y - r0, 0), min(y + r1 + 1, h)
    xa, xb = max(x - r0, 0), min(x + r1 + 1, w)
    if ya < yb and xa < xb:
        pix[ya:yb, xa:xb] = color


def overlay_arcs(raster: Raster, arcs, colors: list[RGB], stroke_px: int = 1) -> Raster:
    """Draw each arc polyline in the color of its seed (no antialiasing)."""
    out = raster.copy()
    vp, W, H = raster.viewport, raster.width, raster.height
    limit = 4 * max(W, H)
    for arc in arcs:
        color = np.array(colors[arc.seed_index % len(colors)], dtype=np.uint8)
        prev = None
        for _, z in arc.samples:
            if z is INF or not np.isfinite(z):
                prev = None
                continue
            c, r = vp.to_pixel(complex(z), W, H)
            if abs(c) > limit or abs(r) > limit:
                prev = None
                continue
            cur = (int(math.floor(c + 0.5)), int(math.floor(r + 0.5)))
            if prev is None:
                _stamp(out.pixels, *cur, color, stroke_px)
            else:
                for x, y in _bresenham(*prev, *cur):
                    _stamp(out.pixels, x, y, color, stroke_px)
            prev = cur
    return out


def meeting_colors(arcs, points: dict[str, SpherePoint], tol: float = 1e-6) -> dict[str, int]:
    """Number of distinct seed colors whose arcs touch each named point."""
    out = {}
    for name, p in points.items():
        seeds = {arc.seed_index for arc in arcs if any(chordal(z, p) < tol for _, z in arc.samples)}
        out[name] = len(seeds)
    return out


def write_png(raster: Raster, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        Image.fromarray(raster.pixels, mode="RGB").save(path, format="PNG", optimize=False)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB")).copy()
