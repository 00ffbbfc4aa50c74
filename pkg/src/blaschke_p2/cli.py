"""Command-line front end: ``blaschke-p2 <subcommand> [options]``."""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import INF, BlaschkeSpec, Family, Sign, commutation_residual, involution_h, sample_sphere

log = logging.getLogger("blaschke_p2")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
MAX_PIXELS = 4096 * 4096


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------

_PI = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$", re.I)


def parse_angle(text: str) -> float:
    """Radians from degrees ("60") or a multiple of pi ("pi/3", "-2pi/3", "0.5*pi")."""
    text = str(text).strip()
    m = _PI.match(text)
    if m:
        coef = m.group(1)
        coef = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        den = float(m.group(2)) if m.group(2) else 1.0
        return coef * math.pi / den
    try:
        return math.radians(float(text))
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


def parse_number(text: str) -> float:
    """Float, optionally written with sqrt, e.g. "1/sqrt(3)" or "sqrt(3)"."""
    text = str(text).strip().replace(" ", "")
    m = re.fullmatch(r"(?:([\d.]+)\*?)?sqrt\(([\d.]+)\)", text)
    if m:
        return float(m.group(1) or 1) * math.sqrt(float(m.group(2)))
    m = re.fullmatch(r"([\d.]+)/sqrt\(([\d.]+)\)", text)
    if m:
        return float(m.group(1)) / math.sqrt(float(m.group(2)))
    if "/" in text:
        a, b = text.split("/", 1)
        return float(a) / float(b)
    return float(text)


@dataclass
class JobConfig:
    family: str = "two-zero"
    n: int = 3
    r: float | None = 2 / 3
    alpha: float = math.pi / 3
    a_re: float | None = None
    a_im: float | None = None
    sign: str = "plus"
    out: str = "out"
    width: int = 600
    height: int = 600
    viewport: tuple[float, float, float, float] = (0.0, 0.0, 2.2, 2.2)
    radii: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    reverse_saturation: bool = False
    supersample: bool = False
    stroke: int = 1
    subdivision: int = 5
    mesh_format: str = "obj"
    frames: int = 12
    r_start: float = 0.3
    r_end: float = 0.9
    samples: int = 50
    prefix: str = ""

    def spec(self) -> BlaschkeSpec:
        try:
            if self.a_re is not None or self.a_im is not None:
                a = complex(self.a_re or 0.0, self.a_im or 0.0)
            else:
                a = complex(math.cos(self.alpha), math.sin(self.alpha)) * float(self.r)
            return BlaschkeSpec(Family(self.family), int(self.n), a, Sign(self.sign))
        except ValueError as exc:
            raise ConfigError(f"invalid spec: {exc}") from exc

    def check(self) -> "JobConfig":
        self.spec()
        if self.width < 1 or self.height < 1 or self.width * self.height > MAX_PIXELS:
            raise ConfigError(f"resolution {self.width}x{self.height} outside 1..{MAX_PIXELS} pixels")
        if self.mesh_format not in ("obj", "ply"):
            raise ConfigError("mesh format must be obj or ply")
        if self.frames < 1:
            raise ConfigError("frames must be positive")
        return self


PRESETS: dict[str, dict] = {
    "fig1": dict(family="two-zero", n=3, r=2 / 3, alpha=math.pi / 3, sign="plus"),
    "fig2": dict(family="two-zero", n=3, r=1 / math.sqrt(3), alpha=math.pi / 3, sign="minus"),
    "fig3": dict(family="two-zero", n=3, r=math.sqrt(3), alpha=math.pi / 3, sign="plus"),
    "fig4": dict(family="two-zero", n=3, r=2.0, alpha=math.pi / 3, sign="minus", reverse_saturation=True),
    "fig5": dict(family="ring-zeros", n=3, r=2 / 3, alpha=math.pi / 3, sign="plus"),
}

def preset_config(name: str, **overrides) -> JobConfig:
    """JobConfig for a named preset, with optional field overrides."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return JobConfig(**{**PRESETS[name], "prefix": name, **overrides}).check()


_CONVERT = {
    "n": int, "width": int, "height": int, "subdivision": int, "frames": int, "samples": int, "stroke": int,
    "r": parse_number, "r_start": parse_number, "r_end": parse_number,
    "a_re": float, "a_im": float, "alpha": parse_angle,
    "reverse_saturation": lambda s: str(s).lower() in ("1", "true", "yes", "on"),
    "supersample": lambda s: str(s).lower() in ("1", "true", "yes", "on"),
    "viewport": lambda s: _viewport(s),
    "radii": lambda s: tuple(float(x) for x in str(s).replace(",", " ").split()),
}


def _viewport(text: str) -> tuple[float, float, float, float]:
    parts = [float(x) for x in str(text).replace(",", " ").split()]
    if len(parts) == 3:
        parts.append(parts[2])
    if len(parts) != 4 or parts[2] <= 0 or parts[3] <= 0:
        raise ConfigError("viewport is 'cx,cy,half_width[,half_height]' with positive extents")
    return tuple(parts)


def _apply(cfg: JobConfig, key: str, value, where: str) -> None:
    key = key.replace("-", "_")
    if key not in JobConfig.__dataclass_fields__:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        conv = _CONVERT.get(key)
        setattr(cfg, key, conv(value) if conv and isinstance(value, str) else value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: bad value for {key}: {exc}") from None


def load_config(path: str | Path, cfg: JobConfig | None = None) -> JobConfig:
    """INI-style file (any section names); later keys win."""
    cfg = cfg or JobConfig()
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for section in parser.sections():
        for key, value in parser.items(section):
            _apply(cfg, key, value, f"{path} [{section}] {key}")
    return cfg


# -- outputs -----------------------------------------------------------------

def _g(x: float) -> str:
    return f"{x:.12g}"


def _pt(z) -> tuple[str, str]:
    return ("inf", "inf") if z is INF else (_g(z.real), _g(z.imag))


def _csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    log.info("wrote %s", path)
    return path


def _json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %s", path)
    return path


def _name(cfg: JobConfig, stem: str, ext: str) -> Path:
    pre = f"{cfg.prefix}-" if cfg.prefix else ""
    return Path(cfg.out) / f"{pre}{stem}.{ext}"


def _palette(cfg: JobConfig):
    from .render import AnnuliPalette

    return AnnuliPalette.evenly_spaced(cfg.radii, reverse_saturation=cfg.reverse_saturation)


def _viewport_obj(cfg: JobConfig):
    from .render import Viewport

    cx, cy, hw, hh = cfg.viewport
    return Viewport(complex(cx, cy), hw, hh)


# -- subcommands ---------------------------------------------------------------

def cmd_seeds(cfg: JobConfig) -> int:
    from .roots import unit_circle_seeds

    seeds = unit_circle_seeds(cfg.spec())
    rows = [(k, *_pt(z), _g(math.atan2(z.imag, z.real))) for k, z in enumerate(seeds)]
    _csv(_name(cfg, "seeds", "csv"), ["index", "re", "im", "arg"], rows)
    return EXIT_OK


def cmd_branch_points(cfg: JobConfig) -> int:
    from .roots import branch_points

    rows = [(*_pt(b.location), b.order, *_pt(b.critical_value), b.source) for b in branch_points(cfg.spec())]
    _csv(_name(cfg, "branch-points", "csv"), ["re", "im", "order", "value_re", "value_im", "source"], rows)
    return EXIT_OK


def _trace(cfg: JobConfig):
    from .continuation import simultaneous_continuation, trace_gamma

    spec = cfg.spec()
    arcs = simultaneous_continuation(spec)
    gamma = None if spec.is_product_like else trace_gamma(spec)
    return spec, arcs, gamma


def cmd_trace(cfg: JobConfig) -> int:
    spec, arcs, gamma = _trace(cfg)
    rows = [(a.seed_index, _g(t), *_pt(z), a.terminal_kind.value, a.label) for a in arcs for t, z in a.samples]
    _csv(_name(cfg, "arcs", "csv"), ["seed_index", "tau", "re", "im", "terminal_kind", "label"], rows)
    if gamma is not None:
        rows = [(c, k, *_pt(complex(z))) for c, comp in enumerate(gamma.components) for k, z in enumerate(comp)]
        _csv(_name(cfg, "gamma", "csv"), ["component", "vertex", "re", "im"], rows)
    return EXIT_OK


def atlas_manifest(atlas) -> dict:
    doms = []
    for k, d in enumerate(atlas.domains):
        doms.append({
            "face": k,
            "index": list(d.index) if isinstance(d.index, tuple) else d.index,
            "kind": d.kind.value,
            "bounded": d.bounded,
            "boundary": [[atlas.lifted[e].edge, atlas.lifted[e].sheet, o] for e, o in d.boundary],
            "sample": [float(d.sample_interior_point.real), float(d.sample_interior_point.imag)],
        })
    bps = [{"point": None if z is INF else [float(z.real), float(z.imag)], "order": m} for z, m in atlas.branch_points()]
    return {
        "degree": atlas.degree,
        "domains": doms,
        "pairs": [list(p) for p in atlas.pairs],
        "branch_points": bps,
        "branch_point_count": atlas.branch_point_count(),
        "fundamental_domains": atlas.fundamental_count(),
    }


def cmd_domains(cfg: JobConfig) -> int:
    from .atlas import assemble_domains

    atlas = assemble_domains(cfg.spec())
    _json(_name(cfg, "atlas", "json"), atlas_manifest(atlas))
    return EXIT_OK


def run_verification(spec, samples: int = 50, seed: int = 0) -> dict:
    """Group laws plus cheap pointwise invariants; every entry carries a pass flag."""
    from .atlas import assemble_domains, verify_group
    from .roots import preimages

    rng = np.random.default_rng(seed)
    zs = sample_sphere(rng, 500)
    comm = max(commutation_residual(spec, complex(z)) for z in zs)
    hh = max(abs(involution_h(involution_h(complex(z))) - complex(z)) for z in zs)
    mult_ok = all(preimages(spec, complex(w)).total == spec.degree for w in sample_sphere(rng, 20))
    atlas = assemble_domains(spec)
    rep = verify_group(atlas, samples, seed)
    checks = {
        "commutation": {"max": comm, "pass": comm < 1e-9},
        "involution": {"max": hh, "pass": hh < 1e-12},
        "multiplicity": {"pass": mult_ok},
        "domains": {"count": len(atlas.domains), "pass": len(atlas.domains) == spec.degree * (2 if atlas.is_quotient else 1)},
        "group": {"closure": rep.closure, "identity": rep.identity, "inverse": rep.inverse,
                  "invariance": rep.invariance, "failures": rep.failures[:5], "pass": rep.passed},
    }
    checks["pass"] = all(v["pass"] for v in checks.values())
    return checks


def cmd_verify(cfg: JobConfig) -> int:
    report = run_verification(cfg.spec(), cfg.samples)
    _json(_name(cfg, "verify", "json"), report)
    g = report["group"]
    print(f"group law max deviation {max(g['closure'], g['identity'], g['inverse'], g['invariance']):.3e}; "
          f"verification {'passed' if report['pass'] else 'FAILED'}")
    return EXIT_OK if report["pass"] else EXIT_VERIFY


def cmd_render(cfg: JobConfig, arcs=None) -> int:
    from .render import overlay_arcs, render_pullback, seed_colors, write_png

    spec = cfg.spec()
    raster = render_pullback(spec, _palette(cfg), _viewport_obj(cfg), cfg.width, cfg.height, cfg.supersample)
    write_png(raster, _name(cfg, "pullback", "png"))
    if arcs is not None:
        write_png(overlay_arcs(raster, arcs, seed_colors(spec.degree), cfg.stroke), _name(cfg, "arcs", "png"))
    return EXIT_OK


def cmd_annuli(cfg: JobConfig) -> int:
    from .render import Viewport, render_annuli, write_png

    r = max(cfg.radii) * 1.25
    raster = render_annuli(_palette(cfg), Viewport(0j, r, r), cfg.width, cfg.height)
    write_png(raster, _name(cfg, "annuli", "png"))
    return EXIT_OK


def cmd_steiner(cfg: JobConfig, arcs=None) -> int:
    from .steiner import project_arcs, surface_mesh, write_mesh, write_polylines

    spec = cfg.spec()
    mesh = surface_mesh(spec, _palette(cfg), cfg.subdivision)
    write_mesh(mesh, _name(cfg, "steiner", cfg.mesh_format), cfg.mesh_format)
    if arcs is None:
        _, arcs, _ = _trace(cfg)
    write_polylines(project_arcs(arcs), _name(cfg, "steiner-arcs", "obj"))
    return EXIT_OK


def cmd_animate(cfg: JobConfig) -> int:
    from .continuation import simultaneous_continuation
    from .render import overlay_arcs, render_pullback, seed_colors, write_png

    frames = []
    status = EXIT_OK
    rs = np.linspace(cfg.r_start, cfg.r_end, cfg.frames)
    digits = max(3, len(str(cfg.frames - 1)))
    for k, r in enumerate(rs):
        fcfg = replace(cfg, r=float(r), a_re=None, a_im=None)
        entry = {"frame": k, "r": float(r)}
        try:
            spec = fcfg.spec()
            raster = render_pullback(spec, _palette(cfg), _viewport_obj(cfg), cfg.width, cfg.height)
            arcs = simultaneous_continuation(spec)
            raster = overlay_arcs(raster, arcs, seed_colors(spec.degree), cfg.stroke)
            path = write_png(raster, Path(cfg.out) / "frames" / f"frame-{k:0{digits}d}.png")
            entry.update(file=str(path.relative_to(cfg.out)), ok=True)
        except Exception as exc:  # record the failing frame and keep sweeping
            log.warning("frame %d (r=%g) failed: %s", k, r, exc)
            entry.update(ok=False, error=str(exc))
            status = EXIT_NUMERIC
        frames.append(entry)
    _json(Path(cfg.out) / "frames" / "manifest.json", {"frames": frames, "r_start": cfg.r_start, "r_end": cfg.r_end})
    return status


FIGURE_STAGES = ("seeds", "branch-points", "trace", "domains", "render", "annuli", "steiner")


def cmd_figure(cfg: JobConfig, stages: list[str]) -> int:
    stages = list(stages) or list(FIGURE_STAGES)
    bad = [s for s in stages if s not in FIGURE_STAGES]
    if bad:
        raise ConfigError(f"unknown figure stage(s): {', '.join(bad)}")
    arcs = None
    if any(s in stages for s in ("trace", "steiner")) or "render" in stages:
        _, arcs, _ = _trace(cfg)
    for s in stages:
        if s == "render":
            cmd_render(cfg, arcs)
        elif s == "steiner":
            cmd_steiner(cfg, arcs)
        else:
            COMMANDS[s](cfg)
    return EXIT_OK


COMMANDS = {
    "seeds": cmd_seeds,
    "branch-points": cmd_branch_points,
    "trace": cmd_trace,
    "domains": cmd_domains,
    "verify": cmd_verify,
    "render": cmd_render,
    "annuli": cmd_annuli,
    "steiner": cmd_steiner,
    "animate": cmd_animate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blaschke-p2", description="Blaschke products commuting with z -> -1/conj(z).")
    p.add_argument("command", choices=[*COMMANDS, "figure"])
    p.add_argument("stages", nargs="*", help="figure: preset name followed by optional stages")
    p.add_argument("--config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--family", choices=[f.value for f in Family])
    p.add_argument("--n", type=int)
    p.add_argument("--r")
    p.add_argument("--alpha", help="degrees or a multiple of pi, e.g. pi/3")
    p.add_argument("--a-re", type=float)
    p.add_argument("--a-im", type=float)
    p.add_argument("--sign", choices=[s.value for s in Sign])
    p.add_argument("--out")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--viewport", help="cx,cy,half_width[,half_height]")
    p.add_argument("--subdivision", type=int)
    p.add_argument("--mesh-format", choices=["obj", "ply"])
    p.add_argument("--frames", type=int)
    p.add_argument("--r-start")
    p.add_argument("--r-end")
    p.add_argument("--samples", type=int)
    p.add_argument("--stroke", type=int)
    p.add_argument("--reverse-saturation", action="store_true", default=None)
    p.add_argument("--supersample", action="store_true", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> JobConfig:
    cfg = JobConfig()
    preset = args.preset
    if args.command == "figure":
        if not args.stages:
            raise ConfigError("figure needs a preset name (fig1 ... fig5)")
        preset = args.stages[0]
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        cfg.prefix = preset
    if preset:
        for k, v in PRESETS[preset].items():
            setattr(cfg, k, v)
    if args.config:
        load_config(args.config, cfg)
    for key in JobConfig.__dataclass_fields__:
        val = getattr(args, key, None)
        if val is not None:
            _apply(cfg, key, val, f"--{key.replace('_', '-')}")
    if args.a_re is not None or args.a_im is not None:
        cfg.r = None
    return cfg.check()


def main(argv: list[str] | None = None) -> int:
    from .atlas import SelectionAmbiguity, TopologyError
    from .continuation import BranchAmbiguity, PathLost
    from .roots import NonConvergence

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "figure":
            return cmd_figure(cfg, args.stages[1:])
        if args.stages:
            raise ConfigError(f"{args.command} takes no positional arguments")
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PathLost, BranchAmbiguity, NonConvergence, TopologyError, SelectionAmbiguity) as exc:
        print(f"numeric failure ({type(exc).__module__.rsplit('.', 1)[-1]}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
