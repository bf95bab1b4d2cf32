"""Command-line interface: ``rotset compute|direct|bounds|hausdorff``.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 unsound
parameters under ``--strict``.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io
from .bounds import ErrorBudget
from .boxgrid import box_diameter, default_test_grid, test_grid_density
from .dynamics import (DomainError, MapSpec, displacement_bound, lipschitz_bound,
                       parse_map, perturbed)
from .evolve import extreme_corners, run
from .geometry import (Polygon, convex_hull, hausdorff_boxes, hausdorff_polygons,
                       hausdorff_to_polygon)
from .sampling import sample_Kn, sample_Kn_eps, torus_grid
from .transition import UnsoundParameters, check_soundness

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_UNSOUND = 0, 2, 3, 4

log = logging.getLogger("rotset")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    map: str
    k: int | None = None
    n: int | None = None
    R: float | None = None
    m: int | None = None
    L: float | None = None
    c: float | None = None
    eps: float | None = None
    M: float | None = None
    seed: int = 0
    grid: int = 100
    delta: float = 1e-3
    out_prefix: str = "rotset"
    threads: int = 1
    strict: bool = False
    perturb: str | None = None

    def build_map(self) -> MapSpec:
        f = parse_map(self.map)
        if self.perturb:
            parts = self.perturb.split(":")
            if len(parts) != 2:
                raise ConfigError(f"--perturb expects r1:r2, got {self.perturb!r}")
            f = perturbed(f, *(_float(p, "--perturb") for p in parts))
        return f

    def lipschitz(self, f: MapSpec) -> float:
        return lipschitz_bound(f) if self.L is None else self.L

    def resolved(self, f: MapSpec) -> tuple[int, float, float, bool]:
        """(m, R, L, sound) after defaults."""
        L = self.lipschitz(f)
        m = default_test_grid(L) if self.m is None else self.m
        R = box_diameter(self.k) if self.R is None else self.R
        return m, R, L, check_soundness(L, self.k, m, R)


def _float(text, what):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{what}: not a number: {text!r}") from None


def _need(cfg: RunConfig, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise ConfigError(f"--{name} is required for this command")


def _validate(cfg: RunConfig):
    for name in ("k", "n", "m"):
        v = getattr(cfg, name)
        if v is not None and v < 1:
            raise ConfigError(f"--{name} must be >= 1, got {v}")
    if cfg.m is not None and cfg.m < 2:
        raise ConfigError(f"--m must be >= 2, got {cfg.m}")
    if cfg.L is not None and not cfg.L > 1:
        raise ConfigError(f"--L must exceed 1, got {cfg.L}")
    for name in ("R", "c", "eps", "M"):
        v = getattr(cfg, name)
        if v is not None and not v >= 0:
            raise ConfigError(f"--{name} must be >= 0, got {v}")
    if cfg.grid < 2:
        raise ConfigError(f"--grid must be >= 2, got {cfg.grid}")
    if cfg.delta <= 0:
        raise ConfigError(f"--delta must be > 0, got {cfg.delta}")
    if cfg.threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {cfg.threads}")


def _outputs(prefix: str, *suffixes: str) -> list[Path]:
    paths = [Path(prefix + s) for s in suffixes]
    parent = paths[0].parent
    if not parent.is_dir():
        raise OSError(f"output directory does not exist: {parent}")
    return paths


def _cleanup(paths):
    for p in paths:
        Path(p).unlink(missing_ok=True)


# -- commands ---------------------------------------------------------------

def cmd_compute(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    _need(cfg, "k", "n")
    f = cfg.build_map()
    m, R, L, sound = cfg.resolved(f)
    if not sound:
        eta = test_grid_density(cfg.k, m)
        msg = f"unsound parameters: R={R!r} < L*eta={L * eta!r} (k={cfg.k}, m={m}, L={L!r})"
        if cfg.strict:
            print(f"error: {msg}", file=sys.stderr)
            return EXIT_UNSOUND
        print(f"warning: {msg}", file=sys.stderr)
    paths = _outputs(cfg.out_prefix, "_boxes.csv", ".pgm", "_hull.csv", "_meta.txt")
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        approx = run(f, cfg.k, cfg.n, R=R, m=m, L=L, allow_unsound=True, threads=cfg.threads)
    elapsed = time.perf_counter() - t0
    hull = convex_hull(extreme_corners(approx))
    meta = dict(io.approx_meta(approx))
    meta.update(boxes=approx.boxes.count, seed=cfg.seed, threads=cfg.threads,
                hull_vertices=len(hull.vertices), seconds=round(elapsed, 3))
    try:
        io.write_boxes(paths[0], approx)
        io.write_pgm(paths[1], approx)
        io.write_polygon(paths[2], hull, f"map={approx.label} k={approx.k} n={approx.n}")
        with io.atomic_write(paths[3]) as fh:
            fh.write(io.format_report(meta))
    except BaseException:
        _cleanup(paths)
        raise
    out.write(io.format_report(meta))
    return EXIT_OK


def cmd_direct(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    _need(cfg, "n")
    f = cfg.build_map()
    (path,) = _outputs(cfg.out_prefix, "_direct.csv")
    head = f"map={f.label} n={cfg.n} grid={cfg.grid}"
    if cfg.eps:
        vec = sample_Kn_eps(f, cfg.n, cfg.eps, 1, cfg.seed, starts=torus_grid(cfg.grid))
        head += f" eps={cfg.eps!r} seed={cfg.seed}"
    else:
        vec = sample_Kn(f, cfg.n, cfg.grid)
    io.write_points(path, vec, head)
    near = float(np.mean(np.hypot(vec[:, 0], vec[:, 1]) <= 0.25))
    out.write(io.format_report({"vectors": len(vec), "file": str(path),
                                "fraction_within_0.25": near}))
    return EXIT_OK


def cmd_bounds(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    _need(cfg, "n")
    f = None
    if cfg.map:
        f = cfg.build_map()
    L = cfg.L if cfg.L is not None else (lipschitz_bound(f) if f else None)
    M = cfg.M if cfg.M is not None else (displacement_bound(f) if f else None)
    eps = cfg.eps if cfg.eps is not None else (box_diameter(cfg.k) if cfg.k else None)
    if L is None or M is None:
        raise ConfigError("bounds needs --map, or both --L and --M")
    if eps is None:
        raise ConfigError("bounds needs --eps or --k")
    budget = ErrorBudget(eps, cfg.n, M, L, cfg.c)
    report = budget.report()
    if cfg.c is None:
        report["note"] = "gamma, total and shadow need --c"
    out.write(io.format_report(report))
    return EXIT_OK


def _load_operand(text: str):
    if text.startswith("rect:"):
        return io.parse_rect(text)
    if io.is_box_csv(text):
        return io.read_boxes(text)
    return io.read_polygon(text)


def cmd_hausdorff(a: str, b: str, delta: float, out=None) -> int:
    out = out or sys.stdout
    A, B = _load_operand(a), _load_operand(b)
    polys = [isinstance(x, Polygon) for x in (A, B)]
    if all(polys):
        value, err = hausdorff_polygons(A, B), 0.0
    elif any(polys):
        P, Q = (A, B) if polys[0] else (B, A)
        value, err = hausdorff_to_polygon(Q, P, delta), delta
    else:
        value, err = hausdorff_boxes(A, B)
    out.write(io.format_report({"hausdorff": value, "uncertainty": err}))
    return EXIT_OK


# -- argument parsing -------------------------------------------------------

def _common(p: argparse.ArgumentParser, map_required: bool = True):
    p.add_argument("--map", required=map_required, default="",
                   help='"fab:a:b", "fab(a,b)", "g", "identity" or a factor chain '
                        '"hshear:a:f;vshear:b:g;trans:r1:r2"')
    p.add_argument("--perturb", help="append a translation r1:r2")
    p.add_argument("--k", type=int, help="boxes per unit length")
    p.add_argument("--n", type=int, help="number of iterations")
    p.add_argument("--R", type=float, help="box image reach (default sqrt(2)/k)")
    p.add_argument("--m", type=int, help="test points per box side (default ceil(L)+1)")
    p.add_argument("--L", type=float, help="Lipschitz constant override")
    p.add_argument("--M", type=float, help="displacement bound override (bounds only)")
    p.add_argument("--c", type=float, help="bounded deviation constant")
    p.add_argument("--eps", type=float, help="pseudo-orbit tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=100, help="grid side N for direct sampling")
    p.add_argument("--delta", type=float, default=1e-3, help="boundary sampling step")
    p.add_argument("--out-prefix", default="rotset")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="refuse unsound R, m overrides")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotset", description="Outer approximations of rotation sets of torus maps.")
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("compute", help="box iteration: boxes CSV, PGM, hull CSV, metadata"))
    _common(sub.add_parser("direct", help="normalised displacements over a grid of start points"))
    _common(sub.add_parser("bounds", help="a priori error budget as key=value lines"), map_required=False)
    h = sub.add_parser("hausdorff", help="Hausdorff distance between box CSV, polygon CSV or rect:x0:x1:y0:y1")
    h.add_argument("a")
    h.add_argument("b")
    h.add_argument("--delta", type=float, default=1e-3)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**fields)
    _validate(cfg)
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        if ns.command == "hausdorff":
            if ns.delta <= 0:
                raise ConfigError(f"--delta must be > 0, got {ns.delta}")
            return cmd_hausdorff(ns.a, ns.b, ns.delta)
        cfg = config_from_args(ns)
        log.debug("config %s", asdict(cfg))
        return {"compute": cmd_compute, "direct": cmd_direct, "bounds": cmd_bounds}[ns.command](cfg)
    except UnsoundParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSOUND
    except (ConfigError, DomainError, ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
