"""Command line front end.

    python -m coliseum <subcommand> <scene> [--seed N] [--threads N]
                       [--depth N] [--resolution N] [--out DIR]

``<scene>`` is a JSON scene file or the name of a shipped scene
(``dc1`` or ``scenes/dc1``).  Outputs go to ``--out`` (default
``out/<scene name>``).
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .interval import staircase_batch
from .iteration import julia_backward_cloud
from .markov import m_tau_apply, minimal_sets, t_raster
from .scene import Scene, SceneError, builtin_scenes, load_scene
from .thermo import auto_box_scales, bowen_dimension, box_counting_dim, hoelder_report
from .verify import run_battery


def _planar(scene: Scene, cmd: str) -> Scene:
    if scene.is_interval:
        raise SceneError(f"{scene.source}: '{cmd}' needs a planar scene, got an interval scene")
    return scene


def _cloud(scene: Scene, args, n=None):
    return julia_backward_cloud(scene.model.system, n or args.points or scene.cloud_points,
                                burn_in=scene.burn_in, rng_seed=args.seed, threads=args.threads)


def _raster(scene: Scene, args):
    res = args.resolution or scene.resolution
    return t_raster(scene.model, scene.params, scene.bbox, res, depth=args.depth or scene.depth,
                    threads=args.threads)


def cmd_julia(scene, args, out: Path) -> int:
    _planar(scene, "julia")
    cloud = _cloud(scene, args)
    io.write_cloud_csv(out / "cloud.csv", cloud)
    res = args.resolution or scene.resolution
    io.write_pgm(out / "julia.pgm", io.cloud_density(cloud, scene.bbox, res))
    print(f"{len(cloud)} points -> {out / 'cloud.csv'}, {out / 'julia.pgm'}")
    return 0


def cmd_coliseum(scene, args, out: Path) -> int:
    _planar(scene, "coliseum")
    T = _raster(scene, args)
    io.write_raster_pgm(out / "coliseum.pgm", T)
    io.write_raster_csv(out / "coliseum.csv", T)
    tm = m_tau_apply(T, scene.model, scene.params)
    nx, ny = T.resolution
    io.write_report(out / "coliseum.txt", {
        "scene": scene.name, "bbox": " ".join(io.fmt(v) for v in T.bbox),
        "resolution": f"{nx}x{ny}", "depth": args.depth or scene.depth,
        "max_width": float(T.width.max()),
        "indeterminate_fraction": float(np.mean(T.width > 1e-3)),
        "unresolved_images": int(tm.unresolved.sum()),
    }, title="escape probability raster")
    print(f"{nx}x{ny} raster, max width {T.width.max():.3g} -> {out / 'coliseum.pgm'}")
    return 0


def cmd_staircase(scene, args, out: Path) -> int:
    if not scene.is_interval:
        raise SceneError(f"{scene.source}: 'staircase' needs an interval scene")
    n = args.resolution or scene.resolution
    xs = np.linspace(0.0, 1.0, n)
    lo, hi = staircase_batch(xs, scene.staircase, args.depth or scene.depth)
    io.write_csv(out / "staircase.csv", ["x", "lo", "hi"], zip(xs, lo, hi))
    print(f"{n} samples -> {out / 'staircase.csv'}")
    return 0


def cmd_minimal(scene, args, out: Path) -> int:
    _planar(scene, "minimal")
    seeds = scene.seeds or (0j,)
    rep = minimal_sets(scene.model, seeds, rng_seed=args.seed, params=scene.params)
    rows = []
    for k, L in enumerate(rep.minimal):
        if L.is_infinity:
            rows.append((k + 1, "infinity", L.period, 0, "inf", "inf", 0.0))
            continue
        for c in L.clusters:
            cl = rep.clusters[c]
            rows.append((k + 1, "finite", L.period, c, cl.centroid.real, cl.centroid.imag,
                         cl.diameter))
    io.write_csv(out / "minimal.csv",
                 ["set", "kind", "period", "cluster", "re", "im", "diameter"], rows)
    io.write_report(out / "minimal.txt", {
        "scene": scene.name, "minimal_sets": len(rep.minimal),
        "periods": " ".join(str(p) for p in rep.periods),
        "dimension": rep.dimension, "includes_infinity": rep.includes_infinity,
        "flags": " ".join(rep.flags) or "none",
    }, title="minimal sets")
    print(f"{len(rep.minimal)} minimal sets, periods {rep.periods} -> {out / 'minimal.txt'}")
    return 0


def cmd_hoelder(scene, args, out: Path) -> int:
    _planar(scene, "hoelder")
    cloud = _cloud(scene, args, args.points or 20_000)
    rep = hoelder_report(scene.model, cloud, rng_seed=args.seed)
    d = {"scene": scene.name, **rep.as_dict()}
    io.write_report(out / "hoelder.txt", d, title="Hoelder exponents")
    io.write_csv(out / "hoelder.csv", list(d), [list(d.values())])
    print(f"u_entropy {rep.u_entropy:.6g}, u_hausdorff {rep.u_hausdorff:.6g} "
          f"-> {out / 'hoelder.txt'}")
    return 0


def cmd_dimension(scene, args, out: Path) -> int:
    _planar(scene, "dimension")
    cloud = _cloud(scene, args, args.points or 20_000)
    dim = bowen_dimension(scene.model.system, cloud)
    big = _cloud(scene, args, args.points or scene.cloud_points)
    box = box_counting_dim(big, auto_box_scales(big))
    io.write_trace_csv(out / "dimension_trace.csv", dim.trace)
    io.write_report(out / "dimension.txt", {
        "scene": scene.name, "bowen_delta": dim.delta, "box_dimension": box.estimate,
        "cloud_points_bowen": len(cloud), "cloud_points_box": len(big),
    }, title="dimension")
    print(f"bowen {dim.delta:.4f}, box {box.estimate:.4f} -> {out / 'dimension.txt'}")
    return 0


def cmd_verify(scene, args, out: Path) -> int:
    _planar(scene, "verify")
    cloud = _cloud(scene, args)
    T = _raster(scene, args)
    rep = run_battery(scene.model, scene.params, cloud, T, scene.levels, scene.expect_fail)
    out.mkdir(parents=True, exist_ok=True)
    text = rep.to_text()
    (out / "verify.txt").write_text(text)
    sys.stdout.write(text)
    return rep.exit_code


COMMANDS = {
    "julia": cmd_julia,
    "coliseum": cmd_coliseum,
    "staircase": cmd_staircase,
    "minimal": cmd_minimal,
    "hoelder": cmd_hoelder,
    "dimension": cmd_dimension,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coliseum", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("scene", help=f"scene file or built-in name ({', '.join(builtin_scenes())})")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--depth", type=int, default=None)
        p.add_argument("--resolution", type=int, default=None)
        p.add_argument("--points", type=int, default=None, help="cloud size override")
        p.add_argument("--out", type=Path, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scene = load_scene(args.scene)
        out = args.out or Path(scene.out_dir or Path("out") / scene.name)
        t0 = time.perf_counter()
        code = COMMANDS[args.command](scene, args, out)
    except SceneError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"[{args.command} {scene.name}: {time.perf_counter() - t0:.2f} s]", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
