"""Scene files: a JSON object describing a random model and how to render it.

Planar scenes carry ``generators`` (ascending coefficient lists, each
coefficient a number or an ``[re, im]`` pair) and optional ``weights``,
``trap``, ``bbox`` and so on.  Interval scenes carry a ``staircase`` block
instead.  Unknown keys are rejected so that typos do not silently fall back
to defaults.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .core import GeneratorSystem, Polynomial, RandomModel
from .interval import StaircaseModel
from .iteration import Disk, EscapeParams, escape_radius, validate_trap

PLANAR_KEYS = {
    "name", "description", "generators", "weights", "escape_radius", "trap", "bbox",
    "resolution", "depth", "cloud_points", "burn_in", "seeds", "levels", "expect_fail",
    "outputs",
}
INTERVAL_KEYS = {"name", "description", "staircase", "resolution", "depth", "outputs"}
TRAP_KEYS = {"disks", "absorbing"}
DISK_KEYS = {"center", "radius"}
STAIRCASE_KEYS = {"kind", "a"}
OUTPUT_KEYS = {"dir"}


class SceneError(ValueError):
    """Malformed scene file; the message names the file and the offending field."""


@dataclass
class Scene:
    name: str
    description: str = ""
    model: RandomModel | None = None
    params: EscapeParams | None = None
    staircase: StaircaseModel | None = None
    bbox: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    resolution: int = 256
    depth: int = 24
    cloud_points: int = 100_000
    burn_in: int = 64
    seeds: tuple[complex, ...] = ()
    levels: tuple[float, float] = (0.25, 0.75)
    expect_fail: tuple[str, ...] = ()
    out_dir: str | None = None
    source: str = field(default="", repr=False)

    @property
    def is_interval(self) -> bool:
        return self.staircase is not None


def _unknown(d: dict, allowed: set, where: str, src: str):
    extra = sorted(set(d) - allowed)
    if extra:
        raise SceneError(f"{src}: unknown key(s) in {where}: {', '.join(extra)}")


def _complex(v, where: str, src: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise SceneError(f"{src}: {where}: expected a number or [re, im] pair, got {v!r}")


def _parse_trap(block, src: str) -> tuple[tuple[Disk, ...], tuple[int, int] | None]:
    if block is None:
        return (), None
    if not isinstance(block, dict):
        raise SceneError(f"{src}: trap: expected an object")
    _unknown(block, TRAP_KEYS, "trap", src)
    disks = []
    for i, d in enumerate(block.get("disks", [])):
        if not isinstance(d, dict):
            raise SceneError(f"{src}: trap.disks[{i}]: expected an object")
        _unknown(d, DISK_KEYS, f"trap.disks[{i}]", src)
        try:
            disks.append(Disk(_complex(d["center"], f"trap.disks[{i}].center", src), d["radius"]))
        except KeyError as e:
            raise SceneError(f"{src}: trap.disks[{i}]: missing {e.args[0]}") from None
        except (TypeError, ValueError) as e:
            raise SceneError(f"{src}: trap.disks[{i}]: {e}") from None
    absorbing = block.get("absorbing")
    if absorbing is not None:
        if not (isinstance(absorbing, list) and len(absorbing) == 2):
            raise SceneError(f"{src}: trap.absorbing: expected [generator, depth]")
        # generator given 1-based in the file
        absorbing = (int(absorbing[0]) - 1, int(absorbing[1]))
    return tuple(disks), absorbing


def parse_scene(text: str, src: str = "<scene>") -> Scene:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneError(f"{src}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise SceneError(f"{src}: top level must be an object")
    name = str(data.get("name", Path(src).stem))
    out_dir = None
    if "outputs" in data:
        if not isinstance(data["outputs"], dict):
            raise SceneError(f"{src}: outputs: expected an object")
        _unknown(data["outputs"], OUTPUT_KEYS, "outputs", src)
        out_dir = data["outputs"].get("dir")

    if "staircase" in data:
        _unknown(data, INTERVAL_KEYS, "scene", src)
        sc = data["staircase"]
        if not isinstance(sc, dict):
            raise SceneError(f"{src}: staircase: expected an object")
        _unknown(sc, STAIRCASE_KEYS, "staircase", src)
        try:
            model = StaircaseModel(sc.get("kind", "cantor"), float(sc.get("a", 0.5)))
        except ValueError as e:
            raise SceneError(f"{src}: staircase: {e}") from None
        return Scene(name, data.get("description", ""), staircase=model,
                     resolution=int(data.get("resolution", 1025)),
                     depth=int(data.get("depth", 40)), out_dir=out_dir, source=src)

    _unknown(data, PLANAR_KEYS, "scene", src)
    if "generators" not in data:
        raise SceneError(f"{src}: missing required key 'generators'")
    gens = []
    for i, cl in enumerate(data["generators"]):
        if not isinstance(cl, list):
            raise SceneError(f"{src}: generators[{i}]: expected a coefficient list")
        coeffs = [_complex(c, f"generators[{i}][{k}]", src) for k, c in enumerate(cl)]
        try:
            gens.append(Polynomial(tuple(coeffs)).require_generator())
        except ValueError as e:
            raise SceneError(f"{src}: generators[{i}]: {e}") from None
    try:
        system = GeneratorSystem(tuple(gens))
    except ValueError as e:
        raise SceneError(f"{src}: generators: {e}") from None
    try:
        model = RandomModel(system, tuple(data.get("weights", ())))
    except ValueError as e:
        raise SceneError(f"{src}: weights: {e}") from None
    disks, absorbing = _parse_trap(data.get("trap"), src)
    if disks:
        chk = validate_trap(system, disks)
        if not chk:
            raise SceneError(f"{src}: trap: disks are not forward invariant "
                             f"(margin {chk.margin:.3g}, violations {chk.violations[:3]})")
    depth = int(data.get("depth", 24))
    R = data.get("escape_radius")
    if R is None:
        R = escape_radius(system)
    elif not float(R) >= escape_radius(system):
        raise SceneError(f"{src}: escape_radius: {R} is below the certified radius "
                         f"{escape_radius(system):.6g}")
    params = EscapeParams(float(R), disks, absorbing, max_depth=depth)
    bbox = data.get("bbox")
    if bbox is None:
        bbox = (-R, R, -R, R)
    if len(bbox) != 4 or not (bbox[0] < bbox[1] and bbox[2] < bbox[3]):
        raise SceneError(f"{src}: bbox: expected [xmin, xmax, ymin, ymax] with min < max")
    levels = tuple(float(v) for v in data.get("levels", (0.25, 0.75)))
    if len(levels) != 2:
        raise SceneError(f"{src}: levels: expected two values")
    seeds = tuple(_complex(s, f"seeds[{i}]", src) for i, s in enumerate(data.get("seeds", [])))
    return Scene(name, data.get("description", ""), model, params, None,
                 tuple(float(v) for v in bbox), int(data.get("resolution", 256)), depth,
                 int(data.get("cloud_points", 100_000)), int(data.get("burn_in", 64)),
                 seeds, levels, tuple(str(v) for v in data.get("expect_fail", ())), out_dir, src)


def builtin_scenes() -> list[str]:
    root = resources.files("coliseum") / "scenes"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scene(ref: str | Path) -> Scene:
    """Load a scene from a path, a path without ``.json``, or a built-in name
    (``scenes/dc1`` and ``dc1`` both resolve to the shipped scene)."""
    p = Path(ref)
    for cand in (p, p.with_name(p.name + ".json")):
        if cand.is_file():
            return parse_scene(cand.read_text(), str(cand))
    res = resources.files("coliseum") / "scenes" / (p.name.removesuffix(".json") + ".json")
    if res.is_file():
        return parse_scene(res.read_text(), f"scenes/{res.name}")
    raise SceneError(f"no such scene: {ref} (built-in: {', '.join(builtin_scenes())})")
