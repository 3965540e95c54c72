"""Readers and writers for clouds, rasters and reports.

CSV files have a header row, use ``,`` and ``.``, and print floats with 17
significant digits so that they round-trip exactly.  Graymaps are binary
16-bit portable graymaps (big endian, maxval 65535).
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .iteration import PointCloud
from .markov import Raster

MAXVAL = 65535


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_cloud_csv(path, cloud: PointCloud) -> Path:
    rows = zip(cloud.points.real, cloud.points.imag, cloud.weights, cloud.provenance)
    return write_csv(path, ["re", "im", "weight", "provenance"], rows)


def read_cloud_csv(path) -> PointCloud:
    header, rows = read_csv(path)
    if header != ["re", "im", "weight", "provenance"]:
        raise ValueError(f"unexpected cloud header {header}")
    a = np.array([[float(v) for v in r[:3]] for r in rows]).reshape(-1, 3)
    prov = np.array([int(r[3]) for r in rows], dtype=int)
    return PointCloud(a[:, 0] + 1j * a[:, 1], a[:, 2], prov)


def write_raster_csv(path, raster: Raster) -> Path:
    z = raster.centers()
    ny, nx = raster.lo.shape
    rr, cc = np.indices((ny, nx))
    rows = zip(rr.ravel(), cc.ravel(), z.real.ravel(), z.imag.ravel(),
               raster.lo.ravel(), raster.hi.ravel())
    return write_csv(path, ["row", "col", "re", "im", "lo", "hi"], rows)


def read_raster_csv(path, bbox) -> Raster:
    header, rows = read_csv(path)
    a = np.array([[float(v) for v in r] for r in rows])
    ny = int(a[:, 0].max()) + 1
    nx = int(a[:, 1].max()) + 1
    lo = np.zeros((ny, nx))
    hi = np.zeros((ny, nx))
    r = a[:, 0].astype(int)
    c = a[:, 1].astype(int)
    lo[r, c] = a[:, 4]
    hi[r, c] = a[:, 5]
    return Raster(bbox, lo, hi)


def to_gray16(values: np.ndarray) -> np.ndarray:
    """Map ``[0, 1]`` linearly onto ``0..65535``."""
    v = np.clip(np.nan_to_num(np.asarray(values, dtype=float)), 0.0, 1.0)
    return np.rint(v * MAXVAL).astype(">u2")


def write_pgm(path, values: np.ndarray) -> Path:
    """Binary 16-bit graymap of a 2-d array with values in ``[0, 1]``; row 0 on top."""
    g = to_gray16(values)
    if g.ndim != 2:
        raise ValueError("graymap needs a 2-d array")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ny, nx = g.shape
    with path.open("wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n{MAXVAL}\n".encode("ascii"))
        fh.write(g.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    """Raw integer samples of a binary graymap written by :func:`write_pgm`."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    pos += 1
    if tokens[0] != "P5":
        raise ValueError("not a binary graymap")
    nx, ny, maxval = (int(t) for t in tokens[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    raw = np.frombuffer(data, dtype=dtype, count=nx * ny, offset=pos).reshape(ny, nx)
    return raw.astype(np.uint16 if maxval > 255 else np.uint8)


def write_raster_pgm(path, raster: Raster) -> Path:
    return write_pgm(path, raster.mid)


def cloud_density(cloud: PointCloud, bbox, resolution) -> np.ndarray:
    """Log-scaled hit counts of the cloud on a pixel grid, normalised to ``[0, 1]``."""
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    xmin, xmax, ymin, ymax = bbox
    nx, ny = resolution
    H, _, _ = np.histogram2d(cloud.points.imag, cloud.points.real, bins=(ny, nx),
                             range=((ymin, ymax), (xmin, xmax)))
    H = np.log1p(H[::-1])
    top = H.max()
    return H / top if top > 0 else H


def write_report(path, items: dict, title: str | None = None) -> Path:
    """``key: value`` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {title}"] if title else []
    lines += [f"{k}: {fmt(v)}" for k, v in items.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_report(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        k, _, v = line.partition(": ")
        out[k] = v
    return out


def write_trace_csv(path, trace) -> Path:
    """Bisection trace, one ``(t, log rho)`` row per pressure evaluation."""
    return write_csv(path, ["t", "log_rho"], trace)
