"""Minimal PLY reader/writer.

Supports ascii and binary_little_endian files with a single vertex element.
Point clouds use float32 positions with optional uchar colors and float32
normals. Gaussian sets are stored with float64 properties so a save/load
round trip is bit exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import PlyParseError
from .gaussians import GaussianSet

_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

GAUSSIAN_PROPS = (
    "x", "y", "z",
    "log_scale_x", "log_scale_y", "log_scale_z",
    "quat_w", "quat_x", "quat_y", "quat_z",
    "opacity_logit",
    "red", "green", "blue",
)


def _read_header(path: Path):
    with open(path, "rb") as f:
        line = f.readline()
        if line.strip() != b"ply":
            raise PlyParseError("missing 'ply' magic", str(path), 1)
        fmt = None
        elements: list[tuple[str, int, list[tuple[str, str]]]] = []
        lineno = 1
        while True:
            raw = f.readline()
            if not raw:
                raise PlyParseError("unexpected end of header", str(path), lineno)
            lineno += 1
            parts = raw.decode("ascii", errors="replace").strip().split()
            if not parts:
                continue
            if parts[0] == "comment":
                continue
            if parts[0] == "format":
                fmt = parts[1]
                if fmt not in ("ascii", "binary_little_endian"):
                    raise PlyParseError(f"unsupported format {fmt!r}", str(path), lineno)
            elif parts[0] == "element":
                elements.append((parts[1], int(parts[2]), []))
            elif parts[0] == "property":
                if parts[1] == "list":
                    raise PlyParseError("list properties are not supported", str(path), lineno)
                if parts[1] not in _TYPES:
                    raise PlyParseError(f"unknown property type {parts[1]!r}", str(path), lineno)
                if not elements:
                    raise PlyParseError("property before any element", str(path), lineno)
                elements[-1][2].append((parts[2], _TYPES[parts[1]]))
            elif parts[0] == "end_header":
                break
            else:
                raise PlyParseError(f"unknown header keyword {parts[0]!r}", str(path), lineno)
        if fmt is None:
            raise PlyParseError("header has no format line", str(path), lineno)
        body = f.read()
    return fmt, elements, body, lineno


def read_ply(path) -> dict[str, np.ndarray]:
    """Read the 'vertex' element into a dict of per-property 1D arrays."""
    path = Path(path)
    fmt, elements, body, header_lines = _read_header(path)
    vertex = next((e for e in elements if e[0] == "vertex"), None)
    if vertex is None:
        raise PlyParseError("no vertex element", str(path))
    if len(elements) != 1:
        raise PlyParseError("only single-element files are supported", str(path))
    _, count, props = vertex
    dtype = np.dtype([(name, "<" + code) for name, code in props])
    if fmt == "binary_little_endian":
        needed = dtype.itemsize * count
        if len(body) < needed:
            raise PlyParseError(f"body truncated: need {needed} bytes, have {len(body)}", str(path))
        data = np.frombuffer(body[:needed], dtype=dtype)
    else:
        rows = body.decode("ascii", errors="replace").split("\n")
        vals = []
        for r, row in enumerate(rows):
            row = row.strip()
            if not row:
                continue
            parts = row.split()
            if len(parts) != len(props):
                raise PlyParseError(f"expected {len(props)} values, got {len(parts)}",
                                    str(path), header_lines + r + 1)
            vals.append(tuple(parts))
            if len(vals) == count:
                break
        if len(vals) != count:
            raise PlyParseError(f"expected {count} vertices, got {len(vals)}", str(path))
        data = np.array(vals, dtype=dtype)
    return {name: np.array(data[name]) for name, _ in props}


def _write_ply(path, columns: list[tuple[str, str, np.ndarray]], binary: bool) -> None:
    path = Path(path)
    count = len(columns[0][2])
    header = ["ply",
              f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
              f"element vertex {count}"]
    header += [f"property {ptype} {name}" for name, ptype, _ in columns]
    header.append("end_header")
    dtype = np.dtype([(name, "<" + _TYPES[ptype]) for name, ptype, _ in columns])
    rec = np.empty(count, dtype=dtype)
    for name, ptype, arr in columns:
        rec[name] = np.asarray(arr).astype("<" + _TYPES[ptype])
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            f.write(rec.tobytes())
        else:
            fmts = {"u1": "%d", "i4": "%d", "f4": "%.9g", "f8": "%.17g"}
            cols = [fmts[_TYPES[ptype]] for _, ptype, _ in columns]
            lines = []
            for i in range(count):
                lines.append(" ".join(c % rec[name][i] for c, (name, _, _) in zip(cols, columns)))
            f.write(("\n".join(lines) + "\n").encode("ascii"))


def write_point_cloud(path, positions: np.ndarray, colors: np.ndarray | None = None,
                      normals: np.ndarray | None = None, binary: bool = True) -> None:
    """Write positions (N, 3) with optional uint8 colors and float normals."""
    pos = np.asarray(positions, dtype=np.float32).reshape(-1, 3)
    cols = [("x", "float", pos[:, 0]), ("y", "float", pos[:, 1]), ("z", "float", pos[:, 2])]
    if normals is not None:
        nrm = np.asarray(normals, dtype=np.float32).reshape(-1, 3)
        cols += [("nx", "float", nrm[:, 0]), ("ny", "float", nrm[:, 1]), ("nz", "float", nrm[:, 2])]
    if colors is not None:
        col = np.asarray(colors)
        if col.dtype != np.uint8:
            col = np.clip(np.round(np.asarray(col, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
        col = col.reshape(-1, 3)
        cols += [("red", "uchar", col[:, 0]), ("green", "uchar", col[:, 1]), ("blue", "uchar", col[:, 2])]
    _write_ply(path, cols, binary)


def read_point_cloud(path):
    """Read a point cloud: (positions, colors or None, normals or None).

    Colors come back as float64 in [0, 1] when stored as uchar.
    """
    props = read_ply(path)
    for axis in ("x", "y", "z"):
        if axis not in props:
            raise PlyParseError(f"missing position property {axis!r}", str(path))
    positions = np.stack([props["x"], props["y"], props["z"]], axis=1).astype(np.float64)
    colors = None
    if all(c in props for c in ("red", "green", "blue")):
        rgb = np.stack([props["red"], props["green"], props["blue"]], axis=1)
        colors = rgb.astype(np.float64) / 255.0 if rgb.dtype == np.uint8 else rgb.astype(np.float64)
    normals = None
    if all(c in props for c in ("nx", "ny", "nz")):
        normals = np.stack([props["nx"], props["ny"], props["nz"]], axis=1).astype(np.float64)
    return positions, colors, normals


def write_gaussian_set(path, gset: GaussianSet, binary: bool = True) -> None:
    """Write a splat set with float64 properties (bit-exact round trip)."""
    arrays = np.concatenate([
        gset.position, gset.log_scale, gset.rotation,
        gset.opacity_logit[:, None], gset.color,
    ], axis=1)
    cols = [(name, "double", arrays[:, i]) for i, name in enumerate(GAUSSIAN_PROPS)]
    _write_ply(path, cols, binary)


def read_gaussian_set(path) -> GaussianSet:
    props = read_ply(path)
    missing = [p for p in GAUSSIAN_PROPS if p not in props]
    if missing:
        raise PlyParseError(f"missing splat properties: {missing}", str(path))
    return GaussianSet(
        position=np.stack([props["x"], props["y"], props["z"]], axis=1),
        log_scale=np.stack([props[f"log_scale_{a}"] for a in "xyz"], axis=1),
        rotation=np.stack([props[f"quat_{a}"] for a in "wxyz"], axis=1),
        opacity_logit=props["opacity_logit"],
        color=np.stack([props["red"], props["green"], props["blue"]], axis=1),
    )


COVERAGE_COLORS = {
    "seen_input": (255, 0, 0),
    "seen_planned": (0, 255, 0),
    "unseen": (128, 128, 128),
}


def write_coverage_cloud(path, positions: np.ndarray, labels, binary: bool = True) -> None:
    """Colored coverage export: red input-seen, green newly seen, gray unseen."""
    rgb = np.array([COVERAGE_COLORS[l] for l in labels], dtype=np.uint8)
    write_point_cloud(path, positions, colors=rgb, binary=binary)
