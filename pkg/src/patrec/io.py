"""File formats: sinogram CSV and binary cache, 16-bit PGM images, CSV
tables and JSON sidecars.

All writers are deterministic (fixed field order, fixed float formatting,
no timestamps) so identical runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .wave import DetectorGeometry, Sinogram, TimeGrid

__all__ = [
    "fmt",
    "config_hash",
    "write_json",
    "write_sinogram_csv",
    "write_sinogram_binary",
    "read_sinogram_binary",
    "read_sinogram_csv",
    "write_pgm16",
    "write_coefficients_csv",
    "write_table_csv",
]

_MAGIC_LEN = 16  # binary cache header: two little-endian uint64 (n_det, n_t)


def fmt(x: float) -> str:
    """Fixed 6-significant-digit formatting used in every CSV."""
    return f"{x:.6g}"


def config_hash(config_dict) -> str:
    """Stable hash of a JSON-serializable configuration."""
    blob = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_sinogram_csv(path, g: Sinogram) -> None:
    """CSV with header i,j,t,z_x,z_y,value; i and j are 1-based."""
    lines = ["i,j,t,z_x,z_y,value"]
    pos = g.geometry.positions
    times = g.timegrid.times
    for i in range(g.geometry.n_det):
        zx, zy = fmt(pos[i, 0]), fmt(pos[i, 1])
        row = g.values[i]
        for j in range(g.timegrid.n_t):
            lines.append(f"{i + 1},{j + 1},{fmt(times[j])},{zx},{zy},{fmt(row[j])}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_sinogram_binary(path, g: Sinogram) -> None:
    """16-byte header (n_det, n_t as little-endian uint64) followed by the
    row-major little-endian float64 values."""
    header = struct.pack("<QQ", g.geometry.n_det, g.timegrid.n_t)
    data = np.ascontiguousarray(g.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + data)


def read_sinogram_binary(path, geometry: DetectorGeometry, timegrid: TimeGrid) -> Sinogram:
    raw = Path(path).read_bytes()
    n_det, n_t = struct.unpack("<QQ", raw[:_MAGIC_LEN])
    if (n_det, n_t) != (geometry.n_det, timegrid.n_t):
        raise ValueError(
            f"cached sinogram is {n_det}x{n_t}, expected {geometry.n_det}x{timegrid.n_t}"
        )
    values = np.frombuffer(raw[_MAGIC_LEN:], dtype="<f8").reshape(n_det, n_t)
    return Sinogram(geometry, timegrid, values.copy())


def read_sinogram_csv(path, geometry: DetectorGeometry, timegrid: TimeGrid) -> Sinogram:
    values = np.zeros((geometry.n_det, timegrid.n_t))
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "i,j,t,z_x,z_y,value":
            raise ValueError(f"unexpected sinogram CSV header: {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 6:
                continue
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            values[i, j] = float(parts[5])
    return Sinogram(geometry, timegrid, values)


def write_pgm16(path, image: np.ndarray) -> dict:
    """16-bit binary PGM with the values affinely mapped to [0, 65535].

    Returns the map {vmin, vmax} (also meant for the caller's sidecar JSON).
    Sample bytes are big-endian per the PGM specification.
    """
    img = np.asarray(image, dtype=float)
    vmin, vmax = float(img.min()), float(img.max())
    span = vmax - vmin
    scaled = np.zeros_like(img) if span == 0.0 else (img - vmin) / span * 65535.0
    data = np.round(scaled).astype(">u2")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode())
        fh.write(data.tobytes())
    return {"vmin": vmin, "vmax": vmax}


def write_coefficients_csv(path, grid, coeffs) -> None:
    """Active coefficients as rows k1,k2,value."""
    lines = ["k1,k2,value"]
    kx = grid.kx[grid.mask]
    ky = grid.ky[grid.mask]
    for k1, k2, v in zip(kx, ky, coeffs.active()):
        lines.append(f"{k1},{k2},{fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_table_csv(path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(x if isinstance(x, str) else fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")
