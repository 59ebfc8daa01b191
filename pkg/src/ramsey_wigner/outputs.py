"""Portable run artefacts: CSV tables, 16-bit PGM heatmaps, JSON run records, figures."""
from __future__ import annotations

import csv
import hashlib
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ramsey import WignerGrid

SCAN_HEADER = ("x_over_dx0", "p_over_dp0", "contrast")


def _fmt(value) -> str:
    """Shortest round-trip text for floats, so CSV output is bit-reproducible."""
    if isinstance(value, (float, np.floating)):
        return "nan" if not np.isfinite(value) else repr(float(value))
    return str(value)


def write_table(path: Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_table(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return header, data


def write_wigner_csv(path: Path, grid: WignerGrid) -> Path:
    """One row per point, x outer and p inner, header ``x_over_dx0,p_over_dp0,contrast``."""
    return write_table(path, SCAN_HEADER, grid.rows())


def read_wigner_csv(path: Path) -> WignerGrid:
    header, data = read_table(path)
    if tuple(header) != SCAN_HEADER:
        raise ValueError(f"{path}: unexpected header {header}")
    x = np.unique(data[:, 0])
    p = np.unique(data[:, 1])
    if data.shape[0] != x.size * p.size:
        raise ValueError(f"{path}: points do not form a product grid")
    values = np.full((x.size, p.size), np.nan)
    values[np.searchsorted(x, data[:, 0]), np.searchsorted(p, data[:, 1])] = data[:, 2]
    return WignerGrid(x, p, values)


def write_pgm(path: Path, grid: WignerGrid, vmin: float = -1.0, vmax: float = 1.0) -> tuple[Path, Path]:
    """16-bit binary PGM (rows = p descending, columns = x) plus a sidecar JSON.

    NaN points map to 0; the sidecar records the linear value range.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.nan_to_num(grid.values.T[::-1], nan=vmin)  # image rows: p from top (max) to bottom
    scaled = np.clip((values - vmin) / (vmax - vmin), 0, 1)
    pixels = np.round(scaled * 65535).astype(">u2")
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n65535\n".encode("ascii"))
        fh.write(pixels.tobytes())
    sidecar = path.with_suffix(".json")
    meta = {
        "format": "PGM P5, 16-bit big-endian",
        "value": "signed contrast C = pi*hbar*W",
        "vmin": vmin,
        "vmax": vmax,
        "mapping": "value = vmin + (vmax - vmin) * pixel / 65535",
        "columns": {"axis": "x_over_dx0", "first": float(grid.x[0]), "last": float(grid.x[-1])},
        "rows": {"axis": "p_over_dp0", "first": float(grid.p[-1]), "last": float(grid.p[0])},
        "nan_pixels": int(np.isnan(grid.values).sum()),
    }
    sidecar.write_text(json.dumps(meta, indent=2) + "\n")
    return path, sidecar


def read_pgm(path: Path) -> np.ndarray:
    """Raw 16-bit pixel array of a binary PGM written by :func:`write_pgm`."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    width, height = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2").reshape(height, width)


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class RunRecord:
    """Everything needed to reproduce a run, plus hashes of what it produced."""

    command: str
    config: dict
    version: str
    results: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    environment: dict = field(
        default_factory=lambda: {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "platform": platform.platform(),
        }
    )
    created: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S%z"))

    def add_artifact(self, path: Path, root: Path):
        path = Path(path)
        self.artifacts[str(path.relative_to(root))] = sha256(path)

    def write(self, path: Path) -> Path:
        path = Path(path)
        payload = _jsonable(self.__dict__)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def verify_record(path: Path) -> dict:
    """Map of artefact -> ``True`` if it exists and its hash matches the record."""
    path = Path(path)
    record = json.loads(path.read_text())
    root = path.parent
    status = {}
    for name, digest in record["artifacts"].items():
        target = root / name
        status[name] = target.exists() and sha256(target) == digest
    return status
