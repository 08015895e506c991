"""Serialization: field files (CSV or little-endian binary), run manifests and key-value configs.

Field CSV files have the header ``x,y,value`` and one row per grid point in
C order (``x`` index slowest).  Numbers are written with 17 significant
digits and a ``.`` decimal separator regardless of locale, so doubles
round-trip exactly.

The binary format is, all little-endian::

    offset  type        content
    0       4 bytes     magic b"BKPF"
    4       uint32      format version (1)
    8       uint32      nx
    12      uint32      ny
    16      float64     Lx
    24      float64     Ly
    32      float64[]   nx*ny values in C order

Manifests are plain text, one ``key = value`` per line, where ``value`` is
JSON so that floats, lists and strings round-trip unchanged.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .spectral import RealField2D, SpectralGrid2D, make_grid

__all__ = [
    "BINARY_MAGIC",
    "ConfigError",
    "RunManifest",
    "fmt",
    "write_field_csv",
    "read_field_csv",
    "write_field_binary",
    "read_field_binary",
    "write_field",
    "read_field",
    "write_table_csv",
    "read_table_csv",
    "parse_config",
]

BINARY_MAGIC = b"BKPF"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


class ConfigError(ValueError):
    """Malformed configuration or manifest text."""


def fmt(v) -> str:
    """Locale-independent text for a number (17 significant digits for floats)."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


# fields ------------------------------------------------------------------------


def write_field_csv(path, f: RealField2D) -> Path:
    path = Path(path)
    X, Y = f.grid.mesh
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for x, y, v in zip(X.ravel(), Y.ravel(), f.values.ravel()):
            w.writerow([fmt(x), fmt(y), fmt(v)])
    return path


def read_field_csv(path) -> RealField2D:
    """Read a field CSV; the grid is inferred from the coordinate columns."""
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"{path}: not a field CSV ({exc})") from exc
    if data.shape[1] != 3:
        raise ConfigError(f"{path}: expected 3 columns, found {data.shape[1]}")
    xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
    nx, ny = xs.size, ys.size
    if nx * ny != data.shape[0] or nx < 2 or ny < 2:
        raise ConfigError(f"{path}: rows do not form a tensor grid")
    grid = make_grid(nx, ny, -float(xs[0]), -float(ys[0]))
    return RealField2D(grid, data[:, 2].reshape(nx, ny))


def write_field_binary(path, f: RealField2D) -> Path:
    path = Path(path)
    g = f.grid
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, g.nx, g.ny, g.Lx, g.Ly))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    return path


def read_field_binary(path) -> RealField2D:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ConfigError(f"{path}: truncated header")
    magic, version, nx, ny, Lx, Ly = _HEADER.unpack_from(raw)
    if magic != BINARY_MAGIC:
        raise ConfigError(f"{path}: bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise ConfigError(f"{path}: unsupported version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * nx * ny:
        raise ConfigError(f"{path}: expected {nx * ny} doubles, found {len(body) / 8:g}")
    vals = np.frombuffer(body, dtype="<f8").reshape(nx, ny).astype(float)
    return RealField2D(make_grid(nx, ny, Lx, Ly), vals)


def write_field(path, f: RealField2D, binary: bool = False) -> Path:
    return write_field_binary(path, f) if binary else write_field_csv(path, f)


def read_field(path) -> RealField2D:
    """Read either format, chosen by the leading magic bytes."""
    with Path(path).open("rb") as fh:
        head = fh.read(4)
    return read_field_binary(path) if head == BINARY_MAGIC else read_field_csv(path)


# tables --------------------------------------------------------------------------


def write_table_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_table_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty table")
    return rows[0], rows[1:]


# manifests -----------------------------------------------------------------------


@dataclass
class RunManifest:
    """Everything needed to reproduce a run."""

    command: str
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    version: str = ""
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    seed: int = 0
    threads: int = 1
    status: str = ""

    def to_text(self) -> str:
        lines = []
        for key, val in asdict(self).items():
            if isinstance(val, dict):
                for sub, v in val.items():
                    lines.append(f"{key}.{sub} = {json.dumps(_plain(v))}")
            else:
                lines.append(f"{key} = {json.dumps(_plain(val))}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        return path

    @classmethod
    def from_text(cls, text: str) -> "RunManifest":
        out: dict = {"params": {}, "grid": {}}
        for lineno, key, raw in _kv_lines(text):
            try:
                val = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"line {lineno}: value is not valid JSON") from exc
            head, _, sub = key.partition(".")
            if sub and head in ("params", "grid"):
                out[head][sub] = val
            elif head in cls.__dataclass_fields__ and not sub:
                out[head] = val
            else:
                raise ConfigError(f"line {lineno}: unknown manifest key {key!r}")
        if "command" not in out:
            raise ConfigError("manifest has no command")
        return cls(**out)

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls.from_text(Path(path).read_text())


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, Path):
        return str(v)
    return v


def _kv_lines(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        key, sep, val = s.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key or not val:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        yield lineno, key, val


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines (``#`` comments allowed) into raw strings.

    Keys are normalised to identifiers (``max-iter`` becomes ``max_iter``).
    """
    out = {}
    for lineno, key, val in _kv_lines(text):
        k = key.replace("-", "_")
        if not k.isidentifier():
            raise ConfigError(f"line {lineno}: invalid key {key!r}")
        if k in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[k] = val
    return out


def grid_from_dict(d: dict) -> SpectralGrid2D:
    return make_grid(int(d["nx"]), int(d["ny"]), float(d["Lx"]), float(d["Ly"]))
