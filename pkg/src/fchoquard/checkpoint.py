"""Field checkpoints: JSON header, newline, 8-byte magic, little-endian float64 payload."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import FclError
from .grid import Field, build_grid
from .params import ProblemParams

MAGIC = b"FCLFLD01"
SCHEMA_VERSION = 1
_PARAM_KEYS = ("s", "mu", "alpha", "p", "c")


class CheckpointError(FclError):
    pass


def header_for(u: Field, params: ProblemParams | None = None) -> dict:
    g = u.grid
    head = {"dim": g.dim, "L": g.box_length, "M": g.points_per_dim, "boundary": g.boundary,
            "schema_version": SCHEMA_VERSION}
    for k in _PARAM_KEYS:
        head[k] = None if params is None else float(getattr(params, k))
    return head


def dumps(u: Field, params: ProblemParams | None = None) -> bytes:
    head = json.dumps(header_for(u, params), sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(u.values, dtype="<f8").tobytes(order="C")
    return head + b"\n" + MAGIC + payload


def loads(blob: bytes):
    """Return ``(field, params or None, header)``."""
    nl = blob.find(b"\n")
    if nl < 0 or blob[nl + 1:nl + 1 + len(MAGIC)] != MAGIC:
        raise CheckpointError("not a field checkpoint (missing header or magic)")
    try:
        head = json.loads(blob[:nl].decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"bad checkpoint header: {exc}") from None
    if head.get("schema_version") != SCHEMA_VERSION:
        raise CheckpointError(f"unsupported schema version {head.get('schema_version')!r}")
    grid = build_grid(int(head["dim"]), float(head["L"]), int(head["M"]), head.get("boundary", "periodic"))
    payload = blob[nl + 1 + len(MAGIC):]
    if len(payload) != 8 * grid.size:
        raise CheckpointError(f"payload holds {len(payload)} bytes, expected {8 * grid.size}")
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape)
    params = None
    if all(head.get(k) is not None for k in _PARAM_KEYS):
        params = ProblemParams(grid.dim, *(float(head[k]) for k in _PARAM_KEYS))
    return Field(grid, values), params, head


def save_field(path, u: Field, params: ProblemParams | None = None) -> Path:
    path = Path(path)
    path.write_bytes(dumps(u, params))
    return path


def load_field(path):
    return loads(Path(path).read_bytes())
