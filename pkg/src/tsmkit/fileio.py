"""Binary container for label arrays (partitions, kernels, basins).

Layout, all integers little-endian:

    8 bytes   magic b"TSMPART1"
    4 bytes   header length H (uint32)
    H bytes   UTF-8 JSON header, keys sorted
    N bytes   one uint8 code per lattice point, row-major
    8 bytes   blake2b-64 digest of header and codes

The header carries dimension, axis names, box, resolution, the config echo,
the code table and free-form metadata.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import CompactMap
from .grid import Grid, LabelArray, PointSet
from .tsm import Region, TsmResult

MAGIC = b"TSMPART1"
FORMAT_VERSION = 1
PARTITION_CODES = {int(r): r.name for r in Region}
SET_CODES = {0: "out", 1: "in"}


class FileFormatError(OSError):
    """Unreadable, truncated or corrupted container file."""


def _digest(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=8).digest()


@dataclass
class LabelFile:
    kind: str
    grid: Grid
    codes: np.ndarray
    code_table: dict[int, str]
    axes: list[str]
    config: dict
    metadata: dict
    compact_map: CompactMap | None = None

    def header(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "kind": self.kind,
            "dimension": self.grid.n,
            "axes": list(self.axes),
            "lower": list(self.grid.lower),
            "upper": list(self.grid.upper),
            "resolution": list(self.grid.shape),
            "config": self.config,
            "codes": {str(k): v for k, v in sorted(self.code_table.items())},
            "metadata": self.metadata,
            "compact_map": list(self.compact_map.x_mid) if self.compact_map else None,
        }

    def to_bytes(self) -> bytes:
        head = json.dumps(self.header(), sort_keys=True, separators=(",", ":"),
                          allow_nan=False).encode("utf-8")
        codes = np.ascontiguousarray(self.codes, dtype=np.uint8).tobytes()
        body = head + codes
        return MAGIC + struct.pack("<I", len(head)) + body + _digest(body)

    def to_result(self) -> TsmResult:
        if self.kind != "partition":
            raise FileFormatError(f"file holds a {self.kind!r} set, not a partition")
        return TsmResult(LabelArray(self.grid, self.codes), self.metadata, self.compact_map)

    def to_pointset(self) -> PointSet:
        if self.code_table != SET_CODES:
            raise FileFormatError("file is not an in/out point set")
        return PointSet(self.grid, self.codes == 1)


def partition_file(result: TsmResult, axes, config: dict) -> LabelFile:
    return LabelFile("partition", result.grid, result.labels.codes, PARTITION_CODES, list(axes),
                     config, result.metadata, result.compact_map)


def set_file(kind: str, members: PointSet, axes, config: dict, metadata: dict,
             compact_map: CompactMap | None = None) -> LabelFile:
    return LabelFile(kind, members.grid, members.mask.astype(np.uint8), SET_CODES, list(axes),
                     config, metadata, compact_map)


def from_bytes(data: bytes) -> LabelFile:
    if len(data) < 20 or data[:8] != MAGIC:
        raise FileFormatError("not a TSMPART1 file")
    (hlen,) = struct.unpack("<I", data[8:12])
    if 12 + hlen + 8 > len(data):
        raise FileFormatError("truncated header")
    body, digest = data[12:-8], data[-8:]
    if _digest(body) != digest:
        raise FileFormatError("checksum mismatch")
    try:
        h = json.loads(body[:hlen].decode("utf-8"))
        shape = tuple(int(k) for k in h["resolution"])
        grid = Grid(tuple(h["lower"]), tuple(h["upper"]), shape)
        table = {int(k): str(v) for k, v in h["codes"].items()}
        cmap = CompactMap(tuple(h["compact_map"])) if h["compact_map"] is not None else None
        kind, axes, config, meta = h["kind"], h["axes"], h["config"], h["metadata"]
        if h["format"] != FORMAT_VERSION or h["dimension"] != grid.n:
            raise ValueError("inconsistent header")
    except (ValueError, KeyError, TypeError) as exc:
        raise FileFormatError(f"bad header: {exc}") from None
    codes = np.frombuffer(body[hlen:], dtype=np.uint8).copy()
    if codes.size != grid.size:
        raise FileFormatError(f"payload holds {codes.size} codes, grid has {grid.size} points")
    if set(np.unique(codes).tolist()) - set(table):
        raise FileFormatError("payload uses a code missing from the code table")
    return LabelFile(kind, grid, codes, table, list(axes), config, meta, cmap)


def atomic_write(path: str | Path, data: bytes) -> None:
    """Write through a temporary sibling and rename, so readers never see partial files."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_label_file(path, lf: LabelFile) -> None:
    atomic_write(path, lf.to_bytes())


def read_label_file(path) -> LabelFile:
    return from_bytes(Path(path).read_bytes())
