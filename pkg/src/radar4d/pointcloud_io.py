"""RPC1 binary and CSV persistence for point clouds, plus per-frame size accounting.

RPC1 layout (little-endian)::

    b"RPC1"  u32 count  count * (f32 x, f32 y, f32 z, f32 power)
"""

import csv
import io
import os
import struct
from dataclasses import dataclass

import numpy as np

from . import _container
from .cube import PointCloud
from .errors import FormatError

MAGIC_RPC1 = b"RPC1"
HEADER_BYTES = 8
RECORD_BYTES = 16


def encode_cloud(cloud: PointCloud) -> bytes:
    return (
        MAGIC_RPC1
        + struct.pack("<I", len(cloud))
        + cloud.points.astype("<f4").tobytes(order="C")
    )


def decode_cloud(data: bytes, frame_id="") -> PointCloud:
    if len(data) < 4:
        raise FormatError("truncated RPC1 header", len(data))
    if data[:4] != MAGIC_RPC1:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC_RPC1!r}", 0)
    if len(data) < HEADER_BYTES:
        raise FormatError("truncated RPC1 point count", len(data))
    (count,) = struct.unpack_from("<I", data, 4)
    expected = HEADER_BYTES + RECORD_BYTES * count
    if len(data) != expected:
        # offset of the first byte that breaks the declared layout
        offset = min(len(data), expected)
        raise FormatError(
            f"RPC1 count mismatch: header declares {count} points "
            f"({expected} bytes) but file has {len(data)} bytes",
            offset,
        )
    pts = np.frombuffer(data, dtype="<f4", offset=HEADER_BYTES).reshape(count, 4)
    return PointCloud(pts.astype(np.float32), frame_id)


def write_cloud(path, cloud: PointCloud):
    _container.atomic_write(path, encode_cloud(cloud))


def read_cloud(path) -> PointCloud:
    with open(path, "rb") as fh:
        data = fh.read()
    frame_id = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return decode_cloud(data, frame_id)


def write_cloud_csv(path, cloud: PointCloud):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", "z", "power"])
    for row in cloud.points:
        # 9 significant digits round-trip any float32
        writer.writerow([f"{float(v):.9g}" for v in row])
    _container.atomic_write(path, buf.getvalue().encode())


def read_cloud_csv(path) -> PointCloud:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y", "z", "power"]:
            raise FormatError(f"CSV header must be x,y,z,power, got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise FormatError(f"line {lineno}: expected 4 fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise FormatError(f"line {lineno}: non-numeric field in {row}") from None
    frame_id = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return PointCloud(np.array(rows, dtype=np.float32).reshape(-1, 4), frame_id)


@dataclass(frozen=True)
class CloudStats:
    num_points: int
    bytes_on_disk: int
    density: float

    @property
    def megabytes(self):
        return self.bytes_on_disk / 1e6


def cloud_bytes(num_points):
    return HEADER_BYTES + RECORD_BYTES * int(num_points)


def size_stats(cloud: PointCloud, roi) -> CloudStats:
    """Byte count in RPC1 form and points per cubic meter of ``roi`` (a CartesianGridSpec)."""
    n = len(cloud)
    return CloudStats(n, cloud_bytes(n), n / roi.volume_m3)
