"""Shared helpers for the little-endian binary container family (4DRT, CVOX, NNPB)."""

import os
import struct
import tempfile

from .errors import FormatError

VERSION = 1


class Reader:
    """Sequential little-endian reader that reports byte offsets on failure."""

    def __init__(self, data: bytes, what: str):
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"truncated {self.what}: needed {n} bytes, {len(self.data) - self.pos} left",
                self.pos,
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def magic(self, expected: bytes):
        got = self.take(len(expected))
        if got != expected:
            raise FormatError(f"bad magic {got!r}, expected {expected!r}", 0)

    def version(self):
        (v,) = self.unpack("H")
        if v != VERSION:
            raise FormatError(f"unsupported {self.what} version {v}", self.pos - 2)
        return v

    def finish(self):
        if self.pos != len(self.data):
            raise FormatError(
                f"{len(self.data) - self.pos} trailing bytes in {self.what}", self.pos
            )


def atomic_write(path, payload: bytes):
    """Write ``payload`` to ``path`` via a temp file in the same directory + rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
