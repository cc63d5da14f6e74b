"""Named parameter containers, seeded initialization and the NNPB file format.

Initialization follows the common fan-in rule: weights and biases uniform in
[-k, k] with ``k = 1 / sqrt(fan_in)``.  Normalization layers get seeded
affine terms and (for batch norm) seeded running statistics so that every
layer does non-trivial work in inference mode.

NNPB layout (little-endian)::

    b"NNPB" u16 version u32 n_tensors
    per tensor: u16 name_len, name (utf-8), u8 ndim, ndim * u32 dims, f64 data
"""

import struct

import numpy as np

from .. import _container
from ..errors import FormatError

MAGIC_NNPB = b"NNPB"


class Params(dict):
    """``name -> ndarray`` mapping with dotted-prefix scoping."""

    def sub(self, prefix):
        prefix = prefix if prefix.endswith(".") else prefix + "."
        return Params({k[len(prefix):]: v for k, v in self.items() if k.startswith(prefix)})

    def merge(self, prefix, other):
        for k, v in other.items():
            self[f"{prefix}.{k}"] = v
        return self

    def shapes(self):
        return {k: v.shape for k, v in self.items()}

    def nbytes(self):
        return sum(v.nbytes for v in self.values())

    def map(self, fn):
        return Params({k: fn(k, v) for k, v in self.items()})


def _uniform(rng, bound, shape):
    return rng.uniform(-bound, bound, size=shape)


def add_conv(p, name, rng, c_in, c_out, k=1, groups=1, bias=True):
    fan_in = (c_in // groups) * k * k
    bound = 1.0 / np.sqrt(fan_in)
    p[f"{name}.weight"] = _uniform(rng, bound, (c_out, c_in // groups, k, k))
    if bias:
        p[f"{name}.bias"] = _uniform(rng, bound, (c_out,))


def add_conv_transpose(p, name, rng, c_in, c_out, k=2):
    bound = 1.0 / np.sqrt(c_out * k * k)
    p[f"{name}.weight"] = _uniform(rng, bound, (c_in, c_out, k, k))
    p[f"{name}.bias"] = _uniform(rng, bound, (c_out,))


def add_linear(p, name, rng, c_in, c_out):
    bound = 1.0 / np.sqrt(c_in)
    p[f"{name}.weight"] = _uniform(rng, bound, (c_out, c_in))
    p[f"{name}.bias"] = _uniform(rng, bound, (c_out,))


def add_batch_norm(p, name, rng, c):
    p[f"{name}.running_mean"] = rng.uniform(-0.1, 0.1, size=c)
    p[f"{name}.running_var"] = rng.uniform(0.5, 1.5, size=c)
    p[f"{name}.weight"] = rng.uniform(0.8, 1.2, size=c)
    p[f"{name}.bias"] = rng.uniform(-0.1, 0.1, size=c)


def add_layer_norm(p, name, rng, c):
    p[f"{name}.weight"] = rng.uniform(0.8, 1.2, size=c)
    p[f"{name}.bias"] = rng.uniform(-0.1, 0.1, size=c)


def zero_biases(p: Params) -> Params:
    """Copy with every additive offset (biases, BN running means) set to zero."""
    def fn(name, v):
        if name.endswith(".bias") or name.endswith(".running_mean"):
            return np.zeros_like(v)
        return v
    return p.map(fn)


def zero_all(p: Params) -> Params:
    return p.map(lambda name, v: np.zeros_like(v))


# -- NNPB container ----------------------------------------------------------

def encode_params(p: Params) -> bytes:
    out = [MAGIC_NNPB, struct.pack("<HI", _container.VERSION, len(p))]
    for name in sorted(p):
        arr = np.ascontiguousarray(p[name], dtype="<f8")
        raw = name.encode("utf-8")
        out.append(struct.pack("<H", len(raw)) + raw)
        out.append(struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape))
        out.append(arr.tobytes())
    return b"".join(out)


def decode_params(data: bytes) -> Params:
    r = _container.Reader(data, "NNPB file")
    r.magic(MAGIC_NNPB)
    r.version()
    (count,) = r.unpack("I")
    p = Params()
    for _ in range(count):
        (n,) = r.unpack("H")
        at = r.pos
        try:
            name = r.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("tensor name is not valid utf-8", at) from None
        (ndim,) = r.unpack("B")
        shape = r.unpack(f"{ndim}I") if ndim else ()
        size = int(np.prod(shape)) if shape else 1
        p[name] = np.frombuffer(r.take(8 * size), dtype="<f8").reshape(shape).astype(np.float64)
    r.finish()
    return p


def write_params(path, p: Params):
    _container.atomic_write(path, encode_params(p))


def read_params(path) -> Params:
    with open(path, "rb") as fh:
        return decode_params(fh.read())
