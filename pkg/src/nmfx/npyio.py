"""Bit-exact NPY v1.0 array file reader/writer.

The on-disk contract is deliberately narrow: magic ``\\x93NUMPY``, version
(1, 0), a header dict with ``descr`` in {'<f4', '<f8'}, ``fortran_order``
False, and a row-major little-endian payload. Ranks 2 and 4 only. Files
written here load with ``numpy.load`` and vice versa.
"""

import ast
import struct
from pathlib import Path

import numpy as np

from nmfx.errors import MalformedHeaderError, UnsupportedDtypeError

MAGIC = b"\x93NUMPY"
VERSION = (1, 0)
SUPPORTED_DESCRS = {"<f4": np.float32, "<f8": np.float64}
SUPPORTED_RANKS = (2, 4)
_HEADER_ALIGN = 64


class ArrayFileHeader:
    """Parsed NPY header: dtype code, byte order, storage order, shape."""

    def __init__(self, descr, shape):
        if descr not in SUPPORTED_DESCRS:
            raise UnsupportedDtypeError(
                f"unsupported dtype code {descr!r}; expected one of {sorted(SUPPORTED_DESCRS)}"
            )
        self.descr = descr
        self.shape = tuple(int(s) for s in shape)

    @property
    def byte_order(self):
        return "<"  # little-endian only

    @property
    def fortran_order(self):
        return False  # row-major only

    @property
    def dtype(self):
        return np.dtype(SUPPORTED_DESCRS[self.descr])

    @property
    def count(self):
        n = 1
        for s in self.shape:
            n *= s
        return n

    def encode(self):
        shape_repr = "(" + ", ".join(str(s) for s in self.shape) + ")"
        body = f"{{'descr': {self.descr!r}, 'fortran_order': False, 'shape': {shape_repr}, }}"
        base = len(MAGIC) + 2 + 2  # magic + version + u16 header length
        pad = _HEADER_ALIGN - ((base + len(body) + 1) % _HEADER_ALIGN)
        pad %= _HEADER_ALIGN
        header = body + " " * pad + "\n"
        if len(header) > 0xFFFF:
            raise MalformedHeaderError("header exceeds the v1.0 16-bit length limit")
        return (
            MAGIC
            + bytes(VERSION)
            + struct.pack("<H", len(header))
            + header.encode("latin1")
        )


def _read_exact(fh, n, what):
    data = fh.read(n)
    if len(data) != n:
        raise MalformedHeaderError(f"malformed header: truncated while reading {what}")
    return data


def read_header(fh):
    """Parse and validate the header of an open NPY file."""
    magic = _read_exact(fh, len(MAGIC), "magic bytes")
    if magic != MAGIC:
        raise MalformedHeaderError("malformed header: bad magic bytes")
    version = tuple(_read_exact(fh, 2, "version"))
    if version != VERSION:
        raise MalformedHeaderError(
            f"malformed header: version {version} not supported, expected {VERSION}"
        )
    (hlen,) = struct.unpack("<H", _read_exact(fh, 2, "header length"))
    raw = _read_exact(fh, hlen, "header dict").decode("latin1")
    try:
        meta = ast.literal_eval(raw.strip())
    except (ValueError, SyntaxError) as exc:
        raise MalformedHeaderError(f"malformed header: unparseable dict ({exc})") from exc
    if not isinstance(meta, dict) or set(meta) != {"descr", "fortran_order", "shape"}:
        raise MalformedHeaderError("malformed header: unexpected header keys")
    descr = meta["descr"]
    if not isinstance(descr, str):
        raise MalformedHeaderError("malformed header: descr is not a string")
    if descr not in SUPPORTED_DESCRS:
        raise UnsupportedDtypeError(
            f"unsupported dtype code {descr!r}; expected one of {sorted(SUPPORTED_DESCRS)}"
        )
    if meta["fortran_order"] is not False:
        raise MalformedHeaderError("malformed header: fortran_order must be False")
    shape = meta["shape"]
    if not isinstance(shape, tuple) or not all(
        isinstance(s, int) and s >= 0 for s in shape
    ):
        raise MalformedHeaderError("malformed header: shape is not a tuple of ints")
    if len(shape) not in SUPPORTED_RANKS:
        raise MalformedHeaderError(
            f"malformed header: rank {len(shape)} not supported, expected rank in {SUPPORTED_RANKS}"
        )
    return ArrayFileHeader(descr, shape)


def load_array(path):
    """Load an NPY v1.0 file as a numpy array in its stored dtype."""
    path = Path(path)
    with open(path, "rb") as fh:
        header = read_header(fh)
        itemsize = header.dtype.itemsize
        expected = header.count * itemsize
        if expected > 2**62:
            raise MalformedHeaderError("malformed header: shape overflow")
        payload = fh.read(expected + 1)
    if len(payload) != expected:
        raise MalformedHeaderError(
            f"malformed header: payload holds {len(payload)} bytes, "
            f"shape {header.shape} needs {expected}"
        )
    data = np.frombuffer(payload, dtype=header.dtype)
    return data.reshape(header.shape).copy()


def save_array(path, array, dtype=None):
    """Write ``array`` as NPY v1.0. ``dtype`` may force '<f4' or '<f8' storage."""
    arr = np.asarray(array)
    if arr.ndim not in SUPPORTED_RANKS:
        raise MalformedHeaderError(
            f"rank {arr.ndim} not supported for array files, expected rank in {SUPPORTED_RANKS}"
        )
    if dtype is None:
        dtype = "<f4" if arr.dtype == np.float32 else "<f8"
    header = ArrayFileHeader(dtype, arr.shape)
    payload = np.ascontiguousarray(arr, dtype=header.dtype)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header.encode())
        fh.write(payload.tobytes(order="C"))
    return path
