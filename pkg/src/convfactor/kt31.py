"""Reader/writer for the KT31 binary tensor format.

Layout: magic ``4B 54 33 31`` ("KT31"), u32 little-endian version (= 1),
u8 dtype code (1 = float32), u8 ndim, then ndim u32 little-endian extents,
then the row-major float32 little-endian payload.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeError

MAGIC = b"KT31"
VERSION = 1
DTYPE_FLOAT32 = 1

_MAX_NDIM = 4


def write_kt31(path, array):
    """Write an array (1 to 4 axes) as a KT31 file, cast to float32."""
    arr = np.asarray(array, dtype=np.float64)
    if not 1 <= arr.ndim <= _MAX_NDIM:
        raise ShapeError(f"KT31 stores 1..{_MAX_NDIM} axes, got {arr.ndim}")
    if min(arr.shape) < 1:
        raise ShapeError("KT31 extents must all be >= 1")
    header = MAGIC + struct.pack("<IBB", VERSION, DTYPE_FLOAT32, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_kt31(path):
    """Read a KT31 file into a float64 array; rejects malformed files."""
    data = Path(path).read_bytes()
    if len(data) < 10:
        raise FormatError(f"{path}: truncated KT31 header")
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    version, dtype, ndim = struct.unpack_from("<IBB", data, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported KT31 version {version}")
    if dtype != DTYPE_FLOAT32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    if not 1 <= ndim <= _MAX_NDIM:
        raise FormatError(f"{path}: axis count {ndim} out of range")
    offset = 10
    if len(data) < offset + 4 * ndim:
        raise FormatError(f"{path}: truncated extent list")
    dims = struct.unpack_from(f"<{ndim}I", data, offset)
    offset += 4 * ndim
    if min(dims) < 1:
        raise FormatError(f"{path}: zero extent in {dims}")
    count = int(np.prod(dims))
    if len(data) - offset != 4 * count:
        raise FormatError(
            f"{path}: payload holds {(len(data) - offset) // 4} scalars, "
            f"expected {count}"
        )
    flat = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
    return flat.reshape(dims).astype(np.float64)
