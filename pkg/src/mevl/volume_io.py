"""Bit-exact `.mev` container for evidence, label and scalar volumes.

Layout (all multi-byte fields little-endian, 38-byte header)::

    offset  size  field
    0       4     magic "MEVL"
    4       4     format_version (u32, currently 1)
    8       1     kind (u8): 0 EVIDENCE, 1 LABELS, 2 SCALAR_FIELD
    9       4     K (u32): class count (0 for scalar fields)
    13      12    dims H, W, L (3 x u32)
    25      12    spacing sx, sy, sz in mm (3 x f32)
    37      1     payload dtype (u8): 0 F32, 1 U16
    38      ...   payload

EVIDENCE payloads hold K*H*W*L float32 values, channels-major in C row
order; LABELS hold H*W*L uint16 (65535 marks contentious voxels); scalar
fields hold H*W*L float32. Reading back a written file and rewriting it
reproduces the original bytes exactly.

Failures carry a stable ``code``: "io-failure" (OS-level), "corrupt-header"
(bad magic/version/kind/dtype/spacing), "size-mismatch" (payload length),
"serialization" (non-finite CSV values).

External converters (e.g. from NIfTI) must map: dim[1..3] -> H, W, L;
pixdim[1..3] -> spacing; per-class channels -> the leading EVIDENCE axis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

MAGIC = b"MEVL"
FORMAT_VERSION = 1
CONTENTIOUS_LABEL = 0xFFFF

_HEADER = struct.Struct("<4sIBI3I3fB")


class VolumeKind(IntEnum):
    EVIDENCE = 0
    LABELS = 1
    SCALAR_FIELD = 2


class PayloadDtype(IntEnum):
    F32 = 0
    U16 = 1


_KIND_DTYPE = {
    VolumeKind.EVIDENCE: (PayloadDtype.F32, np.float32),
    VolumeKind.LABELS: (PayloadDtype.U16, np.uint16),
    VolumeKind.SCALAR_FIELD: (PayloadDtype.F32, np.float32),
}


class VolumeIoError(Exception):
    """Base class; ``code`` distinguishes the failure category."""

    code = "volume-io"


class IoFailureError(VolumeIoError):
    code = "io-failure"


class CorruptHeaderError(VolumeIoError):
    code = "corrupt-header"


class SizeMismatchError(VolumeIoError):
    code = "size-mismatch"


class CsvSerializationError(VolumeIoError):
    code = "serialization"


@dataclass(frozen=True)
class Volume:
    """An immutable typed volume: data plus spacing and class count."""

    kind: VolumeKind
    data: np.ndarray  # (K, H, W, L) for EVIDENCE, else (H, W, L)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    k: int = 0

    def __post_init__(self):
        _, np_dtype = _KIND_DTYPE[self.kind]
        data = np.ascontiguousarray(self.data, dtype=np_dtype)
        if self.kind is VolumeKind.EVIDENCE:
            if data.ndim != 4:
                raise ValueError("evidence volumes have shape (K, H, W, L)")
            k = data.shape[0]
            if k < 2:
                raise ValueError("evidence volumes need K >= 2")
        else:
            if data.ndim != 3:
                raise ValueError("volumes have shape (H, W, L)")
            k = int(self.k)
        if np_dtype is np.float32 and not np.all(np.isfinite(data)):
            raise ValueError("volume data must be finite")
        # spacing round-trips through f32 in the header
        sp = tuple(float(np.float32(s)) for s in self.spacing)
        if any(not np.isfinite(s) or s <= 0 for s in sp):
            raise ValueError("spacing must be positive and finite")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", sp)
        object.__setattr__(self, "k", k)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(self.data.shape[1:] if self.kind is VolumeKind.EVIDENCE else self.data.shape)


def evidence_volume(data, spacing=(1.0, 1.0, 1.0)) -> Volume:
    return Volume(kind=VolumeKind.EVIDENCE, data=data, spacing=spacing)


def label_volume(data, k: int, spacing=(1.0, 1.0, 1.0)) -> Volume:
    return Volume(kind=VolumeKind.LABELS, data=data, spacing=spacing, k=k)


def scalar_volume(data, spacing=(1.0, 1.0, 1.0)) -> Volume:
    return Volume(kind=VolumeKind.SCALAR_FIELD, data=data, spacing=spacing)


def write_volume(volume: Volume, path) -> None:
    """Serialize a volume; the payload is the raw C-order array bytes."""
    dims = volume.dims
    dtype_code, _ = _KIND_DTYPE[volume.kind]
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        int(volume.kind),
        volume.k,
        *dims,
        *volume.spacing,
        int(dtype_code),
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(volume.data.tobytes(order="C"))
    except OSError as exc:
        raise IoFailureError(f"cannot write {path!r}: {exc}") from exc


def read_volume(path) -> Volume:
    """Parse a `.mev` file, rejecting malformed headers and payloads."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailureError(f"cannot read {path!r}: {exc}") from exc

    if len(raw) < _HEADER.size:
        raise CorruptHeaderError(f"file too short for header: {len(raw)} bytes")
    magic, version, kind_b, k, h, w, l, sx, sy, sz, dtype_b = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CorruptHeaderError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CorruptHeaderError(f"unsupported format version {version}")
    try:
        kind = VolumeKind(kind_b)
        dtype = PayloadDtype(dtype_b)
    except ValueError as exc:
        raise CorruptHeaderError(str(exc)) from exc
    expected_dtype, np_dtype = _KIND_DTYPE[kind]
    if dtype is not expected_dtype:
        raise CorruptHeaderError(f"kind {kind.name} does not store {dtype.name} payloads")
    if min(h, w, l) == 0:
        raise CorruptHeaderError("zero-sized dims")
    if any(not np.isfinite(s) or s <= 0 for s in (sx, sy, sz)):
        raise CorruptHeaderError("non-positive spacing")
    if kind is VolumeKind.EVIDENCE and k < 2:
        raise CorruptHeaderError("evidence volumes need K >= 2")

    n_values = h * w * l * (k if kind is VolumeKind.EVIDENCE else 1)
    payload = raw[_HEADER.size :]
    expect_bytes = n_values * np.dtype(np_dtype).itemsize
    if len(payload) != expect_bytes:
        raise SizeMismatchError(
            f"payload holds {len(payload)} bytes, header implies {expect_bytes}"
        )
    shape = (k, h, w, l) if kind is VolumeKind.EVIDENCE else (h, w, l)
    data = np.frombuffer(payload, dtype=np.dtype(np_dtype).newbyteorder("<")).reshape(shape)
    if np_dtype is np.float32 and not np.all(np.isfinite(data)):
        raise CorruptHeaderError("payload contains non-finite values")
    return Volume(kind=kind, data=data, spacing=(sx, sy, sz), k=k)


def export_csv(field, path) -> None:
    """Write a scalar field as ``i,j,k,value`` lines, 9 significant digits.

    Rows are emitted in C (row-major) index order. Non-finite values are a
    serialization error.
    """
    if isinstance(field, Volume):
        if field.kind is not VolumeKind.SCALAR_FIELD:
            raise ValueError("CSV export takes a scalar field")
        arr = field.data
    else:
        arr = np.asarray(field)
    if arr.ndim != 3:
        raise ValueError("scalar fields have shape (H, W, L)")
    if not np.all(np.isfinite(arr)):
        raise CsvSerializationError("field contains non-finite values")
    try:
        with open(path, "w", encoding="ascii") as fh:
            for (i, j, k), v in np.ndenumerate(arr):
                fh.write(f"{i},{j},{k},{v:.9g}\n")
    except OSError as exc:
        raise IoFailureError(f"cannot write {path!r}: {exc}") from exc
