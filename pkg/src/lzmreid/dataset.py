"""Image decoding and resizing, manifest CSV, and the LZMF feature container.

LZMF layout (all integers little-endian)::

    b"LZMF"  uint32 version  uint64 rows  uint64 dim
    rows*dim float32, row-major
    rows x (uint32 byte length, UTF-8 id)
    uint32 byte length, UTF-8 JSON metadata
"""
from __future__ import annotations

import csv
import io
import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, InvalidArgumentError

TARGET_HEIGHT = 492
TARGET_WIDTH = 164

IR_CAMERAS = frozenset({3, 6})
RGB_CAMERAS = frozenset({1, 2, 4, 5})

# ---------------------------------------------------------------- images

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _check_png(data: bytes) -> None:
    """Walk the chunk list so truncation is reported with a byte offset."""
    pos = len(_PNG_SIGNATURE)
    seen_end = False
    while pos < len(data):
        if pos + 8 > len(data):
            raise FormatError(f"truncated PNG: chunk header cut at byte offset {pos}")
        length, ctype = struct.unpack(">I4s", data[pos:pos + 8])
        end = pos + 12 + length
        if end > len(data):
            raise FormatError(
                f"truncated PNG: chunk {ctype!r} at byte offset {pos} needs {end} bytes, "
                f"file has {len(data)}"
            )
        crc = struct.unpack(">I", data[end - 4:end])[0]
        if zlib.crc32(data[pos + 4:end - 4]) != crc:
            raise FormatError(f"corrupt PNG: CRC mismatch in chunk {ctype!r} at byte offset {pos}")
        if ctype == b"IHDR":
            bit_depth = data[pos + 16]
            if bit_depth != 8:
                raise FormatError(f"unsupported PNG bit depth {bit_depth} (only 8 is supported)")
        pos = end
        if ctype == b"IEND":
            seen_end = True
            break
    if not seen_end:
        raise FormatError(f"truncated PNG: no IEND chunk before byte offset {len(data)}")


def _read_netpbm(data: bytes) -> np.ndarray:
    magic = data[:2]
    channels = {b"P5": 1, b"P6": 3}.get(magic)
    if channels is None:
        raise FormatError(f"unsupported netpbm magic {magic!r} (binary P5/P6 only)")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError(f"malformed netpbm header at byte offset {start}")
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace byte before the raster
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"unsupported netpbm maxval {maxval} (only 8-bit is supported)")
    need = width * height * channels
    if len(data) - pos < need:
        raise FormatError(
            f"truncated netpbm raster: expected {need} bytes from offset {pos}, "
            f"got {len(data) - pos}"
        )
    raster = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return raster.reshape(height, width, channels)


def load_image(path) -> np.ndarray:
    """Decode an 8-bit PNG or binary PGM/PPM to an H x W x {1, 3} float array in [0, 1]."""
    data = Path(path).read_bytes()
    if data.startswith(_PNG_SIGNATURE):
        _check_png(data)
        with Image.open(io.BytesIO(data)) as im:
            if im.mode == "P":
                im = im.convert("RGB")
            elif im.mode == "LA":
                im = im.convert("L")
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)[:, :, None]
            elif im.mode in ("RGB", "RGBA"):
                arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
            else:
                raise FormatError(f"unsupported PNG mode {im.mode!r}")
    elif data[:2] in (b"P5", b"P6"):
        arr = _read_netpbm(data)
    else:
        raise FormatError(f"{path}: unsupported image format")
    return arr.astype(np.float64) / 255.0


def save_image(image, path) -> None:
    """Write a [0, 1] raster as 8-bit PNG (1 or 3 channels)."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    u8 = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(u8, mode="L" if u8.ndim == 2 else "RGB").save(path, format="PNG")


def resize(image, height: int = TARGET_HEIGHT, width: int = TARGET_WIDTH) -> np.ndarray:
    """Bilinear resize with edge-clamped sampling (pixel-centre alignment)."""
    arr = np.asarray(image, dtype=np.float64)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidArgumentError(f"cannot resize raster of shape {np.shape(image)}")
    H, W = arr.shape[:2]
    if (H, W) == (height, width):
        out = arr.copy()
    else:
        def axis(src, dst):
            pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
            pos = np.clip(pos, 0, src - 1)
            lo = np.floor(pos).astype(np.intp)
            hi = np.minimum(lo + 1, src - 1)
            return lo, hi, pos - lo

        y0, y1, wy = axis(H, height)
        x0, x1, wx = axis(W, width)
        wy = wy[:, None, None]
        wx = wx[None, :, None]
        top = arr[y0][:, x0] * (1 - wx) + arr[y0][:, x1] * wx
        bot = arr[y1][:, x0] * (1 - wx) + arr[y1][:, x1] * wx
        out = top * (1 - wy) + bot * wy
    return out[:, :, 0] if squeeze else out


# -------------------------------------------------------------- manifest

MANIFEST_COLUMNS = ("id", "path", "person_id", "camera_id", "modality")


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    path: str
    person_id: int
    camera_id: int
    modality: str

    def validate(self) -> "ManifestEntry":
        if self.camera_id not in IR_CAMERAS | RGB_CAMERAS:
            raise InvalidArgumentError(f"{self.image_id}: camera id {self.camera_id} not in 1-6")
        expected = "ir" if self.camera_id in IR_CAMERAS else "rgb"
        if self.modality != expected:
            raise InvalidArgumentError(
                f"{self.image_id}: camera {self.camera_id} is {expected}, "
                f"manifest says {self.modality!r}"
            )
        return self


def _check_unique(entries) -> None:
    seen = set()
    for e in entries:
        if e.image_id in seen:
            raise InvalidArgumentError(f"duplicate image id {e.image_id!r}")
        seen.add(e.image_id)


def read_manifest(path) -> list[ManifestEntry]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty manifest") from None
        for col in MANIFEST_COLUMNS:
            if col not in header:
                raise FormatError(f"{path}: missing column {col!r}")
        pos = {c: header.index(c) for c in MANIFEST_COLUMNS}
        entries = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                entry = ManifestEntry(
                    row[pos["id"]],
                    row[pos["path"]],
                    int(row[pos["person_id"]]),
                    int(row[pos["camera_id"]]),
                    row[pos["modality"]],
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{line}: {exc}") from None
            try:
                entry.validate()
            except InvalidArgumentError as exc:
                raise InvalidArgumentError(f"{path}:{line}: {exc}") from None
            entries.append(entry)
    _check_unique(entries)
    return entries


def write_manifest(entries, path) -> None:
    entries = [e.validate() for e in entries]
    _check_unique(entries)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for e in entries:
            writer.writerow([e.image_id, e.path, e.person_id, e.camera_id, e.modality])


def resolve_path(entry: ManifestEntry, manifest_path) -> Path:
    p = Path(entry.path)
    return p if p.is_absolute() else Path(manifest_path).parent / p


# ------------------------------------------------------- feature container

MAGIC = b"LZMF"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def write_features(ids, matrix, path, metadata=None) -> None:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise InvalidArgumentError(f"matrix shape {matrix.shape} does not match {len(ids)} ids")
    if len(set(ids)) != len(ids):
        raise InvalidArgumentError("feature ids must be unique")
    rows, dim = matrix.shape
    parts = [_HEADER.pack(MAGIC, VERSION, rows, dim),
             np.ascontiguousarray(matrix, dtype="<f4").tobytes()]
    for i in ids:
        raw = str(i).encode("utf-8")
        parts += [struct.pack("<I", len(raw)), raw]
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    parts += [struct.pack("<I", len(meta)), meta]
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_features(path) -> tuple[list[str], np.ndarray, dict]:
    """Returns (ids, float32 matrix, metadata)."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: {len(data)} bytes is shorter than the {_HEADER.size}-byte header")
    magic, version, rows, dim = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    pos = _HEADER.size
    payload = rows * dim * 4
    if len(data) - pos < payload:
        raise FormatError(
            f"{path}: header declares {rows}x{dim} floats ({payload} bytes), "
            f"only {len(data) - pos} bytes follow the header"
        )
    matrix = np.frombuffer(data, dtype="<f4", count=rows * dim, offset=pos).reshape(rows, dim)
    pos += payload

    def take(n):
        nonlocal pos
        if pos + n > len(data):
            raise FormatError(f"{path}: expected {n} bytes at offset {pos}, file has {len(data)}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    ids = []
    for _ in range(rows):
        (n,) = struct.unpack("<I", take(4))
        ids.append(take(n).decode("utf-8"))
    (n,) = struct.unpack("<I", take(4))
    metadata = json.loads(take(n).decode("utf-8"))
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes after metadata")
    if len(set(ids)) != len(ids):
        raise FormatError(f"{path}: duplicate row ids")
    return ids, matrix.astype(np.float32), metadata
