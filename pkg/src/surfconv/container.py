"""Single-file container for named arrays.

Layout: an 8-byte little-endian unsigned manifest length, the UTF-8 JSON
manifest, zero padding to the next 8-byte boundary, then one raw
little-endian blob per array concatenated in manifest order, each starting
on an 8-byte boundary.  The manifest lists every array's name, element type
(``f32`` or ``u32``), and byte length; array shapes and any domain metadata
ride in the manifest's ``meta`` object.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import FormatError

CONTAINER_VERSION = 1

_DTYPES = {"f32": np.dtype("<f4"), "u32": np.dtype("<u4")}


def _pad_to(buf: bytearray, alignment: int = 8) -> None:
    remainder = len(buf) % alignment
    if remainder:
        buf.extend(b"\x00" * (alignment - remainder))


def _tag_for(array: np.ndarray) -> str:
    if np.issubdtype(array.dtype, np.floating):
        return "f32"
    if np.issubdtype(array.dtype, np.integer):
        return "u32"
    raise FormatError(f"unsupported array dtype {array.dtype}")


def _encode(array: np.ndarray, tag: str) -> bytes:
    if tag == "u32":
        if array.size and (array.min() < 0 or array.max() > np.iinfo(np.uint32).max):
            raise FormatError("integer array out of u32 range")
    return np.ascontiguousarray(array, dtype=_DTYPES[tag]).tobytes()


def write_arrays(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Write named arrays with shared metadata to ``path``.

    Floating arrays are stored as little-endian f32, integer arrays as u32.
    Shapes are recorded in ``meta`` so readers can reverse the flattening.
    """
    entries = []
    blobs = []
    shapes = {}
    for name, array in arrays.items():
        array = np.asarray(array)
        tag = _tag_for(array)
        blob = _encode(array, tag)
        entries.append({"name": name, "dtype": tag, "byte_length": len(blob)})
        blobs.append(blob)
        shapes[name] = list(array.shape)
    manifest = {
        "version": CONTAINER_VERSION,
        "meta": {**meta, "shapes": shapes},
        "arrays": entries,
    }
    payload = json.dumps(manifest, sort_keys=True).encode("utf-8")
    buf = bytearray()
    buf.extend(len(payload).to_bytes(8, "little"))
    buf.extend(payload)
    for blob in blobs:
        _pad_to(buf)
        buf.extend(blob)
    with open(path, "wb") as fh:
        fh.write(bytes(buf))


def read_arrays(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a container back as ``(meta, arrays)``.

    Arrays come back with their stored element types (f32 / u32) and the
    shapes recorded at write time.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise FormatError("container too short for its header")
    manifest_len = int.from_bytes(raw[:8], "little")
    if 8 + manifest_len > len(raw):
        raise FormatError("manifest length exceeds file size")
    try:
        manifest = json.loads(raw[8 : 8 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad manifest: {exc}") from exc
    if manifest.get("version") != CONTAINER_VERSION:
        raise FormatError(f"unsupported container version {manifest.get('version')!r}")
    meta = manifest.get("meta", {})
    shapes = meta.get("shapes", {})
    arrays: dict[str, np.ndarray] = {}
    offset = 8 + manifest_len
    for entry in manifest.get("arrays", []):
        offset += (-offset) % 8
        name = entry["name"]
        tag = entry["dtype"]
        length = entry["byte_length"]
        if tag not in _DTYPES:
            raise FormatError(f"array {name!r} has unknown dtype {tag!r}")
        if offset + length > len(raw):
            raise FormatError(f"array {name!r} extends past end of file")
        flat = np.frombuffer(raw[offset : offset + length], dtype=_DTYPES[tag])
        shape = shapes.get(name)
        arrays[name] = flat.reshape(shape) if shape is not None else flat
        offset += length
    return meta, arrays
