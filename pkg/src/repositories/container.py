# src/repositories/container.py
"""Binary artifact container.

Layout: 8-byte magic, little-endian uint64 header length, UTF-8 JSON header
(sorted keys, no timestamps), then the raw little-endian tensor bytes in
header order. Identical content always produces identical bytes.
"""

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from src.models.errors import Errors, StabilizerError

MAGIC = b"FACESTAB"
CONTAINER_VERSION = 1
_LENGTH = struct.Struct("<Q")


@dataclass
class Container:
    kind: str
    meta: dict[str, Any]
    tensors: dict[str, np.ndarray] = field(default_factory=dict)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via a temporary file in the destination directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def file_digest(path: Path) -> str:
    """SHA-256 of a file's bytes, hex encoded."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def encode_container(container: Container) -> bytes:
    table = []
    blobs = []
    offset = 0
    for name, tensor in container.tensors.items():
        arr = np.ascontiguousarray(tensor)
        arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        data = arr.tobytes()
        table.append(
            {
                "name": name,
                "dtype": arr.dtype.str,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(data),
            }
        )
        blobs.append(data)
        offset += len(data)
    header = json.dumps(
        {
            "format_version": CONTAINER_VERSION,
            "kind": container.kind,
            "meta": container.meta,
            "tensors": table,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return b"".join([MAGIC, _LENGTH.pack(len(header)), header, *blobs])


def write_container(path: Path, container: Container) -> None:
    atomic_write_bytes(path, encode_container(container))


def read_container(path: Path, kind: str) -> Container:
    """Read and validate a container of the expected kind."""
    path = Path(path)
    if not path.exists():
        raise StabilizerError(
            Errors.FILE_NOT_FOUND, f"File not found: {path}", filepath=str(path)
        )
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise StabilizerError(
            Errors.INCOMPATIBLE_VERSION, f"{path} is not a container file", filepath=str(path)
        )
    start = len(MAGIC) + _LENGTH.size
    if len(raw) < start:
        raise StabilizerError(Errors.INVALID_DATA_FORMAT, f"{path} is truncated")
    (header_len,) = _LENGTH.unpack(raw[len(MAGIC) : start])
    try:
        header = json.loads(raw[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise StabilizerError(
            Errors.INVALID_DATA_FORMAT, f"Corrupt header in {path}: {e}", filepath=str(path)
        ) from e

    version = header.get("format_version")
    if version != CONTAINER_VERSION:
        raise StabilizerError(
            Errors.INCOMPATIBLE_VERSION,
            f"{path} has container version {version}, expected {CONTAINER_VERSION}",
            filepath=str(path),
        )
    if header.get("kind") != kind:
        raise StabilizerError(
            Errors.INVALID_DATA_FORMAT,
            f"{path} holds a {header.get('kind')!r} artifact, expected {kind!r}",
            filepath=str(path),
        )

    body = raw[start + header_len :]
    tensors = {}
    for entry in header["tensors"]:
        end = entry["offset"] + entry["nbytes"]
        if end > len(body):
            raise StabilizerError(
                Errors.INVALID_DATA_FORMAT,
                f"{path} is truncated (tensor {entry['name']})",
                filepath=str(path),
            )
        arr = np.frombuffer(body[entry["offset"] : end], dtype=np.dtype(entry["dtype"]))
        tensors[entry["name"]] = arr.reshape(entry["shape"]).astype(
            arr.dtype.newbyteorder("="), copy=True
        )
    return Container(kind=header["kind"], meta=header["meta"], tensors=tensors)
