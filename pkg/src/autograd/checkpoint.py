"""Binary parameter manifest.

Layout (little-endian):

    magic    4 bytes  b"AMDC"
    version  u8       1
    count    u32      number of tensors
    per tensor:
        name_len  u16, name  utf-8 bytes
        ndim      u8,  dims  ndim x u32
        length    u64  number of fp64 values (== product of dims)
        values    length x f64
"""

import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from src.utils.exceptions import ConfigError
from src.utils.logger import setup_logging

logger = setup_logging(__name__)

MAGIC = b"AMDC"
VERSION = 1


def encode_checkpoint(tensors: Mapping[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<BI", VERSION, len(tensors))]
    for name, array in tensors.items():
        values = np.ascontiguousarray(array, dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", values.ndim))
        chunks.append(struct.pack(f"<{values.ndim}I", *values.shape))
        chunks.append(struct.pack("<Q", values.size))
        chunks.append(values.tobytes())
    return b"".join(chunks)


def decode_checkpoint(blob: bytes) -> dict[str, np.ndarray]:
    try:
        if blob[:4] != MAGIC:
            raise ConfigError("not a checkpoint file (bad magic)")
        version, count = struct.unpack_from("<BI", blob, 4)
        if version != VERSION:
            raise ConfigError(f"unsupported checkpoint version {version}")
        offset = 9
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            name = blob[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (ndim,) = struct.unpack_from("<B", blob, offset)
            offset += 1
            dims = struct.unpack_from(f"<{ndim}I", blob, offset)
            offset += 4 * ndim
            (length,) = struct.unpack_from("<Q", blob, offset)
            offset += 8
            if length != int(np.prod(dims, dtype=np.int64)):
                raise ConfigError(f"checkpoint entry {name}: length {length} != shape {dims}")
            end = offset + 8 * length
            if end > len(blob):
                raise ConfigError(f"checkpoint truncated inside entry {name}")
            tensors[name] = np.frombuffer(blob[offset:end], dtype="<f8").astype(np.float64).reshape(dims)
            offset = end
        return tensors
    except struct.error as e:
        raise ConfigError(f"checkpoint truncated: {e}") from e


def save_checkpoint(path: str | Path, tensors: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode_checkpoint(tensors))
    tmp.replace(path)
    logger.info(f"Saved checkpoint {path} ({len(tensors)} tensors)")
    return path


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())
