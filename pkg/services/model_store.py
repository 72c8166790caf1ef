"""
Binary model files.

Layout (little-endian):

    magic      4 bytes  b"NEPD"
    version    u16
    desc_len   u32
    descriptor desc_len bytes of UTF-8 JSON (architecture, sizes, dtype,
               seed, scheme, config digest)
    blobs      per parameter array in declaration order:
               u8 ndim, ndim x u32 dims, raw values at the declared dtype
    crc32      u32 over every preceding byte
"""

import json
import logging
import os
import struct
import zlib
from typing import List, Optional, Tuple

import numpy as np

from config.constants import MODEL_FORMAT_VERSION, MODEL_MAGIC
from services.network import Network, init_network
from utils.errors import CorruptChecksum, FormatVersionMismatch, ModelFormatError

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sHI")
_CRC = struct.Struct("<I")


def encode_model(net: Network, config_digest: Optional[str] = None) -> bytes:
    """Serialize a network to the binary model format."""
    descriptor = net.describe()
    descriptor["config_digest"] = config_digest
    desc_bytes = json.dumps(descriptor, sort_keys=True, separators=(",", ":")).encode("utf-8")

    le_dtype = net.dtype.newbyteorder("<")
    parts = [_HEADER.pack(MODEL_MAGIC, MODEL_FORMAT_VERSION, len(desc_bytes)), desc_bytes]
    for param in net.parameters():
        parts.append(struct.pack("<B", param.ndim))
        parts.append(struct.pack(f"<{param.ndim}I", *param.shape))
        parts.append(np.ascontiguousarray(param, dtype=le_dtype).tobytes())
    body = b"".join(parts)
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def save_model(net: Network, path: str, config_digest: Optional[str] = None) -> None:
    """Write ``net`` to ``path``.

    Args:
        net: Network to save.
        path: Destination file; parent directories are created.
        config_digest: Digest of the configuration that produced the model.
    """
    data = encode_model(net, config_digest)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as f:
        f.write(data)
    logger.info("Saved model (%d bytes) to %s", len(data), path)


def decode_model(data: bytes) -> Tuple[Network, dict]:
    """Parse model bytes.

    Returns:
        Tuple of (network, descriptor dict).

    Raises:
        ModelFormatError: Bad magic or malformed contents.
        FormatVersionMismatch: Unsupported format version.
        CorruptChecksum: Truncated data or CRC mismatch.
    """
    if len(data) < _HEADER.size + _CRC.size:
        raise CorruptChecksum("Model file is truncated")
    magic, version, desc_len = _HEADER.unpack_from(data, 0)
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"Not a model file (magic {magic!r})")
    if version != MODEL_FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"Model format version {version} is not supported (expected {MODEL_FORMAT_VERSION})"
        )
    body, (stored_crc,) = data[:-_CRC.size], _CRC.unpack(data[-_CRC.size:])
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise CorruptChecksum("Model file checksum mismatch (truncated or corrupted)")

    offset = _HEADER.size
    try:
        descriptor = json.loads(body[offset:offset + desc_len].decode("utf-8"))
        offset += desc_len
        dtype = np.dtype(descriptor["dtype"]).newbyteorder("<")
        net = init_network(
            descriptor["input_size"],
            descriptor["n_classes"],
            arch=descriptor["layers"],
            seed=descriptor["seed"],
            dtype=np.dtype(descriptor["dtype"]),
            scheme=descriptor["scheme"],
        )
        values: List[np.ndarray] = []
        for _ in net.parameters():
            (ndim,) = struct.unpack_from("<B", body, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", body, offset)
            offset += 4 * ndim
            count = int(np.prod(shape)) if shape else 1
            blob = np.frombuffer(body, dtype=dtype, count=count, offset=offset)
            offset += count * dtype.itemsize
            values.append(blob.reshape(shape).astype(net.dtype))
        net.set_parameters(values)
    except (KeyError, ValueError, struct.error) as e:
        raise ModelFormatError(f"Malformed model file: {e}") from e
    if offset != len(body):
        raise ModelFormatError("Trailing bytes after parameter blobs")
    return net, descriptor


def load_model(path: str) -> Network:
    """Read a network from ``path``.

    Raises:
        OSError: If the file cannot be read.
        ModelFormatError: If the contents are invalid.
    """
    with open(path, "rb") as f:
        data = f.read()
    net, _ = decode_model(data)
    logger.debug("Loaded %s model (K=%d) from %s", net.scheme, net.input_size, path)
    return net


def model_digest(path: str) -> Optional[str]:
    """Config digest recorded in a model file."""
    with open(path, "rb") as f:
        _, descriptor = decode_model(f.read())
    return descriptor.get("config_digest")
