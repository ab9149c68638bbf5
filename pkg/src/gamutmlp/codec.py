"""Binary weight payload and its embedding in PNG files.

Payload layout, little-endian, 16-byte header followed by the weights::

    offset  size  field
    0       4     magic b"GMLP"
    4       1     version (1)
    5       1     encoder byte: bits 6-7 input mode (0 xyrgb, 1 xy, 2 rgb),
                  bits 0-5 frequency count K (0 = encoding disabled)
    6       2     hidden width, uint16
    8       4     image width, uint32
    12      4     image height, uint32
    16      4*P   float32 weights W1, b1, W2, b2, W3, b3, each row-major,
                  W stored (fan_in, fan_out)

In a PNG the payload is base64 text in an ``iTXt`` chunk with keyword
``GamutMLP``, placed just before ``IEND``. Embedding replaces any existing
``GamutMLP`` chunk.
"""
from __future__ import annotations

import base64
import binascii
import os
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .encoding import EncoderConfig, InputMode
from .mlp import MlpParams, param_count

__all__ = [
    "MAGIC",
    "VERSION",
    "HEADER_SIZE",
    "KEYWORD",
    "PayloadError",
    "BadMagicError",
    "VersionError",
    "TruncatedPayloadError",
    "MissingMetadataError",
    "MalformedMetadataError",
    "PayloadHeader",
    "payload_size",
    "serialize",
    "deserialize",
    "read_header",
    "iter_chunks",
    "make_chunk",
    "embed_png",
    "extract_png",
    "add_text_chunk",
    "sidecar_path",
    "write_sidecar",
    "read_sidecar",
]

MAGIC = b"GMLP"
VERSION = 1
KEYWORD = "GamutMLP"
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

_HEADER = struct.Struct("<4sBBHII")
HEADER_SIZE = _HEADER.size  # 16

_MODE_CODES = {InputMode.XYRGB: 0, InputMode.XY: 1, InputMode.RGB: 2}
_CODE_MODES = {v: k for k, v in _MODE_CODES.items()}
_MAX_K = 0x3F


class PayloadError(ValueError):
    """Base class for payload decoding failures."""


class BadMagicError(PayloadError):
    pass


class VersionError(PayloadError):
    pass


class TruncatedPayloadError(PayloadError):
    pass


class MissingMetadataError(PayloadError):
    """The PNG carries no ``GamutMLP`` chunk."""


class MalformedMetadataError(PayloadError):
    """The ``GamutMLP`` chunk exists but its text is not valid base64."""


@dataclass(frozen=True)
class PayloadHeader:
    version: int
    encoder: EncoderConfig
    hidden: int
    width: int
    height: int

    @property
    def param_count(self) -> int:
        return param_count(self.encoder.dim, self.hidden)

    @property
    def payload_size(self) -> int:
        return HEADER_SIZE + 4 * self.param_count


def payload_size(hidden: int = 32, encoder: EncoderConfig | None = None) -> int:
    encoder = encoder or EncoderConfig()
    return HEADER_SIZE + 4 * param_count(encoder.dim, hidden)


def _encoder_byte(encoder: EncoderConfig) -> int:
    k = encoder.k if encoder.encoding else 0
    if not 0 <= k <= _MAX_K:
        raise ValueError(f"frequency count {k} does not fit the payload header (max {_MAX_K})")
    return (_MODE_CODES[encoder.input_mode] << 6) | k


def _decode_encoder_byte(b: int) -> EncoderConfig:
    code, k = b >> 6, b & _MAX_K
    if code not in _CODE_MODES:
        raise PayloadError(f"unknown input mode code {code}")
    if k == 0:
        return EncoderConfig(input_mode=_CODE_MODES[code], encoding=False)
    return EncoderConfig(k=k, input_mode=_CODE_MODES[code])


def serialize(params: MlpParams, width: int = 0, height: int = 0) -> bytes:
    if not 0 < params.hidden <= 0xFFFF:
        raise ValueError(f"hidden width {params.hidden} does not fit in 16 bits")
    if not (0 <= width <= 0xFFFFFFFF and 0 <= height <= 0xFFFFFFFF):
        raise ValueError("image dimensions do not fit in 32 bits")
    header = _HEADER.pack(MAGIC, VERSION, _encoder_byte(params.encoder), params.hidden, width, height)
    body = b"".join(np.ascontiguousarray(w, dtype="<f4").tobytes() for w in params.weights)
    return header + body


def read_header(data: bytes) -> PayloadHeader:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"payload does not start with {MAGIC!r}")
    if len(data) < HEADER_SIZE:
        raise TruncatedPayloadError(f"payload header needs {HEADER_SIZE} bytes, got {len(data)}")
    _, version, enc, hidden, width, height = _HEADER.unpack_from(data)
    if version != VERSION:
        raise VersionError(f"unsupported payload version {version}")
    return PayloadHeader(version, _decode_encoder_byte(enc), hidden, width, height)


def deserialize(data: bytes) -> tuple[MlpParams, tuple[int, int]]:
    """Inverse of :func:`serialize`; returns ``(params, (width, height))``."""
    header = read_header(data)
    if len(data) < header.payload_size:
        raise TruncatedPayloadError(f"payload needs {header.payload_size} bytes, got {len(data)}")
    if len(data) > header.payload_size:
        raise PayloadError(f"{len(data) - header.payload_size} unexpected trailing bytes")
    h, d = header.hidden, header.encoder.dim
    shapes = [(d, h), (h,), (h, h), (h,), (h, 3), (3,)]
    weights, pos = [], HEADER_SIZE
    for shape in shapes:
        n = int(np.prod(shape))
        weights.append(np.frombuffer(data, dtype="<f4", count=n, offset=pos).astype(np.float32).reshape(shape))
        pos += 4 * n
    return MlpParams(weights, header.encoder), (header.width, header.height)


# -- PNG chunks -------------------------------------------------------------

def make_chunk(ctype: bytes, data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + ctype + data + struct.pack(">I", zlib.crc32(data, zlib.crc32(ctype)))


def iter_chunks(png: bytes):
    """Yield ``(type, data, start, end)`` for every chunk; ``start:end`` spans the whole chunk."""
    if png[:8] != PNG_SIGNATURE:
        raise ValueError("not a PNG file")
    pos = 8
    while pos < len(png):
        if pos + 8 > len(png):
            raise ValueError("truncated PNG chunk header")
        (length,) = struct.unpack_from(">I", png, pos)
        ctype = png[pos + 4 : pos + 8]
        end = pos + 12 + length
        if end > len(png):
            raise ValueError(f"truncated PNG chunk {ctype!r}")
        yield ctype, png[pos + 8 : pos + 8 + length], pos, end
        pos = end
        if ctype == b"IEND":
            break


def _itxt_keyword(data: bytes) -> str:
    return data.split(b"\0", 1)[0].decode("latin-1")


def _insert_before_iend(png: bytes, chunk: bytes, drop=lambda ctype, data: False) -> bytes:
    out = [png[:8]]
    inserted = False
    for ctype, data, start, end in iter_chunks(png):
        if drop(ctype, data):
            continue
        if ctype == b"IEND":
            out.append(chunk)
            inserted = True
        out.append(png[start:end])
    if not inserted:
        raise ValueError("PNG has no IEND chunk")
    return b"".join(out)


def _is_gamut_chunk(ctype, data):
    return ctype == b"iTXt" and _itxt_keyword(data) == KEYWORD


def embed_png(png: bytes, payload: bytes) -> bytes:
    """Return ``png`` with ``payload`` stored in a ``GamutMLP`` iTXt chunk."""
    text = base64.b64encode(payload)
    # keyword, null, compression flag, compression method, empty language tag and translated keyword
    itxt = KEYWORD.encode("latin-1") + b"\0" + b"\0\0" + b"\0" + b"\0" + text
    return _insert_before_iend(png, make_chunk(b"iTXt", itxt), drop=_is_gamut_chunk)


def _itxt_text(data: bytes) -> bytes:
    _, rest = data.split(b"\0", 1)
    if len(rest) < 2:
        raise MalformedMetadataError("GamutMLP iTXt chunk is malformed")
    if rest[0] != 0:
        raise MalformedMetadataError("compressed GamutMLP chunks are not supported")
    fields = rest[2:].split(b"\0", 2)  # language tag, translated keyword, text
    if len(fields) != 3:
        raise MalformedMetadataError("GamutMLP iTXt chunk is malformed")
    return fields[2]


def extract_png(png: bytes) -> bytes:
    """Return the payload stored by :func:`embed_png`."""
    for ctype, data, _, _ in iter_chunks(png):
        if _is_gamut_chunk(ctype, data):
            try:
                payload = base64.b64decode(_itxt_text(data), validate=True)
            except (binascii.Error, ValueError) as exc:
                if isinstance(exc, PayloadError):
                    raise
                raise MalformedMetadataError(f"GamutMLP chunk is not valid base64: {exc}") from None
            read_header(payload)
            return payload
    raise MissingMetadataError("PNG has no GamutMLP metadata chunk")


def add_text_chunk(png: bytes, keyword: str, text: str) -> bytes:
    """Insert a Latin-1 ``tEXt`` chunk before ``IEND``."""
    return _insert_before_iend(png, make_chunk(b"tEXt", keyword.encode("latin-1") + b"\0" + text.encode("latin-1")))


def read_text_chunks(png: bytes) -> dict[str, str]:
    out = {}
    for ctype, data, _, _ in iter_chunks(png):
        if ctype == b"tEXt":
            key, _, value = data.partition(b"\0")
            out[key.decode("latin-1")] = value.decode("latin-1")
    return out


# -- sidecar files ----------------------------------------------------------

def sidecar_path(image_path: str | os.PathLike) -> str:
    root, _ = os.path.splitext(os.fspath(image_path))
    return root + ".gmlp"


def write_sidecar(image_path, payload: bytes) -> str:
    path = sidecar_path(image_path)
    with open(path, "wb") as f:
        f.write(payload)
    return path


def read_sidecar(image_path) -> bytes:
    with open(sidecar_path(image_path), "rb") as f:
        payload = f.read()
    read_header(payload)
    return payload
