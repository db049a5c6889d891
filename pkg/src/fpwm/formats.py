"""Binary containers for encoded symbol streams and sampled waveforms.

Symbol stream::

    b"FPWM" | version u8 | K u8 | m u16 LE | payload bits u64 LE | one u8 per symbol

Waveform::

    b"FPWV" | version u8 | S u32 LE | sample count u64 LE | float64 LE samples
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

STREAM_MAGIC = b"FPWM"
WAVE_MAGIC = b"FPWV"
VERSION = 1

_STREAM_HEADER = struct.Struct("<4sBBHQ")
_WAVE_HEADER = struct.Struct("<4sBIQ")


class FormatError(ValueError):
    pass


@dataclass
class StreamContainer:
    K: int
    m: int
    bit_count: int
    symbols: np.ndarray


def pack_stream(K: int, m: int, bit_count: int, symbols) -> bytes:
    if not 1 <= K <= 255:
        raise FormatError(f"K={K} does not fit the one-byte header field")
    if not 1 <= m <= 0xFFFF:
        raise FormatError(f"m={m} does not fit the two-byte header field")
    sym = np.asarray(symbols)
    if len(sym) % m:
        raise FormatError(f"{len(sym)} symbols is not frame-aligned for m={m}")
    if sym.size and (sym.min() < 0 or sym.max() > K):
        raise FormatError(f"symbol values must lie in 0..{K}")
    return _STREAM_HEADER.pack(STREAM_MAGIC, VERSION, K, m, bit_count) + sym.astype(np.uint8).tobytes()


def unpack_stream(data: bytes) -> StreamContainer:
    if len(data) < _STREAM_HEADER.size:
        raise FormatError("truncated stream header")
    magic, version, K, m, bit_count = _STREAM_HEADER.unpack_from(data)
    if magic != STREAM_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {STREAM_MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported stream version {version}")
    if K < 1 or m < 1:
        raise FormatError(f"invalid scheme K={K}, m={m} in header")
    symbols = np.frombuffer(data, dtype=np.uint8, offset=_STREAM_HEADER.size).astype(np.int32)
    if len(symbols) % m:
        raise FormatError(f"{len(symbols)} symbols is not frame-aligned for m={m}")
    return StreamContainer(K, m, bit_count, symbols)


def pack_waveform(samples, samples_per_ui: int) -> bytes:
    x = np.asarray(samples, dtype="<f8")
    return _WAVE_HEADER.pack(WAVE_MAGIC, VERSION, samples_per_ui, len(x)) + x.tobytes()


def unpack_waveform(data: bytes) -> tuple[np.ndarray, int]:
    if len(data) < _WAVE_HEADER.size:
        raise FormatError("truncated waveform header")
    magic, version, S, count = _WAVE_HEADER.unpack_from(data)
    if magic != WAVE_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {WAVE_MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported waveform version {version}")
    body = len(data) - _WAVE_HEADER.size
    if body != 8 * count:
        raise FormatError(f"header declares {count} samples but {body} bytes follow")
    x = np.frombuffer(data, dtype="<f8", offset=_WAVE_HEADER.size).astype(float)
    return x, S


def bytes_to_bits(data: bytes) -> list[int]:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8)).tolist()


def bits_to_bytes(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()
