"""Pipelined enumerative encoder/decoder for FPWM frames.

Each digit position (MSD first) owns a small table of cumulative thresholds
built from the count vector of the remaining frame length.  Encoding picks the
symbol whose threshold interval holds the residual and subtracts the
threshold; decoding adds the thresholds back.  No stage looks at the symbol
chosen by the previous stage: the residual after emitting ``S_q`` is always
below ``v_{r,q}``, which in turn forces the next symbol into ``S_0..S_q``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .combinatorics import FpwmParams, allowed, bits_per_frame, count_vectors


class FrameError(ValueError):
    """A received frame breaks the adjacency or frame-end rule."""

    def __init__(self, message: str, digit: int | None = None, frame: int | None = None):
        super().__init__(message)
        self.digit = digit
        self.frame = frame

    def __str__(self):
        msg = super().__str__()
        if self.frame is not None:
            msg = f"frame {self.frame}: {msg}"
        return msg


class NonPayloadCodeword(FrameError):
    """Rank in ``[2^n, N)``: a legal frame that no bit chunk maps to."""


class Level(enum.IntEnum):
    LOW = 0
    HIGH = 1

    def toggled(self) -> "Level":
        return Level(1 - self)


@dataclass(frozen=True)
class StageTable:
    """Thresholds for one digit; ``length`` counts the current digit too.

    ``cum[q] = sum(v_{length,h} for h < q)`` so ``cum`` has ``K+2`` entries.
    """

    length: int
    cum: tuple[int, ...]

    def width(self, q: int) -> int:
        return self.cum[q + 1] - self.cum[q]


@dataclass(frozen=True)
class Verdict:
    valid: bool
    position: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.valid


@dataclass(frozen=True)
class Codec:
    params: FpwmParams
    n: int
    stages: tuple[StageTable, ...]

    @property
    def N(self) -> int:
        return self.stages[0].cum[-1]

    @property
    def K(self) -> int:
        return self.params.K

    @property
    def m(self) -> int:
        return self.params.m


def build_codec(params: FpwmParams) -> Codec:
    vectors = count_vectors(params)
    stages = []
    for i in range(params.m):
        v = vectors[params.m - i - 1]
        cum = [0]
        for c in v.counts:
            cum.append(cum[-1] + c)
        stages.append(StageTable(v.r, tuple(cum)))
    return Codec(params, bits_per_frame(params), tuple(stages))


def encode_rank(codec: Codec, x: int, check: bool = False) -> tuple[int, ...]:
    """Map any rank ``0 <= x < N`` to its frame."""
    if not 0 <= x < codec.N:
        raise ValueError(f"rank {x} outside [0, N={codec.N})")
    out = []
    residual = x
    for stage in codec.stages:
        cum = stage.cum
        q = 0
        # linear scan; zero-width intervals are skipped by the strict test
        while residual >= cum[q + 1]:
            q += 1
        residual -= cum[q]
        if check:
            assert residual < stage.width(q)
        out.append(q)
    assert residual == 0
    return tuple(out)


def encode_frame(codec: Codec, x: int, check: bool = False) -> tuple[int, ...]:
    """Encode an ``n``-bit chunk value into a frame of ``m`` symbols."""
    if not 0 <= x < (1 << codec.n):
        raise ValueError(
            f"chunk value {x} outside [0, 2^n={1 << codec.n}) (N={codec.N} frames exist)"
        )
    return encode_rank(codec, x, check)


def validate_frame(params: FpwmParams, frame: Sequence[int]) -> Verdict:
    K, m = params.K, params.m
    if len(frame) != m:
        return Verdict(False, None, f"frame length {len(frame)} != m={m}")
    for i, q in enumerate(frame):
        if not 0 <= q <= K:
            return Verdict(False, i, f"symbol {q} outside 0..{K}")
    for i in range(1, m):
        if not allowed(K, frame[i - 1], frame[i]):
            return Verdict(
                False, i, f"S_{frame[i]} may not follow S_{frame[i - 1]}"
            )
    if frame[-1] not in (0, K):
        return Verdict(False, m - 1, f"frame ends in S_{frame[-1]}, must be S_0 or S_{K}")
    return Verdict(True)


def decode_frame(codec: Codec, frame: Sequence[int]) -> int:
    """Rank of a valid frame; the inverse of :func:`encode_rank`."""
    verdict = validate_frame(codec.params, frame)
    if not verdict:
        raise FrameError(verdict.reason, digit=verdict.position)
    return sum(stage.cum[q] for stage, q in zip(codec.stages, frame))


def bits_to_int(bits: Sequence[int]) -> int:
    x = 0
    for b in bits:
        x = (x << 1) | int(b)
    return x


def int_to_bits(x: int, n: int) -> list[int]:
    return [(x >> (n - 1 - i)) & 1 for i in range(n)]


def chunk_values(bits: Sequence[int], n: int) -> list[int]:
    """Split MSB-first bits into ``n``-bit values, right-padding the tail with zeros."""
    values = []
    for start in range(0, len(bits), n):
        chunk = list(bits[start:start + n])
        chunk += [0] * (n - len(chunk))
        values.append(bits_to_int(chunk))
    return values


def polarity_levels(symbols: Sequence[int], initial: Level = Level.LOW) -> tuple[np.ndarray, Level]:
    """Line level entering each UI, plus the level after the last symbol.

    Every non-``S_0`` symbol carries exactly one edge, so the level toggles
    there and only there.
    """
    s = np.asarray(symbols, dtype=np.int64)
    edges = (s != 0).astype(np.int64)
    before = np.concatenate(([0], np.cumsum(edges)[:-1])) if len(s) else np.zeros(0, np.int64)
    levels = ((before + int(initial)) & 1).astype(np.uint8)
    final = Level((int(edges.sum()) + int(initial)) & 1)
    return levels, final


@dataclass
class EncodedStream:
    symbols: np.ndarray
    levels: np.ndarray
    final_level: Level
    bit_count: int


def _fits_int64(codec: Codec) -> bool:
    return codec.N < (1 << 62)


def _chunk_array(bits: Sequence[int], n: int) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    frames = -(-len(b) // n)
    b = np.concatenate((b, np.zeros(frames * n - len(b), dtype=np.int64))).reshape(frames, n)
    weights = np.left_shift(np.int64(1), np.arange(n - 1, -1, -1, dtype=np.int64))
    return b @ weights


def encode_ranks(codec: Codec, ranks: np.ndarray) -> np.ndarray:
    """Vectorized :func:`encode_rank` for int64 ranks; returns shape ``(len(ranks), m)``."""
    residual = np.asarray(ranks, dtype=np.int64).copy()
    out = np.empty((len(residual), codec.m), dtype=np.int32)
    for i, stage in enumerate(codec.stages):
        cum = np.asarray(stage.cum, dtype=np.int64)
        q = np.searchsorted(cum, residual, side="right") - 1
        residual -= cum[q]
        out[:, i] = q
    return out


def decode_frames(codec: Codec, frames: np.ndarray) -> np.ndarray:
    """Vectorized :func:`decode_frame` over an ``(F, m)`` array; raises on the first bad frame."""
    K = codec.K
    a = np.asarray(frames, dtype=np.int64)
    bad = (a < 0).any(axis=1) | (a > K).any(axis=1)
    p, q = a[:, :-1], a[:, 1:]
    bad |= (~((p == 0) | (p == K) | (q <= p))).any(axis=1)
    bad |= (a[:, -1] != 0) & (a[:, -1] != K)
    if bad.any():
        f = int(np.argmax(bad))
        verdict = validate_frame(codec.params, [int(v) for v in a[f]])
        raise FrameError(verdict.reason, digit=verdict.position, frame=f)
    ranks = np.zeros(len(a), dtype=np.int64)
    for i, stage in enumerate(codec.stages):
        ranks += np.asarray(stage.cum, dtype=np.int64)[np.clip(a[:, i], 0, K)]
    return ranks


def encode_stream(codec: Codec, bits: Sequence[int], initial: Level = Level.LOW) -> EncodedStream:
    """Encode MSB-first bits; the last partial chunk is zero-padded on the right."""
    if len(bits) == 0:
        symbols = np.zeros(0, dtype=np.int32)
    elif _fits_int64(codec):
        symbols = encode_ranks(codec, _chunk_array(bits, codec.n)).ravel()
    else:
        frames = [encode_rank(codec, x) for x in chunk_values(bits, codec.n)]
        symbols = np.array([q for f in frames for q in f], dtype=np.int32)
    levels, final = polarity_levels(symbols, initial)
    return EncodedStream(symbols, levels, final, len(bits))


def decode_stream(codec: Codec, symbols: Sequence[int], bit_count: int) -> list[int]:
    m, n = codec.m, codec.n
    if len(symbols) % m:
        raise ValueError(f"{len(symbols)} symbols is not a whole number of {m}-UI frames")
    n_frames = len(symbols) // m
    if bit_count > n_frames * n:
        raise ValueError(f"{bit_count} payload bits cannot fit in {n_frames} frames")
    limit = 1 << n
    if _fits_int64(codec):
        ranks = decode_frames(codec, np.asarray(symbols).reshape(n_frames, m))
        over = np.nonzero(ranks >= limit)[0]
        if over.size:
            f = int(over[0])
            raise NonPayloadCodeword(
                f"non-payload codeword: rank {int(ranks[f])} >= 2^n={limit}", frame=f
            )
        shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
        bits = ((ranks[:, None] >> shifts) & 1).ravel()
        return bits[:bit_count].tolist()

    bits: list[int] = []
    for f, start in enumerate(range(0, len(symbols), m)):
        frame = [int(q) for q in symbols[start:start + m]]
        try:
            x = decode_frame(codec, frame)
        except FrameError as exc:
            exc.frame = f
            raise
        if x >= limit:
            raise NonPayloadCodeword(
                f"non-payload codeword: rank {x} >= 2^n={limit}", frame=f
            )
        bits.extend(int_to_bits(x, n))
    return bits[:bit_count]
