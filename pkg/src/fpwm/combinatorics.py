"""Counting theory for framed pulse width modulation.

A scheme is fixed by ``K`` (number of edge phases per UI) and ``m`` (frame
length in UI).  Symbol ``q = 0`` means "no transition", ``q = 1..K`` a
transition at one of the K phases.  After ``S_q`` with ``0 < q < K`` only
``S_0..S_q`` may follow; ``S_0`` and ``S_K`` may be followed by anything.  A
frame must end in ``S_0`` or ``S_K``.

All counts are Python ints so nothing overflows for large ``(K, m)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

#: LUT size of the earlier monolithic 8-bit -> 6-UI table codec (2^8 x 24 bits).
PRIOR_ART_LUT_BITS = 2**8 * 24
PRIOR_ART_BITRATE = Fraction(8, 6)

DEFAULT_ENUMERATION_CAP = 10**7


@dataclass(frozen=True)
class FpwmParams:
    K: int
    m: int

    def __post_init__(self):
        if not isinstance(self.K, int) or self.K < 1:
            raise ValueError(f"K must be an integer >= 1, got {self.K!r}")
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError(f"m must be an integer >= 1, got {self.m!r}")


@dataclass(frozen=True)
class CountVector:
    """Counts ``v_{r,q}`` of valid length-``r`` suffixes starting with ``S_q``.

    ``counts`` is indexed by ascending ``q``.
    """

    r: int
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class SchemeStats:
    params: FpwmParams
    total_arrays: int
    bits_per_frame: int
    bitrate: Fraction
    lut_size_bits: int
    symbol_occurrences: tuple[int, ...]

    @property
    def total_slots(self) -> int:
        return self.params.m * self.total_arrays

    def fraction(self, q: int) -> float:
        return self.symbol_occurrences[q] / self.total_slots


def allowed(K: int, p: int, q: int) -> bool:
    """True if symbol ``q`` may directly follow symbol ``p``."""
    return p == 0 or p == K or q <= p


def _next_counts(K: int, prev: list[int]) -> list[int]:
    # v_{r,q} = sum_{h<=q} v_{r-1,h} for q > 0; v_{r,0} = sum over all h
    out = list(itertools.accumulate(prev))
    out[0] = out[K]
    return out


def count_vectors(params: FpwmParams) -> list[CountVector]:
    """All of ``V_1 .. V_m``; element ``i`` is ``V_{i+1}``."""
    K = params.K
    counts = [0] * (K + 1)
    counts[0] = counts[K] = 1
    vectors = [CountVector(1, tuple(counts))]
    for r in range(2, params.m + 1):
        counts = _next_counts(K, counts)
        vectors.append(CountVector(r, tuple(counts)))
    return vectors


def count_vector(params: FpwmParams, r: int) -> CountVector:
    if r < 1:
        raise ValueError(f"remaining length r must be >= 1, got {r}")
    if r > params.m:
        raise ValueError(f"remaining length r={r} exceeds frame length m={params.m}")
    K = params.K
    counts = [0] * (K + 1)
    counts[0] = counts[K] = 1
    for _ in range(r - 1):
        counts = _next_counts(K, counts)
    return CountVector(r, tuple(counts))


def total_arrays(params: FpwmParams) -> int:
    """Number ``N`` of valid frames."""
    return count_vector(params, params.m).total


def bits_per_frame(params: FpwmParams) -> int:
    """``floor(log2(N))``, computed exactly from the bit length."""
    return total_arrays(params).bit_length() - 1


def normalized_bitrate(params: FpwmParams) -> Fraction:
    return Fraction(bits_per_frame(params), params.m)


def lut_size_model(params: FpwmParams) -> int:
    """Hardware LUT cost: ``m`` stage tables of ``K+1`` entries x ``n+K`` output bits."""
    n = bits_per_frame(params)
    return (params.K + 1) * (n + params.K) * params.m


def is_valid_frame(params: FpwmParams, frame) -> bool:
    K = params.K
    if len(frame) != params.m or any(not 0 <= q <= K for q in frame):
        return False
    if frame[-1] not in (0, K):
        return False
    return all(allowed(K, p, q) for p, q in zip(frame, frame[1:]))


class EnumerationCapExceeded(RuntimeError):
    pass


def enumerate_valid_frames(
    params: FpwmParams, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[tuple[int, ...]]:
    """Yield every valid frame in ascending lexicographic order (``S_0`` lowest).

    This is a plain depth-first search over the adjacency rule; it does not use
    the count vectors, so it can serve as an independent check on them.
    """
    K, m = params.K, params.m
    # Cheap upper bound first so a huge scheme is refused before any search.
    if (K + 1) ** m > cap:
        n_frames = total_arrays(params)
        if n_frames > cap:
            raise EnumerationCapExceeded(
                f"(K={K}, m={m}) has {n_frames} frames, above the enumeration cap of {cap}"
            )

    frame = [0] * m

    def extend(i: int, prev: int | None) -> Iterator[tuple[int, ...]]:
        if i == m:
            if prev in (0, K):
                yield tuple(frame)
            return
        for q in range(K + 1):
            if prev is None or allowed(K, prev, q):
                frame[i] = q
                yield from extend(i + 1, q)

    yield from extend(0, None)


def prefix_counts(params: FpwmParams) -> list[list[int]]:
    """``f[i][q]``: number of rule-respecting prefixes of length ``i+1`` ending in ``q``.

    No frame-end constraint is applied here.
    """
    K = params.K
    row = [1] * (K + 1)
    rows = [row]
    for _ in range(params.m - 1):
        # allowed(p, q) <=> p >= q or p == 0
        tail = list(itertools.accumulate(reversed(row)))[::-1]
        row = [tail[0]] + [tail[q] + row[0] for q in range(1, K + 1)]
        rows.append(row)
    return rows


def symbol_occurrences(params: FpwmParams) -> tuple[int, ...]:
    """Occurrences of each symbol over every position of every valid frame.

    Position ``i`` holding ``q`` is counted ``prefix * suffix`` times, where the
    suffix count ``v_{m-i,q}`` already embeds the frame-end rule.
    """
    K, m = params.K, params.m
    fwd = prefix_counts(params)
    bwd = count_vectors(params)
    occ = [0] * (K + 1)
    for i in range(m):
        suffix = bwd[m - i - 1].counts
        for q in range(K + 1):
            occ[q] += fwd[i][q] * suffix[q]
    return tuple(occ)


def symbol_occurrences_brute(
    params: FpwmParams, cap: int = DEFAULT_ENUMERATION_CAP
) -> tuple[int, ...]:
    occ = [0] * (params.K + 1)
    for frame in enumerate_valid_frames(params, cap):
        for q in frame:
            occ[q] += 1
    return tuple(occ)


def symbol_occurrence_stats(params: FpwmParams) -> SchemeStats:
    N = total_arrays(params)
    n = N.bit_length() - 1
    return SchemeStats(
        params=params,
        total_arrays=N,
        bits_per_frame=n,
        bitrate=Fraction(n, params.m),
        lut_size_bits=(params.K + 1) * (n + params.K) * params.m,
        symbol_occurrences=symbol_occurrences(params),
    )
