"""Framed pulse width modulation: counting, enumerative coding and link simulation."""

from .codec import (
    Codec,
    FrameError,
    Level,
    NonPayloadCodeword,
    build_codec,
    decode_frame,
    decode_stream,
    encode_frame,
    encode_stream,
    validate_frame,
)
from .combinatorics import (
    FpwmParams,
    bits_per_frame,
    count_vector,
    enumerate_valid_frames,
    lut_size_model,
    normalized_bitrate,
    symbol_occurrence_stats,
    total_arrays,
)

__version__ = "0.1.0"
