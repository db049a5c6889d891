"""Command-line entry point: ``fpwm {tables,encode,decode,simulate,stats}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import channel, formats, simulation
from .codec import FrameError, build_codec, decode_stream, encode_stream
from .combinatorics import (
    EnumerationCapExceeded,
    FpwmParams,
    symbol_occurrence_stats,
    symbol_occurrences_brute,
)

MAX_K = 16
MAX_M = 64
STATS_BRUTE_CAP = 200_000


class CliError(Exception):
    pass


def parse_range(text: str) -> range:
    """``"3"`` or ``"2..8"`` (inclusive)."""
    lo, sep, hi = text.partition("..")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}") from None
    if b < a:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return range(a, b + 1)


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", newline="")


def table_rows(k_range: range, m_range: range, max_k: int = MAX_K, max_m: int = MAX_M):
    if k_range[-1] > max_k:
        raise CliError(f"K up to {k_range[-1]} exceeds the cap of {max_k}")
    if m_range[-1] > max_m:
        raise CliError(f"m up to {m_range[-1]} exceeds the cap of {max_m}")
    for K in k_range:
        for m in m_range:
            st = symbol_occurrence_stats(FpwmParams(K, m))
            yield {
                "K": K,
                "m": m,
                "N": str(st.total_arrays),
                "n": st.bits_per_frame,
                "bitrate": f"{float(st.bitrate):.6f}",
                "lut_size_bits": st.lut_size_bits,
            }


def cmd_tables(args) -> int:
    rows = list(table_rows(args.k, args.m, args.max_k, args.max_m))
    out = _open_out(args.out)
    try:
        w = csv.DictWriter(out, fieldnames=["K", "m", "N", "n", "bitrate", "lut_size_bits"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_encode(args) -> int:
    data = Path(args.input).read_bytes()
    codec = build_codec(FpwmParams(args.k, args.m))
    bits = formats.bytes_to_bits(data)
    stream = encode_stream(codec, bits)
    Path(args.out).write_bytes(formats.pack_stream(args.k, args.m, len(bits), stream.symbols))
    return 0


def cmd_decode(args) -> int:
    box = formats.unpack_stream(Path(args.input).read_bytes())
    codec = build_codec(FpwmParams(box.K, box.m))
    bits = decode_stream(codec, box.symbols, box.bit_count)
    Path(args.out).write_bytes(formats.bits_to_bytes(bits))
    return 0


def eye_csv(hist: channel.EyeHistogram) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["phase_ui", "amplitude", "count"])
    S = (len(hist.phase_edges) - 1) // hist.span_ui
    amp = 0.5 * (hist.amplitude_edges[1:] + hist.amplitude_edges[:-1])
    for i, row in enumerate(hist.counts):
        phase = (i + 0.5) / S
        for a, c in zip(amp, row):
            w.writerow([f"{phase:.6f}", f"{a:.6f}", int(c)])
    return buf.getvalue()


def psd_csv(fpwm: channel.PsdEstimate, nrz: channel.PsdEstimate) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_F", "fpwm_psd_dB_per_F", "nrz_psd_dB_per_F"])
    for f, a, b in zip(fpwm.freqs, fpwm.power_db, nrz.power_db):
        w.writerow([f"{f:.6f}", f"{a:.6f}", f"{b:.6f}"])
    return buf.getvalue()


def cmd_simulate(args) -> int:
    result = simulation.run(
        K=args.k,
        m=args.m,
        frames=args.frames,
        samples_per_ui=args.samples_per_ui,
        cutoff=args.cutoff,
        taps=args.taps,
        sigma=args.sigma,
        seed=args.seed,
        zeros=args.zeros,
    )
    rep = result.report
    text = json.dumps(rep.to_dict(timing=args.timing), indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    if args.eye:
        span = args.eye_span or args.m
        hist = channel.eye_histogram(result.received, span, amplitude_bins=args.eye_bins)
        Path(args.eye).write_text(eye_csv(hist))
    if args.psd:
        Path(args.psd).write_text(psd_csv(*result.psd()))
    if args.waveform:
        Path(args.waveform).write_bytes(
            formats.pack_waveform(result.received.samples, result.received.samples_per_ui)
        )
    print(
        f"K={rep.K} m={rep.m}: {rep.bits_sent} bits, {rep.bit_errors} errors, "
        f"BER={rep.ber:g}, NRZ {rep.nrz_bits_sent} bits / {rep.nrz_bit_errors} errors, "
        f"{rep.elapsed_s:.2f} s",
        file=sys.stderr,
    )
    return 0


def stats_report(K: int, m: int, brute_cap: int = STATS_BRUTE_CAP) -> str:
    st = symbol_occurrence_stats(FpwmParams(K, m))
    slots = st.total_slots
    s0 = st.symbol_occurrences[0]
    rest = slots - s0
    try:
        brute = symbol_occurrences_brute(FpwmParams(K, m), cap=brute_cap)
    except EnumerationCapExceeded:
        brute = None
    lines = [
        f"K = {K}",
        f"m = {m}",
        f"N = {st.total_arrays}",
        f"bits per frame = {st.bits_per_frame}",
        f"symbols in all arrays (m x N) = {slots}",
        f"S_0 (no edge) = {s0} ({100 * s0 / slots:.1f}%)",
        f"S_1..S_{K} = {rest} ({100 * rest / slots:.1f}%)",
        "per symbol = " + " ".join(f"S_{q}:{c}" for q, c in enumerate(st.symbol_occurrences)),
    ]
    if brute is None:
        lines.append(f"brute force = skipped (N above {brute_cap})")
    else:
        lines.append(f"brute force match = {'yes' if tuple(brute) == st.symbol_occurrences else 'NO'}")
    return "\n".join(lines) + "\n"


def cmd_stats(args) -> int:
    sys.stdout.write(stats_report(args.k, args.m, args.brute_cap))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpwm", description="Framed pulse width modulation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tables", help="bitrate and LUT-size sweep as CSV")
    t.add_argument("--k", type=parse_range, required=True, metavar="A..B")
    t.add_argument("--m", type=parse_range, required=True, metavar="C..D")
    t.add_argument("--out")
    t.add_argument("--max-k", type=int, default=MAX_K)
    t.add_argument("--max-m", type=int, default=MAX_M)
    t.set_defaults(func=cmd_tables)

    e = sub.add_parser("encode", help="encode a file into an FPWM symbol container")
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--m", type=int, required=True)
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="decode an FPWM symbol container")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_decode)

    s = sub.add_parser("simulate", help="end-to-end link simulation")
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--m", type=int, default=8)
    s.add_argument("--frames", type=int, default=20000)
    s.add_argument("--samples-per-ui", type=int, default=None,
                   help="default: smallest multiple of K >= 16")
    s.add_argument("--cutoff", type=float, default=0.7, help="passband edge in F units")
    s.add_argument("--taps", type=int, default=127)
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--zeros", action="store_true", help="send all-zero payload")
    s.add_argument("--report")
    s.add_argument("--eye")
    s.add_argument("--eye-span", type=int, default=None, help="fold span in UI (default m)")
    s.add_argument("--eye-bins", type=int, default=64)
    s.add_argument("--psd")
    s.add_argument("--waveform", help="write the received waveform (FPWV format)")
    s.add_argument("--timing", action="store_true", help="include elapsed time in the report")
    s.set_defaults(func=cmd_simulate)

    st = sub.add_parser("stats", help="symbol occurrence statistics")
    st.add_argument("--k", type=int, required=True)
    st.add_argument("--m", type=int, required=True)
    st.add_argument("--brute-cap", type=int, default=STATS_BRUTE_CAP)
    st.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, RuntimeError, FrameError) as exc:
        print(f"fpwm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
