"""Waveform synthesis, band-limited channel, edge recovery, eye and PSD.

Time is measured in UI.  A waveform holds ``S`` samples per UI; sample ``i``
covers ``[i/S, (i+1)/S)`` and is stamped at its midpoint, so a level change
between samples ``j-1`` and ``j`` interpolates to exactly ``j/S``.

Symbol ``S_q`` (``q >= 1``) places its edge at ``(K-q)/K`` UI into the slot:
``S_K`` switches on the UI boundary, ``S_1`` latest.  With this mapping two
edges allowed by the adjacency rule are always at least 1 UI apart.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import signal

from .combinatorics import allowed

log = logging.getLogger(__name__)

RISING = 1
FALLING = -1


class ConfigError(ValueError):
    pass


class EdgeError(ValueError):
    pass


class PulseWidthViolation(EdgeError):
    def __init__(self, ui: int):
        super().__init__(f"pulse-width violation: two edges in UI {ui}")
        self.ui = ui


@dataclass(frozen=True)
class WaveformConfig:
    samples_per_ui: int = 16
    low: float = -1.0
    high: float = 1.0
    cutoff: float = 0.7  # passband edge, F units
    stopband: float = 1.0  # stopband edge, F units
    taps: int = 127
    max_ripple_db: float = 0.5
    min_atten_db: float = 40.0

    @property
    def threshold(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def swing(self) -> float:
        return self.high - self.low

    def check(self, K: int | None = None):
        S = self.samples_per_ui
        if S < 1:
            raise ConfigError(f"samples per UI must be positive, got {S}")
        if K is not None:
            if S % K:
                raise ConfigError(f"samples per UI ({S}) must be a multiple of K ({K})")
            if S < 2 * K:
                raise ConfigError(f"samples per UI ({S}) must be at least 2K ({2 * K})")
        if not 0 < self.cutoff < self.stopband < S / 2:
            raise ConfigError(
                f"need 0 < cutoff ({self.cutoff}) < stopband ({self.stopband}) < S/2 ({S / 2})"
            )
        if self.taps < 1 or self.taps % 2 == 0:
            raise ConfigError(f"filter length must be odd, got {self.taps}")


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    samples_per_ui: int
    start_ui: int = 0
    lead: float | None = None  # settled value before sample 0

    def __len__(self):
        return len(self.samples)

    @property
    def lead_value(self) -> float:
        if self.lead is not None:
            return self.lead
        return float(self.samples[0]) if len(self.samples) else 0.0

    @property
    def duration_ui(self) -> float:
        return len(self.samples) / self.samples_per_ui


@dataclass
class EdgeList:
    times: np.ndarray
    directions: np.ndarray

    def __len__(self):
        return len(self.times)

    @classmethod
    def empty(cls) -> "EdgeList":
        return cls(np.zeros(0), np.zeros(0, dtype=np.int8))


@dataclass
class SymbolRecovery:
    symbols: np.ndarray
    max_displacement: float  # worst |T*K - round(T*K)|, in phase steps
    displacement_warnings: int


@dataclass
class EyeHistogram:
    counts: np.ndarray  # shape (phase bins, amplitude bins)
    phase_edges: np.ndarray  # UI
    amplitude_edges: np.ndarray
    span_ui: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class PsdEstimate:
    freqs: np.ndarray  # F units
    power: np.ndarray  # linear, per F
    segment_len: int
    window: str
    overlap: int = field(default=0)

    @property
    def power_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.power)

    def total_power(self) -> float:
        df = self.freqs[1] - self.freqs[0]
        return float(self.power.sum() * df)

    def band_mean_db(self, lo: float, hi: float) -> float:
        sel = (self.freqs >= lo) & (self.freqs <= hi)
        return float(np.mean(self.power_db[sel]))


def phase_offset(K: int, q: int) -> float:
    """Edge position of ``S_q`` within its UI, in UI."""
    return (K - q) / K


def synthesize(symbols: Sequence[int], K: int, config: WaveformConfig, initial: int = 0) -> Waveform:
    """Piecewise-constant waveform for a symbol stream; ``initial`` is the line level (0/1) before it."""
    S = config.samples_per_ui
    if S % K:
        raise ConfigError(f"samples per UI ({S}) must be a multiple of K ({K})")
    sym = np.asarray(symbols, dtype=np.int64)
    if sym.size and (sym.min() < 0 or sym.max() > K):
        raise ValueError(f"symbol values must lie in 0..{K}")
    toggles = np.zeros(sym.size * S, dtype=np.int64)
    ui = np.nonzero(sym)[0]
    toggles[ui * S + (K - sym[ui]) * (S // K)] = 1
    bits = (np.cumsum(toggles) + initial) & 1
    levels = np.where(bits == 1, config.high, config.low)
    lead = config.high if initial else config.low
    return Waveform(levels.astype(float), S, 0, lead)


def nrz_waveform(bits: Sequence[int], config: WaveformConfig) -> Waveform:
    b = np.asarray(bits, dtype=np.int64)
    levels = np.where(np.repeat(b, config.samples_per_ui) == 1, config.high, config.low)
    lead = float(levels[0]) if len(levels) else config.low
    return Waveform(levels.astype(float), config.samples_per_ui, 0, lead)


def nrz_decide(wave: Waveform, threshold: float = 0.0) -> np.ndarray:
    """Slice each UI at its centre."""
    S = wave.samples_per_ui
    x = wave.samples[: len(wave) // S * S].reshape(-1, S)
    centre = x[:, S // 2] if S % 2 else 0.5 * (x[:, S // 2 - 1] + x[:, S // 2])
    return (centre >= threshold).astype(np.uint8)


def frequency_response(taps: np.ndarray, samples_per_ui: int, points: int = 4096):
    """(frequency in F, magnitude in dB) on a uniform grid from 0 to S/2."""
    f, H = signal.freqz(taps, worN=points, fs=samples_per_ui)
    with np.errstate(divide="ignore"):
        return f, 20 * np.log10(np.abs(H))


def _meets(taps: np.ndarray, config: WaveformConfig) -> bool:
    f, db = frequency_response(taps, config.samples_per_ui)
    passband = db[f <= config.cutoff]
    stopband = db[f >= config.stopband]
    ripple = passband.max() - passband.min()
    return ripple <= config.max_ripple_db and stopband.max() <= -config.min_atten_db


def _remez(numtaps: int, config: WaveformConfig) -> np.ndarray:
    # weight the stopband so both error bounds bind at similar tap counts
    bands = [0, config.cutoff, config.stopband, config.samples_per_ui / 2]
    h = signal.remez(numtaps, bands, [1, 0], weight=[1, 3], fs=config.samples_per_ui, maxiter=100)
    h = 0.5 * (h + h[::-1])
    return h / h.sum()


def design_lowpass(config: WaveformConfig = WaveformConfig()) -> np.ndarray:
    """Equiripple (Parks-McClellan) linear-phase low-pass, unity DC gain.

    Raises :class:`ConfigError` naming the shortest length that would work if
    ``config.taps`` cannot meet the ripple/attenuation envelope.
    """
    config.check()
    try:
        h = _remez(config.taps, config)
        ok = _meets(h, config)
    except ValueError:
        ok = False
    if ok:
        return h
    for n in range(config.taps + 2, 4 * config.taps + 64, 2):
        try:
            ok = _meets(_remez(n, config), config)
        except ValueError:
            continue
        if ok:
            raise ConfigError(
                f"{config.taps} taps cannot reach {config.max_ripple_db} dB ripple / "
                f"{config.min_atten_db} dB attenuation; need at least {n} taps"
            )
    raise ConfigError(f"filter envelope unreachable for cutoff {config.cutoff}F")


def apply_filter(wave: Waveform, taps: np.ndarray) -> Waveform:
    """Filter with the group delay removed; output is aligned with and as long as the input.

    The line is assumed to sit at ``wave.lead`` before the first sample and at
    its last value after the end.
    """
    taps = np.asarray(taps, dtype=float)
    x = np.asarray(wave.samples, dtype=float)
    if len(x) == 0:
        return wave
    d = (len(taps) - 1) // 2
    pad = len(taps)
    xp = np.concatenate((np.full(pad, wave.lead_value), x, np.full(pad, x[-1])))
    y = signal.fftconvolve(xp, taps, mode="full") if len(taps) > 64 else np.convolve(xp, taps)
    y = y[pad + d: pad + d + len(x)]
    lead = wave.lead_value * float(taps.sum())
    return replace(wave, samples=y, lead=lead)


def detect_edges(wave: Waveform, threshold: float = 0.0, deglitch_ui: float = 0.25) -> EdgeList:
    """Threshold crossings with linear-interpolated times (UI).

    Crossing pairs closer than ``deglitch_ui`` are dropped as ringing.
    """
    x = np.concatenate(([wave.lead_value], np.asarray(wave.samples, dtype=float)))
    above = x >= threshold
    idx = np.nonzero(above[1:] != above[:-1])[0]  # crossing between x[idx] and x[idx+1]
    if idx.size == 0:
        return EdgeList.empty()
    a, b = x[idx], x[idx + 1]
    frac = (threshold - a) / (b - a)
    # x[k] is sample k-1, stamped at (k - 1 + 0.5)/S
    times = (wave.start_ui * wave.samples_per_ui + idx - 0.5 + frac) / wave.samples_per_ui
    dirs = np.where(b > a, RISING, FALLING).astype(np.int8)

    keep_t: list[float] = []
    keep_d: list[int] = []
    for t, d in zip(times, dirs):
        if keep_t and t - keep_t[-1] < deglitch_ui:
            keep_t.pop()
            keep_d.pop()
            continue
        keep_t.append(float(t))
        keep_d.append(int(d))
    edges = EdgeList(np.array(keep_t), np.array(keep_d, dtype=np.int8))
    if len(edges) > 1 and np.any(edges.directions[1:] == edges.directions[:-1]):
        raise EdgeError("edge directions do not alternate after de-glitching")
    return edges


def edges_to_symbols(
    edges: EdgeList, frame_count: int, m: int, K: int, warn_at: float = 0.3
) -> SymbolRecovery:
    """Snap each edge to the K-per-UI phase grid and read off the symbol stream."""
    n_ui = frame_count * m
    symbols = np.zeros(n_ui, dtype=np.int32)
    worst = 0.0
    warnings = 0
    for t in edges.times:
        pos = t * K
        g = int(round(pos))
        disp = abs(pos - g)
        worst = max(worst, disp)
        if disp > warn_at:
            warnings += 1
        u, s = divmod(g, K)
        if not 0 <= u < n_ui:
            raise EdgeError(f"edge at {t:.4f} UI falls outside the {n_ui}-UI stream")
        if symbols[u]:
            raise PulseWidthViolation(u)
        symbols[u] = K - s
    if warnings:
        log.warning("%d edges displaced more than %.2f of a phase step", warnings, warn_at)
    return SymbolRecovery(symbols, worst, warnings)


def min_pulse_width(edges: EdgeList) -> float | None:
    """Shortest interval between consecutive edges, or ``None`` with fewer than two edges."""
    if len(edges) < 2:
        return None
    return float(np.min(np.diff(edges.times)))


def eye_histogram(
    wave: Waveform,
    span_ui: int = 1,
    amplitude_bins: int = 64,
    amplitude_range: tuple[float, float] | None = None,
) -> EyeHistogram:
    """Fold samples modulo ``span_ui`` UI into (phase, amplitude) bins, one phase bin per sample slot."""
    S = wave.samples_per_ui
    x = np.asarray(wave.samples, dtype=float)
    slot = (np.arange(len(x)) + wave.start_ui * S) % (span_ui * S)
    if amplitude_range is None:
        lo, hi = float(x.min()), float(x.max())
        margin = 0.05 * (hi - lo) or 0.5
        amplitude_range = (lo - margin, hi + margin)
    amp_edges = np.linspace(amplitude_range[0], amplitude_range[1], amplitude_bins + 1)
    phase_edges = np.arange(span_ui * S + 1) / S
    counts, _, _ = np.histogram2d(
        slot, x, bins=[np.arange(span_ui * S + 1) - 0.5, amp_edges]
    )
    return EyeHistogram(counts.astype(np.int64), phase_edges, amp_edges, span_ui)


def estimate_psd(wave: Waveform, segment_len: int = 4096, window: str = "hann") -> PsdEstimate:
    """Welch estimate: 50 % overlapped windowed segments, one-sided, frequency in F."""
    x = np.asarray(wave.samples, dtype=float)
    if len(x) < segment_len:
        raise ValueError(f"waveform has {len(x)} samples, fewer than one {segment_len}-sample segment")
    overlap = segment_len // 2
    f, p = signal.welch(
        x,
        fs=wave.samples_per_ui,
        window=window,
        nperseg=segment_len,
        noverlap=overlap,
        detrend=False,
        return_onesided=True,
        scaling="density",
    )
    return PsdEstimate(f, p, segment_len, str(window), overlap)


def add_noise(wave: Waveform, sigma: float, seed: int | None = None) -> Waveform:
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return wave
    rng = np.random.default_rng(seed)
    return replace(wave, samples=wave.samples + rng.normal(0.0, sigma, len(wave)))


def check_min_spacing(K: int) -> Fraction:
    """Smallest gap (UI) between the edges of any allowed pair of edge-carrying symbols.

    Exhaustive over all ``p -> q`` with ``p, q >= 1``; gap is ``1 - t_p + t_q``.
    """
    best = None
    for p in range(1, K + 1):
        for q in range(1, K + 1):
            if allowed(K, p, q):
                gap = 1 - Fraction(K - p, K) + Fraction(K - q, K)
                best = gap if best is None else min(best, gap)
    return best
