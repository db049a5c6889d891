import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpwm import channel
from fpwm.channel import (
    ConfigError,
    EdgeList,
    PulseWidthViolation,
    Waveform,
    WaveformConfig,
    add_noise,
    apply_filter,
    check_min_spacing,
    design_lowpass,
    detect_edges,
    edges_to_symbols,
    estimate_psd,
    eye_histogram,
    min_pulse_width,
    nrz_decide,
    nrz_waveform,
    synthesize,
)
from fpwm.codec import build_codec, decode_stream, encode_ranks, encode_stream
from fpwm.combinatorics import FpwmParams, allowed

CFG = WaveformConfig()


@pytest.fixture(scope="module")
def taps():
    return design_lowpass(CFG)


def dft_db(h, points=4096):
    """Magnitude response on ``points`` bins from 0 to S/2, by direct evaluation."""
    f = np.arange(points) / points * (CFG.samples_per_ui / 2)
    k = np.arange(len(h))
    H = np.exp(-2j * np.pi * np.outer(f / CFG.samples_per_ui, k)) @ h
    return f, 20 * np.log10(np.abs(H))


def random_stream(K, m, frames, seed):
    codec = build_codec(FpwmParams(K, m))
    rng = np.random.default_rng(seed)
    return encode_ranks(codec, rng.integers(0, codec.N, frames)).ravel()


# synthesis

def test_synthesize_idle():
    w = synthesize([0] * 8, 4, CFG)
    assert (w.samples == CFG.low).all() and len(w) == 8 * 16


def test_synthesize_edge_positions():
    w = synthesize([4], 4, CFG)
    assert (w.samples == CFG.high).all()
    w = synthesize([2], 4, CFG)
    assert (w.samples[:8] == CFG.low).all() and (w.samples[8:] == CFG.high).all()
    w = synthesize([1], 4, CFG, initial=1)
    assert (w.samples[:12] == CFG.high).all() and (w.samples[12:] == CFG.low).all()


def test_synthesize_rejects_bad_oversampling():
    with pytest.raises(ConfigError):
        synthesize([0, 3], 3, CFG)


def test_config_check():
    CFG.check(4)
    with pytest.raises(ConfigError):
        WaveformConfig(samples_per_ui=4).check(4)
    with pytest.raises(ConfigError):
        WaveformConfig(taps=64).check()
    with pytest.raises(ConfigError):
        WaveformConfig(cutoff=9.0, stopband=9.5).check()


# filter

def test_filter_shape(taps):
    assert len(taps) == CFG.taps
    assert abs(taps.sum() - 1) < 1e-6
    np.testing.assert_array_equal(taps, taps[::-1])
    f, db = dft_db(taps)
    assert db[np.argmin(abs(f - 0.7))] >= -6
    assert db[f >= 1.0].max() <= -40
    passband = db[f <= 0.7]
    assert passband.max() - passband.min() <= 0.5


def test_filter_response_helper_agrees(taps):
    f1, db1 = dft_db(taps)
    f2, db2 = channel.frequency_response(taps, 16)
    np.testing.assert_allclose(f1, f2)
    np.testing.assert_allclose(db1[db1 > -100], db2[db1 > -100], atol=1e-6)


def test_filter_too_short_reports_minimum():
    with pytest.raises(ConfigError, match=r"need at least \d+ taps"):
        design_lowpass(WaveformConfig(taps=41))


def test_impulse_reproduces_taps(taps):
    x = np.zeros(1000)
    x[500] = 1.0
    y = apply_filter(Waveform(x, 16, lead=0.0), taps).samples
    d = (len(taps) - 1) // 2
    np.testing.assert_allclose(y[500 - d: 500 + d + 1], taps, atol=1e-12)


def test_identity_and_constant(taps):
    x = np.random.default_rng(0).normal(size=300)
    np.testing.assert_array_equal(apply_filter(Waveform(x, 16), [1.0]).samples, x)
    c = apply_filter(Waveform(np.full(400, 0.37), 16), taps).samples
    np.testing.assert_allclose(c, 0.37 * taps.sum(), atol=1e-12)


def test_nrz_alternating_survives(taps):
    bits = np.tile([0, 1], 50)
    y = apply_filter(nrz_waveform(bits, CFG), taps)
    centres = y.samples.reshape(-1, 16)[:, 7:9].mean(axis=1)
    assert (abs(centres[5:-5]) > 0.2 * CFG.swing).all()
    np.testing.assert_array_equal(nrz_decide(y), bits)


def test_filter_linearity(taps):
    rng = np.random.default_rng(3)
    x, y = rng.normal(size=2000), rng.normal(size=2000)
    a, b = 0.7, -2.3
    lhs = apply_filter(Waveform(a * x + b * y, 16, lead=0.0), taps).samples
    rhs = a * apply_filter(Waveform(x, 16, lead=0.0), taps).samples + b * apply_filter(
        Waveform(y, 16, lead=0.0), taps
    ).samples
    # edge padding repeats the last sample, which is itself linear
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


# edges

def test_detect_edges_constant():
    assert len(detect_edges(Waveform(np.ones(50), 16))) == 0


def test_detect_edges_ideal_step():
    x = np.where(np.arange(300) >= 100, 1.0, -1.0)
    e = detect_edges(Waveform(x, 16))
    assert e.times.tolist() == [6.25]
    assert e.directions.tolist() == [channel.RISING]


def test_detect_edges_frame_one():
    w = synthesize([0] * 7 + [4], 4, CFG)
    e = detect_edges(w)
    assert e.times.tolist() == [7.0] and e.directions.tolist() == [channel.RISING]


def test_detect_edge_at_time_zero():
    e = detect_edges(synthesize([4, 0], 4, CFG))
    assert e.times.tolist() == [0.0]


def test_deglitch_drops_close_pair():
    x = -np.ones(160)
    x[40:42] = 1.0  # 2-sample spike = 0.125 UI
    x[100:] = 1.0
    e = detect_edges(Waveform(x, 16))
    assert e.times.tolist() == [100 / 16]


def test_edges_to_symbols_examples():
    codec = build_codec(FpwmParams(4, 8))
    r = edges_to_symbols(EdgeList.empty(), 1, 8, 4)
    assert r.symbols.tolist() == [0] * 8
    r = edges_to_symbols(EdgeList(np.array([7.0]), np.array([1])), 1, 8, 4)
    assert r.symbols.tolist() == [0] * 7 + [4]
    assert decode_stream(codec, r.symbols, 14) == [0] * 13 + [1]
    r = edges_to_symbols(EdgeList(np.array([6.5]), np.array([1])), 1, 8, 4)
    assert r.symbols[6] == 2


def test_edges_to_symbols_violation_and_warning():
    with pytest.raises(PulseWidthViolation) as exc:
        edges_to_symbols(EdgeList(np.array([3.0, 3.5]), np.array([1, -1])), 1, 8, 4)
    assert exc.value.ui == 3
    r = edges_to_symbols(EdgeList(np.array([2.1]), np.array([1])), 1, 8, 4)
    assert r.displacement_warnings == 1 and r.symbols[2] == 4


def test_min_pulse_width_examples():
    assert min_pulse_width(EdgeList(np.array([1.0]), np.array([1]))) is None
    assert min_pulse_width(EdgeList(np.array([3.0, 4.25]), np.array([1, -1]))) == 1.25
    for q in range(1, 5):
        assert min_pulse_width(detect_edges(synthesize([0, q, q, 0], 4, CFG))) == 1.0


@pytest.mark.parametrize("K", range(1, 9))
def test_pairwise_spacing_at_least_one_ui(K):
    assert check_min_spacing(K) == 1
    cfg = WaveformConfig(samples_per_ui=4 * K)
    for p in range(1, K + 1):
        for q in range(1, K + 1):
            if allowed(K, p, q):
                e = detect_edges(synthesize([p, q, 0], K, cfg))
                assert len(e) == 2 and e.times[1] - e.times[0] >= 1 - 1e-12


def test_ideal_stream_min_pulse_width():
    syms = random_stream(4, 8, 2000, 11)
    e = detect_edges(synthesize(syms, 4, CFG))
    assert abs(min_pulse_width(e) - 1.0) < 1e-9
    assert len(e) == np.count_nonzero(syms)


@settings(max_examples=25, deadline=None)
@given(K=st.sampled_from([1, 2, 4, 8]), m=st.integers(1, 10), seed=st.integers(0, 2**16),
       initial=st.integers(0, 1))
def test_synthesis_detection_roundtrip(K, m, seed, initial):
    syms = random_stream(K, m, 40, seed)
    cfg = WaveformConfig(samples_per_ui=max(16, 2 * K))
    e = detect_edges(synthesize(syms, K, cfg, initial))
    assert (e.directions[1:] != e.directions[:-1]).all()
    np.testing.assert_array_equal(edges_to_symbols(e, 40, m, K).symbols, syms)


@pytest.mark.parametrize("K,m", [(1, 8), (2, 6), (4, 8), (4, 3)])
def test_roundtrip_through_channel(K, m, taps):
    syms = random_stream(K, m, 1500, K * 100 + m)
    e = detect_edges(apply_filter(synthesize(syms, K, CFG), taps))
    assert (e.directions[1:] != e.directions[:-1]).all()
    r = edges_to_symbols(e, 1500, m, K)
    np.testing.assert_array_equal(r.symbols, syms)
    assert r.displacement_warnings == 0


# eye

def test_eye_constant():
    h = eye_histogram(Waveform(np.full(320, 0.5), 16), 1, amplitude_bins=10)
    assert h.total == 320
    assert np.count_nonzero(h.counts.sum(axis=0)) == 1


def test_eye_nrz_two_rows():
    bits = np.random.default_rng(5).integers(0, 2, 500)
    h = eye_histogram(nrz_waveform(bits, CFG), 1, amplitude_bins=20)
    assert h.total == 500 * 16
    assert np.count_nonzero(h.counts.sum(axis=0)) == 2


def test_eye_last_ui_open():
    syms = random_stream(4, 8, 3000, 9)
    w = synthesize(syms, 4, CFG)
    h = eye_histogram(w, 8, amplitude_bins=40, amplitude_range=(-1.2, 1.2))
    amp_c = 0.5 * (h.amplitude_edges[1:] + h.amplitude_edges[:-1])
    phase_c = 0.5 * (h.phase_edges[1:] + h.phase_edges[:-1])
    interior = (phase_c >= 7.1) & (phase_c <= 7.9)
    mid = abs(amp_c) < 0.1 * CFG.swing
    assert h.counts[np.ix_(interior, mid)].sum() == 0
    # and no transition inside that window of any frame
    frames = w.samples.reshape(-1, 8 * 16)[:, 7 * 16 + 2: 7 * 16 + 14]
    assert (frames == frames[:, :1]).all()


# psd

def test_psd_dc_all_in_bin_zero():
    p = estimate_psd(Waveform(np.full(8192, 2.0), 16), 1024, "boxcar")
    assert p.power[0] > 0 and (p.power[1:] < 1e-20 * p.power[0]).all()


def test_psd_sine_peak():
    t = (np.arange(2**16) + 0.5) / 16
    p = estimate_psd(Waveform(np.sin(2 * np.pi * 0.25 * t), 16), 4096)
    df = p.freqs[1] - p.freqs[0]
    assert abs(p.freqs[np.argmax(p.power)] - 0.25) <= df


def test_psd_parseval():
    x = np.random.default_rng(1).normal(0, 0.8, 2**16)
    p = estimate_psd(Waveform(x, 16), 4096)
    assert abs(p.total_power() - np.var(x)) < 0.05 * np.var(x)


def test_psd_needs_one_segment():
    with pytest.raises(ValueError):
        estimate_psd(Waveform(np.zeros(100), 16), 4096)


# noise

def test_noise():
    w = Waveform(np.zeros(10**6), 16)
    assert add_noise(w, 0.0, 1).samples is w.samples
    a, b = add_noise(w, 0.1, 99), add_noise(w, 0.1, 99)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert abs(np.std(a.samples) - 0.1) < 0.002
    with pytest.raises(ValueError):
        add_noise(w, -1.0)


def test_encode_stream_levels_match_waveform():
    codec = build_codec(FpwmParams(4, 8))
    bits = np.random.default_rng(4).integers(0, 2, 14 * 50).tolist()
    enc = encode_stream(codec, bits)
    w = synthesize(enc.symbols, 4, CFG)
    # first sample of each S_0 UI sits at the entering level
    ui0 = np.nonzero(enc.symbols == 0)[0]
    expected = np.where(enc.levels[ui0] == 1, CFG.high, CFG.low)
    np.testing.assert_array_equal(w.samples[ui0 * 16], expected)
