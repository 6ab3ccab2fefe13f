#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import numpy as np
import pytest
from numpy.testing import assert_allclose

from coremag.channel.model import ChannelSpec, apply
from coremag.channel.trace_io import FieldTrace
from coremag.codec.framing import PREAMBLE, BitStream, frame
from coremag.errors import ConfigError, ConfigMismatch, NoPreamble, RateMismatch, UnachievableTiming
from coremag.modem import (CoreSchedule, DemodConfig, ModulationConfig, Scheme, demodulate,
                           frame_duration_ms, locate_frames, modulate, modulate_frames,
                           symbol_duration_ms)
from coremag.modem.dsp import (carrier_baseline, goertzel, moving_average, normalized_xcorr,
                               sliding_tone_magnitude, sliding_variance, tone_amplitude)
from coremag.waveform.profiles import builtin_profile
from coremag.waveform.renderer import render

THREE_TONE_CODEBOOK = {'0': 3.0, '1': 7.0, '01': 13.0}


def _payload(seed):
    return tuple(int(b) for b in np.random.default_rng(seed).integers(0, 2, 32))


def _transmit(payloads, cfg, profile, channel):
    schedule = modulate_frames([frame(p) for p in payloads], cfg)
    return apply(render(schedule, profile, 1000.0, seed=7), profile, channel)


class TestDsp:
    def test_tone_amplitude_on_integer_cycles(self):
        t = np.arange(308) / 154.0
        x = 0.3 + 2.0 * np.sin(2 * np.pi * 10.0 * t)
        assert tone_amplitude(x, 10.0, 154.0) == pytest.approx(2.0, rel=0.02)
        assert tone_amplitude(x, 30.0, 154.0) < 0.05

    def test_goertzel_matches_fft_bin(self, rng):
        x = rng.standard_normal(64)
        spectrum = np.fft.fft(x)
        coeff = goertzel(x, 5.0, 64.0)
        assert abs(coeff) == pytest.approx(abs(spectrum[5]), rel=1e-9)

    def test_moving_average_keeps_constant(self):
        assert_allclose(moving_average(np.full(50, 3.5), 7), 3.5)

    def test_sliding_tone_magnitude(self):
        t = np.arange(1000) / 154.0
        x = np.sin(2 * np.pi * 7.0 * t)
        track = sliding_tone_magnitude(x, 7.0, 154.0, 154)
        assert_allclose(track[200:800], 1.0, rtol=0.05)

    def test_normalized_xcorr_finds_template(self, rng):
        template = np.repeat([1.0, 0.0, 1.0, 0.0], 10)
        signal = 0.01 * rng.standard_normal(200)
        signal[50:90] += template
        scores = normalized_xcorr(signal, template)
        assert scores.size == 161
        assert int(np.argmax(scores)) == 50
        assert scores.max() > 0.95
        assert np.all(np.abs(scores) <= 1.0)

    def test_normalized_xcorr_flat_input(self):
        template = np.repeat([1.0, 0.0], 5)
        assert_allclose(normalized_xcorr(np.zeros(40), template), 0.0)
        assert normalized_xcorr(np.zeros(5), template).size == 0

    def test_carrier_baseline_on_partial_cycles(self):
        t = np.arange(11) / 154.0
        x = 0.3 + 0.2 * np.sin(2 * np.pi * 20.0 * t + 0.4) + 0.05 * np.sin(2 * np.pi * 60.0 * t)
        assert carrier_baseline(x, 20.0, 154.0) == pytest.approx(0.3, abs=1e-9)
        assert abs(x.mean() - 0.3) > 1e-3

    def test_carrier_baseline_short_window(self):
        assert carrier_baseline(np.array([1.0, 3.0]), 20.0, 154.0) == 2.0
        assert carrier_baseline(np.zeros(0), 20.0, 154.0) == 0.0

    def test_sliding_variance(self, rng):
        x = rng.standard_normal(300)
        variance = sliding_variance(x, 30)
        assert variance.size == 271
        assert variance[100] == pytest.approx(np.var(x[100:130]), abs=1e-9)
        assert np.all(variance >= 0.0)
        assert sliding_variance(x, 0).size == 0


class TestModulationConfig:
    def test_defaults(self):
        cfg = ModulationConfig()
        assert cfg.scheme == Scheme.OOK
        assert cfg.active_cores == cfg.total_cores == 4
        assert cfg.bits_per_symbol == 1
        assert cfg.body_bits == 33

    def test_bits_per_symbol(self):
        assert ModulationConfig(scheme='ask').bits_per_symbol == 2
        assert ModulationConfig(scheme='ask').body_bits == 34
        assert ModulationConfig(scheme='fsk', fsk_tones_hz=(3, 7, 13, 19)).bits_per_symbol == 2
        assert ModulationConfig(scheme='ofdm', ofdm_subcarriers_hz=(5, 7, 13)).body_bits == 33

    def test_three_tone_codebook(self):
        cfg = ModulationConfig(scheme='fsk', fsk_codebook=THREE_TONE_CODEBOOK)
        assert not cfg.uniform_codebook
        assert cfg.preamble_tones == (3.0, 7.0)
        assert cfg.body_bits == 33

    @pytest.mark.parametrize('kwargs', [
        dict(bit_rate=0),
        dict(carrier_hz=60.0),
        dict(active_cores=5),
        dict(scheme='ask', ask_levels=(1, 2, 3)),
        dict(scheme='ask', ask_levels=(1, 2, 4, 8)),
        dict(scheme='fsk', fsk_tones_hz=(3, 7, 13)),
        dict(scheme='fsk', fsk_tones_hz=(7, 7)),
        dict(scheme='fsk', fsk_codebook={'01': 3.0, '10': 7.0}),
        dict(scheme='ofdm', ofdm_subcarriers_hz=(3, 5, 7, 11, 13)),
        dict(n_cycles1=0),
        dict(carrier_hz=20.0, bit_rate=40),
        dict(bit_rate=100),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            ModulationConfig(**kwargs)

    def test_ook_carrier_follows_bit_rate(self):
        assert ModulationConfig(bit_rate=1).carrier == 20.0
        assert ModulationConfig(bit_rate=40).carrier == 40.0
        assert ModulationConfig(bit_rate=40, carrier_hz=45).carrier == 45.0
        assert ModulationConfig(scheme='ask', bit_rate=40).carrier == 20.0
        assert ModulationConfig(bit_rate=40, carrier_hz=20, n_cycles1=1).carrier == 20.0

    def test_ook_pulse_width(self):
        matrix = modulate(BitStream((1, 1)), ModulationConfig(bit_rate=40, total_cores=1)).to_matrix()
        assert matrix[0].sum() == 24
        assert matrix[0, :12].all() and not matrix[0, 12:25].any()

    def test_durations(self):
        assert frame_duration_ms(ModulationConfig()) == 37000
        assert frame_duration_ms(ModulationConfig(scheme='ask')) == 38000
        assert symbol_duration_ms(ModulationConfig(scheme='ask', bit_rate=10)) == 200


class TestModulate:
    def test_ook_busy_fraction(self):
        schedule = modulate(BitStream((1, 0)), ModulationConfig())
        assert schedule.total_duration_ms == 2000
        assert schedule.n_cores == 4
        assert schedule.busy_ms() == [500] * 4
        assert schedule.busy_counts()[1000:].max() == 0
        assert schedule.slot_edges_ms == (0, 1000, 2000)

    def test_ook_square_starts_busy(self):
        matrix = modulate(BitStream((1,)), ModulationConfig(total_cores=1)).to_matrix()[0]
        assert matrix[:25].all()
        assert not matrix[25:50].any()

    def test_ook_cycle_counts(self):
        cfg = ModulationConfig(n_cycles0=1, n_cycles1=2)
        schedule = modulate(BitStream((1, 0)), cfg)
        assert schedule.slot_edges_ms == (0, 100, 150)

    def test_active_cores_subset(self):
        schedule = modulate(BitStream((1,)), ModulationConfig(total_cores=8, active_cores=3))
        assert schedule.busy_counts().max() == 3
        assert schedule.busy_ms()[3:] == [0] * 5

    def test_ask_levels(self):
        schedule = modulate(BitStream((0, 0, 1, 1)), ModulationConfig(scheme='ask'))
        counts = schedule.busy_counts()
        assert counts[:2000].max() == 1
        assert counts[2000:].max() == 4

    def test_ask_partial_symbol(self):
        with pytest.raises(ConfigMismatch):
            modulate(BitStream((1, 0, 1)), ModulationConfig(scheme='ask'))

    def test_fsk_codebook_parsing(self):
        cfg = ModulationConfig(scheme='fsk', fsk_codebook=THREE_TONE_CODEBOOK)
        schedule = modulate(BitStream.from_string('0110'), cfg)
        assert schedule.slot_edges_ms == (0, 2000, 3000, 4000)
        assert schedule.max_toggle_hz == 13.0

    def test_ofdm_cores_follow_bits(self):
        cfg = ModulationConfig(scheme='ofdm')
        matrix = modulate(BitStream((1, 0, 0, 1)), cfg).to_matrix()
        assert matrix[0, :2000].any() and not matrix[1, :2000].any()
        assert not matrix[0, 2000:].any() and matrix[1, 2000:].any()
        assert not matrix[2:].any()

    def test_slot_below_granularity(self):
        with pytest.raises(UnachievableTiming):
            modulate(BitStream((1, 0)), ModulationConfig(scheme='fsk', bit_rate=2000))

    def test_empty_bits(self):
        with pytest.raises(ConfigError):
            modulate(BitStream(), ModulationConfig())

    def test_frames_with_guards(self):
        schedule = modulate_frames([frame((1,) * 32)], ModulationConfig(guard_ms=500))
        assert schedule.total_duration_ms == 38000
        assert schedule.busy_counts()[:500].max() == 0
        assert schedule.busy_counts()[-500:].max() == 0

    def test_schedule_durations_are_checked(self):
        with pytest.raises(ConfigError):
            CoreSchedule(cores=(((True, 10), (False, 5)),), total_duration_ms=20)


class TestReceiver:
    @pytest.mark.parametrize('cfg', [
        ModulationConfig(scheme='ook', bit_rate=10, total_cores=8),
        ModulationConfig(scheme='ask', bit_rate=10, total_cores=8),
        ModulationConfig(scheme='fsk', bit_rate=5, total_cores=8, fsk_tones_hz=(10, 20)),
        ModulationConfig(scheme='ofdm', bit_rate=2, total_cores=8, ofdm_subcarriers_hz=(7, 13)),
    ], ids=['ook', 'ask', 'fsk', 'ofdm'])
    def test_noise_free_round_trip(self, cfg, pc1, clean_channel):
        payload = _payload(3)
        received = _transmit([payload], cfg, pc1, clean_channel)
        decisions = locate_frames(received, DemodConfig(modulation=cfg))
        assert len(decisions) == 1
        bits = decisions[0].bits
        assert tuple(bits[:4]) == PREAMBLE
        assert tuple(bits[4:36]) == payload
        assert decisions[0].score >= 0.5

    @pytest.mark.parametrize('name', ['pc1', 'pc2', 'laptop', 'server', 'nuk'])
    def test_ask_levels_follow_profile(self, name, clean_channel):
        profile = builtin_profile(name)
        cfg = ModulationConfig(scheme='ask', bit_rate=10, total_cores=profile.max_cores)
        demod = DemodConfig(modulation=cfg, ask_gains=profile.relative_levels(cfg.ask_levels))
        payloads = [_payload(seed) for seed in (3, 4, 5)]
        bits = demodulate(_transmit(payloads, cfg, profile, clean_channel), demod)
        assert len(bits) == 111
        for i, payload in enumerate(payloads):
            assert tuple(bits[37 * i + 4:37 * i + 36]) == payload, f"{name}, trame {i}"

    @pytest.mark.parametrize('cfg', [
        ModulationConfig(scheme='ook', bit_rate=10, total_cores=8),
        ModulationConfig(scheme='ask', bit_rate=10, total_cores=8),
        ModulationConfig(scheme='fsk', bit_rate=5, total_cores=8, fsk_tones_hz=(10, 20)),
        ModulationConfig(scheme='ofdm', bit_rate=2, total_cores=8, ofdm_subcarriers_hz=(7, 13)),
    ], ids=['ook', 'ask', 'fsk', 'ofdm'])
    @pytest.mark.parametrize('scale', [0.01, 25.0])
    def test_invariant_to_amplitude_scale(self, cfg, scale, pc1):
        received = _transmit([_payload(8)], cfg, pc1, ChannelSpec(distance_cm=20.0, seed=4))
        scaled = FieldTrace(received.samples * scale, received.rate_hz)
        demod = DemodConfig(modulation=cfg)
        assert demodulate(scaled, demod) == demodulate(received, demod)

    @pytest.mark.parametrize('cfg, bits, tone', [
        (ModulationConfig(scheme='fsk', bit_rate=1, total_cores=4, fsk_tones_hz=(10, 20)), (0,) * 6, 10.0),
        (ModulationConfig(scheme='fsk', bit_rate=1, total_cores=4, fsk_tones_hz=(10, 20)), (1,) * 6, 20.0),
        (ModulationConfig(scheme='ofdm', bit_rate=1, total_cores=4, ofdm_subcarriers_hz=(7, 13)), (1, 0) * 3, 7.0),
        (ModulationConfig(scheme='ofdm', bit_rate=1, total_cores=4, ofdm_subcarriers_hz=(7, 13)), (0, 1) * 3, 13.0),
    ])
    def test_dominant_bin_is_the_tone(self, cfg, bits, tone, pc1, clean_channel):
        received = apply(render(modulate(BitStream(bits), cfg), pc1, 1000.0), pc1, clean_channel)
        x = received.samples - received.samples.mean()
        freqs = np.fft.rfftfreq(x.size, 1.0 / received.rate_hz)
        peak = freqs[int(np.argmax(np.abs(np.fft.rfft(x))))]
        assert abs(peak - tone) <= freqs[1]

    def test_noisy_guards_are_not_candidates(self, pc1):
        cfg = ModulationConfig(bit_rate=10, total_cores=8)
        payload = _payload(5)
        received = _transmit([payload], cfg, pc1, ChannelSpec(distance_cm=20.0, seed=11))
        decisions = locate_frames(received, DemodConfig(modulation=cfg))
        assert len(decisions) == 1
        assert tuple(decisions[0].bits[4:36]) == payload

    def test_consecutive_frames(self, pc1, clean_channel):
        cfg = ModulationConfig(bit_rate=10, total_cores=8)
        payloads = [_payload(1), _payload(2)]
        received = _transmit(payloads, cfg, pc1, clean_channel)
        bits = demodulate(received, DemodConfig(modulation=cfg))
        assert len(bits) == 74
        assert tuple(bits[4:36]) == payloads[0]
        assert tuple(bits[41:73]) == payloads[1]

    def test_max_frames(self, pc1, clean_channel):
        cfg = ModulationConfig(bit_rate=10, total_cores=8)
        received = _transmit([_payload(1), _payload(2)], cfg, pc1, clean_channel)
        assert len(locate_frames(received, DemodConfig(modulation=cfg, max_frames=1))) == 1

    def test_flat_trace_has_no_preamble(self):
        trace = FieldTrace(np.zeros(2000), 154.0)
        with pytest.raises(NoPreamble):
            demodulate(trace, DemodConfig(modulation=ModulationConfig(bit_rate=10)))

    def test_undersampled_trace(self):
        trace = FieldTrace(np.zeros(2000), 30.0)
        with pytest.raises(RateMismatch):
            demodulate(trace, DemodConfig(modulation=ModulationConfig(bit_rate=1)))

    def test_trace_shorter_than_frame(self):
        trace = FieldTrace(np.zeros(100), 154.0)
        with pytest.raises(RateMismatch):
            demodulate(trace, DemodConfig(modulation=ModulationConfig(bit_rate=1)))

    @pytest.mark.parametrize('kwargs', [dict(sync_threshold=1.0), dict(edge_trim=0.5), dict(max_frames=0),
                                        dict(min_energy_frac=1.0), dict(ask_gains=(1.0,)),
                                        dict(ask_gains=(0.25, 0.5, np.nan, 1.0)),
                                        dict(ask_gains=(0.25, -0.5, 0.75, 1.0))])
    def test_invalid_demod_config(self, kwargs):
        with pytest.raises(ConfigError):
            DemodConfig(modulation=ModulationConfig(), **kwargs)
