#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose
from scipy.stats import spearmanr

from coremag.analysis.ber import (CSV_COLUMNS, BerResult, SweepGrid, capacity_curve, measure_ber,
                                  results_frame, sweep, write_csv)
from coremag.analysis.spectrum import shannon_capacity, spectrogram, write_spectrogram_csv
from coremag.channel.model import ChannelSpec, JammerSpec, apply
from coremag.codec.framing import BitStream
from coremag.errors import ConfigError, TooShort
from coremag.modem.schemes import ModulationConfig, modulate
from coremag.waveform.profiles import builtin_profile, predict_field
from coremag.waveform.renderer import render


@pytest.fixture
def fsk_trace(pc1, clean_channel):
    cfg = ModulationConfig(scheme='fsk', fsk_tones_hz=(3, 7), bit_rate=1, total_cores=4)
    emitted = render(modulate(BitStream.from_string('0101'), cfg), pc1, 1000.0)
    return apply(emitted, pc1, clean_channel)


class TestShannon:
    def test_capacity(self):
        assert shannon_capacity(50, 0.0) == pytest.approx(50.0)
        assert shannon_capacity(10, 10 * np.log10(3)) == pytest.approx(20.0)
        assert shannon_capacity(0, 30.0) == 0.0

    def test_reference_value(self):
        assert shannon_capacity(50, 29.0) == pytest.approx(481.7, abs=0.1)

    def test_negative_bandwidth(self):
        with pytest.raises(ConfigError):
            shannon_capacity(-1, 10.0)


class TestSpectrogram:
    def test_tones_follow_symbols(self, fsk_trace):
        result = spectrogram(fsk_trace, window_s=1.0, overlap_frac=0.0)
        assert result.magnitude.shape == (result.freqs.size, 4)
        assert_allclose(result.dominant_freqs(), [3.0, 7.0, 3.0, 7.0])

    def test_three_tone_tracks(self, pc1, clean_channel):
        cfg = ModulationConfig(scheme='fsk', fsk_codebook={'0': 3.0, '1': 7.0, '01': 13.0}, bit_rate=1,
                               total_cores=4)
        emitted = render(modulate(BitStream.from_string('1010'), cfg), pc1, 1000.0)
        result = spectrogram(apply(emitted, pc1, clean_channel), window_s=1.0, overlap_frac=0.0)
        assert_allclose(result.dominant_freqs(), [7.0, 13.0, 13.0, 3.0])

    def test_csv_is_reproducible(self, fsk_trace, tmp_path):
        paths = [write_spectrogram_csv(spectrogram(fsk_trace, 1.0, 0.5), str(tmp_path / name))
                 for name in ('a.csv', 'b.csv')]
        with open(paths[0], 'rb') as first, open(paths[1], 'rb') as second:
            assert first.read() == second.read()
        assert open(paths[0]).read().split('\n')[1].startswith('0.500000000,')

    def test_csv_layout(self, fsk_trace, tmp_path):
        path = write_spectrogram_csv(spectrogram(fsk_trace, 1.0, 0.5), str(tmp_path / 's.csv'))
        frame = pd.read_csv(path)
        assert frame.columns[0] == 'time_s'
        assert frame.columns[1] == '0'
        assert len(frame) == 7

    def test_window_longer_than_trace(self, fsk_trace):
        with pytest.raises(TooShort):
            spectrogram(fsk_trace, window_s=10.0)

    def test_invalid_overlap(self, fsk_trace):
        with pytest.raises(ConfigError):
            spectrogram(fsk_trace, overlap_frac=1.0)


class TestBer:
    def test_clean_link(self, pc1):
        cfg = ModulationConfig(bit_rate=10, total_cores=8)
        result = measure_ber(pc1, ChannelSpec(distance_cm=20), cfg, trials=5, seed=1)
        assert result.bits_total == 160
        assert result.ber == 0.0
        assert result.frames_lost == 0

    def test_drowned_link(self, pc1):
        cfg = ModulationConfig(bit_rate=10, total_cores=8)
        result = measure_ber(pc1, ChannelSpec(distance_cm=150, noise_floor_mT=1.0), cfg, trials=10, seed=2)
        assert result.ber > 0.3

    def test_seeded(self, pc1):
        cfg = ModulationConfig(bit_rate=10, total_cores=8)
        channel = ChannelSpec(distance_cm=100)
        assert measure_ber(pc1, channel, cfg, 3, 9) == measure_ber(pc1, channel, cfg, 3, 9)

    def test_no_trial(self, pc1):
        with pytest.raises(ConfigError):
            measure_ber(pc1, ChannelSpec(distance_cm=20), ModulationConfig(total_cores=8), trials=0)

    def test_csv_columns(self, tmp_path):
        results = [BerResult('ook', 10.0, 20.0, 2, 64, 3, 0)]
        frame = pd.read_csv(write_csv(results, str(tmp_path / 'ber.csv')))
        assert list(frame.columns) == CSV_COLUMNS
        assert frame['ber'][0] == pytest.approx(3 / 64)
        assert list(results_frame(results)['bits_wrong']) == [3]

    def test_csv_float_format(self, tmp_path):
        path = write_csv([BerResult('ook', 10.0, 20.0, 2, 64, 3, 0)], str(tmp_path / 'ber.csv'))
        assert open(path).read().split('\n')[1] == 'ook,10.000000,20.000000,0.046875,0'

    def test_sweep_csv_is_reproducible(self, pc1, tmp_path):
        grid = SweepGrid(distances_cm=(20, 60), bit_rates=(10,), trials=2, seed=12)
        paths = [write_csv(sweep(grid, pc1, ChannelSpec(distance_cm=20)), str(tmp_path / name))
                 for name in ('a.csv', 'b.csv')]
        with open(paths[0], 'rb') as first, open(paths[1], 'rb') as second:
            assert first.read() == second.read()

    def test_single_cell_sweep_matches_measure_ber(self, pc1):
        grid = SweepGrid(distances_cm=(80,), bit_rates=(10,), trials=3, seed=14)
        channel = ChannelSpec(distance_cm=20)
        cell_seed = int(np.random.SeedSequence(grid.seed).spawn(1)[0].generate_state(1)[0])
        cfg = ModulationConfig(bit_rate=10, total_cores=pc1.max_cores)
        expected = measure_ber(pc1, replace(channel, distance_cm=80.0), cfg, 3, cell_seed)
        assert sweep(grid, pc1, channel) == [expected]

    def test_ask_uses_profile_levels(self, clean_channel):
        server = builtin_profile('server')
        cfg = ModulationConfig(scheme='ask', bit_rate=10, total_cores=server.max_cores)
        result = measure_ber(server, clean_channel, cfg, trials=10, seed=15)
        assert result.ber == 0.0
        assert result.frames_lost == 0

    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            SweepGrid(distances_cm=(), bit_rates=(1,))

    def test_grid_order(self):
        grid = SweepGrid(distances_cm=(20, 40), bit_rates=(1, 10), schemes=('ook', 'ask'))
        cells = list(grid.cells())
        assert len(cells) == 8
        assert cells[0] == ('ook', 1.0, 20.0)
        assert cells[1] == ('ook', 1.0, 40.0)
        assert cells[-1] == ('ask', 10.0, 40.0)


@pytest.mark.slow
class TestBerAgainstMeasurements:
    def test_server_reaches_further_than_laptop(self):
        cfg = ModulationConfig(bit_rate=10, total_cores=12)
        server = measure_ber(builtin_profile('server'), ChannelSpec(distance_cm=120), cfg, trials=20, seed=3)
        laptop_cfg = ModulationConfig(bit_rate=10, total_cores=4)
        laptop = measure_ber(builtin_profile('laptop'), ChannelSpec(distance_cm=120), laptop_cfg,
                             trials=20, seed=3)
        assert server.ber <= 0.2
        assert laptop.ber > 0.2

    @pytest.mark.parametrize('distance', [20, 40, 60])
    def test_slow_rate_error_free_up_to_sixty_centimetres(self, pc1, distance):
        cfg = ModulationConfig(bit_rate=1, total_cores=8)
        assert measure_ber(pc1, ChannelSpec(distance_cm=distance), cfg, trials=200, seed=4).ber == 0.0

    def test_slow_rate_at_one_metre(self, pc1):
        cfg = ModulationConfig(bit_rate=1, total_cores=8)
        assert measure_ber(pc1, ChannelSpec(distance_cm=100), cfg, trials=200, seed=4).ber <= 0.10

    def test_fast_rate_close_up(self, pc1):
        cfg = ModulationConfig(bit_rate=40, total_cores=8)
        assert measure_ber(pc1, ChannelSpec(distance_cm=5), cfg, trials=200, seed=8).ber == 0.0

    @pytest.mark.parametrize('distance', [40, 60])
    def test_fast_rate_fails_beyond_forty_centimetres(self, pc1, distance):
        cfg = ModulationConfig(bit_rate=40, total_cores=8)
        assert measure_ber(pc1, ChannelSpec(distance_cm=distance), cfg, trials=200, seed=8).ber >= 0.25

    @pytest.mark.parametrize('cfg', [
        ModulationConfig(scheme='ook', bit_rate=10, total_cores=8),
        ModulationConfig(scheme='ask', bit_rate=10, total_cores=8),
        ModulationConfig(scheme='fsk', bit_rate=5, total_cores=8, fsk_tones_hz=(10, 20)),
        ModulationConfig(scheme='ofdm', bit_rate=2, total_cores=8, ofdm_subcarriers_hz=(7, 13)),
    ], ids=['ook', 'ask', 'fsk', 'ofdm'])
    def test_noise_free_link_over_many_frames(self, cfg, pc1, clean_channel):
        result = measure_ber(pc1, clean_channel, cfg, trials=500, seed=16)
        assert result.bits_total == 16000
        assert result.ber == 0.0

    def test_ber_grows_with_distance(self, pc1):
        grid = SweepGrid(distances_cm=(20, 60, 100, 140, 180), bit_rates=(10,), trials=100, seed=17)
        bers = [r.ber for r in sweep(grid, pc1, ChannelSpec(distance_cm=20))]
        assert bers[0] == 0.0
        assert np.all(np.diff(bers) >= 0.0)

    def test_ber_falls_with_snr(self, pc1):
        distances = tuple(range(60, 260, 20))
        cfg = ModulationConfig(bit_rate=10, total_cores=8)
        snr = capacity_curve(pc1, distances, ChannelSpec(distance_cm=20), cores=8)['snr_db']
        bers = [measure_ber(pc1, ChannelSpec(distance_cm=d), cfg, trials=200, seed=18).ber for d in distances]
        assert len(bers) == 10
        assert spearmanr(snr, bers).correlation <= -0.9

    def test_continuous_jammer_breaks_the_link(self, pc1):
        cfg = ModulationConfig(bit_rate=10, total_cores=8)
        jammer = JammerSpec(20.0, 100 * predict_field(pc1, 100))
        result = measure_ber(pc1, ChannelSpec(distance_cm=100, jammers=(jammer,)), cfg, trials=50, seed=19)
        assert result.ber >= 0.40 or result.frames_lost > 0

    def test_keyed_jammer(self, pc1):
        cfg = ModulationConfig(bit_rate=10, total_cores=8)
        jammer = JammerSpec(20.0, 100 * predict_field(pc1, 100), keyed=True)
        channel = ChannelSpec(distance_cm=100, jammers=(jammer,))
        assert measure_ber(pc1, channel, cfg, trials=50, seed=5).ber >= 0.40

    def test_parallel_sweep_matches_serial(self, pc1):
        grid = SweepGrid(distances_cm=(20, 80), bit_rates=(10,), trials=2, seed=6)
        channel = ChannelSpec(distance_cm=20)
        serial = sweep(grid, pc1, channel)
        parallel = sweep(grid, pc1, channel, workers=2)
        assert serial == parallel
        assert [r.distance_cm for r in serial] == [20.0, 80.0]

    def test_capacity_decreases_with_distance(self):
        server = builtin_profile('server')
        curve = capacity_curve(server, (10, 20, 150), ChannelSpec(distance_cm=20))
        assert list(curve.columns) == ['distance_cm', 'snr_db', 'capacity_bps']
        assert np.all(np.diff(curve['capacity_bps']) < 0)
        assert curve['capacity_bps'][1] == pytest.approx(477, rel=0.2)
        assert curve['capacity_bps'][2] == pytest.approx(51, rel=0.3)
