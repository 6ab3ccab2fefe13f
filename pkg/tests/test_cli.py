#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import os

import pandas as pd
import pytest

from coremag.channel.trace_io import read_trace
from coremag.config import Config
from coremag.main import build_parser, main
from coremag.waveform.profiles import load_profile


@pytest.fixture
def message(tmp_path):
    path = tmp_path / 'msg.bin'
    path.write_bytes(b'hi!')
    return str(path)


@pytest.fixture
def simulated(tmp_path, message, capsys):
    trace = str(tmp_path / 'msg.magtrace')
    assert main(['simulate', '--in', message, '--out', trace, '--rate', '10']) == 0
    capsys.readouterr()
    return trace


def _lines(capsys):
    return capsys.readouterr().out.strip().split('\n')


class TestSimulate:
    def test_simulate_and_decode(self, tmp_path, message, capsys):
        trace = str(tmp_path / 'out.magtrace')
        recovered = tmp_path / 'back.bin'
        code = main(['simulate', '--in', message, '--out', trace, '--profile', 'pc1', '--distance', '20',
                     '--rate', '10', '--decode', '--recovered', str(recovered)])
        assert code == 0
        lines = _lines(capsys)
        assert lines[0] == trace
        assert 'frames 1/1' in lines
        assert 'bits_wrong 0' in lines
        assert 'recovered_hex 686921' in lines
        assert 'match yes' in lines
        assert recovered.read_bytes() == b'hi!'

    def test_ask_uses_profile_levels(self, tmp_path, message, capsys):
        trace = str(tmp_path / 'ask.magtrace')
        assert main(['simulate', '--in', message, '--out', trace, '--profile', 'server', '--scheme', 'ask',
                     '--rate', '10', '--noise', '0', '--decode']) == 0
        assert 'match yes' in _lines(capsys)
        assert main(['decode', '--trace', trace, '--scheme', 'ask', '--rate', '10', '--profile', 'server']) == 0
        assert _lines(capsys)[-1] == 'recovered_hex 686921'

    def test_trace_metadata(self, simulated):
        trace = read_trace(simulated)
        assert trace.rate_hz == 154.0
        assert trace.origin['scheme'] == 'ook'
        assert trace.origin['pad_bits'] == '8'
        assert trace.origin['profile'] == 'pc1'

    def test_same_seed_same_trace(self, tmp_path, message, capsys):
        paths = [str(tmp_path / f'{name}.magtrace') for name in ('a', 'b')]
        for path in paths:
            assert main(['simulate', '--in', message, '--out', path, '--seed', '42']) == 0
        capsys.readouterr()
        with open(paths[0], 'rb') as first, open(paths[1], 'rb') as second:
            assert first.read() == second.read()

    def test_zero_distance(self, tmp_path, message):
        assert main(['simulate', '--in', message, '--out', str(tmp_path / 't'), '--distance', '0']) == 2

    def test_empty_message(self, tmp_path):
        empty = tmp_path / 'empty.bin'
        empty.write_bytes(b'')
        assert main(['simulate', '--in', str(empty), '--out', str(tmp_path / 't')]) == 2

    def test_unknown_profile(self, tmp_path, message):
        assert main(['simulate', '--in', message, '--out', str(tmp_path / 't'), '--profile', 'abacus']) == 3


class TestDecode:
    def test_decode_trace(self, simulated, tmp_path, capsys):
        out = tmp_path / 'decoded.bin'
        assert main(['decode', '--trace', simulated, '--rate', '10', '--out', str(out)]) == 0
        assert _lines(capsys) == ['frames 1', 'parity_errors 0', 'recovered_hex 686921']
        assert out.read_bytes() == b'hi!'

    def test_wrong_rate(self, simulated):
        assert main(['decode', '--trace', simulated, '--rate', '0.5']) == 4

    def test_missing_trace(self, tmp_path):
        assert main(['decode', '--trace', str(tmp_path / 'absent.magtrace')]) == 3


class TestOtherCommands:
    def test_capacity_from_snr(self, capsys):
        assert main(['capacity', '--snr', '0', '--bandwidth', '50']) == 0
        assert _lines(capsys) == ['50']

    def test_capacity_needs_input(self):
        assert main(['capacity']) == 2

    def test_profiles(self, capsys):
        assert main(['profiles']) == 0
        lines = _lines(capsys)
        assert [line.split()[0] for line in lines] == ['laptop', 'nuk', 'pc1', 'pc2', 'server']

    def test_fit_profile(self, tmp_path):
        out = str(tmp_path / 'pc1.profile')
        data = os.path.join(Config.DATA_DIR, 'field_vs_distance.csv')
        assert main(['fit-profile', '--data', data, '--machine', 'pc1', '--out', out]) == 0
        profile = load_profile(out)
        assert profile.decay_exponent == pytest.approx(1.977315, abs=1e-4)
        assert profile.max_cores == 8

    def test_spectrogram(self, simulated, tmp_path, capsys):
        out = str(tmp_path / 'spec.csv')
        assert main(['spectrogram', '--trace', simulated, '--window', '0.5', '--out', out]) == 0
        assert pd.read_csv(out).columns[0] == 'time_s'

    def test_sweep(self, tmp_path, capsys):
        out = str(tmp_path / 'sweep.csv')
        assert main(['sweep', '--rates', '10', '--distances', '20', '--trials', '1', '--out', out]) == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ['scheme', 'bit_rate', 'distance_cm', 'ber', 'frames_lost']
        assert frame['ber'][0] == 0.0

    def test_transmit_needs_input(self):
        assert main(['transmit']) == 2

    def test_transmit_needs_a_core(self, message):
        assert main(['transmit', '--in', message, '--cores', '0']) == 2

    def test_transmit_defaults(self):
        args = build_parser().parse_args(['transmit'])
        assert args.cores == 1
        assert args.guard_ms == 0
