#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Point d'entrée en ligne de commande.

    python -m coremag.main simulate --in msg.bin --profile pc1 --distance 20 --decode
"""

import argparse
import logging
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from coremag.analysis.ber import SweepGrid, capacity_curve, sweep, write_csv
from coremag.analysis.spectrum import shannon_capacity, spectrogram, write_spectrogram_csv
from coremag.channel.model import ChannelSpec, JammerSpec, ShieldSpec, apply
from coremag.channel.trace_io import read_trace, write_trace
from coremag.codec.framing import PAYLOAD_BITS, PREAMBLE, Payload, bytes_from_payloads, frames_from_bytes
from coremag.config import Config
from coremag.errors import ConfigError, CoremagError
from coremag.loadgen.transmitter import TransmitPlan, format_report, self_test, transmit
from coremag.modem.receiver import DemodConfig, locate_frames
from coremag.modem.schemes import ModulationConfig, Scheme, modulate_frames
from coremag.waveform.profiles import (MachineProfile, builtin_profile, fit_profile, list_profiles,
                                       load_measurements, save_profile)
from coremag.waveform.renderer import JitterSpec, render, workload_jitter

logger = logging.getLogger(__name__)

THREADS_CSV = os.path.join(Config.DATA_DIR, 'field_vs_threads.csv')


def configure_logging(verbose: bool = False):
    level = logging.DEBUG if verbose else getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO)
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if Config.LOG_FILE:
        handlers.append(logging.FileHandler(Config.LOG_FILE))
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True
    )


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigError(f"liste de nombres invalide : {text}")


def _ints(text: str) -> List[int]:
    return [int(v) for v in _floats(text)]


def _codebook(text: str) -> Dict[str, float]:
    """`0:3,1:7,01:13` -> {'0': 3.0, '1': 7.0, '01': 13.0}"""
    book = {}
    for item in text.split(','):
        word, sep, freq = item.partition(':')
        if not sep:
            raise ConfigError(f"entrée de codebook invalide : {item}")
        book[word.strip()] = float(freq)
    return book


def _jammer(text: str) -> JammerSpec:
    """`fréquence:amplitude[:keyed]`"""
    parts = text.split(':')
    if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] != 'keyed'):
        raise ConfigError(f"brouilleur invalide : {text} (attendu fréquence:amplitude[:keyed])")
    return JammerSpec(frequency_hz=float(parts[0]), amplitude_mT=float(parts[1]), keyed=len(parts) == 3)


def _seeds(seed: int):
    render_seed, channel_seed = np.random.SeedSequence(seed).generate_state(2)
    return int(render_seed), int(channel_seed)


def _modulation(args, total_cores: int) -> ModulationConfig:
    kwargs = dict(scheme=args.scheme, carrier_hz=args.freq, bit_rate=args.rate,
                  total_cores=total_cores, guard_ms=args.guard_ms,
                  n_cycles0=args.n_cycles0, n_cycles1=args.n_cycles1)
    if args.levels:
        kwargs['ask_levels'] = tuple(_ints(args.levels))
    if args.tones:
        kwargs['fsk_tones_hz'] = tuple(_floats(args.tones))
    if args.codebook:
        kwargs['fsk_codebook'] = _codebook(args.codebook)
    if args.subcarriers:
        kwargs['ofdm_subcarriers_hz'] = tuple(_floats(args.subcarriers))
    return ModulationConfig(**kwargs)


def _demod(cfg: ModulationConfig, profile: Optional[MachineProfile], **kwargs) -> DemodConfig:
    if profile is not None and cfg.scheme == Scheme.ASK:
        kwargs['ask_gains'] = profile.relative_levels(cfg.ask_levels)
    return DemodConfig(modulation=cfg, **kwargs)


def _channel(args, seed: int) -> ChannelSpec:
    shield = ShieldSpec(thickness_mm=args.shield_mm) if args.shield_mm else ShieldSpec(enabled=False)
    return ChannelSpec(distance_cm=args.distance, shield=shield, noise_floor_mT=args.noise,
                       mains_hz=args.mains_hz, mains_mT=args.mains_mt,
                       jammers=tuple(_jammer(j) for j in args.jammer or ()), seed=seed)


def _jitter(args) -> JitterSpec:
    return workload_jitter(args.workload) if args.workload else JitterSpec()


def _read_input(path: str) -> bytes:
    with open(path, 'rb') as handle:
        data = handle.read()
    if not data:
        raise ConfigError(f"fichier d'entrée vide : {path}")
    return data


def cmd_simulate(args) -> int:
    channel_seed = _seeds(args.seed)[1]
    channel = _channel(args, channel_seed)
    profile = builtin_profile(args.profile)
    cfg = _modulation(args, args.cores or profile.max_cores)
    data = _read_input(args.input)

    frames, pad_bits = frames_from_bytes(data)
    schedule = modulate_frames(frames, cfg)
    emitted = render(schedule, profile, args.render_rate, _jitter(args), _seeds(args.seed)[0])
    received = apply(emitted, profile, channel)
    received = received.with_samples(received.samples, scheme=cfg.scheme.value, bit_rate=cfg.bit_rate,
                                     frames=len(frames), pad_bits=pad_bits)
    write_trace(received, args.out)
    print(args.out)

    if args.decode:
        decisions = locate_frames(received, _demod(cfg, profile, max_frames=len(frames)))
        start = len(PREAMBLE)
        payloads, wrong = [], 0
        for i, sent in enumerate(frames):
            if i < len(decisions):
                bits = decisions[i].bits.bits[start:start + PAYLOAD_BITS]
                payloads.append(Payload(bits))
                wrong += sum(a != b for a, b in zip(bits, sent.payload.bits))
            else:
                wrong += PAYLOAD_BITS
        recovered = bytes_from_payloads(payloads, pad_bits if len(payloads) == len(frames) else 0)
        if args.recovered:
            with open(args.recovered, 'wb') as handle:
                handle.write(recovered)
        total = len(frames) * PAYLOAD_BITS
        print(f"frames {len(decisions)}/{len(frames)}")
        print(f"bits_wrong {wrong}")
        print(f"ber {wrong / total:.6f}")
        print(f"recovered_hex {recovered.hex()}")
        print(f"match {'yes' if recovered == data else 'no'}")
    return 0


def cmd_decode(args) -> int:
    trace = read_trace(args.trace)
    needed = max(_ints(args.levels) if args.levels else [4])
    if args.subcarriers:
        needed = max(needed, len(_floats(args.subcarriers)))
    cfg = _modulation(args, args.cores or needed)
    profile = builtin_profile(args.profile) if args.profile else None
    decisions = locate_frames(trace, _demod(cfg, profile, sync_threshold=args.threshold))
    start = len(PREAMBLE)
    payloads = [Payload(d.bits.bits[start:start + PAYLOAD_BITS]) for d in decisions]
    parity_errors = sum(1 for d in decisions
                        if sum(d.bits.bits[start:start + PAYLOAD_BITS + 1]) % 2)
    pad_bits = int(trace.origin.get('pad_bits', 0)) if args.pad_bits is None else args.pad_bits
    recovered = bytes_from_payloads(payloads, pad_bits)
    if args.out:
        with open(args.out, 'wb') as handle:
            handle.write(recovered)
    print(f"frames {len(decisions)}")
    print(f"parity_errors {parity_errors}")
    print(f"recovered_hex {recovered.hex()}")
    return 0


def cmd_transmit(args) -> int:
    if args.check:
        report = self_test(int(args.seconds * 1000), args.freq or Config.CARRIER_HZ, args.cores)
        print(format_report(report))
        return 0
    if args.cores < 1:
        raise ConfigError("au moins un cœur est nécessaire")
    if not args.input:
        raise ConfigError("--in est obligatoire hors mode --check")
    cfg = _modulation(args, args.cores)
    frames, _ = frames_from_bytes(_read_input(args.input))
    core_map = tuple(_ints(args.core_map)) if args.core_map else None
    report = transmit(TransmitPlan(modulate_frames(frames, cfg), core_map=core_map, priority_hint=args.nice))
    print(format_report(report))
    return 0


def cmd_sweep(args) -> int:
    profile = builtin_profile(args.profile)
    grid = SweepGrid(distances_cm=_floats(args.distances), bit_rates=_floats(args.rates),
                     schemes=[s.strip() for s in args.schemes.split(',') if s.strip()],
                     trials=args.trials, seed=args.seed)
    channel = _channel(args, _seeds(args.seed)[1])
    cfg = _modulation(args, args.cores or profile.max_cores)
    results = sweep(grid, profile, channel, cfg, _jitter(args), workers=args.workers)
    print(write_csv(results, args.out))
    return 0


def cmd_capacity(args) -> int:
    if args.snr is not None:
        print(f"{shannon_capacity(args.bandwidth, args.snr):.6g}")
        return 0
    if not args.profile:
        raise ConfigError("--snr ou --profile est requis")
    profile = builtin_profile(args.profile)
    channel = _channel(args, _seeds(args.seed)[1])
    frame = capacity_curve(profile, _floats(args.distances), channel, cores=args.cores,
                           bandwidth_hz=args.bandwidth)
    frame.to_csv(args.out, index=False, lineterminator='\n', float_format='%.6g')
    logger.info(f"Courbe de capacité écrite : {args.out}")
    print(args.out)
    return 0


def cmd_spectrogram(args) -> int:
    result = spectrogram(read_trace(args.trace), args.window, args.overlap)
    print(write_spectrogram_csv(result, args.out))
    return 0


def cmd_fit_profile(args) -> int:
    name = args.name or os.path.splitext(os.path.basename(args.data))[0]
    machine = args.machine or name
    distances = load_measurements(args.data, machine)
    threads: Dict[float, float] = {}
    threads_csv = args.threads or (THREADS_CSV if args.machine else None)
    if threads_csv:
        threads = load_measurements(threads_csv, machine)
    if not threads and distances:
        ref = min(distances, key=lambda d: abs(d - args.r_ref))
        threads = {args.cores: distances[ref]}
        logger.warning(f"Pas de mesure par thread : {args.cores} cœur(s) supposé(s) à {distances[ref]} mT")
    profile = fit_profile(name, {int(k): v for k, v in threads.items()}, distances, r_ref_cm=args.r_ref)
    print(save_profile(profile, args.out or f"{name}.profile"))
    return 0


def cmd_profiles(args) -> int:
    for name in list_profiles():
        profile = builtin_profile(name)
        print(f"{name} exponent={profile.decay_exponent:.3f} max_cores={profile.max_cores} "
              f"amp_ref={profile.amp(profile.calibration_cores):.3g}mT r_ref={profile.r_ref_cm:g}cm")
    return 0


def _add_modem_options(parser):
    group = parser.add_argument_group('modulation')
    group.add_argument('--scheme', choices=['ook', 'ask', 'fsk', 'ofdm'], default='ook')
    group.add_argument('--rate', type=float, default=1.0, help="débit en bit/s")
    group.add_argument('--freq', '--carrier', dest='freq', type=float, default=None,
                       help="fréquence porteuse (Hz), par défaut max(20, débit) en OOK")
    group.add_argument('--cores', type=int, default=None, help="nombre de cœurs émetteurs")
    group.add_argument('--levels', help="niveaux ASK, ex. 1,2,3,4")
    group.add_argument('--tones', help="tons FSK, ex. 10,20")
    group.add_argument('--codebook', help="codebook FSK, ex. 0:3,1:7,01:13")
    group.add_argument('--subcarriers', help="sous-porteuses OFDM, ex. 7,13")
    group.add_argument('--n-cycles0', type=float, default=None)
    group.add_argument('--n-cycles1', type=float, default=None)
    group.add_argument('--guard-ms', type=int, default=Config.GUARD_MS)


def _add_channel_options(parser, distance_default: Optional[float] = 20.0):
    group = parser.add_argument_group('canal')
    group.add_argument('--profile', default='pc1', help="profil livré ou chemin de fichier")
    group.add_argument('--distance', type=float, default=distance_default, help="distance en cm")
    group.add_argument('--noise', type=float, default=Config.NOISE_FLOOR_MT, help="bruit (mT)")
    group.add_argument('--shield-mm', type=float, default=None, help="épaisseur du blindage (mm)")
    group.add_argument('--jammer', action='append', help="fréquence:amplitude[:keyed]")
    group.add_argument('--mains-hz', type=float, default=None)
    group.add_argument('--mains-mt', type=float, default=0.0)
    group.add_argument('--workload', choices=['idle', 'word', 'video', 'backup', 'compute'], default=None)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=Config.SEED)
    common.add_argument('-v', '--verbose', action='store_true')

    parser = argparse.ArgumentParser(prog='coremag', description="Canal magnétique par charge CPU")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', parents=[common], help="message -> trace simulée")
    _add_modem_options(p)
    _add_channel_options(p)
    p.add_argument('--in', dest='input', required=True)
    p.add_argument('--out', default='trace.magtrace')
    p.add_argument('--render-rate', type=float, default=Config.RENDER_RATE_HZ)
    p.add_argument('--decode', action='store_true')
    p.add_argument('--recovered', default=None, help="fichier des octets reçus")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser('decode', parents=[common], help="trace -> octets")
    _add_modem_options(p)
    p.add_argument('--trace', required=True)
    p.add_argument('--threshold', type=float, default=Config.SYNC_THRESHOLD)
    p.add_argument('--profile', default=None, help="profil de l'émetteur (niveaux ASK)")
    p.add_argument('--pad-bits', type=int, default=None)
    p.add_argument('--out', default=None)
    p.set_defaults(handler=cmd_decode)

    p = sub.add_parser('transmit', parents=[common], help="émission réelle par charge CPU")
    _add_modem_options(p)
    p.set_defaults(cores=1, guard_ms=0)
    p.add_argument('--in', dest='input', default=None)
    p.add_argument('--check', action='store_true', help="porteuse de calibration uniquement")
    p.add_argument('--seconds', type=float, default=2.0)
    p.add_argument('--core-map', default=None, help="cœurs logiques, ex. 0,2,4,6")
    p.add_argument('--nice', type=int, default=None)
    p.set_defaults(handler=cmd_transmit)

    p = sub.add_parser('sweep', parents=[common], help="BER sur une grille débit x distance")
    _add_modem_options(p)
    _add_channel_options(p)
    p.add_argument('--rates', default='1,10,40')
    p.add_argument('--distances', default='5,20,40,60,80,100,120')
    p.add_argument('--schemes', default='ook')
    p.add_argument('--trials', type=int, default=Config.TRIALS)
    p.add_argument('--workers', type=int, default=1)
    p.add_argument('--out', default='sweep.csv')
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser('capacity', parents=[common], help="capacité de Shannon")
    _add_channel_options(p)
    p.set_defaults(profile=None)
    p.add_argument('--bandwidth', type=float, default=Config.CAPACITY_BANDWIDTH_HZ)
    p.add_argument('--snr', type=float, default=None, help="SNR en dB")
    p.add_argument('--distances', default='10,20,40,60,80,100,120,150')
    p.add_argument('--cores', type=int, default=None)
    p.add_argument('--out', default='capacity.csv')
    p.set_defaults(handler=cmd_capacity)

    p = sub.add_parser('spectrogram', parents=[common], help="spectrogramme d'une trace")
    p.add_argument('--trace', required=True)
    p.add_argument('--window', type=float, default=1.0, help="fenêtre (s)")
    p.add_argument('--overlap', type=float, default=0.5)
    p.add_argument('--out', default='spectrogram.csv')
    p.set_defaults(handler=cmd_spectrogram)

    p = sub.add_parser('fit-profile', parents=[common], help="ajuste un profil sur des mesures")
    p.add_argument('--data', required=True, help="CSV distance_cm,field_mT")
    p.add_argument('--threads', default=None, help="CSV threads,field_mT")
    p.add_argument('--machine', default=None, help="filtre sur la colonne machine")
    p.add_argument('--name', default=None)
    p.add_argument('--cores', type=int, default=1, help="cœurs actifs pendant les mesures en distance")
    p.add_argument('--r-ref', type=float, default=20.0)
    p.add_argument('--out', default=None)
    p.set_defaults(handler=cmd_fit_profile)

    p = sub.add_parser('profiles', parents=[common], help="liste les profils livrés")
    p.set_defaults(handler=cmd_profiles)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except CoremagError as e:
        logger.error(f"Erreur pendant {args.command}: {str(e)}")
        print(f"erreur : {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error(f"Erreur d'entrée/sortie pendant {args.command}: {str(e)}")
        print(f"erreur : {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
