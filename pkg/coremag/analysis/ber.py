#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Mesure du taux d'erreur binaire par simulation de bout en bout.
"""

import logging
from dataclasses import asdict, dataclass, replace
from multiprocessing import Pool
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from coremag.analysis.spectrum import shannon_capacity
from coremag.channel.model import ChannelSpec, apply, snr_db
from coremag.codec.framing import PAYLOAD_BITS, PREAMBLE, BitStream, frame
from coremag.config import Config
from coremag.errors import ConfigError, NoPreamble
from coremag.modem.receiver import DemodConfig, locate_frames
from coremag.modem.schemes import ModulationConfig, Scheme, modulate, modulate_frames
from coremag.waveform.profiles import MachineProfile
from coremag.waveform.renderer import JitterSpec, render

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['scheme', 'bit_rate', 'distance_cm', 'ber', 'frames_lost']


@dataclass(frozen=True)
class BerResult:
    scheme: str
    bit_rate: float
    distance_cm: float
    trials: int
    bits_total: int
    bits_wrong: int
    frames_lost: int

    @property
    def ber(self) -> float:
        return self.bits_wrong / self.bits_total if self.bits_total else 0.0


@dataclass(frozen=True)
class SweepGrid:
    distances_cm: Sequence[float]
    bit_rates: Sequence[float]
    schemes: Sequence[str] = ('ook',)
    trials: int = Config.TRIALS
    seed: int = Config.SEED

    def __post_init__(self):
        if not self.distances_cm or not self.bit_rates or not self.schemes:
            raise ConfigError("grille de balayage vide")
        if self.trials < 1:
            raise ConfigError("au moins un essai par cellule")

    def cells(self):
        for scheme in self.schemes:
            for rate in self.bit_rates:
                for distance in self.distances_cm:
                    yield Scheme(scheme), float(rate), float(distance)


def _trial_seeds(seed: int, trials: int) -> List[np.ndarray]:
    return [child.generate_state(3) for child in np.random.SeedSequence(seed).spawn(trials)]


def measure_ber(profile: MachineProfile, channel_spec: ChannelSpec, modulation_cfg: ModulationConfig,
                trials: int = Config.TRIALS, seed: int = Config.SEED, jitter: JitterSpec = JitterSpec(),
                render_rate_hz: float = Config.RENDER_RATE_HZ) -> BerResult:
    """
    Mesure le BER sur `trials` trames aléatoires.

    Une trame dont le préambule n'est pas trouvé compte pour 32 bits faux et
    incrémente `frames_lost`.

    Args:
        profile (MachineProfile): émetteur
        channel_spec (ChannelSpec): canal (sa graine est remplacée à chaque essai)
        modulation_cfg (ModulationConfig): schéma et débit
        trials (int): nombre de trames
        seed (int): graine maîtresse

    Returns:
        BerResult: résultat agrégé
    """
    if trials < 1:
        raise ConfigError("au moins un essai est nécessaire")
    gains = profile.relative_levels(modulation_cfg.ask_levels) if modulation_cfg.scheme == Scheme.ASK else None
    demod = DemodConfig(modulation=modulation_cfg, max_frames=1, ask_gains=gains)
    bits_wrong = 0
    frames_lost = 0
    start = len(PREAMBLE)

    for payload_seed, render_seed, channel_seed in _trial_seeds(seed, trials):
        payload = tuple(int(b) for b in np.random.default_rng(payload_seed).integers(0, 2, PAYLOAD_BITS))
        schedule = modulate_frames([frame(payload)], modulation_cfg)
        emitted = render(schedule, profile, render_rate_hz, jitter, int(render_seed))
        received = apply(emitted, profile, replace(channel_spec, seed=int(channel_seed)))
        try:
            decision = locate_frames(received, demod)[0]
        except NoPreamble:
            frames_lost += 1
            bits_wrong += PAYLOAD_BITS
            continue
        decoded = decision.bits.bits[start:start + PAYLOAD_BITS]
        bits_wrong += sum(a != b for a, b in zip(decoded, payload))

    result = BerResult(scheme=modulation_cfg.scheme.value, bit_rate=modulation_cfg.bit_rate,
                       distance_cm=channel_spec.distance_cm, trials=trials,
                       bits_total=trials * PAYLOAD_BITS, bits_wrong=bits_wrong, frames_lost=frames_lost)
    logger.info(f"BER {result.scheme} {result.bit_rate} bit/s à {result.distance_cm} cm : "
                f"{result.ber:.4f} ({frames_lost} trame(s) perdue(s))")
    return result


def _cell(args):
    profile, channel, cfg, trials, seed, jitter = args
    return measure_ber(profile, channel, cfg, trials, seed, jitter)


def sweep(grid: SweepGrid, profile: MachineProfile, base_channel: ChannelSpec,
          base_cfg: Optional[ModulationConfig] = None, jitter: JitterSpec = JitterSpec(),
          workers: int = 1) -> List[BerResult]:
    """
    Évalue toutes les cellules schéma x débit x distance.

    Chaque cellule reçoit une graine dérivée de la graine de la grille ; l'ordre
    des résultats suit l'ordre de la grille, y compris en parallèle.
    """
    base_cfg = base_cfg or ModulationConfig(total_cores=profile.max_cores)
    cells = list(grid.cells())
    seeds = [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(grid.seed).spawn(len(cells))]
    jobs = [(profile, replace(base_channel, distance_cm=distance),
             replace(base_cfg, scheme=scheme, bit_rate=rate),
             grid.trials, cell_seed, jitter)
            for (scheme, rate, distance), cell_seed in zip(cells, seeds)]

    logger.info(f"Balayage de {len(jobs)} cellule(s), {grid.trials} essai(s) par cellule")
    if workers > 1:
        with Pool(processes=workers) as pool:
            return pool.map(_cell, jobs)
    return [_cell(job) for job in jobs]


def results_frame(results: Sequence[BerResult]) -> pd.DataFrame:
    rows = [dict(asdict(r), ber=r.ber) for r in results]
    return pd.DataFrame(rows, columns=CSV_COLUMNS + ['trials', 'bits_total', 'bits_wrong'])


def write_csv(results: Sequence[BerResult], path: str) -> str:
    """CSV à en-tête : scheme, bit_rate, distance_cm, ber, frames_lost."""
    results_frame(results)[CSV_COLUMNS].to_csv(path, index=False, lineterminator='\n',
                                                  float_format='%.6f')
    logger.info(f"Résultats écrits : {path} ({len(results)} ligne(s))")
    return path


def capacity_curve(profile: MachineProfile, distances_cm: Sequence[float], channel: ChannelSpec,
                   cores: Optional[int] = None, carrier_hz: float = Config.CARRIER_HZ,
                   bandwidth_hz: float = Config.CAPACITY_BANDWIDTH_HZ, duration_s: int = 10,
                   render_rate_hz: float = Config.RENDER_RATE_HZ) -> pd.DataFrame:
    """
    Capacité en fonction de la distance à partir du SNR mesuré sur une porteuse continue.

    `snr_db` mesure (S+N)/N ; la capacité utilise S/N.

    Returns:
        pd.DataFrame: colonnes distance_cm, snr_db, capacity_bps
    """
    cores = cores or profile.calibration_cores
    cfg = ModulationConfig(scheme=Scheme.OOK, carrier_hz=carrier_hz, bit_rate=1.0,
                           total_cores=cores, active_cores=cores)
    emitted = render(modulate(BitStream((1,) * duration_s), cfg), profile, render_rate_hz, JitterSpec(),
                     channel.seed)
    rows = []
    for distance in distances_cm:
        received = apply(emitted, profile, replace(channel, distance_cm=distance))
        measured = snr_db(received, (0.0, bandwidth_hz))
        signal_to_noise = max(10.0 ** (measured / 10.0) - 1.0, 0.0)
        capacity = shannon_capacity(bandwidth_hz, 10.0 * np.log10(signal_to_noise)) if signal_to_noise > 0 else 0.0
        rows.append({'distance_cm': float(distance), 'snr_db': measured, 'capacity_bps': capacity})
        logger.debug(f"Capacité à {distance} cm : {capacity:.1f} bit/s (SNR {measured:.2f} dB)")
    return pd.DataFrame(rows, columns=['distance_cm', 'snr_db', 'capacity_bps'])
