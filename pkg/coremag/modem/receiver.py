#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Récepteur : synchronisation sur le préambule 1010 puis décision bit à bit.

Les seuils de décision sont estimés sur le préambule reçu, ce qui rend le
décodage indépendant de l'échelle et du décalage du champ mesuré.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from coremag.codec.framing import PREAMBLE, BitStream
from coremag.config import Config
from coremag.errors import ConfigError, NoPreamble, RateMismatch
from coremag.modem.dsp import (carrier_baseline, moving_average, normalized_xcorr, sliding_tone_magnitude, sliding_variance,
                               tone_amplitude)
from coremag.modem.schemes import BODY_BITS, ModulationConfig, Scheme

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DemodConfig:
    """
    Paramètres du récepteur.

    Args:
        modulation (ModulationConfig): configuration de l'émetteur
        sync_threshold (float): score de corrélation minimal du préambule
        edge_trim (float): fraction ignorée de chaque côté d'une fenêtre de décision
        near_peak (float): un préambule est retenu dès que son score atteint
            cette fraction du meilleur score
        max_frames (int, optional): nombre maximal de trames à décoder
        min_energy_frac (float): les fenêtres dont la variance est inférieure à
            cette fraction de la variance maximale ne sont pas candidates
        ask_gains (tuple, optional): champ relatif de chaque niveau ASK rapporté au
            niveau maximal ; sans valeur, le champ est supposé proportionnel au
            nombre de cœurs
    """
    modulation: ModulationConfig
    sync_threshold: float = Config.SYNC_THRESHOLD
    edge_trim: float = 0.15
    near_peak: float = 0.9
    max_frames: Optional[int] = None
    min_energy_frac: float = 0.1
    ask_gains: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not 0 < self.sync_threshold < 1:
            raise ConfigError("le seuil de synchronisation doit être dans ]0, 1[")
        if not 0 <= self.edge_trim < 0.5:
            raise ConfigError("edge_trim doit être dans [0, 0.5[")
        if not 0 < self.near_peak <= 1:
            raise ConfigError("near_peak doit être dans ]0, 1]")
        if self.max_frames is not None and self.max_frames < 1:
            raise ConfigError("max_frames doit être au moins 1")
        if not 0 <= self.min_energy_frac < 1:
            raise ConfigError("min_energy_frac doit être dans [0, 1[")
        if self.ask_gains is not None:
            gains = tuple(float(g) for g in self.ask_gains)
            object.__setattr__(self, 'ask_gains', gains)
            if len(gains) != len(self.modulation.ask_levels):
                raise ConfigError(f"{len(gains)} gains ASK pour {len(self.modulation.ask_levels)} niveaux")
            if not all(np.isfinite(g) and g >= 0 for g in gains):
                raise ConfigError("les gains ASK doivent être finis et positifs")

    @property
    def level_gains(self) -> np.ndarray:
        """Champ relatif attendu pour chaque niveau ASK."""
        if self.ask_gains is not None:
            return np.asarray(self.ask_gains, dtype=float)
        levels = np.asarray(self.modulation.ask_levels, dtype=float)
        return levels / levels.max()


@dataclass(frozen=True)
class FrameDecision:
    offset: int
    score: float
    bits: BitStream


def _window(x: np.ndarray, start: float, length: float, trim: float) -> np.ndarray:
    a = int(round(start + trim * length))
    b = int(round(start + length - trim * length))
    return x[a:max(a + 1, b)]


def _preamble_template(spb: float) -> np.ndarray:
    length = int(round(len(PREAMBLE) * spb))
    index = np.minimum((np.arange(length) / spb).astype(int), len(PREAMBLE) - 1)
    return np.asarray(PREAMBLE, dtype=float)[index]


def _envelope_width(rate: float, mod: ModulationConfig) -> int:
    """Largeur (échantillons) de la moyenne glissante : une période de porteuse au plus."""
    span = min(1.0 / mod.carrier, mod.bit_ms / 2000.0)
    return max(1, int(round(rate * span)))


def _sync_track(x: np.ndarray, rate: float, spb: float, mod: ModulationConfig) -> np.ndarray:
    """Statistique lente qui reproduit l'enveloppe on/off du préambule."""
    width = int(round(spb))
    if mod.scheme in (Scheme.OOK, Scheme.ASK):
        return moving_average(x, _envelope_width(rate, mod))
    if mod.scheme == Scheme.FSK:
        zero, one = mod.preamble_tones
        return (sliding_tone_magnitude(x, one, rate, width)
                - sliding_tone_magnitude(x, zero, rate, width))
    return sum(sliding_tone_magnitude(x, f, rate, width) for f in mod.ofdm_subcarriers_hz)


def _pick_offset(scores: np.ndarray, best: float, spb: float, cfg: DemodConfig) -> int:
    level = max(cfg.sync_threshold, cfg.near_peak * best)
    first = int(np.flatnonzero(scores >= level)[0])
    reach = max(1, int(round(spb / 2)))
    return first + int(np.argmax(scores[first:first + reach + 1]))


def _bits_of(value: int, k: int) -> List[int]:
    return [int(c) for c in format(value, f'0{k}b')]


def _decode_frame(x: np.ndarray, rate: float, offset: int, spb: float, cfg: DemodConfig) -> List[int]:
    mod = cfg.modulation
    trim = cfg.edge_trim
    pre = [offset + i * spb for i in range(len(PREAMBLE))]
    ones = [i for i, b in enumerate(PREAMBLE) if b]
    zeros = [i for i, b in enumerate(PREAMBLE) if not b]
    pos = offset + len(PREAMBLE) * spb
    k = mod.bits_per_symbol
    body: List[int] = []

    if mod.scheme in (Scheme.OOK, Scheme.ASK):
        width = _envelope_width(rate, mod)
        envelope = moving_average(x, width)
        half_width = width / 2.0

        def level(start: float, length: float) -> float:
            if mod.scheme == Scheme.ASK:
                return carrier_baseline(_window(x, start, length, trim), mod.carrier, rate)
            t = max(trim, min(0.45, half_width / length))
            return float(np.mean(_window(envelope, start, length, t)))

        stats = [level(p, spb) for p in pre]
        off = np.mean([stats[i] for i in zeros])
        if mod.scheme == Scheme.OOK:
            on = np.mean([stats[i] for i in ones])
        else:
            # le premier 1 du préambule suit la garde
            on = stats[ones[-1]]
        mid = (on + off) / 2.0
        head = [int(s > mid) for s in stats]
        if mod.scheme == Scheme.OOK:
            for i in range(mod.body_bits):
                body.append(int(level(pos + i * spb, spb) > mid))
        else:
            expected = off + (on - off) * cfg.level_gains
            for i in range(mod.body_bits // k):
                stat = level(pos + i * k * spb, k * spb)
                body += _bits_of(int(np.argmin(np.abs(expected - stat))), k)

    elif mod.scheme == Scheme.FSK:
        zero, one = mod.preamble_tones
        head = [int(tone_amplitude(_window(x, p, spb, trim), one, rate)
                    > tone_amplitude(_window(x, p, spb, trim), zero, rate)) for p in pre]
        words = list(mod.codebook.items())
        span = min(len(w) for w, _ in words)
        while len(body) < BODY_BITS:
            segment = _window(x, pos, span * spb, trim)
            amps = [tone_amplitude(segment, f, rate) for _, f in words]
            word = words[int(np.argmax(amps))][0]
            body += [int(c) for c in word]
            pos += len(word) * spb
            if pos > x.size:
                break

    else:
        subs = mod.ofdm_subcarriers_hz
        amps = np.array([[tone_amplitude(_window(x, p, spb, trim), f, rate) for f in subs] for p in pre])
        on = amps[ones].mean(axis=0)
        off = amps[zeros].mean(axis=0)
        mid = (on + off) / 2.0
        head = [int(np.mean(row > mid) > 0.5) for row in amps]
        for i in range(mod.body_bits // k):
            segment = _window(x, pos + i * k * spb, k * spb, trim)
            values = np.array([tone_amplitude(segment, f, rate) for f in subs])
            body += [int(v) for v in values > mid]

    return head + body[:BODY_BITS]


def locate_frames(trace, cfg: DemodConfig) -> List[FrameDecision]:
    """
    Recherche et décode les trames successives d'une trace.

    Args:
        trace (FieldTrace): trace de champ mesurée ou simulée
        cfg (DemodConfig): paramètres du récepteur

    Returns:
        list: une FrameDecision par trame trouvée, dans l'ordre temporel
    """
    mod = cfg.modulation
    rate = float(trace.rate_hz)
    x = np.asarray(trace.samples, dtype=float)
    if rate < 2.0 * mod.max_frequency_hz:
        raise RateMismatch(f"{rate} Hz insuffisant pour un ton à {mod.max_frequency_hz} Hz")
    spb = rate * mod.bit_ms / 1000.0
    if spb < 2.0:
        raise RateMismatch(f"{spb:.2f} échantillon(s) par bit, au moins 2 requis")
    frame_len = int(math.ceil((len(PREAMBLE) + mod.body_bits) * spb))
    if x.size < frame_len:
        raise RateMismatch(f"trace de {x.size} échantillons, une trame en demande {frame_len}")

    track = _sync_track(x, rate, spb, mod)
    template = _preamble_template(spb)
    scores = normalized_xcorr(track, template)
    energy = sliding_variance(track, template.size)
    if energy.size and energy.max() > 0:
        # fenêtres de bruit seul
        scores = np.where(energy >= cfg.min_energy_frac * energy.max(), scores, 0.0)
    frames: List[FrameDecision] = []
    start = 0
    last_start = x.size - frame_len
    while cfg.max_frames is None or len(frames) < cfg.max_frames:
        if start > last_start:
            break
        candidates = scores[start:last_start + 1]
        best = float(candidates.max())
        if best < cfg.sync_threshold:
            if not frames:
                raise NoPreamble(f"meilleur score de corrélation {best:.3f} < {cfg.sync_threshold}")
            break
        offset = start + _pick_offset(candidates, best, spb, cfg)
        bits = BitStream(tuple(_decode_frame(x, rate, offset, spb, cfg)))
        frames.append(FrameDecision(offset=offset, score=float(scores[offset]), bits=bits))
        logger.debug(f"Trame détectée à l'échantillon {offset} (score {scores[offset]:.3f})")
        start = offset + frame_len
    logger.info(f"{len(frames)} trame(s) démodulée(s) en {mod.scheme.value}")
    return frames


def demodulate(trace, cfg: DemodConfig) -> BitStream:
    """
    Démodule une trace de champ en flux de bits (37 bits par trame trouvée).

    Raises:
        NoPreamble: aucun préambule au-dessus du seuil
        RateMismatch: trace trop courte ou sous-échantillonnée
    """
    bits = BitStream()
    for decision in locate_frames(trace, cfg):
        bits = bits + decision.bits
    return bits

