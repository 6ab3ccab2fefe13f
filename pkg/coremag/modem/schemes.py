#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Modulation : conversion d'un flux de bits en ordonnancement de charge par cœur.

Chaque cœur alterne entre une charge continue (busy) et le repos (idle) à la
fréquence du symbole courant. Les ordonnancements sont exprimés en
millisecondes entières.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from coremag.codec.framing import FRAME_BITS, PREAMBLE, BitFrame, BitStream
from coremag.config import Config
from coremag.errors import ConfigError, ConfigMismatch, UnachievableTiming

logger = logging.getLogger(__name__)

BODY_BITS = FRAME_BITS - len(PREAMBLE)
GRANULARITY_MS = Config.SCHEDULE_GRANULARITY_MS


class Scheme(str, Enum):
    OOK = 'ook'
    ASK = 'ask'
    FSK = 'fsk'
    OFDM = 'ofdm'


def _as_codebook(tones, codebook) -> Tuple[Tuple[str, float], ...]:
    if codebook is None:
        tones = tuple(float(f) for f in tones)
        k = int(math.log2(len(tones))) if len(tones) >= 2 else 0
        if len(tones) < 2 or 2 ** k != len(tones):
            raise ConfigError("le nombre de tons FSK doit être une puissance de deux")
        return tuple((format(i, f'0{k}b'), f) for i, f in enumerate(tones))
    items = codebook.items() if isinstance(codebook, dict) else codebook
    return tuple((str(word), float(freq)) for word, freq in items)


@dataclass(frozen=True)
class ModulationConfig:
    """
    Paramètres de modulation.

    `fsk_codebook` associe des mots binaires à des tons ; sans codebook, les
    tons de `fsk_tones_hz` codent chacun log2(n) bits dans l'ordre naturel.
    Sans `carrier_hz`, la porteuse OOK vaut max(CARRIER_HZ, bit_rate) : un bit
    contient toujours au moins un cycle complet.
    """
    scheme: Scheme = Scheme.OOK
    carrier_hz: Optional[float] = None
    bit_rate: float = 1.0
    total_cores: int = 4
    active_cores: Optional[int] = None
    ask_levels: Tuple[int, ...] = Config.ASK_LEVELS
    fsk_tones_hz: Tuple[float, ...] = Config.FSK_TONES_HZ
    fsk_codebook: Optional[Union[Dict[str, float], Tuple[Tuple[str, float], ...]]] = None
    ofdm_subcarriers_hz: Tuple[float, ...] = Config.OFDM_SUBCARRIERS_HZ
    n_cycles0: Optional[float] = None
    n_cycles1: Optional[float] = None
    guard_ms: int = Config.GUARD_MS

    def __post_init__(self):
        object.__setattr__(self, 'scheme', Scheme(self.scheme))
        object.__setattr__(self, 'ask_levels', tuple(int(n) for n in self.ask_levels))
        object.__setattr__(self, 'fsk_tones_hz', tuple(float(f) for f in self.fsk_tones_hz))
        object.__setattr__(self, 'ofdm_subcarriers_hz', tuple(float(f) for f in self.ofdm_subcarriers_hz))
        object.__setattr__(self, 'fsk_codebook', _as_codebook(self.fsk_tones_hz, self.fsk_codebook))
        if self.active_cores is None:
            object.__setattr__(self, 'active_cores', self.total_cores)
        self._validate()

    def _validate(self):
        if self.bit_rate <= 0:
            raise ConfigError(f"débit invalide : {self.bit_rate} bit/s")
        if self.total_cores < 1:
            raise ConfigError("au moins un cœur est nécessaire")
        if not 1 <= self.active_cores <= self.total_cores:
            raise ConfigError(f"cœurs actifs hors bornes : {self.active_cores}/{self.total_cores}")
        if self.guard_ms < 0:
            raise ConfigError("la garde doit être positive ou nulle")

        for freq in self.frequencies:
            if not 0 < freq <= Config.MAX_CARRIER_HZ:
                raise ConfigError(f"fréquence {freq} Hz hors de ]0, {Config.MAX_CARRIER_HZ}]")
        if self.scheme == Scheme.OOK and self.n_cycles1 is None and self.carrier < self.bit_rate:
            raise ConfigError(f"un bit OOK doit contenir au moins un cycle de porteuse "
                              f"({self.carrier} Hz pour {self.bit_rate} bit/s)")

        if self.scheme == Scheme.ASK:
            n = len(self.ask_levels)
            if n < 2 or n & (n - 1):
                raise ConfigError("le nombre de niveaux ASK doit être une puissance de deux")
            if min(self.ask_levels) < 0 or max(self.ask_levels) > self.total_cores:
                raise ConfigError(f"niveaux ASK {self.ask_levels} incompatibles avec {self.total_cores} cœurs")
        elif self.scheme == Scheme.FSK:
            words = [w for w, _ in self.fsk_codebook]
            tones = [f for _, f in self.fsk_codebook]
            if len(set(tones)) != len(tones):
                raise ConfigError("les tons FSK doivent être distincts")
            if any(not w or set(w) - {'0', '1'} for w in words) or len(set(words)) != len(words):
                raise ConfigError("codebook FSK invalide")
            if not self.uniform_codebook and not {'0', '1'} <= set(words):
                raise ConfigError("codebook FSK non uniforme sans mots d'un bit")
            if self.preamble_tones is None:
                raise ConfigError("le codebook FSK ne permet pas de coder le préambule")
        elif self.scheme == Scheme.OFDM:
            subs = self.ofdm_subcarriers_hz
            if not subs or len(subs) > self.total_cores:
                raise ConfigError("le nombre de sous-porteuses ne peut dépasser le nombre de cœurs")
            if len(set(subs)) != len(subs):
                raise ConfigError("les sous-porteuses doivent être distinctes")

        for n in (self.n_cycles0, self.n_cycles1):
            if n is not None and n <= 0:
                raise ConfigError("nCycles doit être strictement positif")

    @property
    def frequencies(self) -> Tuple[float, ...]:
        if self.scheme == Scheme.FSK:
            return tuple(f for _, f in self.fsk_codebook)
        if self.scheme == Scheme.OFDM:
            return self.ofdm_subcarriers_hz
        return (self.carrier,)

    @property
    def carrier(self) -> float:
        if self.carrier_hz is not None:
            return float(self.carrier_hz)
        if self.scheme == Scheme.OOK:
            return max(Config.CARRIER_HZ, float(self.bit_rate))
        return Config.CARRIER_HZ

    @property
    def max_frequency_hz(self) -> float:
        return max(self.frequencies)

    @property
    def codebook(self) -> Dict[str, float]:
        return dict(self.fsk_codebook)

    @property
    def uniform_codebook(self) -> bool:
        return len({len(w) for w, _ in self.fsk_codebook}) == 1

    @property
    def preamble_tones(self) -> Optional[Tuple[float, float]]:
        """Tons (bit 0, bit 1) utilisés pour le préambule FSK."""
        book = self.codebook
        if '0' in book and '1' in book:
            return book['0'], book['1']
        k = len(self.fsk_codebook[0][0])
        zero, one = '0' * k, '1' * k
        if self.uniform_codebook and zero in book and one in book:
            return book[zero], book[one]
        return None

    @property
    def bits_per_symbol(self) -> int:
        if self.scheme == Scheme.ASK:
            return int(math.log2(len(self.ask_levels)))
        if self.scheme == Scheme.FSK:
            return max(len(w) for w, _ in self.fsk_codebook)
        if self.scheme == Scheme.OFDM:
            return len(self.ofdm_subcarriers_hz)
        return 1

    @property
    def bit_ms(self) -> float:
        return 1000.0 / self.bit_rate

    @property
    def body_bits(self) -> int:
        """Bits de corps (charge utile + parité) après bourrage au symbole."""
        if self.scheme == Scheme.FSK and not self.uniform_codebook:
            return BODY_BITS
        k = self.bits_per_symbol
        return int(math.ceil(BODY_BITS / k)) * k


@dataclass(frozen=True)
class CoreSchedule:
    """
    Ordonnancement par cœur : suites de segments (busy, durée en ms).

    `slot_edges_ms` donne les bornes des créneaux de symboles, `max_toggle_hz`
    la plus haute fréquence de basculement utilisée.
    """
    cores: Tuple[Tuple[Tuple[bool, int], ...], ...]
    total_duration_ms: int
    max_toggle_hz: float = 0.0
    slot_edges_ms: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        for segments in self.cores:
            if any(d <= 0 for _, d in segments):
                raise ConfigError("durée de segment nulle ou négative")
            if sum(d for _, d in segments) != self.total_duration_ms:
                raise ConfigError("durées par cœur incohérentes avec la durée totale")

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, max_toggle_hz: float = 0.0,
                    slot_edges_ms: Sequence[int] = ()) -> 'CoreSchedule':
        """Construit l'ordonnancement à partir d'une matrice booléenne cœurs × ms."""
        matrix = np.asarray(matrix, dtype=bool)
        total = int(matrix.shape[1])
        cores = tuple(_run_lengths(row) for row in matrix)
        return cls(cores=cores, total_duration_ms=total, max_toggle_hz=float(max_toggle_hz),
                   slot_edges_ms=tuple(int(e) for e in slot_edges_ms))

    @property
    def n_cores(self) -> int:
        return len(self.cores)

    def to_matrix(self) -> np.ndarray:
        matrix = np.zeros((self.n_cores, self.total_duration_ms), dtype=bool)
        for i, segments in enumerate(self.cores):
            pos = 0
            for busy, duration in segments:
                if busy:
                    matrix[i, pos:pos + duration] = True
                pos += duration
        return matrix

    def busy_counts(self) -> np.ndarray:
        """Nombre de cœurs occupés pour chaque milliseconde."""
        return self.to_matrix().sum(axis=0)

    def busy_ms(self) -> List[int]:
        return [sum(d for busy, d in segments if busy) for segments in self.cores]


def _run_lengths(row: np.ndarray) -> Tuple[Tuple[bool, int], ...]:
    if row.size == 0:
        return ()
    changes = np.flatnonzero(np.diff(row.astype(np.int8))) + 1
    starts = np.concatenate([[0], changes])
    ends = np.concatenate([changes, [row.size]])
    return tuple((bool(row[s]), int(e - s)) for s, e in zip(starts, ends))


def toggle_pattern(length_ms: int, freq_hz: float) -> np.ndarray:
    """Carré busy/idle démarrant par une demi-période occupée."""
    t = np.arange(length_ms) + 0.5
    return np.mod(t * freq_hz / 1000.0, 1.0) < 0.5


@dataclass
class _Slot:
    duration_ms: float
    freqs: Tuple[float, ...]


def _check_timing(cfg: ModulationConfig):
    for freq in cfg.frequencies:
        half_cycle = 1000.0 / (2.0 * freq)
        if round(half_cycle) < GRANULARITY_MS:
            raise UnachievableTiming(f"demi-cycle de {half_cycle:.3f} ms à {freq} Hz")


def _idle(cfg: ModulationConfig) -> Tuple[float, ...]:
    return (0.0,) * cfg.total_cores


def _cores_at(cfg: ModulationConfig, n: int, freq: float) -> Tuple[float, ...]:
    return tuple(freq if i < n else 0.0 for i in range(cfg.total_cores))


def _parse_codewords(bits: Sequence[int], cfg: ModulationConfig) -> List[str]:
    text = ''.join(str(b) for b in bits)
    words = sorted(cfg.codebook, key=len, reverse=True)
    out, pos = [], 0
    while pos < len(text):
        match = next((w for w in words if text.startswith(w, pos)), None)
        if match is None:
            raise ConfigMismatch(f"aucun mot du codebook ne correspond à la position {pos}")
        out.append(match)
        pos += len(match)
    return out


def _symbol_slots(bits: Sequence[int], cfg: ModulationConfig) -> List[_Slot]:
    bits = list(bits)
    if not bits:
        raise ConfigError("flux de bits vide")
    k = cfg.bits_per_symbol
    uniform = cfg.scheme != Scheme.FSK or cfg.uniform_codebook
    if uniform and len(bits) % k:
        raise ConfigMismatch(f"{len(bits)} bits ne forment pas un nombre entier de symboles de {k} bits")

    slots = []
    if cfg.scheme == Scheme.OOK:
        for b in bits:
            n_cycles = cfg.n_cycles1 if b else cfg.n_cycles0
            duration = n_cycles * 1000.0 / cfg.carrier if n_cycles else cfg.bit_ms
            freqs = _cores_at(cfg, cfg.active_cores, cfg.carrier) if b else _idle(cfg)
            slots.append(_Slot(duration, freqs))
    elif cfg.scheme == Scheme.ASK:
        for i in range(0, len(bits), k):
            value = int(''.join(str(b) for b in bits[i:i + k]), 2)
            slots.append(_Slot(k * cfg.bit_ms, _cores_at(cfg, cfg.ask_levels[value], cfg.carrier)))
    elif cfg.scheme == Scheme.FSK:
        book = cfg.codebook
        for word in _parse_codewords(bits, cfg):
            slots.append(_Slot(len(word) * cfg.bit_ms, _cores_at(cfg, cfg.active_cores, book[word])))
    else:
        subs = cfg.ofdm_subcarriers_hz
        for i in range(0, len(bits), k):
            chunk = bits[i:i + k]
            freqs = tuple(subs[c] if c < len(subs) and chunk[c] else 0.0 for c in range(cfg.total_cores))
            slots.append(_Slot(k * cfg.bit_ms, freqs))
    return slots


def _preamble_slots(cfg: ModulationConfig) -> List[_Slot]:
    slots = []
    for b in PREAMBLE:
        if cfg.scheme == Scheme.OOK:
            freqs = _cores_at(cfg, cfg.active_cores, cfg.carrier) if b else _idle(cfg)
        elif cfg.scheme == Scheme.ASK:
            freqs = _cores_at(cfg, max(cfg.ask_levels), cfg.carrier) if b else _idle(cfg)
        elif cfg.scheme == Scheme.FSK:
            freqs = _cores_at(cfg, cfg.active_cores, cfg.preamble_tones[b])
        else:
            subs = cfg.ofdm_subcarriers_hz
            freqs = tuple(subs[c] if b and c < len(subs) else 0.0 for c in range(cfg.total_cores))
        slots.append(_Slot(cfg.bit_ms, freqs))
    return slots


def _build(slots: Sequence[_Slot], cfg: ModulationConfig) -> CoreSchedule:
    _check_timing(cfg)
    edges = np.rint(np.concatenate([[0.0], np.cumsum([s.duration_ms for s in slots])])).astype(int)
    if np.any(np.diff(edges) < GRANULARITY_MS):
        raise UnachievableTiming("créneau de symbole inférieur à la granularité de 1 ms")
    matrix = np.zeros((cfg.total_cores, int(edges[-1])), dtype=bool)
    max_toggle = 0.0
    for slot, start, end in zip(slots, edges[:-1], edges[1:]):
        for core, freq in enumerate(slot.freqs):
            if freq > 0:
                matrix[core, start:end] = toggle_pattern(end - start, freq)
                max_toggle = max(max_toggle, freq)
    return CoreSchedule.from_matrix(matrix, max_toggle_hz=max_toggle, slot_edges_ms=edges)


def modulate(bits: BitStream, cfg: ModulationConfig) -> CoreSchedule:
    """
    Convertit un flux de bits en ordonnancement de charge.

    Args:
        bits (BitStream): bits à émettre
        cfg (ModulationConfig): schéma et paramètres

    Returns:
        CoreSchedule: une ligne de segments busy/idle par cœur logique
    """
    schedule = _build(_symbol_slots(tuple(bits), cfg), cfg)
    logger.debug(f"Modulation {cfg.scheme.value} : {len(bits)} bits, {schedule.total_duration_ms} ms")
    return schedule


def modulate_frames(frames: Sequence[BitFrame], cfg: ModulationConfig) -> CoreSchedule:
    """
    Module une suite de trames avec préambule de synchronisation et gardes.

    Le préambule est émis bit par bit avec toutes les ressources du schéma ;
    le corps (charge utile + parité) est complété par des zéros jusqu'à un
    nombre entier de symboles. Une garde au repos de `cfg.guard_ms` encadre
    chaque trame.
    """
    if not frames:
        raise ConfigError("aucune trame à moduler")
    guard = [_Slot(cfg.guard_ms, _idle(cfg))] if cfg.guard_ms else []
    slots: List[_Slot] = list(guard)
    for f in frames:
        bits = f.to_bits().bits if isinstance(f, BitFrame) else tuple(f)
        body = list(bits[len(PREAMBLE):])
        body += [0] * (cfg.body_bits - len(body))
        slots += _preamble_slots(cfg)
        slots += _symbol_slots(body, cfg)
        slots += guard
    schedule = _build(slots, cfg)
    logger.info(f"{len(frames)} trame(s) modulée(s) en {cfg.scheme.value}, "
                f"durée {schedule.total_duration_ms / 1000.0:.2f} s")
    return schedule


def symbol_duration_ms(cfg: ModulationConfig) -> float:
    return 1000.0 * cfg.bits_per_symbol / cfg.bit_rate


def frame_duration_ms(cfg: ModulationConfig) -> float:
    """Durée d'une trame sans les gardes."""
    return (len(PREAMBLE) + cfg.body_bits) * cfg.bit_ms
