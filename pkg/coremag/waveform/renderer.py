#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Rendu d'un ordonnancement de charge en champ magnétique émis à r_ref.

Le champ suit le nombre instantané de cœurs occupés (enveloppe carrée),
atténué tant que le processeur n'a pas quitté son état basse consommation.
"""

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from coremag.channel.trace_io import FieldTrace
from coremag.config import Config
from coremag.errors import ConfigError, Undersampled, UnknownCoreCount
from coremag.modem.schemes import CoreSchedule
from coremag.waveform.profiles import MachineProfile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JitterSpec:
    """
    Perturbations dues aux charges concurrentes.

    Args:
        timing_jitter_ms (float): écart-type du déplacement des fronts
        amplitude_jitter_frac (float): bruit relatif sur l'amplitude
    """
    timing_jitter_ms: float = 0.0
    amplitude_jitter_frac: float = 0.0

    def __post_init__(self):
        if self.timing_jitter_ms < 0 or self.amplitude_jitter_frac < 0:
            raise ConfigError("les paramètres de gigue doivent être positifs ou nuls")


# Calés sur la dégradation du SNR mesurée sous charge (PC-1, 20 cm, 8 threads,
# rendu à 1 kHz) : 36.47, 36.00, 35.31, 32.04 et 33.97 dB.
WORKLOADS: Dict[str, JitterSpec] = {
    'idle': JitterSpec(0.1, 0.0),
    'word': JitterSpec(0.2, 0.028),
    'video': JitterSpec(0.3, 0.047),
    'backup': JitterSpec(1.0, 0.112),
    'compute': JitterSpec(1.5, 0.074),
}


@dataclass(frozen=True)
class PowerStateSpec:
    """
    Montée en fréquence du processeur.

    Une rafale d'activité n'atteint le plein champ qu'après `onset_ms` ms
    d'occupation continue ; avant, le champ vaut `floor` fois le niveau
    nominal. L'état haut persiste pendant les pauses plus courtes que
    `release_ms`. `floor=1` désactive le modèle.
    """
    onset_ms: float = Config.POWER_ONSET_MS
    release_ms: float = Config.POWER_RELEASE_MS
    floor: float = Config.POWER_FLOOR

    def __post_init__(self):
        if self.onset_ms < 0 or self.release_ms < 0:
            raise ConfigError("les délais de montée et de retombée doivent être positifs ou nuls")
        if not 0 < self.floor <= 1:
            raise ConfigError(f"plancher hors de ]0, 1] : {self.floor}")


def workload_jitter(name: str) -> JitterSpec:
    try:
        return WORKLOADS[name.lower()]
    except KeyError:
        raise ConfigError(f"charge inconnue : {name} (disponibles : {', '.join(WORKLOADS)})")


def _busy_counts(schedule: CoreSchedule, t_ms: np.ndarray, jitter_ms: float,
                 rng: np.random.Generator) -> np.ndarray:
    counts = np.zeros(t_ms.size, dtype=int)
    for segments in schedule.cores:
        if not any(busy for busy, _ in segments):
            continue
        states = np.array([busy for busy, _ in segments], dtype=bool)
        edges = np.concatenate([[0.0], np.cumsum([d for _, d in segments])]).astype(float)
        if jitter_ms > 0 and edges.size > 2:
            edges[1:-1] += rng.normal(0.0, jitter_ms, edges.size - 2)
            edges = np.clip(np.maximum.accumulate(edges), 0.0, schedule.total_duration_ms)
        index = np.clip(np.searchsorted(edges, t_ms, side='right') - 1, 0, states.size - 1)
        counts += states[index]
    return counts


def _power_gain(active: np.ndarray, sample_rate_hz: float, power: PowerStateSpec) -> np.ndarray:
    gain = np.ones(active.size)
    if power.floor >= 1.0 or not active.any():
        return gain
    onset = int(round(power.onset_ms * sample_rate_hz / 1000.0))
    release = int(round(power.release_ms * sample_rate_hz / 1000.0))
    changes = np.flatnonzero(np.diff(active.astype(np.int8))) + 1
    starts = np.concatenate([[0], changes])
    ends = np.concatenate([changes, [active.size]])
    boosted = False
    for s, e in zip(starts, ends):
        if active[s]:
            if not boosted:
                gain[s:min(e, s + onset)] = power.floor
                boosted = e - s > onset
        elif e - s >= release:
            boosted = False
    return gain


def render(schedule: CoreSchedule, profile: MachineProfile, sample_rate_hz: float = Config.RENDER_RATE_HZ,
           jitter: JitterSpec = JitterSpec(), seed: int = Config.SEED,
           power: PowerStateSpec = PowerStateSpec()) -> FieldTrace:
    """
    Calcule le champ émis (à r_ref) pour un ordonnancement donné.

    Args:
        schedule (CoreSchedule): ordonnancement par cœur
        profile (MachineProfile): profil de la machine émettrice
        sample_rate_hz (float): fréquence de rendu
        jitter (JitterSpec): gigue temporelle et bruit d'amplitude
        seed (int): graine du générateur aléatoire
        power (PowerStateSpec): modèle de montée en fréquence

    Returns:
        FieldTrace: champ en mT
    """
    if sample_rate_hz < 2.0 * schedule.max_toggle_hz:
        raise Undersampled(f"rendu à {sample_rate_hz} Hz pour une bascule à {schedule.max_toggle_hz} Hz")
    peak = int(schedule.busy_counts().max()) if schedule.total_duration_ms else 0
    if peak > profile.max_cores:
        raise UnknownCoreCount(f"{peak} cœurs simultanés, le profil {profile.name} en décrit {profile.max_cores}")

    rng = np.random.default_rng(seed)
    n = int(np.floor(schedule.total_duration_ms / 1000.0 * sample_rate_hz))
    t_ms = np.arange(n) * 1000.0 / sample_rate_hz
    counts = _busy_counts(schedule, t_ms, jitter.timing_jitter_ms, rng)
    samples = profile.amp_table()[np.minimum(counts, profile.max_cores)]
    samples = samples * _power_gain(counts > 0, sample_rate_hz, power)
    if jitter.amplitude_jitter_frac > 0:
        samples = samples * (1.0 + jitter.amplitude_jitter_frac * rng.standard_normal(n))

    logger.debug(f"Rendu de {n} échantillons à {sample_rate_hz} Hz (profil {profile.name})")
    return FieldTrace(samples, sample_rate_hz, {'profile': profile.name, 'seed': seed,
                                                'render_rate_hz': sample_rate_hz})
