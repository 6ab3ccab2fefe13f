#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Canal physique : décroissance en distance, blindage, capteur, bruit et brouillage.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np
from scipy.signal import butter, periodogram, resample_poly, sosfiltfilt

from coremag.channel.trace_io import FieldTrace
from coremag.config import Config
from coremag.errors import ConfigError, TooShort, Undersampled

logger = logging.getLogger(__name__)

MU0 = 4.0e-7 * np.pi


@dataclass(frozen=True)
class ShieldSpec:
    """Enceinte métallique assimilée à une coquille sphérique mince."""
    thickness_mm: float = Config.SHIELD_THICKNESS_MM
    characteristic_radius_m: float = Config.SHIELD_RADIUS_M
    conductivity_S_per_m: float = Config.SHIELD_CONDUCTIVITY_S_PER_M
    relative_permeability: float = Config.SHIELD_PERMEABILITY
    enabled: bool = True

    def __post_init__(self):
        if self.enabled and min(self.thickness_mm, self.characteristic_radius_m,
                                self.conductivity_S_per_m, self.relative_permeability) <= 0:
            raise ConfigError("les grandeurs physiques du blindage doivent être positives")


@dataclass(frozen=True)
class SensorSpec:
    """Magnétomètre (valeurs par défaut du HMR2300)."""
    sample_rate_hz: float = Config.SENSOR_RATE_HZ
    resolution_mT: float = Config.SENSOR_RESOLUTION_MT
    full_scale_mT: float = Config.SENSOR_FULL_SCALE_MT
    adc_bits: int = Config.SENSOR_ADC_BITS
    bandwidth_hz: Optional[float] = Config.SENSOR_BANDWIDTH_HZ

    def __post_init__(self):
        if self.sample_rate_hz <= 0 or self.resolution_mT <= 0 or self.full_scale_mT <= 0:
            raise ConfigError("fréquence, résolution et pleine échelle du capteur doivent être positives")
        if self.bandwidth_hz is not None and self.bandwidth_hz <= 0:
            raise ConfigError("la bande passante du capteur doit être positive")


@dataclass(frozen=True)
class JammerSpec:
    """
    Source de brouillage.

    Un brouilleur continu est une sinusoïde ; un brouilleur `keyed` reproduit
    un processus concurrent qui charge le CPU à `frequency_hz` par créneaux
    aléatoires de `keying_ms`.
    """
    frequency_hz: float
    amplitude_mT: float
    keyed: bool = False
    keying_ms: float = 100.0

    def __post_init__(self):
        if self.frequency_hz < 0 or self.amplitude_mT < 0 or self.keying_ms <= 0:
            raise ConfigError("paramètres de brouilleur invalides")


@dataclass(frozen=True)
class ChannelSpec:
    distance_cm: float
    shield: ShieldSpec = field(default_factory=lambda: ShieldSpec(enabled=False))
    noise_floor_mT: float = Config.NOISE_FLOOR_MT
    mains_hz: Optional[float] = None
    mains_mT: float = 0.0
    jammers: Tuple[JammerSpec, ...] = ()
    sensor: SensorSpec = field(default_factory=SensorSpec)
    seed: int = Config.SEED

    def __post_init__(self):
        if not self.distance_cm > 0:
            raise ConfigError("distance doit être positive")
        if self.noise_floor_mT < 0:
            raise ConfigError("le plancher de bruit doit être positif ou nul")
        object.__setattr__(self, 'jammers', tuple(self.jammers))

    def digest(self) -> str:
        return hashlib.sha1(repr(self).encode('utf-8')).hexdigest()[:12]


def distance_gain(profile, distance_cm: float) -> float:
    """Facteur d'échelle (r_ref / d)^exposant du champ entre r_ref et `distance_cm`."""
    if not distance_cm > 0:
        raise ConfigError("distance doit être positive")
    return float((profile.r_ref_cm / distance_cm) ** profile.decay_exponent)


def measured_gain(profile, distance_cm: float) -> float:
    """
    Facteur d'échelle suivant la courbe mesurée du profil.

    Interpolation log-log entre les points mesurés, loi de puissance au-delà ;
    sans courbe, identique à distance_gain.
    """
    curve = getattr(profile, 'distance_curve', ())
    if len(curve) < 2:
        return distance_gain(profile, distance_cm)
    if not distance_cm > 0:
        raise ConfigError("distance doit être positive")

    distances = np.array([d for d, _ in curve])
    gains = np.array([g for _, g in curve])
    if distance_cm < distances[0]:
        return float(gains[0] * (distances[0] / distance_cm) ** profile.decay_exponent)
    if distance_cm > distances[-1]:
        return float(gains[-1] * (distances[-1] / distance_cm) ** profile.decay_exponent)
    return float(np.exp(np.interp(np.log(distance_cm), np.log(distances), np.log(gains))))


def shield_attenuation_db(shield: ShieldSpec, freq_hz):
    """Atténuation (dB) d'une coquille conductrice mince à `freq_hz` (scalaire ou tableau)."""
    freq = np.asarray(freq_hz, dtype=float)
    if np.any(freq < 0):
        raise ConfigError("fréquence négative")
    if not shield.enabled:
        result = np.zeros_like(freq)
    else:
        k = (2.0 * np.pi * freq * MU0 * shield.relative_permeability * shield.conductivity_S_per_m
             * shield.thickness_mm * 1e-3 * shield.characteristic_radius_m / 3.0)
        result = 20.0 * np.log10(np.sqrt(1.0 + k * k))
    return float(result) if result.ndim == 0 else result


def _shielded(x: np.ndarray, rate: float, shield: ShieldSpec) -> np.ndarray:
    spectrum = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.size, d=1.0 / rate)
    spectrum *= 10.0 ** (-shield_attenuation_db(shield, freqs) / 20.0)
    return np.fft.irfft(spectrum, n=x.size)


def _band_limited(x: np.ndarray, rate: float, bandwidth_hz: Optional[float]) -> np.ndarray:
    if bandwidth_hz is None or bandwidth_hz >= rate / 2.0:
        return x
    sos = butter(10, bandwidth_hz, btype='low', fs=rate, output='sos')
    if x.size <= 3 * (2 * len(sos) + 1):
        return x
    return sosfiltfilt(sos, x)


def _jammer_wave(jammer: JammerSpec, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if not jammer.keyed:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        return jammer.amplitude_mT * np.sin(2.0 * np.pi * jammer.frequency_hz * t + phase)
    slots = np.floor(t * 1000.0 / jammer.keying_ms).astype(int)
    gate = rng.random(slots.max() + 1 if slots.size else 0) < 0.5
    carrier = np.mod(t * jammer.frequency_hz, 1.0) < 0.5
    return jammer.amplitude_mT * (gate[slots] & carrier)


def quantize(samples: np.ndarray, sensor: SensorSpec) -> np.ndarray:
    """Arrondi au multiple de résolution le plus proche, saturé à la pleine échelle."""
    steps = np.floor(sensor.full_scale_mT / sensor.resolution_mT)
    return np.clip(np.round(samples / sensor.resolution_mT), -steps, steps) * sensor.resolution_mT


def apply(trace: FieldTrace, profile, spec: ChannelSpec) -> FieldTrace:
    """
    Transforme le champ émis en mesure du capteur.

    Le champ est atténué (distance puis blindage), limité à la bande du
    capteur, rééchantillonné ; brouilleurs, secteur et bruit s'ajoutent sur la
    grille du capteur avant quantification.

    Args:
        trace (FieldTrace): champ émis à r_ref
        profile (MachineProfile): profil de l'émetteur
        spec (ChannelSpec): description du canal

    Returns:
        FieldTrace: trace au rythme du capteur, en mT
    """
    sensor = spec.sensor
    if trace.rate_hz < 2.0 * sensor.sample_rate_hz:
        raise Undersampled(f"trace à {trace.rate_hz} Hz, au moins {2 * sensor.sample_rate_hz} Hz requis")

    x = np.asarray(trace.samples, dtype=float) * measured_gain(profile, spec.distance_cm)
    if spec.shield.enabled and x.size:
        x = _shielded(x, trace.rate_hz, spec.shield)
    x = _band_limited(x, trace.rate_hz, sensor.bandwidth_hz)

    ratio = Fraction(sensor.sample_rate_hz / trace.rate_hz).limit_denominator(1000)
    y = resample_poly(x, ratio.numerator, ratio.denominator) if x.size else x

    rng = np.random.default_rng(spec.seed)
    t = np.arange(y.size) / sensor.sample_rate_hz
    for jammer in spec.jammers:
        y = y + _jammer_wave(jammer, t, rng)
    if spec.mains_hz and spec.mains_mT:
        y = y + spec.mains_mT * np.sin(2.0 * np.pi * spec.mains_hz * t)
    if spec.noise_floor_mT > 0:
        y = y + rng.normal(0.0, spec.noise_floor_mT, y.size)

    logger.debug(f"Canal appliqué : {spec.distance_cm} cm, {y.size} échantillons capteur")
    return trace.with_samples(quantize(y, sensor), sensor.sample_rate_hz,
                              distance_cm=spec.distance_cm, channel=spec.digest(), channel_seed=spec.seed)


def snr_db(trace: FieldTrace, signal_band_hz: Tuple[float, float] = (0.0, Config.SENSOR_BANDWIDTH_HZ)) -> float:
    """
    Rapport signal sur bruit estimé sur le périodogramme.

    La densité de bruit est la moyenne hors bande ; le résultat est
    10·log10(P_bande / (N0 · largeur_bande)), plafonné à SNR_CAP_DB.
    """
    rate = trace.rate_hz
    if trace.duration_s < 2.0:
        raise TooShort(f"trace de {trace.duration_s:.2f} s, au moins 2 s requises")
    low, high = signal_band_hz
    if not 0 <= low < high:
        raise ConfigError(f"bande de signal invalide : {signal_band_hz}")

    freqs, power = periodogram(trace.samples, fs=rate, window='hann', detrend='constant')
    df = freqs[1] - freqs[0]
    usable = freqs > 2.0 * df
    inside = usable & (freqs >= low) & (freqs <= high)
    outside = usable & ~inside
    if not inside.any() or not outside.any():
        raise ConfigError("bande de signal sans complément pour estimer le bruit")

    in_band = float(np.sum(power[inside]) * df)
    noise_density = float(np.mean(power[outside]))
    if noise_density <= 0 or in_band <= 0:
        return Config.SNR_CAP_DB
    ratio = in_band / (noise_density * np.count_nonzero(inside) * df)
    return float(min(10.0 * np.log10(ratio), Config.SNR_CAP_DB))
