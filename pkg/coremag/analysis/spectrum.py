#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Capacité de Shannon et spectrogrammes.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.signal import spectrogram as stft_magnitude

from coremag.channel.trace_io import FieldTrace
from coremag.errors import ConfigError, TooShort

logger = logging.getLogger(__name__)


def shannon_capacity(bandwidth_hz: float, snr_db: float) -> float:
    """Limite de Shannon-Hartley : B · log2(1 + SNR)."""
    if bandwidth_hz < 0:
        raise ConfigError("la bande passante doit être positive ou nulle")
    return float(bandwidth_hz * np.log2(1.0 + 10.0 ** (snr_db / 10.0)))


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Module de la TFCT : `magnitude[i, j]` pour la fréquence i et la fenêtre j."""
    times: np.ndarray
    freqs: np.ndarray
    magnitude: np.ndarray

    def dominant_freqs(self) -> np.ndarray:
        """Fréquence du maximum pour chaque fenêtre."""
        return self.freqs[np.argmax(self.magnitude, axis=0)]


def spectrogram(trace: FieldTrace, window_s: float = 1.0, overlap_frac: float = 0.5) -> Spectrogram:
    """
    Spectrogramme (fenêtres de Hann, moyenne retirée par fenêtre).

    Args:
        trace (FieldTrace): trace à analyser
        window_s (float): durée d'une fenêtre
        overlap_frac (float): recouvrement entre fenêtres, dans [0, 1[

    Returns:
        Spectrogram: axes temps/fréquence et module
    """
    if not 0 <= overlap_frac < 1:
        raise ConfigError(f"recouvrement {overlap_frac} hors de [0, 1[")
    nperseg = int(round(window_s * trace.rate_hz))
    if nperseg < 2:
        raise ConfigError(f"fenêtre de {window_s} s trop courte à {trace.rate_hz} Hz")
    if nperseg > len(trace):
        raise TooShort(f"fenêtre de {nperseg} échantillons pour une trace de {len(trace)}")
    noverlap = min(int(round(overlap_frac * nperseg)), nperseg - 1)
    freqs, times, magnitude = stft_magnitude(trace.samples, fs=trace.rate_hz, window='hann',
                                             nperseg=nperseg, noverlap=noverlap,
                                             detrend='constant', mode='magnitude')
    logger.debug(f"Spectrogramme : {freqs.size} fréquences x {times.size} fenêtres")
    return Spectrogram(times=times, freqs=freqs, magnitude=magnitude)


def write_spectrogram_csv(result: Spectrogram, path: str) -> str:
    """
    Exporte le spectrogramme : une ligne par fenêtre, colonne `time_s` puis
    une colonne par fréquence (en Hz).
    """
    frame = pd.DataFrame(result.magnitude.T, columns=[f"{f:g}" for f in result.freqs])
    frame.insert(0, 'time_s', result.times)
    frame.to_csv(path, index=False, lineterminator='\n', float_format='%.9f')
    logger.info(f"Spectrogramme écrit : {path}")
    return path
