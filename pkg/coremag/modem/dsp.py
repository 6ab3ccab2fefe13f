#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Briques de traitement du signal utilisées par le récepteur.
"""

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import correlate, get_window, lfilter


def goertzel(samples: np.ndarray, freq_hz: float, rate_hz: float) -> complex:
    """
    Algorithme de Goertzel pour une seule fréquence (non quantifiée en bins).

    Returns:
        complex: coefficient de Fourier de `samples` à `freq_hz`
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        return 0j
    w = 2.0 * np.pi * freq_hz / rate_hz
    state = lfilter([1.0], [1.0, -2.0 * np.cos(w), 1.0], x)
    s1 = state[-1]
    s2 = state[-2] if x.size > 1 else 0.0
    return complex(s1 - np.exp(-1j * w) * s2)


def tone_amplitude(samples: np.ndarray, freq_hz: float, rate_hz: float) -> float:
    """Amplitude crête d'un ton, fenêtre de Hann après retrait de la moyenne."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        return 0.0
    window = get_window('hann', x.size, fftbins=False)
    if window.sum() <= 0:
        return 0.0
    x = (x - x.mean()) * window
    return 2.0 * abs(goertzel(x, freq_hz, rate_hz)) / window.sum()


def moving_average(samples: np.ndarray, width: int) -> np.ndarray:
    """Moyenne glissante centrée."""
    width = max(1, int(width))
    return uniform_filter1d(np.asarray(samples, dtype=float), size=width, mode='nearest')


def carrier_baseline(samples: np.ndarray, freq_hz: float, rate_hz: float,
                     harmonics=(1, 3)) -> float:
    """
    Composante continue d'une fenêtre portant une porteuse carrée.

    Moindres carrés sur 1, cos et sin de chaque harmonique sous Nyquist ; les
    fenêtres de moins d'une période se rabattent sur la moyenne.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        return 0.0
    if x.size < rate_hz / freq_hz:
        return float(x.mean())
    n = np.arange(x.size)
    columns = [np.ones(x.size)]
    for h in harmonics:
        if h * freq_hz < rate_hz / 2.0:
            w = 2.0 * np.pi * h * freq_hz / rate_hz
            columns += [np.cos(w * n), np.sin(w * n)]
    design = np.column_stack(columns)
    if design.shape[1] >= x.size:
        return float(x.mean())
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    return float(coef[0])


def sliding_tone_magnitude(samples: np.ndarray, freq_hz: float, rate_hz: float,
                           width: int) -> np.ndarray:
    """
    Amplitude d'un ton sur une fenêtre glissante centrée de `width` échantillons.

    Calcul par somme cumulée de x·exp(-jωn) ; la moyenne locale est retirée
    avant la démodulation complexe.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    width = int(min(max(2, width), n))
    x = x - moving_average(x, width)
    phasor = np.exp(-2j * np.pi * freq_hz / rate_hz * np.arange(n))
    cums = np.concatenate([[0j], np.cumsum(x * phasor)])
    starts = np.clip(np.arange(n) - width // 2, 0, n - width)
    return 2.0 * np.abs(cums[starts + width] - cums[starts]) / width


def sliding_variance(signal: np.ndarray, length: int) -> np.ndarray:
    """Variance de chaque fenêtre de `length` échantillons (décalages 'valid')."""
    s = np.asarray(signal, dtype=float)
    if length <= 0 or s.size < length:
        return np.zeros(0)
    s = s - s.mean()
    sums = np.concatenate([[0.0], np.cumsum(s)])
    squares = np.concatenate([[0.0], np.cumsum(s * s)])
    mean = (sums[length:] - sums[:-length]) / length
    return np.maximum((squares[length:] - squares[:-length]) / length - mean * mean, 0.0)


def normalized_xcorr(signal: np.ndarray, template: np.ndarray) -> np.ndarray:
    """
    Corrélation croisée normalisée (coefficient de Pearson) pour chaque décalage.

    Returns:
        np.ndarray: scores dans [-1, 1], de longueur len(signal) - len(template) + 1
    """
    s = np.asarray(signal, dtype=float)
    t = np.asarray(template, dtype=float)
    n = t.size
    if n == 0 or s.size < n:
        return np.zeros(0)
    t = t - t.mean()
    t_norm = np.sqrt(np.sum(t * t))
    if t_norm == 0:
        return np.zeros(s.size - n + 1)

    s = s - s.mean()
    numerator = correlate(s, t, mode='valid')
    spread = n * sliding_variance(s, n)

    scale = np.max(np.abs(s)) if s.size else 0.0
    floor = 1e-12 * n * scale * scale
    denominator = np.sqrt(spread) * t_norm
    scores = np.zeros_like(numerator)
    valid = spread > floor
    scores[valid] = numerator[valid] / denominator[valid]
    return np.clip(scores, -1.0, 1.0)
