#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Traces de champ magnétique et format de fichier magtrace v1.

    #magtrace v1
    #rate_hz 154.0
    #units mT
    #meta cle=valeur      (optionnel, répétable)
    0.51
    ...
"""

import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from coremag.errors import ConfigError, TraceFormatError

logger = logging.getLogger(__name__)

MAGIC = '#magtrace v1'


@dataclass(frozen=True, eq=False)
class FieldTrace:
    """
    Série uniformément échantillonnée de champ magnétique (mT).

    Args:
        samples (np.ndarray): valeurs du champ
        rate_hz (float): fréquence d'échantillonnage
        origin (dict): métadonnées (profil, canal, graine...)
    """
    samples: np.ndarray
    rate_hz: float
    origin: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ConfigError("une trace est une série à une dimension")
        if not np.all(np.isfinite(samples)):
            raise ConfigError("une trace ne contient que des valeurs finies")
        if not 0 < self.rate_hz < np.inf:
            raise ConfigError(f"fréquence d'échantillonnage invalide : {self.rate_hz}")
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)
        object.__setattr__(self, 'rate_hz', float(self.rate_hz))
        object.__setattr__(self, 'origin', {str(k): str(v) for k, v in self.origin.items()})

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.rate_hz

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.rate_hz

    def with_samples(self, samples: np.ndarray, rate_hz: float = None, **origin) -> 'FieldTrace':
        merged = dict(self.origin)
        merged.update(origin)
        return FieldTrace(samples, self.rate_hz if rate_hz is None else rate_hz, merged)


def write_trace(trace: FieldTrace, path: str) -> str:
    """Écrit une trace au format magtrace v1 (représentation décimale la plus courte)."""
    lines = [MAGIC, f"#rate_hz {trace.rate_hz!r}", '#units mT']
    for key, value in sorted(trace.origin.items()):
        if '\n' in key or '\n' in value or '=' in key:
            raise ConfigError(f"métadonnée invalide : {key!r}")
        lines.append(f"#meta {key}={value}")
    lines.extend(repr(float(v)) for v in trace.samples)
    with open(path, 'w', encoding='ascii', newline='\n') as handle:
        handle.write('\n'.join(lines) + '\n')
    logger.info(f"Trace écrite : {path} ({len(trace)} échantillons à {trace.rate_hz} Hz)")
    return path


def read_trace(path: str) -> FieldTrace:
    """
    Lit un fichier magtrace v1.

    Raises:
        TraceFormatError: en-tête absent ou invalide, échantillon non numérique ou non fini
    """
    try:
        with open(path, 'r', encoding='ascii', newline='') as handle:
            lines = handle.read().split('\n')
    except UnicodeDecodeError as e:
        raise TraceFormatError(f"{path} : fichier non ASCII ({str(e)})")

    if lines and lines[-1] == '':
        lines.pop()
    if len(lines) < 3 or lines[0].rstrip('\r') != MAGIC:
        raise TraceFormatError(f"{path} : en-tête magtrace v1 absent")

    rate_line = lines[1].rstrip('\r').split()
    if len(rate_line) != 2 or rate_line[0] != '#rate_hz':
        raise TraceFormatError(f"{path} : ligne #rate_hz attendue")
    try:
        rate = float(rate_line[1])
    except ValueError:
        raise TraceFormatError(f"{path} : fréquence illisible {rate_line[1]!r}")
    if not 0 < rate < np.inf:
        raise TraceFormatError(f"{path} : fréquence invalide {rate}")
    if lines[2].rstrip('\r') != '#units mT':
        raise TraceFormatError(f"{path} : unité mT attendue")

    origin = {}
    index = 3
    while index < len(lines) and lines[index].startswith('#meta '):
        key, sep, value = lines[index][len('#meta '):].rstrip('\r').partition('=')
        if not sep or not key:
            raise TraceFormatError(f"{path} : métadonnée invalide ligne {index + 1}")
        origin[key] = value
        index += 1

    try:
        samples = np.array([float(v) for v in lines[index:]], dtype=float)
    except ValueError as e:
        raise TraceFormatError(f"{path} : échantillon invalide ({str(e)})")
    bad = np.flatnonzero(~np.isfinite(samples))
    if bad.size:
        raise TraceFormatError(f"{path} : échantillon non fini ligne {index + int(bad[0]) + 1}")
    logger.debug(f"Trace lue : {path} ({samples.size} échantillons)")
    return FieldTrace(samples, rate, origin)
