#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Profils de machines émettrices : amplitude du champ selon le nombre de cœurs
actifs et décroissance avec la distance.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

from coremag.config import Config
from coremag.errors import ConfigError, InsufficientData, ProfileFormatError, UnknownCoreCount

logger = logging.getLogger(__name__)

EXPONENT_RANGE = (1.5, 3.5)
PROFILE_SUFFIX = '.profile'


@dataclass(frozen=True)
class MachineProfile:
    """
    Profil d'une machine.

    Args:
        name (str): identifiant
        amp_per_cores (dict): nombre de cœurs actifs -> champ (mT) à r_ref_cm
        r_ref_cm (float): distance de référence
        decay_exponent (float): exposant de la loi de puissance en distance
        max_cores (int): nombre de cœurs logiques décrits
        calibration_cores (int): nombre de cœurs utilisés pour les mesures en distance
        distance_curve (tuple): couples (cm, gain relatif à r_ref) mesurés
    """
    name: str
    amp_per_cores: Dict[int, float]
    r_ref_cm: float = 20.0
    decay_exponent: float = 3.0
    max_cores: Optional[int] = None
    calibration_cores: Optional[int] = None
    distance_curve: Tuple[Tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        amps = {int(k): float(v) for k, v in dict(self.amp_per_cores).items()}
        if not amps or min(amps) < 1:
            raise ConfigError(f"profil {self.name} : amplitudes par cœur manquantes")
        object.__setattr__(self, 'amp_per_cores', dict(sorted(amps.items())))
        if self.max_cores is None:
            object.__setattr__(self, 'max_cores', max(amps))
        if self.calibration_cores is None:
            object.__setattr__(self, 'calibration_cores', self.max_cores)
        object.__setattr__(self, 'distance_curve',
                           tuple(sorted((float(d), float(g)) for d, g in self.distance_curve)))

        values = [0.0] + list(self.amp_per_cores.values())
        if any(b < a for a, b in zip(values, values[1:])):
            raise ConfigError(f"profil {self.name} : amplitudes non monotones")
        if max(amps) > self.max_cores:
            raise ConfigError(f"profil {self.name} : amplitude définie au-delà de max_cores")
        if not EXPONENT_RANGE[0] <= self.decay_exponent <= EXPONENT_RANGE[1]:
            raise ConfigError(f"profil {self.name} : exposant {self.decay_exponent} hors de {EXPONENT_RANGE}")
        if self.r_ref_cm <= 0:
            raise ConfigError(f"profil {self.name} : r_ref doit être positive")
        if not 1 <= self.calibration_cores <= self.max_cores:
            raise ConfigError(f"profil {self.name} : calibration_cores hors bornes")
        gains = [g for _, g in self.distance_curve]
        if any(g <= 0 for g in gains) or any(b >= a for a, b in zip(gains, gains[1:])):
            raise ConfigError(f"profil {self.name} : courbe de distance non strictement décroissante")

    def amp(self, cores: int) -> float:
        """Champ à r_ref pour `cores` cœurs occupés (interpolation linéaire)."""
        if cores <= 0:
            return 0.0
        if cores > self.max_cores:
            raise UnknownCoreCount(f"{cores} cœurs demandés, le profil {self.name} en décrit {self.max_cores}")
        counts = [0] + list(self.amp_per_cores)
        values = [0.0] + list(self.amp_per_cores.values())
        return float(np.interp(cores, counts, values))

    def amp_table(self) -> np.ndarray:
        """Tableau indexé par le nombre de cœurs occupés (0..max_cores)."""
        return np.array([self.amp(n) for n in range(self.max_cores + 1)])

    def relative_levels(self, cores: Sequence[int]) -> Tuple[float, ...]:
        """Champ de chaque nombre de cœurs rapporté à celui du plus grand."""
        top = self.amp(max(cores))
        if top <= 0:
            raise ConfigError(f"niveau maximal nul pour le profil {self.name}")
        return tuple(self.amp(n) / top for n in cores)


def predict_field(profile: MachineProfile, distance_cm: float, cores: Optional[int] = None) -> float:
    """Champ attendu (mT) à `distance_cm` pour un nombre de cœurs donné."""
    from coremag.channel.model import measured_gain

    cores = profile.calibration_cores if cores is None else cores
    return profile.amp(cores) * measured_gain(profile, distance_cm)


def fit_profile(name: str, thread_amps: Mapping[int, float], distance_amps: Mapping[float, float],
                r_ref_cm: float = 20.0, calibration_cores: Optional[int] = None,
                keep_curve: bool = True) -> MachineProfile:
    """
    Ajuste un profil sur des mesures.

    L'exposant est l'opposé de la pente de la régression linéaire de
    log(champ) en fonction de log(distance). Les amplitudes par cœur sont
    interpolées linéairement entre les mesures (et l'origine).

    Args:
        name (str): identifiant du profil
        thread_amps (dict): nombre de threads -> champ mesuré (mT)
        distance_amps (dict): distance (cm) -> champ mesuré (mT)
        r_ref_cm (float): distance de référence
        calibration_cores (int, optional): cœurs actifs pendant les mesures en distance
        keep_curve (bool): conserver la courbe mesurée pour la prédiction

    Returns:
        MachineProfile: profil ajusté
    """
    distance_amps = {float(d): float(a) for d, a in distance_amps.items() if a > 0 and d > 0}
    thread_amps = {int(n): float(a) for n, a in thread_amps.items() if n > 0}
    if len(distance_amps) < 2:
        raise InsufficientData(f"{len(distance_amps)} mesure(s) de distance, au moins 2 requises")
    if not thread_amps:
        raise InsufficientData("au moins une mesure en fonction du nombre de threads est requise")

    distances = np.array(sorted(distance_amps))
    amps = np.array([distance_amps[d] for d in distances])
    fit = linregress(np.log(distances), np.log(amps))
    exponent = -fit.slope
    clamped = float(np.clip(exponent, *EXPONENT_RANGE))
    if clamped != exponent:
        logger.warning(f"Profil {name} : exposant {exponent:.3f} ramené à {clamped}")

    max_cores = max(thread_amps)
    counts = [0] + sorted(thread_amps)
    values = [0.0] + [thread_amps[n] for n in sorted(thread_amps)]
    per_core = np.interp(np.arange(1, max_cores + 1), counts, values)
    monotone = np.maximum.accumulate(per_core)
    if np.any(monotone != per_core):
        logger.warning(f"Profil {name} : amplitudes par cœur rendues monotones")
    amp_per_cores = {n + 1: float(v) for n, v in enumerate(monotone)}

    ref_amp = float(np.exp(np.interp(np.log(r_ref_cm), np.log(distances), np.log(amps))))
    if calibration_cores is None:
        calibration_cores = 1 + int(np.argmin(np.abs(monotone - ref_amp)))

    curve = ()
    if keep_curve:
        gains = amps / ref_amp
        if np.all(np.diff(gains) < 0):
            curve = tuple(zip(distances.tolist(), gains.tolist()))
        else:
            logger.warning(f"Profil {name} : mesures non décroissantes, loi de puissance seule")

    profile = MachineProfile(name=name, amp_per_cores=amp_per_cores, r_ref_cm=r_ref_cm,
                             decay_exponent=clamped, max_cores=max_cores,
                             calibration_cores=calibration_cores, distance_curve=curve)
    logger.info(f"Profil {name} ajusté : exposant {clamped:.3f}, {max_cores} cœurs, "
                f"calibration sur {calibration_cores} cœur(s)")
    return profile


def load_measurements(path: str, machine: Optional[str] = None) -> Dict[float, float]:
    """
    Lit un CSV de mesures à deux colonnes utiles (abscisse, field_mT).

    L'abscisse est `distance_cm` ou `threads` ; la colonne optionnelle
    `machine` permet de filtrer un fichier multi-machines.
    """
    try:
        frame = pd.read_csv(path, comment='#')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ProfileFormatError(f"{path} : lecture impossible ({str(e)})")
    if machine is not None and 'machine' in frame.columns:
        frame = frame[frame['machine'] == machine]
    key = 'distance_cm' if 'distance_cm' in frame.columns else 'threads'
    if key not in frame.columns or 'field_mT' not in frame.columns:
        raise ProfileFormatError(f"{path} : colonnes distance_cm/threads et field_mT attendues")
    return {float(k): float(v) for k, v in zip(frame[key], frame['field_mT'])}


def save_profile(profile: MachineProfile, path: str) -> str:
    """Écrit un profil au format clé/valeur."""
    lines = [f"# Profil {profile.name}",
             f"name {profile.name}",
             f"r_ref_cm {profile.r_ref_cm!r}",
             f"decay_exponent {profile.decay_exponent!r}",
             f"max_cores {profile.max_cores}",
             f"calibration_cores {profile.calibration_cores}"]
    lines += [f"amp.{n} {v!r}" for n, v in profile.amp_per_cores.items()]
    lines += [f"curve.{d:g} {g!r}" for d, g in profile.distance_curve]
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write('\n'.join(lines) + '\n')
    logger.info(f"Profil {profile.name} enregistré dans {path}")
    return path


def load_profile(path: str) -> MachineProfile:
    """
    Lit un fichier de profil (`clé valeur` par ligne, `#` pour les commentaires).

    Raises:
        ProfileFormatError: fichier absent, clé inconnue ou valeur illisible
    """
    if not os.path.isfile(path):
        raise ProfileFormatError(f"profil introuvable : {path}")
    scalars: Dict[str, str] = {}
    amps: Dict[int, float] = {}
    curve: List[Tuple[float, float]] = []
    with open(path, 'r', encoding='utf-8') as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ProfileFormatError(f"{path}:{number} : ligne `clé valeur` attendue")
            key, value = parts
            try:
                if key.startswith('amp.'):
                    amps[int(key[4:])] = float(value)
                elif key.startswith('curve.'):
                    curve.append((float(key[6:]), float(value)))
                elif key in ('name', 'r_ref_cm', 'decay_exponent', 'max_cores', 'calibration_cores'):
                    scalars[key] = value
                else:
                    raise ProfileFormatError(f"{path}:{number} : clé inconnue {key}")
            except ValueError:
                raise ProfileFormatError(f"{path}:{number} : valeur illisible {value!r}")

    if 'name' not in scalars or not amps:
        raise ProfileFormatError(f"{path} : clés `name` et `amp.<n>` obligatoires")
    try:
        profile = MachineProfile(
            name=scalars['name'],
            amp_per_cores=amps,
            r_ref_cm=float(scalars.get('r_ref_cm', 20.0)),
            decay_exponent=float(scalars.get('decay_exponent', 3.0)),
            max_cores=int(scalars['max_cores']) if 'max_cores' in scalars else None,
            calibration_cores=int(scalars['calibration_cores']) if 'calibration_cores' in scalars else None,
            distance_curve=tuple(curve))
    except (ValueError, ConfigError) as e:
        raise ProfileFormatError(f"{path} : profil invalide ({str(e)})")
    logger.debug(f"Profil {profile.name} chargé depuis {path}")
    return profile


def list_profiles(directory: Optional[str] = None) -> List[str]:
    directory = directory or Config.PROFILE_DIR
    if not os.path.isdir(directory):
        return []
    return sorted(f[:-len(PROFILE_SUFFIX)] for f in os.listdir(directory) if f.endswith(PROFILE_SUFFIX))


def builtin_profile(name: str, directory: Optional[str] = None) -> MachineProfile:
    """Charge un profil livré (pc1, pc2, laptop, server, nuk) ou un chemin de fichier."""
    if os.path.isfile(name):
        return load_profile(name)
    directory = directory or Config.PROFILE_DIR
    path = os.path.join(directory, f"{name.lower()}{PROFILE_SUFFIX}")
    if not os.path.isfile(path):
        raise ProfileFormatError(f"profil inconnu : {name} (disponibles : {', '.join(list_profiles(directory))})")
    return load_profile(path)
