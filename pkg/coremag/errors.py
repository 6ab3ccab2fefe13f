#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Hiérarchie des exceptions du projet.

Chaque classe porte le code de sortie utilisé par la ligne de commande.
"""


class CoremagError(Exception):
    """Erreur de base de coremag."""
    exit_code = 1


# --- Configuration (code 2) ------------------------------------------------

class ConfigError(CoremagError):
    """Paramètres incohérents ou hors des bornes autorisées."""
    exit_code = 2


class ConfigMismatch(ConfigError):
    """Nombre de bits incompatible avec la taille des symboles."""


class UnachievableTiming(ConfigError):
    """Demi-cycle inférieur à la granularité de 1 ms de l'ordonnancement."""


class PayloadLength(ConfigError):
    """Charge utile différente de 32 bits."""


class Undersampled(ConfigError):
    """Fréquence d'échantillonnage insuffisante pour le signal."""


class UnknownCoreCount(ConfigError):
    """L'ordonnancement utilise plus de cœurs que le profil n'en décrit."""


class InsufficientData(ConfigError):
    """Pas assez de mesures pour ajuster un profil."""


# --- Entrées / sorties (code 3) --------------------------------------------

class TraceFormatError(CoremagError):
    """Fichier magtrace illisible."""
    exit_code = 3


class ProfileFormatError(CoremagError):
    """Fichier de profil illisible."""
    exit_code = 3


# --- Décodage (code 4) -----------------------------------------------------

class DecodeError(CoremagError):
    """Échec de la démodulation ou du déramage."""
    exit_code = 4


class BadPreamble(DecodeError):
    """Les 4 bits de tête ne valent pas 1,0,1,0."""


class Truncated(DecodeError):
    """Moins de 37 bits disponibles à partir de l'offset."""


class NoPreamble(DecodeError):
    """Aucun préambule au-dessus du seuil de synchronisation."""


class RateMismatch(DecodeError):
    """Trace trop courte ou sous-échantillonnée pour la configuration."""


class TooShort(DecodeError):
    """Trace trop courte pour l'analyse demandée."""


# --- Émetteur réel ---------------------------------------------------------

class TransmitError(CoremagError):
    """Échec de l'émission par charge CPU."""
    exit_code = 5


class AffinityUnsupported(TransmitError):
    """Le système ne permet pas de fixer l'affinité des processus."""


class CoreUnavailable(TransmitError):
    """Cœur logique absent ou plan vide."""
    exit_code = 2


class ClockResolutionTooCoarse(TransmitError):
    """Horloge monotone plus grossière que 1 ms."""
