#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import os


class Config:
    # Configuration générale
    SEED = int(os.environ.get('COREMAG_SEED') or 1337)
    LOG_FILE = os.environ.get('COREMAG_LOG_FILE') or None
    LOG_LEVEL = os.environ.get('COREMAG_LOG_LEVEL') or 'INFO'

    # Configuration des chemins
    BASE_DIR = os.path.abspath(os.path.dirname(__file__))
    DATA_DIR = os.path.join(BASE_DIR, '..', 'data')
    PROFILE_DIR = os.environ.get('COREMAG_PROFILE_DIR') or os.path.join(DATA_DIR, 'profiles')

    # Limite du nombre de cœurs pour l'émetteur réel (machines partagées)
    MAX_CORES = int(os.environ['COREMAG_MAX_CORES']) if os.environ.get('COREMAG_MAX_CORES') else None

    # Trame
    PREAMBLE = (1, 0, 1, 0)
    PAYLOAD_BITS = 32

    # Configuration du modem
    CARRIER_HZ = 20.0
    MAX_CARRIER_HZ = 50.0
    SCHEDULE_GRANULARITY_MS = 1
    ASK_LEVELS = (1, 2, 3, 4)
    FSK_TONES_HZ = (10.0, 20.0)
    FSK_THREE_TONE_CODEBOOK = {'0': 3.0, '1': 7.0, '01': 13.0}
    OFDM_SUBCARRIERS_HZ = (7.0, 13.0)
    SYNC_THRESHOLD = 0.5
    GUARD_MS = 500

    # Rendu et capteur (HMR2300)
    RENDER_RATE_HZ = float(os.environ.get('COREMAG_RENDER_RATE') or 1000.0)
    SENSOR_RATE_HZ = 154.0
    SENSOR_RESOLUTION_MT = 7.0e-5
    SENSOR_FULL_SCALE_MT = 10.0
    SENSOR_ADC_BITS = 16
    SENSOR_BANDWIDTH_HZ = 50.0

    # Montée en fréquence du processeur émetteur
    POWER_ONSET_MS = 15.0
    POWER_RELEASE_MS = 250.0
    POWER_FLOOR = 0.08

    # Canal
    NOISE_FLOOR_MT = 0.008
    SHIELD_CONDUCTIVITY_S_PER_M = 1.0e7
    SHIELD_THICKNESS_MM = 3.0
    SHIELD_RADIUS_M = 0.25
    SHIELD_PERMEABILITY = 1.0
    SNR_CAP_DB = 120.0

    # Analyse
    TRIALS = int(os.environ.get('COREMAG_TRIALS') or 100)
    CAPACITY_BANDWIDTH_HZ = 50.0
