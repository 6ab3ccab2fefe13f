#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import os

import numpy as np
import pytest

from coremag.channel.model import ChannelSpec, SensorSpec
from coremag.waveform.profiles import builtin_profile


def pytest_collection_modifyitems(config, items):
    if os.environ.get('COREMAG_HARDWARE_TESTS') == '1':
        return
    skip = pytest.mark.skip(reason="COREMAG_HARDWARE_TESTS=1 pour charger réellement le CPU")
    for item in items:
        if 'hardware' in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def pc1():
    return builtin_profile('pc1')


@pytest.fixture
def rng():
    return np.random.default_rng(1337)


@pytest.fixture
def clean_channel():
    """Canal sans bruit à la distance de référence, sans filtre capteur."""
    return ChannelSpec(distance_cm=20.0, noise_floor_mT=0.0,
                       sensor=SensorSpec(bandwidth_hz=None))
