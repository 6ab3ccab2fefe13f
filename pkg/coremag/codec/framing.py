#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Tramage au niveau bit : préambule 1010, charge utile de 32 bits, bit de parité.
"""

import logging
from dataclasses import dataclass
from functools import reduce
from operator import xor
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from coremag.config import Config
from coremag.errors import BadPreamble, ConfigError, PayloadLength, Truncated

logger = logging.getLogger(__name__)

PREAMBLE = tuple(Config.PREAMBLE)
PAYLOAD_BITS = Config.PAYLOAD_BITS
FRAME_BITS = len(PREAMBLE) + PAYLOAD_BITS + 1


def _check_bits(bits: Iterable[int]) -> Tuple[int, ...]:
    values = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in values):
        raise ConfigError("les bits doivent valoir 0 ou 1")
    return values


@dataclass(frozen=True)
class BitStream:
    """Suite ordonnée de bits de longueur quelconque."""
    bits: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'bits', _check_bits(self.bits))

    @classmethod
    def from_string(cls, text: str) -> 'BitStream':
        return cls(tuple(int(c) for c in text if c in '01'))

    def to_string(self) -> str:
        return ''.join(str(b) for b in self.bits)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.uint8)

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, index):
        return self.bits[index]

    def __add__(self, other: 'BitStream') -> 'BitStream':
        return BitStream(self.bits + tuple(other))


@dataclass(frozen=True)
class Payload:
    """Charge utile de exactement 32 bits."""
    bits: Tuple[int, ...]

    def __post_init__(self):
        values = _check_bits(self.bits)
        if len(values) != PAYLOAD_BITS:
            raise PayloadLength(f"charge utile de {len(values)} bits, {PAYLOAD_BITS} attendus")
        object.__setattr__(self, 'bits', values)


@dataclass(frozen=True)
class BitFrame:
    """Trame complète : préambule + charge utile + parité (37 bits)."""
    payload: Payload
    parity: int
    preamble: Tuple[int, ...] = PREAMBLE

    def __post_init__(self):
        if tuple(self.preamble) != PREAMBLE:
            raise BadPreamble(f"préambule invalide {self.preamble}")
        if self.parity != parity_of(self.payload.bits):
            raise ConfigError("bit de parité incohérent avec la charge utile")

    def to_bits(self) -> BitStream:
        return BitStream(self.preamble + self.payload.bits + (self.parity,))

    def __len__(self):
        return FRAME_BITS


def parity_of(bits: Sequence[int]) -> int:
    """Parité paire : XOR de tous les bits."""
    return reduce(xor, bits, 0)


def frame(payload: Payload) -> BitFrame:
    """
    Construit une trame à partir d'une charge utile.

    Args:
        payload (Payload ou séquence de bits): 32 bits à transmettre

    Returns:
        BitFrame: trame avec préambule fixe et parité paire
    """
    if not isinstance(payload, Payload):
        payload = Payload(tuple(payload))
    return BitFrame(payload=payload, parity=parity_of(payload.bits))


def deframe(bits: BitStream, offset: int = 0) -> Tuple[Payload, bool]:
    """
    Extrait la charge utile d'une trame située à `offset`.

    Args:
        bits (BitStream): flux reçu
        offset (int): position du premier bit du préambule

    Returns:
        tuple: (Payload, parity_ok)
    """
    values = tuple(bits)
    if offset < 0 or offset + FRAME_BITS > len(values):
        raise Truncated(f"{len(values) - offset} bits disponibles, {FRAME_BITS} requis")
    head = values[offset:offset + len(PREAMBLE)]
    if head != PREAMBLE:
        raise BadPreamble(f"préambule reçu {head}")
    start = offset + len(PREAMBLE)
    payload = Payload(values[start:start + PAYLOAD_BITS])
    received_parity = values[start + PAYLOAD_BITS]
    parity_ok = received_parity == parity_of(payload.bits)
    if not parity_ok:
        logger.debug(f"Erreur de parité détectée à l'offset {offset}")
    return payload, parity_ok


def chunk_bytes(data: bytes) -> Tuple[List[Payload], int]:
    """
    Découpe des octets en charges utiles de 32 bits (MSB en premier).

    Returns:
        tuple: (liste de Payload, nombre de bits de bourrage ajoutés à la fin)
    """
    if not data:
        return [], 0
    bits = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
    pad_bits = (-len(bits)) % PAYLOAD_BITS
    if pad_bits:
        bits = np.concatenate([bits, np.zeros(pad_bits, dtype=np.uint8)])
    payloads = [Payload(tuple(int(b) for b in chunk))
                for chunk in bits.reshape(-1, PAYLOAD_BITS)]
    return payloads, pad_bits


def bytes_from_payloads(payloads: Sequence[Payload], pad_bits: int = 0) -> bytes:
    """Opération inverse de chunk_bytes."""
    if not payloads:
        return b''
    bits = np.concatenate([np.asarray(p.bits, dtype=np.uint8) for p in payloads])
    if pad_bits:
        bits = bits[:-pad_bits]
    bits = bits[:len(bits) - len(bits) % 8]
    return np.packbits(bits).tobytes()


def frames_from_bytes(data: bytes) -> Tuple[List[BitFrame], int]:
    payloads, pad_bits = chunk_bytes(data)
    return [frame(p) for p in payloads], pad_bits


def frames_to_stream(frames: Sequence[BitFrame]) -> BitStream:
    """Concatène les trames bout à bout, sans intervalle au niveau bit."""
    bits: Tuple[int, ...] = ()
    for f in frames:
        bits += f.to_bits().bits
    return BitStream(bits)


def split_frames(bits: BitStream) -> List[Tuple[Payload, bool]]:
    """Déframe un flux de trames concaténées."""
    results = []
    for offset in range(0, len(bits) - FRAME_BITS + 1, FRAME_BITS):
        results.append(deframe(bits, offset))
    return results
