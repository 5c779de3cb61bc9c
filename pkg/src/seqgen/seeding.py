"""Deterministic random streams derived from one master seed."""
from __future__ import annotations

import hashlib

import numpy as np


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "little")


def derive_seed(master: int, label: str, *index: int) -> np.random.SeedSequence:
    """Seed sequence for stream ``(master, label, *index)``."""
    return np.random.SeedSequence(int(master) & (2 ** 64 - 1),
                                  spawn_key=(_label_key(label),) + tuple(int(i) for i in index))


def derive_rng(master: int, label: str, *index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, label, *index)))
