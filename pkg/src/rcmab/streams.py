"""Deterministic random sub-streams.

A simulation draws each kind of randomness (states, Thompson samples,
channel noise, rewards, Monte Carlo policy estimates) from its own stream
keyed by ``(root_seed, purpose)``. Runs that differ only in the channel
therefore see the same state and reward noise.
"""
from __future__ import annotations

import numpy as np

STATES = 0
ACTIONS = 1
CHANNEL = 2
REWARDS = 3
POLICY = 4


def substream(root_seed: int, *key: int) -> np.random.Generator:
    """Return a generator derived from ``root_seed`` and an integer key path."""
    seq = np.random.SeedSequence(entropy=int(root_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))
