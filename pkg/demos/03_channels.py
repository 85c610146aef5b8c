#!/usr/bin/env python3
"""
The three channel models

* perfect: index-codes the intended actions, needs log2 K bits per agent;
* covering: a shared random codebook of 2**ceil(N R) action sequences;
* projected-policy: agents sample from the best policy that fits in R bits.
"""
import math

import numpy as np

from rcmab import channel as ch
from rcmab.infotheory import empirical_joint_type, joint, total_variation

rng = np.random.default_rng(0)
actions = rng.integers(0, 16, size=8)
m = ch.encode_perfect(actions, 16)
print(f"perfect: actions {actions.tolist()} -> message {m} "
      f"({len(ch.message_to_bytes(m, 8, 4.0))} bytes) -> {ch.transmit_perfect(actions, 16, 4.0).tolist()}")
try:
    ch.transmit_perfect(actions, 16, 3.0)
except ch.ChannelError as exc:
    print(f"perfect at 3 bits: {exc}")

# covering: two states, two arms, each state wants its own arm
target = joint([0.5, 0.5], np.eye(2))
print("\ncovering, N=16, mean TV of the conveyed type over 100 trials")
for rate in (0.25, 0.5, 1.0, 1.5):
    d = []
    for trial in range(100):
        states = np.random.default_rng(trial).integers(0, 2, size=16)
        m = ch.covering_encode(states, target, rate, codebook_seed=trial)
        word = ch.covering_decode(m, 16, 2, target, rate, trial)
        d.append(total_variation(empirical_joint_type(states, word, 2, 2), target))
    print(f"  R={rate:<4}  B=2^{math.ceil(16 * rate):<3} TV={np.mean(d):.4f}")

# projected policy: a sharp 4-state policy squeezed through 1 bit
pi = np.eye(4) * 0.96 + 0.01
ps = np.full(4, 0.25)
states = rng.integers(0, 4, size=20_000)
acts = ch.transmit_projected_policy(pi, ps, 1.0, states, rng)
freq = empirical_joint_type(states, acts, 4, 4) * 4
print("\nprojected at 1 bit, empirical pi(a|s):")
print(np.round(freq, 2))
