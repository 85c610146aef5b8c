#!/usr/bin/env python3
"""
Rate-distortion curve of a policy

How many bits per agent does it take to convey a policy if the conveyed
joint may differ from the intended one by D in total variation? The
solver returns a certified rate and the minimising policy. The inverse
question (best distortion at a given rate) is what a fixed-rate channel
faces.
"""
import numpy as np

from rcmab import mutual_information, rate_to_distortion, rd_policy_compression
from rcmab.infotheory import best_state_independent

ps = np.full(16, 1 / 16)
pi = np.full((16, 16), 0.02 / 15)
pi[np.arange(16), np.arange(16) // 2] = 0.98        # a nearly converged groups-8 policy
pi /= pi.sum(axis=1, keepdims=True)

d0, _ = best_state_independent(ps, pi)
print(f"I(S;A) = {mutual_information(ps, pi):.4f} bits, rate hits zero at D0 = {d0:.4f}")
print("\n     D    R(D)   certified gap")
for d in np.linspace(0, d0, 8):
    res = rd_policy_compression(ps, pi, d)
    print(f"{d:6.3f}  {res.rate:6.3f}   {res.gap:.1e}")

print("\n  R     D(R)   pi(a*|s) after projection")
for r in (3.0, 2.0, 1.0, 0.0):
    res = rate_to_distortion(ps, pi, r)
    kept = res.policy[np.arange(16), np.arange(16) // 2].mean()
    print(f"{r:4.1f}  {res.distortion:6.3f}  {kept:.3f}")
