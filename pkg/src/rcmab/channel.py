"""Rate-limited links between the decision-maker and the controller.

Three models are provided:

* ``perfect``: lossless index coding of the intended actions, needs
  ``R >= log2 K`` bits per agent.
* ``covering``: a shared random codebook of ``2**ceil(N R)`` action
  sequences; the encoder sends the index of the codeword whose joint type
  with the observed states is closest to the target joint.
* ``projected-policy``: agents sample from the least-distorted policy whose
  rate fits in ``R`` (the many-agent idealisation).

Codebooks are never stored. Codeword ``j`` is regenerated on demand from a
counter-based generator keyed by ``(codebook_seed, round)``, so encoder and
decoder share nothing but the seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .infotheory import RDResult, rate_to_distortion

PERFECT = "perfect"
COVERING = "covering"
PROJECTED = "projected-policy"
KINDS = (PERFECT, COVERING, PROJECTED)

DEFAULT_MAX_CODEBOOK = 2**24
_RATE_EPS = 1e-9


class ChannelError(RuntimeError):
    pass


class CodebookTooLarge(ChannelError):
    """The requested codebook exceeds the configured cap (a desk-scale limit)."""


@dataclass(frozen=True)
class ChannelScheme:
    """Channel configuration. ``rate`` is in bits per agent; ``None`` means
    ``log2 K`` for the perfect channel."""

    kind: str = PERFECT
    rate: float | None = None
    codebook_seed: int = 0
    max_codebook: int = DEFAULT_MAX_CODEBOOK

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}; expected one of {KINDS}")
        if self.rate is not None and self.rate < 0:
            raise ValueError("rate must be non-negative")
        if self.rate is None and self.kind != PERFECT:
            raise ValueError(f"{self.kind} channel needs a rate")

    def effective_rate(self, num_actions: int) -> float:
        return math.log2(num_actions) if self.rate is None else float(self.rate)


# ---------------------------------------------------------------------------
# perfect channel


def message_bits(num_agents: int, rate: float) -> int:
    """Bits available per round, ``ceil(N R)``."""
    return max(0, math.ceil(num_agents * rate - _RATE_EPS))


def encode_perfect(actions, num_actions: int) -> int:
    """Mixed-radix index in ``1 .. K**N`` of an action sequence."""
    m = 0
    for a in reversed([int(x) for x in actions]):
        if not 0 <= a < num_actions:
            raise ValueError(f"action {a} out of range")
        m = m * num_actions + a
    return m + 1


def decode_perfect(m: int, num_agents: int, num_actions: int) -> np.ndarray:
    m = int(m) - 1
    if not 0 <= m < num_actions**num_agents:
        raise ValueError(f"message {m + 1} out of range")
    out = np.empty(num_agents, dtype=np.int64)
    for n in range(num_agents):
        m, out[n] = divmod(m, num_actions)
    return out


def transmit_perfect(intended_actions, num_actions: int, rate: float) -> np.ndarray:
    """Convey actions losslessly; requires ``rate >= log2 K``."""
    if rate < math.log2(num_actions) - _RATE_EPS:
        raise ChannelError(f"rate {rate} below log2 K = {math.log2(num_actions):.4f}")
    actions = np.asarray(intended_actions, dtype=np.int64)
    m = encode_perfect(actions, num_actions)
    return decode_perfect(m, actions.size, num_actions)


def message_to_bytes(m: int, num_agents: int, rate: float) -> bytes:
    """Big-endian serialisation of ``m - 1`` in ``ceil(N R / 8)`` bytes."""
    nbits = message_bits(num_agents, rate)
    return int(m - 1).to_bytes((nbits + 7) // 8, "big")


def message_from_bytes(data: bytes) -> int:
    return int.from_bytes(data, "big") + 1


# ---------------------------------------------------------------------------
# covering codebook


def codebook_size(num_agents: int, rate: float) -> int:
    return 2 ** message_bits(num_agents, rate)


def _codebook_key(codebook_seed: int, round_: int) -> np.ndarray:
    seq = np.random.SeedSequence(entropy=int(codebook_seed), spawn_key=(int(round_),))
    return seq.generate_state(2, dtype=np.uint64)


def _marginal(target_joint) -> np.ndarray:
    pj = np.asarray(target_joint, dtype=float)
    if pj.ndim != 2 or np.any(pj < 0) or abs(pj.sum() - 1) > 1e-9:
        raise ValueError("target_joint must be a non-negative matrix summing to 1")
    qa = pj.sum(axis=0)
    return qa / qa.sum()


def codewords(first: int, count: int, num_agents: int, marginal, codebook_seed: int,
              round_: int = 0) -> np.ndarray:
    """Codewords ``first .. first+count-1`` (0-based) as a ``(count, N)`` array.

    Every codeword is i.i.d. from ``marginal``; codeword ``j`` depends only on
    the key and ``j``.
    """
    blocks = (num_agents + 3) // 4
    gen = np.random.Philox(key=_codebook_key(codebook_seed, round_), counter=[first * blocks, 0, 0, 0])
    raw = gen.random_raw(count * blocks * 4).reshape(count, blocks * 4)[:, :num_agents]
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
    cdf = np.cumsum(marginal)
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def _type_distortion(states, words, target, num_states, num_actions):
    n, length = words.shape
    cells = num_states * num_actions
    flat = (states[None, :] * num_actions + words) + (np.arange(n) * cells)[:, None]
    counts = np.bincount(flat.ravel(), minlength=n * cells).reshape(n, cells)
    return 0.5 * np.abs(counts / length - target.ravel()).sum(axis=1)


def best_type_distortion(states, target_joint) -> float:
    """Smallest TV between ``target_joint`` and any joint type with these states.

    Separable convex integer allocation per state, solved greedily.
    """
    target = np.asarray(target_joint, dtype=float)
    states = np.asarray(states, dtype=np.int64)
    length = states.size
    ns, na = target.shape
    total = 0.0
    goal = target * length
    for s in range(ns):
        k = np.zeros(na)
        for _ in range(int(np.sum(states == s))):
            inc = np.abs(k + 1 - goal[s]) - np.abs(k - goal[s])
            k[np.argmin(inc)] += 1
        total += np.abs(k - goal[s]).sum()
    return 0.5 * total / length


def covering_encode(states, target_joint, rate: float, codebook_seed: int, round_: int = 0,
                    max_codebook: int = DEFAULT_MAX_CODEBOOK) -> int:
    """Index (1-based) of the codeword whose joint type is closest to the target.

    Ties go to the lowest index. The scan stops early once a codeword reaches
    the smallest distortion any action sequence could achieve.
    """
    states = np.asarray(states, dtype=np.int64)
    target = np.asarray(target_joint, dtype=float)
    length = states.size
    size = codebook_size(length, rate)
    if size > max_codebook:
        raise CodebookTooLarge(f"codebook of 2**{message_bits(length, rate)} words exceeds cap {max_codebook}")
    marginal = _marginal(target)
    ns, na = target.shape
    if np.any(states < 0) or np.any(states >= ns):
        raise ValueError("state index out of range")
    floor = best_type_distortion(states, target) + 1e-12
    best_d, best_j = np.inf, 0
    start, chunk = 0, 256
    while start < size:
        count = min(chunk, size - start)
        d = _type_distortion(states, codewords(start, count, length, marginal, codebook_seed, round_),
                             target, ns, na)
        j = int(np.argmin(d))
        if d[j] < best_d:
            best_d, best_j = d[j], start + j
        if best_d <= floor:
            break
        start += count
        chunk = min(chunk * 2, 1 << 16)
    return best_j + 1


def covering_decode(m: int, num_agents: int, num_actions: int, target_joint, rate: float,
                    codebook_seed: int, round_: int = 0,
                    max_codebook: int = DEFAULT_MAX_CODEBOOK) -> np.ndarray:
    """Regenerate codeword ``m`` (1-based) of the shared codebook."""
    size = codebook_size(num_agents, rate)
    if size > max_codebook:
        raise CodebookTooLarge(f"codebook of 2**{message_bits(num_agents, rate)} words exceeds cap {max_codebook}")
    if not 1 <= m <= size:
        raise ValueError(f"message {m} outside 1..{size}")
    marginal = _marginal(target_joint)
    if marginal.size != num_actions:
        raise ValueError("target_joint does not have num_actions columns")
    return codewords(m - 1, 1, num_agents, marginal, codebook_seed, round_)[0]


# ---------------------------------------------------------------------------
# projected policy


def sample_from_policy(policy, states, stream) -> np.ndarray:
    """Draw one action per agent from ``policy[state]`` by inverse CDF."""
    states = np.asarray(states, dtype=np.int64)
    cdf = np.cumsum(np.asarray(policy, dtype=float), axis=1)[states]
    u = stream.random(states.size)
    return np.minimum((cdf <= u[:, None]).sum(axis=1), cdf.shape[1] - 1)


def project_policy(policy, state_dist, rate: float, tol: float = 1e-4,
                   lam_hint: float | None = None) -> RDResult:
    """Least-distorted proxy of ``policy`` conveyable at ``rate`` bits."""
    return rate_to_distortion(state_dist, policy, rate, tol=tol, lam_hint=lam_hint)


def transmit_projected_policy(policy, state_dist, rate: float, states, stream,
                              tol: float = 1e-4) -> np.ndarray:
    proxy = project_policy(policy, state_dist, rate, tol=tol)
    return sample_from_policy(proxy.policy, states, stream)
