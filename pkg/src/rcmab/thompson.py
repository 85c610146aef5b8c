"""Per-state Beta-Bernoulli Thompson sampling."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special

QUADRATURE = "quadrature"
MONTE_CARLO = "monte-carlo"
METHODS = (QUADRATURE, MONTE_CARLO)

DEFAULT_PRECISION = {QUADRATURE: 8, MONTE_CARLO: 100_000}

# quantile beyond which an arm is treated as having no mass
TAIL = 1e-12
# breakpoints of the integration panels, in posterior standard deviations
_SD_STEPS = np.array([-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0])


@dataclass(frozen=True)
class PosteriorBank:
    """Beta posteriors over the mean reward of every (state, arm) pair.

    ``alpha - prior_alpha`` counts observed successes and
    ``beta - prior_beta`` observed failures; ``round`` counts updates.
    """

    alpha: np.ndarray
    beta: np.ndarray
    round: int = 0
    prior_alpha: float = 1.0
    prior_beta: float = 1.0

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        b = np.array(self.beta, dtype=float)
        if a.ndim != 2 or a.shape != b.shape:
            raise ValueError(f"alpha and beta must be matching 2-D arrays, got {a.shape} and {b.shape}")
        if a.size and (a.min() <= 0 or b.min() <= 0):
            raise ValueError("Beta parameters must be strictly positive")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def num_states(self) -> int:
        return self.alpha.shape[0]

    @property
    def num_actions(self) -> int:
        return self.alpha.shape[1]

    @property
    def counts(self) -> np.ndarray:
        """Number of observed plays of every (state, arm)."""
        return self.alpha + self.beta - (self.prior_alpha + self.prior_beta)

    @property
    def posterior_mean(self) -> np.ndarray:
        return self.alpha / (self.alpha + self.beta)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "round": self.round,
            "prior_alpha": self.prior_alpha,
            "prior_beta": self.prior_beta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PosteriorBank":
        return cls(np.asarray(d["alpha"]), np.asarray(d["beta"]), int(d["round"]),
                   float(d.get("prior_alpha", 1.0)), float(d.get("prior_beta", 1.0)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "PosteriorBank":
        return cls.from_dict(json.loads(Path(path).read_text()))


def init_posteriors(num_states: int, num_actions: int, prior_alpha: float = 1.0,
                    prior_beta: float = 1.0) -> PosteriorBank:
    if num_states < 1 or num_actions < 1:
        raise ValueError("dimensions must be positive")
    shape = (num_states, num_actions)
    return PosteriorBank(np.full(shape, float(prior_alpha)), np.full(shape, float(prior_beta)), 0,
                         float(prior_alpha), float(prior_beta))


def sample_action(bank: PosteriorBank, s: int, stream) -> int:
    """Thompson draw for one agent in state ``s``; ties go to the lowest arm."""
    if not 0 <= s < bank.num_states:
        raise IndexError(f"state {s} out of range")
    draws = stream.beta(bank.alpha[s], bank.beta[s])
    return int(np.argmax(draws))


def sample_actions(bank: PosteriorBank, states, stream) -> np.ndarray:
    """Independent Thompson draws for a batch of agents, in agent order."""
    states = np.asarray(states, dtype=np.int64)
    draws = stream.beta(bank.alpha[states], bank.beta[states])
    return np.argmax(draws, axis=-1)


def update(bank: PosteriorBank, observations) -> PosteriorBank:
    """Apply one round of ``(state, action, reward)`` observations.

    ``observations`` is a sequence of triples or an ``(n, 3)`` integer
    array. Returns a new bank with ``round`` incremented.
    """
    obs = np.asarray(observations, dtype=np.int64).reshape(-1, 3)
    alpha = bank.alpha.copy()
    beta = bank.beta.copy()
    if obs.size:
        s, a, r = obs[:, 0], obs[:, 1], obs[:, 2]
        lo, hi = obs.min(axis=0), obs.max(axis=0)
        if lo[2] < 0 or hi[2] > 1:
            raise ValueError("rewards must be 0 or 1")
        if lo[0] < 0 or hi[0] >= bank.num_states or lo[1] < 0 or hi[1] >= bank.num_actions:
            raise IndexError("observation index out of range")
        np.add.at(alpha, (s, a), r)
        np.add.at(beta, (s, a), 1 - r)
    return PosteriorBank(alpha, beta, bank.round + 1, bank.prior_alpha, bank.prior_beta)


# ---------------------------------------------------------------------------
# explicit policy


def _panel_rule(breaks, nodes_per_panel):
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    left, right = breaks[:-1], breaks[1:]
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _exclusive_prod(m):
    """Row-wise product over all other rows: out[i] = prod_{j != i} m[j]."""
    ones = np.ones((1, m.shape[1]))
    before = np.cumprod(np.vstack([ones, m[:-1]]), axis=0)
    after = np.cumprod(np.vstack([ones, m[:0:-1]]), axis=0)[::-1]
    return before * after


def _quadrature_row(a, b, lo, hi, nodes_per_panel):
    k = a.size
    floor = lo.max()
    active = np.nonzero(hi > floor)[0]
    out = np.zeros(k)
    if active.size == 1:
        out[active[0]] = 1.0
        return out
    a, b = a[active], b[active]
    top = hi[active].max()
    mean = a / (a + b)
    sd = np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
    breaks = np.concatenate([[floor, top], lo[active], hi[active],
                             (mean[:, None] + sd[:, None] * _SD_STEPS).ravel()])
    breaks = np.unique(np.clip(breaks, floor, top))
    x, w = _panel_rule(breaks, nodes_per_panel)
    pdf = np.exp(special.xlogy(a[:, None] - 1, x) + special.xlog1py(b[:, None] - 1, -x)
                 - special.betaln(a, b)[:, None])
    cdf = special.betainc(a[:, None], b[:, None], x)
    mass = (pdf * _exclusive_prod(cdf)) @ w
    out[active] = mass / mass.sum()
    return out


def _tails(bank):
    lo = special.betaincinv(bank.alpha, bank.beta, TAIL)
    hi = special.betainccinv(bank.alpha, bank.beta, TAIL)
    return lo, hi


def _monte_carlo_row(a, b, draws, stream, chunk=100_000):
    counts = np.zeros(a.size)
    left = draws
    while left > 0:
        n = min(chunk, left)
        winners = np.argmax(stream.beta(a, b, size=(n, a.size)), axis=1)
        counts += np.bincount(winners, minlength=a.size)
        left -= n
    return counts / draws


def action_distribution(bank: PosteriorBank, s: int, method: str = QUADRATURE,
                        precision: int | None = None, stream=None) -> np.ndarray:
    """Probability that each arm wins the Thompson draw in state ``s``.

    ``quadrature`` integrates ``pdf_a * prod_{j != a} cdf_j`` with
    Gauss-Legendre panels placed around every posterior; ``precision`` is
    the number of nodes per panel. ``monte-carlo`` counts argmax winners
    over ``precision`` joint draws from ``stream`` (seed 0 if omitted).
    """
    if not 0 <= s < bank.num_states:
        raise IndexError(f"state {s} out of range")
    return _rows(bank, [s], method, precision, stream)[0]


def full_policy(bank: PosteriorBank, method: str = QUADRATURE, precision: int | None = None,
                stream=None) -> np.ndarray:
    """The Thompson policy of every state as a ``(num_states, num_actions)`` matrix."""
    return _rows(bank, range(bank.num_states), method, precision, stream)


def _rows(bank, states, method, precision, stream):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if precision is None:
        precision = DEFAULT_PRECISION[method]
    if precision <= 0:
        raise ValueError(f"precision must be positive, got {precision}")
    states = list(states)
    out = np.empty((len(states), bank.num_actions))
    if method == QUADRATURE:
        sub = PosteriorBank(bank.alpha[states], bank.beta[states])
        lo, hi = _tails(sub)
        for i in range(len(states)):
            out[i] = _quadrature_row(sub.alpha[i], sub.beta[i], lo[i], hi[i], int(precision))
    else:
        if stream is None:
            stream = np.random.default_rng(0)
        for i, s in enumerate(states):
            out[i] = _monte_carlo_row(bank.alpha[s], bank.beta[s], int(precision), stream)
    return out
