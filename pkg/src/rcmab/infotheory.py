"""Discrete information measures and the policy rate-distortion program.

The rate-distortion solver minimises ``I(S;A)`` over conditional policies
``Q(a|s)`` subject to a total-variation budget between the joints
``P_S * Q`` and ``P_S * pi``. It works on the Lagrangian

    min_Q  I(S;A) + lam * TV(P_S Q, P_S pi)

using the variational identity ``I(S;A) = min_r sum_s P_S(s) KL(Q_s || r)``
and alternating exact minimisation in ``Q`` and ``r``. With ``r`` fixed the
``Q`` step separates over states and has the closed form

    Q_s(a) = clip(pi_s(a), c_s r_a e^{-lam/2}, c_s r_a e^{lam/2})

with ``c_s`` chosen to normalise the row. A dual lower bound on the
Lagrangian gives a stopping certificate, and an outer bisection on ``lam``
finds the point of the curve with the requested distortion (or rate).
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
MAX_LAMBDA = 1000.0


class SolverError(RuntimeError):
    """Raised when the rate-distortion solver misses its tolerance.

    ``best`` holds the best feasible iterate found, as an ``RDResult``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


# ---------------------------------------------------------------------------
# basic measures


def _as_simplex(p, name="p", atol=1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > atol:
        raise ValueError(f"{name} must sum to 1, got {p.sum()!r}")
    return p


def check_policy(policy, num_states=None) -> np.ndarray:
    """Validate a policy matrix: rows are points of the probability simplex."""
    q = np.asarray(policy, dtype=float)
    if q.ndim != 2:
        raise ValueError(f"policy must be 2-D, got shape {q.shape}")
    if num_states is not None and q.shape[0] != num_states:
        raise ValueError(f"policy has {q.shape[0]} rows, expected {num_states}")
    if np.any(q < 0):
        raise ValueError("policy has negative entries")
    if np.any(np.abs(q.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("policy rows must sum to 1")
    return q


def entropy(p) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    p = _as_simplex(p).ravel()
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def joint(state_dist, policy) -> np.ndarray:
    """Joint distribution ``P_S(s) * policy(a|s)``."""
    ps = _as_simplex(state_dist, "state_dist")
    q = check_policy(policy, ps.shape[0])
    return ps[:, None] * q


def _mi_nats(ps: np.ndarray, q: np.ndarray) -> float:
    pj = ps[:, None] * q
    marg = pj.sum(axis=0)
    mask = pj > 0
    ratio = q[mask] / np.broadcast_to(marg, q.shape)[mask]
    return float(max(np.sum(pj[mask] * np.log(ratio)), 0.0))


def mutual_information(state_dist, policy) -> float:
    """I(S;A) in bits for states ``state_dist`` and conditional ``policy``."""
    ps = _as_simplex(state_dist, "state_dist")
    q = check_policy(policy, ps.shape[0])
    return _mi_nats(ps, q) / LN2


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def empirical_joint_type(states, actions, num_states=None, num_actions=None) -> np.ndarray:
    """Normalised count matrix of (state, action) pairs."""
    s = np.asarray(states, dtype=np.int64).ravel()
    a = np.asarray(actions, dtype=np.int64).ravel()
    if s.shape != a.shape:
        raise ValueError(f"length mismatch: {s.size} states, {a.size} actions")
    if s.size == 0:
        raise ValueError("empty sequence")
    ns = int(s.max()) + 1 if num_states is None else num_states
    na = int(a.max()) + 1 if num_actions is None else num_actions
    counts = np.zeros((ns, na))
    np.add.at(counts, (s, a), 1.0)
    return counts / s.size


# ---------------------------------------------------------------------------
# rate-distortion solver


@dataclass
class RDResult:
    """Outcome of a rate-distortion solve. ``rate`` is in bits."""

    rate: float
    policy: np.ndarray
    distortion: float
    lower_bound: float = 0.0
    lam: float = float("nan")
    iterations: int = 0
    trace: list = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        return self.rate - self.lower_bound


def _project_rows(pi, r, lam):
    """Solve ``min_q KL(q||r) + lam/2 |q - pi_s|_1`` for every row exactly."""
    lo = r * math.exp(-lam / 2)
    hi = r * math.exp(lam / 2)
    live = r > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.concatenate([np.where(live, pi / hi, np.inf), np.where(live, pi / lo, np.inf)], axis=1)
    b.sort(axis=1)
    with np.errstate(invalid="ignore"):
        fb = np.clip(pi[:, None, :], b[:, :, None] * lo, b[:, :, None] * hi)
    fb[:, :, ~live] = 0.0
    fb = fb.sum(axis=2)
    fb[~np.isfinite(b)] = -np.inf
    n = pi.shape[0]
    idx = np.argmax(fb >= 1.0, axis=1)
    hit = fb[np.arange(n), idx] >= 1.0
    c = np.empty(n)
    # rows that never reach 1 at a finite breakpoint: every live arm is at its lower clip
    c[~hit] = 1.0 / lo.sum()
    rows = np.nonzero(hit)[0]
    i1 = idx[rows]
    b1 = b[rows, i1]
    f1 = fb[rows, i1]
    b0 = np.where(i1 > 0, b[rows, np.maximum(i1 - 1, 0)], 0.0)
    f0 = np.where(i1 > 0, fb[rows, np.maximum(i1 - 1, 0)], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        c[rows] = np.where(f1 > f0, b0 + (1.0 - f0) * (b1 - b0) / (f1 - f0), b1)
    q = np.clip(pi, c[:, None] * lo, c[:, None] * hi)
    q[:, ~live] = 0.0
    return q / q.sum(axis=1, keepdims=True), c


def _tv_rows(ps, q, pi):
    return 0.5 * float(ps @ np.abs(q - pi).sum(axis=1))


def _dual_bound(ps, pi, r, q, c, lam):
    """Lower bound (nats) on ``min_Q I + lam*TV`` from the current iterate."""
    half = lam / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        y = -np.log(q / (c[:, None] * r[None, :]))
    y = np.where(np.isfinite(y), np.clip(y, -half, half), half)
    w = np.exp(-y)
    z = w @ r
    v = (ps / z) @ w
    return float(ps @ (-np.log(z) - (y * pi).sum(axis=1)) - math.log(v.max()))


def _solve_penalized(ps, pi, lam, r0, tol_nats, max_iter, check_every=10):
    """Alternating minimisation at fixed ``lam``. Returns (q, r, upper, lower, iters)."""
    r = r0.copy()
    upper = lower = float("nan")
    it = 0
    while it < max_iter:
        q, c = _project_rows(pi, r, lam)
        r = ps @ q
        it += 1
        if it % check_every == 0 or it == max_iter:
            q2, c2 = _project_rows(pi, r, lam)
            upper = _mi_nats(ps, q) + lam * _tv_rows(ps, q, pi)
            lower = _dual_bound(ps, pi, r, q2, c2, lam)
            if upper - lower <= tol_nats:
                break
    return q, r, upper, lower, it


def _prepare(state_dist, target_policy):
    ps = _as_simplex(state_dist, "state_dist")
    pi = check_policy(target_policy, ps.shape[0]).copy()
    null = ps == 0
    pi[null] = 1.0 / pi.shape[1]
    return ps, pi, null


def _finish(ps, null, q):
    q = q.copy()
    q[null] = 1.0 / q.shape[1]
    return q


def best_state_independent(state_dist, target_policy):
    """Closest state-independent policy in total variation.

    Returns ``(distortion, q)`` where ``q`` is a single action distribution;
    solved as a linear program.
    """
    ps, pi, _ = _prepare(state_dist, target_policy)
    ns, k = pi.shape
    # variables: q (k), t (ns*k) with t >= |q - pi|
    cost = np.concatenate([np.zeros(k), 0.5 * np.repeat(ps, k)])
    eye = np.eye(k)
    a_ub = []
    b_ub = []
    for s in range(ns):
        blk = np.zeros((k, ns * k))
        blk[:, s * k:(s + 1) * k] = -np.eye(k)
        a_ub.append(np.hstack([eye, blk]))
        b_ub.append(pi[s])
        a_ub.append(np.hstack([-eye, blk]))
        b_ub.append(-pi[s])
    a_eq = np.concatenate([np.ones(k), np.zeros(ns * k)])[None, :]
    res = linprog(cost, A_ub=np.vstack(a_ub), b_ub=np.concatenate(b_ub), A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (k + ns * k), method="highs")
    if not res.success:
        raise SolverError(f"state-independent projection failed: {res.message}")
    q = np.clip(res.x[:k], 0, None)
    q /= q.sum()
    return _tv_rows(ps, np.broadcast_to(q, pi.shape), pi), q


class _Curve:
    """Penalised solutions of one instance, cached by ``lam`` with warm starts."""

    def __init__(self, ps, pi, tol_nats, max_iter, trace):
        self.ps, self.pi = ps, pi
        self.tol = tol_nats
        self.max_iter = max_iter
        self.trace = trace
        self.iterations = 0
        self.best_dual = 0.0  # max over lam of (lower(lam) - lam * D); rates are non-negative
        self._r = None
        marg = ps @ pi
        k = pi.shape[1]
        self._r0 = 0.9 * marg + 0.1 / k

    def at(self, lam, target_d=None):
        r0 = self._r0 if self._r is None else 0.5 * self._r + 0.5 * self._r0
        q, r, upper, lower, it = _solve_penalized(self.ps, self.pi, lam, r0, self.tol, self.max_iter)
        self._r = r
        self.iterations += it
        rate = _mi_nats(self.ps, q)
        dist = _tv_rows(self.ps, q, self.pi)
        if target_d is not None:
            self.best_dual = max(self.best_dual, lower - lam * target_d)
        if self.trace is not None:
            self.trace.append((lam, it, rate / LN2, dist, upper / LN2, lower / LN2))
        return q, rate, dist, upper - lower


def _mix(q_a, q_b, theta):
    return theta * q_a + (1 - theta) * q_b


def _largest_theta(fn, limit, steps=60):
    """Largest theta in [0, 1] with ``fn(theta) <= limit``, assuming fn(0) <= limit and fn convex."""
    if fn(1.0) <= limit:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if fn(mid) <= limit:
            lo = mid
        else:
            hi = mid
    return lo


def rd_policy_compression(state_dist, target_policy, D: float, tol: float = 1e-4,
                          max_iter: int = 100_000, trace_csv=None, strict: bool = True) -> RDResult:
    """Minimum rate (bits) of a policy within total variation ``D`` of ``target_policy``.

    Args:
        state_dist: state distribution ``P_S``.
        target_policy: the decision-maker's policy ``pi(a|s)``.
        D: distortion budget on the joint distributions.
        tol: certified accuracy of the returned rate, in bits.
        max_iter: cap on the total number of alternating-minimisation steps.
        trace_csv: optional path; per-``lam`` iteration records are written there.
        strict: raise ``SolverError`` if the tolerance is not certified.

    Returns:
        ``RDResult`` with the achieved rate and a feasible minimiser.
    """
    if D < 0:
        raise ValueError(f"distortion must be non-negative, got {D}")
    ps, pi, null = _prepare(state_dist, target_policy)
    full_rate = _mi_nats(ps, pi)
    if D == 0 or full_rate == 0:
        return RDResult(full_rate / LN2, _finish(ps, null, pi), 0.0, full_rate / LN2)
    d0, q0 = best_state_independent(ps, pi)
    if D >= d0:
        return RDResult(0.0, _finish(ps, null, np.tile(q0, (pi.shape[0], 1))), d0, 0.0, lam=0.0)

    trace = [] if trace_csv is not None else None
    tol_n = tol * LN2
    curve = _Curve(ps, pi, tol_n / 4, max_iter, trace)
    # bracket: lam_lo violates the budget, lam_hi satisfies it
    lam_lo, q_lo, r_lo, d_lo = 0.0, np.tile(q0, (pi.shape[0], 1)), 0.0, d0
    lam_hi, q_hi, r_hi, d_hi = 1.0, None, None, None
    while True:
        q, r, d, _ = curve.at(lam_hi, D)
        if d <= D:
            q_hi, r_hi, d_hi = q, r, d
            break
        lam_lo, q_lo, r_lo, d_lo = lam_hi, q, r, d
        lam_hi *= 2
        if lam_hi > MAX_LAMBDA:
            q_hi, r_hi, d_hi = pi, full_rate, 0.0
            break

    def best_feasible():
        if d_hi >= D or d_lo <= d_hi:
            return q_hi, r_hi, d_hi
        theta = _largest_theta(lambda t: _tv_rows(ps, _mix(q_lo, q_hi, t), pi), D)
        qm = _mix(q_lo, q_hi, theta)
        rm = _mi_nats(ps, qm)
        if rm < r_hi:
            return qm, rm, _tv_rows(ps, qm, pi)
        return q_hi, r_hi, d_hi

    q_best, r_best, d_best = best_feasible()
    for _ in range(200):
        if r_best - curve.best_dual <= tol_n or curve.iterations >= max_iter:
            break
        lam = 0.5 * (lam_lo + lam_hi)
        q, r, d, _ = curve.at(lam, D)
        if d <= D:
            lam_hi, q_hi, r_hi, d_hi = lam, q, r, d
        else:
            lam_lo, q_lo, r_lo, d_lo = lam, q, r, d
        q_best, r_best, d_best = best_feasible()
        if lam_hi - lam_lo < 1e-12:
            break

    result = RDResult(r_best / LN2, _finish(ps, null, q_best), d_best,
                      max(curve.best_dual, 0.0) / LN2, lam=lam_hi, iterations=curve.iterations,
                      trace=trace or [])
    if trace_csv is not None:
        _write_trace(trace_csv, trace)
    if result.gap > tol:
        msg = f"rate not certified to {tol} bits (gap {result.gap:.3g}) after {curve.iterations} iterations"
        if strict:
            raise SolverError(msg, best=result)
        log.warning(msg)
    return result


def rate_to_distortion(state_dist, target_policy, R: float, tol: float = 1e-4,
                       max_iter: int = 100_000, lam_hint: float | None = None) -> RDResult:
    """Least-distorted policy whose rate does not exceed ``R`` bits.

    The returned ``RDResult.distortion`` is the minimal total variation
    ``D`` with ``R(D) <= R``; ``policy`` is a matching conveyable policy.
    Bisects the Lagrange multiplier until the rate bracket is below ``tol``.
    ``lam_hint`` (e.g. ``RDResult.lam`` of a previous, similar call) only
    changes where the bracket search starts.
    """
    if R < 0:
        raise ValueError(f"rate must be non-negative, got {R}")
    ps, pi, null = _prepare(state_dist, target_policy)
    full_rate = _mi_nats(ps, pi)
    r_n = R * LN2
    if r_n >= full_rate:
        return RDResult(full_rate / LN2, _finish(ps, null, pi), 0.0, full_rate / LN2)
    if R == 0:
        d0, q0 = best_state_independent(ps, pi)
        return RDResult(0.0, _finish(ps, null, np.tile(q0, (pi.shape[0], 1))), d0, 0.0, lam=0.0)

    q_lo = i_lo = d_lo = None
    tol_n = tol * LN2
    curve = _Curve(ps, pi, tol_n / 4, max_iter, None)
    q_hi, i_hi, d_hi = pi, full_rate, 0.0
    hinted = lam_hint is not None and 0 < lam_hint < MAX_LAMBDA
    factor = 1.25 if hinted else 2.0
    lam = lam_hint if hinted else 1.0
    lam_lo, lam_hi = 0.0, MAX_LAMBDA
    q, i, d, _ = curve.at(lam)
    if i > r_n:
        lam_hi, q_hi, i_hi, d_hi = lam, q, i, d
        while lam > 1e-6:
            lam /= factor
            q, i, d, _ = curve.at(lam)
            if i <= r_n:
                lam_lo, q_lo, i_lo, d_lo = lam, q, i, d
                break
            lam_hi, q_hi, i_hi, d_hi = lam, q, i, d
        if q_lo is None:
            d0, q0 = best_state_independent(ps, pi)
            q_lo, i_lo, d_lo = np.tile(q0, (pi.shape[0], 1)), 0.0, d0
    else:
        lam_lo, q_lo, i_lo, d_lo = lam, q, i, d
        while lam * factor <= MAX_LAMBDA:
            lam *= factor
            q, i, d, _ = curve.at(lam)
            if i > r_n:
                lam_hi, q_hi, i_hi, d_hi = lam, q, i, d
                break
            lam_lo, q_lo, i_lo, d_lo = lam, q, i, d
    while i_hi - i_lo > tol_n and lam_hi - lam_lo > 1e-12 and curve.iterations < max_iter:
        lam = 0.5 * (lam_lo + lam_hi)
        q, i, d, _ = curve.at(lam)
        if i > r_n:
            lam_hi, q_hi, i_hi, d_hi = lam, q, i, d
        else:
            lam_lo, q_lo, i_lo, d_lo = lam, q, i, d
    theta = _largest_theta(lambda t: _mi_nats(ps, _mix(q_hi, q_lo, t)), r_n)
    qm = _mix(q_hi, q_lo, theta)
    dm = _tv_rows(ps, qm, pi)
    if dm > d_lo:
        qm, dm = q_lo, d_lo
    return RDResult(_mi_nats(ps, qm) / LN2, _finish(ps, null, qm), dm, lam=lam_lo,
                    iterations=curve.iterations)


def _write_trace(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lam", "iterations", "rate_bits", "distortion", "upper_bits", "lower_bits"])
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
