"""Domain types for relational-event data, excitation kernels, and model parameters.

All types are immutable after construction (arrays are marked read-only), so
they are safe to share across worker threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    EmptyInputError,
    NegativeTimeError,
    NodeOutOfRangeError,
    SamePairError,
    SelfLoopError,
    TieBreakWarning,
    ValidationError,
)


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class SlopeConstraint(Enum):
    """Sign constraint on the baseline slope during optimization."""

    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNCONSTRAINED = "unconstrained"

    def admits(self, theta1: float) -> bool:
        if self is SlopeConstraint.POSITIVE:
            return theta1 > 0
        if self is SlopeConstraint.NEGATIVE:
            return theta1 < 0
        return True

    def bounds(self, margin: float = 1e-8):
        """Closed box handed to bound-constrained solvers for theta1."""
        if self is SlopeConstraint.POSITIVE:
            return (margin, None)
        if self is SlopeConstraint.NEGATIVE:
            return (None, -margin)
        return (None, None)


@dataclass(frozen=True)
class EventSequence:
    """Time-ordered relational events (sender, receiver, time) over n nodes."""

    senders: np.ndarray
    receivers: np.ndarray
    times: np.ndarray
    n_nodes: int
    horizon: float

    def __post_init__(self):
        object.__setattr__(self, "senders", _readonly(np.asarray(self.senders, dtype=np.int64)))
        object.__setattr__(self, "receivers", _readonly(np.asarray(self.receivers, dtype=np.int64)))
        object.__setattr__(self, "times", _readonly(np.asarray(self.times, dtype=np.float64)))
        if not (len(self.senders) == len(self.receivers) == len(self.times)):
            raise ValidationError("senders, receivers, and times must have equal length")
        if self.horizon <= 0:
            raise ValidationError("horizon must be positive")

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return zip(self.senders.tolist(), self.receivers.tolist(), self.times.tolist())

    def as_tuples(self):
        return list(self)


@dataclass(frozen=True)
class PairHistory:
    """Per ordered pair, the strictly sorted event times of that pair."""

    n_nodes: int
    _times: dict = field(repr=False)

    def times(self, u: int, v: int) -> np.ndarray:
        return self._times.get((u, v), _EMPTY)

    def pairs(self):
        """Ordered pairs that have at least one event, in sorted order."""
        return sorted(self._times.keys())

    def total_events(self) -> int:
        return sum(len(t) for t in self._times.values())


_EMPTY = _readonly(np.empty(0, dtype=np.float64))


@dataclass(frozen=True)
class KernelSpec:
    """Sum-of-exponentials excitation kernel: decay rates and mixture weights.

    Decays are stored in strictly increasing order; weights follow their decay
    and must sum to 1 within 1e-12.
    """

    betas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if betas.ndim != 1 or betas.shape != weights.shape or betas.size == 0:
            raise ValidationError("betas and weights must be equal-length 1-D arrays")
        order = np.argsort(betas)
        betas, weights = betas[order], weights[order]
        if np.any(betas <= 0):
            raise ValidationError("decay rates must be strictly positive")
        if np.any(np.diff(betas) <= 0):
            raise ValidationError("decay rates must be distinct")
        if np.any(weights < 0):
            raise ValidationError("kernel weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError(f"kernel weights must sum to 1, got {weights.sum()!r}")
        object.__setattr__(self, "betas", _readonly(betas))
        object.__setattr__(self, "weights", _readonly(weights))

    @property
    def n_kernels(self) -> int:
        return len(self.betas)

    @property
    def weighted_rates(self) -> np.ndarray:
        """C_b * beta_b, the jump each kernel contributes per unit of alpha."""
        return self.weights * self.betas


@dataclass(frozen=True)
class ModelParams:
    """Latent positions, slope/intercept, jump sizes, and nodal effects."""

    Z: np.ndarray
    theta1: float
    theta2: float
    alpha1: float
    alpha2: float
    delta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=np.float64)
        delta = np.asarray(self.delta, dtype=np.float64)
        gamma = np.asarray(self.gamma, dtype=np.float64)
        if Z.ndim != 2:
            raise ValidationError("Z must be an n x d matrix")
        n = Z.shape[0]
        if delta.shape != (n,) or gamma.shape != (n,):
            raise ValidationError("delta and gamma must be length-n vectors matching Z")
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ValidationError("jump sizes alpha1 and alpha2 must be nonnegative")
        object.__setattr__(self, "Z", _readonly(Z))
        object.__setattr__(self, "delta", _readonly(delta))
        object.__setattr__(self, "gamma", _readonly(gamma))
        object.__setattr__(self, "theta1", float(self.theta1))
        object.__setattr__(self, "theta2", float(self.theta2))
        object.__setattr__(self, "alpha1", float(self.alpha1))
        object.__setattr__(self, "alpha2", float(self.alpha2))

    @property
    def n_nodes(self) -> int:
        return self.Z.shape[0]

    @property
    def dim(self) -> int:
        return self.Z.shape[1]


def squared_distances(Z: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between rows of Z."""
    sq = np.sum(Z * Z, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def log_baseline_matrix(params: ModelParams) -> np.ndarray:
    """n x n matrix of log baseline rates; the diagonal is set to -inf."""
    d2 = squared_distances(params.Z)
    out = -params.theta1 * d2 + params.theta2 + params.delta[:, None] + params.gamma[None, :]
    np.fill_diagonal(out, -np.inf)
    return out


def baseline_rate(params: ModelParams, u: int, v: int) -> float:
    """Baseline event rate for the ordered pair (u, v)."""
    if u == v:
        raise SamePairError(u)
    dz = params.Z[u] - params.Z[v]
    return float(np.exp(-params.theta1 * float(dz @ dz) + params.theta2
                        + params.delta[u] + params.gamma[v]))


def validate_events(raw, n_nodes: int, horizon: float | None = None) -> EventSequence:
    """Sort, validate, and tie-break a raw list of (sender, receiver, time) triples.

    Duplicate timestamps within one ordered pair are perturbed upward by one
    ulp each (a TieBreakWarning reports how many), keeping the conditional
    intensity well-defined at every event time.  The horizon defaults to the
    latest event time.
    """
    raw = list(raw)
    if not raw:
        raise EmptyInputError()
    senders = np.empty(len(raw), dtype=np.int64)
    receivers = np.empty(len(raw), dtype=np.int64)
    times = np.empty(len(raw), dtype=np.float64)
    for i, (u, v, t) in enumerate(raw):
        u, v, t = int(u), int(v), float(t)
        if u == v:
            raise SelfLoopError(i)
        if not (0 <= u < n_nodes and 0 <= v < n_nodes):
            raise NodeOutOfRangeError(i)
        if t < 0:
            raise NegativeTimeError(i)
        senders[i], receivers[i], times[i] = u, v, t
    order = np.argsort(times, kind="stable")
    senders, receivers, times = senders[order], receivers[order], times[order]

    times, changed = _break_in_pair_ties(senders, receivers, times, horizon)
    if changed:
        # one-ulp bumps can reorder events that were exactly tied across pairs
        order = np.argsort(times, kind="stable")
        senders, receivers, times = senders[order], receivers[order], times[order]

    t_max = float(times[-1]) if len(times) else 0.0
    if horizon is None:
        horizon = t_max if t_max > 0 else 1.0
    elif t_max > horizon:
        raise ValidationError(f"event time {t_max} exceeds horizon {horizon}")
    return EventSequence(senders, receivers, times, n_nodes=n_nodes, horizon=float(horizon))


def _break_in_pair_ties(senders, receivers, times, horizon):
    by_pair: dict = {}
    for i in range(len(times)):
        by_pair.setdefault((senders[i], receivers[i]), []).append(i)
    bumped = 0
    times = times.copy()
    for idx in by_pair.values():
        ts = times[idx]
        orig_last = ts[-1]
        for j in range(1, len(ts)):
            if ts[j] <= ts[j - 1]:
                ts[j] = np.nextafter(ts[j - 1], np.inf)
                bumped += 1
        if horizon is not None and ts[-1] > horizon and orig_last <= horizon:
            # duplicates sat exactly at the horizon: step the run downward instead
            ts[-1] = horizon
            for j in range(len(ts) - 2, -1, -1):
                if ts[j] >= ts[j + 1]:
                    ts[j] = np.nextafter(ts[j + 1], -np.inf)
        times[idx] = ts
    if bumped:
        warnings.warn(
            f"perturbed {bumped} duplicate in-pair timestamps by one ulp",
            TieBreakWarning,
            stacklevel=3,
        )
    return times, bumped > 0


def build_pair_histories(events: EventSequence) -> PairHistory:
    """Group a validated event sequence into per-ordered-pair time arrays."""
    grouped: dict = {}
    for u, v, t in events:
        grouped.setdefault((u, v), []).append(t)
    table = {pair: _readonly(np.asarray(ts, dtype=np.float64)) for pair, ts in grouped.items()}
    return PairHistory(n_nodes=events.n_nodes, _times=table)


def merge_histories(hist: PairHistory, horizon: float, n_nodes: int | None = None) -> EventSequence:
    """Inverse of build_pair_histories: flatten per-pair times back to one sequence."""
    senders, receivers, times = [], [], []
    for (u, v) in hist.pairs():
        ts = hist.times(u, v)
        senders.extend([u] * len(ts))
        receivers.extend([v] * len(ts))
        times.extend(ts.tolist())
    order = np.argsort(np.asarray(times), kind="stable")
    return EventSequence(
        np.asarray(senders, dtype=np.int64)[order],
        np.asarray(receivers, dtype=np.int64)[order],
        np.asarray(times, dtype=np.float64)[order],
        n_nodes=n_nodes if n_nodes is not None else hist.n_nodes,
        horizon=horizon,
    )
