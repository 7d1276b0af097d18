"""Predictive and generative evaluation: held-out likelihood, dynamic link
prediction with AUC, and posterior-predictive network statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np
import scipy.stats

from .core import (
    EventSequence,
    KernelSpec,
    ModelParams,
    build_pair_histories,
    log_baseline_matrix,
)
from .errors import (
    EmptyTestError,
    SingleClassError,
    TooFewEventsError,
    ValidationError,
    WindowTooLargeError,
)
from .likelihood import _integrated_excitation, pair_recursion
from .simulation import _SIM_STREAM, GenConfig, simulate_network
from ._parallel import parallel_map


@dataclass(frozen=True)
class SplitSpec:
    """Chronological split by event index."""

    train_fraction: float = 0.7

    def __post_init__(self):
        if not (0.0 < self.train_fraction <= 1.0):
            raise ValidationError("train_fraction must be in (0, 1]")


def split_events(events: EventSequence, spec: SplitSpec = SplitSpec()):
    """Split into (train, test, split_time); both halves keep the full node set."""
    k = len(events)
    if k < 10:
        raise TooFewEventsError(k, 10)
    m = int(math.floor(spec.train_fraction * k))
    train = EventSequence(events.senders[:m], events.receivers[:m], events.times[:m],
                          n_nodes=events.n_nodes, horizon=events.horizon)
    test = EventSequence(events.senders[m:], events.receivers[m:], events.times[m:],
                         n_nodes=events.n_nodes, horizon=events.horizon)
    split_time = float(events.times[m - 1])
    return train, test, split_time


def test_loglik_per_event(params: ModelParams, kernel: KernelSpec,
                          train: EventSequence, test: EventSequence,
                          horizon: float) -> float:
    """Mean held-out log-likelihood per test event.

    Intensities at test events condition on the full history (training events
    excite into the test window, test events excite later test events); the
    compensator covers only (split_time, horizon] for every ordered pair.
    """
    if len(test) == 0:
        raise EmptyTestError()
    t0 = float(train.times[-1])
    if horizon < float(test.times[-1]):
        raise ValidationError("horizon precedes the last test event")

    full = EventSequence(
        np.concatenate((train.senders, test.senders)),
        np.concatenate((train.receivers, test.receivers)),
        np.concatenate((train.times, test.times)),
        n_nodes=train.n_nodes, horizon=horizon,
    )
    hist = build_pair_histories(full)
    test_counts: dict = {}
    for u, v, _ in test:
        test_counts[(u, v)] = test_counts.get((u, v), 0) + 1

    log_mu = log_baseline_matrix(params)
    mu = np.exp(log_mu)
    cb = kernel.weighted_rates

    log_terms = 0.0
    comp_excite = 0.0
    for (u, v) in hist.pairs():
        t = hist.times(u, v)
        r = hist.times(v, u)
        k_test = test_counts.get((u, v), 0)
        if k_test:
            rec = pair_recursion(t, r, kernel.betas)
            excite = params.alpha1 * (cb @ rec.r_self) + params.alpha2 * (cb @ rec.r_recip)
            with np.errstate(divide="ignore"):
                log_ex = np.log(excite[-k_test:])
            log_terms += float(np.sum(np.logaddexp(log_mu[u, v], log_ex)))
        # each event list excites its own pair (alpha1) and its reverse pair
        # (alpha2) over the same window, so both factors apply to the same sum
        window_sum = (_integrated_excitation(kernel, t, horizon)
                      - _integrated_excitation(kernel, t, t0))
        comp_excite += (params.alpha1 + params.alpha2) * window_sum
    comp = (horizon - t0) * float(mu.sum()) + comp_excite
    return (log_terms - comp) / len(test)


def link_probability_window(params: ModelParams, kernel: KernelSpec,
                            history: EventSequence, t0: float,
                            window_len: float) -> np.ndarray:
    """Probability of at least one event per ordered pair in [t0, t0 + window].

    The history is frozen at t0 (events at or after t0 are ignored and no
    within-window updating happens), so the window compensator has a closed
    form and p = 1 - exp(-integrated intensity).  The diagonal is NaN.
    """
    n = params.n_nodes
    mu = np.exp(log_baseline_matrix(params))
    delta_comp = mu * window_len

    keep = history.times < t0
    if np.any(keep):
        sub = EventSequence(history.senders[keep], history.receivers[keep],
                            history.times[keep], n_nodes=n, horizon=t0)
        hist = build_pair_histories(sub)
        for (u, v) in hist.pairs():
            ts = hist.times(u, v)
            tail = _window_excitation(kernel, ts, t0, window_len)
            delta_comp[u, v] += params.alpha1 * tail
            delta_comp[v, u] += params.alpha2 * tail
    probs = 1.0 - np.exp(-delta_comp)
    np.fill_diagonal(probs, np.nan)
    return probs


def _window_excitation(kernel: KernelSpec, times: np.ndarray, t0: float, w: float) -> float:
    """Integral over [t0, t0+w] of the unit-alpha kernel sum from past events."""
    lags = t0 - times
    per = kernel.weights[:, None] * (np.exp(-kernel.betas[:, None] * lags[None, :])
                                     - np.exp(-kernel.betas[:, None] * (lags[None, :] + w)))
    return float(per.sum())


def auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC; ties contribute 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError()
    ranks = scipy.stats.rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class LinkPredictionResult:
    mean_auc: float
    std_auc: float
    aucs: np.ndarray
    times: np.ndarray
    n_skipped: int


def dynamic_link_prediction(params: ModelParams, kernel: KernelSpec,
                            events: EventSequence, split_time: float,
                            horizon: float, window_len: float,
                            n_points: int = 100, seed: int = 0,
                            threads: int = 1) -> LinkPredictionResult:
    """AUC of windowed link prediction at random test-period time points.

    Each sampled t falls in (split_time, horizon - window_len]; scores are the
    frozen-history window probabilities and labels mark ordered pairs with at
    least one event in [t, t + window].  Single-class windows are skipped and
    counted in n_skipped.
    """
    if horizon - window_len <= split_time:
        raise WindowTooLargeError(window_len, horizon - split_time)
    rng = np.random.default_rng(seed)
    t_points = rng.uniform(split_time, horizon - window_len, size=n_points)
    off_diag = ~np.eye(params.n_nodes, dtype=bool)

    def score_point(t):
        probs = link_probability_window(params, kernel, events, t, window_len)
        lo = np.searchsorted(events.times, t, side="left")
        hi = np.searchsorted(events.times, t + window_len, side="right")
        labels = np.zeros((params.n_nodes, params.n_nodes), dtype=np.int64)
        labels[events.senders[lo:hi], events.receivers[lo:hi]] = 1
        y = labels[off_diag]
        if y.min() == y.max():
            return None
        return auc(probs[off_diag], y)

    values = parallel_map(score_point, t_points, threads)
    kept = [(t, a) for t, a in zip(t_points, values) if a is not None]
    if not kept:
        raise SingleClassError()
    times = np.asarray([t for t, _ in kept])
    aucs = np.asarray([a for _, a in kept])
    return LinkPredictionResult(
        mean_auc=float(aucs.mean()),
        std_auc=float(aucs.std()),
        aucs=aucs,
        times=times,
        n_skipped=n_points - len(kept),
    )


@dataclass(frozen=True)
class PpcStats:
    """Static statistics of the aggregate graph plus the event count."""

    event_count: int
    transitivity: float
    reciprocity: float
    avg_clustering: float
    mean_degree: float

    def as_dict(self) -> dict:
        return {
            "event_count": float(self.event_count),
            "transitivity": self.transitivity,
            "reciprocity": self.reciprocity,
            "avg_clustering": self.avg_clustering,
            "mean_degree": self.mean_degree,
        }


def ppc_stats(events: EventSequence) -> PpcStats:
    """Aggregate-graph statistics: nodes with no events are excluded.

    Reciprocity is the fraction of directed edges whose reverse also exists;
    transitivity and average clustering (degree < 2 contributes 0) are taken
    on the undirected projection; mean degree is 2|E| / |V| on the projection.
    """
    D = nx.DiGraph()
    D.add_edges_from(zip(events.senders.tolist(), events.receivers.tolist()))
    U = D.to_undirected()
    n_directed = D.number_of_edges()
    recip = sum(1 for u, v in D.edges if D.has_edge(v, u)) / n_directed
    return PpcStats(
        event_count=len(events),
        transitivity=float(nx.transitivity(U)),
        reciprocity=float(recip),
        avg_clustering=float(nx.average_clustering(U)),
        mean_degree=2.0 * U.number_of_edges() / U.number_of_nodes(),
    )


@dataclass(frozen=True)
class PpcStatSummary:
    actual: float | None
    mean: float
    samples: list = field(default_factory=list)


def ppc_ensemble(params: ModelParams, kernel: KernelSpec, horizon: float,
                 n_sims: int = 15, seed: int = 0,
                 actual: PpcStats | None = None, threads: int = 1,
                 max_events_per_pair: int = 10_000_000) -> dict:
    """Simulate n_sims networks at fixed parameters and summarize each statistic."""
    base = GenConfig(
        n_nodes=params.n_nodes, dimension=params.dim, horizon=horizon,
        kernel=kernel, theta1=params.theta1, theta2=params.theta2,
        alpha1=params.alpha1, alpha2=params.alpha2, seed=seed,
        max_events_per_pair=max_events_per_pair,
    )

    def run(i):
        child = int(np.random.SeedSequence(seed, spawn_key=(_SIM_STREAM, i)).generate_state(1)[0])
        return ppc_stats(simulate_network(replace(base, seed=child), params=params)).as_dict()

    sampled = parallel_map(run, range(n_sims), threads)
    actual_dict = actual.as_dict() if actual is not None else {}
    out = {}
    for name in ("event_count", "transitivity", "reciprocity", "avg_clustering", "mean_degree"):
        samples = [s[name] for s in sampled]
        out[name] = PpcStatSummary(
            actual=actual_dict.get(name),
            mean=float(np.mean(samples)),
            samples=samples,
        )
    return out
