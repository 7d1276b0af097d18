"""Shared oracles and instance generators for the test suite.

Oracles are deliberately naive (direct double sums, adaptive quadrature,
central finite differences) and independent of the library's recursive
evaluation paths.
"""

import numpy as np
from scipy import integrate

import lsh
from lsh.likelihood import IntegrationMode, params_from_vector, params_to_vector


def make_kernel(rng, max_b=3):
    B = int(rng.integers(1, max_b + 1))
    betas = np.sort(rng.uniform(0.2, 3.0, B)) * np.arange(1, B + 1)
    weights = rng.dirichlet(np.ones(B))
    return lsh.KernelSpec(betas=betas, weights=weights)


def random_instance(rng, n=3, d=2, k=40, T=20.0, max_b=3, z_scale=1.0, both_signs=True,
                    sign=None):
    """Random parameters, kernel, and events with moderate baseline magnitudes."""
    kernel = make_kernel(rng, max_b)
    if sign is None:
        sign = rng.choice([-1.0, 1.0]) if both_signs else 1.0
    theta1 = sign * rng.uniform(0.3, 1.2)
    # keep |log mu| modest so quadrature and finite differences stay accurate
    scale = z_scale if sign > 0 else 0.4 * z_scale
    params = lsh.ModelParams(
        Z=rng.normal(0.0, scale, (n, d)),
        theta1=theta1,
        theta2=rng.uniform(-2.5, -0.5),
        alpha1=rng.uniform(0.05, 0.4),
        alpha2=rng.uniform(0.05, 0.4),
        delta=rng.normal(0.0, 0.3, n),
        gamma=rng.normal(0.0, 0.3, n),
    )
    raw = []
    while len(raw) < k:
        u, v = rng.integers(0, n, 2)
        if u != v:
            raw.append((int(u), int(v), float(rng.uniform(0, T))))
    events = lsh.validate_events(raw, n, horizon=T)
    return params, kernel, events


def naive_intensity(mu, alpha1, alpha2, kernel, hist_uv, hist_vu, t):
    """Direct double-sum intensity, no recursion."""
    lam = mu
    for tj in hist_uv[hist_uv < t]:
        lam += alpha1 * float(np.sum(kernel.weights * kernel.betas * np.exp(-kernel.betas * (t - tj))))
    for tj in hist_vu[hist_vu < t]:
        lam += alpha2 * float(np.sum(kernel.weights * kernel.betas * np.exp(-kernel.betas * (t - tj))))
    return lam


def quad_compensator(mu, alpha1, alpha2, kernel, hist_uv, hist_vu, t_end):
    """Adaptive quadrature of the intensity, piecewise between event times."""
    knots = np.unique(np.concatenate(
        ([0.0], hist_uv[hist_uv < t_end], hist_vu[hist_vu < t_end], [t_end])))
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        val, _ = integrate.quad(
            lambda s: naive_intensity(mu, alpha1, alpha2, kernel, hist_uv, hist_vu, s),
            a, b, limit=200)
        total += val
    return total


def closed_compensator(mu, alpha1, alpha2, kernel, hist_uv, hist_vu, t_end):
    """Closed form computed directly from the sums, no recursion reuse."""
    c = mu * t_end
    for tj in hist_uv[hist_uv < t_end]:
        c += alpha1 * float(np.sum(kernel.weights * (1.0 - np.exp(-kernel.betas * (t_end - tj)))))
    for tj in hist_vu[hist_vu < t_end]:
        c += alpha2 * float(np.sum(kernel.weights * (1.0 - np.exp(-kernel.betas * (t_end - tj)))))
    return c


def naive_log_likelihood(params, kernel, events, mode, compensator="closed"):
    """O(k^2) evaluation over every ordered pair."""
    hist = lsh.build_pair_histories(events)
    comp = quad_compensator if compensator == "quad" else closed_compensator
    total = 0.0
    for u in range(events.n_nodes):
        for v in range(events.n_nodes):
            if u == v:
                continue
            hist_uv, hist_vu = hist.times(u, v), hist.times(v, u)
            mu = lsh.baseline_rate(params, u, v)
            if mode is IntegrationMode.PER_PAIR:
                if len(hist_uv) == 0:
                    continue
                t_stop = float(hist_uv[-1])
            else:
                t_stop = events.horizon
            for t in hist_uv:
                total += np.log(naive_intensity(mu, params.alpha1, params.alpha2,
                                                kernel, hist_uv, hist_vu, t))
            total -= comp(mu, params.alpha1, params.alpha2, kernel, hist_uv, hist_vu, t_stop)
    return total


def fd_gradient(params, kernel, events, mode, h_rel=1e-5):
    """Central finite differences of the NLL over the full parameter vector."""
    x0 = params_to_vector(params)
    fd = np.zeros_like(x0)
    for i in range(len(x0)):
        h = h_rel * max(1.0, abs(x0[i]))
        xp = x0.copy()
        xp[i] += h
        xm = x0.copy()
        xm[i] -= h
        fd[i] = -(lsh.log_likelihood(params_from_vector(params, xp), kernel, events, mode)
                  - lsh.log_likelihood(params_from_vector(params, xm), kernel, events, mode)) / (2 * h)
    return fd


def componentwise_rel(a, b):
    return np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


def enumeration_auc(scores, labels):
    """Exhaustive positive-negative pair enumeration with half credit for ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))
