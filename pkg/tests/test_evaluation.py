import numpy as np
import pytest
from scipy import integrate

import lsh
from helpers import enumeration_auc, naive_intensity, random_instance
from lsh.errors import (
    EmptyTestError,
    SingleClassError,
    TooFewEventsError,
    WindowTooLargeError,
)

KERNEL1 = lsh.KernelSpec(betas=[1.0], weights=[1.0])


def uniform_events(k, n=4, T=100.0, seed=0):
    rng = np.random.default_rng(seed)
    raw = []
    while len(raw) < k:
        u, v = rng.integers(0, n, 2)
        if u != v:
            raw.append((int(u), int(v), float(rng.uniform(0, T))))
    return lsh.validate_events(raw, n, horizon=T)


class TestSplitEvents:
    def test_ten_events(self):
        events = uniform_events(10)
        train, test, split_time = lsh.split_events(events)
        assert len(train) == 7 and len(test) == 3
        assert split_time == train.times[-1]

    def test_reality_sized_split(self):
        events = uniform_events(2148, n=30, T=1000.0)
        train, test, _ = lsh.split_events(events)
        assert len(train) == 1503 and len(test) == 645

    def test_order_and_count_preserved(self):
        events = uniform_events(57)
        train, test, _ = lsh.split_events(events)
        merged = np.concatenate((train.times, test.times))
        assert np.array_equal(merged, events.times)

    def test_full_fraction_gives_empty_test(self):
        events = uniform_events(20)
        train, test, _ = lsh.split_events(events, lsh.SplitSpec(train_fraction=1.0))
        assert len(test) == 0
        p = lsh.ModelParams(Z=np.zeros((4, 1)), theta1=1.0, theta2=-1.0, alpha1=0.0,
                            alpha2=0.0, delta=np.zeros(4), gamma=np.zeros(4))
        with pytest.raises(EmptyTestError):
            lsh.test_loglik_per_event(p, KERNEL1, train, test, events.horizon)

    def test_too_few_events(self):
        with pytest.raises(TooFewEventsError):
            lsh.split_events(uniform_events(9))


class TestTestLoglik:
    def test_poisson_closed_form(self):
        events = uniform_events(40, n=3, T=60.0, seed=1)
        train, test, split_time = lsh.split_events(events)
        rng = np.random.default_rng(2)
        p = lsh.ModelParams(Z=rng.normal(0, 0.5, (3, 2)), theta1=1.0, theta2=-1.2,
                            alpha1=0.0, alpha2=0.0,
                            delta=rng.normal(0, 0.2, 3), gamma=rng.normal(0, 0.2, 3))
        expected = 0.0
        for u in range(3):
            for v in range(3):
                if u == v:
                    continue
                mu = lsh.baseline_rate(p, u, v)
                k_uv = int(np.sum((test.senders == u) & (test.receivers == v)))
                expected += k_uv * np.log(mu) - mu * (events.horizon - split_time)
        expected /= len(test)
        got = lsh.test_loglik_per_event(p, KERNEL1, train, test, events.horizon)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_matches_quadrature_replay(self):
        rng = np.random.default_rng(3)
        params, kernel, events = random_instance(rng, n=3, k=40, T=30.0)
        train, test, _ = lsh.split_events(events)
        t0 = float(train.times[-1])
        hist = lsh.build_pair_histories(events)
        total = 0.0
        for u in range(3):
            for v in range(3):
                if u == v:
                    continue
                h_uv, h_vu = hist.times(u, v), hist.times(v, u)
                mu = lsh.baseline_rate(params, u, v)
                k_test = int(np.sum((test.senders == u) & (test.receivers == v)))
                for t in h_uv[len(h_uv) - k_test:]:
                    total += np.log(naive_intensity(mu, params.alpha1, params.alpha2,
                                                    kernel, h_uv, h_vu, t))
                knots = np.unique(np.concatenate(
                    ([t0], h_uv[(h_uv > t0)], h_vu[(h_vu > t0)], [events.horizon])))
                for a, b in zip(knots[:-1], knots[1:]):
                    val, _ = integrate.quad(
                        lambda s: naive_intensity(mu, params.alpha1, params.alpha2,
                                                  kernel, h_uv, h_vu, s), a, b, limit=200)
                    total -= val
        expected = total / len(test)
        got = lsh.test_loglik_per_event(params, kernel, train, test, events.horizon)
        assert got == pytest.approx(expected, rel=1e-6)


class TestLinkProbability:
    def flat_params(self, mu, n=3):
        return lsh.ModelParams(Z=np.zeros((n, 1)), theta1=1.0, theta2=float(np.log(mu)),
                               alpha1=0.0, alpha2=0.0, delta=np.zeros(n), gamma=np.zeros(n))

    def test_poisson_window(self):
        p = self.flat_params(0.2)
        events = uniform_events(12, n=3, T=50.0)
        probs = lsh.link_probability_window(p, KERNEL1, events, 10.0, 2.0)
        off = ~np.eye(3, dtype=bool)
        assert np.allclose(probs[off], 1.0 - np.exp(-0.4), rtol=1e-12)
        assert np.all(np.isnan(np.diag(probs)))

    def test_vanishing_window(self):
        rng = np.random.default_rng(4)
        params, kernel, events = random_instance(rng, n=3, k=20)
        probs = lsh.link_probability_window(params, kernel, events, events.horizon / 2, 1e-12)
        off = ~np.eye(3, dtype=bool)
        assert np.all(probs[off] < 1e-10)

    def test_matches_quadrature_of_frozen_intensity(self):
        rng = np.random.default_rng(5)
        params, kernel, events = random_instance(rng, n=3, k=25, T=20.0)
        t0, w = 12.0, 3.0
        probs = lsh.link_probability_window(params, kernel, events, t0, w)
        hist = lsh.build_pair_histories(events)
        for u in range(3):
            for v in range(3):
                if u == v:
                    continue
                h_uv = hist.times(u, v)
                h_vu = hist.times(v, u)
                h_uv = h_uv[h_uv < t0]
                h_vu = h_vu[h_vu < t0]
                mu = lsh.baseline_rate(params, u, v)
                val, _ = integrate.quad(
                    lambda s: naive_intensity(mu, params.alpha1, params.alpha2,
                                              kernel, h_uv, h_vu, s), t0, t0 + w, limit=200)
                assert probs[u, v] == pytest.approx(1.0 - np.exp(-val), rel=1e-8)

    def test_monotone_in_window_length(self):
        rng = np.random.default_rng(6)
        params, kernel, events = random_instance(rng, n=3, k=20)
        off = ~np.eye(3, dtype=bool)
        prev = np.zeros(6)
        for w in (0.5, 1.0, 2.0, 4.0):
            probs = lsh.link_probability_window(params, kernel, events, 10.0, w)[off]
            assert np.all(probs >= prev - 1e-15)
            assert np.all((probs >= 0) & (probs < 1))
            prev = probs


class TestAuc:
    def test_perfect_separation(self):
        assert lsh.auc([0.9, 0.8, 0.7, 0.6], [1, 1, 0, 0]) == 1.0

    def test_reversed(self):
        assert lsh.auc([0.9, 0.8, 0.7, 0.6], [0, 0, 1, 1]) == 0.0

    def test_mixed(self):
        assert lsh.auc([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == 0.75

    def test_ties_give_half_credit(self):
        assert lsh.auc([0.5, 0.5], [1, 0]) == 0.5

    def test_matches_enumeration_with_ties(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            m = int(rng.integers(5, 40))
            scores = np.round(rng.uniform(0, 1, m), 1)  # force some ties
            labels = rng.integers(0, 2, m)
            if labels.min() == labels.max():
                continue
            assert lsh.auc(scores, labels) == enumeration_auc(scores, labels)

    def test_rank_invariance(self):
        rng = np.random.default_rng(8)
        scores = rng.uniform(0, 1, 30)
        labels = rng.integers(0, 2, 30)
        a = lsh.auc(scores, labels)
        b = lsh.auc(np.exp(5 * scores), labels)
        assert a == b

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassError):
            lsh.auc([0.1, 0.2], [1, 1])


class TestDynamicLinkPrediction:
    def test_self_consistent_scores_beat_noise(self):
        # strong baseline contrast: the model that generated the events scores high
        rng = np.random.default_rng(9)
        n = 8
        Z = rng.normal(0, 1.2, (n, 2))
        params = lsh.ModelParams(Z=Z, theta1=1.0, theta2=-1.0, alpha1=0.05, alpha2=0.05,
                                 delta=rng.normal(0, 0.8, n), gamma=rng.normal(0, 0.8, n))
        kernel = KERNEL1
        cfg = lsh.GenConfig(n_nodes=n, dimension=2, horizon=60.0, kernel=kernel, seed=1)
        events = lsh.simulate_network(cfg, params=params)
        result = lsh.dynamic_link_prediction(params, kernel, events, split_time=40.0,
                                             horizon=60.0, window_len=4.0,
                                             n_points=40, seed=2)
        assert result.mean_auc > 0.9

    def test_window_too_large(self):
        rng = np.random.default_rng(10)
        params, kernel, events = random_instance(rng, n=3, k=20)
        with pytest.raises(WindowTooLargeError):
            lsh.dynamic_link_prediction(params, kernel, events, split_time=15.0,
                                        horizon=20.0, window_len=10.0)

    def test_deterministic_and_threads_invariant(self):
        rng = np.random.default_rng(11)
        params, kernel, events = random_instance(rng, n=4, k=60, T=50.0)
        kw = dict(split_time=30.0, horizon=50.0, window_len=5.0, n_points=10, seed=3)
        a = lsh.dynamic_link_prediction(params, kernel, events, **kw)
        b = lsh.dynamic_link_prediction(params, kernel, events, threads=4, **kw)
        assert np.array_equal(a.aucs, b.aucs)
        assert a.mean_auc == b.mean_auc


class TestPpcStats:
    def test_reciprocated_triangle(self):
        raw = [(u, v, float(i)) for i, (u, v) in enumerate(
            [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)])]
        stats = lsh.ppc_stats(lsh.validate_events(raw, 3, horizon=10.0))
        assert stats.event_count == 6
        assert stats.reciprocity == 1.0
        assert stats.transitivity == 1.0
        assert stats.avg_clustering == 1.0
        assert stats.mean_degree == 2.0

    def test_directed_path(self):
        raw = [(0, 1, 1.0), (1, 2, 2.0)]
        stats = lsh.ppc_stats(lsh.validate_events(raw, 3, horizon=10.0))
        assert stats.event_count == 2
        assert stats.reciprocity == 0.0
        assert stats.transitivity == 0.0
        assert stats.avg_clustering == 0.0
        assert stats.mean_degree == pytest.approx(4.0 / 3.0)

    def test_timestamp_invariance(self):
        raw1 = [(0, 1, 1.0), (1, 2, 2.0), (0, 1, 3.0)]
        raw2 = [(0, 1, 5.0), (0, 1, 7.0), (1, 2, 6.0)]
        s1 = lsh.ppc_stats(lsh.validate_events(raw1, 3, horizon=10.0))
        s2 = lsh.ppc_stats(lsh.validate_events(raw2, 3, horizon=10.0))
        assert s1.event_count == s2.event_count
        assert s1.reciprocity == s2.reciprocity
        assert s1.mean_degree == s2.mean_degree


class TestPpcEnsemble:
    def test_single_simulation_mean_is_sample(self):
        rng = np.random.default_rng(12)
        n = 4
        params = lsh.ModelParams(Z=rng.normal(0, 1, (n, 2)), theta1=1.0, theta2=-1.0,
                                 alpha1=0.0, alpha2=0.0, delta=np.zeros(n), gamma=np.zeros(n))
        out = lsh.ppc_ensemble(params, KERNEL1, horizon=40.0, n_sims=1, seed=4)
        for summary in out.values():
            assert summary.mean == summary.samples[0]

    def test_poisson_mean_event_count(self):
        rng = np.random.default_rng(13)
        n = 5
        params = lsh.ModelParams(Z=rng.normal(0, 0.5, (n, 2)), theta1=1.0, theta2=-2.0,
                                 alpha1=0.0, alpha2=0.0, delta=np.zeros(n), gamma=np.zeros(n))
        T, sims = 50.0, 30
        mu = np.exp(lsh.core.log_baseline_matrix(params))
        expected = float(mu.sum()) * T
        out = lsh.ppc_ensemble(params, KERNEL1, horizon=T, n_sims=sims, seed=5)
        se = np.sqrt(expected / sims)
        assert abs(out["event_count"].mean - expected) < 3 * se

    def test_actual_recorded(self):
        rng = np.random.default_rng(14)
        params, kernel, events = random_instance(rng, n=4, k=30)
        actual = lsh.ppc_stats(events)
        out = lsh.ppc_ensemble(params, kernel, horizon=events.horizon, n_sims=2,
                               seed=6, actual=actual)
        assert out["event_count"].actual == float(len(events))
