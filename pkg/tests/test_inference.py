import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_agent
from intermdm.distributions import make_rng
from intermdm.inference import (
    TRACE_FIELDS,
    acceptance_ratio,
    fit_single_agent,
    gibbs_integrated,
    initial_state,
    log_acceptance_ratios,
    mh_exchange,
    propose_sign,
    run,
    run_naming_game,
    sample_shared_signs,
)
from intermdm.metrics import ari
from intermdm.model import CommunicationType, ModelConfig


class TestProposeSign:
    def test_single_sign(self):
        assert propose_sign(1, [[0.5, 0.5]], [1.0], make_rng(0)) == 0

    def test_identity_theta(self):
        assert all(propose_sign(2, np.eye(4), np.full(4, 0.25), make_rng(s)) == 2 for s in range(20))

    def test_bayes_inversion_frequency(self):
        theta = np.array([[0.9, 0.1], [0.3, 0.7]])
        rng = make_rng(1)
        draws = [propose_sign(0, theta, [0.5, 0.5], rng) for _ in range(20_000)]
        assert abs(np.mean(np.array(draws) == 0) - 0.75) < 0.01

    def test_zero_normalizer(self):
        with pytest.raises(ValueError):
            propose_sign(0, [[0.0, 1.0], [0.0, 1.0]], [0.5, 0.5], make_rng(0))

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            propose_sign(5, np.eye(2), [0.5, 0.5], make_rng(0))


class TestAcceptanceRatio:
    def test_examples(self):
        theta = np.array([[0.2, 0.8], [0.9, 0.1]])
        assert acceptance_ratio(0, theta, 1, 1) == 1.0
        assert acceptance_ratio(0, theta, 0, 1) == pytest.approx(0.2 / 0.9, abs=1e-9)
        assert acceptance_ratio(0, theta, 1, 0) == 1.0

    def test_zero_denominator(self, caplog):
        theta = np.array([[0.0, 1.0], [0.5, 0.5], [0.0, 1.0]])
        assert acceptance_ratio(0, theta, 1, 0) == 1.0
        with caplog.at_level(logging.WARNING):
            assert acceptance_ratio(0, theta, 2, 0) == 1.0
        assert "0/0" in caplog.text

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32))
    def test_vectorized_matches_scalar(self, seed):
        rng = make_rng(seed)
        theta = rng.dirichlet(np.ones(4), size=3)
        c = rng.integers(0, 4, 20)
        wp, wc = rng.integers(0, 3, 20), rng.integers(0, 3, 20)
        z = np.exp(log_acceptance_ratios(c, np.log(theta), wp, wc))
        expected = [acceptance_ratio(c[i], theta, wp[i], wc[i]) for i in range(20)]
        assert np.allclose(z, expected, atol=1e-12)


def _toy(mode, seed=0):
    rng = make_rng(seed)
    obs_a = {"vision": rng.integers(0, 4, size=(8, 5))}
    obs_b = {"sound": rng.integers(0, 4, size=(8, 3))}
    cfg = ModelConfig(K=3, L=3, communication_type=mode, seed=seed)
    return cfg, obs_a, obs_b, initial_state(cfg, obs_a, obs_b, rng)


class TestExchange:
    @pytest.mark.parametrize("mode", ["proposed", "all_accept", "all_reject"])
    def test_speaker_and_inputs_untouched(self, mode):
        cfg, obs_a, obs_b, st_ = _toy(mode)
        speaker, listener = st_.agent_a.copy(), st_.agent_b.copy()
        w_before = st_.w_b.copy()
        res = mh_exchange(st_.agent_a, st_.agent_b, obs_b, st_.w_b, cfg, make_rng(1))
        assert st_.agent_a.equals(speaker) and st_.agent_b.equals(listener)
        assert np.array_equal(st_.w_b, w_before)
        assert res.w.shape == w_before.shape

    def test_all_reject_keeps_signs(self):
        cfg, obs_a, obs_b, st_ = _toy("all_reject")
        res = mh_exchange(st_.agent_a, st_.agent_b, obs_b, st_.w_b, cfg, make_rng(2))
        assert np.array_equal(res.w, st_.w_b) and res.accept_rate == 0.0

    def test_all_accept_takes_proposals(self):
        cfg, obs_a, obs_b, st_ = _toy("all_accept")
        res = mh_exchange(st_.agent_a, st_.agent_b, obs_b, st_.w_b, cfg, make_rng(3))
        assert np.array_equal(res.w, res.proposed) and res.accept_rate == 1.0

    def test_rejects_gibbs_mode(self):
        cfg, obs_a, obs_b, st_ = _toy("integrated_gibbs")
        with pytest.raises(ValueError):
            mh_exchange(st_.agent_a, st_.agent_b, obs_b, st_.w_b, cfg, make_rng(0))

    def test_acceptance_frequency_small(self):
        theta_l = np.array([[0.6, 0.4], [0.1, 0.9]])
        speaker = make_agent([[0.5, 0.5], [0.5, 0.5]], {"v": [[0.5, 0.5], [0.5, 0.5]]}, [0, 1])
        listener = make_agent(theta_l, {"v": [[0.5, 0.5], [0.5, 0.5]]}, [0, 1])
        obs = {"v": np.array([[1, 0], [0, 1]])}
        w_cur = np.array([0, 1])
        cfg = ModelConfig(K=2, L=2)
        rng = make_rng(4)
        hits, props = np.zeros(2), np.zeros(2)
        for _ in range(4000):
            res = mh_exchange(speaker, listener, obs, w_cur, cfg, rng)
            moved = res.proposed != w_cur
            props += moved
            hits += moved & res.accepted
        expected = [theta_l[1, 0] / theta_l[0, 0], theta_l[0, 1] / theta_l[1, 1]]
        assert np.allclose(hits / props, expected, atol=0.03)


class TestRuns:
    def test_zero_iterations(self):
        cfg, obs_a, obs_b, _ = _toy("proposed", seed=5)
        cfg.iterations = 0
        res = run_naming_game(cfg, obs_a, obs_b)
        fresh = initial_state(cfg, obs_a, obs_b, make_rng(cfg.seed))
        assert res.trace == [] and res.state.iteration == 0
        assert res.state.agent_a.equals(fresh.agent_a) and np.array_equal(res.state.w_a, fresh.w_a)

    @pytest.mark.parametrize("mode", [t.value for t in CommunicationType])
    def test_deterministic_and_schema(self, mode, small_dataset):
        cfg = ModelConfig(K=6, L=6, iterations=15, communication_type=mode, seed=11)
        a = run(cfg, small_dataset.observations_a, small_dataset.observations_b, small_dataset.true_labels)
        b = run(cfg, small_dataset.observations_a, small_dataset.observations_b, small_dataset.true_labels)
        assert len(a.trace) == 15 and tuple(a.trace[0]) == TRACE_FIELDS
        np.testing.assert_array_equal([list(r.values()) for r in a.trace],
                                      [list(r.values()) for r in b.trace])
        assert a.state.agent_b.equals(b.state.agent_b)

    def test_all_reject_never_moves_signs(self, small_dataset):
        cfg = ModelConfig(K=6, L=6, iterations=10, communication_type="all_reject", seed=2)
        init = initial_state(cfg, small_dataset.observations_a, small_dataset.observations_b,
                             make_rng(cfg.seed))
        seen = []
        run_naming_game(cfg, small_dataset.observations_a, small_dataset.observations_b,
                        callback=lambda s, r: seen.append((s.w_a.copy(), s.w_b.copy())))
        assert all(np.array_equal(wa, init.w_a) and np.array_equal(wb, init.w_b) for wa, wb in seen)

    def test_resume_from_state(self, small_dataset):
        obs_a, obs_b = small_dataset.observations_a, small_dataset.observations_b
        cfg = ModelConfig(K=6, L=6, iterations=5, seed=1)
        first = run_naming_game(cfg, obs_a, obs_b)
        second = run_naming_game(cfg, obs_a, obs_b, state=first.state)
        assert second.state.iteration == 10 and first.state.iteration == 5

    def test_label_length_checked(self, small_dataset):
        cfg = ModelConfig(K=6, L=6, iterations=1)
        with pytest.raises(ValueError):
            run(cfg, small_dataset.observations_a, small_dataset.observations_b, [0, 1])

    def test_kappa_rises(self, default_dataset):
        cfg = ModelConfig(iterations=100, seed=3)
        res = run_naming_game(cfg, default_dataset.observations_a, default_dataset.observations_b)
        labels = default_dataset.true_labels
        assert abs(ari(labels, res.state.w_a) - ari(labels, res.state.w_b)) < 0.05
        kappas = np.array([r["kappa"] for r in res.trace])
        assert kappas[0] < 0.3 and kappas[-10:].mean() > 0.9
        smooth = np.convolve(kappas, np.ones(10) / 10, mode="valid")
        assert smooth[::10][-1] >= smooth[::10][0]

    def test_gibbs_single_sign(self, small_dataset):
        cfg = ModelConfig(K=1, L=4, iterations=5, communication_type="integrated_gibbs")
        seen = []
        gibbs_integrated(cfg, small_dataset.observations_a, small_dataset.observations_b,
                         callback=lambda s, r: seen.append(s.w_a.copy()))
        assert all(np.all(w == 0) for w in seen)

    def test_gibbs_shares_signs(self, small_dataset):
        cfg = ModelConfig(K=6, L=6, iterations=3, communication_type="integrated_gibbs")
        res = gibbs_integrated(cfg, small_dataset.observations_a, small_dataset.observations_b)
        assert np.array_equal(res.state.w_a, res.state.w_b)
        assert np.isnan(res.final()["kappa"])


def test_shared_sign_conditional():
    theta_a = np.array([[0.7, 0.3], [0.2, 0.8], [0.5, 0.5]])
    theta_b = np.array([[0.1, 0.9], [0.6, 0.4], [0.5, 0.5]])
    a = make_agent(theta_a, {"v": [[0.5, 0.5], [0.5, 0.5]]}, np.zeros(30_000, dtype=int))
    b = make_agent(theta_b, {"v": [[0.5, 0.5], [0.5, 0.5]]}, np.ones(30_000, dtype=int))
    gamma = np.array([0.2, 0.3, 0.5])
    w = sample_shared_signs(a, b, np.log(gamma), make_rng(0))
    expected = gamma * theta_a[:, 0] * theta_b[:, 1]
    expected /= expected.sum()
    assert np.allclose(np.bincount(w, minlength=3) / w.size, expected, atol=0.01)


def test_single_agent_sanity(default_dataset):
    obs = default_dataset.observations_a
    agent, trace = fit_single_agent(ModelConfig(seed=0), obs, default_dataset.true_labels)
    assert agent.K == 1 and len(trace) == 200
    assert ari(default_dataset.true_labels, agent.c) > 0.8
