import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intermdm.distributions import make_rng
from intermdm.model import (
    AgentState,
    CommunicationType,
    GameState,
    ModelConfig,
    category_posterior,
    init_agent,
    posterior_phi,
    posterior_theta,
    sample_categories,
)


def _obs(D=6, V=4, seed=0, mods=("vision", "sound")):
    rng = make_rng(seed)
    return {m: rng.integers(0, 5, size=(D, V)) for m in mods}


class TestConfig:
    def test_defaults(self):
        cfg = ModelConfig()
        assert (cfg.K, cfg.L, cfg.alpha, cfg.beta, cfg.iterations) == (15, 15, 0.01, 0.001, 200)
        assert np.allclose(cfg.gamma_vector(), 1 / 15)

    @pytest.mark.parametrize("kw", [{"K": 0}, {"L": 0}, {"alpha": 0}, {"beta": -1.0},
                                    {"beta": {"vision": 0.0}}, {"iterations": -1},
                                    {"gamma": [0.5, 0.5]}, {"communication_type": "shout"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ModelConfig(**kw)

    def test_round_trip(self):
        cfg = ModelConfig(K=3, L=4, beta={"vision": 0.01, "sound": 0.02}, gamma=[0.2, 0.3, 0.5],
                          communication_type="all_reject", seed=9)
        again = ModelConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg
        assert again.beta_for("sound") == 0.02

    def test_unknown_field(self):
        with pytest.raises(ValueError):
            ModelConfig.from_dict({"K": 2, "colour": "red"})

    def test_type_aliases(self):
        assert CommunicationType.parse("AllAccept") is CommunicationType.ALL_ACCEPT
        assert CommunicationType.parse("gibbs") is CommunicationType.INTEGRATED_GIBBS


class TestInit:
    def test_shapes_and_simplices(self):
        obs = _obs()
        agent = init_agent(ModelConfig(K=3, L=5), obs, make_rng(0))
        assert agent.modalities == ("vision", "sound")
        assert agent.theta.shape == (3, 5)
        assert np.allclose(agent.theta.sum(axis=1), 1)
        for m in obs:
            assert agent.phi[m].shape == (5, 4)
            assert np.allclose(agent.phi[m].sum(axis=1), 1)
        assert agent.c.shape == (6,) and agent.c.max() < 5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            init_agent(ModelConfig(), {"vision": np.zeros((0, 4), dtype=int)}, make_rng(0))

    def test_single_category(self):
        agent = init_agent(ModelConfig(K=2, L=1), _obs(), make_rng(0))
        assert np.all(agent.c == 0)

    def test_deterministic(self):
        a = init_agent(ModelConfig(), _obs(), make_rng(3))
        b = init_agent(ModelConfig(), _obs(), make_rng(3))
        assert a.equals(b)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            init_agent(ModelConfig(D=5), _obs(D=6), make_rng(0))
        bad = {"vision": np.ones((6, 4), dtype=int), "sound": np.ones((5, 4), dtype=int)}
        with pytest.raises(ValueError):
            init_agent(ModelConfig(), bad, make_rng(0))


class TestConjugate:
    def test_posterior_phi_examples(self):
        obs = {"vision": np.array([[2, 1], [1, 0], [0, 3]])}
        assert posterior_phi(obs, [1, 1, 1], 0, "vision", 0.001).tolist() == [0.001, 0.001]
        assert np.allclose(posterior_phi(obs, [0, 1, 1], 0, "vision", 0.001), [2.001, 1.001])
        assert np.allclose(posterior_phi(obs, [0, 1, 1], 1, "vision", 0.001), [1.001, 3.001])

    def test_posterior_phi_absent_modality(self):
        with pytest.raises(KeyError):
            posterior_phi({"vision": np.ones((2, 2))}, [0, 0], 0, "haptic", 0.1)

    def test_posterior_theta_examples(self):
        assert np.allclose(posterior_theta([1, 1], [0, 0], 0, 0.01, 2), [0.01, 2.01])
        assert np.allclose(posterior_theta([1, 1], [0, 0], 1, 0.01, 2), [0.01, 0.01])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 8))
    def test_additive(self, seed, split):
        rng = make_rng(seed)
        x = rng.integers(0, 6, size=(10, 3))
        c = rng.integers(0, 2, size=10)
        split = min(split, 9)
        full = posterior_phi({"v": x}, c, 0, "v", 0.5)
        first = posterior_phi({"v": x[:split]}, c[:split], 0, "v", 0.5)
        second = posterior_phi({"v": x[split:]}, c[split:], 0, "v", first)
        assert np.allclose(full, second)


class TestCategoryPosterior:
    def test_flat_likelihood_returns_prior(self):
        theta = np.array([0.2, 0.3, 0.5])
        phi = {"v": make_rng(0).dirichlet(np.ones(4), size=3)}
        assert np.allclose(category_posterior({"v": np.zeros(4)}, theta, phi), theta)

    def test_single_category(self):
        assert category_posterior({"v": [3, 1]}, [1.0], {"v": [[0.4, 0.6]]}, L=1).tolist() == [1.0]

    def test_hand_example(self):
        post = category_posterior({"v": [1, 0]}, [0.5, 0.5], {"v": [[0.9, 0.1], [0.1, 0.9]]})
        assert np.allclose(post, [0.9, 0.1], atol=1e-12)

    def test_all_zero_raises(self):
        with pytest.raises(FloatingPointError):
            category_posterior({"v": [1, 0]}, [0.5, 0.5], {"v": [[0.0, 1.0], [0.0, 1.0]]})

    def test_modality_mismatch(self):
        with pytest.raises(ValueError):
            category_posterior({"v": [1, 0]}, [1.0], {"s": [[0.5, 0.5]]})

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32))
    def test_coefficient_invariance_and_dropping(self, seed):
        rng = make_rng(seed)
        L = 4
        theta = rng.dirichlet(np.ones(L))
        phi = {m: rng.dirichlet(np.ones(5), size=L) for m in ("v", "s")}
        o = {m: rng.integers(0, 4, size=5) for m in ("v", "s")}
        with_c = category_posterior(o, theta, phi, coefficient=True)
        without = category_posterior(o, theta, phi)
        assert np.allclose(with_c, without, atol=1e-9)
        dropped = category_posterior({"v": o["v"]}, theta, {"v": phi["v"]})
        assert dropped.shape == (L,)
        assert np.allclose(category_posterior({}, theta, {}), theta)

    def test_vectorized_sampler_matches_single_site(self):
        rng = make_rng(11)
        obs = {"v": rng.integers(0, 4, size=(1, 3))}
        agent = init_agent(ModelConfig(K=2, L=3, beta=1.0, alpha=1.0), obs, rng)
        w = np.array([1])
        expected = category_posterior({"v": obs["v"][0]}, agent.theta[1], {"v": agent.phi["v"]})
        counts = np.zeros(3)
        n = 20_000
        for _ in range(n):
            sample_categories(agent, obs, w, rng)
            counts[agent.c[0]] += 1
        assert np.allclose(counts / n, expected, atol=0.015)


def test_game_state_json_round_trip():
    obs = _obs()
    cfg = ModelConfig(K=3, L=4)
    rng = make_rng(0)
    gs = GameState(init_agent(cfg, obs, rng), init_agent(cfg, {"haptic": obs["vision"]}, rng),
                   np.array([0, 1, 2, 0, 1, 2]), np.array([0, 0, 0, 1, 1, 1]), iteration=5)
    doc = json.loads(json.dumps(gs.to_dict()))
    assert set(doc) == {"agentA", "agentB", "wA", "wB", "iteration"}
    back = GameState.from_dict(doc)
    assert back.agent_a.equals(gs.agent_a) and back.agent_b.equals(gs.agent_b)
    assert back.iteration == 5 and np.array_equal(back.w_b, gs.w_b)
    # probability-only documents load too
    for key in ("agentA", "agentB"):
        doc[key].pop("log_phi")
        doc[key].pop("log_theta")
    approx = GameState.from_dict(doc)
    assert np.allclose(approx.agent_a.theta, gs.agent_a.theta)


def test_agent_copy_is_deep():
    agent = init_agent(ModelConfig(K=2, L=2), _obs(), make_rng(0))
    clone = agent.copy()
    clone.c[0] = 1 - clone.c[0]
    clone.log_phi["vision"][0, 0] = 0.0
    assert not agent.equals(clone)
    assert isinstance(agent, AgentState)
