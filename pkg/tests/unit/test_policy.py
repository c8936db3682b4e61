"""Unit tests for the Dirichlet head, actor/critic networks and the A2C update."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import digamma, gammaln

from src.autograd.optim import Adam
from src.autograd.tensor import Tape, Tensor
from src.env.scenario import ScenarioConfig
from src.env.simulator import node_features, reset
from src.graph.grid import graph_from_edges
from src.policy.a2c import (
    StepRecord,
    Trajectory,
    a2c_loss,
    a2c_update,
    discounted_returns,
    structure_gradient,
)
from src.policy.config import ModelConfig, TrainConfig
from src.policy.dirichlet import (
    dirichlet_log_pdf,
    entropy,
    log_density,
    mean_action,
    sample_action,
    sample_dirichlet,
)
from src.policy.networks import PolicyNets, actor_forward, critic_forward
from src.utils.exceptions import ArgumentError, ConfigError, ContractError


def _features(scenario_cfg: ScenarioConfig, seed: int = 0) -> tuple:
    scenario = scenario_cfg.build()
    return scenario, node_features(reset(scenario, seed), scenario)


# Dirichlet head


def test_uniform_dirichlet_log_density_is_log_gamma_n(rng):
    """Test c = ones gives log Gamma(n) at any point of the simplex."""
    for _ in range(3):
        a = rng.dirichlet(np.ones(5))
        assert dirichlet_log_pdf(np.ones(5), a) == pytest.approx(math.lgamma(5))


def test_beta_two_two_density():
    """Test Beta(2, 2) at 1/2 has density 1.5."""
    assert dirichlet_log_pdf(np.array([2.0, 2.0]), np.array([0.5, 0.5])) == pytest.approx(math.log(1.5))


def test_tape_log_density_matches_scalar(rng):
    c = rng.uniform(1.0, 6.0, 4)
    a = rng.dirichlet(np.ones(4))
    value = log_density(Tensor(c.reshape(4, 1)), a).item()
    assert value == pytest.approx(dirichlet_log_pdf(c, a), rel=1e-12)
    assert value == pytest.approx(stats.dirichlet(c).logpdf(a), rel=1e-10)


def test_entropy_matches_scipy(rng):
    c = rng.uniform(1.0, 6.0, 4)
    assert entropy(Tensor(c.reshape(4, 1))).item() == pytest.approx(stats.dirichlet(c).entropy(), rel=1e-10)


def test_sample_action_is_on_simplex_and_seeded():
    c = np.array([1.0, 2.0, 3.0])
    a, lp = sample_action(c, np.random.default_rng(4))
    b, _ = sample_action(c, np.random.default_rng(4))
    assert np.array_equal(a, b)
    assert a.sum() == pytest.approx(1.0)
    assert np.all(a > 0)
    assert lp == pytest.approx(dirichlet_log_pdf(c, a))


def test_sample_dirichlet_clamps_tiny_components():
    """Test near-zero concentrations still give strictly positive components."""
    a = sample_dirichlet(np.array([1e-3, 1e-3, 50.0]), np.random.default_rng(0))
    assert np.all(a >= 1e-13)
    assert a.sum() == pytest.approx(1.0)


def test_mean_action():
    np.testing.assert_allclose(mean_action(np.array([1.0, 3.0])), [0.25, 0.75])


@pytest.mark.slow
def test_sample_dirichlet_monte_carlo_mean():
    """Test the average of 1e5 draws is within 0.01 of c / sum(c)."""
    c = np.array([1.0, 2.0, 5.0])
    rng = np.random.default_rng(99)
    draws = np.array([sample_dirichlet(c, rng) for _ in range(100_000)])
    np.testing.assert_allclose(draws.mean(axis=0), c / c.sum(), atol=0.01)


@pytest.mark.parametrize("c", [np.array([1.0, 0.0]), np.array([np.inf, 1.0]), np.array([])])
def test_invalid_concentrations(c):
    with pytest.raises(ArgumentError):
        mean_action(c)


# Networks


def test_zero_actor_weights_give_half(tiny_scenario_cfg, small_model_cfg):
    """Test o = sigmoid(0) = 0.5 and c = 1 + kappa / 2."""
    scenario, x = _features(tiny_scenario_cfg)
    nets = PolicyNets(small_model_cfg, scenario.graph, 0)
    for param in nets.actor.parameters().values():
        param.data = np.zeros_like(param.data)
    o, c = actor_forward(x, scenario.graph, nets.actor)
    np.testing.assert_allclose(o.data, np.full((4, 1), 0.5))
    np.testing.assert_allclose(c.data, np.full((4, 1), 1 + small_model_cfg.kappa / 2))


@pytest.mark.parametrize("backbone", ["gcn", "gat"])
def test_actor_symmetric_on_ring(backbone):
    """Test identical features on a vertex-transitive graph give identical outputs."""
    ring = graph_from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    nets = PolicyNets(ModelConfig(backbone=backbone, hidden_dim=6, dense_dim=6), ring, 2)
    o, _ = actor_forward(Tensor(np.full((4, 4), 0.25)), ring, nets.actor)
    np.testing.assert_allclose(o.data, np.full((4, 1), o.data[0, 0]), atol=1e-14)


def test_critic_zero_head_weights_return_bias(tiny_scenario_cfg, small_model_cfg):
    scenario, x = _features(tiny_scenario_cfg)
    nets = PolicyNets(small_model_cfg, scenario.graph, 0)
    nets.critic.head.W.data = np.zeros_like(nets.critic.head.W.data)
    nets.critic.head.b.data = np.array([[0.7]])
    assert critic_forward(x, scenario.graph, nets.critic).item() == pytest.approx(0.7)


def test_networks_share_no_weights(tiny_scenario_cfg, small_model_cfg):
    """Test actor and critic keep separate parameters."""
    nets = PolicyNets(small_model_cfg, tiny_scenario_cfg.build().graph, 0)
    assert not set(nets.actor.parameters()) & set(nets.critic.parameters())


def test_weights_are_independent_of_node_count(small_model_cfg):
    """Test a network built on a 2x2 grid runs on a 4x4 grid."""
    small = ScenarioConfig(graph={"k": 2}, fleet_size=8).build()
    large_cfg = ScenarioConfig(graph={"k": 4}, fleet_size=32)
    nets = PolicyNets(small_model_cfg, small.graph, 0)
    large, x = _features(large_cfg)
    fwd = nets.forward(large.graph, x)
    assert fwd.o.shape == (16, 1)
    assert fwd.value.shape == (1, 1)


@pytest.mark.parametrize("backbone", ["gcn", "gat", "prognn", "ptdnet"])
def test_state_arrays_round_trip(tiny_scenario_cfg, backbone):
    scenario, x = _features(tiny_scenario_cfg)
    cfg = ModelConfig(backbone=backbone, hidden_dim=6, dense_dim=6)
    nets = PolicyNets(cfg, scenario.graph, 1)
    other = PolicyNets(cfg, scenario.graph, 2)
    other.load_state_arrays(nets.state_arrays())
    assert np.array_equal(nets.forward(scenario.graph, x).c.data, other.forward(scenario.graph, x).c.data)


def test_load_rejects_other_backbone(tiny_scenario_cfg):
    graph = tiny_scenario_cfg.build().graph
    arrays = PolicyNets(ModelConfig(backbone="gcn"), graph, 0).state_arrays()
    with pytest.raises(ConfigError):
        PolicyNets(ModelConfig(backbone="gat"), graph, 0).load_state_arrays(arrays)


def test_load_rejects_shape_mismatch(tiny_scenario_cfg):
    graph = tiny_scenario_cfg.build().graph
    arrays = PolicyNets(ModelConfig(hidden_dim=8), graph, 0).state_arrays()
    with pytest.raises(ConfigError):
        PolicyNets(ModelConfig(hidden_dim=16), graph, 0).load_state_arrays(arrays)


# A2C


@pytest.mark.parametrize(
    "rewards, gamma, expected",
    [([1, 1], 0.0, [1, 1]), ([1, 1], 1.0, [2, 1]), ([1, 1], 0.97, [1.97, 1])],
)
def test_discounted_returns(rewards, gamma, expected):
    assert discounted_returns(rewards, gamma) == pytest.approx(expected)


def test_discounted_returns_empty():
    with pytest.raises(ArgumentError):
        discounted_returns([], 0.9)


def _one_step(nets: PolicyNets, scenario, x, reward: float | None = None) -> Trajectory:
    fwd = nets.forward(scenario.graph, x)
    action = mean_action(fwd.c.data.reshape(-1))
    value = fwd.value.item()
    traj = Trajectory()
    traj.append(
        StepRecord(
            features=x,
            action=action,
            log_density=dirichlet_log_pdf(fwd.c.data.reshape(-1), action),
            reward=value if reward is None else reward,
            value=value,
        )
    )
    return traj


def test_zero_advantage_gives_zero_policy_gradient(tiny_scenario_cfg, small_model_cfg):
    """Test R = V makes the policy term and its gradient vanish, and value_loss 0."""
    scenario, x = _features(tiny_scenario_cfg)
    nets = PolicyNets(small_model_cfg, scenario.graph, 0)
    traj = _one_step(nets, scenario, x)

    with Tape() as tape:
        terms = a2c_loss(traj, nets, scenario.graph, TrainConfig())
    grads = tape.backward(terms.policy_loss, nets.parameters())

    assert terms.policy_loss.item() == 0.0
    assert terms.value_loss.item() == 0.0
    assert all(np.all(g == 0.0) for g in grads.values())


def test_single_step_loss_matches_hand_evaluation(tiny_scenario_cfg, small_model_cfg):
    """Test total = -A log p + value_coef (R - V)^2 - entropy_coef H."""
    scenario, x = _features(tiny_scenario_cfg)
    nets = PolicyNets(small_model_cfg, scenario.graph, 0)
    traj = _one_step(nets, scenario, x, reward=3.0)
    cfg = TrainConfig(value_coef=0.5, entropy_coef=0.01)

    fwd = nets.forward(scenario.graph, x)
    c = fwd.c.data.reshape(-1)
    a = traj.steps[0].action
    V = fwd.value.item()
    log_p = gammaln(c.sum()) - gammaln(c).sum() + np.sum((c - 1) * np.log(a))
    H = gammaln(c).sum() - gammaln(c.sum()) + (c.sum() - c.size) * digamma(c.sum()) - np.sum((c - 1) * digamma(c))
    expected = -(3.0 - V) * log_p + 0.5 * (3.0 - V) ** 2 - 0.01 * H

    terms = a2c_loss(traj, nets, scenario.graph, cfg)
    assert terms.total.item() == pytest.approx(expected, abs=1e-10)


def test_a2c_update_changes_weights(tiny_scenario_cfg, small_model_cfg):
    scenario, x = _features(tiny_scenario_cfg)
    nets = PolicyNets(small_model_cfg, scenario.graph, 0)
    optimizer = Adam(nets.parameters(), lr=0.01)
    before = {k: p.data.copy() for k, p in nets.parameters().items()}

    result = a2c_update(_one_step(nets, scenario, x, reward=5.0), nets, optimizer, TrainConfig(), scenario.graph)

    assert np.isfinite(result.policy_loss) and result.grad_norm > 0
    assert any(not np.array_equal(before[k], p.data) for k, p in nets.parameters().items())
    assert result.structure_grads == {}


def test_a2c_update_rejects_empty_trajectory(tiny_scenario_cfg, small_model_cfg):
    scenario = tiny_scenario_cfg.build()
    nets = PolicyNets(small_model_cfg, scenario.graph, 0)
    with pytest.raises(ContractError):
        a2c_update(Trajectory(), nets, Adam(nets.parameters(), lr=0.01), TrainConfig(), scenario.graph)


def test_prognn_structure_gradient(tiny_scenario_cfg):
    """Test the loss gradient reaches S and the optimizer leaves S alone."""
    scenario, x = _features(tiny_scenario_cfg)
    nets = PolicyNets(ModelConfig(backbone="prognn", hidden_dim=6, dense_dim=6), scenario.graph, 0)
    traj = _one_step(nets, scenario, x, reward=4.0)
    S_before = nets.structure.S.data.copy()

    grads = structure_gradient(traj, nets, TrainConfig(), scenario.graph)
    result = a2c_update(traj, nets, Adam(nets.parameters(), lr=0.01), TrainConfig(), scenario.graph)

    assert grads["structure.S"].shape == (4, 4)
    assert np.any(grads["structure.S"] != 0.0)
    assert "structure.S" in result.structure_grads
    assert np.array_equal(nets.structure.S.data, S_before)


def test_ptdnet_update_trains_sampler(tiny_scenario_cfg):
    """Test replaying frozen noise sends gradient into the edge sampler."""
    scenario, x = _features(tiny_scenario_cfg)
    nets = PolicyNets(ModelConfig(backbone="ptdnet", hidden_dim=6, dense_dim=6), scenario.graph, 0)
    noise = nets.draw_noise(scenario.graph, np.random.default_rng(1))
    fwd = nets.forward(scenario.graph, x, noise)
    action = mean_action(fwd.c.data.reshape(-1))
    traj = Trajectory([StepRecord(features=x, action=action, log_density=0.0, reward=2.0, value=0.0, noise=noise)])

    sampler_before = {k: p.data.copy() for k, p in nets.structure.parameters().items()}
    a2c_update(traj, nets, Adam(nets.parameters(), lr=0.01), TrainConfig(), scenario.graph)

    assert any(
        not np.array_equal(sampler_before[k], p.data) for k, p in nets.structure.parameters().items()
    )
