"""Finite-difference gradient suites for ops, backbones and policy heads."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from src.autograd import ops
from src.autograd.gradcheck import GradcheckResult, check_gradients
from src.autograd.tensor import Tensor
from src.env.rng import stream
from src.env.scenario import ScenarioConfig
from src.env.simulator import FEATURE_DIM, node_features, reset
from src.gnn.layers import GatLayer, GcnLayer, gat_forward, gcn_forward
from src.gnn.ptdnet import DETERMINISTIC, STOCHASTIC, PtdNetSampler, draw_edge_noise, ptdnet_sample
from src.gnn.structure import propagation
from src.graph.grid import Graph, build_grid, graph_from_edges, normalize_adjacency
from src.policy.config import ModelConfig
from src.policy.dirichlet import entropy, log_density
from src.policy.networks import PolicyNets
from src.utils.exceptions import ArgumentError

SCOPES = ("ops", "backbones", "policy")
INSTANCES = 3
TOLERANCE = 1e-4
# one operand shape per instance, so each op is checked on INSTANCES shapes
SHAPES = ((3, 4), (1, 5), (4, 2))

Case = tuple[Callable[[], Tensor], dict[str, Tensor]]
CaseBuilder = Callable[[np.random.Generator, int], Case]


def _param(rng: np.random.Generator, *shape: int, low: float = -1.0, high: float = 1.0, name: str = "x") -> Tensor:
    return Tensor(rng.uniform(low, high, shape), requires_grad=True, name=name)


def _shape(instance: int) -> tuple[int, int]:
    return SHAPES[instance % len(SHAPES)]


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    """Scalar loss sum(out * R) with fixed random R, so every output entry matters."""
    return ops.sum_all(ops.mul(out, Tensor(weights)))


def _unary(fn: Callable[[Tensor], Tensor], low: float = -2.0, high: float = 2.0) -> CaseBuilder:
    def case(rng: np.random.Generator, instance: int) -> Case:
        shape = _shape(instance)
        x = _param(rng, *shape, low=low, high=high)
        weights = rng.uniform(0.5, 1.5, shape)
        return (lambda: _weighted_sum(fn(x), weights)), {"x": x}

    return case


def _binary(
    fn: Callable[[Tensor, Tensor], Tensor],
    b_shape: Callable[[tuple[int, int]], tuple[int, int]] = lambda shape: shape,
) -> CaseBuilder:
    def case(rng: np.random.Generator, instance: int) -> Case:
        shape = _shape(instance)
        a = _param(rng, *shape, name="a")
        b = _param(rng, *b_shape(shape), name="b")
        weights = rng.uniform(0.5, 1.5, fn(a, b).shape)
        return (lambda: _weighted_sum(fn(a, b), weights)), {"a": a, "b": b}

    return case


def _kinked(fn: Callable[[Tensor], Tensor]) -> CaseBuilder:
    def case(rng: np.random.Generator, instance: int) -> Case:
        shape = _shape(instance)
        # kinks at 0 are not differentiable; keep inputs clear of them
        x = Tensor(rng.choice([-1.0, 1.0], shape) * rng.uniform(0.1, 2.0, shape), requires_grad=True, name="x")
        weights = rng.uniform(0.5, 1.5, shape)
        return (lambda: _weighted_sum(fn(x), weights)), {"x": x}

    return case


def _row_softmax(rng: np.random.Generator, instance: int) -> Case:
    rows, cols = _shape(instance)
    x = _param(rng, rows, cols)
    mask = rng.uniform(size=(rows, cols)) > 0.3
    mask[:, 0] = True
    weights = rng.uniform(0.5, 1.5, (rows, cols))
    return (lambda: _weighted_sum(ops.row_softmax(x, mask), weights)), {"x": x}


def _take_rows(rng: np.random.Generator, instance: int) -> Case:
    rows, cols = _shape(instance)
    x = _param(rng, rows, cols)
    index = np.concatenate([np.arange(rows), [rows - 1]])
    weights = rng.uniform(0.5, 1.5, (rows + 1, cols))
    return (lambda: _weighted_sum(ops.take_rows(x, index), weights)), {"x": x}


def _scatter(rng: np.random.Generator, instance: int) -> Case:
    n = 3 + instance
    rows, cols = np.triu_indices(n, k=1)
    values = _param(rng, rows.size, 1)
    weights = rng.uniform(0.5, 1.5, (n, n))
    return (lambda: _weighted_sum(ops.scatter_symmetric(values, rows, cols, n), weights)), {"values": values}


def _concat(rng: np.random.Generator, instance: int) -> Case:
    rows, cols = _shape(instance)
    a, b = _param(rng, rows, cols, name="a"), _param(rng, rows, 1, name="b")
    weights = rng.uniform(0.5, 1.5, (rows, cols + 1))
    return (lambda: _weighted_sum(ops.concat_cols([a, b]), weights)), {"a": a, "b": b}


def _sum_pool(rng: np.random.Generator, instance: int) -> Case:
    rows, cols = _shape(instance)
    x = _param(rng, rows, cols)
    weights = rng.uniform(0.5, 1.5, (1, cols))
    return (lambda: _weighted_sum(ops.sum_pool(x), weights)), {"x": x}


def _transpose(rng: np.random.Generator, instance: int) -> Case:
    rows, cols = _shape(instance)
    x = _param(rng, rows, cols)
    weights = rng.uniform(0.5, 1.5, (cols, rows))
    return (lambda: _weighted_sum(ops.transpose(x), weights)), {"x": x}


def _propagation(rng: np.random.Generator, instance: int) -> Case:
    n = 2 + instance
    s = rng.uniform(0.1, 1.0, (n, n))
    s = Tensor((s + s.T) / 2.0, requires_grad=True, name="S")
    weights = rng.uniform(0.5, 1.5, (n, n))
    return (lambda: _weighted_sum(propagation(s), weights)), {"S": s}


OP_CASES: dict[str, CaseBuilder] = {
    "matmul": _binary(ops.matmul, lambda shape: (shape[1], 2)),
    "transpose": _transpose,
    "add": _binary(ops.add, lambda shape: (1, shape[1])),
    "sub": _binary(ops.sub, lambda shape: (shape[0], 1)),
    "mul": _binary(ops.mul),
    "scale": _unary(lambda x: ops.scale(x, -1.7)),
    "relu": _kinked(ops.relu),
    "leaky_relu": _kinked(ops.leaky_relu),
    "sigmoid": _unary(ops.sigmoid),
    "exp": _unary(ops.exp),
    "log": _unary(ops.log, low=0.2, high=3.0),
    "tanh": _unary(ops.tanh),
    "row_softmax": _row_softmax,
    "sum_pool": _sum_pool,
    "concat_cols": _concat,
    "take_rows": _take_rows,
    "scatter_symmetric": _scatter,
    "log_gamma": _unary(ops.log_gamma, low=0.3, high=4.0),
    "digamma": _unary(ops.digamma, low=0.3, high=4.0),
    "normalize_adjacency": _propagation,
}


def _backbone_graph(instance: int) -> Graph:
    """2x2 grid, 3-node path and 3x3 grid in turn."""
    turn = instance % 3
    if turn == 1:
        return graph_from_edges(3, [(0, 1), (1, 2)])
    return build_grid(2 if turn == 0 else 3)


def _gcn(rng: np.random.Generator, instance: int) -> Case:
    graph = _backbone_graph(instance)
    layer = GcnLayer(FEATURE_DIM, 3, rng, name="conv")
    x = _param(rng, graph.n, FEATURE_DIM, name="X")
    weights = rng.uniform(0.5, 1.5, (graph.n, 3))
    P = normalize_adjacency(graph)
    return (lambda: _weighted_sum(gcn_forward(P, x, layer), weights)), {
        "X": x,
        **layer.parameters(),
    }


def _gat(rng: np.random.Generator, instance: int) -> Case:
    graph = _backbone_graph(instance)
    layer = GatLayer(FEATURE_DIM, 3, rng, name="conv", heads=2)
    x = _param(rng, graph.n, FEATURE_DIM, name="X")
    weights = rng.uniform(0.5, 1.5, (graph.n, 3))
    return (lambda: _weighted_sum(gat_forward(graph, x, layer), weights)), {
        "X": x,
        **layer.parameters(),
    }


def _prognn(rng: np.random.Generator, instance: int) -> Case:
    graph = _backbone_graph(instance)
    layer = GcnLayer(FEATURE_DIM, 3, rng, name="conv")
    s = Tensor(graph.adjacency * rng.uniform(0.3, 1.0, (graph.n, graph.n)), requires_grad=True, name="S")
    x = Tensor(rng.uniform(-1, 1, (graph.n, FEATURE_DIM)))
    weights = rng.uniform(0.5, 1.5, (graph.n, 3))
    return (lambda: _weighted_sum(gcn_forward(propagation(s), x, layer), weights)), {
        "S": s,
        **layer.parameters(),
    }


def _ptdnet(mode: str) -> CaseBuilder:
    def case(rng: np.random.Generator, instance: int) -> Case:
        graph = _backbone_graph(instance)
        sampler = PtdNetSampler(FEATURE_DIM, rng, hidden=5, temperature=0.5)
        layer = GcnLayer(FEATURE_DIM, 3, rng, name="conv")
        x = Tensor(rng.uniform(-1, 1, (graph.n, FEATURE_DIM)))
        weights = rng.uniform(0.5, 1.5, (graph.n, 3))
        noise = draw_edge_noise(graph, rng) if mode == STOCHASTIC else None

        def loss() -> Tensor:
            mask = ptdnet_sample(graph, x, sampler, mode=mode, noise=noise)
            return _weighted_sum(gcn_forward(propagation(mask), x, layer), weights)

        return loss, {**sampler.parameters(), **layer.parameters()}

    return case


BACKBONE_CASES: dict[str, CaseBuilder] = {
    "gcn": _gcn,
    "gat": _gat,
    "prognn": _prognn,
    "ptdnet_deterministic": _ptdnet(DETERMINISTIC),
    "ptdnet_stochastic": _ptdnet(STOCHASTIC),
}


def _policy_state(seed: int):
    scenario = ScenarioConfig(graph={"k": 2}, fleet_size=8, horizon=4).build()
    state = reset(scenario, seed)
    return scenario, node_features(state, scenario)


def _actor(backbone: str) -> CaseBuilder:
    def case(rng: np.random.Generator, instance: int) -> Case:
        scenario, x = _policy_state(int(rng.integers(2**31)))
        nets = PolicyNets(ModelConfig(backbone=backbone, hidden_dim=6, dense_dim=5), scenario.graph, 3)
        return (lambda: ops.sum_all(nets.forward(scenario.graph, x).o)), nets.actor.parameters()

    return case


def _critic(rng: np.random.Generator, instance: int) -> Case:
    scenario, x = _policy_state(int(rng.integers(2**31)))
    nets = PolicyNets(ModelConfig(hidden_dim=6, dense_dim=5), scenario.graph, 4)
    return (lambda: nets.forward(scenario.graph, x).value), nets.critic.parameters()


def _dirichlet_log_density(rng: np.random.Generator, instance: int) -> Case:
    n = 2 + instance
    c = _param(rng, n, 1, low=1.0, high=6.0, name="c")
    a = rng.dirichlet(np.ones(n))
    return (lambda: log_density(c, a)), {"c": c}


def _dirichlet_entropy(rng: np.random.Generator, instance: int) -> Case:
    c = _param(rng, 2 + instance, 1, low=1.0, high=6.0, name="c")
    return (lambda: entropy(c)), {"c": c}


POLICY_CASES: dict[str, CaseBuilder] = {
    "actor_gcn": _actor("gcn"),
    "actor_gat": _actor("gat"),
    "critic": _critic,
    "dirichlet_log_density": _dirichlet_log_density,
    "dirichlet_entropy": _dirichlet_entropy,
}

SUITES = {"ops": OP_CASES, "backbones": BACKBONE_CASES, "policy": POLICY_CASES}


def run_component(
    name: str, build: CaseBuilder, seed: int, instances: int = INSTANCES
) -> GradcheckResult:
    """Worst relative error of one component over several random instances."""
    worst: GradcheckResult | None = None
    for i in range(instances):
        fn, params = build(stream(seed, "gradcheck", name, i), i)
        result = check_gradients(fn, params, name=name, tolerance=TOLERANCE)
        if worst is None or result.max_rel_error > worst.max_rel_error:
            worst = result
    return worst


def run_gradcheck(scope: str, seed: int = 0) -> list[GradcheckResult]:
    """
    Finite-difference check of every component in a scope.

    Args:
        scope: "ops", "backbones" or "policy"
        seed: Root seed for the random instances

    Returns:
        One result per component, named after it
    """
    if scope not in SUITES:
        raise ArgumentError(f"unknown gradcheck scope {scope!r}; choose from {', '.join(SCOPES)}")
    return [run_component(name, build, seed) for name, build in SUITES[scope].items()]
