"""Pro-GNN structure refinement.

The refined adjacency S starts at A and is pulled towards A while its L1 and
nuclear norms are shrunk by proximal steps:

    min_S ||A - S||_F^2 + alpha ||S||_1 + beta ||S||_*   s.t. S = S^T
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from src.autograd.tensor import Tensor
from src.gnn.structure import GraphStructure, propagation, static_propagation
from src.graph.grid import Graph
from src.utils.exceptions import ArgumentError, NumericError
from src.utils.logger import setup_logging

logger = setup_logging(__name__)

DEGENERACY_FLOOR = 0.05


@dataclass(frozen=True, eq=False)
class ProGnnState:
    """Refined adjacency plus the proximal-gradient hyperparameters."""

    S: np.ndarray
    alpha: float = 5e-4
    beta: float = 1.5
    eta: float = 0.01
    tau_s: int = 1
    allow_fill_in: bool = False


def soft_threshold(x: np.ndarray, threshold: float) -> np.ndarray:
    """Entrywise L1 proximal operator sign(x) * max(|x| - threshold, 0)."""
    if threshold == 0:
        return x.copy()
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def nuclear_norm(S: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(S, compute_uv=False)))


def nuclear_prox(S: np.ndarray, threshold: float) -> np.ndarray:
    """Nuclear-norm proximal operator: soft-threshold the singular values."""
    if threshold == 0:
        return S.copy()
    try:
        U, s, Vt = np.linalg.svd(S, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"SVD did not converge on {S.shape} matrix: {e}") from e
    return (U * np.maximum(s - threshold, 0.0)) @ Vt


def prognn_prox(S: np.ndarray, l1_threshold: float, nuclear_threshold: float) -> np.ndarray:
    """L1 proximal step followed by the nuclear proximal step."""
    return nuclear_prox(soft_threshold(S, l1_threshold), nuclear_threshold)


def prognn_refine_step(
    A: np.ndarray, state: ProGnnState, task_gradient: np.ndarray | None = None
) -> ProGnnState:
    """
    One proximal-gradient update of S.

    Steps: gradient of ||S - A||_F^2 (plus the task gradient), L1 prox, nuclear
    prox, symmetrisation, clamp to [0, 1] with zero diagonal, and (unless fill-in
    is allowed) restriction to the support of A.

    Args:
        A: 0/1 symmetric adjacency
        state: Current S and hyperparameters
        task_gradient: Optional d(task loss)/dS of the same shape

    Returns:
        New ProGnnState carrying the updated S
    """
    if state.eta <= 0:
        raise ArgumentError(f"Pro-GNN step size eta must be positive, got {state.eta}")
    if np.max(np.abs(A - A.T), initial=0.0) > 0:
        raise ArgumentError("Pro-GNN adjacency A must be symmetric")

    grad = 2.0 * (state.S - A)
    if task_gradient is not None:
        grad = grad + task_gradient

    S = state.S - state.eta * grad
    S = prognn_prox(S, state.alpha * state.eta, state.beta * state.eta)
    S = (S + S.T) / 2.0
    S = np.clip(S, 0.0, 1.0)
    np.fill_diagonal(S, 0.0)
    if not state.allow_fill_in:
        S = np.where(A > 0, S, 0.0)
    return replace(state, S=S)


def apply_degeneracy_floor(S: np.ndarray, A: np.ndarray, floor: float = DEGENERACY_FLOOR) -> np.ndarray:
    """Re-blend a collapsed S with the original graph."""
    if np.any(S > 0) or not np.any(A > 0):
        return S
    logger.warning(f"Refined adjacency collapsed to zeros, re-blending with {floor} * A")
    return np.maximum(S, floor * A)


class RefinedStructure(GraphStructure):
    """Propagation through the learned adjacency S (falls back to A on other graphs)."""

    kind = "prognn"

    def __init__(
        self,
        graph: Graph,
        alpha: float = 5e-4,
        beta: float = 1.5,
        eta: float = 0.01,
        tau_s: int = 1,
        allow_fill_in: bool = False,
    ):
        self.A = np.array(graph.adjacency)
        self.state = ProGnnState(
            S=self.A.copy(),
            alpha=alpha,
            beta=beta,
            eta=eta,
            tau_s=tau_s,
            allow_fill_in=allow_fill_in,
        )
        self.S = Tensor(self.A, requires_grad=True, name="structure.S")

    def structure_parameters(self) -> dict[str, Tensor]:
        return {self.S.name: self.S}

    def matches(self, graph: Graph) -> bool:
        return graph.adjacency.shape == self.A.shape and bool(np.all(graph.adjacency == self.A))

    def propagation(self, graph: Graph, x: Tensor, noise: np.ndarray | None = None) -> Tensor:
        if not self.matches(graph):
            return Tensor._wrap(static_propagation(graph))
        return propagation(self.S)

    def refine(self, task_gradient: np.ndarray | None = None) -> None:
        """Run one refine step and apply the degeneracy floor."""
        self.state = prognn_refine_step(self.A, self.state, task_gradient)
        S = apply_degeneracy_floor(self.state.S, self.A)
        self.state = replace(self.state, S=S)
        self.S.data = S.copy()

    def load(self, S: np.ndarray) -> None:
        if S.shape != self.A.shape:
            logger.info(f"Ignoring stored S of shape {S.shape} for graph of {self.A.shape[0]} nodes")
            return
        self.state = replace(self.state, S=S.copy())
        self.S.data = S.copy()
