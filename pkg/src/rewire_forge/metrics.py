"""Resilience and utility metrics plus the weighted objective built from them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attack import DEGREE_ATTACK, AttackStrategy, attack_sizes
from .errors import ParameterError
from .graph import Graph
from .linalg import largest_eigenvalue, smallest_eigenvalues

RESILIENCE_KINDS = ("R", "sr", "ac")
UTILITY_KINDS = ("global", "local", "none")


def resilience_R(g: Graph, attack: AttackStrategy = DEGREE_ATTACK) -> float:
    """Mean largest-component fraction over the full attack sequence.

    Accumulated in integers and divided once, so identical rationals give
    identical floats (``R(K_N)`` is exactly ``(N-1)/(2N)``).
    """
    if g.n == 0:
        return 0.0
    return int(attack_sizes(g, attack).sum()) / (g.n * g.n)


def spectral_radius(g: Graph) -> float:
    if g.num_edges == 0:
        return 0.0
    return largest_eigenvalue(g.adjacency_matrix())


def laplacian(g: Graph) -> np.ndarray:
    a = g.adjacency_matrix()
    return np.diag(a.sum(axis=1)) - a


def algebraic_connectivity(g: Graph) -> float:
    """Second-smallest Laplacian eigenvalue; exactly 0 for disconnected graphs."""
    if g.n < 2 or not g.is_connected():
        return 0.0
    return float(smallest_eigenvalues(laplacian(g), 2)[1])


def _inverse_distance_sum(g: Graph, nodes: list[int] | None = None) -> float:
    """Sum over ordered pairs of 1/d(i, j) within the graph (unreachable pairs add 0)."""
    total = 0.0
    for s in range(g.n) if nodes is None else nodes:
        dist = g.bfs_distances(s)
        total += sum(1.0 / d for d in dist if d > 0)
    return total


def average_efficiency(g: Graph) -> float:
    n = g.n
    if n < 2:
        return 0.0
    return _inverse_distance_sum(g) / (n * (n - 1))


def global_efficiency(g: Graph) -> float:
    """Average efficiency over that of the complete graph, which is 1 when unweighted."""
    return average_efficiency(g)


def local_efficiency(g: Graph) -> float:
    if g.n == 0:
        return 0.0
    total = 0.0
    for v in range(g.n):
        nb = g.neighbors(v)
        if len(nb) >= 2:
            total += average_efficiency(g.induced_subgraph(nb))
    return total / g.n


RESILIENCE_FUNCS = {
    "R": lambda g, attack: resilience_R(g, attack),
    "sr": lambda g, attack: spectral_radius(g),
    "ac": lambda g, attack: algebraic_connectivity(g),
}
UTILITY_FUNCS = {
    "global": global_efficiency,
    "local": local_efficiency,
    "none": lambda g: 0.0,
}


@dataclass(frozen=True)
class ObjectiveConfig:
    """Weights ``alpha * resilience + (1 - alpha) * utility``."""

    alpha: float = 1.0
    resilience: str = "R"
    utility: str = "global"
    attack: AttackStrategy = field(default_factory=lambda: DEGREE_ATTACK)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.resilience not in RESILIENCE_KINDS:
            raise ParameterError(f"unknown resilience kind {self.resilience!r}")
        if self.utility not in UTILITY_KINDS:
            raise ParameterError(f"unknown utility kind {self.utility!r}")


def objective_components(g: Graph, cfg: ObjectiveConfig) -> dict[str, float]:
    """Resilience, utility and their weighted sum; a zero-weight term is not evaluated."""
    res = RESILIENCE_FUNCS[cfg.resilience](g, cfg.attack) if cfg.alpha > 0.0 else 0.0
    util = UTILITY_FUNCS[cfg.utility](g) if cfg.alpha < 1.0 else 0.0
    return {"resilience": res, "utility": util, "objective": cfg.alpha * res + (1.0 - cfg.alpha) * util}


def combined_objective(g: Graph, cfg: ObjectiveConfig) -> float:
    return objective_components(g, cfg)["objective"]


def all_metrics(g: Graph, attack: AttackStrategy = DEGREE_ATTACK) -> dict[str, float]:
    return {
        "R": resilience_R(g, attack),
        "spectral_radius": spectral_radius(g),
        "algebraic_connectivity": algebraic_connectivity(g),
        "E_global": global_efficiency(g),
        "E_local": local_efficiency(g),
    }


def gain_percent(initial: float, final: float) -> float:
    """Relative improvement in percent; 0 when both values are 0."""
    if initial == 0.0:
        return 0.0 if final == 0.0 else float("inf") * np.sign(final)
    return 100.0 * (final - initial) / abs(initial)
