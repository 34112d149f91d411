"""Targeted node-removal attacks and the attack curve s(q)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .graph import Graph, betweenness

ATTACK_KINDS = ("degree", "betweenness")


@dataclass(frozen=True)
class AttackStrategy:
    """Adaptive attack: the target metric is recomputed on the surviving graph.

    ``recompute_every`` > 1 refreshes betweenness only every k removals, which
    trades exactness for speed on larger graphs. Degree is always exact.
    """

    kind: str = "degree"
    recompute_every: int = 1

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ParameterError(f"unknown attack kind {self.kind!r}; expected one of {ATTACK_KINDS}")
        if self.recompute_every < 1:
            raise ParameterError("recompute_every must be >= 1")


DEGREE_ATTACK = AttackStrategy("degree")
BETWEENNESS_ATTACK = AttackStrategy("betweenness")


def removal_sequence(g: Graph, strategy: AttackStrategy = DEGREE_ATTACK) -> list[int]:
    """Order in which an adaptive attacker deletes every node; ties go to the lowest id."""
    if strategy.kind == "degree":
        return _adaptive_degree_order(g)
    return _adaptive_betweenness_order(g, strategy.recompute_every)


def _adaptive_degree_order(g: Graph) -> list[int]:
    deg = np.array(g.degrees(), dtype=np.int64)
    dead = np.zeros(g.n, dtype=bool)
    order = []
    for _ in range(g.n):
        # dead nodes sit at -1, below any live degree; argmax returns the first maximum
        v = int(np.argmax(np.where(dead, -1, deg)))
        order.append(v)
        dead[v] = True
        for w in g.neighbor_set(v):
            deg[w] -= 1
    return order


def _adaptive_betweenness_order(g: Graph, every: int) -> list[int]:
    alive = [True] * g.n
    order = []
    scores = None
    for step in range(g.n):
        if scores is None or step % every == 0:
            scores = betweenness(g, alive)
        masked = np.where(alive, scores, -1.0)
        v = int(np.argmax(masked))
        order.append(v)
        alive[v] = False
    return order


def curve_from_order(g: Graph, order: list[int]) -> np.ndarray:
    """Attack curve for a fixed removal order.

    Components are grown by adding nodes back in reverse order with a
    union-find, so the whole curve costs about O(N + M). ``s[q-1]`` is the
    largest component after the first ``q`` removals, over the original N.
    """
    n = g.n
    parent = list(range(n))
    size = [1] * n
    present = [False] * n

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    largest_counts = [0] * n  # largest component size with order[:q] removed, q = 1..n
    best = 0
    for q in range(n - 1, 0, -1):
        v = order[q]
        present[v] = True
        best = max(best, 1)
        for w in g.neighbor_set(v):
            if present[w]:
                a, b = find(v), find(w)
                if a != b:
                    if size[a] < size[b]:
                        a, b = b, a
                    parent[b] = a
                    size[a] += size[b]
                    best = max(best, size[a])
        largest_counts[q - 1] = best
    return np.array(largest_counts, dtype=np.int64)


def attack_sizes(g: Graph, strategy: AttackStrategy = DEGREE_ATTACK) -> np.ndarray:
    """Integer largest-component sizes after q = 1..N removals."""
    if g.n == 0:
        return np.zeros(0, dtype=np.int64)
    return curve_from_order(g, removal_sequence(g, strategy))


def attack_curve(g: Graph, strategy: AttackStrategy = DEGREE_ATTACK) -> np.ndarray:
    """Fractions s(q), q = 1..N, relative to the original node count."""
    return attack_sizes(g, strategy) / g.n if g.n else np.zeros(0)
