"""Edge-rewiring MDP: state is a graph, an action swaps two edges.

Rewiring ``A->C`` with ``B->D`` removes AC and BD and adds AB and CD. It is
legal only when A, B, C, D are pairwise distinct and none of AB, CD, AD, BC
is already an edge. That last rule makes legality independent of both edge
orientations, so every feasible partner set is closed under reversal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterator

import numpy as np

from .errors import ContractError, FeasibilityError, ParameterError
from .graph import EdgeRef, Graph
from .metrics import ObjectiveConfig, objective_components


@dataclass(frozen=True)
class RewiringAction:
    terminate: bool
    e1: EdgeRef | None = None
    e2: EdgeRef | None = None

    def __post_init__(self):
        if self.terminate and (self.e1 is not None or self.e2 is not None):
            raise ParameterError("a terminate action carries no edges")
        if not self.terminate and (self.e1 is None or self.e2 is None):
            raise ParameterError("a rewiring action needs both e1 and e2")

    @classmethod
    def stop(cls) -> "RewiringAction":
        return cls(True)

    @classmethod
    def rewire(cls, a: int, c: int, b: int, d: int) -> "RewiringAction":
        """Remove AC and BD, add AB and CD."""
        return cls(False, EdgeRef(a, c), EdgeRef(b, d))

    @property
    def nodes(self) -> tuple[int, int, int, int]:
        """``(A, C, B, D)``."""
        return (self.e1.tail, self.e1.head, self.e2.tail, self.e2.head)

    def removed_edges(self) -> frozenset[frozenset[int]]:
        a, c, b, d = self.nodes
        return frozenset((frozenset((a, c)), frozenset((b, d))))

    def added_edges(self) -> frozenset[frozenset[int]]:
        a, c, b, d = self.nodes
        return frozenset((frozenset((a, b)), frozenset((c, d))))

    def canonical(self) -> "RewiringAction":
        """Lexicographically smallest ``(A, C, B, D)`` producing the same graph."""
        if self.terminate:
            return self
        a, c, b, d = self.nodes
        # (A,C,B,D), (C,A,D,B), (B,D,A,C), (D,B,C,A) all remove {AC, BD} and add {AB, CD}
        return RewiringAction.rewire(*min((a, c, b, d), (c, a, d, b), (b, d, a, c), (d, b, c, a)))

    def inverse_of(self, other: "RewiringAction") -> bool:
        """True when applying ``other`` right after ``self`` restores the graph."""
        if self.terminate or other.terminate:
            return False
        return self.added_edges() == other.removed_edges() and self.removed_edges() == other.added_edges()

    def to_json(self) -> dict:
        if self.terminate:
            return {"terminate": True}
        return {"terminate": False, "e1": list(self.e1), "e2": list(self.e2)}

    @classmethod
    def from_json(cls, obj: dict) -> "RewiringAction":
        if obj.get("terminate"):
            return cls.stop()
        return cls.rewire(*obj["e1"], *obj["e2"])


def check_feasible(g: Graph, a: RewiringAction) -> None:
    """Raise :class:`FeasibilityError` naming the first violated constraint."""
    if a.terminate:
        return
    A, C, B, D = a.nodes
    for x in (A, C, B, D):
        if not 0 <= x < g.n:
            raise FeasibilityError("node-range", f"node {x} outside 0..{g.n - 1}")
    if len({A, B, C, D}) != 4:
        raise FeasibilityError("distinct-nodes", f"A, C, B, D = {A}, {C}, {B}, {D} are not pairwise distinct")
    if not g.has_edge(A, C):
        raise FeasibilityError("e1-present", f"edge {A}-{C} is not in the graph")
    if not g.has_edge(B, D):
        raise FeasibilityError("e2-present", f"edge {B}-{D} is not in the graph")
    for name, (u, v) in (("AB", (A, B)), ("CD", (C, D)), ("AD", (A, D)), ("BC", (B, C))):
        if g.has_edge(u, v):
            raise FeasibilityError(f"{name}-absent", f"edge {u}-{v} already exists")


def is_feasible(g: Graph, a: RewiringAction) -> bool:
    try:
        check_feasible(g, a)
    except FeasibilityError:
        return False
    return True


def apply_rewiring(g: Graph, a: RewiringAction, *, forbid_disconnecting: bool = False) -> Graph:
    """New graph with AC, BD replaced by AB, CD; the input is left untouched."""
    if a.terminate:
        return g.copy()
    check_feasible(g, a)
    A, C, B, D = a.nodes
    out = g.copy()
    out.remove_edge(A, C)
    out.remove_edge(B, D)
    out.add_edge(A, B)
    out.add_edge(C, D)
    if forbid_disconnecting and g.is_connected() and not out.is_connected():
        raise FeasibilityError("keeps-connected", "rewiring would disconnect the graph")
    return out


def _free_nodes(g: Graph, a: int, c: int) -> set[int]:
    blocked = g.neighbor_set(a) | g.neighbor_set(c)
    return {v for v in range(g.n) if v not in blocked and v != a and v != c}


def feasible_partners(g: Graph, e1: EdgeRef) -> list[EdgeRef]:
    """Every directed ``B->D`` that can be rewired with ``e1``, sorted."""
    a, c = e1
    if not g.has_edge(a, c):
        raise ContractError(f"e1 = {a}->{c} is not an edge")
    free = _free_nodes(g, a, c)
    return [EdgeRef(b, d) for b in sorted(free) for d in g.neighbors(b) if d in free]


def has_partner(g: Graph, e1: EdgeRef) -> bool:
    free = _free_nodes(g, *e1)
    return any(not free.isdisjoint(g.neighbor_set(b)) for b in free)


def action_space_size(g: Graph) -> int:
    """Number of ordered feasible ``(e1, e2)`` pairs over directed edges."""
    return sum(len(feasible_partners(g, e)) for e in g.directed_edges())


def action_space_bound(g: Graph) -> int:
    """``2 |E_dir|^2``, the size measure used for the benchmark table."""
    return 2 * (2 * g.num_edges) ** 2


def enumerate_rewirings(g: Graph) -> list[RewiringAction]:
    """Every distinct rewiring once, in its canonical form, sorted lexicographically."""
    out = set()
    for e1 in g.directed_edges():
        for e2 in feasible_partners(g, e1):
            out.add(RewiringAction(False, e1, e2).canonical().nodes)
    return [RewiringAction.rewire(*t) for t in sorted(out)]


def sample_rewiring(g: Graph, rng: np.random.Generator, *, max_tries: int = 200) -> RewiringAction | None:
    """Uniform draw over distinct feasible rewirings, or None if there are none.

    Rejection sampling on ordered directed pairs is uniform because each
    rewiring has exactly four ordered representations; after ``max_tries``
    misses the full set is enumerated instead.
    """
    directed = g.directed_edges()
    if len(directed) < 4:
        return None
    for _ in range(max_tries):
        i, j = rng.integers(len(directed), size=2)
        a = RewiringAction(False, directed[i], directed[j])
        if is_feasible(g, a):
            return a
    pool = enumerate_rewirings(g)
    if not pool:
        return None
    return pool[int(rng.integers(len(pool)))]


@dataclass(frozen=True)
class EnvConfig:
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    max_rewiring_budget: int = 20
    reward_scale: float = 10.0
    forbid_disconnecting: bool = False

    def __post_init__(self):
        if self.max_rewiring_budget < 1:
            raise ParameterError("max_rewiring_budget must be >= 1")
        if self.reward_scale <= 0:
            raise ParameterError("reward_scale must be > 0")


@dataclass
class StepResult:
    next_graph: Graph
    reward: float
    done: bool
    info: dict


def step(state: Graph, a: RewiringAction, cfg: EnvConfig, *, t: int = 0, before: dict | None = None) -> StepResult:
    """One MDP transition from ``state`` at time ``t`` (number of rewirings already made).

    ``before`` may carry cached objective components for ``state``.
    """
    if t >= cfg.max_rewiring_budget:
        raise ContractError("episode already exhausted its rewiring budget")
    if before is None:
        before = objective_components(state, cfg.objective)
    if a.terminate:
        return StepResult(state, 0.0, True, {"before": before, "after": before, "gain": 0.0})
    nxt = apply_rewiring(state, a, forbid_disconnecting=cfg.forbid_disconnecting)
    after = objective_components(nxt, cfg.objective)
    gain = after["objective"] - before["objective"]
    done = t + 1 >= cfg.max_rewiring_budget
    return StepResult(nxt, cfg.reward_scale * gain, done, {"before": before, "after": after, "gain": gain})


class RewiringEnv:
    """Stateful wrapper around :func:`step` with caching and episode logging."""

    def __init__(self, cfg: EnvConfig, graph: Graph | None = None):
        self.cfg = cfg
        self.graph: Graph | None = None
        self.t = 0
        self.done = True
        self.log: list[dict] = []
        if graph is not None:
            self.reset(graph)

    def reset(self, graph: Graph) -> Graph:
        self.initial = graph.copy()
        self.graph = graph.copy()
        self.t = 0
        self.done = False
        self._components = objective_components(self.graph, self.cfg.objective)
        self.initial_objective = self._components["objective"]
        self.log = []
        return self.graph

    @property
    def objective(self) -> float:
        return self._components["objective"]

    def step(self, a: RewiringAction) -> StepResult:
        if self.done:
            raise ContractError("step() called on a finished episode; call reset()")
        res = step(self.graph, a, self.cfg, t=self.t, before=self._components)
        self.log.append(
            {"t": self.t, "action": a.to_json(), "reward": res.reward, "objective_components": res.info["after"]}
        )
        if not a.terminate:
            self.t += 1
        self.graph = res.next_graph
        self._components = res.info["after"]
        self.done = res.done
        return res

    def write_log(self, fh: IO[str]) -> None:
        for rec in self.log:
            fh.write(json.dumps(rec) + "\n")


def read_episode_log(lines: Iterator[str]) -> list[dict]:
    return [json.loads(line) for line in lines if line.strip()]


def replay(g: Graph, actions: list[RewiringAction]) -> Graph:
    """Apply a rewiring sequence; terminate actions are no-ops."""
    cur = g
    for a in actions:
        cur = apply_rewiring(cur, a)
    return cur
