"""Undirected simple graphs, generators, samplers and elementary queries.

Nodes are the integers ``0..n-1``. Adjacency is kept as one neighbour set per
node, which gives O(1) membership tests for the four edge checks a rewiring
needs, plus a cached degree list.
"""
from __future__ import annotations

from collections import deque
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import GraphParseError, ParameterError, SamplingError


class EdgeRef(NamedTuple):
    """Directed view ``tail -> head`` of an undirected edge."""

    tail: int
    head: int

    def reversed(self) -> "EdgeRef":
        return EdgeRef(self.head, self.tail)


class Graph:
    """Undirected simple graph on nodes ``0..n-1``."""

    __slots__ = ("n", "_adj", "_deg", "_m")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise ParameterError(f"node count must be >= 0, got {n}")
        self.n = n
        self._adj: list[set[int]] = [set() for _ in range(n)]
        self._deg = [0] * n
        self._m = 0
        for u, v in edges:
            self.add_edge(u, v)

    # -- construction / mutation -------------------------------------------
    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise ParameterError(f"self-loop on node {u}")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ParameterError(f"edge ({u}, {v}) outside 0..{self.n - 1}")
        if v in self._adj[u]:
            raise ParameterError(f"duplicate edge ({u}, {v})")
        self._adj[u].add(v)
        self._adj[v].add(u)
        self._deg[u] += 1
        self._deg[v] += 1
        self._m += 1

    def remove_edge(self, u: int, v: int) -> None:
        if v not in self._adj[u]:
            raise ParameterError(f"edge ({u}, {v}) not present")
        self._adj[u].discard(v)
        self._adj[v].discard(u)
        self._deg[u] -= 1
        self._deg[v] -= 1
        self._m -= 1

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.n = self.n
        g._adj = [set(s) for s in self._adj]
        g._deg = list(self._deg)
        g._m = self._m
        return g

    # -- queries -------------------------------------------------------------
    @property
    def num_edges(self) -> int:
        return self._m

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def degree(self, u: int) -> int:
        return self._deg[u]

    def degrees(self) -> list[int]:
        return list(self._deg)

    def neighbors(self, u: int) -> list[int]:
        """Sorted neighbour list of ``u``."""
        return sorted(self._adj[u])

    def neighbor_set(self, u: int) -> set[int]:
        # callers must not mutate the returned set
        return self._adj[u]

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as sorted ``(u, v)`` pairs with ``u < v``."""
        return [(u, v) for u in range(self.n) for v in sorted(self._adj[u]) if u < v]

    def directed_edges(self) -> list[EdgeRef]:
        """Both orientations of every edge, ordered by (tail, head)."""
        return [EdgeRef(u, v) for u in range(self.n) for v in sorted(self._adj[u])]

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges())

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, v in self.edges():
            a[u, v] = a[v, u] = 1.0
        return a

    def check_invariants(self) -> None:
        """Raise AssertionError if the internal structure is inconsistent."""
        m2 = 0
        for u, nb in enumerate(self._adj):
            assert u not in nb, f"self-loop at {u}"
            assert len(nb) == self._deg[u], f"degree cache stale at {u}"
            for v in nb:
                assert u in self._adj[v], f"asymmetric pair ({u}, {v})"
            m2 += len(nb)
        assert m2 == 2 * self._m

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with node ``i`` renamed to ``perm[i]``."""
        if sorted(perm) != list(range(self.n)):
            raise ParameterError("perm must be a permutation of 0..n-1")
        return Graph(self.n, ((perm[u], perm[v]) for u, v in self.edges()))

    def induced_subgraph(self, nodes: Sequence[int]) -> "Graph":
        """Subgraph induced by ``nodes``; node ``nodes[k]`` becomes ``k``."""
        index = {v: k for k, v in enumerate(nodes)}
        if len(index) != len(nodes):
            raise ParameterError("duplicate node in induced_subgraph")
        sub = Graph(len(nodes))
        for v, k in index.items():
            for w in self._adj[v]:
                j = index.get(w)
                if j is not None and k < j:
                    sub.add_edge(k, j)
        return sub

    def components(self, removed: Iterable[int] = ()) -> list[list[int]]:
        """Connected components of the graph with ``removed`` deleted."""
        dead = set(removed)
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s] or s in dead:
                continue
            seen[s] = True
            comp = [s]
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for w in self._adj[u]:
                    if not seen[w] and w not in dead:
                        seen[w] = True
                        comp.append(w)
                        queue.append(w)
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.components()) == 1

    def bfs_distances(self, source: int) -> list[int]:
        """Hop distance from ``source``; -1 marks unreachable nodes."""
        dist = [-1] * self.n
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for w in self._adj[u]:
                if dist[w] < 0:
                    dist[w] = du
                    queue.append(w)
        return dist

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self._adj == other._adj

    def __hash__(self) -> int:
        return hash((self.n, self.edge_set()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self._m})"


# -- named small graphs -------------------------------------------------------

def complete_graph(n: int) -> Graph:
    return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def star_graph(n: int) -> Graph:
    """Star on ``n`` nodes with hub 0."""
    return Graph(n, ((0, v) for v in range(1, n)))


def path_graph(n: int) -> Graph:
    return Graph(n, ((v, v + 1) for v in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, ((v, (v + 1) % n) for v in range(n)))


def gnp_graph(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p); used mostly for tests and experiments."""
    rng = np.random.default_rng(seed)
    coins = rng.random((n, n))
    return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, n) if coins[u, v] < p))


# -- generators ----------------------------------------------------------------

def ba_generate(n: int, m: int, seed: int) -> Graph:
    """Barabasi-Albert graph grown from a complete seed graph on ``m + 1`` nodes.

    Every later node attaches to ``m`` distinct existing nodes, each drawn with
    probability proportional to current degree; duplicate draws are rejected.
    The edge count is ``C(m+1, 2) + m * (n - m - 1)``.
    """
    if m < 1 or n < m + 1:
        raise ParameterError(f"need m >= 1 and n >= m + 1, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    g = Graph(n, ((u, v) for u in range(m + 1) for v in range(u + 1, m + 1)))
    # endpoint list: node v appears deg(v) times, so uniform picks are degree-proportional
    stubs = [x for e in g.edges() for x in e]
    for new in range(m + 1, n):
        targets: list[int] = []
        while len(targets) < m:
            t = stubs[int(rng.integers(len(stubs)))]
            if t not in targets:
                targets.append(t)
        for t in targets:
            g.add_edge(new, t)
            stubs.extend((new, t))
    return g


def random_walk_sample(
    g: Graph, target_n: int, seed: int, *, step_factor: int = 100, restarts: int = 10
) -> Graph:
    """Induced subgraph on the first ``target_n`` distinct nodes of a random walk.

    Nodes are relabelled in visit order. Each attempt walks at most
    ``step_factor * n`` steps from a uniformly random start; up to ``restarts``
    attempts are made before giving up with :class:`SamplingError`.
    """
    if not 1 <= target_n <= g.n:
        raise ParameterError(f"target_n must lie in 1..{g.n}, got {target_n}")
    rng = np.random.default_rng(seed)
    nbrs = [g.neighbors(v) for v in range(g.n)]
    for _ in range(restarts):
        cur = int(rng.integers(g.n))
        order = [cur]
        seen = {cur}
        for _ in range(step_factor * g.n):
            if len(order) >= target_n:
                break
            if not nbrs[cur]:
                break
            cur = nbrs[cur][int(rng.integers(len(nbrs[cur])))]
            if cur not in seen:
                seen.add(cur)
                order.append(cur)
        if len(order) >= target_n:
            return g.induced_subgraph(order)
    raise SamplingError(
        f"random walk did not reach {target_n} distinct nodes after {restarts} restarts"
    )


# -- elementary queries ------------------------------------------------------

def largest_cc_fraction(g: Graph, removed: Iterable[int] = ()) -> float:
    """Largest surviving component size divided by the original node count."""
    if g.n == 0:
        return 0.0
    comps = g.components(removed)
    if not comps:
        return 0.0
    return max(len(c) for c in comps) / g.n


def betweenness(g: Graph, alive: Sequence[bool] | None = None) -> np.ndarray:
    """Exact shortest-path betweenness (Brandes), unnormalized.

    Each unordered pair is counted once. With ``alive`` given, the score is
    computed on the subgraph induced by the alive nodes and dead nodes get 0.
    """
    n = g.n
    if alive is None:
        alive = [True] * n
    adj = [[w for w in g.neighbors(v) if alive[w]] if alive[v] else [] for v in range(n)]
    cb = np.zeros(n)
    for s in range(n):
        if not alive[s]:
            continue
        stack = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        sigma[s] = 1
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return cb / 2.0


# -- edge-list files -------------------------------------------------------------

def parse_edge_list(text: str) -> Graph:
    """Parse whitespace-separated integer pairs.

    Ids that already form ``0..n-1`` are kept; any other id set is compacted
    to ``0..n-1`` in first-seen order.
    """
    index: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(line_no, f"expected two node ids, got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(line_no, f"non-integer node id in {line!r}") from None
        if u == v:
            raise GraphParseError(line_no, f"self-loop on node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphParseError(line_no, f"duplicate edge {u} {v}")
        seen.add(key)
        for x in (u, v):
            if x not in index:
                index[x] = len(index)
        pairs.append((u, v))
    if sorted(index) != list(range(len(index))):
        pairs = [(index[u], index[v]) for u, v in pairs]
    return Graph(len(index), pairs)


def load_edge_list(path: str | Path) -> Graph:
    return parse_edge_list(Path(path).read_text())


def format_edge_list(g: Graph) -> str:
    return "".join(f"{u} {v}\n" for u, v in g.edges())


def save_edge_list(g: Graph, path: str | Path) -> None:
    Path(path).write_text(format_edge_list(g))
