import networkx as nx
import numpy as np
import pytest
from hypothesis import settings

from rewire_forge.graph import Graph, gnp_graph

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


def random_graphs(count, n_lo=4, n_hi=20, seed=0, connected=False):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(n_lo, n_hi + 1))
        g = gnp_graph(n, float(rng.uniform(0.15, 0.6)), int(rng.integers(1 << 31)))
        if connected and not g.is_connected():
            continue
        out.append(g)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
