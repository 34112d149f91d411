"""Filtration-enhanced GIN encoder.

A graph is turned into nested subgraphs by repeatedly deleting the current
highest-degree node. A shared GIN backbone embeds every level, and node, edge
and graph embeddings are then combined across levels with masked attention.

Batches of graphs, and all filtration levels inside each graph, go through
the backbone as one block-diagonal graph. That keeps the number of tape
operations independent of batch size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ContractError, ParameterError, ShapeError
from .graph import EdgeRef, Graph
from .nn import MLP, GraphNorm, Linear, Module, segment_mean_matrix

PE_DIM = 8
FEATURE_DIM = 1 + PE_DIM
DEFAULT_K = 5


# -- filtration ------------------------------------------------------------------

@dataclass
class FiltratedGraph:
    """Levels ``G^(N-K) .. G^(N)`` of the highest-degree-first filtration.

    Level arrays are indexed ``[level, node]`` with the original graph last.
    Removed nodes stay in the node index space but are flagged absent.
    """

    graph: Graph
    K: int
    removed: list[int]         # v_N, v_{N-1}, ...: the node deleted to form each lower level
    present: np.ndarray        # (K+1, n) bool
    degree: np.ndarray         # (K+1, n) int, 0 for absent nodes
    features: np.ndarray       # (K+1, n, FEATURE_DIM)

    @property
    def num_levels(self) -> int:
        return self.K + 1

    def level_graph(self, level: int) -> Graph:
        """Level subgraph on the full id range; absent nodes are isolated."""
        keep = self.present[level]
        return Graph(self.graph.n, ((u, v) for u, v in self.graph.edges() if keep[u] and keep[v]))

    def level_edges(self, level: int) -> list[tuple[int, int]]:
        keep = self.present[level]
        return [(u, v) for u, v in self.graph.edges() if keep[u] and keep[v]]

    def permuted(self, perm) -> "FiltratedGraph":
        """The same filtration with node ``i`` renamed ``perm[i]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        return FiltratedGraph(
            graph=self.graph.relabel(list(perm)),
            K=self.K,
            removed=[int(perm[v]) for v in self.removed],
            present=self.present[:, inv],
            degree=self.degree[:, inv],
            features=self.features[:, inv],
        )


def positional_encoding(rank: np.ndarray, dim: int = PE_DIM, base: float = 10000.0) -> np.ndarray:
    """Transformer sinusoidal encoding of integer ranks: sin/cos pairs."""
    rank = np.asarray(rank, dtype=np.float64)
    freqs = base ** (-np.arange(0, dim, 2) / dim)
    ang = rank[:, None] * freqs[None, :]
    out = np.empty((len(rank), dim))
    out[:, 0::2] = np.sin(ang)
    out[:, 1::2] = np.cos(ang)
    return out


def node_features(degree: np.ndarray, present: np.ndarray) -> np.ndarray:
    """Normalized degree plus the encoding of the node's degree rank.

    The rank is dense: the number of distinct degree values above the node's
    own, among present nodes, so equal degrees share an encoding.
    """
    n = len(degree)
    feats = np.zeros((n, FEATURE_DIM))
    if not present.any():
        return feats
    deg = degree[present].astype(np.float64)
    top = deg.max()
    distinct = np.unique(deg)[::-1]
    rank = np.searchsorted(-distinct, -deg)
    feats[present, 0] = deg / top if top > 0 else 0.0
    feats[present, 1:] = positional_encoding(rank)
    return feats


def build_filtration(g: Graph, K: int) -> FiltratedGraph:
    """Filtration of order ``K`` (``0 <= K <= N-1``); ties go to the lowest id."""
    n = g.n
    if not 0 <= K <= max(n - 1, 0):
        raise ParameterError(f"filtration order K must lie in 0..{n - 1}, got {K}")
    deg = np.array(g.degrees(), dtype=np.int64)
    present = np.ones(n, dtype=bool)
    presents = [present.copy()]
    degrees = [deg.copy()]
    removed = []
    for _ in range(K):
        v = int(np.argmax(np.where(present, deg, -1)))
        removed.append(v)
        present[v] = False
        for w in g.neighbor_set(v):
            deg[w] -= 1
        deg[v] = 0
        presents.append(present.copy())
        degrees.append(deg.copy())
    presents.reverse()
    degrees.reverse()
    present_arr = np.array(presents)
    degree_arr = np.array(degrees)
    feats = np.stack([node_features(d, p) for d, p in zip(degree_arr, present_arr)])
    return FiltratedGraph(g, K, removed, present_arr, degree_arr, feats)


def default_order(g: Graph, K: int | None = None) -> int:
    k = DEFAULT_K if K is None else K
    return max(0, min(k, g.n - 1))


# -- batching --------------------------------------------------------------------

class EncoderBatch:
    """Index structures for running many filtrated graphs as one disjoint union.

    Rows of the stacked feature matrix are (graph, level, present node)
    triples. Per-level structure (adjacency, normalization segments, readout)
    is block diagonal. Cross-level lookups are padded ``(items, L)`` index
    arrays where ``-1`` marks a missing level.
    """

    def __init__(self, filts: list[FiltratedGraph], *, levels: int | None = None):
        if not filts:
            raise ContractError("empty batch")
        self.filts = filts
        self.B = len(filts)
        L = max(f.num_levels for f in filts) if levels is None else levels
        if L < 1:
            raise ContractError("filtration must contain at least one level")
        self.L = L
        xs, seg, a_rows, a_cols = [], [], [], []
        read_w = []
        node_rows, node_mask, node_top = [], [], []
        edge_rows_i, edge_rows_j, edge_mask, edge_graph = [], [], [], []
        level_seg = np.full((self.B, L), -1, dtype=np.int64)
        level_mask = np.zeros((self.B, L), dtype=bool)
        self.edge_lists: list[list[EdgeRef]] = []
        self.edge_offsets = np.zeros(self.B + 1, dtype=np.int64)
        self.node_offsets = np.zeros(self.B + 1, dtype=np.int64)
        r = s = 0
        for b, f in enumerate(filts):
            n = f.graph.n
            nl = min(f.num_levels, L)
            first = f.num_levels - nl  # drop the lowest levels if L is smaller
            rows = np.full((L, n), -1, dtype=np.int64)
            for li in range(nl):
                lvl = first + li
                pres = f.present[lvl]
                idx = np.flatnonzero(pres)
                rows[li, idx] = np.arange(r, r + len(idx))
                xs.append(f.features[lvl, idx])
                seg.extend([s] * len(idx))
                deg = f.degree[lvl, idx]
                read_w.append((deg > 0).astype(np.float64))
                for u, v in f.level_edges(lvl):
                    a_rows.extend((rows[li, u], rows[li, v]))
                    a_cols.extend((rows[li, v], rows[li, u]))
                level_seg[b, li] = s
                level_mask[b, li] = bool((deg > 0).any())
                r += len(idx)
                s += 1
            nonisolated = np.zeros((L, n), dtype=bool)
            for li in range(nl):
                nonisolated[li] = f.degree[first + li] > 0
            node_rows.append(rows.T)
            node_mask.append(nonisolated.T)
            node_top.append(rows[nl - 1])
            directed = f.graph.directed_edges()
            self.edge_lists.append(directed)
            if directed:
                tails = np.array([e.tail for e in directed])
                heads = np.array([e.head for e in directed])
                ri, rj = rows[:, tails].T, rows[:, heads].T
                edge_rows_i.append(ri)
                edge_rows_j.append(rj)
                edge_mask.append((ri >= 0) & (rj >= 0))
                edge_graph.append(np.full(len(directed), b))
            self.edge_offsets[b + 1] = self.edge_offsets[b] + len(directed)
            self.node_offsets[b + 1] = self.node_offsets[b] + n
        self.num_rows = r
        self.num_segments = s
        self.x = np.concatenate(xs) if xs else np.zeros((0, FEATURE_DIM))
        self.segment = np.array(seg, dtype=np.int64)
        self.adj = scipy.sparse.csr_matrix(
            (np.ones(len(a_rows)), (np.array(a_rows, dtype=np.int64), np.array(a_cols, dtype=np.int64))),
            shape=(r, r),
        )
        self.seg_avg = segment_mean_matrix(self.segment, s)
        self.read_avg = segment_mean_matrix(self.segment, s, np.concatenate(read_w) if read_w else None)
        self.level_seg = level_seg
        self.level_mask = level_mask
        self.node_rows = np.concatenate(node_rows)
        self.node_mask = np.concatenate(node_mask)
        self.node_top_rows = np.concatenate(node_top)
        self.node_isolated = ~self.node_mask.any(axis=1)
        if edge_rows_i:
            self.edge_rows_i = np.concatenate(edge_rows_i)
            self.edge_rows_j = np.concatenate(edge_rows_j)
            self.edge_mask = np.concatenate(edge_mask)
            self.edge_graph = np.concatenate(edge_graph)
        else:
            self.edge_rows_i = self.edge_rows_j = np.zeros((0, L), dtype=np.int64)
            self.edge_mask = np.zeros((0, L), dtype=bool)
            self.edge_graph = np.zeros(0, dtype=np.int64)
        self.num_edges = int(self.edge_offsets[-1])


# -- network -----------------------------------------------------------------------

class GIN(Module):
    """GIN layers with learnable epsilon, graph norm and SELU, plus a jumping-knowledge projection."""

    def __init__(self, rng: np.random.Generator, in_dim: int = FEATURE_DIM, hidden: int = 64, layers: int = 5):
        dims = [in_dim] + [hidden] * layers
        self.eps = [ad.parameter(np.zeros(1)) for _ in range(layers)]
        self.mlps = [MLP([dims[i], hidden, hidden], rng) for i in range(layers)]
        self.norms = [GraphNorm(hidden) for _ in range(layers)]
        self.jk = Linear(hidden * layers, hidden, rng)

    def __call__(self, x: Tensor, adj, segment: np.ndarray, seg_avg) -> Tensor:
        if x.shape[0] != adj.shape[0]:
            raise ShapeError(f"gin: feature rows {x.shape} do not match adjacency {adj.shape}")
        h = x
        outs = []
        for eps, mlp, norm in zip(self.eps, self.mlps, self.norms):
            z = ad.add(ad.mul(h, ad.add(eps, 1.0)), ad.spmm(adj, h))
            h = ad.selu(norm(mlp(z), segment, seg_avg))
            outs.append(h)
        return self.jk(ad.concat(outs, axis=1))


@dataclass
class Embeddings:
    graph: Tensor               # (B, d)
    edge: Tensor                # (E_total, d), directed edges in batch order
    node: Tensor | None         # (N_total, d)
    batch: EncoderBatch


def _pad_index(idx: np.ndarray, pad: int) -> np.ndarray:
    return np.where(idx >= 0, idx, pad)


class FireGNN(Module):
    def __init__(self, rng: np.random.Generator, hidden: int = 64, layers: int = 5, in_dim: int = FEATURE_DIM):
        self.hidden = hidden
        self.gin = GIN(rng, in_dim, hidden, layers)
        self.edge_mlp = MLP([2 * hidden, hidden, hidden], rng)
        self.att_node = ad.parameter(rng.uniform(-1, 1, hidden) / np.sqrt(hidden))
        self.att_edge = ad.parameter(rng.uniform(-1, 1, hidden) / np.sqrt(hidden))
        self.att_graph = ad.parameter(rng.uniform(-1, 1, hidden) / np.sqrt(hidden))
        self.fallback = Linear(in_dim, hidden, rng)

    # building blocks shared with the plain (single level) path
    def level_embeddings(self, batch: EncoderBatch) -> Tensor:
        return self.gin(Tensor(batch.x), batch.adj, batch.segment, batch.seg_avg)

    def edge_transform(self, hi: Tensor, hj: Tensor) -> Tensor:
        """``m_f`` applied to (sum, difference) of the endpoint embeddings."""
        return self.edge_mlp(ad.concat([ad.add(hi, hj), ad.sub(hi, hj)], axis=1))

    def _attend(self, rows: Tensor, index: np.ndarray, mask: np.ndarray, att: Tensor) -> Tensor:
        """Attention-weighted sum over levels.

        ``rows`` holds one embedding per valid (item, level); ``index`` maps
        each (item, level) slot to a row, -1 for missing slots.
        """
        items, L = index.shape
        d = self.hidden
        padded = ad.concat([rows, Tensor(np.zeros((1, d)))], axis=0)
        gathered = ad.take_rows(padded, _pad_index(index, rows.shape[0]).ravel())
        scores = ad.reshape(ad.matmul(gathered, att), (items, L))
        weights = ad.masked_softmax(scores, mask, axis=1)
        return ad.sum(ad.mul(ad.reshape(gathered, (items, L, d)), ad.reshape(weights, (items, L, 1))), axis=1)

    def _fallback_nodes(self, batch: EncoderBatch, out: Tensor) -> Tensor:
        if not batch.node_isolated.any():
            return out
        iso = np.flatnonzero(batch.node_isolated)
        raw = np.zeros((len(batch.node_isolated), batch.x.shape[1]))
        top = batch.node_top_rows[iso]
        raw[iso[top >= 0]] = batch.x[top[top >= 0]]
        proj = self.fallback(Tensor(raw))
        return ad.add(out, ad.mul(proj, batch.node_isolated[:, None].astype(np.float64)))

    def __call__(self, batch: EncoderBatch, need_nodes: bool = True) -> Embeddings:
        if not batch.level_mask.any(axis=1).all():
            raise ContractError("graph embedding needs at least one edge in every input graph")
        H = self.level_embeddings(batch)

        graph_levels = ad.spmm(batch.read_avg, H)
        h_graph = self._attend(graph_levels, np.where(batch.level_mask, batch.level_seg, -1), batch.level_mask, self.att_graph)

        mask = batch.edge_mask
        slots = np.full(mask.shape, -1, dtype=np.int64)
        slots[mask] = np.arange(int(mask.sum()))
        hi = ad.take_rows(H, batch.edge_rows_i[mask])
        hj = ad.take_rows(H, batch.edge_rows_j[mask])
        h_edge = self._attend(self.edge_transform(hi, hj), slots, mask, self.att_edge)

        h_node = None
        if need_nodes:
            node_index = np.where(batch.node_mask, batch.node_rows, -1)
            h_node = self._fallback_nodes(batch, self._attend(H, node_index, batch.node_mask, self.att_node))
        return Embeddings(h_graph, h_edge, h_node, batch)

    def plain(self, batch: EncoderBatch, need_nodes: bool = True) -> Embeddings:
        """Backbone on the top level only, no cross-level aggregation."""
        if batch.L != 1:
            raise ContractError("the plain path expects a single-level batch")
        if not batch.level_mask.all():
            raise ContractError("graph embedding needs at least one edge in every input graph")
        H = self.level_embeddings(batch)
        h_graph = ad.spmm(batch.read_avg, H)
        h_edge = self.edge_transform(ad.take_rows(H, batch.edge_rows_i[:, 0]), ad.take_rows(H, batch.edge_rows_j[:, 0]))
        h_node = None
        if need_nodes:
            keep = batch.node_mask[:, 0].astype(np.float64)[:, None]
            h_node = self._fallback_nodes(batch, ad.mul(ad.take_rows(ad.concat([H, Tensor(np.zeros((1, self.hidden)))], axis=0),
                                                                        _pad_index(batch.node_rows[:, 0], H.shape[0])), keep))
        return Embeddings(h_graph, h_edge, h_node, batch)


def edge_row(emb: Embeddings, tail: int, head: int, graph_index: int = 0) -> int:
    """Row of ``emb.edge`` holding the directed edge ``tail -> head``."""
    batch = emb.batch
    pos = {tuple(e): k for k, e in enumerate(batch.edge_lists[graph_index])}
    if (tail, head) not in pos:
        raise ContractError(f"{tail}->{head} is not an edge of graph {graph_index}")
    return int(batch.edge_offsets[graph_index]) + pos[(tail, head)]


def embed_graph(model: FireGNN, g: Graph, K: int | None = None) -> Embeddings:
    """Convenience wrapper for a single graph."""
    filt = build_filtration(g, default_order(g, K))
    return model(EncoderBatch([filt]))


def embeddings_to_json(emb: Embeddings) -> dict:
    """JSON-friendly dump of a single-graph embedding set."""
    batch = emb.batch
    out = {
        "graph": emb.graph.data[0].tolist(),
        "edges": [
            {"tail": e.tail, "head": e.head, "embedding": emb.edge.data[k].tolist()}
            for k, e in enumerate(batch.edge_lists[0])
        ],
    }
    if emb.node is not None:
        out["nodes"] = emb.node.data[: batch.node_offsets[1]].tolist()
    return out
