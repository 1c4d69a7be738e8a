"""Minimum-weight perfect matching on the q-ary expanded graph.

Matching in the expanded graph needs one extra idea compared with qubits: an
edge ``{x, y}`` explains events ``x`` and ``y``, so continuing a chain from
an intermediate node ``y`` requires an edge touching the *conjugate* node
``conj(y)`` (same ancilla and cycle, value ``-v``) to cancel it.  Paths are
therefore shortest paths in a directed graph with arcs ``x -> conj(y)`` and
``y -> conj(x)`` for every edge; the distance between events ``n1`` and
``n2`` is the length of ``n1 -> ... -> conj(n2)``, and an event is matched to
the boundary along ``n1 -> ... -> BOUNDARY``.

The matching itself is exact: dynamic programming over subsets for small
event counts (with uniformly random choice among equally good matchings),
and ``networkx``'s blossom implementation beyond that.
"""
from __future__ import annotations

import math
from functools import lru_cache

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..graph import BOUNDARY, DetectorGraph, GraphEdge

_TOL = 1e-9


def probability_weight(p: float) -> float:
    """``log((1 - p) / p)`` clipped so that weights stay positive."""
    p = min(max(float(p), 1e-15), 0.5 - 1e-9)
    return math.log((1 - p) / p)


class MatchingDecoder:
    """Exact q-ary MWPM over a :class:`~qec5.graph.DetectorGraph`.

    Parameters
    ----------
    graph : DetectorGraph
        Ordinary edges are used; hyperedges are ignored.
    weights : sequence of float, optional
        Per-edge weights overriding ``edge.weight``.
    rng : numpy Generator, optional
        Breaks ties between equally good matchings uniformly at random.
        Without it the first optimum found is used.
    exact_limit : int
        Largest event count handled by subset dynamic programming.
    """

    def __init__(self, graph: DetectorGraph, weights=None, rng=None, exact_limit: int = 14):
        self.graph = graph
        self.q = graph.q
        self.rng = rng
        self.exact_limit = exact_limit
        self.last_tied = False  # whether the last matching had several optima
        self.last_edges: list[int] = []
        n = len(graph.nodes)
        self.n = n
        self.b = n  # boundary index in the directed graph
        w = [e.weight for e in graph.edges] if weights is None else list(weights)
        self._build(w)

    def _build(self, weights) -> None:
        arcs: dict[tuple[int, int], tuple[float, tuple[int, ...], int]] = {}

        def add(u, v, w, eff, k):
            if (u, v) not in arcs or w < arcs[(u, v)][0] - _TOL:
                arcs[(u, v)] = (w, eff, k)

        g = self.graph
        for k, (e, w) in enumerate(zip(g.edges, weights)):
            if e.hyper:
                continue
            x, y = e.nodes
            if y == BOUNDARY:
                add(x, self.b, w, e.effect, k)
            elif x == BOUNDARY:
                add(y, self.b, w, e.effect, k)
            else:
                add(x, g.conj(y), w, e.effect, k)
                add(y, g.conj(x), w, e.effect, k)
        self.arcs = arcs
        size = self.n + 1
        rows = [u for u, _ in arcs]
        cols = [v for _, v in arcs]
        # zero weights would vanish in the sparse matrix; shift by a tiny amount
        data = [max(arcs[k][0], 1e-12) for k in arcs]
        mat = csr_matrix((data, (rows, cols)), shape=(size, size))
        self.dist, self.pred = dijkstra(mat, directed=True, return_predecessors=True)
        self._effect_cache: dict[tuple[int, int], np.ndarray] = {}

    def path_edges(self, u: int, v: int) -> list[int]:
        """Graph-edge indices along the stored shortest path ``u -> v``."""
        out = []
        node = v
        while node != u:
            prev = self.pred[u, node]
            if prev < 0:
                raise ValueError(f"no path from {u} to {v}")
            out.append(self.arcs[(prev, node)][2])
            node = prev
        return out

    def path_effect(self, u: int, v: int) -> np.ndarray:
        """Summed effect of the arcs along the stored shortest path ``u -> v``."""
        key = (u, v)
        if key in self._effect_cache:
            return self._effect_cache[key]
        eff = np.zeros(10, dtype=np.int64)
        for k in self.path_edges(u, v):
            eff += np.asarray(self.graph.edges[k].effect)
        eff %= self.q
        self._effect_cache[key] = eff
        return eff

    # -- matching ----------------------------------------------------------------
    def _pair(self, a: int, b: int) -> tuple[float, tuple[int, int]]:
        g = self.graph
        d1 = self.dist[a, g.conj(b)]
        d2 = self.dist[b, g.conj(a)]
        return (d1, (a, g.conj(b))) if d1 <= d2 else (d2, (b, g.conj(a)))

    def match(self, nodes: list[int]) -> list[tuple[int, int | None]]:
        """Optimal pairing of event nodes; ``None`` partner = boundary."""
        k = len(nodes)
        self.last_tied = False
        if k == 0:
            return []
        bcost = [self.dist[n, self.b] for n in nodes]
        pcost = [[self._pair(nodes[i], nodes[j])[0] if i != j else math.inf for j in range(k)]
                 for i in range(k)]
        if k <= self.exact_limit:
            return self._match_dp(nodes, bcost, pcost)
        return self._match_blossom(nodes, bcost, pcost)

    def _match_dp(self, nodes, bcost, pcost):
        k = len(nodes)
        full = (1 << k) - 1

        @lru_cache(maxsize=None)
        def best(mask: int) -> tuple[float, int]:
            if mask == 0:
                return 0.0, 1
            i = (mask & -mask).bit_length() - 1
            rest = mask & ~(1 << i)
            options = [(bcost[i] + best(rest)[0], best(rest)[1])]
            m = rest
            while m:
                j = (m & -m).bit_length() - 1
                m &= m - 1
                sub = best(rest & ~(1 << j))
                options.append((pcost[i][j] + sub[0], sub[1]))
            lo = min(c for c, _ in options)
            count = sum(n for c, n in options if c <= lo + _TOL)
            return lo, count

        cost, n_opt = best(full)
        self.last_tied = n_opt > 1
        if not math.isfinite(cost):
            raise RuntimeError("no perfect matching exists")
        out = []
        mask = full
        while mask:
            i = (mask & -mask).bit_length() - 1
            rest = mask & ~(1 << i)
            target = best(mask)[0]
            choices = []
            if bcost[i] + best(rest)[0] <= target + _TOL:
                choices.append((None, rest, best(rest)[1]))
            m = rest
            while m:
                j = (m & -m).bit_length() - 1
                m &= m - 1
                sub_mask = rest & ~(1 << j)
                if pcost[i][j] + best(sub_mask)[0] <= target + _TOL:
                    choices.append((j, sub_mask, best(sub_mask)[1]))
            if self.rng is not None and len(choices) > 1:
                weights = np.array([c[2] for c in choices], dtype=float)
                pick = choices[self.rng.choice(len(choices), p=weights / weights.sum())]
            else:
                pick = choices[0]
            j, mask, _ = pick
            out.append((nodes[i], None if j is None else nodes[j]))
        return out

    def _match_blossom(self, nodes, bcost, pcost):
        k = len(nodes)
        g = nx.Graph()
        big = 1 + sum(c for c in bcost if math.isfinite(c)) + sum(
            c for row in pcost for c in row if math.isfinite(c)
        )
        for i in range(k):
            # each event has a private boundary copy; copies pair up for free
            g.add_edge(("e", i), ("b", i), weight=big - bcost[i])
            for j in range(i + 1, k):
                if math.isfinite(pcost[i][j]):
                    g.add_edge(("e", i), ("e", j), weight=big - pcost[i][j])
                g.add_edge(("b", i), ("b", j), weight=big)
        mate = nx.max_weight_matching(g, maxcardinality=True)
        out = []
        for u, v in mate:
            if u[0] == "b" and v[0] == "b":
                continue
            if u[0] == "e" and v[0] == "e":
                out.append((nodes[u[1]], nodes[v[1]]))
            else:
                e = u if u[0] == "e" else v
                out.append((nodes[e[1]], None))
        return out

    def decode_nodes(self, nodes: list[int]) -> np.ndarray:
        """Estimated data error (``(x | z)`` vector) explaining the active nodes.

        The graph edges used are left in :attr:`last_edges`.
        """
        est = np.zeros(10, dtype=np.int64)
        used: list[int] = []
        for a, b in self.match(sorted(nodes)):
            u, v = (a, self.b) if b is None else self._pair(a, b)[1]
            est += self.path_effect(u, v)
            used.extend(self.path_edges(u, v))
        self.last_edges = used
        return est % self.q

    def decode(self, events) -> np.ndarray:
        """Decode an ``(cycles, 4)`` event-value array or a list of events."""
        return self.decode_nodes(self.event_nodes(events))

    def event_nodes(self, events) -> list[int]:
        g = self.graph
        if isinstance(events, np.ndarray):
            ev = events.reshape(-1, 4)
            return [g.node_id(i, int(ev[c, i]), c) for c, i in zip(*np.nonzero(ev))]
        return [g.node_id(a, v, c) for a, c, v in events]


def _pairings(ids: tuple[int, ...]):
    """Partitions of ``ids`` into blocks of one or two nodes (fewest blocks first)."""
    out = []

    def rec(rest, blocks):
        if not rest:
            out.append(tuple(blocks))
            return
        a, tail = rest[0], rest[1:]
        rec(tail, blocks + [(a,)])
        for k, b in enumerate(tail):
            rec(tail[:k] + tail[k + 1:], blocks + [(a, b)])

    rec(tuple(ids), [])
    out.sort(key=len)
    return out


def _decompose_hyperedge(ids, effect, existing, q, reduce):
    """Graph-like components for a hyperedge (missing ones get the remainder).

    Returns ``(keys, added)``: the node keys of all components and the list of
    ``(node key, effect)`` components that must be added (empty when the
    hyperedge already splits into existing edges whose effects add up).
    ``None`` when no decomposition with at most one new component exists.
    """
    target = reduce(np.asarray(effect))
    for blocks in _pairings(ids):
        keys = [b if len(b) == 2 else b + (BOUNDARY,) for b in blocks]
        missing = [k for k in keys if k not in existing]
        if len(missing) > 1:
            continue
        total = np.zeros(10, dtype=np.int64)
        for k in keys:
            if k in existing:
                total += np.asarray(existing[k])
        if not missing:
            if np.array_equal(reduce(total), target):
                return keys, []
            continue
        rest = reduce((np.asarray(effect) - total) % q)
        return keys, [(missing[0], tuple(int(v) for v in rest))]
    return None


def graph_from_dem(dem, include_flagged: bool = False) -> tuple[DetectorGraph, list, list]:
    """Matching graph whose edges are the graph-like mechanisms of a DEM.

    Returns ``(graph, edge_probs, hyper)`` where ``hyper`` lists the
    mechanisms with three or more events as ``(node ids, effect, prob,
    component edge indices)``; the last entry is empty when the hyperedge has
    no graph-like decomposition.
    Mechanisms with the same node set are merged into the most likely one.
    A hyperedge that splits into existing edges plus one missing graph-like
    component contributes that component as a new edge (carrying the
    remainder of its effect), so matching can still reach it.
    """
    from ..graph import DetectorNode
    from .dem import coset_rep

    q, cycles = dem.q, dem.cycles
    nodes = [DetectorNode(i, a, c) for c in range(cycles) for i in range(4) for a in range(1, q)]
    graph = DetectorGraph(q, cycles, nodes, [])
    best: dict[tuple[int, ...], tuple[float, tuple[int, ...], float]] = {}
    hyper = []

    def add(ids, eff, prob):
        total = best.get(ids, (0.0, None, 0.0))
        if prob > total[2]:
            best[ids] = (total[0] + prob, eff, prob)
        else:
            best[ids] = (total[0] + prob, total[1], total[2])

    for m in dem.mechanisms:
        if not include_flagged and m.flags.any():
            continue
        ids = tuple(graph.node_id(d % 4, int(m.events[d]), d // 4) for d in np.flatnonzero(m.events))
        if not ids:
            continue
        eff = tuple(int(v) for v in m.effect)
        if len(ids) > 2:
            hyper.append((ids, eff, m.prob))
            continue
        add(ids if len(ids) == 2 else ids + (BOUNDARY,), eff, m.prob)

    def reduce(v):
        return coset_rep(np.asarray(v)[None, :] % q, q)[0]

    existing = {k: v[1] for k, v in best.items()}
    extra: dict[tuple[int, ...], tuple[float, tuple[int, ...], float]] = {}
    decomps = [_decompose_hyperedge(ids, eff, existing, q, reduce) for ids, eff, _ in hyper]
    comp_keys = [found[0] if found else [] for found in decomps]
    for (ids, eff, prob), found in sorted(zip(hyper, decomps), key=lambda t: -t[0][2]):
        for key, rest in (found[1] if found else []):
            old = extra.get(key)
            if old is None:
                extra[key] = (prob, rest, prob)
            elif np.array_equal(reduce(old[1]), reduce(rest)):
                extra[key] = (old[0] + prob, old[1], max(old[2], prob))
    for key, val in extra.items():
        best[key] = val
    edges, probs = [], []
    for ids in sorted(best):
        p_tot, eff, _ = best[ids]
        edges.append(GraphEdge(ids, "dem" if ids not in extra else "dem-hyper", eff,
                               probability_weight(p_tot)))
        probs.append(p_tot)
    graph.edges = edges
    index = {e.nodes: k for k, e in enumerate(edges)}
    hyper = [
        (ids, eff, prob, tuple(index[k] for k in keys) if all(k in index for k in keys) else ())
        for (ids, eff, prob), keys in zip(hyper, comp_keys)
    ]
    return graph, probs, hyper
