"""Belief matching: BP first, posterior-reweighted matching as the fallback.

If BP's hard decision satisfies the syndrome its estimate is returned.
Otherwise every matching-graph edge is reweighted with ``-log`` of the
posterior probability that its mechanism fired.  Hyperedge mechanisms have
no matching edge; their posterior mass is added to every component of their
graph-like decomposition (see :func:`~qec5.decoders.mwpm.graph_from_dem`).
"""
from __future__ import annotations

import numpy as np

from ..graph import BOUNDARY
from .bp import BPDecoder
from .dem import DetectorErrorModel, build_lines
from .mwpm import MatchingDecoder, graph_from_dem, probability_weight


def _mechanism_node_ids(graph, events: np.ndarray) -> tuple[int, ...]:
    return tuple(graph.node_id(d % 4, int(events[d]), d // 4) for d in np.flatnonzero(events))


class BeliefMatching:
    """BP + MWPM decoder built from a detector error model.

    Parameters
    ----------
    dem : DetectorErrorModel
    rng : numpy Generator, optional
        Tie-breaking for the matching stage.
    max_iters, damping : BP configuration.
    compare_prior : bool
        When BP does not converge, also consider matching with the prior
        weights, alone and after explaining part of the events with a single
        hyperedge mechanism, and keep the candidate whose mechanisms are most
        likely a priori.
    """

    def __init__(self, dem: DetectorErrorModel, rng=None, max_iters: int = 50,
                 damping: float = 0.5, compare_prior: bool = True):
        self.dem = dem
        self.q = dem.q
        self.lines = build_lines(dem, include_flagged=False)
        self.bp = BPDecoder(self.lines, max_iters=max_iters, damping=damping)
        self.graph, self.edge_probs, self.hyper = graph_from_dem(dem, include_flagged=False)
        self.matcher = MatchingDecoder(self.graph, rng=rng)
        self._rng = rng
        self.compare_prior = compare_prior
        self._hyper_weighted = [(frozenset(ids), eff, probability_weight(p))
                                for ids, eff, p, _ in self.hyper]
        self.last_tied = False
        self._map_mechanisms()

    def _map_mechanisms(self) -> None:
        """For each (line, value) the graph edges that carry its posterior."""
        edge_of = {e.nodes: k for k, e in enumerate(self.graph.edges)}
        parts_of = {ids: parts for ids, _, _, parts in self.hyper}
        ev, _, _, _ = self.dem.arrays(include_flagged=False)
        targets: list[tuple[int, int, tuple[int, ...]]] = []
        for v, members in enumerate(self.lines.members):
            for j, k in members:
                ids = _mechanism_node_ids(self.graph, ev[j])
                if not ids:
                    continue
                if len(ids) <= 2:
                    key = ids if len(ids) == 2 else ids + (BOUNDARY,)
                    if key in edge_of:
                        targets.append((v, k, (edge_of[key],)))
                elif parts_of.get(ids):
                    targets.append((v, k, parts_of[ids]))
        self.targets = targets

    def reweighted(self, posteriors: np.ndarray) -> MatchingDecoder:
        mass = np.zeros(len(self.graph.edges))
        for v, k, edges in self.targets:
            for e in edges:
                mass[e] += posteriors[v, k]
        weights = [probability_weight(min(m, 0.5)) for m in mass]
        return MatchingDecoder(self.graph, weights=weights, rng=self._rng)

    def decode(self, events) -> tuple[np.ndarray, bool]:
        """Estimate for a flat detector vector; also reports whether BP converged."""
        s = np.asarray(events, dtype=np.int64).reshape(-1)
        self.last_tied = False
        if not s.any():
            return np.zeros(10, dtype=np.int64), True
        state = self.bp.decode(s)
        if state.converged:
            return self.bp.estimate(state), True
        est, self.last_tied = self._fallback(s, state.posteriors)
        return est, False

    def _fallback(self, s: np.ndarray, posteriors: np.ndarray) -> tuple[np.ndarray, bool]:
        """Matching stage; returns ``(estimate, tie-broken at random)``."""
        events = s.reshape(-1, 4)
        matcher = self.reweighted(posteriors)
        est = matcher.decode(events)
        if not self.compare_prior:
            return est, matcher.last_tied
        weights = [e.weight for e in self.graph.edges]
        best = (sum(weights[k] for k in matcher.last_edges), est, matcher.last_tied)
        # candidates are scored by the prior weight of the mechanisms they use
        nodes = self.matcher.event_nodes(events)
        alt = self.matcher.decode_nodes(nodes)
        cost = sum(weights[k] for k in self.matcher.last_edges)
        if cost < best[0] - 1e-9:
            best = (cost, alt, self.matcher.last_tied)
        active = set(nodes)
        for ids, eff, w in self._hyper_weighted:
            if not active.issuperset(ids):
                continue
            rest = sorted(active.difference(ids))
            alt = self.matcher.decode_nodes(rest)
            cost = w + sum(weights[k] for k in self.matcher.last_edges)
            if cost < best[0] - 1e-9:
                best = (cost, (alt + np.asarray(eff)) % self.q, self.matcher.last_tied)
        return best[1], best[2]
