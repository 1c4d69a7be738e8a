"""Decoders for the 5-qudit code.

The functional entry points below wrap the decoder classes:

* :func:`decode_mwpm` -- exact q-ary minimum-weight perfect matching on a
  :class:`~qec5.graph.DetectorGraph`;
* :func:`decode_bp` -- nonbinary belief propagation on a detector error model;
* :func:`decode_bm` -- belief matching (BP, then reweighted matching);
* :func:`check_success` -- logical success test of a residual error;
* :func:`build_flag_table` -- the hook-error look-up table.

Corrections are phaseless :class:`~qec5.pauli.PauliString` objects on the
five data qudits holding the *estimated* data error; the recovery operation is
its inverse, so a shot succeeds when ``actual - estimate`` is a stabilizer.
"""
from __future__ import annotations

import numpy as np

from ..pauli import PauliString
from .bm import BeliefMatching
from .bp import BPDecoder, BPState
from .dem import DetectorErrorModel, LineModel, build_dem, build_lines
from .flags import FlagEntry, FlagTable, build_flag_table
from .mwpm import MatchingDecoder, graph_from_dem
from .pipeline import DECODERS, Decoder, check_success, success_mask


def _correction(q: int, vec) -> PauliString:
    return PauliString.from_symplectic(q, [int(v) % q for v in vec])


def decode_mwpm(graph, events, rng=None, weights=None) -> PauliString:
    """Minimum-weight matching correction for ``events``.

    Parameters
    ----------
    graph : DetectorGraph
    events : ndarray of shape ``(cycles, 4)`` or list of ``(ancilla, cycle, value)``
    rng : numpy Generator, optional
        Random tie-breaking between equally good matchings.
    weights : sequence of float, optional
        Per-edge weights overriding the graph's own.
    """
    return _correction(graph.q, MatchingDecoder(graph, weights=weights, rng=rng).decode(events))


def _lines(model) -> LineModel:
    if isinstance(model, LineModel):
        return model
    if isinstance(model, DetectorErrorModel):
        return build_lines(model)
    raise TypeError("expected a DetectorErrorModel or LineModel")


def decode_bp(model, events, max_iters: int = 50, damping: float = 0.5) -> BPState:
    """Belief propagation for a flat or ``(cycles, 4)`` detector vector.

    ``model`` is a :class:`DetectorErrorModel` (priors from its mechanisms)
    or an already grouped :class:`LineModel`.
    """
    decoder = BPDecoder(_lines(model), max_iters=max_iters, damping=damping)
    return decoder.decode(np.asarray(events).reshape(-1))


def decode_bm(dem: DetectorErrorModel, events, rng=None) -> PauliString:
    """Belief-matching correction for a flat or ``(cycles, 4)`` detector vector."""
    est, _ = BeliefMatching(dem, rng=rng).decode(np.asarray(events).reshape(-1))
    return _correction(dem.q, est)


__all__ = [
    "BeliefMatching", "BPDecoder", "BPState", "DECODERS", "Decoder", "DetectorErrorModel",
    "FlagEntry", "FlagTable", "LineModel", "MatchingDecoder", "build_dem", "build_flag_table",
    "build_lines", "check_success", "decode_bm", "decode_bp", "decode_mwpm", "graph_from_dem",
    "success_mask",
]
