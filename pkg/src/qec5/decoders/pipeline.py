"""Decoder assembly: DEM -> (flag table) -> mwpm / bp / bm, with batching.

:class:`Decoder` turns batches of detection events and flag outcomes into
data-error estimates.  Identical rows are decoded once; rows whose matching
had several optimal solutions are re-decoded per shot so that random
tie-breaking acts independently on every shot.
"""
from __future__ import annotations

import numpy as np

from ..code5 import build_check_matrix
from ..field import in_row_space
from ..noise import NoiseModel
from .bm import BeliefMatching
from .bp import BPDecoder
from .dem import build_dem, build_lines
from .flags import build_flag_table
from .mwpm import MatchingDecoder, graph_from_dem

DECODERS = ("mwpm", "bp", "bm")
# priors need a nonzero rate even when the sampled noise is off
_MIN_PRIOR_P = 1e-4


def check_success(residual, q: int) -> bool:
    """True iff the phaseless residual ``(x | z)`` lies in the stabilizer row space."""
    vec = residual.symplectic() if hasattr(residual, "symplectic") else np.asarray(residual)
    return in_row_space(np.asarray(vec) % q, build_check_matrix(q).xz, q)


def success_mask(residuals: np.ndarray, q: int) -> np.ndarray:
    """Vectorised :func:`check_success` over rows of ``residuals``."""
    from .dem import coset_rep

    return ~coset_rep(np.asarray(residuals) % q, q).any(axis=1)


class Decoder:
    """A configured decoder for one memory experiment.

    Parameters
    ----------
    q, cycles : code dimension and number of cycles.
    model : NoiseModel
        Source of the detector error model and the priors.
    decoder : {"mwpm", "bp", "bm"}
    flagged : bool
        Use the flag cycle and the flag look-up table.
    rng : numpy Generator, optional
        Matching tie-breaks.
    """

    def __init__(self, q: int, cycles: int, model: NoiseModel, decoder: str = "bm",
                 flagged: bool = False, optimized: bool = True, rng=None):
        if decoder not in DECODERS:
            raise ValueError(f"unknown decoder {decoder!r}; choose from {', '.join(DECODERS)}")
        self.q, self.cycles, self.name, self.flagged = q, cycles, decoder, flagged
        prior_model = NoiseModel(model.kind, max(model.p, _MIN_PRIOR_P), q, model.uniform_flip)
        self.dem = build_dem(q, cycles, prior_model, flagged, optimized)
        self.table = build_flag_table(q, prior_model.p) if flagged else None
        if decoder == "mwpm":
            self.impl = MatchingDecoder(graph_from_dem(self.dem)[0], rng=rng)
        elif decoder == "bp":
            self.impl = BPDecoder(build_lines(self.dem))
        else:
            self.impl = BeliefMatching(self.dem, rng=rng)

    def _base(self, events: np.ndarray) -> tuple[np.ndarray, bool]:
        """Estimate from unflagged events; second value = result was a random tie-break."""
        if not events.any():
            return np.zeros(10, dtype=np.int64), False
        if self.name == "mwpm":
            est = self.impl.decode(events)
            return est, self.impl.last_tied
        if self.name == "bp":
            state = self.impl.decode(events.reshape(-1))
            return self.impl.estimate(state), False
        est, _ = self.impl.decode(events.reshape(-1))
        return est, self.impl.last_tied

    def decode_one(self, events, flags=None) -> tuple[np.ndarray, bool]:
        ev = np.asarray(events, dtype=np.int64).reshape(-1, 4) % self.q
        corr = np.zeros(10, dtype=np.int64)
        if self.table is not None and flags is not None and np.any(flags):
            ev, corr = self.table.apply(ev, flags)
        est, tied = self._base(ev)
        return (est + corr) % self.q, tied

    def decode_batch(self, events: np.ndarray, flags: np.ndarray | None = None) -> np.ndarray:
        """Estimates for ``events``/``flags`` of shape ``(shots, cycles, 4)``."""
        shots = events.shape[0]
        ev = events.reshape(shots, -1) % self.q
        fl = np.zeros_like(ev) if flags is None else flags.reshape(shots, -1) % self.q
        if not self.flagged:
            fl = np.zeros_like(ev)
        keys = np.concatenate([ev, fl], axis=1)
        out = np.zeros((shots, 10), dtype=np.int64)
        nz = np.flatnonzero(keys.any(axis=1))
        if nz.size == 0:
            return out
        uniq, inverse = np.unique(keys[nz], axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        n_det = ev.shape[1]
        for u in range(uniq.shape[0]):
            rows = nz[inverse == u]
            est, tied = self.decode_one(uniq[u, :n_det], uniq[u, n_det:])
            out[rows[0]] = est
            if tied:
                for r in rows[1:]:
                    out[r], _ = self.decode_one(uniq[u, :n_det], uniq[u, n_det:])
            else:
                out[rows[1:]] = est
        return out
