"""Detector error model: every single fault of a noisy circuit and its signature.

Faults are enumerated location by location from the noise template and
pushed through the batched frame engine in injection mode.  Each fault maps
to

* detection-event values ``(cycles, 4)`` over Z_q,
* flag outcomes ``(cycles, 4)`` (all zero without a flag qudit),
* its data effect: the final ``(x | z)`` frame on the data qudits, reduced
  modulo the stabilizer row space to a canonical coset representative.

Faults with identical signatures are merged (probabilities add to first
order).  For belief propagation, signatures that are Z_q multiples of one
another, ``k * v``, are grouped into a single Z_q-valued variable (a *line*).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..backends.frame import FrameSimulator
from ..code5 import ANCILLAS, DATA, MemoryLayout, build_check_matrix, build_memory
from ..field import reduce_mod_rows, rref_mod
from ..graph import event_values
from ..noise import NoiseModel, noise_template


@dataclass
class Mechanism:
    events: np.ndarray  # (cycles*4,) ints mod q
    flags: np.ndarray  # (cycles*4,)
    effect: np.ndarray  # (10,) coset representative
    raw_effect: np.ndarray  # (10,) unreduced data frame of one example fault
    prob: float
    location: int  # example noise location


@dataclass
class DetectorErrorModel:
    q: int
    cycles: int
    flagged: bool
    mechanisms: list[Mechanism]

    @property
    def n_detectors(self) -> int:
        return 4 * self.cycles

    def arrays(self, include_flagged: bool = True):
        """Stacked ``(events, flags, effects, probs)`` arrays."""
        ms = [m for m in self.mechanisms if include_flagged or not m.flags.any()]
        if not ms:
            z = np.zeros((0, self.n_detectors), dtype=np.int64)
            return z, z.copy(), np.zeros((0, 10), dtype=np.int64), np.zeros(0)
        return (
            np.array([m.events for m in ms]),
            np.array([m.flags for m in ms]),
            np.array([m.effect for m in ms]),
            np.array([m.prob for m in ms]),
        )


def stabilizer_basis(q: int):
    return rref_mod(build_check_matrix(q).xz, q)


def coset_rep(vecs: np.ndarray, q: int) -> np.ndarray:
    """Canonical representative of ``vecs`` modulo the stabilizer row space."""
    basis, pivots = stabilizer_basis(q)
    return reduce_mod_rows(np.asarray(vecs) % q, basis, pivots, q)


def records_to_syndromes(record: np.ndarray, layout: MemoryLayout):
    """Split a measurement record into ancilla outcomes and flag outcomes.

    Returns arrays of shape ``(shots, cycles, 4)``.
    """
    record = np.atleast_2d(record)
    anc = layout.ancilla_index()
    m = record[:, anc]
    if layout.flagged:
        fl_idx = layout.flag_index()
        fl = record[:, fl_idx]
    else:
        fl = np.zeros_like(m)
    return m, fl


def data_frame(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``(x | z)`` restricted to the data qudits."""
    return np.concatenate([x[:, list(DATA)], z[:, list(DATA)]], axis=1)


def build_dem(
    q: int, cycles: int, model: NoiseModel, flagged: bool = False, optimized: bool = True
) -> DetectorErrorModel:
    """Enumerate and merge all single faults of the noisy memory circuit."""
    return _build_dem(q, cycles, model.kind, float(model.p), flagged, optimized, model.uniform_flip)


@lru_cache(maxsize=32)
def _build_dem(q, cycles, kind, p, flagged, optimized, uniform_flip) -> DetectorErrorModel:
    model = NoiseModel(kind, p, q, uniform_flip)
    circuit, layout = build_memory(q, cycles, flagged, optimized)
    template = noise_template(circuit, model)
    sim = FrameSimulator(template, uniform_flip=uniform_flip)
    injections = {}
    rows = 0
    probs, locs = [], []
    for loc in range(len(sim.locations)):
        fx, fz, pe = sim.location_faults(loc)
        k = fx.shape[0]
        injections[loc] = (np.arange(rows, rows + k), fx, fz)
        probs.extend([pe] * k)
        locs.extend([loc] * k)
        rows += k
    res = sim.run(rows, injections=injections)
    m, fl = records_to_syndromes(res.record, layout)
    ev = event_values(m, q).reshape(rows, -1)
    fl = fl.reshape(rows, -1) % q
    raw = data_frame(res.x, res.z) % q
    eff = coset_rep(raw, q)
    merged: dict[bytes, Mechanism] = {}
    for r in range(rows):
        if not ev[r].any() and not fl[r].any() and not eff[r].any():
            continue
        key = ev[r].tobytes() + fl[r].tobytes() + eff[r].tobytes()
        if key in merged:
            merged[key].prob += probs[r]
        else:
            merged[key] = Mechanism(ev[r].copy(), fl[r].copy(), eff[r].copy(), raw[r].copy(),
                                    probs[r], locs[r])
    return DetectorErrorModel(q, cycles, flagged, list(merged.values()))


# -- lines (Z_q-valued BP variables) ---------------------------------------------

@dataclass
class LineModel:
    """Mechanisms grouped into Z_q lines for belief propagation.

    ``H[d, v]`` is the base event vector of variable ``v``; ``effect[v]`` its
    base data effect; ``prior[v, k]`` the probability that the line takes
    value ``k`` (effect ``k * base``).
    """

    q: int
    H: np.ndarray
    effect: np.ndarray
    prior: np.ndarray
    members: list[list[tuple[int, int]]]  # (mechanism index, multiple k)


def _normalize_line(vec: np.ndarray, q: int) -> tuple[np.ndarray, int]:
    """Scale so the first nonzero entry is 1; returns (base, k) with vec = k*base."""
    nz = np.flatnonzero(vec)
    lead = int(vec[nz[0]])
    inv = pow(lead, -1, q)
    return (vec * inv) % q, lead


def build_lines(dem: DetectorErrorModel, include_flagged: bool = False) -> LineModel:
    q = dem.q
    ev, fl, eff, probs = dem.arrays(include_flagged)
    groups: dict[bytes, int] = {}
    bases, base_eff, priors, members = [], [], [], []
    for j in range(ev.shape[0]):
        vec = np.concatenate([ev[j], eff[j]])
        if not vec.any():
            continue
        base, k = _normalize_line(vec, q)
        key = base.tobytes()
        if key not in groups:
            groups[key] = len(bases)
            bases.append(base[: ev.shape[1]])
            base_eff.append(base[ev.shape[1]:])
            priors.append(np.zeros(q))
            members.append([])
        v = groups[key]
        priors[v][k] += probs[j]
        members[v].append((j, k))
    prior = np.array(priors) if priors else np.zeros((0, q))
    if prior.size:
        prior[:, 0] = np.clip(1 - prior[:, 1:].sum(axis=1), 1e-12, None)
        prior /= prior.sum(axis=1, keepdims=True)
    H = np.array(bases, dtype=np.int64).T if bases else np.zeros((ev.shape[1], 0), dtype=np.int64)
    E = np.array(base_eff, dtype=np.int64) if base_eff else np.zeros((0, 10), dtype=np.int64)
    return LineModel(q, H, E, prior, members)


def ancilla_of_detector(d: int) -> tuple[int, int]:
    """Detector index -> ``(cycle, stabilizer)``."""
    return divmod(d, 4)


__all__ = [
    "ANCILLAS", "DetectorErrorModel", "LineModel", "Mechanism", "build_dem", "build_lines",
    "coset_rep", "data_frame", "records_to_syndromes",
]
