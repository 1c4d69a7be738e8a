"""Exhaustive single-fault comparison of the frame engine and the state vector.

Every nontrivial Pauli fault of every noise location of a noisy syndrome
cycle is inserted, one at a time, as an explicit ``PAULI`` instruction.  The
outcome shifts predicted by :func:`~qec5.backends.frame.pf_run` must equal
the outcomes of an exact :func:`~qec5.backends.statevector.sv_run` (the
noiseless outcomes are all zero).  The state-vector runs restart from a
snapshot taken just before the fault, so the shared prefix is simulated once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..circuit import DEPOL1, DEPOL2, MFLIP, PAULI, Circuit, Instruction
from ..code5 import build_memory
from ..noise import CIRCUIT, NoiseModel, noise_template
from .frame import FrameSimulator, pf_run
from .statevector import StateVector, _apply


@dataclass
class CrossCheck:
    q: int
    faults: int = 0
    mismatches: list[tuple] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.faults > 0 and not self.mismatches


def _strip_noise(moments) -> list[tuple[Instruction, ...]]:
    return [tuple(i for i in m if i.op not in (DEPOL1, DEPOL2, MFLIP)) for m in moments]


def single_fault_crosscheck(q: int, flagged: bool = True, rng=None, limit: int | None = None) -> CrossCheck:
    """Compare both engines on every single fault of one noisy cycle."""
    rng = rng if rng is not None else np.random.default_rng(0)
    circuit, _ = build_memory(q, 1, flagged)
    template = noise_template(circuit, NoiseModel(CIRCUIT, 0.5, q), noisy_last=True)
    sim = FrameSimulator(template)
    clean = _strip_noise(template.moments)
    # position (moment, index) of each noise location, in engine order
    where = [(k, j) for k, m in enumerate(template.moments) for j, ins in enumerate(m)
             if ins.op in (DEPOL1, DEPOL2, MFLIP)]
    result = CrossCheck(q)
    state = StateVector.zeros(q, template.n_qudits)
    record: list[int] = []
    next_moment = 0
    for loc, (k, _) in enumerate(where):
        # advance the noiseless reference up to (not including) moment k
        while next_moment < k:
            for ins in clean[next_moment]:
                _apply(state, ins, rng, record)
            next_moment += 1
        targets = sim.locations[loc][1]
        fx, fz, _ = sim.location_faults(loc)
        for row in range(fx.shape[0]):
            params = tuple(int(v) for pair in zip(fx[row], fz[row]) for v in pair)
            fault = Instruction(PAULI, targets, params)
            moments = list(clean)
            moments.insert(k, (fault,))
            noisy = Circuit(q, template.n_qudits, moments, template.data, (), True)
            shifts, _ = pf_run(noisy)
            sv_state, sv_record = state.copy(), list(record)
            for m in moments[k:]:
                for ins in m:
                    _apply(sv_state, ins, rng, sv_record)
            sv = [v % q for v in sv_record]
            result.faults += 1
            if [s % q for s in shifts] != sv:
                result.mismatches.append((loc, targets, params, shifts, sv))
            if limit is not None and result.faults >= limit:
                return result
    return result
