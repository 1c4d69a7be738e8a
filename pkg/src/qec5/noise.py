"""Pauli noise channels and the two noise models.

Two models are supported:

``sdep`` (standard depolarisation)
    single-qudit depolarisation with probability ``p`` on every data qudit
    once per cycle, before extraction; gates and readout are perfect.
``circuit`` (circuit-level)
    ``DEPOL1(p)`` after every single-qudit gate and idle marker,
    ``DEPOL2(p)`` after every two-qudit gate and ``MFLIP(p)`` before every
    readout, in all cycles except the last one, which is error-free.

A model is first turned into a *template* (a circuit with noise
instructions in their own moments) and then sampled into explicit ``PAULI``
faults by :func:`instrument`.  The batched samplers are used by the frame
engine.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import (
    DEPOL1, DEPOL2, IDLE, MEASURE, MFLIP, PAULI, Circuit, Instruction, _drop_empty,
)
from .field import check_dim
from .pauli import PauliString

SDEP = "sdep"
CIRCUIT = "circuit"


class UnscheduledCircuitError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Noise model of kind ``sdep`` or ``circuit`` with physical rate ``p``.

    ``uniform_flip`` switches the readout error from a single shift ``X`` to a
    uniformly random ``X^k`` (k = 1..q-1); it is a sensitivity knob and off by
    default.
    """

    kind: str
    p: float
    q: int
    uniform_flip: bool = False

    def __post_init__(self):
        if self.kind not in (SDEP, CIRCUIT):
            raise ValueError(f"unknown noise model {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        check_dim(self.q)

    @classmethod
    def standard(cls, p: float, q: int) -> "NoiseModel":
        return cls(SDEP, p, q)

    @classmethod
    def circuit_level(cls, p: float, q: int, **kw) -> "NoiseModel":
        return cls(CIRCUIT, p, q, **kw)


@dataclass(frozen=True)
class FaultEvent:
    """A sampled fault: the moment it was inserted at and the Pauli applied."""

    moment: int
    qudits: tuple[int, ...]
    pauli: PauliString


# -- samplers -----------------------------------------------------------------------

def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError("probability must lie in [0, 1]")


def depol1_batch(p: float, q: int, rng: np.random.Generator, size: int):
    """``size`` draws of the single-qudit channel as ``(x, z)`` integer arrays."""
    _check_p(p)
    hit = rng.random(size) < p * (q * q - 1) / (q * q)
    k = np.where(hit, rng.integers(1, q * q, size=size), 0)
    return k // q, k % q


def depol2_batch(p: float, q: int, rng: np.random.Generator, size: int):
    """Two-qudit channel; returns ``(x1, z1, x2, z2)`` arrays."""
    _check_p(p)
    q4 = q**4
    hit = rng.random(size) < p * (q4 - 1) / q4
    k = np.where(hit, rng.integers(1, q4, size=size), 0)
    return k // q**3, (k // q**2) % q, (k // q) % q, k % q


def mflip_batch(p: float, q: int, rng: np.random.Generator, size: int, uniform: bool = False):
    """Readout shift: ``X`` with probability ``p`` (``X^k`` uniform if asked)."""
    _check_p(p)
    hit = rng.random(size) < p
    k = rng.integers(1, q, size=size) if uniform else np.ones(size, dtype=np.int64)
    return np.where(hit, k, 0), np.zeros(size, dtype=np.int64)


def sample_depol1(p: float, q: int, rng: np.random.Generator) -> PauliString:
    x, z = depol1_batch(p, check_dim(q), rng, 1)
    return PauliString(q, (int(x[0]),), (int(z[0]),))


def sample_depol2(p2: float, q: int, rng: np.random.Generator) -> PauliString:
    x1, z1, x2, z2 = depol2_batch(p2, check_dim(q), rng, 1)
    return PauliString(q, (int(x1[0]), int(x2[0])), (int(z1[0]), int(z2[0])))


def sample_measure_flip(p_m: float, q: int, rng: np.random.Generator, uniform=False) -> PauliString:
    x, z = mflip_batch(p_m, check_dim(q), rng, 1, uniform)
    return PauliString(q, (int(x[0]),), (0,))


def depol1_probabilities(p: float, q: int) -> dict[tuple[int, int], float]:
    """Analytic distribution of the single-qudit channel over ``(x, z)``."""
    probs = {(x, z): p / q**2 for x in range(q) for z in range(q)}
    probs[(0, 0)] = 1 - p * (q * q - 1) / q**2
    return probs


# -- templates ---------------------------------------------------------------------

def noise_template(circuit: Circuit, model: NoiseModel, noisy_last: bool = False) -> Circuit:
    """Insert noise instructions (not yet sampled) into a scheduled circuit.

    Noise goes into moments of its own placed directly before (readout flips)
    or after (gate and idle noise) the moment it belongs to, so moment
    disjointness is preserved.  Cycle markers move to include the noise.
    Circuit-level noise skips the final cycle unless ``noisy_last`` is set
    (used to study a single cycle in isolation).
    """
    if not circuit.scheduled:
        raise UnscheduledCircuitError("noise instrumentation needs a scheduled circuit")
    if circuit.q != model.q:
        raise ValueError(f"model dimension {model.q} does not match circuit {circuit.q}")
    if model.p == 0:
        return circuit
    p = model.p
    ranges = circuit.cycle_ranges()
    if not ranges:
        raise ValueError("circuit has no syndrome cycles to attach noise to")
    moments: list[tuple[Instruction, ...]] = []
    starts = []
    start_of = {a: c for c, (a, _) in enumerate(ranges)}
    last_cycle = len(ranges) - 1
    for k, moment in enumerate(circuit.moments):
        cyc = circuit.cycle_of_moment(k)
        if k in start_of:
            starts.append(len(moments))
            if model.kind == SDEP:
                moments.append(tuple(Instruction(DEPOL1, (d,), (p,)) for d in circuit.data))
        noisy = model.kind == CIRCUIT and 0 <= cyc and (cyc < last_cycle or noisy_last)
        if not noisy:
            moments.append(moment)
            continue
        pre = [Instruction(MFLIP, i.targets, (p,)) for i in moment if i.op == MEASURE]
        post = []
        for ins in moment:
            if ins.is_gate and ins.op.arity == 2:
                post.append(Instruction(DEPOL2, ins.targets, (p,)))
            elif (ins.is_gate and ins.op.arity == 1) or ins.op == IDLE:
                post.append(Instruction(DEPOL1, ins.targets, (p,)))
        for m in (pre, moment, post):
            if m:
                moments.append(tuple(m))
    return Circuit(circuit.q, circuit.n_qudits, moments, circuit.data, tuple(starts), True)


def noise_locations(template: Circuit) -> list[tuple[int, Instruction]]:
    """``(moment, instruction)`` for every noise instruction in a template."""
    return [
        (k, ins)
        for k, m in enumerate(template.moments)
        for ins in m
        if ins.op in (DEPOL1, DEPOL2, MFLIP)
    ]


def instrument(
    circuit: Circuit, model: NoiseModel, rng: np.random.Generator
) -> tuple[Circuit, list[FaultEvent]]:
    """Sample one noise trajectory.

    Returns the circuit with every noise instruction replaced by the sampled
    ``PAULI`` fault (or dropped when the identity was drawn) and the list of
    faults.  With ``p = 0`` the input circuit is returned unchanged.
    """
    template = noise_template(circuit, model)
    if template is circuit:
        return circuit, []
    q = circuit.q
    events: list[FaultEvent] = []
    moments = []
    for k, moment in enumerate(template.moments):
        out = []
        for ins in moment:
            if ins.op == DEPOL1:
                x, z = depol1_batch(ins.params[0], q, rng, 1)
                params = (int(x[0]), int(z[0]))
            elif ins.op == DEPOL2:
                x1, z1, x2, z2 = depol2_batch(ins.params[0], q, rng, 1)
                params = (int(x1[0]), int(z1[0]), int(x2[0]), int(z2[0]))
            elif ins.op == MFLIP:
                x, z = mflip_batch(ins.params[0], q, rng, 1, model.uniform_flip)
                params = (int(x[0]), 0)
            else:
                out.append(ins)
                continue
            if any(params):
                fault = Instruction(PAULI, ins.targets, params)
                out.append(fault)
                xs, zs = params[0::2], params[1::2]
                events.append(FaultEvent(k, ins.targets, PauliString(q, xs, zs)))
        moments.append(out)
    noisy = _drop_empty(
        Circuit(q, template.n_qudits, [tuple(m) for m in moments], template.data,
                template.cycle_starts, True),
        moments,
    )
    return noisy, events
