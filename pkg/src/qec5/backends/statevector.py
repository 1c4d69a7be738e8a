"""Dense state-vector engine (exact oracle for small circuits)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuit import DEPOL1, DEPOL2, IDLE, MEASURE, MFLIP, PAULI, RESET, Circuit, Instruction
from ..gates import gate_unitary
from ..noise import depol1_batch, depol2_batch, mflip_batch
from ..pauli import PauliString, clock_matrix, shift_matrix

MAX_AMPLITUDES = 10_000_000


class MemoryBudgetError(MemoryError):
    pass


@dataclass
class StateVector:
    """Amplitudes stored as an ``n``-axis tensor of shape ``(q,) * n``.

    Axis ``k`` is qudit ``k``; the flattened order is big-endian (qudit 0 most
    significant), matching ``np.kron`` of single-qudit factors.
    """

    q: int
    n: int
    amps: np.ndarray

    @classmethod
    def zeros(cls, q: int, n: int) -> "StateVector":
        if q**n > MAX_AMPLITUDES:
            raise MemoryBudgetError(f"{q}^{n} amplitudes exceed the budget of {MAX_AMPLITUDES}")
        amps = np.zeros((q,) * n, dtype=complex)
        amps[(0,) * n] = 1
        return cls(q, n, amps)

    @classmethod
    def basis(cls, q: int, digits) -> "StateVector":
        sv = cls.zeros(q, len(digits))
        sv.amps[(0,) * len(digits)] = 0
        sv.amps[tuple(int(d) % q for d in digits)] = 1
        return sv

    def copy(self) -> "StateVector":
        return StateVector(self.q, self.n, self.amps.copy())

    @property
    def vector(self) -> np.ndarray:
        return self.amps.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def apply(self, unitary: np.ndarray, targets) -> None:
        """Apply a ``q^k x q^k`` matrix to qudits ``targets`` (in that order)."""
        targets = list(targets)
        k = len(targets)
        u = unitary.reshape((self.q,) * (2 * k))
        moved = np.tensordot(u, self.amps, axes=(list(range(k, 2 * k)), targets))
        self.amps = np.moveaxis(moved, list(range(k)), targets)

    def apply_pauli(self, p: PauliString, targets) -> None:
        for t, x, z in zip(targets, p.xs, p.zs):
            if x or z:
                self.apply(
                    np.linalg.matrix_power(shift_matrix(self.q), x)
                    @ np.linalg.matrix_power(clock_matrix(self.q), z),
                    [t],
                )

    def probabilities(self, target: int) -> np.ndarray:
        axes = tuple(a for a in range(self.n) if a != target)
        return np.sum(np.abs(self.amps) ** 2, axis=axes)

    def measure(self, target: int, rng: np.random.Generator) -> int:
        """Projective computational-basis measurement with collapse."""
        probs = self.probabilities(target)
        probs = probs / probs.sum()
        m = int(rng.choice(self.q, p=probs))
        keep = np.zeros(self.q, dtype=bool)
        keep[m] = True
        shape = [1] * self.n
        shape[target] = self.q
        self.amps = self.amps * keep.reshape(shape)
        self.amps /= np.linalg.norm(self.amps)
        return m

    def reset(self, target: int, rng: np.random.Generator) -> None:
        m = self.measure(target, rng)
        if m:
            self.apply(np.linalg.matrix_power(shift_matrix(self.q), (-m) % self.q), [target])

    def dump(self, path) -> None:
        """Write amplitudes as little-endian float64 (real, imag) pairs."""
        pairs = np.empty((self.vector.size, 2), dtype="<f8")
        pairs[:, 0] = self.vector.real
        pairs[:, 1] = self.vector.imag
        pairs.tofile(path)

    @classmethod
    def load(cls, path, q: int, n: int) -> "StateVector":
        pairs = np.fromfile(path, dtype="<f8").reshape(-1, 2)
        amps = (pairs[:, 0] + 1j * pairs[:, 1]).reshape((q,) * n)
        return cls(q, n, amps)


def stabilizer_expectation(state: StateVector, s: PauliString) -> complex:
    """``<psi| U(s) |psi>`` including the phase of ``s``."""
    if s.q != state.q or s.n != state.n:
        raise ValueError("Pauli and state sizes differ")
    other = state.copy()
    other.apply_pauli(s.phaseless(), range(state.n))
    val = np.vdot(state.vector, other.vector)
    return complex(val * np.exp(1j * np.pi * s.phase / s.q))


def sv_run(
    circuit: Circuit,
    rng: np.random.Generator,
    initial: StateVector | None = None,
    check_norm: bool = False,
) -> tuple[StateVector, list[int]]:
    """Run a circuit exactly; returns the final state and the measurement record.

    Unsampled noise instructions (``DEPOL1`` etc.) are sampled on the fly
    from ``rng``; ``PAULI`` faults are applied as given.
    """
    q = circuit.q
    state = initial.copy() if initial is not None else StateVector.zeros(q, circuit.n_qudits)
    if state.n != circuit.n_qudits:
        raise ValueError("initial state has the wrong number of qudits")
    record: list[int] = []
    for moment in circuit.moments:
        for ins in moment:
            _apply(state, ins, rng, record)
        if check_norm and abs(state.norm() - 1) > 1e-9:
            raise ArithmeticError("state norm drifted")
    return state, record


def _apply(state: StateVector, ins: Instruction, rng, record: list[int]) -> None:
    q = state.q
    if ins.is_gate:
        state.apply(gate_unitary(ins.op, q), ins.targets)
    elif ins.op == MEASURE:
        record.append(state.measure(ins.targets[0], rng))
    elif ins.op == RESET:
        state.reset(ins.targets[0], rng)
    elif ins.op == IDLE:
        pass
    elif ins.op == PAULI:
        xs, zs = ins.params[0::2], ins.params[1::2]
        state.apply_pauli(PauliString(q, xs, zs), ins.targets)
    elif ins.op == DEPOL1:
        x, z = depol1_batch(ins.params[0], q, rng, 1)
        state.apply_pauli(PauliString(q, (x[0],), (z[0],)), ins.targets)
    elif ins.op == DEPOL2:
        x1, z1, x2, z2 = depol2_batch(ins.params[0], q, rng, 1)
        state.apply_pauli(PauliString(q, (x1[0], x2[0]), (z1[0], z2[0])), ins.targets)
    elif ins.op == MFLIP:
        x, _ = mflip_batch(ins.params[0], q, rng, 1)
        state.apply_pauli(PauliString(q, (x[0],), (0,)), ins.targets)
    else:  # pragma: no cover - Instruction validates its op
        raise ValueError(f"cannot simulate {ins.op}")
