"""The generalized Clifford gate set as unitaries and as symplectic actions.

Every gate acts on Pauli strings by conjugation ``G P G^dagger``.  The
phaseless part is a fixed integer matrix over Z_q written down from the
conjugation rules; the accompanying phase is read off the explicit unitary
once per (gate, q, local Pauli) and cached.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .field import check_dim
from .pauli import PauliString, clock_matrix, pauli_unitary, shift_matrix

_NAMES = ("X", "Z", "S", "F", "SUM", "M", "S_DAG", "F_DAG", "SUM_DAG", "M_DAG")
_TWO_QUDIT = ("SUM", "SUM_DAG")
_INVERSE = {
    "S": "S_DAG", "S_DAG": "S",
    "F": "F_DAG", "F_DAG": "F",
    "SUM": "SUM_DAG", "SUM_DAG": "SUM",
    "M": "M_DAG", "M_DAG": "M",
}


@dataclass(frozen=True)
class GateKind:
    """A gate mnemonic. ``X`` and ``Z`` carry an integer power."""

    name: str
    power: int = 1

    def __post_init__(self):
        if self.name not in _NAMES:
            raise ValueError(f"unknown gate {self.name!r}")
        if self.name not in ("X", "Z") and self.power != 1:
            raise ValueError(f"{self.name} takes no power")

    @property
    def arity(self) -> int:
        return 2 if self.name in _TWO_QUDIT else 1

    def inverse(self) -> "GateKind":
        if self.name in ("X", "Z"):
            return GateKind(self.name, -self.power)
        return GateKind(_INVERSE[self.name])

    def mnemonic(self, q: int | None = None) -> str:
        if self.name in ("X", "Z"):
            k = self.power % q if q else self.power
            return self.name if k == 1 else f"{self.name}^{k}"
        return self.name

    @classmethod
    def parse(cls, token: str) -> "GateKind":
        if token in ("X_DAG", "Z_DAG"):
            return cls(token[0], -1)
        if token.startswith(("X^", "Z^")):
            return cls(token[0], int(token[2:]))
        return cls(token)


X = GateKind("X")
Z = GateKind("Z")
S = GateKind("S")
F = GateKind("F")
SUM = GateKind("SUM")
M = GateKind("M")
S_DAG = GateKind("S_DAG")
F_DAG = GateKind("F_DAG")
SUM_DAG = GateKind("SUM_DAG")
M_DAG = GateKind("M_DAG")


def omega(q: int) -> complex:
    return np.exp(2j * np.pi / q)


@lru_cache(maxsize=None)
def _unitary(name: str, power: int, q: int) -> np.ndarray:
    w = omega(q)
    n = np.arange(q)
    if name == "X":
        return np.linalg.matrix_power(shift_matrix(q), power % q)
    if name == "Z":
        return np.linalg.matrix_power(clock_matrix(q), power % q)
    if name == "F":
        return w ** np.outer(n, n) / np.sqrt(q)
    if name == "S":
        p = np.diag(np.exp(2j * np.pi * n * (n - q - 2) / (2 * q)))
        zpow = 1 + q // 2 if q % 2 == 0 else (1 + q) // 2
        return np.linalg.matrix_power(clock_matrix(q), zpow) @ p
    if name == "M":
        u = np.zeros((q, q), dtype=complex)
        u[(n * (q - 1)) % q, n] = 1
        return u
    if name == "SUM":
        u = np.zeros((q * q, q * q), dtype=complex)
        for a in range(q):
            for b in range(q):
                u[a * q + (a + b) % q, a * q + b] = 1
        return u
    if name.endswith("_DAG"):
        return _unitary(name[:-4], 1, q).conj().T
    raise ValueError(name)


def gate_unitary(kind: GateKind, q: int) -> np.ndarray:
    """Explicit unitary; two-qudit gates use the (control, target) basis order."""
    q = check_dim(q)
    u = _unitary(kind.name, kind.power, q).copy()
    u.flags.writeable = False
    return u


@lru_cache(maxsize=None)
def _symplectic(name: str, power: int, q: int) -> np.ndarray:
    # column layout: 1 site -> (x, z); 2 sites -> (x_c, x_t, z_c, z_t)
    if name in ("X", "Z"):
        return np.eye(2, dtype=np.int64)
    if name == "F":
        m = [[0, -1], [1, 0]]
    elif name == "F_DAG":
        m = [[0, 1], [-1, 0]]
    elif name == "S":
        m = [[1, 0], [1, 1]]
    elif name == "S_DAG":
        m = [[1, 0], [-1, 1]]
    elif name in ("M", "M_DAG"):
        m = [[-1, 0], [0, -1]]
    elif name == "SUM":
        m = [[1, 0, 0, 0], [1, 1, 0, 0], [0, 0, 1, -1], [0, 0, 0, 1]]
    elif name == "SUM_DAG":
        m = [[1, 0, 0, 0], [-1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 0, 1]]
    else:
        raise ValueError(name)
    return np.array(m, dtype=np.int64) % q


def symplectic_matrix(kind: GateKind, q: int) -> np.ndarray:
    m = _symplectic(kind.name, kind.power, q).copy()
    m.flags.writeable = False
    return m


def _local_pauli(q: int, vec) -> PauliString:
    return PauliString.from_symplectic(q, vec)


def _read_phase(target: np.ndarray, base: np.ndarray, q: int) -> int | None:
    """Exponent ``a`` (half-units of w) with ``target == w^(a/2) base``, else None."""
    idx = np.unravel_index(np.argmax(np.abs(base)), base.shape)
    ratio = target[idx] / base[idx]
    a = int(round(np.angle(ratio) * q / np.pi)) % (2 * q)
    if np.allclose(target, np.exp(1j * np.pi * a / q) * base, atol=1e-9):
        return a
    return None


@lru_cache(maxsize=None)
def _phase_from_oracle(name: str, power: int, q: int, local: tuple[int, ...]) -> int:
    kind = GateKind(name, power)
    u = _unitary(name, power, q)
    image = (_symplectic(name, power, q) @ np.array(local)) % q
    target = u @ pauli_unitary(_local_pauli(q, local)) @ u.conj().T
    a = _read_phase(target, pauli_unitary(_local_pauli(q, image)), q)
    if a is None:
        raise ArithmeticError(f"{kind.mnemonic(q)} does not map {local} to a Pauli")
    return a


@dataclass(frozen=True)
class GateAction:
    """Symplectic action of a gate: matrix over Z_q plus a phase function."""

    kind: GateKind
    q: int
    matrix: np.ndarray = field(compare=False)
    phase_fn: Callable[[tuple[int, ...]], int] = field(compare=False, repr=False)

    @classmethod
    def of(cls, kind: GateKind, q: int) -> "GateAction":
        q = check_dim(q)
        return cls(
            kind,
            q,
            symplectic_matrix(kind, q),
            lambda local, _k=kind, _q=q: _phase_from_oracle(_k.name, _k.power, _q, tuple(local)),
        )

    @property
    def arity(self) -> int:
        return self.matrix.shape[0] // 2

    def apply_local(self, local: Sequence[int]) -> tuple[tuple[int, ...], int]:
        local = tuple(int(v) % self.q for v in local)
        image = tuple(int(v) for v in (self.matrix @ np.array(local)) % self.q)
        return image, self.phase_fn(local)


def _local_of(p: PauliString, targets: Sequence[int]) -> tuple[int, ...]:
    return tuple(p.xs[t] for t in targets) + tuple(p.zs[t] for t in targets)


def conjugate(kind: GateKind, targets: Sequence[int], p: PauliString) -> PauliString:
    """Return ``G p G^dagger`` for gate ``kind`` applied on ``targets``."""
    targets = tuple(targets)
    if len(targets) != kind.arity:
        raise ValueError(f"{kind.name} takes {kind.arity} target(s), got {len(targets)}")
    if len(set(targets)) != len(targets) or any(not 0 <= t < p.n for t in targets):
        raise ValueError(f"invalid targets {targets} for {p.n} sites")
    action = GateAction.of(kind, p.q)
    image, dphase = action.apply_local(_local_of(p, targets))
    xs, zs = list(p.xs), list(p.zs)
    k = len(targets)
    for j, t in enumerate(targets):
        xs[t] = image[j]
        zs[t] = image[k + j]
    return PauliString(p.q, tuple(xs), tuple(zs), p.phase + dphase)


def is_symplectic(matrix: np.ndarray, q: int) -> bool:
    """True iff ``matrix`` preserves the symplectic form over Z_q."""
    m = np.asarray(matrix, dtype=np.int64) % q
    k = m.shape[0] // 2
    omega_form = np.block(
        [[np.zeros((k, k), dtype=np.int64), -np.eye(k, dtype=np.int64)],
         [np.eye(k, dtype=np.int64), np.zeros((k, k), dtype=np.int64)]]
    )
    return bool(np.all((m.T @ omega_form @ m - omega_form) % q == 0))


def verify_symplectic(action: GateAction) -> bool:
    """Check an action against the symplectic condition and the matrix oracle."""
    q = action.q
    if not is_symplectic(action.matrix, q):
        return False
    if q > 7:
        return True
    u = gate_unitary(action.kind, q)
    for j in range(2 * action.arity):
        gen = np.zeros(2 * action.arity, dtype=np.int64)
        gen[j] = 1
        image = (action.matrix @ gen) % q
        target = u @ pauli_unitary(_local_pauli(q, gen)) @ u.conj().T
        if _read_phase(target, pauli_unitary(_local_pauli(q, image)), q) is None:
            return False
    return True


def sequence_unitary(kinds: Sequence[GateKind], q: int) -> np.ndarray:
    """Unitary of single-qudit gates applied left to right (first element first)."""
    u = np.eye(q, dtype=complex)
    for k in kinds:
        u = gate_unitary(k, q) @ u
    return u


# T = S F (F applied first) cycles the Heisenberg-Weyl operators up to phase.
T_SEQUENCE = (F, S)
T_DAG_SEQUENCE = (S_DAG, F_DAG)
