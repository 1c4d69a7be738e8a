"""Generalized n-qudit Pauli (Heisenberg-Weyl) operators with exact phases.

A :class:`PauliString` is ``w^(phase/2) * X^xs[0] Z^zs[0] (x) ... (x) X^xs[n-1] Z^zs[n-1]``
with ``w = exp(2 pi i / q)``.  Phases are stored in half-units of ``w`` (an
integer modulo ``2q``) so that the qubit ``Y = i X Z`` is representable; every
product of Pauli strings lands on an even half-exponent.

Text form, one token per site separated by spaces, optional leading phase::

    w^2 X2.Z1 I X1 Z2 I

``Xr`` / ``Zs`` / ``Xr.Zs`` give the powers, ``I`` the identity.  The phase
token is ``w^a`` with ``a`` an integer or a half-integer written ``k/2``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .field import DimensionError, check_dim


@dataclass(frozen=True)
class PauliString:
    q: int
    xs: tuple[int, ...]
    zs: tuple[int, ...]
    phase: int = 0  # in units of w^(1/2), modulo 2q

    def __post_init__(self):
        q = check_dim(self.q)
        if len(self.xs) != len(self.zs):
            raise ValueError("xs and zs must have equal length")
        object.__setattr__(self, "xs", tuple(int(v) % q for v in self.xs))
        object.__setattr__(self, "zs", tuple(int(v) % q for v in self.zs))
        object.__setattr__(self, "phase", int(self.phase) % (2 * q))

    # -- constructors -----------------------------------------------------
    @classmethod
    def identity(cls, q: int, n: int) -> "PauliString":
        return cls(q, (0,) * n, (0,) * n)

    @classmethod
    def single(cls, q: int, n: int, site: int, x: int = 0, z: int = 0) -> "PauliString":
        xs = [0] * n
        zs = [0] * n
        xs[site] = x
        zs[site] = z
        return cls(q, tuple(xs), tuple(zs))

    @classmethod
    def from_symplectic(cls, q: int, vec, phase: int = 0) -> "PauliString":
        vec = [int(v) for v in vec]
        n = len(vec) // 2
        return cls(q, tuple(vec[:n]), tuple(vec[n:]), phase)

    @classmethod
    def from_text(cls, q: int, text: str) -> "PauliString":
        return parse_pauli(q, text)

    # -- views ------------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.xs)

    def symplectic(self) -> np.ndarray:
        """Phaseless ``(xs | zs)`` vector of length 2n."""
        return np.array(self.xs + self.zs, dtype=np.int64)

    def phaseless(self) -> "PauliString":
        return PauliString(self.q, self.xs, self.zs)

    def is_identity(self, ignore_phase: bool = False) -> bool:
        trivial = not any(self.xs) and not any(self.zs)
        return trivial if ignore_phase else trivial and self.phase == 0

    @property
    def weight(self) -> int:
        return sum(1 for x, z in zip(self.xs, self.zs) if x or z)

    def support(self) -> list[int]:
        return [i for i, (x, z) in enumerate(zip(self.xs, self.zs)) if x or z]

    def power(self, k: int) -> "PauliString":
        if k < 0:
            raise ValueError("power must be non-negative")
        out = PauliString.identity(self.q, self.n)
        for _ in range(int(k)):
            out = pauli_mul(out, self)
        return out

    def unitary(self) -> np.ndarray:
        return pauli_unitary(self)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def __str__(self) -> str:
        return format_pauli(self)


def _check_compatible(p1: PauliString, p2: PauliString) -> None:
    if p1.q != p2.q:
        raise DimensionError(f"dimension mismatch: {p1.q} vs {p2.q}")
    if p1.n != p2.n:
        raise ValueError(f"length mismatch: {p1.n} vs {p2.n}")


def pauli_mul(p1: PauliString, p2: PauliString) -> PauliString:
    """Normal-ordered product using ``X^r Z^s X^t Z^u = w^(s t) X^(r+t) Z^(s+u)``."""
    _check_compatible(p1, p2)
    q = p1.q
    twist = sum(s * t for s, t in zip(p1.zs, p2.xs))
    return PauliString(
        q,
        tuple(a + b for a, b in zip(p1.xs, p2.xs)),
        tuple(a + b for a, b in zip(p1.zs, p2.zs)),
        p1.phase + p2.phase + 2 * twist,
    )


def commutation_phase(p1: PauliString, p2: PauliString) -> int:
    """Exponent ``c`` with ``p1 p2 = w^c p2 p1``."""
    _check_compatible(p1, p2)
    return int(sum(s * t - r * u for r, s, t, u in zip(p1.xs, p1.zs, p2.xs, p2.zs)) % p1.q)


def symplectic_form(v1, v2, q: int) -> np.ndarray:
    """Vectorised ``commutation_phase`` on ``(xs | zs)`` arrays (last axis)."""
    v1 = np.asarray(v1)
    v2 = np.asarray(v2)
    n = v1.shape[-1] // 2
    x1, z1 = v1[..., :n], v1[..., n:]
    x2, z2 = v2[..., :n], v2[..., n:]
    return (np.sum(z1 * x2, axis=-1) - np.sum(x1 * z2, axis=-1)) % q


def syndrome_of(error: PauliString, checks) -> np.ndarray:
    """Syndrome digits ``commutation_phase(check_i, error)`` for each check."""
    return np.array([commutation_phase(c, error) for c in checks], dtype=np.int64)


# -- matrices ---------------------------------------------------------------

def shift_matrix(q: int) -> np.ndarray:
    x = np.zeros((q, q), dtype=complex)
    for n in range(q):
        x[(n + 1) % q, n] = 1
    return x


def clock_matrix(q: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(q) / q))


def pauli_unitary(p: PauliString) -> np.ndarray:
    x = shift_matrix(p.q)
    z = clock_matrix(p.q)
    factors = [
        np.linalg.matrix_power(x, r) @ np.linalg.matrix_power(z, s) for r, s in zip(p.xs, p.zs)
    ]
    mat = reduce(np.kron, factors, np.eye(1, dtype=complex))
    return np.exp(1j * np.pi * p.phase / p.q) * mat


# -- text form --------------------------------------------------------------

_SITE = re.compile(r"^(?:X(\d+))?(?:\.?Z(\d+))?$")
_PHASE = re.compile(r"^w\^(-?\d+)(/2)?$")


def format_pauli(p: PauliString) -> str:
    tokens = []
    if p.phase:
        tokens.append(f"w^{p.phase // 2}" if p.phase % 2 == 0 else f"w^{p.phase}/2")
    for x, z in zip(p.xs, p.zs):
        if x and z:
            tokens.append(f"X{x}.Z{z}")
        elif x:
            tokens.append(f"X{x}")
        elif z:
            tokens.append(f"Z{z}")
        else:
            tokens.append("I")
    return " ".join(tokens)


def parse_pauli(q: int, text: str) -> PauliString:
    tokens = text.split()
    phase = 0
    if tokens and tokens[0].startswith("w"):
        m = _PHASE.match(tokens.pop(0))
        if not m:
            raise ValueError(f"bad phase token in {text!r}")
        phase = int(m.group(1)) * (1 if m.group(2) else 2)
    xs, zs = [], []
    for tok in tokens:
        if tok == "I":
            xs.append(0)
            zs.append(0)
            continue
        m = _SITE.match(tok)
        if not m or (m.group(1) is None and m.group(2) is None):
            raise ValueError(f"bad site token {tok!r}")
        xs.append(int(m.group(1) or 0))
        zs.append(int(m.group(2) or 0))
    return PauliString(q, tuple(xs), tuple(zs), phase)
