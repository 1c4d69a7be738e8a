"""Pauli-frame engine: propagates Pauli faults through Clifford circuits.

The frame is the phaseless Pauli by which a noisy trajectory differs from
the noiseless reference run.  The reference outcomes of the encoded memory
circuits are all zero, so a readout in the computational basis reports the
X power of the frame on the measured qudit.  (Before the ancilla's final
``F^dag`` rotation this is the Z power.)

:func:`pf_run` propagates a single trajectory with
:func:`~qec5.gates.conjugate` and serves as the readable reference;
:class:`FrameSimulator` does the same for a batch of trajectories with
vectorised integer arithmetic, either sampling noise or injecting a given
fault per row.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuit import DEPOL1, DEPOL2, IDLE, MEASURE, MFLIP, PAULI, RESET, Circuit
from ..gates import conjugate
from ..pauli import PauliString


class NonCliffordError(ValueError):
    pass


def pf_run(circuit: Circuit, rng: np.random.Generator | None = None) -> tuple[list[int], PauliString]:
    """Measurement-outcome shifts for a circuit with explicit ``PAULI`` faults.

    Unsampled noise instructions are ignored (treat them as not firing);
    sample first with :func:`~qec5.noise.instrument`.  Returns the shifts in
    record order and the final frame.
    """
    q, n = circuit.q, circuit.n_qudits
    frame = PauliString.identity(q, n)
    shifts: list[int] = []
    for moment in circuit.moments:
        for ins in moment:
            if ins.is_gate:
                if ins.op.name in ("X", "Z"):
                    continue
                frame = conjugate(ins.op, ins.targets, frame)
            elif ins.op == PAULI:
                xs, zs = list(frame.xs), list(frame.zs)
                for j, t in enumerate(ins.targets):
                    xs[t] += ins.params[2 * j]
                    zs[t] += ins.params[2 * j + 1]
                frame = PauliString(q, xs, zs)
            elif ins.op == MEASURE:
                shifts.append(frame.xs[ins.targets[0]])
            elif ins.op == RESET:
                xs, zs = list(frame.xs), list(frame.zs)
                xs[ins.targets[0]] = zs[ins.targets[0]] = 0
                frame = PauliString(q, xs, zs)
            elif ins.op in (IDLE, DEPOL1, DEPOL2, MFLIP):
                continue
            else:  # pragma: no cover
                raise NonCliffordError(f"cannot propagate {ins.op}")
    return shifts, frame


# -- batched engine -------------------------------------------------------------

_G1 = {"F": 0, "F_DAG": 1, "S": 2, "S_DAG": 3, "M": 4, "M_DAG": 4}
_G2 = {"SUM": 1, "SUM_DAG": -1}


@dataclass
class FrameResult:
    """Outcome shifts ``record`` (shots x measurements) and final frames."""

    record: np.ndarray
    x: np.ndarray
    z: np.ndarray


class FrameSimulator:
    """Compiled batched frame propagation for one circuit.

    Parameters
    ----------
    circuit : Circuit
        May contain unsampled noise instructions; each gets a *location*
        index in order of appearance (see :attr:`locations`).
    uniform_flip : bool
        Readout-error variant, see :class:`~qec5.noise.NoiseModel`.
    """

    def __init__(self, circuit: Circuit, uniform_flip: bool = False):
        self.q = circuit.q
        self.n = circuit.n_qudits
        self.uniform_flip = uniform_flip
        self.ops: list[tuple] = []
        self.locations: list[tuple[str, tuple[int, ...], float]] = []
        self.n_meas = 0
        for moment in circuit.moments:
            for ins in moment:
                self._compile(ins)

    def _compile(self, ins) -> None:
        if ins.is_gate:
            name = ins.op.name
            if name in ("X", "Z"):
                return
            if name in _G2:
                self.ops.append(("g2", _G2[name], ins.targets[0], ins.targets[1]))
            else:
                self.ops.append(("g1", _G1[name], ins.targets[0]))
        elif ins.op == MEASURE:
            self.ops.append(("meas", ins.targets[0], self.n_meas))
            self.n_meas += 1
        elif ins.op == RESET:
            self.ops.append(("reset", ins.targets[0]))
        elif ins.op == PAULI:
            self.ops.append(("pauli", ins.targets, ins.params))
        elif ins.op in (DEPOL1, DEPOL2, MFLIP):
            self.ops.append(("noise", len(self.locations)))
            self.locations.append((ins.op, ins.targets, float(ins.params[0])))
        elif ins.op == IDLE:
            return
        else:  # pragma: no cover
            raise NonCliffordError(f"cannot propagate {ins.op}")

    def run(
        self,
        shots: int,
        rng: np.random.Generator | None = None,
        injections: dict[int, tuple] | None = None,
    ) -> FrameResult:
        """Propagate ``shots`` frames.

        With ``injections`` (``{location: (rows, x, z)}`` where ``x``/``z`` have
        one column per target) noise is *not* sampled; only the given faults
        are applied.  Otherwise every noise location is sampled from ``rng``.
        """
        q = self.q
        X = np.zeros((shots, self.n), dtype=np.int64)
        Z = np.zeros((shots, self.n), dtype=np.int64)
        rec = np.zeros((shots, self.n_meas), dtype=np.int64)
        for op in self.ops:
            kind = op[0]
            if kind == "g2":
                _, sign, c, t = op
                X[:, t] = (X[:, t] + sign * X[:, c]) % q
                Z[:, c] = (Z[:, c] - sign * Z[:, t]) % q
            elif kind == "g1":
                _, code, t = op
                x, zz = X[:, t].copy(), Z[:, t].copy()
                if code == 0:
                    X[:, t], Z[:, t] = (-zz) % q, x
                elif code == 1:
                    X[:, t], Z[:, t] = zz, (-x) % q
                elif code == 2:
                    Z[:, t] = (zz + x) % q
                elif code == 3:
                    Z[:, t] = (zz - x) % q
                else:
                    X[:, t], Z[:, t] = (-x) % q, (-zz) % q
            elif kind == "meas":
                rec[:, op[2]] = X[:, op[1]]
            elif kind == "reset":
                X[:, op[1]] = 0
                Z[:, op[1]] = 0
            elif kind == "pauli":
                _, targets, params = op
                for j, t in enumerate(targets):
                    X[:, t] = (X[:, t] + params[2 * j]) % q
                    Z[:, t] = (Z[:, t] + params[2 * j + 1]) % q
            else:
                loc = op[1]
                if injections is not None:
                    if loc in injections:
                        rows, fx, fz = injections[loc]
                        targets = self.locations[loc][1]
                        for j, t in enumerate(targets):
                            X[rows, t] = (X[rows, t] + fx[:, j]) % q
                            Z[rows, t] = (Z[rows, t] + fz[:, j]) % q
                    continue
                self._sample(loc, X, Z, rng)
        return FrameResult(rec, X, Z)

    def _sample(self, loc: int, X: np.ndarray, Z: np.ndarray, rng: np.random.Generator) -> None:
        q = self.q
        op, targets, p = self.locations[loc]
        shots = X.shape[0]
        if p == 0:
            return
        if op == MFLIP:
            p_hit = p
        elif op == DEPOL1:
            p_hit = p * (q * q - 1) / (q * q)
        else:
            p_hit = p * (q**4 - 1) / q**4
        n_hit = rng.binomial(shots, p_hit)
        if n_hit == 0:
            return
        rows = rng.choice(shots, size=n_hit, replace=False)
        if op == MFLIP:
            k = rng.integers(1, q, size=n_hit) if self.uniform_flip else 1
            t = targets[0]
            X[rows, t] = (X[rows, t] + k) % q
        elif op == DEPOL1:
            k = rng.integers(1, q * q, size=n_hit)
            t = targets[0]
            X[rows, t] = (X[rows, t] + k // q) % q
            Z[rows, t] = (Z[rows, t] + k % q) % q
        else:
            k = rng.integers(1, q**4, size=n_hit)
            c, t = targets
            X[rows, c] = (X[rows, c] + k // q**3) % q
            Z[rows, c] = (Z[rows, c] + (k // q**2) % q) % q
            X[rows, t] = (X[rows, t] + (k // q) % q) % q
            Z[rows, t] = (Z[rows, t] + k % q) % q

    def location_faults(self, loc: int) -> tuple[np.ndarray, np.ndarray, float]:
        """All nontrivial faults of a location: ``(x, z, probability each)``."""
        q = self.q
        op, targets, p = self.locations[loc]
        if op == MFLIP:
            if self.uniform_flip:
                ks = np.arange(1, q)
                return ks[:, None], np.zeros((q - 1, 1), dtype=np.int64), p / (q - 1)
            return np.ones((1, 1), dtype=np.int64), np.zeros((1, 1), dtype=np.int64), p
        if op == DEPOL1:
            k = np.arange(1, q * q)
            return (k // q)[:, None], (k % q)[:, None], p / (q * q)
        k = np.arange(1, q**4)
        x = np.stack([k // q**3, (k // q) % q], axis=1)
        z = np.stack([(k // q**2) % q, k % q], axis=1)
        return x, z, p / q**4
