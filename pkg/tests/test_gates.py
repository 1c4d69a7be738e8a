import itertools

import numpy as np
import pytest

from qec5.gates import (
    F, F_DAG, M, M_DAG, S, S_DAG, SUM, SUM_DAG, X, Z, GateAction, GateKind, conjugate,
    gate_unitary, is_symplectic, omega, sequence_unitary, verify_symplectic,
)
from qec5.pauli import PauliString, pauli_unitary

PRIMES = (2, 3, 5, 7)
KINDS = (X, Z, S, F, SUM, M, S_DAG, F_DAG, SUM_DAG, M_DAG, GateKind("X", 2), GateKind("Z", 3))


def proportional(a, b, atol=1e-10):
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < atol:
        return False
    ratio = a[idx] / b[idx]
    return abs(abs(ratio) - 1) < atol and np.allclose(a, ratio * b, atol=atol)


def local_paulis(q, arity, rng=None, limit=None):
    vecs = list(itertools.product(range(q), repeat=2 * arity))
    if limit is not None and len(vecs) > limit:
        picks = rng.choice(len(vecs), size=limit, replace=False)
        vecs = [vecs[i] for i in picks]
    for v in vecs:
        yield PauliString.from_symplectic(q, v)


def test_fourier_qubit_is_hadamard():
    assert np.allclose(gate_unitary(F, 2), np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def test_multiplication_qubit_is_identity():
    assert np.allclose(gate_unitary(M, 2), np.eye(2))


def test_sum_qutrit_basis_action():
    u = gate_unitary(SUM, 3)
    state = np.zeros(9)
    state[1 * 3 + 1] = 1
    assert np.allclose(u @ state, np.eye(9)[1 * 3 + 2])


@pytest.mark.parametrize("q", PRIMES)
@pytest.mark.parametrize("kind", KINDS, ids=lambda k: k.mnemonic())
def test_unitary(kind, q):
    u = gate_unitary(kind, q)
    assert np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-10)


@pytest.mark.parametrize("q", PRIMES)
@pytest.mark.parametrize("kind", KINDS, ids=lambda k: k.mnemonic())
def test_conjugate_matches_matrix_oracle(kind, q):
    rng = np.random.default_rng(q)
    u = gate_unitary(kind, q)
    for local in local_paulis(q, kind.arity, rng, limit=200):
        image = conjugate(kind, range(kind.arity), local)
        expected = u @ pauli_unitary(local) @ u.conj().T
        assert np.allclose(pauli_unitary(image), expected, atol=1e-10), (kind, local)


@pytest.mark.parametrize("q", PRIMES)
def test_gate_identities(q):
    eye = np.eye(q)
    assert proportional(np.linalg.matrix_power(gate_unitary(F, q), 4), eye)
    assert np.allclose(gate_unitary(S, q) @ gate_unitary(S_DAG, q), eye)
    assert np.allclose(np.linalg.matrix_power(gate_unitary(SUM, q), q), np.eye(q * q))
    assert np.allclose(np.linalg.matrix_power(gate_unitary(M, q), 2), eye)
    assert np.allclose(gate_unitary(F, q) @ gate_unitary(F_DAG, q), eye)


@pytest.mark.parametrize("q", PRIMES)
@pytest.mark.parametrize("kind", KINDS, ids=lambda k: k.mnemonic())
def test_verify_symplectic(kind, q):
    action = GateAction.of(kind, q)
    assert is_symplectic(action.matrix, q)
    assert verify_symplectic(action)


def test_verify_symplectic_rejects_corrupted_sum():
    good = GateAction.of(SUM, 3)
    bad_matrix = good.matrix.copy()
    bad_matrix[1, :] = 0  # target X row zeroed
    bad = GateAction(SUM, 3, bad_matrix, good.phase_fn)
    assert not verify_symplectic(bad)


@pytest.mark.parametrize("q", PRIMES)
def test_t_cycles_heisenberg_weyl(q):
    # T = S F (F applied first): X -> Z -> (XZ)^dag -> X, each up to phase
    t = sequence_unitary([F, S], q)
    xs, zs = gate_unitary(X, q), gate_unitary(Z, q)
    y_dag = (xs @ zs).conj().T
    assert proportional(t @ xs @ t.conj().T, zs)
    assert proportional(t @ zs @ t.conj().T, y_dag)
    assert proportional(t @ y_dag @ t.conj().T, xs)
    assert proportional(np.linalg.matrix_power(t, 3), np.eye(q))


def test_t_action_qutrit_cycle_is_order_three():
    q = 3
    p = PauliString.single(q, 1, 0, x=1)
    orbit = [p.phaseless()]
    for _ in range(3):
        p = conjugate(S, [0], conjugate(F, [0], p))
        orbit.append(p.phaseless())
    assert orbit[3] == orbit[0]
    assert len({(o.xs, o.zs) for o in orbit[:3]}) == 3
    assert verify_symplectic(GateAction.of(F, q)) and verify_symplectic(GateAction.of(S, q))


def test_conjugate_leaves_other_sites_alone():
    p = PauliString(5, (1, 2, 3), (4, 0, 1))
    out = conjugate(SUM, [0, 2], p)
    assert out.xs[1] == p.xs[1] and out.zs[1] == p.zs[1]
    out = conjugate(F, [1], p)
    assert (out.xs[0], out.zs[0], out.xs[2], out.zs[2]) == (1, 4, 3, 1)


def test_conjugate_arity_errors():
    p = PauliString.identity(3, 2)
    with pytest.raises(ValueError):
        conjugate(SUM, [0], p)
    with pytest.raises(ValueError):
        conjugate(F, [0, 1], p)
    with pytest.raises(ValueError):
        conjugate(SUM, [0, 0], p)


def test_mnemonic_parse_round_trip():
    for kind in KINDS:
        for q in PRIMES:
            text = kind.mnemonic(q)
            back = GateKind.parse(text)
            assert np.allclose(gate_unitary(back, q), gate_unitary(kind, q))
    with pytest.raises(ValueError):
        GateKind.parse("TOFFOLI")
    with pytest.raises(ValueError):
        GateKind("F", 2)


def test_omega():
    assert np.isclose(omega(4 - 1) ** 3, 1)
