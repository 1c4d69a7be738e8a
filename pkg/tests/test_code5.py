import itertools

import numpy as np
import pytest

from qec5.backends import StateVector, stabilizer_expectation, sv_run
from qec5.circuit import PAULI, Circuit, Instruction
from qec5.code5 import (
    T3_INPUT_BLOCKS, T3_OUTPUT_BLOCKS, build_check_matrix, build_encoder, build_logical,
    build_memory, code_distance_witness, conjugate_circuit, logical_x, logical_z, qhb_holds,
    qsb_holds, reduce_checks,
)
from qec5.decoders.dem import build_dem
from qec5.field import in_row_space
from qec5.noise import CIRCUIT, NoiseModel
from qec5.pauli import PauliString, commutation_phase

PRIMES = (2, 3, 5, 7)


def encoded(q, j=0):
    state, _ = sv_run(build_encoder(q), np.random.default_rng(0),
                      initial=StateVector.basis(q, (0, 0, 0, 0, j)))
    return state


def min_coset_weight(vec, q):
    H = build_check_matrix(q).xz
    best = 5
    for c in itertools.product(range(q), repeat=4):
        v = (np.asarray(vec) + np.array(c) @ H) % q
        best = min(best, int(np.count_nonzero(v[:5] | v[5:])))
    return best


# -- bounds ---------------------------------------------------------------------

def test_quantum_hamming_bound():
    assert qhb_holds(5, 2) and 2 * (3 * 5 + 1) == 2**5
    assert not qhb_holds(4, 2)
    assert qhb_holds(5, 7)
    with pytest.raises(ValueError):
        qhb_holds(0, 2)


def test_quantum_singleton_bound():
    assert qsb_holds(5, 1, 3) and 2 * (3 - 1) + 1 == 5
    assert not qsb_holds(4, 1, 3)
    assert qsb_holds(7, 1, 3)


# -- check matrix -------------------------------------------------------------------

def test_check_matrix_rows_as_printed():
    h2 = build_check_matrix(2).zx
    assert list(h2[0, :5]) == [0, 0, 1, 0, 1] and list(h2[0, 5:]) == [1, 1, 0, 0, 0]
    h3 = build_check_matrix(3).zx
    assert list(h3[1, :5]) == [1, 0, 0, 2, 0] and list(h3[1, 5:]) == [0, 1, 2, 0, 0]
    assert build_check_matrix(3).n == 5 and build_check_matrix(3).k == 1
    assert build_check_matrix(3).d == 3


@pytest.mark.parametrize("q", PRIMES)
def test_check_rows_commute_and_cyclic(q):
    cm = build_check_matrix(q)
    stabs = cm.stabilizers()
    for a, b in itertools.combinations(stabs, 2):
        assert commutation_phase(a, b) == 0
    assert set(np.unique(cm.zx)) <= {0, 1, q - 1}
    for i in range(3):
        assert np.array_equal(np.roll(cm.zx[i, :5], 1), cm.zx[i + 1, :5])
        assert np.array_equal(np.roll(cm.zx[i, 5:], 1), cm.zx[i + 1, 5:])


@pytest.mark.parametrize("q", PRIMES)
def test_forward_reduction_gives_identity_form(q):
    reduced = np.array([np.concatenate([s.zs, s.xs]) for s in reduce_checks(q)])
    expected = np.zeros((4, 10), dtype=int)
    expected[:, :4] = np.eye(4, dtype=int)
    assert np.array_equal(reduced, expected)


# -- encoder -------------------------------------------------------------------------

@pytest.mark.parametrize("q", (2, 3))
def test_encoder_stabilized(q):
    for j in range(q):
        state = encoded(q, j)
        for s in build_check_matrix(q).stabilizers():
            assert abs(stabilizer_expectation(state, s) - 1) < 1e-9


def test_qutrit_encoded_orthogonal_to_shifted():
    q = 3
    state = encoded(q)
    shifted = state.copy()
    for k in (1, 2):
        shifted.apply_pauli(logical_x(q), range(5))
        assert abs(np.vdot(state.vector, shifted.vector)) < 1e-9


def test_logical_z_on_encoded_zero():
    q = 3
    state = encoded(q)
    after, _ = sv_run(build_logical(q, "Z_L"), np.random.default_rng(0), initial=state)
    overlap = np.vdot(state.vector, after.vector)
    assert abs(abs(overlap) - 1) < 1e-9


@pytest.mark.parametrize("q", (2, 3))
def test_logical_x_shifts_label(q):
    for j in range(q):
        after, _ = sv_run(build_logical(q, "X_L"), np.random.default_rng(0), initial=encoded(q, j))
        overlaps = [abs(np.vdot(encoded(q, k).vector, after.vector)) for k in range(q)]
        assert max(overlaps) == pytest.approx(1, abs=1e-9)
        assert sum(o > 1e-6 for o in overlaps) == 1


# -- distance ----------------------------------------------------------------------------

@pytest.mark.parametrize("q", PRIMES)
def test_logicals_commute_with_checks(q):
    cm = build_check_matrix(q)
    for op in (logical_x(q), logical_z(q)):
        assert not cm.syndrome(op).any()
        assert not cm.in_stabilizer_group(op.symplectic())
    if q != 5:
        assert commutation_phase(logical_x(q), logical_z(q)) != 0
    else:
        # n = q: the transversal pair commutes, Z^(x5) = (X^(x5))^3 modulo stabilizers
        assert commutation_phase(logical_x(q), logical_z(q)) == 0
        diff = (logical_z(q).symplectic() - 3 * logical_x(q).symplectic()) % q
        assert cm.in_stabilizer_group(diff)


@pytest.mark.parametrize("q", (2, 3, 5))
def test_single_qudit_errors_detected(q):
    cm = build_check_matrix(q)
    for site in range(5):
        for x, z in itertools.product(range(q), repeat=2):
            if x or z:
                assert cm.syndrome(PauliString.single(q, 5, site, x, z)).any()


@pytest.mark.parametrize("q", (2, 3, 5))
def test_distance_three(q):
    assert code_distance_witness(q, max_weight=2) is None
    if q < 5:
        w, op = code_distance_witness(q, max_weight=3)
        assert w == 3 and op.weight == 3


# -- syndrome cycles ----------------------------------------------------------------------

def test_data_error_gives_expected_outcomes():
    q = 2
    circuit, layout = build_memory(q, 1, False)
    k = circuit.cycle_starts[0]
    moments = list(circuit.moments)
    moments.insert(k, (Instruction(PAULI, (0,), (1, 0)),))
    noisy = Circuit(q, circuit.n_qudits, moments, circuit.data, (), True)
    _, record = sv_run(noisy, np.random.default_rng(0))
    outcomes = np.array(record)[layout.ancilla_index()[0]]
    syn = build_check_matrix(q).syndrome(PauliString.single(q, 5, 0, x=1))
    assert np.array_equal(outcomes % q, syn)
    assert np.count_nonzero(outcomes) == 2


@pytest.mark.parametrize("q", (2, 3))
def test_hook_errors_raise_flags(q):
    dem = build_dem(q, 2, NoiseModel(CIRCUIT, 1e-3, q), flagged=True)
    hooks = 0
    for m in dem.mechanisms:
        w = min_coset_weight(m.effect, q)
        if not m.flags.any():
            assert w <= 1
        elif w > 1:
            hooks += 1
    assert hooks > 0


# -- transversal gates ------------------------------------------------------------------------

def _block_rows(q, blocks):
    H = build_check_matrix(q).xz
    rows = []
    n = 5 * blocks
    for b in range(blocks):
        for r in H:
            v = np.zeros(2 * n, dtype=int)
            v[5 * b:5 * b + 5] = r[:5]
            v[n + 5 * b:n + 5 * b + 5] = r[5:]
            rows.append(v)
    return np.array(rows)


def _block_op(q, blocks, labels):
    xs, zs = [0] * 5 * blocks, [0] * 5 * blocks
    for b, (x, z) in enumerate(labels):
        for d in range(5):
            xs[5 * b + d], zs[5 * b + d] = x, z
    return PauliString(q, xs, zs)


def _logical_label(q, blocks, p):
    rows = _block_rows(q, blocks)
    for labels in itertools.product(itertools.product(range(q), repeat=2), repeat=blocks):
        diff = (p.symplectic() - _block_op(q, blocks, labels).symplectic()) % q
        if in_row_space(diff, rows, q):
            return list(labels)
    return None


def test_t_logical_cycles_qubit():
    q = 2
    c = build_logical(q, "T_L")
    assert _logical_label(q, 1, conjugate_circuit(c, logical_x(q))) == [(0, 1)]
    assert _logical_label(q, 1, conjugate_circuit(c, logical_z(q))) == [(1, 1)]
    y = _block_op(q, 1, [(1, 1)])
    assert _logical_label(q, 1, conjugate_circuit(c, y)) == [(1, 0)]


@pytest.mark.parametrize("q", (3, 5, 7))
def test_uniform_transversal_t_leaves_codespace_for_odd_q(q):
    # T^(x5) maps some stabilizer outside the group when q > 2
    cm = build_check_matrix(q)
    c = build_logical(q, "T_L")
    assert not all(cm.in_stabilizer_group(conjugate_circuit(c, s).symplectic())
                   for s in cm.stabilizers())


def test_t3_mappings_qubit():
    q = 2
    c = build_logical(q, "T3")
    X, Z, Y, I = (1, 0), (0, 1), (1, 1), (0, 0)
    table = {
        (X, I, I): [X, Y, Z], (I, X, I): [Y, X, Z], (I, I, X): [X, X, X],
        (Z, I, I): [Z, X, Y], (I, Z, I): [X, Z, Y], (I, I, Z): [Z, Z, Z],
    }
    rows = _block_rows(q, 3)
    for s in rows:
        assert in_row_space(conjugate_circuit(c, PauliString.from_symplectic(q, s)).symplectic(),
                            rows, q)
    for logical_in, logical_out in table.items():
        wires = [logical_in[T3_INPUT_BLOCKS[w]] for w in range(3)]
        image = conjugate_circuit(c, _block_op(q, 3, wires))
        labels = _logical_label(q, 3, image)
        assert [labels[T3_OUTPUT_BLOCKS.index(b)] for b in range(3)] == logical_out


def test_unknown_logical():
    with pytest.raises(ValueError):
        build_logical(3, "H_L")
