"""One pass/fail test per acceptance criterion.

Monte Carlo criteria (5 and 10) run the full reduced-shot experiments and
take minutes; they are marked ``slow``.
"""
import math
import time

import numpy as np
import pytest

from qec5.backends import StateVector, pf_run, stabilizer_expectation, sv_run
from qec5.backends.crosscheck import single_fault_crosscheck
from qec5.circuit import PAULI, Circuit, Instruction
from qec5.code5 import build_check_matrix, build_encoder, build_memory, reduce_checks
from qec5.decoders import build_dem, check_success, decode_bm
from qec5.experiments import (
    FitResult, RunConfig, concatenation_level, curve_crossing, fit_points, fit_power_law,
    fixed_point, p_m1, run_experiment, single_fault_audit, threshold,
)
from qec5.gates import F, S, SUM, gate_unitary
from qec5.graph import build_graph, event_values, hyperedges
from qec5.noise import CIRCUIT, SDEP, NoiseModel
from qec5.pauli import PauliString

PRIMES = (2, 3, 5, 7)


def paulis(q):
    w = np.exp(2j * np.pi / q)
    X = np.roll(np.eye(q), 1, axis=0)  # |n> -> |n+1>
    Z = np.diag(w ** np.arange(q))
    return w, X, Z


# -- 1. conjugation identities ------------------------------------------------------------

def test_c1_conjugation_identities():
    start = time.perf_counter()
    for q in PRIMES:
        w, X, Z = paulis(q)
        I = np.eye(q)
        Fm, Sm, SUMm = (gate_unitary(g, q) for g in (F, S, SUM))
        dag = lambda U: U.conj().T  # noqa: E731
        kron = np.kron

        def same(a, b):
            return np.max(np.abs(a - b)) < 1e-10

        assert same(Z @ X @ dag(Z), w * X)
        assert same(Fm @ X @ dag(Fm), Z)
        assert same(Fm @ Z @ dag(Fm), dag(X))
        # phase-gate row: the image of X is the Pauli XZ; as a matrix it is the
        # Hermitian Y = iXZ for qubits and exactly XZ for odd q
        Y = 1j * X @ Z if q == 2 else X @ Z
        assert same(Sm @ X @ dag(Sm), Y)
        assert same(Sm @ Z @ dag(Sm), Z)
        assert same(SUMm @ kron(X, I) @ dag(SUMm), kron(X, X))
        assert same(SUMm @ kron(I, X) @ dag(SUMm), kron(I, X))
        assert same(SUMm @ kron(Z, I) @ dag(SUMm), kron(Z, I))
        assert same(SUMm @ kron(I, Z) @ dag(SUMm), kron(dag(Z), Z))
    assert time.perf_counter() - start < 1


# -- 2. encoder --------------------------------------------------------------------------------

def test_c2_encoder_and_reduction():
    start = time.perf_counter()
    for q in (2, 3, 5):
        stabs = build_check_matrix(q).stabilizers()
        for j in range(q):
            state, _ = sv_run(build_encoder(q), np.random.default_rng(0),
                              initial=StateVector.basis(q, (0, 0, 0, 0, j)))
            for s in stabs:
                assert abs(stabilizer_expectation(state, s) - 1) < 1e-9
        reduced = np.array([np.concatenate([s.zs, s.xs]) for s in reduce_checks(q)])
        expected = np.zeros((4, 10), dtype=int)
        expected[:, :4] = np.eye(4, dtype=int)
        assert np.array_equal(reduced, expected)
    assert time.perf_counter() - start < 30


# -- 3. single errors ----------------------------------------------------------------------------

def test_c3_all_single_errors_corrected():
    start = time.perf_counter()
    for q in (2, 3, 5):
        circuit, layout = build_memory(q, 2, False)
        dem = build_dem(q, 2, NoiseModel(SDEP, 1e-2, q))
        k = circuit.cycle_starts[0]
        corrected = 0
        for site in range(5):
            for x in range(q):
                for z in range(q):
                    if not (x or z):
                        continue
                    moments = list(circuit.moments)
                    moments.insert(k, (Instruction(PAULI, (site,), (x, z)),))
                    noisy = Circuit(q, circuit.n_qudits, moments, circuit.data, (), True)
                    shifts, _ = pf_run(noisy)
                    outcomes = np.array(shifts)[layout.ancilla_index()]
                    events = event_values(outcomes[None], q)[0]
                    est = decode_bm(dem, events, rng=np.random.default_rng(0))
                    err = PauliString.single(q, 5, site, x, z)
                    residual = (np.array(err.symplectic()) - est.symplectic()) % q
                    corrected += check_success(residual, q)
        assert corrected == 5 * (q * q - 1)
    assert time.perf_counter() - start < 300


# -- 4. graph structure ------------------------------------------------------------------------------

def test_c4_graph_structure():
    start = time.perf_counter()
    for q, comps in zip(PRIMES, (1, 1, 2, 3)):
        g = build_graph(build_check_matrix(q), 2)
        for c in range(2):
            assert sum(1 for n in g.nodes if n.cycle == c) == 4 * (q - 1)
        assert len(build_graph(build_check_matrix(q), 1).components()) == comps
    y0 = next(h for h in hyperedges(build_check_matrix(2)) if h.edge.label.startswith("X.Z_0"))
    decs = {frozenset(d) for d in y0.decompositions}
    assert frozenset({"Z_1", "Z_4"}) in decs and frozenset({"X_2", "X_3"}) in decs
    assert time.perf_counter() - start < 1


# -- 5. standard depolarizing reproduction ---------------------------------------------------------

def _sdep(q, p, decoder):
    return run_experiment(RunConfig(q, p, model=SDEP, decoder=decoder, flagged=False, cycles=3,
                                    shots=100_000, seed=1))


@pytest.mark.slow
@pytest.mark.parametrize("q", (2, 3))
@pytest.mark.parametrize("p", (0.02, 0.05))
def test_c5_below_reference_curve(q, p):
    res = _sdep(q, p, "bm")
    assert res.p_l < p_m1(p)
    assert res.ci[1] < p_m1(p)


@pytest.mark.slow
def test_c5_qutrit_matching_beats_qubit():
    qubit = _sdep(2, 0.02, "mwpm")
    qutrit = _sdep(3, 0.02, "mwpm")
    assert qutrit.ci[1] < qubit.ci[0]


# -- 6. backend equivalence -------------------------------------------------------------------------------

@pytest.mark.parametrize("q", (2, 3))
def test_c6_backends_agree_on_every_single_fault(q):
    start = time.perf_counter()
    check = single_fault_crosscheck(q, flagged=True)
    assert check.faults > 0 and check.ok
    assert time.perf_counter() - start < 600


# -- 7. flag-table audit ------------------------------------------------------------------------------------

@pytest.mark.parametrize("q", (2, 3))
def test_c7_every_single_fault_decoded(q):
    start = time.perf_counter()
    audit = single_fault_audit(q, "bm", flagged=True)
    assert audit.faults > 0 and audit.failures == []
    assert time.perf_counter() - start < 600


# -- 8. published thresholds ---------------------------------------------------------------------------------

TABLE = [  # q, flag, a, b, threshold
    (2, False, 36.7, 1.264, 1.21e-6),
    (2, True, 766, 1.873, 4.95e-4),
    (3, False, 58.7, 1.288, 7.22e-7),
    (3, True, 1116, 1.870, 3.24e-4),
    (5, False, 35.3, 1.149, 4.36e-11),
    (5, True, 792, 1.798, 2.32e-4),
]


def test_c8_published_thresholds():
    start = time.perf_counter()
    for q, flag, a, b, published in TABLE:
        value, _ = threshold(FitResult(a, b, np.zeros((2, 2))))
        if flag:
            assert abs(value / published - 1) < 0.10, (q, value)
        else:
            assert 1 / 1.5 < value / published < 1.5, (q, value)
    assert time.perf_counter() - start < 1


# -- 9. concatenation identity ---------------------------------------------------------------------------------

@pytest.mark.parametrize("a,b", [(766, 1.873), (36.7, 1.264), (1116, 1.870), (5.0, 3.0)])
def test_c9_level_curves_share_crossing(a, b):
    fit = FitResult(a, b, np.zeros((2, 2)))
    pstar = fixed_point(a, b)
    crossings = [curve_crossing(fit, l1, l2, pstar / 10, pstar * 10)
                 for l1, l2 in ((1, 2), (2, 3), (1, 3))]
    spread = (max(crossings) - min(crossings)) / pstar
    assert spread < 1e-12
    for level in (1, 2, 3):
        assert concatenation_level(fit, crossings[0], level) == pytest.approx(crossings[0], rel=1e-9)


# -- 10. reduced smoke fit --------------------------------------------------------------------------------------

@pytest.mark.slow
def test_c10_smoke_threshold():
    results = [run_experiment(RunConfig(2, p, model=CIRCUIT, decoder="bm", flagged=True,
                                        cycles=3, shots=100_000, seed=1))
               for p in (3e-4, 1e-3, 3e-3)]
    fit = fit_power_law(fit_points(results))
    assert 1.5 <= fit.b <= 2.2
    value, _ = threshold(fit)
    assert 4.95e-4 / 3 <= value <= 4.95e-4 * 3
    assert math.isfinite(value)
