import numpy as np
import pytest
from scipy import stats

from qec5.circuit import DEPOL1, DEPOL2, IDLE, MEASURE, MFLIP, canonical, emit_circuit, parse_circuit
from qec5.code5 import ANCILLAS, DATA, FLAG, build_memory
from qec5.noise import (
    CIRCUIT, SDEP, NoiseModel, UnscheduledCircuitError, depol1_batch, depol1_probabilities,
    depol2_batch, instrument, mflip_batch, noise_locations, noise_template, sample_depol1,
    sample_depol2, sample_measure_flip,
)


def test_zero_probability_is_identity():
    rng = np.random.default_rng(0)
    for q in (2, 3, 5):
        assert all(sample_depol1(0.0, q, rng).is_identity() for _ in range(200))
        assert all(sample_depol2(0.0, q, rng).is_identity() for _ in range(200))
        assert all(sample_measure_flip(0.0, q, rng).is_identity() for _ in range(200))


def test_depol1_analytic_probabilities():
    probs = depol1_probabilities(0.04, 2)
    for key in ((1, 0), (0, 1), (1, 1)):
        assert probs[key] == pytest.approx(0.01)
    assert depol1_probabilities(0.09, 3)[(0, 0)] == pytest.approx(0.92)
    for q in (2, 3, 5):
        assert sum(depol1_probabilities(1.0, q).values()) == pytest.approx(1.0)
        assert depol1_probabilities(1.0, q)[(0, 0)] >= 0


@pytest.mark.parametrize("q,p", [(2, 0.04), (3, 0.09), (5, 0.3)])
def test_depol1_goodness_of_fit(q, p):
    rng = np.random.default_rng(11)
    x, z = depol1_batch(p, q, rng, 1_000_000)
    counts = np.bincount(x * q + z, minlength=q * q)
    probs = depol1_probabilities(p, q)
    expected = np.array([probs[(k // q, k % q)] for k in range(q * q)]) * counts.sum()
    assert stats.chisquare(counts, expected).pvalue > 1e-3


def test_depol1_identity_rate_qutrit():
    rng = np.random.default_rng(5)
    n = 1_000_000
    x, z = depol1_batch(0.09, 3, rng, n)
    ident = np.mean((x == 0) & (z == 0))
    sigma = np.sqrt(0.92 * 0.08 / n)
    assert abs(ident - 0.92) < 3 * sigma


@pytest.mark.parametrize("q,p2", [(2, 0.16), (3, 0.5)])
def test_depol2_goodness_of_fit(q, p2):
    rng = np.random.default_rng(3)
    x1, z1, x2, z2 = depol2_batch(p2, q, rng, 1_000_000)
    k = ((x1 * q + z1) * q + x2) * q + z2
    counts = np.bincount(k, minlength=q**4)
    assert np.count_nonzero(counts) == q**4
    expected = np.full(q**4, p2 / q**4)
    expected[0] = 1 - p2 * (q**4 - 1) / q**4
    assert stats.chisquare(counts, expected * counts.sum()).pvalue > 1e-3
    if q == 2:
        assert expected[1:] == pytest.approx(0.01)


def test_measure_flip_single_shift():
    rng = np.random.default_rng(1)
    x, z = mflip_batch(1.0, 3, rng, 10_000)
    assert np.all(x == 1) and np.all(z == 0)
    flip = sample_measure_flip(1.0, 3, rng)
    assert flip.xs == (1,) and flip.zs == (0,)
    x, _ = mflip_batch(0.5, 3, rng, 100_000)
    rate = np.mean(x != 0)
    assert abs(rate - 0.5) < 3 * np.sqrt(0.25 / 100_000)


def test_measure_flip_uniform_knob():
    rng = np.random.default_rng(2)
    x, _ = mflip_batch(1.0, 5, rng, 10_000, uniform=True)
    assert set(np.unique(x)) == {1, 2, 3, 4}


def test_invalid_probability():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_depol1(1.5, 3, rng)
    with pytest.raises(ValueError):
        NoiseModel(SDEP, -0.1, 3)
    with pytest.raises(ValueError):
        NoiseModel("amplitude", 0.1, 3)


def test_p_zero_instrument_unchanged():
    circuit, _ = build_memory(3, 3, True)
    out, faults = instrument(circuit, NoiseModel(CIRCUIT, 0.0, 3), np.random.default_rng(0))
    assert out is circuit and faults == []
    out, faults = instrument(circuit, NoiseModel(SDEP, 0.0, 3), np.random.default_rng(0))
    assert out is circuit and faults == []


def test_unscheduled_rejected():
    from qec5.code5 import build_cycle

    with pytest.raises(UnscheduledCircuitError):
        noise_template(build_cycle(3, True), NoiseModel(CIRCUIT, 0.01, 3))


def test_sdep_locations():
    circuit, _ = build_memory(3, 3, False)
    template = noise_template(circuit, NoiseModel(SDEP, 0.05, 3))
    locs = noise_locations(template)
    assert len(locs) == 15
    assert all(ins.op == DEPOL1 and ins.targets[0] in DATA for _, ins in locs)
    per_cycle = [sum(1 for k, _ in locs if template.cycle_of_moment(k) == c) for c in range(3)]
    assert per_cycle == [5, 5, 5]


def test_circuit_level_locations():
    circuit, _ = build_memory(2, 3, True)
    template = noise_template(circuit, NoiseModel(CIRCUIT, 0.01, 2))
    locs = noise_locations(template)
    cycles = {template.cycle_of_moment(k) for k, _ in locs}
    assert cycles == {0, 1}  # final cycle is error-free
    # every two-qudit gate, idle and readout of a noisy cycle carries noise
    last = template.cycle_ranges()[-1][0]
    noisy = circuit.cycle_ranges()[0][0], circuit.cycle_ranges()[-1][0]
    gates2 = sum(1 for m in circuit.moments[noisy[0]:noisy[1]] for i in m if i.is_gate and i.op.arity == 2)
    idles = sum(1 for m in circuit.moments[noisy[0]:noisy[1]] for i in m if i.op == IDLE)
    reads = sum(1 for m in circuit.moments[noisy[0]:noisy[1]] for i in m if i.op == MEASURE)
    assert sum(1 for _, i in locs if i.op == DEPOL2) == gates2
    assert sum(1 for _, i in locs if i.op == MFLIP) == reads
    assert all(k < last for k, _ in locs)
    assert sum(1 for _, i in locs if i.op == DEPOL1) >= idles
    flipped = {i.targets[0] for _, i in locs if i.op == MFLIP}
    assert flipped == set(ANCILLAS) | {FLAG}


def test_template_round_trips_as_text():
    circuit, _ = build_memory(3, 2, True)
    template = noise_template(circuit, NoiseModel(CIRCUIT, 0.01, 3))
    assert parse_circuit(emit_circuit(template)) == canonical(template)


def test_instrument_deterministic_and_faults_consistent():
    circuit, _ = build_memory(3, 3, True)
    model = NoiseModel(CIRCUIT, 0.05, 3)
    a, fa = instrument(circuit, model, np.random.default_rng(42))
    b, fb = instrument(circuit, model, np.random.default_rng(42))
    assert a == b and fa == fb
    assert fa and all(not f.pauli.is_identity() for f in fa)
    assert a.count("PAULI") == len(fa)
