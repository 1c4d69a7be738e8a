import itertools
import math

import numpy as np
import pytest

from qec5.code5 import build_check_matrix, logical_x, logical_z
from qec5.decoders import (
    BeliefMatching, BPDecoder, Decoder, FlagTable, LineModel, MatchingDecoder, build_dem,
    build_flag_table, build_lines, check_success, decode_bm, decode_bp, decode_mwpm, success_mask,
)
from qec5.graph import build_graph, error_syndrome
from qec5.noise import CIRCUIT, SDEP, NoiseModel
from qec5.pauli import PauliString


def single(q, site, x, z):
    return np.array(PauliString.single(q, 5, site, x, z).symplectic())


# -- success test ----------------------------------------------------------------------

@pytest.mark.parametrize("q", (2, 3, 5))
def test_check_success(q):
    cm = build_check_matrix(q)
    assert check_success(np.zeros(10, dtype=int), q)
    for s in cm.stabilizers():
        assert check_success(s, q)
    combo = (cm.xz[0] + (q - 1) * cm.xz[2]) % q
    assert check_success(combo, q)
    assert not check_success(logical_x(q), q)
    assert not check_success(logical_z(q), q)
    # invariance under multiplication by a stabilizer
    err = single(q, 0, 1, 0)
    assert check_success(err, q) == check_success((err + cm.xz[1]) % q, q)
    rows = np.array([np.zeros(10, int), cm.xz[3], logical_x(q).symplectic(), err])
    assert list(success_mask(rows, q)) == [True, True, False, False]


# -- matching ---------------------------------------------------------------------------

def brute_force_cost(bcost, pcost):
    k = len(bcost)

    def rec(rest):
        if not rest:
            return 0.0
        i, others = rest[0], rest[1:]
        best = bcost[i] + rec(others)
        for j in others:
            best = min(best, pcost[i][j] + rec(tuple(o for o in others if o != j)))
        return best

    return rec(tuple(range(k)))


def matching_cost(m, pairs, nodes, bcost, pcost):
    idx = {n: i for i, n in enumerate(nodes)}
    total = 0.0
    for a, b in pairs:
        total += bcost[idx[a]] if b is None else pcost[idx[a]][idx[b]]
    return total


@pytest.mark.parametrize("q", (2, 3))
def test_mwpm_optimal_against_brute_force(q):
    g = build_graph(build_check_matrix(q), 2)
    rng = np.random.default_rng(q)
    exact = MatchingDecoder(g)
    blossom = MatchingDecoder(g, exact_limit=0)
    for _ in range(40):
        k = int(rng.integers(1, 9))
        nodes = sorted(int(n) for n in rng.choice(len(g.nodes), size=k, replace=False))
        bcost = [exact.dist[n, exact.b] for n in nodes]
        pcost = [[exact._pair(a, b)[0] if a != b else math.inf for b in nodes] for a in nodes]
        best = brute_force_cost(bcost, pcost)
        for dec in (exact, blossom):
            pairs = dec.match(nodes)
            covered = [a for a, _ in pairs] + [b for _, b in pairs if b is not None]
            assert sorted(covered) == nodes
            assert matching_cost(dec, pairs, nodes, bcost, pcost) == pytest.approx(best, abs=1e-9)


def test_mwpm_no_events_is_identity():
    g = build_graph(build_check_matrix(3), 2)
    assert decode_mwpm(g, np.zeros((2, 4), dtype=int)).is_identity()
    assert decode_mwpm(g, []).is_identity()


@pytest.mark.parametrize("q", (2, 3, 5))
def test_mwpm_pure_single_errors(q):
    H = build_check_matrix(q)
    g = build_graph(H, 1)
    for site in range(5):
        for a in range(1, q):
            for x, z in ((a, 0), (0, a)):
                est = decode_mwpm(g, np.array([error_syndrome(H, site, x, z)]))
                assert check_success((single(q, site, x, z) - est.symplectic()) % q, q)


def test_mwpm_qubit_single_x():
    q = 2
    H = build_check_matrix(q)
    est = decode_mwpm(build_graph(H, 1), np.array([error_syndrome(H, 3, 1, 0)]))
    assert est == PauliString.single(q, 5, 3, 1, 0)


def test_mwpm_y0_three_way_tie():
    # Y on qudit 0 has three equally light explanations, only one of them right
    q = 2
    H = build_check_matrix(q)
    g = build_graph(H, 1)
    ev = np.array([error_syndrome(H, 0, 1, 1)])
    rng = np.random.default_rng(7)
    dec = MatchingDecoder(g, rng=rng)
    n = 3000
    wins = sum(check_success((single(q, 0, 1, 1) - dec.decode(ev)) % q, q) for _ in range(n))
    assert dec.last_tied
    sigma = math.sqrt(n * (1 / 3) * (2 / 3))
    assert abs(wins - n / 3) < 4 * sigma


# -- belief propagation ----------------------------------------------------------------------

def test_bp_zero_syndrome():
    dem = build_dem(3, 2, NoiseModel(CIRCUIT, 1e-3, 3))
    state = decode_bp(dem, np.zeros(8, dtype=int))
    assert state.iterations == 0 and state.converged
    assert not state.hard.any()


def test_bp_single_check_tree_is_exact():
    q = 3
    prior = np.array([[0.9, 0.06, 0.04], [0.8, 0.05, 0.15]])
    lines = LineModel(q, np.array([[1, 2]]), np.zeros((2, 10), dtype=int), prior, [[], []])
    state = BPDecoder(lines, damping=0.0).decode([1])
    exact = np.zeros((2, q))
    for x0, x1 in itertools.product(range(q), repeat=2):
        if (x0 + 2 * x1) % q == 1:
            w = prior[0, x0] * prior[1, x1]
            exact[0, x0] += w
            exact[1, x1] += w
    exact /= exact.sum(axis=1, keepdims=True)
    assert state.converged
    assert np.allclose(state.posteriors, exact)
    assert list(state.hard) == list(np.argmax(exact, axis=1))


@pytest.mark.parametrize("q", (2, 3))
def test_bp_code_capacity_single_faults(q):
    dem = build_dem(q, 2, NoiseModel(SDEP, 1e-2, q))
    lines = build_lines(dem)
    bp = BPDecoder(lines)
    for m in dem.mechanisms:
        state = bp.decode(m.events)
        assert np.allclose(state.posteriors.sum(axis=1), 1)
        assert state.converged
        assert np.all((lines.H @ state.hard - m.events) % q == 0)
        assert check_success((m.effect - bp.estimate(state)) % q, q)


def test_bp_qutrit_squared_error_recovered():
    q = 3
    dem = build_dem(q, 1, NoiseModel(SDEP, 1e-2, q))
    err = single(q, 2, 0, 2)
    m = next(m for m in dem.mechanisms if check_success((m.effect - err) % q, q))
    state = decode_bp(dem, m.events)
    bp = BPDecoder(build_lines(dem))
    assert check_success((err - bp.estimate(state)) % q, q)


def test_bp_rejects_unknown_model():
    with pytest.raises(TypeError):
        decode_bp("dem", np.zeros(4))


# -- belief matching ----------------------------------------------------------------------------

@pytest.mark.parametrize("q", (2, 3, 5))
def test_bm_code_capacity_single_faults(q):
    dem = build_dem(q, 2, NoiseModel(SDEP, 1e-2, q))
    bm = BeliefMatching(dem, rng=np.random.default_rng(0))
    for m in dem.mechanisms:
        est, _ = bm.decode(m.events)
        assert check_success((m.effect - est) % q, q)


def test_decode_bm_facade_qubit_y():
    q = 2
    dem = build_dem(q, 1, NoiseModel(SDEP, 1e-2, q))
    H = build_check_matrix(q)
    est = decode_bm(dem, error_syndrome(H, 0, 1, 1), rng=np.random.default_rng(0))
    assert check_success((single(q, 0, 1, 1) - est.symplectic()) % q, q)
    assert decode_bm(dem, np.zeros(4, dtype=int)).is_identity()


# -- flag table ------------------------------------------------------------------------------------

@pytest.mark.parametrize("q", (2, 3))
def test_flag_table_unambiguous(q):
    table = build_flag_table(q)
    assert table.entries and table.ambiguous == []
    for (i, f, sigma), e in table.entries.items():
        assert 0 <= i < 4 and 0 < f < q and len(sigma) == 4
        assert len(e.pattern) == 8 and len(e.correction) == 10


def test_flag_table_json_round_trip():
    table = build_flag_table(3)
    back = FlagTable.from_json(table.to_json())
    assert back.q == 3 and back.entries == table.entries
    bad = table.to_json().replace('"version": 1', '"version": 99')
    with pytest.raises(ValueError):
        FlagTable.from_json(bad)


@pytest.mark.parametrize("q", (2, 3))
def test_flag_table_apply_removes_hooks(q):
    table = build_flag_table(q)
    dem = build_dem(q, 2, NoiseModel(CIRCUIT, 1e-3, q), flagged=True)
    cleared = 0
    for m in dem.mechanisms:
        if not m.flags.any():
            continue
        ev, corr = table.apply(m.events.reshape(-1, 4), m.flags.reshape(-1, 4))
        if not ev.any():
            cleared += 1
            assert check_success((m.effect - corr) % q, q)
    assert cleared > 0


def test_flag_table_apply_without_flags():
    table = build_flag_table(2)
    ev = np.array([[1, 0, 1, 0], [0, 0, 0, 0]])
    out, corr = table.apply(ev, np.zeros_like(ev))
    assert np.array_equal(out, ev) and not corr.any()


# -- pipeline -----------------------------------------------------------------------------------------

def test_unknown_decoder():
    with pytest.raises(ValueError, match="unknown decoder"):
        Decoder(3, 2, NoiseModel(CIRCUIT, 1e-3, 3), "uf")


@pytest.mark.parametrize("name", ("mwpm", "bp", "bm"))
def test_decode_batch_matches_decode_one(name):
    q = 3
    dec = Decoder(q, 2, NoiseModel(CIRCUIT, 1e-3, q), name, flagged=True)
    ev, fl, _, _ = dec.dem.arrays()
    ev, fl = ev[:60].reshape(60, 2, 4), fl[:60].reshape(60, 2, 4)
    batch = dec.decode_batch(ev, fl)
    for k in range(60):
        one, tied = dec.decode_one(ev[k], fl[k])
        if not tied:
            assert np.array_equal(batch[k], one)


def test_decoder_zero_events():
    dec = Decoder(2, 3, NoiseModel(CIRCUIT, 0.0, 2), "bm")
    out = dec.decode_batch(np.zeros((5, 3, 4), dtype=int))
    assert out.shape == (5, 10) and not out.any()
