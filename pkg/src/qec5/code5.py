"""The 5-qudit perfect code: bounds, checks, encoder, syndrome cycles, logicals.

Qudit layout used by every builder here::

    0..4   data qudits
    5..8   syndrome ancillas A0..A3 (A_i measures stabilizer S_i)
    9      flag qudit (flagged cycles only)

Stabilizer ``S_i`` is the cyclic shift of ``X X^dag Z^dag I Z`` starting at
qudit ``i``; equivalently the shift of ``I Z X X^dag Z^dag`` used in the
printed parity-check matrix.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuit import MEASURE, RESET, Circuit, Instruction, Schedule, schedule
from .field import check_dim, in_row_space, rref_mod
from .gates import F, F_DAG, M, M_DAG, S, S_DAG, SUM, SUM_DAG, X, Z, GateKind, conjugate
from .pauli import PauliString, commutation_phase

N_DATA = 5
DATA = (0, 1, 2, 3, 4)
ANCILLAS = (5, 6, 7, 8)
FLAG = 9

#: Optimised flag-cycle plan: for each stabilizer (in extraction order) the
#: order in which its four data sites are coupled and the target step of
#: each coupling.  The two middle couplings of stabilizer ``k`` sit in steps
#: ``2k+1, 2k+2`` between the flag couplings, so the flag can be reused
#: serially and the cycle is exactly 10 data steps long.  Couplings of two
#: stabilizers on a shared data qudit may be interleaved only if the
#: commutation phases of the swapped pairs cancel (see
#: :func:`interleaving_phase`); otherwise the ancillas get entangled.
FLAG_PLAN: tuple[tuple[int, tuple[int, ...], tuple[int, ...]], ...] = (
    (0, (0, 1, 2, 4), (0, 1, 2, 3)),
    (1, (1, 3, 2, 0), (0, 3, 4, 5)),
    (2, (4, 2, 3, 1), (1, 5, 6, 7)),
    (3, (3, 2, 0, 4), (5, 7, 8, 9)),
)


# -- bounds ---------------------------------------------------------------------

def qhb_holds(n: int, q: int) -> bool:
    """Quantum Hamming bound ``q((q^2-1)n + 1) <= q^n`` for prime ``q``."""
    if n < 1:
        raise ValueError("n must be positive")
    q = check_dim(q)
    return q * ((q * q - 1) * n + 1) <= q**n


def qsb_holds(n: int, k: int, d: int) -> bool:
    """Quantum Singleton bound ``2(d-1) + k <= n``."""
    if min(n, k, d) < 1:
        raise ValueError("n, k, d must be positive integers")
    return 2 * (d - 1) + k <= n


# -- stabilizers ------------------------------------------------------------------

def stabilizer_sites(i: int) -> list[tuple[int, str, int]]:
    """``(qudit, 'X' or 'Z', power)`` for the four non-identity sites of ``S_i``."""
    return [
        (i % 5, "X", 1),
        ((i + 1) % 5, "X", -1),
        ((i + 2) % 5, "Z", -1),
        ((i + 4) % 5, "Z", 1),
    ]


@dataclass(frozen=True)
class CheckMatrix:
    """4x10 parity-check matrix in the ``(Z | X)`` layout.

    Attributes
    ----------
    q : int
    zx : ndarray, shape (4, 10)
        Row ``i`` holds the Z powers of ``S_i`` followed by its X powers.
    """

    q: int
    zx: np.ndarray

    n: int = 5
    k: int = 1
    d: int = 3

    @property
    def xz(self) -> np.ndarray:
        """Rows in the ``(x | z)`` layout used by :class:`PauliString`."""
        return np.concatenate([self.zx[:, 5:], self.zx[:, :5]], axis=1) % self.q

    def stabilizers(self) -> list[PauliString]:
        return [PauliString.from_symplectic(self.q, row) for row in self.xz]

    def syndrome(self, error: PauliString) -> np.ndarray:
        return np.array([commutation_phase(s, error) for s in self.stabilizers()], dtype=np.int64)

    def in_stabilizer_group(self, vec) -> bool:
        """True iff the ``(x | z)`` vector lies in the stabilizer row space."""
        return in_row_space(np.asarray(vec) % self.q, self.xz, self.q)


@lru_cache(maxsize=None)
def _check_rows(q: int) -> bytes:
    zx = np.zeros((4, 10), dtype=np.int64)
    for i in range(4):
        for site, kind, power in stabilizer_sites(i):
            col = site if kind == "Z" else 5 + site
            zx[i, col] = power % q
    return zx.tobytes()


def build_check_matrix(q: int) -> CheckMatrix:
    q = check_dim(q)
    zx = np.frombuffer(_check_rows(q), dtype=np.int64).reshape(4, 10).copy()
    zx.flags.writeable = False
    return CheckMatrix(q, zx)


def logical_x(q: int) -> PauliString:
    return PauliString(q, (1,) * 5, (0,) * 5)


def logical_z(q: int) -> PauliString:
    return PauliString(q, (0,) * 5, (1,) * 5)


# -- encoder --------------------------------------------------------------------

# Forward reduction sequence: each entry is a layer of (gate, targets).  A
# product such as ``M F`` on one qudit means F first, then M.
def encoding_layers() -> list[list[tuple[GateKind, tuple[int, ...]]]]:
    """The gate layers ``G1 ... G9`` that reduce the checks to ``Z_0..Z_3``."""
    return [
        [(M, (1,)), (F, (2,)), (F, (4,)), (M, (4,))],
        [(SUM_DAG, (0, 1)), (SUM_DAG, (0, 2)), (SUM_DAG, (0, 4))],
        [(M, (1,)), (F, (2,)), (F, (3,))],
        [(SUM_DAG, (1, 2)), (SUM_DAG, (1, 3))],
        [(M, (2,)), (F, (3,)), (M, (4,))],
        [(SUM_DAG, (2, 3)), (SUM_DAG, (2, 4))],
        [(M, (3,)), (F, (4,))],
        [(SUM_DAG, (3, 4))],
        [(F, (0,)), (F, (1,)), (F, (2,)), (F, (3,))],
    ]


def reduce_checks(q: int) -> list[PauliString]:
    """Conjugate the stabilizers by ``G1`` then ``G2`` ... ``G9`` (tableau level)."""
    stabs = build_check_matrix(q).stabilizers()
    for layer in encoding_layers():
        for kind, targets in layer:
            stabs = [conjugate(kind, targets, s) for s in stabs]
    return stabs


def encoder_sequence() -> list[tuple[GateKind, tuple[int, ...]]]:
    """Gates of the encoder in time order: ``G9^dag`` first, ``G1^dag`` last."""
    seq = []
    for layer in reversed(encoding_layers()):
        seq.extend((kind.inverse(), targets) for kind, targets in reversed(layer))
    return seq


def build_encoder(q: int, n_qudits: int = N_DATA) -> Circuit:
    """Encoding circuit; logical input on qudit 4, qudits 0-3 start in ``|0>``."""
    q = check_dim(q)
    instrs = [Instruction(kind, targets) for kind, targets in encoder_sequence()]
    return Circuit.from_instructions(q, n_qudits, instrs, data=DATA)


# -- syndrome cycles ------------------------------------------------------------

def _coupling(ancilla: int, site: int, kind: str, power: int) -> list[Instruction]:
    gate = SUM if power == 1 else SUM_DAG
    if kind == "X":
        return [Instruction(gate, (ancilla, site))]
    return [
        Instruction(F_DAG, (site,)),
        Instruction(gate, (ancilla, site)),
        Instruction(F, (site,)),
    ]


def _stab_block(i: int, order=None) -> list[Instruction]:
    """Fig.-style extraction of one stabilizer with per-coupling basis changes."""
    a = ANCILLAS[i]
    sites = {s: (k, p) for s, k, p in stabilizer_sites(i)}
    order = order or [s for s, _, _ in stabilizer_sites(i)]
    out = [Instruction(RESET, (a,)), Instruction(F, (a,))]
    for s in order:
        out += _coupling(a, s, *sites[s])
    out += [Instruction(F_DAG, (a,)), Instruction(MEASURE, (a,))]
    return out


def _unoptimized_cycle(q: int) -> list[Instruction]:
    """Sequential extraction in the figure layout: prepare all, couple, measure all."""
    out = [Instruction(RESET, (a,)) for a in ANCILLAS]
    out += [Instruction(F, (a,)) for a in ANCILLAS]
    for i in range(4):
        block = _stab_block(i)
        out += block[2:-2]
    out += [Instruction(F_DAG, (a,)) for a in ANCILLAS]
    out += [Instruction(MEASURE, (a,)) for a in ANCILLAS]
    return out


def _planned_cycle(flagged: bool, plan=FLAG_PLAN) -> list[Instruction]:
    """Program order for the optimised cycle built from ``plan``.

    Data qudits switch to the Fourier frame only when their next coupling is
    Z-type and switch back lazily, so consecutive Z couplings share one
    basis change.
    """
    events: list[tuple[float, int, list[Instruction]]] = []
    seq = 0

    def add(t, ins):
        nonlocal seq
        events.append((t, seq, ins))
        seq += 1

    couplings: dict[int, list[tuple[int, str]]] = {d: [] for d in DATA}
    for i, order, steps in plan:
        a = ANCILLAS[i]
        sites = {s: (k, p) for s, k, p in stabilizer_sites(i)}
        add(steps[0] - 0.9, [Instruction(RESET, (a,)), Instruction(F, (a,))])
        for n, (s, t) in enumerate(zip(order, steps)):
            kind, power = sites[s]
            gate = SUM if power == 1 else SUM_DAG
            add(t, [Instruction(gate, (a, s))])
            couplings[s].append((t, kind))
            if flagged and n == 0:
                add(steps[1] - 0.2, [Instruction(SUM, (a, FLAG))])
        if flagged:
            add(steps[2] + 0.2, [Instruction(SUM_DAG, (a, FLAG)), Instruction(MEASURE, (FLAG,)),
                                 Instruction(RESET, (FLAG,))])
        add(steps[3] + 0.3, [Instruction(F_DAG, (a,)), Instruction(MEASURE, (a,))])
    for d, cs in couplings.items():
        frame = "X"
        for t, kind in sorted(cs):
            if kind != frame:
                add(t - 0.5, [Instruction(F_DAG if kind == "Z" else F, (d,))])
                frame = kind
        if frame == "Z":
            last = max(t for t, _ in cs)
            add(last + 0.5, [Instruction(F, (d,))])
    events.sort(key=lambda e: (e[0], e[1]))
    return [ins for _, _, block in events for ins in block]


def interleaving_phase(plan=FLAG_PLAN) -> dict[tuple[int, int], int]:
    """Integer phase picked up by each pair of stabilizers through reordering.

    For stabilizers ``i`` (extracted first in the plan order) and ``j``, sum
    ``c(P_i, P_j)`` over shared qudits where ``i`` couples before ``j``.  A
    valid interleaved schedule needs every entry to be zero for all ``q``.
    """
    def c(a, b):
        (ka, pa), (kb, pb) = a, b
        r, s = (pa, 0) if ka == "X" else (0, pa)
        t, u = (pb, 0) if kb == "X" else (0, pb)
        return s * t - r * u

    timing = {i: dict(zip(order, steps)) for i, order, steps in plan}
    kinds = {i: {s: (k, p) for s, k, p in stabilizer_sites(i)} for i in timing}
    out = {}
    for i, j in itertools.combinations(sorted(timing), 2):
        shared = set(timing[i]) & set(timing[j])
        out[(i, j)] = sum(
            c(kinds[i][s], kinds[j][s]) for s in shared if timing[i][s] < timing[j][s]
        )
    return out


def cycle_instructions(q: int, flagged: bool, optimized: bool = True) -> list[Instruction]:
    check_dim(q)
    if not optimized:
        if flagged:
            raise ValueError("the unoptimised layout has no flag variant")
        return _unoptimized_cycle(q)
    return _planned_cycle(flagged)


def build_cycle(q: int, flagged: bool, optimized: bool = True) -> Circuit:
    """One unscheduled syndrome-extraction cycle (program order).

    ``flagged`` inserts the flag qudit: after the first coupling of each
    stabilizer ``SUM(A_i -> flag)``, after the third ``SUM^dag(A_i -> flag)``,
    then the flag is measured and reset for the next stabilizer.
    """
    n = 10 if flagged else 9
    instrs = cycle_instructions(q, flagged, optimized)
    return Circuit(q, n, tuple((ins,) for ins in instrs), data=DATA, cycle_starts=(0,))


def scheduled_cycle(q: int, flagged: bool, optimized: bool = True) -> tuple[Schedule, Circuit]:
    """Schedule a single cycle; the flag cycle is checked against its bounds."""
    c = build_cycle(q, flagged, optimized)
    if flagged:
        return schedule(c, max_steps=10, max_idle_periods=4)
    return schedule(c)


# -- memory experiment layout -----------------------------------------------------

@dataclass(frozen=True)
class MeasurementRole:
    """What a measurement in the record means: ``kind`` is 'anc' or 'flag'."""

    kind: str
    stabilizer: int
    cycle: int


@dataclass(frozen=True)
class MemoryLayout:
    q: int
    cycles: int
    flagged: bool
    n_qudits: int
    roles: tuple[MeasurementRole, ...]

    def ancilla_index(self) -> np.ndarray:
        """Record positions ``[cycle, stabilizer]`` of the ancilla readouts."""
        idx = np.full((self.cycles, 4), -1, dtype=np.int64)
        for k, r in enumerate(self.roles):
            if r.kind == "anc":
                idx[r.cycle, r.stabilizer] = k
        return idx

    def flag_index(self) -> np.ndarray:
        idx = np.full((self.cycles, 4), -1, dtype=np.int64)
        for k, r in enumerate(self.roles):
            if r.kind == "flag":
                idx[r.cycle, r.stabilizer] = k
        return idx


def measurement_roles(circuit: Circuit, cycles: int) -> tuple[MeasurementRole, ...]:
    """Label each MEASURE of a memory circuit in record order."""
    roles = []
    cyc = -1
    starts = set(circuit.cycle_starts)
    last_flag_stab = None
    for k, m in enumerate(circuit.moments):
        if k in starts:
            cyc += 1
        for ins in sorted(m, key=lambda i: i.targets[0]):
            if ins.is_gate and ins.op.name in ("SUM", "SUM_DAG") and ins.targets[1] == FLAG:
                last_flag_stab = ANCILLAS.index(ins.targets[0])
            if ins.op == MEASURE:
                t = ins.targets[0]
                if t == FLAG:
                    roles.append(MeasurementRole("flag", last_flag_stab, cyc))
                else:
                    roles.append(MeasurementRole("anc", ANCILLAS.index(t), cyc))
    return tuple(roles)


@lru_cache(maxsize=None)
def _memory(q: int, cycles: int, flagged: bool, optimized: bool) -> tuple[Circuit, MemoryLayout]:
    n = 10 if flagged else 9
    enc = build_encoder(q, n)
    _, cyc = scheduled_cycle(q, flagged, optimized)
    cyc = Circuit(q, n, cyc.moments, DATA, cyc.cycle_starts, True)
    _, enc_s = schedule(enc)
    enc_s = Circuit(q, n, enc_s.moments, DATA, (), True)
    # the encoder is an ideal preparation: drop its idle markers
    enc_s = Circuit(
        q, n, [tuple(i for i in m if i.op != "IDLE") for m in enc_s.moments], DATA, (), True
    )
    full = enc_s
    for _ in range(cycles):
        full = full.concat(cyc)
    layout = MemoryLayout(q, cycles, flagged, n, measurement_roles(full, cycles))
    return full, layout


def build_memory(
    q: int, cycles: int = 3, flagged: bool = False, optimized: bool = True
) -> tuple[Circuit, MemoryLayout]:
    """Encoder followed by ``cycles`` scheduled syndrome cycles (noiseless)."""
    return _memory(check_dim(q), int(cycles), bool(flagged), bool(optimized))


# -- logical operations ---------------------------------------------------------

_SFSF = (F, S, F, S)
_SFSF_DAG = (S_DAG, F_DAG, S_DAG, F_DAG)

#: Three-qudit logical gate: wires (w1, w2, w3) carry inputs (L2, L3, L1) and
#: outputs (L1, L2, L3).  Entries are time-ordered gate layers.
_T3_LAYERS: list[list[tuple[tuple[GateKind, ...], tuple[int, ...]]]] = [
    [((Z, X), (0,)), ((Z, X), (2,))],
    [(_SFSF_DAG, (0,))],
    [((S_DAG,), (0,))],
    [((SUM,), (2, 0))],
    [((S,), (0,)), (_SFSF, (2,))],
    [(_SFSF_DAG, (0,)), ((S_DAG,), (2,))],
    [((S_DAG,), (0,))],
    [((SUM,), (1, 0))],
    [((SUM,), (2, 1))],
    [((SUM,), (0, 2))],
]

#: logical block carried by each wire at input and output
T3_INPUT_BLOCKS = (1, 2, 0)
T3_OUTPUT_BLOCKS = (0, 1, 2)


def t3_physical_sequence() -> list[tuple[GateKind, tuple[int, ...]]]:
    """The three-wire circuit for one physical qudit of each block."""
    seq = []
    for layer in _T3_LAYERS:
        for kinds, wires in layer:
            seq.extend((k, wires) for k in kinds)
    return seq


def build_logical(q: int, which: str) -> Circuit:
    """Transversal logical circuits.

    ``X_L``, ``Z_L`` and ``T_L`` act on qudits 0-4 (``T = S F``: F first).
    ``T3`` acts on three 5-qudit blocks laid out wire by wire: wire ``w``
    occupies qudits ``5w .. 5w+4``.
    """
    q = check_dim(q)
    if which == "X_L":
        return Circuit.from_instructions(q, 5, [Instruction(X, (d,)) for d in DATA], data=DATA)
    if which == "Z_L":
        return Circuit.from_instructions(q, 5, [Instruction(Z, (d,)) for d in DATA], data=DATA)
    if which == "T_L":
        instrs = [Instruction(k, (d,)) for k in (F, S) for d in DATA]
        return Circuit.from_instructions(q, 5, instrs, data=DATA)
    if which == "T3":
        instrs = []
        for kind, wires in t3_physical_sequence():
            for d in DATA:
                instrs.append(Instruction(kind, tuple(5 * w + d for w in wires)))
        return Circuit.from_instructions(q, 15, instrs, data=tuple(range(15)))
    raise ValueError(f"unknown logical operation {which!r}")


def conjugate_circuit(circuit: Circuit, p: PauliString) -> PauliString:
    """``U p U^dag`` for the Clifford circuit ``U`` (tableau level)."""
    for ins in circuit.instructions():
        if ins.is_gate:
            p = conjugate(ins.op, ins.targets, p)
    return p


def code_distance_witness(q: int, max_weight: int = 3):
    """Smallest-weight nontrivial logical operators up to ``max_weight``.

    Returns ``(weight, example)`` for the first weight with a zero-syndrome
    operator outside the stabilizer group, or ``None``.
    """
    cm = build_check_matrix(q)
    for w in range(1, max_weight + 1):
        for sites in itertools.combinations(range(5), w):
            for powers in itertools.product(range(1, q * q), repeat=w):
                xs = [0] * 5
                zs = [0] * 5
                for s, pw in zip(sites, powers):
                    xs[s], zs[s] = divmod(pw, q)
                p = PauliString(q, xs, zs)
                if not cm.syndrome(p).any() and not cm.in_stabilizer_group(p.symplectic()):
                    return w, p
    return None


def reduce_stabilizer(q: int) -> tuple[np.ndarray, list[int]]:
    """RREF of the stabilizer rows (x | z), used for coset reduction."""
    return rref_mod(build_check_matrix(q).xz, q)
