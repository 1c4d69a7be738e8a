"""Circuit intermediate representation, text format and moment scheduler.

A :class:`Circuit` is a sequence of *moments*; the instructions inside one
moment act on disjoint qudits.  Circuits are immutable.

Text format
-----------
::

    DIM 3
    QUDITS 10
    DATA 0 1 2 3 4        # optional: which qudits hold code data
    SCHEDULED             # optional: moments come from schedule()
    CYCLE                 # starts a syndrome cycle (also ends the moment)
    RESET 5
    F 5
    TICK
    SUM 5 0
    DEPOL2(0.001) 5 0
    ...

One instruction per line: a mnemonic, optional parenthesised parameters and
the target qudits.  ``TICK`` closes the current moment, ``#`` starts a
comment.  Gates are ``X Z S F SUM M`` and their ``_DAG`` forms, plus powers
``X^k``/``Z^k``.  Other operations: ``MEASURE``, ``RESET``, ``IDLE``,
``DEPOL1(p)``, ``DEPOL2(p)``, ``MFLIP(p)`` and explicit faults
``PAULI(x,z)`` / ``PAULI(x1,z1,x2,z2)``.

Scheduling model
----------------
The scheduler packs instructions greedily (earliest start, program order
respected per qudit).  Time is counted in *steps*: a step is a moment that
touches at least one data qudit.  Operations that touch only ancilla and
flag qudits (preparation, basis rotation, flag couplings, readout, reset)
run in the short gaps between steps and do not lengthen the cycle; this is
what lets ancillas be initialised and measured immediately around their use
without adding idle moments on data.  Every data qudit not acted on during a
step receives an explicit ``IDLE`` marker.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .field import DimensionError, check_dim
from .gates import GateKind

MEASURE = "MEASURE"
RESET = "RESET"
IDLE = "IDLE"
DEPOL1 = "DEPOL1"
DEPOL2 = "DEPOL2"
MFLIP = "MFLIP"
PAULI = "PAULI"

NOISE_TAGS = (DEPOL1, DEPOL2, MFLIP)
_TAGS = (MEASURE, RESET, IDLE, DEPOL1, DEPOL2, MFLIP, PAULI)


class CircuitParseError(ValueError):
    """Malformed circuit text; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)


class SchedulingError(RuntimeError):
    """The scheduled circuit violates a requested depth or idle bound."""

    def __init__(self, message: str, achieved: "Schedule | None" = None):
        self.achieved = achieved
        super().__init__(message)


@dataclass(frozen=True)
class Instruction:
    """One operation.

    ``op`` is a :class:`~qec5.gates.GateKind` or one of the string tags
    ``MEASURE RESET IDLE DEPOL1 DEPOL2 MFLIP PAULI``.  ``params`` holds the
    noise probability for noise tags and the ``(x, z, ...)`` exponents for
    ``PAULI``.
    """

    op: GateKind | str
    targets: tuple[int, ...]
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "params", tuple(self.params))
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"duplicate target in {self.targets}")
        if isinstance(self.op, GateKind):
            if len(self.targets) != self.op.arity:
                raise ValueError(f"{self.op.name} needs {self.op.arity} target(s)")
            return
        if self.op not in _TAGS:
            raise ValueError(f"unknown operation {self.op!r}")
        if self.op in NOISE_TAGS:
            if len(self.params) != 1 or not 0.0 <= float(self.params[0]) <= 1.0:
                raise ValueError(f"{self.op} needs one probability in [0, 1]")
            arity = 2 if self.op == DEPOL2 else 1
            if len(self.targets) != arity:
                raise ValueError(f"{self.op} needs {arity} target(s)")
        elif self.op == PAULI:
            if len(self.params) != 2 * len(self.targets) or not self.targets:
                raise ValueError("PAULI needs an (x, z) pair per target")
        elif len(self.targets) != 1:
            raise ValueError(f"{self.op} takes one target")

    @property
    def is_gate(self) -> bool:
        return isinstance(self.op, GateKind)

    @property
    def is_noise(self) -> bool:
        return not self.is_gate and self.op in NOISE_TAGS + (PAULI,)

    @property
    def name(self) -> str:
        return self.op.name if self.is_gate else self.op

    def text(self, q: int) -> str:
        if self.is_gate:
            head = self.op.mnemonic(q)
        elif self.op in NOISE_TAGS:
            head = f"{self.op}({_fmt_prob(self.params[0])})"
        elif self.op == PAULI:
            head = "PAULI(" + ",".join(str(int(v) % q) for v in self.params) + ")"
        else:
            head = self.op
        return head + " " + " ".join(str(t) for t in self.targets)


def _fmt_prob(p: float) -> str:
    return repr(float(p))


@dataclass(frozen=True)
class Circuit:
    """Ordered moments of instructions on ``n_qudits`` qudits of dimension ``q``.

    Attributes
    ----------
    data : tuple of int
        Qudits that hold code data (used by the scheduler and noise models).
    cycle_starts : tuple of int
        Moment indices at which a syndrome cycle begins.
    scheduled : bool
        Set by :func:`schedule`; noise instrumentation requires it.
    """

    q: int
    n_qudits: int
    moments: tuple[tuple[Instruction, ...], ...] = ()
    data: tuple[int, ...] = ()
    cycle_starts: tuple[int, ...] = ()
    scheduled: bool = False

    def __post_init__(self):
        check_dim(self.q)
        moments = tuple(tuple(m) for m in self.moments)
        object.__setattr__(self, "moments", moments)
        object.__setattr__(self, "data", tuple(sorted(int(d) for d in self.data)))
        object.__setattr__(self, "cycle_starts", tuple(int(c) for c in self.cycle_starts))
        for k, moment in enumerate(moments):
            seen: set[int] = set()
            for ins in moment:
                for t in ins.targets:
                    if not 0 <= t < self.n_qudits:
                        raise ValueError(f"moment {k}: qudit {t} out of range")
                    if t in seen:
                        raise ValueError(f"moment {k}: qudit {t} appears twice")
                    seen.add(t)
                if ins.op == PAULI and any(not 0 <= int(v) < self.q for v in ins.params):
                    raise DimensionError(f"moment {k}: PAULI exponents must lie in 0..{self.q - 1}")
        if any(not 0 <= d < self.n_qudits for d in self.data):
            raise ValueError("data qudit out of range")
        if list(self.cycle_starts) != sorted(set(self.cycle_starts)) or any(
            not 0 <= c <= len(moments) for c in self.cycle_starts
        ):
            raise ValueError("cycle_starts must be increasing moment indices")

    # -- construction helpers ---------------------------------------------
    @classmethod
    def from_instructions(
        cls, q: int, n_qudits: int, instructions: Iterable[Instruction], **kw
    ) -> "Circuit":
        """One instruction per moment (the unscheduled program order)."""
        return cls(q, n_qudits, tuple((ins,) for ins in instructions), **kw)

    def instructions(self) -> list[Instruction]:
        return [ins for m in self.moments for ins in m]

    def __len__(self) -> int:
        return len(self.moments)

    @property
    def n_cycles(self) -> int:
        return len(self.cycle_starts)

    def cycle_ranges(self) -> list[tuple[int, int]]:
        """``(start, stop)`` moment ranges of each cycle."""
        bounds = list(self.cycle_starts) + [len(self.moments)]
        return [(bounds[i], bounds[i + 1]) for i in range(len(self.cycle_starts))]

    def cycle_of_moment(self, k: int) -> int:
        """Cycle index of moment ``k`` (-1 before the first cycle)."""
        c = -1
        for i, s in enumerate(self.cycle_starts):
            if k >= s:
                c = i
        return c

    def count(self, name: str) -> int:
        return sum(1 for ins in self.instructions() if ins.name == name)

    def concat(self, other: "Circuit") -> "Circuit":
        """Append ``other``; cycle markers and data sets are merged."""
        if other.q != self.q:
            raise DimensionError(f"dimension mismatch: {self.q} vs {other.q}")
        n = max(self.n_qudits, other.n_qudits)
        offset = len(self.moments)
        return Circuit(
            self.q,
            n,
            self.moments + other.moments,
            data=tuple(sorted(set(self.data) | set(other.data))),
            cycle_starts=self.cycle_starts + tuple(c + offset for c in other.cycle_starts),
            scheduled=self.scheduled and other.scheduled,
        )

    def without_noise(self) -> "Circuit":
        moments = [tuple(i for i in m if not i.is_noise) for m in self.moments]
        return _drop_empty(self, moments)

    def to_text(self) -> str:
        return emit_circuit(self)


def _drop_empty(c: Circuit, moments: Sequence[Sequence[Instruction]]) -> Circuit:
    keep, new_index, starts = [], {}, []
    for k, m in enumerate(moments):
        new_index[k] = len(keep)
        if m:
            keep.append(tuple(m))
    new_index[len(moments)] = len(keep)
    for s in c.cycle_starts:
        starts.append(new_index[s])
    return Circuit(c.q, c.n_qudits, keep, c.data, tuple(sorted(set(starts))), c.scheduled)


# -- text format -------------------------------------------------------------

_LINE = re.compile(r"^([A-Z_][A-Z_0-9]*(?:\^-?\d+)?)(?:\(([^)]*)\))?((?:\s+-?\d+)*)\s*$")


def parse_circuit(text: str) -> Circuit:
    """Parse circuit text.

    Raises
    ------
    CircuitParseError
        On malformed lines, duplicate targets within a moment, out-of-range
        qudits or exponents inconsistent with ``DIM``.
    """
    q = n = None
    data: tuple[int, ...] = ()
    scheduled = False
    moments: list[tuple[Instruction, ...]] = []
    current: list[Instruction] = []
    used: set[int] = set()
    starts: list[int] = []

    def close():
        nonlocal current, used
        if current:
            moments.append(tuple(current))
        current, used = [], set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word = line.split()[0]
        if word == "DIM":
            try:
                q = check_dim(int(line.split()[1]))
            except (IndexError, ValueError) as exc:
                raise CircuitParseError(f"bad DIM header ({exc})", lineno) from None
            continue
        if word == "QUDITS":
            try:
                n = int(line.split()[1])
            except (IndexError, ValueError):
                raise CircuitParseError("bad QUDITS header", lineno) from None
            continue
        if q is None or n is None:
            raise CircuitParseError("DIM and QUDITS headers must come first", lineno)
        if word == "DATA":
            data = tuple(int(t) for t in line.split()[1:])
            continue
        if word == "SCHEDULED":
            scheduled = True
            continue
        if word == "TICK":
            close()
            continue
        if word == "CYCLE":
            close()
            starts.append(len(moments))
            continue
        ins = _parse_instruction(line, q, n, lineno)
        clash = used.intersection(ins.targets)
        if clash:
            raise CircuitParseError(f"duplicate target {sorted(clash)[0]} in moment", lineno)
        used.update(ins.targets)
        current.append(ins)
    close()
    if q is None or n is None:
        raise CircuitParseError("missing DIM/QUDITS header")
    try:
        return Circuit(q, n, moments, data, tuple(sorted(set(starts))), scheduled)
    except ValueError as exc:
        raise CircuitParseError(str(exc)) from None


def _parse_instruction(line: str, q: int, n: int, lineno: int) -> Instruction:
    m = _LINE.match(line)
    if not m:
        raise CircuitParseError(f"cannot parse {line!r}", lineno)
    head, args, targets = m.group(1), m.group(2), m.group(3).split()
    targets = tuple(int(t) for t in targets)
    for t in targets:
        if not 0 <= t < n:
            raise CircuitParseError(f"qudit {t} out of range for QUDITS {n}", lineno)
    if len(set(targets)) != len(targets):
        raise CircuitParseError(f"duplicate target in {line!r}", lineno)
    try:
        if head in _TAGS:
            if head in NOISE_TAGS:
                params = (float(args),) if args is not None else ()
            elif head == PAULI:
                params = tuple(int(v) for v in (args or "").split(","))
                if any(not 0 <= v < q for v in params):
                    raise DimensionError(f"PAULI exponents must lie in 0..{q - 1}")
            else:
                if args is not None:
                    raise ValueError(f"{head} takes no parameters")
                params = ()
            return Instruction(head, targets, params)
        if args is not None:
            raise ValueError(f"gate {head} takes no parameters")
        kind = GateKind.parse(head)
        if kind.name in ("X", "Z") and not 0 < kind.power < q and head.count("^"):
            raise DimensionError(f"power {kind.power} out of range for DIM {q}")
        return Instruction(kind, targets)
    except ValueError as exc:  # includes DimensionError
        raise CircuitParseError(str(exc), lineno) from None


def emit_circuit(circuit: Circuit) -> str:
    """Canonical text; instructions within a moment sorted by first target."""
    lines = [f"DIM {circuit.q}", f"QUDITS {circuit.n_qudits}"]
    if circuit.data:
        lines.append("DATA " + " ".join(str(d) for d in circuit.data))
    if circuit.scheduled:
        lines.append("SCHEDULED")
    starts = set(circuit.cycle_starts)
    for k, moment in enumerate(circuit.moments):
        if k in starts:
            lines.append("CYCLE")
        elif k:
            lines.append("TICK")
        for ins in sorted(moment, key=lambda i: i.targets[0]):
            lines.append(ins.text(circuit.q))
    if len(circuit.moments) in starts:
        lines.append("CYCLE")
    return "\n".join(lines) + "\n"


def canonical(circuit: Circuit) -> Circuit:
    """Sort each moment by first target (the form :func:`emit_circuit` writes)."""
    moments = tuple(tuple(sorted(m, key=lambda i: i.targets[0])) for m in circuit.moments)
    return Circuit(
        circuit.q, circuit.n_qudits, moments, circuit.data, circuit.cycle_starts, circuit.scheduled
    )


# -- scheduling --------------------------------------------------------------

@dataclass(frozen=True)
class CycleSchedule:
    """Timing of one cycle: data steps and per-data-qudit idle statistics."""

    steps: int
    moments: int
    idle_steps: dict = field(default_factory=dict)
    idle_periods: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Schedule:
    """Result of :func:`schedule`.

    ``cycles`` has one entry per syndrome cycle (or a single entry for a
    circuit without cycle markers).
    """

    cycles: tuple[CycleSchedule, ...]

    @property
    def steps_per_cycle(self) -> list[int]:
        return [c.steps for c in self.cycles]

    @property
    def total_steps(self) -> int:
        return sum(c.steps for c in self.cycles)

    @property
    def max_idle_periods(self) -> int:
        return max((max(c.idle_periods.values(), default=0) for c in self.cycles), default=0)

    @property
    def max_idle_steps(self) -> int:
        return max((max(c.idle_steps.values(), default=0) for c in self.cycles), default=0)


def _segments(circuit: Circuit) -> list[tuple[list[Instruction], bool]]:
    """Split program order at cycle markers; flag whether each part is a cycle."""
    ranges = circuit.cycle_ranges()
    out = []
    first = ranges[0][0] if ranges else len(circuit.moments)
    pre = [i for m in circuit.moments[:first] for i in m]
    if pre or not ranges:
        out.append((pre, False))
    for a, b in ranges:
        out.append(([i for m in circuit.moments[a:b] for i in m], True))
    return out


def _pack(instrs: list[Instruction], data: set[int], all_data: bool):
    """Two-level earliest-start packing of one segment.

    Returns ``(moments, is_step)`` where ``is_step[k]`` marks data steps.
    """
    if not instrs:
        return [], []
    is_data_op = [all_data or bool(data.intersection(i.targets)) for i in instrs]
    # position: data op -> ("s", step); fast op -> ("g", gap)  (gap g precedes step g)
    pos: list[tuple[str, int]] = [None] * len(instrs)  # type: ignore[list-item]
    last: dict[int, int] = {}
    preds: list[list[int]] = []
    for k, ins in enumerate(instrs):
        pk = [last[t] for t in ins.targets if t in last]
        preds.append(pk)
        if is_data_op[k]:
            s = 0
            for j in pk:
                kind, v = pos[j]
                s = max(s, v + 1 if kind == "s" else v)
            pos[k] = ("s", s)
        else:
            g = 0
            for j in pk:
                kind, v = pos[j]
                g = max(g, v + 1 if kind == "s" else v)
            pos[k] = ("g", g)
        for t in ins.targets:
            last[t] = k
    if not all_data:
        _just_in_time(instrs, pos, is_data_op, data)
    # levels inside each gap
    level = [0] * len(instrs)
    for k in range(len(instrs)):
        if pos[k][0] == "g":
            lv = 0
            for j in preds[k]:
                if pos[j] == pos[k]:
                    lv = max(lv, level[j] + 1)
            level[k] = lv
    # a fast op must precede data successors in the same gap index; ok by construction
    n_steps = 1 + max((v for kind, v in pos if kind == "s"), default=-1)
    n_gaps = 1 + max((v for kind, v in pos if kind == "g"), default=-1)
    slots: dict[tuple, list[Instruction]] = {}
    for k, ins in enumerate(instrs):
        kind, v = pos[k]
        key = (v, 0, level[k]) if kind == "g" else (v, 1, 0)
        slots.setdefault(key, []).append(ins)
    moments, is_step = [], []
    for v in range(max(n_steps, n_gaps)):
        for key in sorted(k for k in slots if k[0] == v):
            moments.append(slots[key])
            is_step.append(key[1] == 1)
    return moments, is_step


def _just_in_time(instrs, pos, is_data_op, data):
    """Delay ancilla preparation (reset and the gates after it) until first use."""
    n = len(instrs)
    nxt: list[int | None] = [None] * n
    last_seen: dict[int, int] = {}
    for k in range(n - 1, -1, -1):
        ins = instrs[k]
        if len(ins.targets) == 1:
            nxt[k] = last_seen.get(ins.targets[0])
        for t in ins.targets:
            last_seen[t] = k
    # walk chains starting at RESET on non-data qudits
    for k in range(n - 1, -1, -1):
        ins = instrs[k]
        if is_data_op[k] or len(ins.targets) != 1 or ins.targets[0] in data:
            continue
        if not _in_prep_chain(instrs, k):
            continue
        j = nxt[k]
        if j is None:
            continue
        kind, v = pos[j]
        pos[k] = ("g", v) if kind == "s" else ("g", v)


def _in_prep_chain(instrs, k) -> bool:
    """True if ``instrs[k]`` is a reset or a 1-qudit gate following a reset."""
    t = instrs[k].targets[0]
    for j in range(k, -1, -1):
        ins = instrs[j]
        if t not in ins.targets:
            continue
        if ins.op == RESET:
            return True
        if len(ins.targets) != 1 or ins.op == MEASURE or not (ins.is_gate or ins.is_noise):
            return False
    return False


def schedule(
    circuit: Circuit,
    *,
    max_steps: int | None = None,
    max_idle_periods: int | None = None,
) -> tuple[Schedule, Circuit]:
    """Pack a circuit into moments and insert idle markers on data qudits.

    Each cycle is packed independently (cycle boundaries are barriers).  If
    the circuit declares no data qudits, every qudit counts as data and the
    result is plain ASAP list scheduling.  Existing ``IDLE`` markers are
    dropped and recomputed.

    Parameters
    ----------
    max_steps, max_idle_periods
        Optional bounds checked for every cycle.

    Returns
    -------
    (Schedule, Circuit)

    Raises
    ------
    SchedulingError
        If a bound is violated; the achieved schedule is attached.
    """
    all_data = not circuit.data
    data = set(range(circuit.n_qudits)) if all_data else set(circuit.data)
    moments: list[tuple[Instruction, ...]] = []
    starts: list[int] = []
    cycles: list[CycleSchedule] = []
    for instrs, is_cycle in _segments(circuit):
        instrs = [i for i in instrs if i.op != IDLE]
        packed, is_step = _pack(instrs, data, all_data)
        if is_cycle:
            starts.append(len(moments))
        idle_steps = {d: 0 for d in sorted(data)}
        periods = {d: 0 for d in sorted(data)}
        was_idle = {d: False for d in data}
        for m, step in zip(packed, is_step):
            m = list(m)
            if step:
                busy = {t for i in m for t in i.targets}
                for d in sorted(data - busy):
                    m.append(Instruction(IDLE, (d,)))
                    idle_steps[d] += 1
                    if not was_idle[d]:
                        periods[d] += 1
                    was_idle[d] = True
                for d in busy & data:
                    was_idle[d] = False
            moments.append(tuple(sorted(m, key=lambda i: i.targets[0])))
        if is_cycle or not circuit.cycle_starts:
            cycles.append(CycleSchedule(sum(is_step), len(packed), idle_steps, periods))
    result = Schedule(tuple(cycles))
    out = Circuit(
        circuit.q,
        circuit.n_qudits,
        moments,
        circuit.data,
        tuple(starts) if circuit.cycle_starts else (),
        scheduled=True,
    )
    if max_steps is not None and any(c.steps > max_steps for c in cycles):
        raise SchedulingError(
            f"cycle depth {result.steps_per_cycle} exceeds {max_steps} steps", result
        )
    if max_idle_periods is not None and result.max_idle_periods > max_idle_periods:
        raise SchedulingError(
            f"{result.max_idle_periods} idle periods exceed {max_idle_periods}", result
        )
    return result, out


# -- DOT export --------------------------------------------------------------

def to_dot(circuit: Circuit) -> str:
    """Moment dependency graph: one node per instruction, edges along qudits."""
    lines = ["digraph circuit {", "  rankdir=LR;"]
    last: dict[int, str] = {}
    for k, moment in enumerate(circuit.moments):
        for j, ins in enumerate(moment):
            node = f"m{k}_{j}"
            label = ins.text(circuit.q).replace('"', "'")
            lines.append(f'  {node} [label="{label}"];')
            for t in ins.targets:
                if t in last:
                    lines.append(f'  {last[t]} -> {node} [label="q{t}"];')
                last[t] = node
    lines.append("}")
    return "\n".join(lines) + "\n"
