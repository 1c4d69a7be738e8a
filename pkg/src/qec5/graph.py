"""The q-ary expanded detector (matching) graph of the 5-qudit code.

Each ancilla contributes ``q - 1`` nodes per cycle, one for every nontrivial
eigenvalue ``w^a`` it can report.  A single-qudit error ``E`` moves ancilla
``i`` to eigenvalue ``w^c`` with ``c = commutation_phase(S_i, E)``, so ``E``
labels the edge joining the nodes ``(i, c_i)`` of the (at most two) checks it
violates, or a boundary edge when it violates only one.  A readout error
``X^v`` on ancilla ``i`` in cycle ``c`` shows up as events ``v`` at cycle
``c`` and ``-v`` at cycle ``c + 1``: a time-like edge.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .code5 import CheckMatrix
from .pauli import PauliString

BOUNDARY = -1


@dataclass(frozen=True, order=True)
class DetectorNode:
    ancilla: int
    value: int
    cycle: int

    def label(self) -> str:
        return f"(S_{self.ancilla}, w^{self.value}, {self.cycle})"


@dataclass(frozen=True)
class GraphEdge:
    """An error mechanism.

    ``nodes`` are node ids (``BOUNDARY`` allowed as the last entry);
    ``effect`` is the data-qudit ``(x | z)`` vector the mechanism applies;
    ``kind`` is ``'data'`` or ``'meas'``.
    """

    nodes: tuple[int, ...]
    label: str
    effect: tuple[int, ...]
    weight: float = 1.0
    kind: str = "data"

    @property
    def hyper(self) -> bool:
        return len([n for n in self.nodes if n != BOUNDARY]) > 2


@dataclass
class DetectorGraph:
    """Nodes, ordinary edges and (separately) hyperedges of the matching graph."""

    q: int
    cycles: int
    nodes: list[DetectorNode]
    edges: list[GraphEdge]
    hyperedges: list[GraphEdge] = field(default_factory=list)

    def __post_init__(self):
        self.index = {n: k for k, n in enumerate(self.nodes)}

    def node_id(self, ancilla: int, value: int, cycle: int) -> int:
        return self.index[DetectorNode(ancilla, value % self.q, cycle)]

    def conj(self, node_id: int) -> int:
        """Node with the inverse eigenvalue (same ancilla and cycle)."""
        n = self.nodes[node_id]
        return self.node_id(n.ancilla, -n.value, n.cycle)

    def components(self, include_boundary: bool = False) -> list[set[int]]:
        """Connected components over ordinary edges."""
        parent = list(range(len(self.nodes) + 1))
        b = len(self.nodes)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            ids = [b if n == BOUNDARY else n for n in e.nodes]
            if not include_boundary:
                ids = [i for i in ids if i != b]
            for u, v in zip(ids, ids[1:]):
                parent[find(u)] = find(v)
        groups: dict[int, set[int]] = {}
        for k in range(len(self.nodes)):
            groups.setdefault(find(k), set()).add(k)
        return sorted(groups.values(), key=min)

    def to_dot(self) -> str:
        lines = ["graph detectors {"]
        lines.append('  B [label="boundary", shape=box];')
        for k, n in enumerate(self.nodes):
            lines.append(f'  n{k} [label="{n.label()}"];')
        for e in self.edges:
            a, b = (f"n{x}" if x != BOUNDARY else "B" for x in e.nodes)
            lines.append(f'  {a} -- {b} [label="{e.label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def single_qudit_label(q: int, site: int, x: int, z: int) -> str:
    parts = []
    if x:
        parts.append("X" if x == 1 else f"X^{x}")
    if z:
        parts.append("Z" if z == 1 else f"Z^{z}")
    return ".".join(parts) + f"_{site}"


def _effect(site: int, x: int, z: int) -> tuple[int, ...]:
    v = [0] * 10
    v[site] = x
    v[5 + site] = z
    return tuple(v)


def error_syndrome(H: CheckMatrix, site: int, x: int, z: int) -> np.ndarray:
    return H.syndrome(PauliString.from_symplectic(H.q, _effect(site, x, z)))


def build_graph(H: CheckMatrix, cycles: int = 1) -> DetectorGraph:
    """Expanded matching graph over ``cycles`` rounds with uniform weights."""
    q = H.q
    if cycles < 1:
        raise ValueError("need at least one cycle")
    nodes = [DetectorNode(i, a, c) for c in range(cycles) for i in range(4) for a in range(1, q)]
    graph = DetectorGraph(q, cycles, nodes, [])
    edges, hyper = [], []
    for c in range(cycles):
        for site in range(5):
            for x, z in itertools.product(range(q), repeat=2):
                if x == 0 and z == 0:
                    continue
                syn = error_syndrome(H, site, x, z)
                ids = tuple(graph.node_id(i, int(syn[i]), c) for i in range(4) if syn[i])
                label = single_qudit_label(q, site, x, z)
                if len(ids) == 1:
                    ids = ids + (BOUNDARY,)
                edge = GraphEdge(ids, f"{label}@{c}", _effect(site, x, z))
                (hyper if len(ids) > 2 else edges).append(edge)
        if c + 1 < cycles:
            for i in range(4):
                for v in range(1, q):
                    ids = (graph.node_id(i, v, c), graph.node_id(i, -v, c + 1))
                    edges.append(GraphEdge(ids, f"M{v}_{i}@{c}", (0,) * 10, kind="meas"))
    graph.edges = edges
    graph.hyperedges = hyper
    return graph


@dataclass(frozen=True)
class HyperedgeInfo:
    edge: GraphEdge
    decompositions: list[tuple[str, str]]
    cross_component: bool


def hyperedges(H: CheckMatrix) -> list[HyperedgeInfo]:
    """Y-type errors ``X^r Z^s`` (single cycle) and their two-edge decompositions.

    A decomposition is an unordered pair of ordinary edges (boundary edges
    included) whose node sets partition the hyperedge's nodes and whose
    combined syndrome equals the hyperedge's.  The direct pair ``{X^r, Z^s}``
    on the same qudit is one of them whenever both are ordinary edges.
    """
    graph = build_graph(H, 1)
    comp_of = {}
    for k, comp in enumerate(graph.components()):
        for n in comp:
            comp_of[n] = k
    out = []
    simple = graph.edges
    for h in graph.hyperedges:
        target = set(h.nodes)
        decs = []
        for e1, e2 in itertools.combinations(simple, 2):
            n1 = set(e1.nodes) - {BOUNDARY}
            n2 = set(e2.nodes) - {BOUNDARY}
            if n1 & n2 or (n1 | n2) != target - {BOUNDARY}:
                continue
            b_count = (BOUNDARY in e1.nodes) + (BOUNDARY in e2.nodes)
            if b_count > 1:
                continue
            decs.append((e1.label.split("@")[0], e2.label.split("@")[0]))
        comps = {comp_of[n] for n in h.nodes if n != BOUNDARY}
        out.append(HyperedgeInfo(h, decs, len(comps) > 1))
    return out


# -- detection events ------------------------------------------------------------

@dataclass(frozen=True)
class SyndromeRecord:
    """Per-cycle ancilla outcomes ``m[c][i]`` and optional flag outcomes."""

    outcomes: np.ndarray
    flags: np.ndarray | None = None
    q: int | None = None

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.outcomes, dtype=np.int64))
        if m.shape[0] < 1:
            raise ValueError("need at least one cycle")
        object.__setattr__(self, "outcomes", m)


def event_values(outcomes: np.ndarray, q: int) -> np.ndarray:
    """``m_c - m_{c-1} mod q`` with ``m_{-1} = 0``; works on batches (last two axes)."""
    m = np.asarray(outcomes, dtype=np.int64)
    prev = np.concatenate([np.zeros_like(m[..., :1, :]), m[..., :-1, :]], axis=-2)
    return (m - prev) % q


def detection_events(record: SyndromeRecord, q: int | None = None) -> list[tuple[int, int, int]]:
    """``(ancilla, cycle, value)`` for every nonzero difference."""
    q = q or record.q
    if q is None:
        raise ValueError("dimension unknown")
    ev = event_values(record.outcomes, q)
    return [(int(i), int(c), int(ev[c, i])) for c, i in zip(*np.nonzero(ev))]


def activate(graph: DetectorGraph, events) -> set[int]:
    """Node ids lit by ``(ancilla, cycle, value)`` events."""
    active = set()
    for a, c, v in events:
        if not 0 < v < graph.q:
            raise ValueError(f"event value {v} out of range 1..{graph.q - 1}")
        if not 0 <= c < graph.cycles:
            raise ValueError(f"cycle {c} outside the graph")
        active.add(graph.node_id(a, v, c))
    return active


def paper_recipe_label(H: CheckMatrix, i: int, site: int, a: int) -> tuple[int, int]:
    """Error ``(x, z)`` on ``site`` obtained by the literal textual recipe.

    Raise the check's operator at ``site`` to the power ``a``, swap X and Z,
    then invert.  Kept for comparison: for Z-type sites with ``q > 2`` the
    result reports eigenvalue ``-a`` rather than ``a``; the graph uses the
    commutation phase instead.
    """
    q = H.q
    row = H.xz[i]
    x, z = row[site], row[5 + site]
    x, z = (a * x) % q, (a * z) % q
    x, z = z, x
    return (-x) % q, (-z) % q
