"""Flag look-up table for hook errors.

The table is generated by brute force: every single fault of a noisy
two-cycle flagged memory circuit (circuit-level noise, final cycle
noiseless) is propagated through the frame engine, and each fault that
raises a flag contributes an entry

    key   = (stabilizer i, flag value f, net syndrome change sigma)
    value = (data correction, detection-event pattern over the flag's cycle
             and the next one)

``sigma`` is the sum of the event vectors of the two cycles, i.e. the total
syndrome change caused by the fault.  Entries whose faults disagree on the
correction (modulo stabilizers) are marked ambiguous; the most likely
correction, then the lowest-weight one, is kept.

Decoding with flags removes the pattern of every recognised flag from the
detection events and adds its correction; the remaining events are handed to
the ordinary decoder.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..noise import CIRCUIT, NoiseModel
from .dem import build_dem

FORMAT_VERSION = 1


@dataclass
class FlagEntry:
    """One hook class.

    ``correction`` is the estimated data error ``(x | z)`` of the hook, in the
    same convention as every decoder estimate: it is added to the base
    decoder's estimate, and a shot succeeds when ``actual - estimate`` is a
    stabilizer.
    """

    correction: tuple[int, ...]
    pattern: tuple[int, ...]  # 8 event values: cycle c then cycle c + 1
    prob: float
    ambiguous: bool = False
    alternatives: list[tuple[int, ...]] = field(default_factory=list)


@dataclass
class FlagTable:
    """Map ``(stabilizer, flag value, sigma)`` to a hook correction."""

    q: int
    entries: dict[tuple[int, int, tuple[int, ...]], FlagEntry]

    def lookup(self, stabilizer: int, flag: int, sigma) -> FlagEntry | None:
        return self.entries.get((int(stabilizer), int(flag) % self.q, tuple(int(s) % self.q for s in sigma)))

    @property
    def ambiguous(self) -> list[tuple]:
        return [k for k, e in self.entries.items() if e.ambiguous]

    def apply(self, events: np.ndarray, flags: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Strip recognised hook patterns from ``events`` (shape ``(cycles, 4)``).

        Returns ``(remaining events, correction)``.
        """
        q = self.q
        ev = np.array(events, dtype=np.int64).reshape(-1, 4) % q
        fl = np.asarray(flags, dtype=np.int64).reshape(-1, 4) % q
        cycles = ev.shape[0]
        corr = np.zeros(10, dtype=np.int64)
        for c, i in zip(*np.nonzero(fl)):
            nxt = ev[c + 1] if c + 1 < cycles else np.zeros(4, dtype=np.int64)
            entry = self.lookup(i, fl[c, i], (ev[c] + nxt) % q)
            if entry is None:
                continue
            pat = np.asarray(entry.pattern, dtype=np.int64)
            ev[c] = (ev[c] - pat[:4]) % q
            if c + 1 < cycles:
                ev[c + 1] = (ev[c + 1] - pat[4:]) % q
            corr = (corr + np.asarray(entry.correction)) % q
        return ev, corr

    # -- serialization ---------------------------------------------------------
    def to_json(self) -> str:
        rows = []
        for (i, f, sigma), e in sorted(self.entries.items()):
            rows.append({
                "stabilizer": i, "flag": f, "sigma": list(sigma),
                "correction": list(e.correction), "pattern": list(e.pattern),
                "prob": e.prob, "ambiguous": e.ambiguous,
                "alternatives": [list(a) for a in e.alternatives],
            })
        return json.dumps({"format": "qec5-flag-table", "version": FORMAT_VERSION, "q": self.q,
                           "entries": rows}, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FlagTable":
        data = json.loads(text)
        if data.get("format") != "qec5-flag-table" or data.get("version") != FORMAT_VERSION:
            raise ValueError("not a flag table of a supported version")
        entries = {}
        for r in data["entries"]:
            key = (r["stabilizer"], r["flag"], tuple(r["sigma"]))
            entries[key] = FlagEntry(tuple(r["correction"]), tuple(r["pattern"]), r["prob"],
                                     r["ambiguous"], [tuple(a) for a in r["alternatives"]])
        return cls(data["q"], entries)


def _weight(vec) -> int:
    v = np.asarray(vec)
    return int(np.count_nonzero(v[:5] | v[5:]))


def build_flag_table(q: int, p: float = 1e-3) -> FlagTable:
    """Brute-force flag table from all single faults of a flagged cycle."""
    return _build_flag_table(q, float(p))


@lru_cache(maxsize=16)
def _build_flag_table(q: int, p: float) -> FlagTable:
    dem = build_dem(q, 2, NoiseModel(CIRCUIT, p, q), flagged=True)
    candidates: dict[tuple, list] = {}
    for m in dem.mechanisms:
        fl = m.flags.reshape(-1, 4)
        hits = list(zip(*np.nonzero(fl)))
        if len(hits) != 1:
            continue
        c, i = hits[0]
        ev = m.events.reshape(-1, 4)
        nxt = ev[c + 1] if c + 1 < ev.shape[0] else np.zeros(4, dtype=np.int64)
        sigma = tuple(int(s) for s in (ev[c] + nxt) % q)
        pattern = tuple(int(s) for s in np.concatenate([ev[c], nxt]))
        key = (int(i), int(fl[c, i]), sigma)
        candidates.setdefault(key, []).append((tuple(int(v) for v in m.effect), pattern, m.prob))
    entries = {}
    for key, cands in candidates.items():
        by_eff: dict[tuple, list] = {}
        for eff, pat, prob in cands:
            by_eff.setdefault(eff, []).append((pat, prob))
        scored = sorted(
            by_eff.items(),
            key=lambda kv: (-sum(pr for _, pr in kv[1]), _weight(kv[0]), kv[0]),
        )
        eff, pats = scored[0]
        pattern = max(pats, key=lambda t: t[1])[0]
        entries[key] = FlagEntry(
            eff, pattern, sum(pr for _, pr in pats), ambiguous=len(scored) > 1,
            alternatives=[e for e, _ in scored[1:]],
        )
    return FlagTable(q, entries)
