"""Monte Carlo harness, reference curve, power-law fits and concatenation.

A memory experiment encodes ``|0>_L``, runs ``cycles`` syndrome-extraction
cycles under the chosen noise model, decodes the detection events (and flag
outcomes) and declares success when the residual error ``actual - estimate``
is a stabilizer.  Shots are sampled with the batched Pauli-frame engine in
fixed-size chunks; chunk ``k`` always uses the ``k``-th child of the seed's
:class:`numpy.random.SeedSequence`, so results do not depend on how chunks
are spread over worker threads.

Reported rates are per noisy cycle: with ``P`` the probability that the whole
run fails and ``n`` the number of noisy cycles (all cycles for standard
depolarizing noise, all but the final error-free cycle for circuit-level
noise), ``p_L = 1 - (1 - P)^(1/n)``.  Confidence bounds are transformed the
same way; the raw failure count is kept.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .backends.frame import FrameSimulator
from .code5 import build_memory
from .decoders.dem import data_frame, records_to_syndromes
from .decoders.pipeline import DECODERS, Decoder, success_mask
from .field import check_dim
from .graph import event_values
from .noise import CIRCUIT, SDEP, NoiseModel, noise_template

CHUNK = 20_000
CSV_FIELDS = ("q", "model", "decoder", "flag", "p", "shots", "failures", "p_l", "ci_low",
              "ci_high", "seed")


class NoThresholdError(ValueError):
    """The fitted exponent does not allow a finite positive threshold."""


# -- configuration and results ---------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """One point of a memory experiment.

    ``shots`` is used as given unless ``A`` is set, in which case
    ``shots = ceil(A / p)``.
    """

    q: int
    p: float
    model: str = CIRCUIT
    decoder: str = "bm"
    flagged: bool = True
    cycles: int = 3
    shots: int = 10_000
    seed: int = 0
    A: float | None = None
    confidence: float = 0.99
    optimized: bool = True

    def __post_init__(self):
        check_dim(self.q)
        if self.model not in (SDEP, CIRCUIT):
            raise ValueError(f"unknown noise model {self.model!r}")
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        if self.cycles < 1:
            raise ValueError("need at least one cycle")
        if self.model == CIRCUIT and self.cycles < 2:
            raise ValueError("circuit-level noise needs at least two cycles")
        if self.A is not None and (self.A <= 0 or self.p <= 0):
            raise ValueError("the A/p shot rule needs A > 0 and p > 0")
        if self.n_shots < 1:
            raise ValueError("shots must be at least 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")

    @property
    def n_shots(self) -> int:
        if self.A is not None:
            return math.ceil(self.A / self.p)
        return int(self.shots)

    @property
    def noisy_cycles(self) -> int:
        return self.cycles if self.model == SDEP else self.cycles - 1

    @property
    def uses_flag(self) -> bool:
        # the flag qudit only matters for circuit-level noise
        return self.flagged and self.model == CIRCUIT


@dataclass
class ExperimentResult:
    config: RunConfig
    shots: int
    failures: int
    p_run: float
    run_ci: tuple[float, float]
    p_l: float
    ci: tuple[float, float]

    def row(self) -> dict:
        c = self.config
        return {
            "q": c.q, "model": c.model, "decoder": c.decoder, "flag": int(c.uses_flag),
            "p": repr(float(c.p)), "shots": self.shots, "failures": self.failures,
            "p_l": _fmt(self.p_l), "ci_low": _fmt(self.ci[0]), "ci_high": _fmt(self.ci[1]),
            "seed": c.seed,
        }


def _fmt(x: float) -> str:
    return f"{x:.8g}"


def wilson_interval(failures: int, shots: int, confidence: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    z = norm.ppf(0.5 + confidence / 2)
    phat = failures / shots
    denom = 1 + z * z / shots
    centre = (phat + z * z / (2 * shots)) / denom
    half = z * math.sqrt(phat * (1 - phat) / shots + z * z / (4 * shots * shots)) / denom
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == shots else min(1.0, centre + half)
    return lo, hi


def per_cycle(p_run: float, cycles: int) -> float:
    """Per-cycle rate ``1 - (1 - P)^(1/cycles)``."""
    return 1.0 - (1.0 - p_run) ** (1.0 / cycles)


def p_m1(p_c: float) -> float:
    """Probability of two or more errors among five qudits with error rate ``p_c``."""
    if not 0 <= p_c <= 1:
        raise ValueError("p_c must lie in [0, 1]")
    return 1 - ((1 - p_c) ** 5 + 5 * p_c * (1 - p_c) ** 4)


# -- sampling --------------------------------------------------------------------

class _Sampler:
    """Compiled circuit and decoder for one configuration."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        model = NoiseModel(cfg.model, cfg.p, cfg.q)
        flagged = cfg.uses_flag
        self.circuit, self.layout = build_memory(cfg.q, cfg.cycles, flagged, cfg.optimized)
        self.sim = FrameSimulator(noise_template(self.circuit, model))
        self.model = model
        self.flagged = flagged

    def chunk_failures(self, shots: int, seed_seq: np.random.SeedSequence) -> int:
        cfg = self.cfg
        noise_seed, tie_seed = seed_seq.spawn(2)
        res = self.sim.run(shots, np.random.default_rng(noise_seed))
        m, fl = records_to_syndromes(res.record, self.layout)
        ev = event_values(m, cfg.q)
        actual = data_frame(res.x, res.z)
        if not ev.any() and not fl.any():
            return int((~success_mask(actual, cfg.q)).sum())
        decoder = Decoder(cfg.q, cfg.cycles, self.model, cfg.decoder, self.flagged,
                          cfg.optimized, rng=np.random.default_rng(tie_seed))
        est = decoder.decode_batch(ev, fl)
        return int((~success_mask((actual - est) % cfg.q, cfg.q)).sum())


@dataclass
class AuditResult:
    """Outcome of decoding every single fault of a noisy cycle."""

    q: int
    decoder: str
    faults: int
    failures: list[tuple]

    @property
    def ok(self) -> bool:
        return self.faults > 0 and not self.failures


def single_fault_audit(q: int, decoder: str = "bm", flagged: bool = True, cycles: int = 2,
                       p: float = 1e-3) -> AuditResult:
    """Inject every single circuit-level fault and decode it.

    The memory has ``cycles`` cycles of which all but the last are noisy; each
    nontrivial Pauli of each noise location is injected on its own, and the
    shot is decoded (with the flag table when ``flagged``).
    """
    model = NoiseModel(CIRCUIT, p, q)
    circuit, layout = build_memory(q, cycles, flagged)
    sim = FrameSimulator(noise_template(circuit, model))
    injections, rows, labels = {}, 0, []
    for loc in range(len(sim.locations)):
        fx, fz, _ = sim.location_faults(loc)
        k = fx.shape[0]
        injections[loc] = (np.arange(rows, rows + k), fx, fz)
        op, targets, _ = sim.locations[loc]
        labels += [(loc, op, targets, tuple(int(v) for v in fx[j]), tuple(int(v) for v in fz[j]))
                   for j in range(k)]
        rows += k
    res = sim.run(rows, injections=injections)
    m, fl = records_to_syndromes(res.record, layout)
    dec = Decoder(q, cycles, model, decoder, flagged, rng=np.random.default_rng(0))
    est = dec.decode_batch(event_values(m, q), fl)
    ok = success_mask((data_frame(res.x, res.z) - est) % q, q)
    return AuditResult(q, decoder, rows, [labels[r] for r in np.flatnonzero(~ok)])


def _chunks(total: int) -> list[int]:
    sizes = [CHUNK] * (total // CHUNK)
    if total % CHUNK:
        sizes.append(total % CHUNK)
    return sizes


def default_threads() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def run_experiment(cfg: RunConfig, threads: int | None = None) -> ExperimentResult:
    """Estimate the logical error rate of one configuration."""
    shots = cfg.n_shots
    if cfg.p == 0:
        failures = 0
    else:
        sampler = _Sampler(cfg)
        sizes = _chunks(shots)
        seqs = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
        threads = max(1, threads or default_threads())
        if threads == 1 or len(sizes) == 1:
            counts = [sampler.chunk_failures(n, s) for n, s in zip(sizes, seqs)]
        else:
            with ThreadPoolExecutor(max_workers=min(threads, len(sizes))) as pool:
                counts = list(pool.map(sampler.chunk_failures, sizes, seqs))
        failures = sum(counts)
    p_run = failures / shots
    lo, hi = wilson_interval(failures, shots, cfg.confidence)
    n = cfg.noisy_cycles
    return ExperimentResult(cfg, shots, failures, p_run, (lo, hi), per_cycle(p_run, n),
                            (per_cycle(lo, n), per_cycle(hi, n)))


def results_csv(results: list[ExperimentResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow(r.row())
    return buf.getvalue()


def read_results_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    missing = [f for f in CSV_FIELDS if rows and f not in rows[0]]
    if missing:
        raise ValueError(f"results file lacks columns: {', '.join(missing)}")
    return rows


# -- fits, thresholds, concatenation ---------------------------------------------

@dataclass
class FitResult:
    """``P_L(p) = a p^b`` with parameter uncertainties.

    ``log_cov`` is the covariance of ``(ln a, b)`` from the fit; ``cov`` the
    corresponding first-order covariance of ``(a, b)``.
    """

    a: float
    b: float
    log_cov: np.ndarray
    cov: np.ndarray = field(init=False)

    def __post_init__(self):
        self.log_cov = np.asarray(self.log_cov, dtype=float)
        jac = np.diag([self.a, 1.0])
        self.cov = jac @ self.log_cov @ jac.T
        if not self.a > 0:
            raise ValueError("a must be positive")

    def __call__(self, p):
        return self.a * np.asarray(p, dtype=float) ** self.b


def fit_power_law(points) -> FitResult:
    """Weighted least squares of ``ln P = ln a + b ln p``.

    ``points`` holds ``(p, P_L, weight)`` triples; weights are inverse
    variances of ``ln P_L``, and the reported covariance is
    ``(X^T W X)^-1``.
    """
    pts = [tuple(float(v) for v in pt) for pt in points]
    if len(pts) < 3:
        raise ValueError("a power-law fit needs at least three points")
    p, y, w = (np.array(c) for c in zip(*pts))
    if np.any(p <= 0) or np.any(y <= 0) or np.any(w <= 0):
        raise ValueError("points and weights must be positive")
    X = np.column_stack([np.ones_like(p), np.log(p)])
    W = np.diag(w)
    normal = X.T @ W @ X
    if abs(np.linalg.det(normal)) < 1e-12 * max(1.0, np.abs(normal).max()) ** 2:
        raise ValueError("degenerate design matrix (need distinct p values)")
    cov = np.linalg.inv(normal)
    beta = cov @ X.T @ W @ np.log(y)
    return FitResult(float(np.exp(beta[0])), float(beta[1]), cov)


def fit_points(results) -> list[tuple[float, float, float]]:
    """``(p, p_L, weight)`` from results with failures; weight = binomial inverse variance of ln p_L."""
    out = []
    for r in results:
        if isinstance(r, ExperimentResult):
            p, pl, fails, shots = r.config.p, r.p_l, r.failures, r.shots
        else:
            p, pl, fails, shots = float(r["p"]), float(r["p_l"]), int(r["failures"]), int(r["shots"])
        if fails == 0 or pl <= 0:
            continue
        phat = fails / shots
        out.append((p, pl, fails / max(1e-12, 1 - phat)))
    return out


def fixed_point(a: float, b: float) -> float:
    if b <= 1:
        raise NoThresholdError("no finite threshold: exponent b must exceed 1")
    return float(a ** (-1.0 / (b - 1.0)))


def threshold(fit: FitResult, samples: int = 20_000, seed: int = 0) -> tuple[float, float]:
    """Fixed point ``a^(-1/(b-1))`` and its Monte Carlo standard deviation.

    Parameters are drawn from the fit covariance of ``(ln a, b)``; draws with
    ``b <= 1`` have no threshold and are discarded.
    """
    value = fixed_point(fit.a, fit.b)
    if not np.any(fit.log_cov):
        return value, 0.0
    rng = np.random.default_rng(seed)
    draws = rng.multivariate_normal([math.log(fit.a), fit.b], fit.log_cov, size=samples)
    ok = draws[:, 1] > 1
    with np.errstate(over="ignore"):
        pts = np.exp(-draws[ok, 0] / (draws[ok, 1] - 1))
        pts = pts[np.isfinite(pts)]
        sigma = float(np.std(pts)) if pts.size > 1 else float("nan")
    return value, sigma


def concatenation_level(fit: FitResult, p, level: int):
    """``P^(1) = a p^b`` and ``P^(l+1) = a (P^(l))^b``."""
    if level < 1:
        raise ValueError("levels start at 1")
    out = np.asarray(p, dtype=float)
    for _ in range(level):
        out = fit.a * out**fit.b
    return out


def code_parameters(level: int) -> tuple[int, int, int]:
    """``[[5^l, 1, 3^l]]`` for ``l`` levels of concatenation."""
    return 5**level, 1, 3**level


def concatenation_curves(fit: FitResult, levels: int = 3, p=None) -> list[dict]:
    """Sampled curves for levels ``1..levels`` (plot-ready)."""
    if levels < 1:
        raise ValueError("levels must be at least 1")
    if p is None:
        centre = fixed_point(fit.a, fit.b) if fit.b > 1 else 1e-3
        p = np.geomspace(centre / 100, min(1.0, centre * 100), 81)
    p = np.asarray(p, dtype=float)
    return [{"level": l, "code": list(code_parameters(l)), "p": p.tolist(),
             "p_l": concatenation_level(fit, p, l).tolist()} for l in range(1, levels + 1)]


def curve_crossing(fit: FitResult, l1: int, l2: int, lo: float, hi: float) -> float:
    """Crossing of two level curves inside ``[lo, hi]`` by bisection in log space."""
    def g(x):
        return math.log(concatenation_level(fit, x, l1)) - math.log(concatenation_level(fit, x, l2))

    a, b = math.log(lo), math.log(hi)
    ga = g(lo)
    if ga * g(hi) > 0:
        raise ValueError("curves do not cross in the bracket")
    for _ in range(200):
        mid = 0.5 * (a + b)
        gm = g(math.exp(mid))
        if gm == 0:
            return math.exp(mid)
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
    return math.exp(0.5 * (a + b))


def fit_report(fit: FitResult, levels: int = 3, samples: int = 20_000, seed: int = 0) -> dict:
    value, sigma = threshold(fit, samples, seed)
    return {
        "a": fit.a, "b": fit.b, "cov": fit.cov.tolist(), "threshold": value,
        "threshold_sigma": sigma, "level_curves": concatenation_curves(fit, levels),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True)


__all__ = [
    "AuditResult", "CSV_FIELDS", "ExperimentResult", "FitResult", "NoThresholdError", "RunConfig",
    "code_parameters", "concatenation_curves", "concatenation_level", "curve_crossing",
    "fit_points", "fit_power_law", "fit_report", "fixed_point", "p_m1", "per_cycle",
    "read_results_csv", "results_csv", "run_experiment", "single_fault_audit", "threshold",
    "wilson_interval",
]
