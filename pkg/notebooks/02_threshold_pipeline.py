"""
From Monte Carlo points to a threshold
======================================

Small memory experiments, a power-law fit, the fixed point and the
concatenation curves.  Shot counts are kept low so that the script finishes in
about a minute; the numbers are therefore rough.
Run with ``python notebooks/02_threshold_pipeline.py``.
"""

import numpy as np

from qec5.experiments import (
    FitResult, RunConfig, concatenation_level, curve_crossing, fit_points, fit_power_law,
    fixed_point, p_m1, run_experiment, threshold,
)
from qec5.noise import CIRCUIT, SDEP

# Standard depolarizing noise against the two-error reference curve
for q in (2, 3):
    res = run_experiment(RunConfig(q, 0.05, model=SDEP, decoder="bm", flagged=False,
                                   shots=20_000, seed=1))
    print(f"q={q}  p_L={res.p_l:.4f}  CI=({res.ci[0]:.4f}, {res.ci[1]:.4f})  "
          f"P_M1={p_m1(0.05):.4f}")

# Circuit-level noise with the flag qudit, three physical error rates
results = [run_experiment(RunConfig(2, p, model=CIRCUIT, decoder="bm", shots=20_000, seed=1))
           for p in (1e-3, 3e-3, 1e-2)]
for r in results:
    print(f"p={r.config.p:.0e}  failures={r.failures}  p_L={r.p_l:.3e}")

fit = fit_power_law(fit_points(results))
value, sigma = threshold(fit)
print(f"a={fit.a:.1f}  b={fit.b:.3f}  threshold={value:.2e} +- {sigma:.1e}")

# Published fit parameters for comparison (q = 2 with flag)
published = FitResult(766, 1.873, np.zeros((2, 2)))
print("published fixed point", fixed_point(published.a, published.b))

# Concatenation: all level curves pass through the fixed point
pstar = fixed_point(published.a, published.b)
print([curve_crossing(published, 1, l, pstar / 10, pstar * 10) for l in (2, 3)])
for p in (pstar / 4, pstar, 2 * pstar):
    print(f"p={p:.2e}", [f"{concatenation_level(published, p, l):.2e}" for l in (1, 2, 3)])
