"""Nonbinary (Z_q) belief propagation on the detector Tanner graph.

Variables are Z_q-valued error lines (see :class:`~qec5.decoders.dem.LineModel`);
checks are detectors with the linear constraint ``sum_v H[d, v] x_v = s_d``
(mod q).  Check-node updates are cyclic convolutions, done with a length-q
FFT after permuting each incoming message by its coefficient.  The schedule is
flooding with damping on check-to-variable messages.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dem import LineModel

_EPS = 1e-300


@dataclass
class BPState:
    """Posteriors (one length-q vector per variable), hard decision and status."""

    posteriors: np.ndarray
    hard: np.ndarray
    iterations: int
    converged: bool


class BPDecoder:
    """Flooding sum-product decoder over Z_q.

    Parameters
    ----------
    lines : LineModel
    max_iters : int
    damping : float
        Weight of the previous check-to-variable message (0 = undamped).
    """

    def __init__(self, lines: LineModel, max_iters: int = 50, damping: float = 0.5):
        self.lines = lines
        self.q = q = lines.q
        self.max_iters = max_iters
        self.damping = damping
        H = lines.H % q
        self.n_checks, self.n_vars = H.shape
        chk, var = np.nonzero(H)
        order = np.lexsort((var, chk))
        self.e_chk = chk[order]
        self.e_var = var[order]
        self.e_coef = H[self.e_chk, self.e_var]
        n_e = len(self.e_chk)
        self.n_edges = n_e
        inv = np.array([0] + [pow(int(c), -1, q) for c in range(1, q)])
        y = np.arange(q)
        # message in "y = h x" space: m'(y) = m(h^-1 y)
        self.to_scaled = (inv[self.e_coef][:, None] * y[None, :]) % q
        # slot layout per check for prefix/suffix products
        deg = np.bincount(self.e_chk, minlength=self.n_checks)
        self.max_deg = int(deg.max()) if n_e else 0
        start = np.concatenate([[0], np.cumsum(deg)[:-1]]) if self.n_checks else np.zeros(0, int)
        self.slot = np.arange(n_e) - start[self.e_chk] if n_e else np.zeros(0, int)
        self.prior = np.clip(lines.prior, 1e-15, None)
        self.log_prior = np.log(self.prior)

    # -- helpers -------------------------------------------------------------
    def _satisfied(self, hard: np.ndarray, syndrome: np.ndarray) -> bool:
        return bool(np.all((self.lines.H @ hard - syndrome) % self.q == 0))

    def decode(self, syndrome) -> BPState:
        """Run BP for a detector syndrome vector (length ``n_checks``)."""
        q = self.q
        s = np.asarray(syndrome, dtype=np.int64).reshape(-1) % q
        hard0 = np.argmax(self.prior, axis=1) if self.n_vars else np.zeros(0, int)
        if self._satisfied(hard0, s):
            return BPState(self.prior.copy(), hard0, 0, True)
        if self.n_edges == 0:
            return BPState(self.prior.copy(), hard0, 0, False)
        e_chk, e_var = self.e_chk, self.e_var
        c2v = np.full((self.n_edges, q), 1.0 / q)
        post = self.prior.copy()
        hard = hard0
        y = np.arange(q)
        # target index for the check->var message: x -> s_d - h x
        tgt = (s[e_chk][:, None] - self.e_coef[:, None] * y[None, :]) % q
        for it in range(1, self.max_iters + 1):
            # variable -> check (log domain, excluding own message)
            log_c2v = np.log(np.maximum(c2v, _EPS))
            total = self.log_prior.copy()
            np.add.at(total, e_var, log_c2v)
            v2c = total[e_var] - log_c2v
            v2c -= v2c.max(axis=1, keepdims=True)
            v2c = np.exp(v2c)
            v2c /= v2c.sum(axis=1, keepdims=True)
            # check -> variable via FFT convolution with prefix/suffix products
            scaled = np.take_along_axis(v2c, self.to_scaled, axis=1)
            spec = np.fft.fft(scaled, axis=1)
            grid = np.ones((self.n_checks, self.max_deg + 2, q), dtype=complex)
            grid[e_chk, self.slot + 1] = spec
            prefix = np.cumprod(grid, axis=1)
            suffix = np.cumprod(grid[:, ::-1], axis=1)[:, ::-1]
            excl = prefix[e_chk, self.slot] * suffix[e_chk, self.slot + 2]
            dist = np.fft.ifft(excl, axis=1).real
            dist = np.clip(dist, 0.0, None)
            new = np.take_along_axis(dist, tgt, axis=1)
            norm = new.sum(axis=1, keepdims=True)
            new = np.where(norm > 0, new / np.where(norm > 0, norm, 1), 1.0 / q)
            c2v = self.damping * c2v + (1 - self.damping) * new
            # posteriors
            log_post = self.log_prior.copy()
            np.add.at(log_post, e_var, np.log(np.maximum(c2v, _EPS)))
            log_post -= log_post.max(axis=1, keepdims=True)
            post = np.exp(log_post)
            post /= post.sum(axis=1, keepdims=True)
            hard = np.argmax(post, axis=1)
            if self._satisfied(hard, s):
                return BPState(post, hard, it, True)
        return BPState(post, hard, self.max_iters, False)

    def estimate(self, state: BPState) -> np.ndarray:
        """Data-error estimate ``sum_v hard_v * effect_v``."""
        return (state.hard @ self.lines.effect) % self.q
