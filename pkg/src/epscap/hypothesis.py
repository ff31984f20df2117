"""Exact Neyman-Pearson tradeoffs for finite binary hypothesis tests.

A test chooses H0 (``Z ~ P``) or H1 (``Z ~ Q``). Its type-I error is the
P-mass it sends to H1 and its type-II error is the Q-mass it keeps on H0.
Optimal randomized tests accept outcomes in decreasing order of ``P/Q`` and
randomize on a single boundary outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Distribution


@dataclass(frozen=True)
class HypTestPair:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = self.p.probs if isinstance(self.p, Distribution) else Distribution(self.p).probs
        q = self.q.probs if isinstance(self.q, Distribution) else Distribution(self.q).probs
        if p.shape != q.shape:
            raise ValueError(f"P and Q live on different sets: {p.shape} vs {q.shape}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def size(self) -> int:
        return self.p.size

    def ratio_order(self) -> np.ndarray:
        """Outcome indices by decreasing likelihood ratio ``P/Q`` (``Q = 0`` first)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.where(self.q > 0, self.p / np.where(self.q > 0, self.q, 1.0), np.inf)
        lr = np.where((self.p == 0) & (self.q == 0), 0.0, lr)
        return np.argsort(-lr, kind="stable")


def _sorted_masses(t: HypTestPair):
    order = t.ratio_order()
    p, q = t.p[order], t.q[order]
    zero = np.zeros(1)
    return p, q, np.concatenate([zero, np.cumsum(p)]), np.concatenate([zero, np.cumsum(q)])


def np_beta(t: HypTestPair, alpha: float) -> float:
    """Minimal type-II error over randomized tests with type-I error at most ``alpha``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    need = 1.0 - alpha  # P-mass that must stay on H0
    if need <= 0.0:
        return 0.0
    p, q, cum_p, cum_q = _sorted_masses(t)
    k = int(np.searchsorted(cum_p[1:], need, side="left"))
    if k >= p.size:
        # rounding left a sliver of ``need`` unmet; keep every P-carrying outcome
        return float(min(1.0, q[p > 0].sum()))
    return float(min(1.0, cum_q[k] + q[k] * (need - cum_p[k]) / p[k]))


def np_alpha(t: HypTestPair, beta: float) -> float:
    """Minimal type-I error over randomized tests with type-II error at most ``beta``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    p, q, cum_p, cum_q = _sorted_masses(t)
    k = int(np.searchsorted(cum_q[1:], beta, side="right"))
    kept = cum_p[k] if k < p.size else cum_p[-1]
    if k < p.size and q[k] > 0:
        kept += p[k] * (beta - cum_q[k]) / q[k]
    return float(max(0.0, 1.0 - kept))


def tradeoff_curve(t: HypTestPair):
    """Vertices ``(alpha, beta)`` of the optimal tradeoff, alpha decreasing."""
    order = t.ratio_order()
    p, q = t.p[order], t.q[order]
    alphas = 1.0 - np.concatenate([[0.0], np.cumsum(p)])
    betas = np.concatenate([[0.0], np.cumsum(q)])
    return np.clip(alphas, 0.0, 1.0), np.clip(betas, 0.0, 1.0)
