"""Finite-blocklength achievability and converse bounds for mixed channels.

All quantities are in bits; the random-coding slack is ``2^(-n gamma)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import Distribution, MixedChannel, _matrix
from .hypothesis import HypTestPair, np_alpha
from .spectrum import (
    ATOM_CAP,
    MERGE_TOL,
    AtomCapError,
    Spectrum,
    d_s_lazy,
    spectrum_n,
    type_spectrum,
)

TYPE_CAP = 200_000
PRODUCT_CAP = 4_000_000
BISECT_ITERS = 60


class TypeCapError(ValueError):
    """Type enumeration would exceed the configured cap."""


def _law(p) -> np.ndarray:
    return p.probs if isinstance(p, Distribution) else Distribution(p).probs


@dataclass(frozen=True)
class FeinsteinBound:
    value: float  # clipped to [0, 1]
    raw: float
    gamma: float


def _component_spectra(ch: MixedChannel, p, n: int, merge_tol: float, cap: int):
    return [spectrum_n(p, c.matrix, n, merge_tol, cap) for c in ch.channels]


def _feinstein_raw(spectra, weights, n: int, log2_m: float, gamma, strict: bool = False):
    """Raw bound for one or many ``gamma`` values (vectorized)."""
    gamma = np.asarray(gamma, dtype=np.float64)
    total = np.exp2(-n * gamma)
    for w, s in zip(weights, spectra):
        thr = log2_m + n * gamma + np.log2(1.0 / w)
        total = total + w * s.cdf(thr, strict=strict)
    return total


def feinstein_error_bound(ch: MixedChannel, p, n: int, log2_M: float, gamma: float,
                          merge_tol: float = MERGE_TOL, cap: int = ATOM_CAP) -> FeinsteinBound:
    """Random-coding upper bound on the average error of the best size-``M`` code.

    ``sum_l w_l Pr{i_l <= log2 M + n gamma + log2(1/w_l)} + 2^(-n gamma)``
    with ``i_l`` the unnormalized information density under i.i.d. ``p``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    spectra = _component_spectra(ch, _law(p), n, merge_tol, cap)
    raw = float(_feinstein_raw(spectra, ch.weights, n, log2_M, gamma))
    return FeinsteinBound(min(1.0, max(0.0, raw)), raw, float(gamma))


def _best_gamma(spectra, weights, n: int, log2_m: float):
    """Exact minimum of the bound over ``gamma in (0, 1]``.

    Between jumps the bound decreases in ``gamma``, so the infimum is reached
    as ``gamma`` rises to a jump point (where an atom enters the closed
    inequality) or at ``gamma = 1``. The left limit at a jump is the bound with
    a strict inequality, and it is achieved by codes built for ``gamma`` just
    below the jump.
    """
    cands = [np.array([1.0])]
    for w, s in zip(weights, spectra):
        g = (s.values - log2_m - math.log2(1.0 / w)) / n
        cands.append(g[(g > 0) & (g <= 1.0)])
    g = np.unique(np.concatenate(cands))
    left = _feinstein_raw(spectra, weights, n, log2_m, g, strict=True)
    closed_one = float(_feinstein_raw(spectra, weights, n, log2_m, 1.0))
    i = int(np.argmin(left))
    best, gamma = float(left[i]), float(g[i])
    if closed_one < best:
        best, gamma = closed_one, 1.0
    return best, gamma


@dataclass(frozen=True)
class FeinsteinRate:
    rate: float
    log2_M: float
    gamma: float
    bound: float
    feasible: bool  # False when even M = 1 misses the target


def feinstein_max_rate(ch: MixedChannel, p, n: int, eps: float, merge_tol: float = MERGE_TOL,
                       cap: int = ATOM_CAP, iters: int = BISECT_ITERS, detail: bool = False):
    """Largest rate whose Feinstein bound, optimized over ``gamma``, is at most ``eps``."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    spectra = _component_spectra(ch, _law(p), n, merge_tol, cap)
    weights = ch.weights

    def bound(log2_m):
        return _best_gamma(spectra, weights, n, log2_m)

    b0, g0 = bound(0.0)
    if b0 > eps:
        out = FeinsteinRate(0.0, 0.0, g0, b0, False)
        return out if detail else 0.0
    lo, hi = 0.0, max(s.max_value for s in spectra) + 1.0
    lo_b, lo_g = b0, g0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        b, g = bound(mid)
        if b <= eps:
            lo, lo_b, lo_g = mid, b, g
        else:
            hi = mid
    out = FeinsteinRate(lo / n, lo, lo_g, lo_b, True)
    return out if detail else out.rate


def enumerate_types(n: int, k: int, cap: int = TYPE_CAP) -> np.ndarray:
    """All compositions of ``n`` into ``k`` nonnegative parts, shape ``(|T_n|, k)``."""
    count = math.comb(n + k - 1, k - 1)
    if count > cap:
        raise TypeCapError(f"{count} input types exceed the cap of {cap}")
    rows = [
        np.diff(np.concatenate([[-1], np.array(bars), [n + k - 1]])) - 1
        for bars in itertools.combinations(range(n + k - 1), k - 1)
    ]
    return np.array(rows, dtype=np.int64).reshape(count, k)


@dataclass(frozen=True)
class ConverseRate:
    rate: float
    worst_type: tuple
    d_s_bits: float
    slack_bits: float
    n_types: int


def metaconverse_rate_bound(ch: MixedChannel, n: int, eps_n: float, delta: float | None = None,
                            merge_tol: float = MERGE_TOL, cap: int = ATOM_CAP,
                            type_cap: int = TYPE_CAP, executor=None, detail: bool = False):
    """Upper bound on ``(1/n) log2 M`` for any code with average error at most ``eps_n``.

    For each input type the spectra are taken against the product output law
    ``(P_n W_l)^n``; the bound is the largest per-type ``d_s`` at level
    ``eps_n + delta`` plus the slack ``log2(|T_n| / delta)``, all over ``n``.
    ``delta`` defaults to ``1/n``, or ``(1 - eps_n)/2`` when ``eps_n + 1/n >= 1``.
    """
    if delta is None:
        # 1/n unless that leaves no room below 1 (tiny n)
        delta = 1.0 / n if eps_n + 1.0 / n < 1.0 else 0.5 * (1.0 - eps_n)
    delta = float(delta)
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    if not 0.0 <= eps_n or eps_n + delta >= 1.0:
        raise ValueError(f"need 0 <= eps_n and eps_n + delta < 1, got {eps_n} + {delta}")
    types = enumerate_types(n, ch.n_inputs, type_cap)
    level = eps_n + delta

    def per_type(counts):
        spectra = [(w, type_spectrum(counts, c.matrix, None, merge_tol, cap))
                   for w, c in zip(ch.weights, ch.channels)]
        return d_s_lazy(spectra, level)

    mapper = executor.map if executor is not None else map
    values = np.array(list(mapper(per_type, types)))
    i = int(np.argmax(values))
    slack = math.log2(types.shape[0] / delta)
    out = ConverseRate((values[i] + slack) / n, tuple(types[i].tolist()), float(values[i]),
                       slack, types.shape[0])
    return out if detail else out.rate


def _lr_pair(spec: Spectrum) -> HypTestPair:
    """Two-point-per-atom test equivalent to P vs Q given the law of ``log2 P/Q`` under P.

    Q puts mass ``prob * 2^(-value)`` on each atom and the rest on an outcome
    that P never produces.
    """
    q = spec.probs * np.exp2(-spec.values)
    rest = max(0.0, 1.0 - q.sum())
    p = np.append(spec.probs, 0.0)
    q = np.append(q, rest)
    return HypTestPair(p, q / q.sum())


def _alpha_quantile_bound(s, beta: float, grid: int = 4001) -> float:
    """``alpha >= max_R Pr{LLR <= R} - 2^R beta`` for spectra offering only CDF queries."""
    rs = np.linspace(s.min_value - 1.0, s.max_value, grid)
    best = 0.0
    for r in rs:
        best = max(best, s.cdf(r) - 2.0 ** (r) * beta)
    return best


def _product_pair(input_law: np.ndarray, w: np.ndarray, n: int) -> HypTestPair:
    """``P_X W^n`` against ``P_X x (P_X W^n)_Y`` on the full product space."""
    nx, ny = w.shape
    if (nx * ny) ** n > PRODUCT_CAP:
        raise AtomCapError(f"product space of size {(nx * ny) ** n} exceeds {PRODUCT_CAP}")
    wn = np.ones((1, 1))
    for _ in range(n):
        wn = np.kron(wn, w)
    joint = input_law[:, None] * wn
    q = input_law[:, None] * joint.sum(axis=0)[None, :]
    return HypTestPair(joint.ravel(), q.ravel())


def metaconverse_error_lower_bound(ch: MixedChannel, n: int, log2_M: float, type_counts=None,
                                   input_law=None, merge_tol: float = MERGE_TOL,
                                   cap: int = ATOM_CAP) -> float:
    """Lower bound ``sum_l w_l alpha_{1/M}(P W_l^n, P x Q_l)`` on any code's average error.

    The codebook law is either uniform over the type class of ``type_counts``
    (with ``Q_l = (P_n W_l)^n``) or an explicit ``input_law`` over ``X^n`` in
    lexicographic order (with ``Q_l`` the induced output law), evaluated on
    the product space.
    """
    if (type_counts is None) == (input_law is None):
        raise ValueError("give exactly one of type_counts and input_law")
    beta = min(1.0, 2.0 ** (-log2_M))
    total = 0.0
    for w, c in zip(ch.weights, ch.channels):
        if input_law is not None:
            law = np.asarray(input_law, dtype=np.float64)
            if law.size != ch.n_inputs ** n:
                raise ValueError(f"input law must have {ch.n_inputs ** n} entries")
            alpha = np_alpha(_product_pair(law / law.sum(), _matrix(c.matrix), n), beta)
        else:
            counts = np.asarray(type_counts, dtype=np.int64)
            if counts.sum() != n or counts.size != ch.n_inputs:
                raise ValueError("type counts must have one entry per input and sum to n")
            lazy = type_spectrum(counts, c.matrix, None, merge_tol, cap)
            try:
                alpha = np_alpha(_lr_pair(lazy.materialize()), beta)
            except AtomCapError:
                alpha = _alpha_quantile_bound(lazy, beta)
        total += w * alpha
    return float(total)


def band_mass(s, center: float, halfwidth: float) -> float:
    """``Pr{|value - center| <= halfwidth}`` for a spectrum."""
    return float(s.cdf(center + halfwidth) - s.cdf(center - halfwidth, strict=True))


def chebyshev_floor(variance: float, n: int, gamma: float) -> float:
    """``1 - A/n`` with ``A = variance / gamma^2`` for the normalized sum."""
    return 1.0 - variance / (gamma * gamma) / n

