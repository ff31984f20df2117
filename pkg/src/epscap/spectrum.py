"""Exact laws of sums of information densities (information spectra).

A :class:`Spectrum` is a finite list of ``(value, prob)`` atoms, sorted by
value, with values in bits. Atoms closer than ``MERGE_TOL`` are merged
(probabilities summed, value replaced by the probability-weighted mean, so
means are preserved exactly).

Laws of long sums are built without brute-force convolution where possible:
an i.i.d. sum of a ``k``-atom law is enumerated over count vectors with
multinomial weights, and a sum of independent parts (:class:`SumSpectrum`)
answers CDF queries lazily by materializing all but its last part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .channel import LN2, _matrix, _probs, info_density_table

MERGE_TOL = 1e-9
ATOM_CAP = 2_000_000
# largest outer-sum table formed during a convolution
OUTER_CAP = 40_000_000


class AtomCapError(ValueError):
    """A spectrum would exceed the configured atom cap."""


def _slack(t) -> float:
    return 1e-12 * max(1.0, abs(float(t)))


def merge_atoms(values, probs, merge_tol: float = MERGE_TOL):
    """Sort atoms and merge runs whose consecutive gaps are at most ``merge_tol``."""
    v = np.asarray(values, dtype=np.float64).ravel()
    p = np.asarray(probs, dtype=np.float64).ravel()
    keep = p > 0
    v, p = v[keep], p[keep]
    order = np.argsort(v, kind="stable")
    v, p = v[order], p[order]
    if v.size <= 1:
        return v, p
    new_group = np.concatenate([[True], np.diff(v) > merge_tol])
    gid = np.cumsum(new_group) - 1
    mass = np.bincount(gid, weights=p)
    moment = np.bincount(gid, weights=p * v)
    merged_v = moment / mass
    # a singleton group keeps its exact value
    first = np.flatnonzero(new_group)
    sizes = np.diff(np.append(first, v.size))
    merged_v[sizes == 1] = v[first[sizes == 1]]
    return merged_v, mass


@dataclass(frozen=True)
class Spectrum:
    """Finite-support law of a (possibly unnormalized) information density."""

    values: np.ndarray
    probs: np.ndarray
    merge_tol: float = field(default=MERGE_TOL, compare=False)

    def __post_init__(self):
        v, p = merge_atoms(self.values, self.probs, self.merge_tol)
        if v.size == 0:
            raise ValueError("spectrum needs at least one atom of positive mass")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum values must be finite")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"atom probabilities sum to {p.sum()!r}")
        v.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @property
    def atoms(self):
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def __len__(self) -> int:
        return self.values.size

    @cached_property
    def _cum(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.probs)])

    @property
    def mean(self) -> float:
        return float(self.probs @ self.values)

    @property
    def variance(self) -> float:
        return float(self.probs @ (self.values - self.mean) ** 2)

    @property
    def min_value(self) -> float:
        return float(self.values[0])

    @property
    def max_value(self) -> float:
        return float(self.values[-1])

    def cdf(self, threshold, strict: bool = False):
        """``Pr{value <= threshold}`` (``<`` with ``strict``); vectorized over thresholds."""
        t = np.asarray(threshold, dtype=np.float64)
        slack = 1e-12 * np.maximum(1.0, np.abs(t))
        if strict:
            idx = np.searchsorted(self.values, t - slack, side="left")
        else:
            idx = np.searchsorted(self.values, t + slack, side="right")
        out = np.minimum(self._cum[idx], 1.0)
        return float(out) if out.ndim == 0 else out

    def shift(self, offset: float) -> "Spectrum":
        return Spectrum(self.values + offset, self.probs, self.merge_tol)

    def scale(self, factor: float) -> "Spectrum":
        return Spectrum(self.values * factor, self.probs, self.merge_tol)


def spectrum_cdf(s, threshold: float) -> float:
    """``Pr{value <= threshold}`` for a spectrum (closed inequality)."""
    return s.cdf(threshold)


def convolve(a: Spectrum, b: Spectrum, merge_tol: float = MERGE_TOL, cap: int = ATOM_CAP) -> Spectrum:
    """Law of the sum of two independent spectra."""
    if len(a) * len(b) > OUTER_CAP:
        raise AtomCapError(
            f"convolution of {len(a)} x {len(b)} atoms exceeds {OUTER_CAP}; "
            "coarsen merge_tol or reduce the blocklength"
        )
    v = (a.values[:, None] + b.values[None, :]).ravel()
    p = (a.probs[:, None] * b.probs[None, :]).ravel()
    out = Spectrum(v, p, merge_tol)
    if len(out) > cap:
        raise AtomCapError(f"{len(out)} atoms exceed the cap of {cap}; coarsen merge_tol")
    return out


def _compositions(n: int, k: int) -> np.ndarray:
    """All count vectors of length ``k`` summing to ``n``, shape ``(M, k)``."""
    if k == 1:
        return np.array([[n]])
    blocks = []
    for first in range(n + 1):
        rest = _compositions(n - first, k - 1)
        blocks.append(np.hstack([np.full((rest.shape[0], 1), first), rest]))
    return np.vstack(blocks)


def iid_sum(law: Spectrum, n: int, merge_tol: float = MERGE_TOL, cap: int = ATOM_CAP) -> Spectrum:
    """Law of the sum of ``n`` i.i.d. copies of ``law``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    k = len(law)
    if k == 1:
        return Spectrum([n * law.values[0]], [1.0], merge_tol)
    if math.comb(n + k - 1, k - 1) <= cap:
        counts = _compositions(n, k) if k > 2 else np.column_stack([np.arange(n + 1), n - np.arange(n + 1)])
        logq = np.log(law.probs)
        logpmf = gammaln(n + 1) - gammaln(counts + 1).sum(axis=1) + counts @ logq
        out = Spectrum(counts @ law.values, np.exp(logpmf - np.logaddexp.reduce(logpmf)), merge_tol)
        if len(out) > cap:
            raise AtomCapError(f"{len(out)} atoms exceed the cap of {cap}; coarsen merge_tol")
        return out
    # binary powering with merging
    result, base, m = None, law, n
    while m:
        if m & 1:
            result = base if result is None else convolve(result, base, merge_tol, cap)
        m >>= 1
        if m:
            base = convolve(base, base, merge_tol, cap)
    return result


def single_letter_spectrum(p, w, merge_tol: float = MERGE_TOL) -> Spectrum:
    t = info_density_table(p, w)
    return Spectrum(t.values, t.probs, merge_tol)


def spectrum_n(p, w, n: int, merge_tol: float = MERGE_TOL, cap: int = ATOM_CAP) -> Spectrum:
    """Exact law of ``sum_i log W(Y_i|X_i)/(PW)(Y_i)`` under i.i.d. input ``p`` (bits)."""
    return iid_sum(single_letter_spectrum(p, w, merge_tol), n, merge_tol, cap)


class SumSpectrum:
    """Sum of independent spectra, queried lazily.

    All parts but the last are convolved into a materialized head; CDF
    queries then cost one ``searchsorted`` of the head against the tail.
    """

    def __init__(self, parts, merge_tol: float = MERGE_TOL, cap: int = ATOM_CAP):
        parts = list(parts)
        if not parts:
            raise ValueError("need at least one part")
        parts.sort(key=len)
        self.parts = parts
        self.merge_tol = merge_tol
        self.cap = cap
        head = Spectrum([0.0], [1.0], merge_tol)
        for part in parts[:-1]:
            head = convolve(head, part, merge_tol, cap)
        self.head = head
        self.tail = parts[-1]

    @property
    def mean(self) -> float:
        return sum(p.mean for p in self.parts)

    @property
    def variance(self) -> float:
        return sum(p.variance for p in self.parts)

    @property
    def min_value(self) -> float:
        return sum(p.min_value for p in self.parts)

    @property
    def max_value(self) -> float:
        return sum(p.max_value for p in self.parts)

    def cdf(self, threshold: float, strict: bool = False) -> float:
        t = float(threshold)
        return float(self.head.probs @ self.tail.cdf(t - self.head.values, strict=strict))

    def materialize(self) -> Spectrum:
        return convolve(self.head, self.tail, self.merge_tol, self.cap)


def type_spectrum(counts, w, q=None, merge_tol: float = MERGE_TOL, cap: int = ATOM_CAP) -> SumSpectrum:
    """Law of ``log W^n(Y|x)/Q^n(Y)`` for a fixed input sequence of composition ``counts``.

    ``Q`` defaults to the output law ``P_n W`` induced by the type itself.
    """
    counts = np.asarray(counts, dtype=np.int64)
    w = _matrix(w)
    n = int(counts.sum())
    if q is None:
        q = (counts / n) @ w
    q = _probs(q)
    parts = []
    for x in np.flatnonzero(counts):
        row = w[x]
        ys = np.flatnonzero(row > 0)
        if np.any(q[ys] <= 0):
            raise ValueError("auxiliary output law misses part of the channel's support")
        law = Spectrum(np.log(row[ys] / q[ys]) / LN2, row[ys], merge_tol)
        parts.append(iid_sum(law, int(counts[x]), merge_tol, cap))
    return SumSpectrum(parts, merge_tol, cap)


def llr_spectrum(p, q, merge_tol: float = MERGE_TOL) -> Spectrum:
    """Law of ``log2 P(Z)/Q(Z)`` under ``Z ~ P``; requires ``P << Q``."""
    p, q = _probs(p), _probs(q)
    sup = p > 0
    if np.any(q[sup] <= 0):
        raise ValueError("P is not absolutely continuous with respect to Q")
    return Spectrum(np.log(p[sup] / q[sup]) / LN2, p[sup], merge_tol)


def d_s(spectra, eps: float) -> float:
    """``sup {R : sum_l w_l Pr_l{value <= R} <= eps}`` for weighted spectra.

    ``spectra`` is a list of ``(weight, Spectrum)``. The mixture CDF is a
    right-continuous step function, so the supremum is the first atom at
    which it strictly exceeds ``eps``; it is not attained (the feasible set
    is the open half-line below that atom).
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    weights = np.array([w for w, _ in spectra], dtype=np.float64)
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("spectrum weights must sum to 1")
    v = np.concatenate([s.values for _, s in spectra])
    p = np.concatenate([w * s.probs for w, s in spectra])
    order = np.argsort(v, kind="stable")
    v, p = v[order], p[order]
    cum = np.cumsum(p)
    # cumulative mass at a value includes every atom tied with it
    group_end = np.searchsorted(v, v + 1e-12 * np.maximum(1.0, np.abs(v)), side="right") - 1
    exceeds = cum[group_end] > eps
    if not exceeds.any():
        return float(v[-1])
    return float(v[np.argmax(exceeds)])


def d_s_lazy(spectra, eps: float, rel_tol: float = 1e-12, abs_tol: float = 1e-9) -> float:
    """Upper bound on :func:`d_s` for spectra that only offer ``cdf`` queries.

    Bisects on ``R`` keeping ``CDF(lo) <= eps < CDF(hi)`` and returns ``hi``
    plus the CDF slack, so the result never undershoots the true supremum and
    exceeds it by at most ``abs_tol``.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")

    def mix(r):
        return sum(w * s.cdf(r) for w, s in spectra)

    lo = min(s.min_value for _, s in spectra) - 1.0
    hi = max(s.max_value for _, s in spectra)
    while hi - lo > max(abs_tol, rel_tol * abs(hi)):
        mid = 0.5 * (lo + hi)
        if mix(mid) <= eps:
            lo = mid
        else:
            hi = mid
    return hi + _slack(hi)
