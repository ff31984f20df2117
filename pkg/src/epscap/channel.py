"""Distributions, discrete memoryless channels and finite mixtures of them.

All public information quantities are in bits. Internally everything is
computed with natural logarithms and converted once on the way out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LN2 = np.log(2.0)
SUM_TOL = 1e-12
# sums this close to one are left untouched so that renormalization is idempotent
EXACT_TOL = 1e-14


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Distribution:
    """Probability vector on a finite alphabet.

    Construction normalizes sums that are within ``tol`` of one and rejects
    anything else, so every instance satisfies the simplex invariants.
    """

    probs: np.ndarray
    tol: float = field(default=SUM_TOL, repr=False, compare=False)

    def __post_init__(self):
        p = _as_vector(self.probs, "probs")
        if np.any(p < 0):
            raise ValueError(f"negative probability {p.min()!r}")
        total = p.sum()
        if abs(total - 1.0) > self.tol:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if abs(total - 1.0) > EXACT_TOL:
            p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, size: int) -> "Distribution":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point(cls, size: int, index: int) -> "Distribution":
        p = np.zeros(size)
        p[index] = 1.0
        return cls(p)

    def __len__(self) -> int:
        return self.probs.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class Dmc:
    """Row-stochastic transition matrix ``W[x, y] = W(y|x)``."""

    matrix: np.ndarray
    tol: float = field(default=SUM_TOL, repr=False, compare=False)

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=np.float64)
        if w.ndim != 2 or 0 in w.shape:
            raise ValueError(f"channel matrix must be 2-D and non-empty, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("channel matrix entries must be finite and non-negative")
        rows = w.sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > self.tol)
        if bad.size:
            raise ValueError(f"row {bad[0]} sums to {rows[bad[0]]!r}, not 1")
        w = w / np.where(np.abs(rows - 1.0) > EXACT_TOL, rows, 1.0)[:, None]
        w.setflags(write=False)
        object.__setattr__(self, "matrix", w)

    @property
    def n_inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def bsc(cls, crossover: float) -> "Dmc":
        q = float(crossover)
        return cls([[1.0 - q, q], [q, 1.0 - q]])

    @classmethod
    def z_channel(cls, flip: float) -> "Dmc":
        """Input 0 is noiseless; input 1 flips to output 0 with prob ``flip``."""
        return cls([[1.0, 0.0], [flip, 1.0 - flip]])

    @classmethod
    def identity(cls, size: int) -> "Dmc":
        return cls(np.eye(size))

    def relabel_inputs(self, order: Sequence[int]) -> "Dmc":
        return Dmc(self.matrix[list(order)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dmc):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash(self.matrix.tobytes())


@dataclass(frozen=True)
class MixedChannel:
    """Finite mixture ``sum_l w_l W_l^n`` of memoryless components.

    Countable mixtures must be truncated by the caller; the weights handed in
    here have to sum to one within ``SUM_TOL``.
    """

    weights: np.ndarray
    channels: tuple
    cost: np.ndarray | None = None
    labels: tuple | None = None

    def __post_init__(self):
        w = _as_vector(self.weights, "weights")
        chans = tuple(c if isinstance(c, Dmc) else Dmc(c) for c in self.channels)
        if len(chans) != w.size:
            raise ValueError(f"{w.size} weights for {len(chans)} components")
        if np.any(w <= 0):
            raise ValueError("mixture weights must be strictly positive")
        total = w.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"mixture weights sum to {total!r}, not 1")
        shape = chans[0].matrix.shape
        for i, c in enumerate(chans):
            if c.matrix.shape != shape:
                raise ValueError(
                    f"component {i} has shape {c.matrix.shape}, expected {shape}"
                )
        if abs(total - 1.0) > EXACT_TOL:
            w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "channels", chans)
        if self.cost is not None:
            c = _as_vector(self.cost, "cost")
            if c.size != shape[0]:
                raise ValueError(f"cost vector has {c.size} entries for {shape[0]} inputs")
            c.setflags(write=False)
            object.__setattr__(self, "cost", c)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != len(chans):
                raise ValueError("one label per component is required")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_pairs(cls, pairs: Iterable, cost=None, labels=None) -> "MixedChannel":
        pairs = list(pairs)
        return cls(
            np.array([w for w, _ in pairs], dtype=np.float64),
            tuple(c for _, c in pairs),
            cost=cost,
            labels=labels,
        )

    @property
    def n_components(self) -> int:
        return len(self.channels)

    @property
    def n_inputs(self) -> int:
        return self.channels[0].n_inputs

    @property
    def n_outputs(self) -> int:
        return self.channels[0].n_outputs

    @property
    def matrices(self) -> np.ndarray:
        """Stacked component matrices, shape ``(L, |X|, |Y|)``."""
        return np.stack([c.matrix for c in self.channels])

    def with_cost(self, cost) -> "MixedChannel":
        return MixedChannel(self.weights, self.channels, cost=cost, labels=self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MixedChannel):
            return NotImplemented
        same_cost = (self.cost is None and other.cost is None) or (
            self.cost is not None
            and other.cost is not None
            and np.array_equal(self.cost, other.cost)
        )
        return (
            np.array_equal(self.weights, other.weights)
            and self.channels == other.channels
            and same_cost
            and self.labels == other.labels
        )

    __hash__ = None


def _probs(p) -> np.ndarray:
    return p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=np.float64)


def _matrix(w) -> np.ndarray:
    return w.matrix if isinstance(w, Dmc) else np.asarray(w, dtype=np.float64)


def _check_dims(p: np.ndarray, w: np.ndarray):
    if p.shape[-1] != w.shape[-2]:
        raise ValueError(f"input law has {p.shape[-1]} symbols, channel has {w.shape[-2]} inputs")


def _xlogy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``x * log(y)`` with the convention ``0 * log(0) = 0``."""
    out = np.zeros(np.broadcast(x, y).shape)
    x_b, y_b = np.broadcast_arrays(x, y)
    mask = x_b > 0
    out[mask] = x_b[mask] * np.log(y_b[mask])
    return out


def _neg_entropy_rows(w: np.ndarray) -> np.ndarray:
    """``sum_y W(y|x) ln W(y|x)`` per input symbol (nats)."""
    return _xlogy(w, w).sum(axis=-1)


def divergences(p, w) -> np.ndarray:
    """``D(W(.|x) || PW)`` for every input ``x``, in nats.

    Entries are ``+inf`` where ``W(.|x)`` puts mass on an output that the
    output law ``PW`` does not reach.
    """
    p, w = _probs(p), _matrix(w)
    q = p @ w
    pos = w > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pos, w * np.log(np.where(pos, w, 1.0) / q), 0.0)
    out = terms.sum(axis=1)
    out[np.any(pos & (q <= 0), axis=1)] = np.inf
    return out


def mutual_information_nats(p, w) -> np.ndarray:
    """Vectorized ``I(P; W)`` in nats.

    ``p`` may be a batch of laws with shape ``(..., |X|)``; ``w`` may be a
    stack ``(L, |X|, |Y|)``. The result broadcasts as ``(..., L)`` for a
    stack and ``(...)`` for a single matrix.
    """
    p, w = _probs(p), _matrix(w)
    _check_dims(p, w)
    if w.ndim == 2:
        q = p @ w
        cond = p @ _neg_entropy_rows(w)
        out = cond - _xlogy(q, q).sum(axis=-1)
    else:
        q = np.einsum("...x,lxy->...ly", p, w)
        cond = p @ _neg_entropy_rows(w).T
        out = cond - _xlogy(q, q).sum(axis=-1)
    return np.maximum(out, 0.0)


def mutual_information(p, w) -> float:
    """Mutual information ``I(X; Y)`` in bits for input law ``p`` over channel ``w``."""
    return float(mutual_information_nats(p, w)) / LN2


def component_informations(p, ch: MixedChannel) -> np.ndarray:
    """``I_P(X; Y_l)`` in bits for every component of ``ch``."""
    return mutual_information_nats(_probs(p), ch.matrices) / LN2


@dataclass(frozen=True)
class ComponentCapacity:
    value: float
    input_law: Distribution
    upper_bound: float
    iterations: int
    converged: bool

    @property
    def gap(self) -> float:
        return self.upper_bound - self.value


def component_capacity(w, tol: float = 1e-9, max_iter: int = 100_000) -> ComponentCapacity:
    """Capacity of a single DMC by Blahut-Arimoto.

    Iterates until the certified bracket
    ``I(P) <= C <= max_x D(W(.|x) || PW)`` is narrower than ``tol`` bits.
    On hitting ``max_iter`` the best iterate is returned with
    ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = _matrix(w)
    n_in = w.shape[0]
    p = np.full(n_in, 1.0 / n_in)
    best_lo, best_p, best_hi = -np.inf, p, np.inf
    for it in range(1, max_iter + 1):
        d = divergences(p, w)
        lo = float(p @ np.where(p > 0, d, 0.0)) / LN2
        hi = float(d.max()) / LN2
        if lo > best_lo:
            best_lo, best_p = lo, p
        best_hi = min(best_hi, hi)
        if best_hi - best_lo < tol:
            return ComponentCapacity(max(best_lo, 0.0), Distribution(best_p), best_hi, it, True)
        # BA update; d is finite on the support of p since p starts interior
        step = np.where(p > 0, np.exp(np.minimum(d - d[p > 0].max(), 0.0)), 0.0)
        p = p * step
        p = p / p.sum()
    return ComponentCapacity(max(best_lo, 0.0), Distribution(best_p), best_hi, max_iter, False)


@dataclass(frozen=True)
class InfoDensityTable:
    """Single-letter information density ``log W(y|x)/(PW)(y)`` over its support."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    probs: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.probs @ self.values)

    @property
    def variance(self) -> float:
        return float(self.probs @ (self.values - self.mean) ** 2)

    def conditional_variance(self, p) -> float:
        """``E_P[Var(i(X;Y) | X)]``, the dispersion-type quantity."""
        p = _probs(p)
        total = 0.0
        for x in np.unique(self.x):
            m = self.x == x
            cond = self.probs[m] / p[x]
            mu = cond @ self.values[m]
            total += p[x] * float(cond @ (self.values[m] - mu) ** 2)
        return total


def info_density_table(p, w) -> InfoDensityTable:
    """Tabulate the information density on ``{(x, y): P(x) W(y|x) > 0}``."""
    p, w = _probs(p), _matrix(w)
    _check_dims(p, w)
    q = p @ w
    joint = p[:, None] * w
    xs, ys = np.nonzero(joint > 0)
    vals = np.log(w[xs, ys] / q[ys]) / LN2
    return InfoDensityTable(xs, ys, vals, joint[xs, ys])


def information_density_variance_bound(n_inputs: int) -> float:
    """Uniform bound on the second moment of the information density, in bits^2.

    ``E[i(X;Y)^2] <= 8 |X| / e^2`` nats^2 for every input law and every
    channel with ``|X|`` inputs.
    """
    return 8.0 * n_inputs / np.e**2 / LN2**2
