"""Single-letter epsilon-capacity of finite mixed memoryless channels.

Three routes to the same number:

* ``epsilon_capacity``: maximize over feasible component subsets ``S`` with
  ``w(S) >= 1 - eps`` the compound capacity ``max_P min_{l in S} I_P``
  (primary solver);
* ``epsilon_capacity_grid_oracle``: brute-force maximization over a simplex
  lattice of the quantile ``sup {R : F_w(R|P) <= eps}``;
* ``well_ordered_capacity``: closed-form step function for well-ordered
  mixtures.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import (
    LN2,
    Distribution,
    MixedChannel,
    component_capacity,
    component_informations,
    mutual_information_nats,
)
from .maxmin import max_min_information

# Slack on mixture-weight comparisons; weights are only defined to this precision.
WEIGHT_TOL = 1e-12
MAX_COMPONENTS = 20


class Method(str, enum.Enum):
    SUBSET_SOLVER = "subset_solver"
    QUANTILE_GRID = "quantile_grid"
    WELL_ORDERED_CLOSED_FORM = "well_ordered_closed_form"


class EnumerationCapError(ValueError):
    """Too many mixture components for exhaustive subset enumeration."""


class SolverError(RuntimeError):
    """The inner max-min solver could not certify its answer."""


@dataclass(frozen=True)
class CapacityResult:
    value: float
    input_law: Distribution
    subset: frozenset
    feasible_weight: float
    method: Method
    eps: float
    gamma: float | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def certified_tol(self) -> float:
        return self.diagnostics.get("certified_tol", np.nan)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous non-decreasing step function on ``[0, 1)``.

    Plateau ``i`` covers the half-open interval
    ``[breakpoints[i], breakpoints[i+1])``, the last one extending to 1.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if b.shape != v.shape or b.size == 0 or b[0] != 0.0:
            raise ValueError("need one value per breakpoint, starting at 0")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    def interval_index(self, eps: float) -> int:
        if not 0.0 <= eps < 1.0:
            raise ValueError(f"eps must lie in [0, 1), got {eps}")
        return int(np.searchsorted(self.breakpoints, eps + WEIGHT_TOL, side="right") - 1)

    def __call__(self, eps: float) -> float:
        return float(self.values[self.interval_index(eps)])

    def intervals(self):
        """``(eps_lo, eps_hi, value)`` triples."""
        hi = np.append(self.breakpoints[1:], 1.0)
        return list(zip(self.breakpoints.tolist(), hi.tolist(), self.values.tolist()))


def _check_eps(eps: float):
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")


def f_w(r: float, p, ch: MixedChannel) -> float:
    """Weight of components whose mutual information is at most ``r``."""
    infos = component_informations(p, ch)
    return float(ch.weights[infos <= r].sum())


def quantile_sup(values: np.ndarray, weights: np.ndarray, delta: float) -> float:
    """``sup {R : sum_l w_l 1{v_l <= R} <= delta}`` for ``delta`` in ``[0, 1)``.

    The weighted indicator sum is a right-continuous step function of ``R``;
    the supremum is the first value where the cumulative weight strictly
    exceeds ``delta`` (tied values form one jump).
    """
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=np.float64)[order]
    cum = np.cumsum(np.asarray(weights, dtype=np.float64)[order])
    # the cumulative weight at v[i] includes every tie of v[i]
    last_of_tie = np.searchsorted(v, v, side="right") - 1
    exceeds = cum[last_of_tie] > delta + WEIGHT_TOL
    return float(v[np.argmax(exceeds)])


def a_of(p, delta: float, ch: MixedChannel) -> float:
    """``A(P, delta) = sup {R : F_w(R|P) <= delta}`` in bits."""
    _check_eps(delta)
    return quantile_sup(component_informations(p, ch), ch.weights, delta)


def _subset_weights(weights: np.ndarray) -> np.ndarray:
    """``w(T)`` for every bitmask ``T`` over the components."""
    sums = np.zeros(1)
    for w in weights:
        sums = np.concatenate([sums, sums + w])
    return sums


def _check_cap(ch: MixedChannel, cap: int):
    if ch.n_components > cap:
        raise EnumerationCapError(
            f"{ch.n_components} components exceed the enumeration cap of {cap}"
        )


def feasible_minimal_subsets(ch: MixedChannel, eps: float, cap: int = MAX_COMPONENTS) -> list:
    """Inclusion-minimal index sets ``S`` with ``w(S) >= 1 - eps``.

    Dropping a component from ``S`` can only raise ``min_{l in S} I_l``, so the
    supremum over feasible sets is attained on a minimal one. The search runs
    over complements ``T`` with ``w(T) <= eps`` and keeps the maximal ones.
    """
    _check_eps(eps)
    _check_cap(ch, cap)
    n = ch.n_components
    full = (1 << n) - 1
    droppable = _subset_weights(ch.weights) <= eps + WEIGHT_TOL
    masks = np.arange(1 << n)
    maximal = droppable.copy()
    for i in range(n):
        bit = 1 << i
        without = (masks & bit) == 0
        maximal[without] &= ~droppable[masks[without] | bit]
    out = []
    for t in np.flatnonzero(maximal):
        s = full & ~int(t)
        out.append(frozenset(i for i in range(n) if s >> i & 1))
    return sorted(out, key=lambda s: sorted(s))


def compound_capacity(
    ch: MixedChannel,
    subset: Sequence[int] | None = None,
    tol: float = 1e-7,
    gamma: float | None = None,
    seed: int = 0,
    verify: bool = False,
):
    """``max_P min_{l in subset} I_P(X; Y_l)`` with a certified bracket.

    Returns ``(value, input_law, solver_result)``. With ``gamma`` set, ``P``
    ranges over ``{P : E_P c <= gamma}`` using the channel's cost vector.
    ``verify=True`` cross-checks against the lattice oracle when ``|X| <= 3``.
    """
    idx = sorted(range(ch.n_components) if subset is None else subset)
    if not idx:
        raise ValueError("subset must be non-empty")
    cost = None
    if gamma is not None:
        if ch.cost is None:
            raise ValueError("channel has no cost vector")
        cost = ch.cost
    res = max_min_information(ch.matrices[idx], tol=tol, cost=cost, gamma=gamma, seed=seed)
    if verify and ch.n_inputs <= 3:
        grid = _lattice(ch.n_inputs, 0.01 if ch.n_inputs == 3 else 0.002)
        if cost is not None:
            grid = grid[grid @ cost <= gamma + 1e-12]
        best = (mutual_information_nats(grid, ch.matrices[idx]) / LN2).min(axis=1).max()
        if best > res.upper_bound + 1e-9:
            raise SolverError(
                f"lattice point beats the certified bound: {best} > {res.upper_bound}"
            )
    return res.value, Distribution(res.input_law), res


def epsilon_capacity(
    ch: MixedChannel,
    eps: float,
    tol: float = 1e-7,
    gamma: float | None = None,
    cap: int = MAX_COMPONENTS,
    seed: int = 0,
) -> CapacityResult:
    """epsilon-capacity ``C(eps|W)`` via the subset (max-min) form.

    Subsets are visited in decreasing order of the a-priori bound
    ``min_{l in S} C_l`` and skipped once that bound cannot beat the
    incumbent, so most instances solve only a few compound problems.
    """
    _check_eps(eps)
    _check_cap(ch, cap)
    subsets = feasible_minimal_subsets(ch, eps, cap)
    caps = np.array([component_capacity(c.matrix, tol=tol / 10, max_iter=20_000).upper_bound
                     for c in ch.channels])
    bounds = [min(caps[i] for i in s) for s in subsets]
    order = sorted(range(len(subsets)), key=lambda k: (-bounds[k], sorted(subsets[k])))

    best = None
    solved = 0
    worst_gap = 0.0
    for k in order:
        if best is not None and bounds[k] <= best[0] + tol:
            break
        value, law, res = compound_capacity(ch, subsets[k], tol=tol, gamma=gamma, seed=seed)
        solved += 1
        worst_gap = max(worst_gap, res.gap)
        if not res.converged and res.gap > 10 * tol:
            raise SolverError(f"max-min solver stalled on subset {sorted(subsets[k])}: gap {res.gap:.3g}")
        if best is None or value > best[0]:
            best = (value, law, subsets[k], res)
    value, law, subset, res = best
    return CapacityResult(
        value=value,
        input_law=law,
        subset=subset,
        feasible_weight=float(ch.weights[sorted(subset)].sum()),
        method=Method.SUBSET_SOLVER,
        eps=eps,
        gamma=gamma,
        diagnostics={
            "certified_tol": max(worst_gap, 0.0),
            "upper_bound": res.upper_bound,
            "subsets_total": len(subsets),
            "subsets_solved": solved,
            "iterations": res.iterations,
        },
    )


def _lattice(n: int, resolution: float) -> np.ndarray:
    """All points of the simplex in ``R^n`` with coordinates on a ``1/k`` grid."""
    k = int(round(1.0 / resolution))
    if n == 1:
        return np.ones((1, 1))
    pts = []
    for head in itertools.combinations(range(k + n - 1), n - 1):
        # stars and bars
        cuts = (-1,) + head + (k + n - 1,)
        pts.append([cuts[i + 1] - cuts[i] - 1 for i in range(n)])
    return np.asarray(pts, dtype=np.float64) / k


def epsilon_capacity_grid_oracle(ch: MixedChannel, eps: float, grid_resolution: float = 0.01,
                                 gamma: float | None = None) -> float:
    """Brute-force ``max_P A(P, eps)`` over a simplex lattice (``|X| <= 4``)."""
    _check_eps(eps)
    if ch.n_inputs > 4:
        raise ValueError(f"lattice oracle supports at most 4 inputs, got {ch.n_inputs}")
    grid = _lattice(ch.n_inputs, grid_resolution)
    if gamma is not None:
        grid = grid[grid @ ch.cost <= gamma + 1e-12]
    infos = mutual_information_nats(grid, ch.matrices) / LN2  # (N, L)
    order = np.argsort(infos, axis=1, kind="stable")
    v = np.take_along_axis(infos, order, axis=1)
    cum = np.cumsum(ch.weights[order], axis=1)
    # merge exact ties so a tie group acts as a single jump
    for j in range(v.shape[1] - 2, -1, -1):
        tie = v[:, j] == v[:, j + 1]
        cum[tie, j] = cum[tie, j + 1]
    first = np.argmax(cum > eps + WEIGHT_TOL, axis=1)
    return float(v[np.arange(v.shape[0]), first].max())


@dataclass(frozen=True)
class WellOrderedCertificate:
    well_ordered: bool
    unknown: bool
    order: tuple
    capacities: np.ndarray
    witnesses: dict
    failures: dict


def is_well_ordered(ch: MixedChannel, tol: float = 1e-7):
    """Decide whether the mixture is well-ordered, with witnesses.

    For each component ``l`` (sorted by capacity, ties by index) we need an
    input law within ``tol`` of optimal for ``l`` whose mutual information
    over every component of capacity at least ``C_l`` reaches ``C_l - tol``.
    Such a law exists iff the compound capacity of ``{l} + J`` equals ``C_l``;
    the Blahut-Arimoto optimizer is tried first, then the certified max-min
    solver. A bracket straddling ``C_l - tol`` is reported as unknown.

    Returns ``(flag, certificate)``; ``flag`` is False when unknown.
    """
    caps_full = [component_capacity(c.matrix, tol=tol / 100, max_iter=100_000) for c in ch.channels]
    caps = np.array([c.value for c in caps_full])
    order = tuple(int(i) for i in np.argsort(caps, kind="stable"))
    witnesses, failures = {}, {}
    unknown = False
    mats = ch.matrices
    for l in order:
        others = [j for j in range(ch.n_components) if caps[j] >= caps[l] - tol]
        p = caps_full[l].input_law.probs
        infos = mutual_information_nats(p, mats[others]) / LN2
        if np.all(infos >= caps[l] - tol):
            witnesses[l] = Distribution(p)
            continue
        res = max_min_information(mats[others], tol=tol / 10)
        if res.value >= caps[l] - tol:
            witnesses[l] = Distribution(res.input_law)
        elif res.upper_bound < caps[l] - tol:
            failures[l] = res.upper_bound
        else:
            failures[l] = res.upper_bound
            unknown = True
    flag = not failures
    cert = WellOrderedCertificate(flag, unknown and not flag, order, caps, witnesses, failures)
    return flag, cert


def well_ordered_capacity(ch: MixedChannel, eps: float, check: bool = True, tol: float = 1e-9) -> float:
    """Closed form for well-ordered mixtures: ``sup {R : sum_l w_l 1{C_l <= R} <= eps}``."""
    _check_eps(eps)
    if check:
        ok, cert = is_well_ordered(ch)
        if not ok:
            raise ValueError("mixture is not (certifiably) well-ordered")
        caps = cert.capacities
    else:
        caps = np.array([component_capacity(c.matrix, tol=tol).value for c in ch.channels])
    return quantile_sup(caps, ch.weights, eps)


def curve_breakpoints(ch: MixedChannel, cap: int = MAX_COMPONENTS) -> np.ndarray:
    """Distinct subset weights ``w(T) < 1``: where the feasible family can change."""
    _check_cap(ch, cap)
    sums = np.sort(_subset_weights(ch.weights))
    sums = sums[sums < 1.0 - WEIGHT_TOL]
    keep = np.concatenate([[True], np.diff(sums) > WEIGHT_TOL])
    out = sums[keep]
    out[0] = 0.0
    return out


def epsilon_capacity_curve(ch: MixedChannel, tol: float = 1e-7, gamma: float | None = None,
                           cap: int = MAX_COMPONENTS, seed: int = 0,
                           executor=None) -> StepFunction:
    """``C(eps|W)`` on all of ``[0, 1)`` as a step function.

    Plateaus with values within ``tol`` of their left neighbour are merged.
    """
    bps = curve_breakpoints(ch, cap)

    def solve(b):
        return epsilon_capacity(ch, float(b), tol=tol, gamma=gamma, cap=cap, seed=seed).value

    mapper = executor.map if executor is not None else map
    values = np.array(list(mapper(solve, bps)))
    # C(eps) is non-decreasing in eps; clamp solver noise
    values = np.maximum.accumulate(values)
    keep = np.concatenate([[True], np.diff(values) > tol])
    return StepFunction(bps[keep], values[keep])
