"""Cost-constrained epsilon-capacity and the capacity-cost curve."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .capacity import MAX_COMPONENTS, CapacityResult, epsilon_capacity

PLATEAU_TOL = 1e-6


def _require_cost(ch):
    if ch.cost is None:
        raise ValueError("channel has no cost vector")


def cost_constrained_capacity(ch, eps: float, gamma: float, tol: float = 1e-7,
                              cap: int = MAX_COMPONENTS, seed: int = 0) -> CapacityResult:
    """``C(eps, gamma|W)``: the subset form restricted to ``{P : E_P c <= gamma}``."""
    _require_cost(ch)
    if gamma < ch.cost.min():
        raise ValueError(
            f"empty feasible set: budget {gamma} below cheapest symbol cost {ch.cost.min()}"
        )
    return epsilon_capacity(ch, eps, tol=tol, gamma=float(gamma), cap=cap, seed=seed)


@dataclass(frozen=True)
class CostCurve:
    eps: float
    gamma_grid: np.ndarray
    values: np.ndarray
    input_laws: tuple
    expected_costs: np.ndarray
    gamma_star: float
    unconstrained: float
    tol: float = 1e-7
    report: "CostReport | None" = field(default=None, compare=False)


@dataclass(frozen=True)
class CostReport:
    monotonicity: list
    concavity: list
    strict_increase: list
    boundary: list
    plateau: list

    @property
    def clean(self) -> bool:
        return not (self.monotonicity or self.concavity or self.strict_increase
                    or self.boundary or self.plateau)

    def lines(self):
        out = []
        for name in ("monotonicity", "concavity", "strict_increase", "boundary", "plateau"):
            items = getattr(self, name)
            status = "ok" if not items else f"{len(items)} violation(s)"
            out.append(f"{name}: {status}")
            out.extend(f"  {item}" for item in items)
        return out


def find_gamma_star(ch, eps: float, unconstrained: float, tol: float = 1e-7,
                    plateau_tol: float = PLATEAU_TOL, iters: int = 40, seed: int = 0) -> float:
    """Smallest budget whose capacity is within ``plateau_tol`` of the unconstrained value."""
    lo, hi = float(ch.cost.min()), float(ch.cost.max())

    def reached(g):
        v = cost_constrained_capacity(ch, eps, g, tol=tol, seed=seed).value
        return v >= unconstrained - plateau_tol

    if reached(lo):
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return hi


def capacity_cost_curve(ch, eps: float, gamma_grid, tol: float = 1e-7,
                        plateau_tol: float = PLATEAU_TOL, seed: int = 0,
                        executor=None) -> CostCurve:
    """Evaluate ``C(eps, gamma|W)`` on a grid and locate the saturation budget."""
    _require_cost(ch)
    grid = np.asarray(gamma_grid, dtype=np.float64)
    if np.any(np.diff(grid) < 0):
        raise ValueError("gamma grid must be sorted ascending")
    if grid.size and grid[0] < ch.cost.min():
        raise ValueError(f"gamma grid starts below the cheapest cost {ch.cost.min()}")

    def solve(g):
        return cost_constrained_capacity(ch, eps, float(g), tol=tol, seed=seed)

    mapper = executor.map if executor is not None else map
    results = list(mapper(solve, grid))
    unconstrained = epsilon_capacity(ch, eps, tol=tol, seed=seed).value
    gamma_star = find_gamma_star(ch, eps, unconstrained, tol=tol, plateau_tol=plateau_tol, seed=seed)
    curve = CostCurve(
        eps=eps,
        gamma_grid=grid,
        values=np.array([r.value for r in results]),
        input_laws=tuple(r.input_law for r in results),
        expected_costs=np.array([float(r.input_law.probs @ ch.cost) for r in results]),
        gamma_star=gamma_star,
        unconstrained=unconstrained,
        tol=tol,
    )
    return CostCurve(**{**curve.__dict__, "report": verify_cost_properties(curve)})


def verify_cost_properties(curve: CostCurve, tol: float = PLATEAU_TOL) -> CostReport:
    """Check monotonicity, concavity, strict increase, boundary attainment and plateau."""
    g, v = curve.gamma_grid, curve.values
    if g.size < 3:
        raise ValueError("need at least 3 grid points")
    mono, conc, strict, boundary, plateau = [], [], [], [], []
    for i in range(g.size - 1):
        if v[i + 1] < v[i] - tol:
            mono.append(f"C({g[i+1]:g}) = {v[i+1]:.9g} < C({g[i]:g}) = {v[i]:.9g}")
    for i in range(1, g.size - 1):
        if g[i + 1] == g[i - 1]:
            continue
        t = (g[i] - g[i - 1]) / (g[i + 1] - g[i - 1])
        chord = (1 - t) * v[i - 1] + t * v[i + 1]
        if v[i] < chord - tol:
            conc.append(f"C({g[i]:g}) = {v[i]:.9g} below chord {chord:.9g}")
    for i in range(g.size - 1):
        if g[i + 1] < curve.gamma_star and v[i + 1] - v[i] <= tol and g[i + 1] > g[i]:
            strict.append(f"no increase between {g[i]:g} and {g[i+1]:g}")
    if curve.expected_costs is not None:
        for gi, ci in zip(g, curve.expected_costs):
            if gi < curve.gamma_star and abs(ci - gi) > tol:
                boundary.append(f"optimizer cost {ci:.9g} off the budget {gi:g}")
    for gi, vi in zip(g, v):
        if gi >= curve.gamma_star and abs(vi - curve.unconstrained) > tol:
            plateau.append(f"C({gi:g}) = {vi:.9g} differs from C(eps) = {curve.unconstrained:.9g}")
    return CostReport(mono, conc, strict, boundary, plateau)
