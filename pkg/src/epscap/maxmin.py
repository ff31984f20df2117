"""Concave max-min of mutual informations over (a cost-restricted) simplex.

Solves ``max_P min_l I_P(X; Y_l)`` for a stack of channels, optionally over
``{P : E_P c <= gamma}``. The result carries a certified bracket:

* lower: ``min_l I_P`` at the returned (feasible) law;
* upper: ``min_lambda max_{Q feasible} sum_x Q(x) sum_l lambda_l D_l(x; P)``,
  an LP that upper-bounds the optimum for any ``P`` by concavity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .channel import LN2, component_capacity, mutual_information_nats

# Derivative cap (bits) for outputs unreachable under the current law.
_DIV_CAP = 1e4


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (1.0 - css) / k > 0)[0][-1]
    theta = (1.0 - css[rho]) / (rho + 1)
    return np.maximum(v + theta, 0.0)


def project_halfspace(v: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    """Projection onto ``{x : a.x <= b}``."""
    viol = a @ v - b
    if viol <= 0:
        return v
    return v - viol / (a @ a) * a


def project_feasible(v, cost=None, gamma=None, iters: int = 500, tol: float = 1e-14):
    """Projection onto the simplex intersected with ``{c.P <= gamma}`` (Dykstra)."""
    if cost is None:
        return project_simplex(v)
    cost = np.asarray(cost, dtype=np.float64)
    x = np.asarray(v, dtype=np.float64).copy()
    p_inc = np.zeros_like(x)
    q_inc = np.zeros_like(x)
    for _ in range(iters):
        y = project_simplex(x + p_inc)
        p_inc = x + p_inc - y
        x_new = project_halfspace(y + q_inc, cost, gamma)
        q_inc = y + q_inc - x_new
        if np.max(np.abs(x_new - x)) < tol:
            x = x_new
            break
        x = x_new
    return _clean(x, cost, gamma)


def _clean(p, cost=None, gamma=None) -> np.ndarray:
    """Snap a near-feasible law onto the feasible set without leaving it."""
    p = np.maximum(np.asarray(p, dtype=np.float64), 0.0)
    p = p / p.sum()
    if cost is not None and cost @ p > gamma:
        # slide toward a cheapest symbol until the budget holds
        cheap = np.zeros_like(p)
        cheap[np.argmin(cost)] = 1.0
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if cost @ ((1 - mid) * p + mid * cheap) <= gamma:
                hi = mid
            else:
                lo = mid
        p = (1 - hi) * p + hi * cheap
    return p


def divergence_matrix(p: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """``D(W_l(.|x) || P W_l)`` in bits, shape ``(L, |X|)``, capped for unreachable outputs."""
    q = np.einsum("x,lxy->ly", p, mats)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mats > 0, mats / q[:, None, :], 1.0)
        terms = np.where(mats > 0, mats * np.log(ratio), 0.0)
    d = terms.sum(axis=-1) / LN2
    d[~np.isfinite(d)] = _DIV_CAP
    return np.minimum(d, _DIV_CAP)


def informations(p: np.ndarray, mats: np.ndarray, negent: np.ndarray | None = None) -> np.ndarray:
    """``I_P(X; Y_l)`` in bits for every stacked channel."""
    if negent is None:
        return mutual_information_nats(p, mats) / LN2
    q = np.einsum("x,lxy->ly", p, mats)
    with np.errstate(divide="ignore", invalid="ignore"):
        out_ent = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0).sum(axis=1)
    return np.maximum(negent @ p - out_ent, 0.0) / LN2


def _negent(mats: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(mats > 0, mats * np.log(np.where(mats > 0, mats, 1.0)), 0.0).sum(axis=-1)


def dual_upper_bound(p, mats, cost=None, gamma=None):
    """Certified upper bound on the max-min from the tangent planes at ``p``.

    Returns ``(bound, lambda)``.
    """
    d = divergence_matrix(p, mats)  # (L, X)
    n_l, n_x = d.shape
    # variables: lambda (L), s, [mu]
    with_cost = cost is not None
    n_var = n_l + 1 + int(with_cost)
    c_obj = np.zeros(n_var)
    c_obj[n_l] = 1.0
    a_ub = np.zeros((n_x, n_var))
    a_ub[:, :n_l] = d.T
    a_ub[:, n_l] = -1.0
    bounds = [(0, None)] * n_l + [(None, None)]
    if with_cost:
        c_obj[n_l + 1] = gamma
        a_ub[:, n_l + 1] = -np.asarray(cost)
        bounds.append((0, None))
    a_eq = np.zeros((1, n_var))
    a_eq[0, :n_l] = 1.0
    res = linprog(c_obj, A_ub=a_ub, b_ub=np.zeros(n_x), A_eq=a_eq, b_eq=[1.0],
                  bounds=bounds, method="highs")
    if not res.success:
        return np.inf, np.full(n_l, 1.0 / n_l)
    lam = np.maximum(res.x[:n_l], 0.0)
    lam /= lam.sum()
    # recompute the bound exactly for the rounded multipliers
    v = lam @ d
    if with_cost:
        bound = _max_linear_over_feasible(v, np.asarray(cost), gamma)
    else:
        bound = float(v.max())
    return bound, lam


def _max_linear_over_feasible(v, cost, gamma) -> float:
    """``max {Q.v : Q in simplex, cost.Q <= gamma}``; optimum sits on <= 2 vertices."""
    best = -np.inf
    n = v.size
    for i in range(n):
        if cost[i] <= gamma:
            best = max(best, v[i])
        for j in range(n):
            if cost[i] < gamma < cost[j]:
                t = (cost[j] - gamma) / (cost[j] - cost[i])
                best = max(best, t * v[i] + (1 - t) * v[j])
    return float(best)


@dataclass(frozen=True)
class MaxMinResult:
    value: float
    input_law: np.ndarray
    upper_bound: float
    iterations: int
    converged: bool
    multipliers: np.ndarray

    @property
    def gap(self) -> float:
        return self.upper_bound - self.value


def supergradient_ascent(p0, mats, cost=None, gamma=None, steps: int = 300, scale: float = 0.2):
    """Projected supergradient ascent on ``min_l I_l`` with Polyak averaging."""
    negent = _negent(mats)
    p = project_feasible(p0, cost, gamma)
    avg = p.copy()
    best_p, best_v = p, informations(p, mats, negent).min()
    for t in range(1, steps + 1):
        infos = informations(p, mats, negent)
        active = int(np.argmin(infos))
        g = divergence_matrix(p, mats)[active]
        g = g - g.mean()
        norm = np.linalg.norm(g)
        if norm == 0:
            break
        p = project_feasible(p + scale / np.sqrt(t) * g / norm, cost, gamma)
        avg += (p - avg) / (t + 1)
        for cand in (p, avg):
            v = informations(cand, mats, negent).min()
            if v > best_v:
                best_p, best_v = cand.copy(), v
    return best_p, best_v


def _slsqp_polish(p0, mats, cost=None, gamma=None, max_iter: int = 500):
    n_x = mats.shape[1]
    negent = _negent(mats)

    def objective(z):
        return -z[-1]

    def objective_grad(z):
        g = np.zeros_like(z)
        g[-1] = -1.0
        return g

    def info_con(z):
        p = np.clip(z[:n_x], 0.0, None)
        return informations(p / max(p.sum(), 1e-300), mats, negent) - z[-1]

    def info_jac(z):
        p = np.clip(z[:n_x], 0.0, None)
        p = p / max(p.sum(), 1e-300)
        d = divergence_matrix(p, mats) - 1.0 / LN2
        return np.hstack([d, -np.ones((d.shape[0], 1))])

    cons = [
        {"type": "ineq", "fun": info_con, "jac": info_jac},
        {"type": "eq", "fun": lambda z: np.array([z[:n_x].sum() - 1.0]),
         "jac": lambda z: np.hstack([np.ones(n_x), 0.0])[None, :]},
    ]
    if cost is not None:
        cost = np.asarray(cost)
        cons.append({"type": "ineq", "fun": lambda z: np.array([gamma - cost @ z[:n_x]]),
                     "jac": lambda z: np.hstack([-cost, 0.0])[None, :]})
    z0 = np.hstack([p0, informations(p0, mats).min()])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(objective, z0, jac=objective_grad, method="SLSQP",
                       bounds=[(0.0, 1.0)] * n_x + [(None, None)], constraints=cons,
                       options={"ftol": 1e-15, "maxiter": max_iter})
    return _clean(res.x[:n_x], cost, gamma), int(res.nit)


def max_min_information(
    mats,
    tol: float = 1e-7,
    cost=None,
    gamma=None,
    restarts: int = 10,
    seed: int = 0,
) -> MaxMinResult:
    """Maximize ``min_l I_P(X; Y_l)`` over feasible input laws ``P``.

    Parameters
    ----------
    mats : array, shape (L, |X|, |Y|)
        Component transition matrices.
    tol : float
        Target width of the certified bracket, in bits.
    cost, gamma : optional
        Per-symbol cost and budget; the feasible set becomes
        ``{P : sum_x P(x) c(x) <= gamma}``.
    restarts : int
        Number of random starting points for the supergradient stage.
    seed : int
        Seed for the restart generator; results are deterministic given it.
    """
    mats = np.asarray(mats, dtype=np.float64)
    if mats.ndim == 2:
        mats = mats[None]
    n_l, n_x, _ = mats.shape
    if cost is not None:
        cost = np.asarray(cost, dtype=np.float64)
        if gamma < cost.min():
            raise ValueError(f"budget {gamma} is below the cheapest symbol cost {cost.min()}")
        if gamma >= cost.max():
            cost = gamma = None

    total_iters = 0
    best_p, best_lo, best_hi, best_lam = None, -np.inf, np.inf, np.full(n_l, 1.0 / n_l)

    def consider(p):
        nonlocal best_p, best_lo, best_hi, best_lam
        p = _clean(p, cost, gamma)
        lo = float(informations(p, mats).min())
        hi, lam = dual_upper_bound(p, mats, cost, gamma)
        if lo > best_lo:
            best_p, best_lo = p, lo
        if hi < best_hi:
            best_hi, best_lam = hi, lam
        return best_hi - best_lo < tol

    # degenerate feasible set: a single cheapest symbol at budget equal to its cost
    if cost is not None and np.count_nonzero(cost <= gamma) == 1 and np.isclose(gamma, cost.min(), rtol=0, atol=1e-15):
        p = np.zeros(n_x)
        p[np.argmin(cost)] = 1.0
        return MaxMinResult(float(informations(p, mats).min()), p, float(informations(p, mats).min()),
                            0, True, best_lam)

    def done():
        return MaxMinResult(best_lo, best_p, best_hi, total_iters, best_hi - best_lo < tol, best_lam)

    starts = [np.full(n_x, 1.0 / n_x)]
    if cost is None:
        for l in range(n_l):
            cap = component_capacity(mats[l], tol=min(tol, 1e-9) / 10, max_iter=2000)
            total_iters += cap.iterations
            starts.append(cap.input_law.probs)
            if consider(cap.input_law.probs):
                return done()
    for s in starts:
        if consider(s):
            return done()
    polished, nit = _slsqp_polish(best_p, mats, cost, gamma)
    total_iters += nit
    if consider(polished):
        return done()

    # hedge against flat regions and poor local behaviour of the polish
    rng = np.random.default_rng(seed)
    starts += list(rng.dirichlet(np.ones(n_x), size=restarts))
    ascended = []
    for s in starts:
        p, v = supergradient_ascent(s, mats, cost, gamma)
        total_iters += 300
        ascended.append((v, p))
    ascended.sort(key=lambda t: -t[0])
    for _, p in ascended[:3]:
        consider(p)
        for start in (best_p, p):
            polished, nit = _slsqp_polish(start, mats, cost, gamma)
            total_iters += nit
            if consider(polished):
                return done()
    return done()
