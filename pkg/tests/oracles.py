"""Brute-force reference implementations used only by the tests.

Each one avoids the library code path it checks: hypothesis tests are
enumerated or solved as LPs, spectra by walking every sequence pair, and
capacities by dense scans.
"""

import itertools

import numpy as np
from scipy.optimize import linprog

LN2 = np.log(2.0)


def random_matrix(rng, nx, ny, floor=0.0):
    w = rng.dirichlet(np.ones(ny), size=nx)
    if floor:
        w = (w + floor) / (1 + ny * floor)
    return w


def random_law(rng, k, sparse=False):
    p = rng.dirichlet(np.ones(k))
    if sparse and k > 2:
        drop = rng.random(k) < 0.25
        drop[rng.integers(k)] = False
        p = np.where(drop, 0.0, p)
        p /= p.sum()
    return p


def mi_bits(p, w):
    """Mutual information by the textbook double sum."""
    q = p @ w
    total = 0.0
    for x in range(w.shape[0]):
        for y in range(w.shape[1]):
            if p[x] > 0 and w[x, y] > 0:
                total += p[x] * w[x, y] * np.log2(w[x, y] / q[y])
    return total


def subset_form_at(p, weights, mats, eps):
    """``max_{S : w(S) >= 1 - eps} min_{l in S} I_p(l)`` over every subset (not just minimal ones)."""
    infos = [mi_bits(p, m) for m in mats]
    best = -np.inf
    L = len(weights)
    for r in range(1, L + 1):
        for s in itertools.combinations(range(L), r):
            if sum(weights[i] for i in s) >= 1 - eps - 1e-12:
                best = max(best, min(infos[i] for i in s))
    return best


def beta_bruteforce(p, q, alpha):
    """Min type-II error over randomized tests via deterministic-test vertices and pairwise mixing."""
    pts = []
    for mask in itertools.product([0, 1], repeat=len(p)):
        keep = np.array(mask, dtype=bool)
        pts.append((1.0 - p[keep].sum(), q[keep].sum()))
    best = min(b for a, b in pts if a <= alpha + 1e-15)
    for (a1, b1), (a2, b2) in itertools.combinations(pts, 2):
        lo, hi = (a1, b1), (a2, b2)
        if lo[0] > hi[0]:
            lo, hi = hi, lo
        if lo[0] < alpha < hi[0]:
            lam = (hi[0] - alpha) / (hi[0] - lo[0])
            best = min(best, lam * lo[1] + (1 - lam) * hi[1])
    return best


def alpha_lp(p, q, beta):
    """Min type-I error subject to type-II error <= beta, as a linear program."""
    res = linprog(c=-p, A_ub=[q], b_ub=[beta], bounds=[(0, 1)] * len(p), method="highs")
    assert res.status == 0
    return max(0.0, 1.0 + res.fun)


def beta_lp(p, q, alpha):
    res = linprog(c=q, A_ub=[-p], b_ub=[alpha - 1.0], bounds=[(0, 1)] * len(p), method="highs")
    assert res.status == 0
    return res.fun


def spectrum_by_enumeration(p, w, n):
    """Law of ``sum_i log2 W(y_i|x_i)/(pW)(y_i)`` by walking every ``(x^n, y^n)`` pair.

    Outcomes are grouped by their joint ``(x, y)`` count vector, so values are
    computed once per class and never merged numerically.
    """
    nx, ny = w.shape
    q = p @ w
    classes = {}
    for xs in itertools.product(range(nx), repeat=n):
        px = np.prod([p[x] for x in xs])
        if px == 0:
            continue
        for ys in itertools.product(range(ny), repeat=n):
            pyx = np.prod([w[x, y] for x, y in zip(xs, ys)])
            if pyx == 0:
                continue
            counts = np.zeros((nx, ny), dtype=int)
            for x, y in zip(xs, ys):
                counts[x, y] += 1
            key = counts.tobytes()
            if key not in classes:
                value = sum(counts[x, y] * np.log2(w[x, y] / q[y])
                            for x in range(nx) for y in range(ny) if counts[x, y])
                classes[key] = [value, 0.0]
            classes[key][1] += px * pyx
    return sorted((v, m) for v, m in classes.values())


def product_space_alpha(w, type_counts, beta):
    """``alpha_beta`` of ``P_X W^n`` vs ``P_X x (P_n W)^n`` with ``P_X`` uniform on a type class, by LP."""
    nx, ny = w.shape
    n = int(sum(type_counts))
    pn = np.asarray(type_counts) / n
    qy = pn @ w
    xs_all = [xs for xs in itertools.product(range(nx), repeat=n)
              if tuple(np.bincount(xs, minlength=nx)) == tuple(type_counts)]
    ys_all = list(itertools.product(range(ny), repeat=n))
    P, Q = [], []
    for xs in xs_all:
        for ys in ys_all:
            P.append(np.prod([w[x, y] for x, y in zip(xs, ys)]) / len(xs_all))
            Q.append(np.prod([qy[y] for y in ys]) / len(xs_all))
    return alpha_lp(np.array(P), np.array(Q), beta)


def cost_scan_binary(mats, weights, eps, gamma, cost, step=1e-5):
    """1-D oracle for ``|X| = 2``: scan ``P = (1 - t, t)`` over the feasible segment."""
    c0, c1 = cost
    if c1 > c0:
        t_max = min(1.0, (gamma - c0) / (c1 - c0)) if gamma < c1 else 1.0
        ts = np.append(np.arange(0.0, t_max, step), t_max)
    else:
        ts = np.arange(0.0, 1.0 + step / 2, step)
    P = np.stack([1 - ts, ts], axis=1)
    infos = []
    for m in mats:
        q = P @ m
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = P[:, :, None] * m[None] * np.log2(np.where(m[None] > 0, m[None] / q[:, None, :], 1.0))
        infos.append(np.nan_to_num(terms).sum(axis=(1, 2)))
    infos = np.stack(infos, axis=1)  # (T, L)
    weights = np.asarray(weights)
    order = np.argsort(infos, axis=1, kind="stable")
    sorted_i = np.take_along_axis(infos, order, axis=1)
    cum = np.cumsum(weights[order], axis=1)
    first = np.argmax(cum > eps + 1e-12, axis=1)
    vals = sorted_i[np.arange(len(ts)), first]
    i = int(np.argmax(vals))
    return float(vals[i]), float(ts[i])


def binary_entropy(q):
    return float(-q * np.log2(q) - (1 - q) * np.log2(1 - q))
