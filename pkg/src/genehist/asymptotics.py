"""Singularity analysis of duplication-loss histories on unranked trees.

With ``H_u(z) = (1 - sqrt(R_u(z))) / 2`` the radicands obey::

    R_u = 1 - 4z                                          (u a leaf)
    R_u = -4 + 3 sqrt(R_l) + 3 sqrt(R_r) - sqrt(R_l R_r)  (u internal)

Each ``R_u`` decreases on ``[0, rho_child)`` from ``R_u(0) = 1`` and has a
single simple zero ``rho_u`` below the smallest child singularity, so the
singularities are found bottom-up by bisection.  The number of histories
behaves as ``gamma * rho**-n * n**-1.5`` with
``gamma = sqrt(-rho * R'_root(rho)) / (4 sqrt(pi))``.

Closed forms for caterpillars and complete trees are evaluated separately
and serve as cross-checks.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass

from scipy.optimize import brentq

from .counting import count_sequence
from .grammar import Model
from .species_tree import Ranking, SpeciesTree, balanced, caterpillar, random_tree, tree_shapes

__all__ = [
    "AsymptoticExpansion",
    "radicand_eval",
    "radicand_derivatives",
    "singularities_udl",
    "dominant_singularity_udl",
    "gamma_udl",
    "expansion_udl",
    "caterpillar_closed_form",
    "complete_closed_form",
    "growth_estimate",
    "extrapolate_constant",
    "caterpillar_table_csv",
    "ShapeReport",
    "extremal_shape_report",
]

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class AsymptoticExpansion:
    rho: float
    gamma: float
    precision: float
    model: Model = Model.UDL

    @property
    def growth(self) -> float:
        return 1.0 / self.rho

    def approx(self, n: int) -> float:
        return self.gamma * self.growth**n / n**1.5


def _radicands(tree: SpeciesTree, z: float, strict: bool, clamp: float = 0.0) -> list[float]:
    R = [0.0] * len(tree)
    for u in tree.postorder():
        kids = tree.children[u]
        if not kids:
            R[u] = 1.0 - 4.0 * z
            continue
        a, b = R[kids[0]], R[kids[1]]
        if a < 0 or b < 0:
            if strict and min(a, b) < -clamp:
                raise ValueError(f"radicand below node {tree.labels[u]!r} is negative at z={z}")
            a, b = max(a, 0.0), max(b, 0.0)
        sa, sb = math.sqrt(a), math.sqrt(b)
        R[u] = -4.0 + 3.0 * sa + 3.0 * sb - sa * sb
    return R


def radicand_eval(tree: SpeciesTree, z: float) -> list[float]:
    """Radicands ``R_u(z)`` of every node (indexed by node)."""
    return _radicands(tree, z, strict=True)


def radicand_derivatives(tree: SpeciesTree, z: float) -> list[float]:
    """``R'_u(z)`` by differentiating the radicand recurrence.

    Needs every child radicand to be strictly positive at ``z``.
    """
    R = radicand_eval(tree, z)
    dR = [0.0] * len(tree)
    for u in tree.postorder():
        kids = tree.children[u]
        if not kids:
            dR[u] = -4.0
            continue
        l, r = kids
        if R[l] <= 0 or R[r] <= 0:
            raise ValueError(f"derivative undefined below node {tree.labels[u]!r} at z={z}")
        sl, sr = math.sqrt(R[l]), math.sqrt(R[r])
        dR[u] = (3.0 - sr) / (2.0 * sl) * dR[l] + (3.0 - sl) / (2.0 * sr) * dR[r]
    return dR


def _root_of(f, hi: float, tol: float) -> float:
    """Zero of a function decreasing on (0, hi) with f(0) > 0 > f(hi-)."""
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    # secant polish inside the final bracket
    flo, fhi = f(lo), f(hi)
    for _ in range(3):
        if flo == fhi:
            break
        x = hi - fhi * (hi - lo) / (fhi - flo)
        if not lo < x < hi:
            break
        fx = f(x)
        if fx == 0:
            return x
        if fx > 0:
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
    return lo if abs(flo) < abs(fhi) else hi


def singularities_udl(tree: SpeciesTree, tol: float = 1e-12) -> list[float]:
    """Dominant singularity ``rho_u`` of every subtree generating function."""
    rho = [0.0] * len(tree)
    for u in tree.postorder():
        kids = tree.children[u]
        if not kids:
            rho[u] = 0.25
            continue
        sub = _subtree(tree, u)

        def f(z, sub=sub):
            return _radicands(sub, z, strict=False)[sub.root]

        rho[u] = _root_of(f, min(rho[c] for c in kids), tol)
    return rho


def _subtree(tree: SpeciesTree, u: int) -> SpeciesTree:
    nodes = tree.preorder(u)
    pos = {v: i for i, v in enumerate(nodes)}
    return SpeciesTree(
        tuple(tree.labels[v] for v in nodes),
        tuple(tuple(pos[c] for c in tree.children[v]) for v in nodes),
    )


def dominant_singularity_udl(tree: SpeciesTree, tol: float = 1e-12) -> float:
    """Radius of convergence of the history generating function."""
    return singularities_udl(tree, tol)[tree.root]


def gamma_udl(tree: SpeciesTree, rho: float | None = None, tol: float = 1e-12) -> float:
    """Leading constant ``gamma`` of the count asymptotics."""
    if rho is None:
        rho = dominant_singularity_udl(tree, tol)
    slope = radicand_derivatives(tree, rho)[tree.root]
    return math.sqrt(-rho * slope) / (4.0 * SQRT_PI)


def gamma_udl_fd(tree: SpeciesTree, rho: float, h: float = 1e-7) -> float:
    """``gamma`` with ``R'_root(rho)`` from a central finite difference."""
    R = lambda z: _radicands(tree, z, strict=True)[tree.root]
    slope = (R(rho + h) - R(rho - h)) / (2 * h)
    return math.sqrt(-rho * slope) / (4.0 * SQRT_PI)


def expansion_udl(tree: SpeciesTree, tol: float = 1e-12) -> AsymptoticExpansion:
    rho = dominant_singularity_udl(tree, tol)
    return AsymptoticExpansion(rho=rho, gamma=gamma_udl(tree, rho), precision=tol)


# ---------------------------------------------------------------------------
# Closed forms


def _s_sequence(k: int, X: float) -> list[float]:
    """[s_1(X), ..., s_k(X)] with s_1 = 0 and s_j = (a - s_{j-1}^2) / b."""
    a, b = 3.0 * X - 4.0, X - 3.0
    s = [0.0]
    for _ in range(2, k + 1):
        s.append((a - s[-1] ** 2) / b)
    return s


@dataclass(frozen=True)
class CaterpillarConstants:
    k: int
    X: float
    lam: float
    alpha: float

    @property
    def growth(self) -> float:
        return 1.0 / self.lam


def caterpillar_closed_form(k: int, grid: int = 4000) -> CaterpillarConstants:
    """Growth and leading constant of caterpillar trees from the ``s_k`` fixed point.

    ``X_k`` is the smallest root in (0, 1) of ``s_k(X) = X`` at which every
    ``s_j(X)``, j >= 2, is positive (they stand for square roots).
    """
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return CaterpillarConstants(1, 0.0, 0.25, 1.0 / (4.0 * SQRT_PI))

    def g(X):
        return _s_sequence(k, X)[-1] - X

    xs = [i / grid for i in range(1, grid)]
    X = None
    for x0, x1 in zip(xs, xs[1:]):
        if g(x0) * g(x1) <= 0:
            root = brentq(g, x0, x1, xtol=1e-15, maxiter=200)
            if all(s > 0 for s in _s_sequence(k, root)[1:]):
                X = root
                break
    if X is None:
        raise ArithmeticError(f"no admissible fixed point for k={k}")
    lam = (1.0 - X * X) / 4.0
    s = _s_sequence(k, X)  # s[j-1] == s_j
    total = 0.0
    for i in range(2, k + 2):
        sigma = 3.0 - s[i - 1] if i <= k else 2.0 * X
        prod = 1.0
        for j in range(2, i):
            prod /= s[j - 1]
        total += sigma * ((3.0 - X) / 2.0) ** (i - 2) * prod
    alpha = math.sqrt(lam / (8.0 * math.pi * X) * total)
    return CaterpillarConstants(k, X, lam, alpha)


@dataclass(frozen=True)
class CompleteConstants:
    h: int
    q: tuple[float, ...]  # q_0 .. q_h
    mu: float
    beta_formula: float
    beta_oracle: float

    @property
    def growth(self) -> float:
        return 1.0 / self.mu


def complete_closed_form(h: int) -> CompleteConstants:
    """Growth and leading constant of complete trees from the ``q_h`` recurrence.

    ``beta_formula`` evaluates the closed product
    ``sqrt(mu/(16 pi) * prod_{i=1}^{h-1} (3/q_i^2 - 1))``, kept for comparison;
    ``beta_oracle`` goes through ``Q'_h(mu_h) = -4 prod_{i=1}^{h} (3/sqrt(q_i) - 1)``
    and is the one that matches the counts.  The two disagree already at
    h = 0 (by a factor 2), so only the oracle should be trusted.
    """
    if h < 0:
        raise ValueError("h must be nonnegative")
    q = [0.0]
    for _ in range(h):
        q.append((3.0 - math.sqrt(5.0 - q[-1])) ** 2)
    mu = (1.0 - q[h]) / 4.0

    prod = 1.0
    for i in range(1, h):
        prod *= 3.0 / q[i] ** 2 - 1.0
    beta_formula = math.sqrt(mu / (16.0 * math.pi) * prod)

    # Q_j(mu_h) = q_{h-j}; Q'_{j+1} = (3 / sqrt(Q_j) - 1) Q'_j, Q'_0 = -4
    slope = -4.0
    for j in range(h):
        slope *= 3.0 / math.sqrt(q[h - j]) - 1.0
    beta_oracle = math.sqrt(abs(slope) * mu / (16.0 * math.pi))
    return CompleteConstants(h, tuple(q), mu, beta_formula, beta_oracle)


# ---------------------------------------------------------------------------
# Estimates from exact counts


def growth_estimate(tree, model: Model | str, n: int, ranking: Ranking | None = None) -> float:
    """``h(n) / h(n-1)``, valid for every model."""
    if n < 2:
        raise ValueError("n must be at least 2")
    seq = count_sequence(tree, model, n, ranking)
    if seq[n - 2] == 0:
        raise ZeroDivisionError("no history of size n-1")
    return seq[n - 1] / seq[n - 2]


def _scaled(count: int, n: int, rho: float) -> float:
    return math.exp(math.log(count) + n * math.log(rho) + 1.5 * math.log(n))


def extrapolate_constant(counts: list[int], rho: float, sizes: tuple[int, ...] = (100, 200, 400, 800)) -> float:
    """Richardson limit of ``n^1.5 h(n) rho^n`` along doubling sizes.

    ``counts[n-1]`` is ``h(n)``.  The sequence is ``gamma (1 + c1/n + c2/n^2 + ...)``,
    so each Richardson level on a doubling grid removes one power of ``1/n``.
    """
    level = [_scaled(counts[n - 1], n, rho) for n in sizes]
    p = 1
    while len(level) > 1:
        f = 2.0**p
        level = [(f * b - a) / (f - 1.0) for a, b in zip(level, level[1:])]
        p += 1
    return level[0]


def caterpillar_table_csv(ks) -> str:
    """``k,lambda,alpha,growth`` rows for caterpillar trees."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "lambda", "alpha", "growth"])
    for k in ks:
        c = caterpillar_closed_form(k)
        w.writerow([k, repr(c.lam), repr(c.alpha), repr(c.growth)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Extremal shapes


@dataclass(frozen=True)
class ShapeReport:
    """UDL growth over the shapes of size ``k``.

    ``caterpillar_max`` holds when the caterpillar beats every other shape
    by more than ``margin`` (relative), ``balanced_min`` likewise for the
    most balanced shape from below.  ``counterexamples`` lists the shapes
    (Newick) that break either claim.
    """

    k: int
    shapes: int
    exhaustive: bool
    caterpillar_growth: float
    balanced_growth: float
    max_growth: float
    min_growth: float
    caterpillar_max: bool
    balanced_min: bool
    counterexamples: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return self.caterpillar_max and self.balanced_min


def extremal_shape_report(
    k: int,
    exhaustive_limit: int = 10,
    samples: int = 200,
    seed: int = 0,
    margin: float = 1e-9,
) -> ShapeReport:
    """Compare UDL growth of caterpillar and balanced shapes with all others."""
    cat, bal = caterpillar(k), balanced(k)
    cat_key, bal_key = cat.shape(ordered=False), bal.shape(ordered=False)
    exhaustive = k <= exhaustive_limit
    if exhaustive:
        trees = tree_shapes(k, ordered=False)
    else:
        rng = random.Random(seed)
        trees = [random_tree(k, rng) for _ in range(samples)] + [cat, bal]
    g_cat = 1.0 / dominant_singularity_udl(cat)
    g_bal = 1.0 / dominant_singularity_udl(bal)
    growths = []
    bad = []
    cat_ok = bal_ok = True
    for t in trees:
        g = 1.0 / dominant_singularity_udl(t)
        growths.append(g)
        key = t.shape(ordered=False)
        if key != cat_key and g >= g_cat * (1 - margin):
            cat_ok = False
            bad.append(t.to_newick())
        if key != bal_key and g <= g_bal * (1 + margin):
            bal_ok = False
            bad.append(t.to_newick())
    return ShapeReport(
        k=k,
        shapes=len(trees),
        exhaustive=exhaustive,
        caterpillar_growth=g_cat,
        balanced_growth=g_bal,
        max_growth=max(growths),
        min_growth=min(growths),
        caterpillar_max=cat_ok,
        balanced_min=bal_ok,
        counterexamples=tuple(bad),
    )
