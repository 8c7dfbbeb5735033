"""Polymer-gas Mayer expansion on a finite monomer set.

A gas is a finite monomer set plus an activity A(P) for each polymer
(nonempty monomer subset; unlisted polymers have activity zero).  The
partition function sums over unordered collections of pairwise-disjoint
polymers; its logarithm has the tree expansion

    log Z = sum_n 1/n! sum_(trees T) sum_(ordered tuples P_1..P_n)
            prod A(P_i) * eps^T,

    eps^T = (prod_(l in T) eta_l) * int dw prod_(l not in T) (1 + eta_l X_l(w)),

where eta_l is -1 when the two polymers intersect and 0 otherwise, and
X_l(w) is the min-over-tree-path interpolation of the previous modules.
Replica tuples may repeat a polymer; a polymer intersects itself, so
repeated entries simply carry eta = -1.

eps^T depends on the tuple only through the intersection pattern, so the
w-integrals are cached per (tree, pattern); on every ordering cell the
integrand is a polynomial, making moderate Gauss-Legendre exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .combinatorics import enumerate_trees
from .interpolation import gauss_legendre_01

DIRECT_BUDGET = 8
ORDER_BUDGET = 5
MONOMER_BUDGET = 6


@dataclass(frozen=True)
class PolymerGas:
    monomers: frozenset
    activities: dict

    def __post_init__(self):
        for poly in self.activities:
            if not poly:
                raise ValueError("polymers must be nonempty")
            if not frozenset(poly) <= self.monomers:
                raise ValueError(f"polymer {set(poly)} leaves the monomer set")

    def support(self) -> list[tuple[frozenset, complex]]:
        """Polymers with nonzero activity, in a deterministic order."""
        items = [(frozenset(p), a) for p, a in self.activities.items() if a != 0]
        return sorted(items, key=lambda t: (len(t[0]), sorted(t[0])))


def polymer_z_direct(gas: PolymerGas) -> complex:
    """Partition function by enumeration of disjoint polymer collections."""
    if len(gas.monomers) > DIRECT_BUDGET:
        raise ValueError(f"direct enumeration budgeted to {DIRECT_BUDGET} monomers")
    support = gas.support()

    def rec(idx: int, used: frozenset) -> complex:
        if idx == len(support):
            return 1.0
        total = rec(idx + 1, used)  # skip polymer idx
        poly, act = support[idx]
        if not (poly & used):
            total += act * rec(idx + 1, used | poly)
        return total

    return rec(0, frozenset())


def convergence_condition(gas: PolymerGas, root) -> float:
    """sum over polymers containing the root of |A(P)| e^(|P|); < 1 is the
    standard absolute-convergence criterion."""
    if root not in gas.monomers:
        raise ValueError(f"root monomer {root!r} not in the gas")
    return sum(abs(a) * math.exp(len(p)) for p, a in gas.support() if root in p)


def _tree_paths(n: int, edges) -> dict:
    """Map each vertex pair to the positions (into edges) of its tree path."""
    from .combinatorics import Forest

    forest = Forest(n, frozenset(edges))
    pos = {e: i for i, e in enumerate(edges)}
    out = {}
    for pair in combinations(range(n), 2):
        path = forest.path_edges(*pair)
        out[pair] = tuple(pos[e] for e in path)
    return out


def _epsilon_tree_factor(n: int, tree_edges, eta_minus: frozenset, gl_order: int) -> float:
    """eps^T for intersection pattern eta_minus (pairs with eta = -1).

    Zero unless every tree edge intersects; otherwise (-1)^(n-1) times the
    w-integral of prod over non-tree intersecting pairs of (1 - X_l(w)).
    The integrand is a per-cell polynomial, so the quadrature is exact.
    """
    for e in tree_edges:
        if e not in eta_minus:
            return 0.0
    if n == 1:
        return 1.0
    nontree = [e for e in combinations(range(n), 2) if e not in tree_edges and e in eta_minus]
    sign = (-1.0) ** len(tree_edges)
    edges = sorted(tree_edges)
    k = len(edges)
    paths = _tree_paths(n, edges)
    nodes, wts = gauss_legendre_01(gl_order)
    from itertools import permutations

    if k == 1:
        val = np.ones_like(nodes)
        for pair in nontree:
            val = val * (1.0 - nodes)
        return sign * float(np.sum(wts * val))
    grids = np.meshgrid(*([nodes] * k), indexing="ij")
    v = np.stack([g.ravel() for g in grids], axis=1)
    wflat = np.ones(v.shape[0])
    for axis in range(k):
        wflat *= np.meshgrid(*([wts] * k), indexing="ij")[axis].ravel()
    t = np.empty_like(v)
    t[:, k - 1] = v[:, k - 1]
    for m in range(k - 2, -1, -1):
        t[:, m] = v[:, m] * t[:, m + 1]
    jac = np.ones(v.shape[0])
    for m in range(1, k):
        jac *= v[:, m] ** m
    total = 0.0
    for perm in permutations(range(k)):
        w_cols = np.empty_like(t)
        for rank, pos in enumerate(perm):
            w_cols[:, pos] = t[:, rank]
        val = wflat * jac
        for pair in nontree:
            val = val * (1.0 - np.min(w_cols[:, list(paths[pair])], axis=1))
        total += float(val.sum())
    return sign * total


def mayer_order_term(gas: PolymerGas, n: int, gl_order: int = 8, _cache=None) -> complex:
    """The order-n tree sum (1/n! included)."""
    if n < 1:
        raise ValueError("order must be >= 1")
    if n > ORDER_BUDGET:
        raise ValueError(f"order budgeted to {ORDER_BUDGET}")
    if len(gas.monomers) > MONOMER_BUDGET:
        raise ValueError(f"tree expansion budgeted to {MONOMER_BUDGET} monomers")
    support = gas.support()
    if not support:
        return 0.0
    cache = _cache if _cache is not None else {}
    intersects = {
        (i, j): bool(support[i][0] & support[j][0])
        for i in range(len(support))
        for j in range(i, len(support))
    }
    trees = [tuple(sorted(t.edges)) for t in enumerate_trees(n)]
    total = 0.0 + 0.0j
    from itertools import product as iproduct

    for tuple_idx in iproduct(range(len(support)), repeat=n):
        act = 1.0 + 0.0j
        for i in tuple_idx:
            act *= support[i][1]
        if act == 0:
            continue
        eta_minus = frozenset(
            (a, b)
            for a, b in combinations(range(n), 2)
            if intersects[tuple(sorted((tuple_idx[a], tuple_idx[b])))]
        )
        tree_sum = 0.0
        for tree in trees:
            key = (tree, eta_minus)
            if key not in cache:
                cache[key] = _epsilon_tree_factor(n, tree, eta_minus, gl_order)
            tree_sum += cache[key]
        total += act * tree_sum
    return total / math.factorial(n)


def mayer_logz(gas: PolymerGas, n_max: int, gl_order: int = 8) -> complex:
    """Partial sum of the tree expansion of log Z through order n_max."""
    cache: dict = {}
    return sum(mayer_order_term(gas, n, gl_order, cache) for n in range(1, n_max + 1))
