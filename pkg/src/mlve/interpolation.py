"""Forest-formula interpolation: min-over-path covariances and identities.

The interpolated matrix X^F(w) has unit diagonal and X_ij equal to the
smallest weakening parameter along the unique forest path from i to j
(zero across components).  Such matrices are positive; the layered
decomposition below exhibits them directly as a nonnegative combination
of rank-one block indicators.

``forest_formula_eval`` checks the Taylor-with-remainder identity
f(all-ones) = sum over forests of the w-integrated forest derivative,
and ``replica_gaussian_eval`` its Gaussian-replica corollary for
polynomial integrands, where everything reduces to exact Wick pairings.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import permutations

import numpy as np

from .combinatorics import Forest, enumerate_forests, norm_edge


def _validate_weights(edges, weights) -> None:
    if set(weights) != set(edges):
        raise ValueError("interpolation point must cover exactly the forest edges")
    for e, w in weights.items():
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"weight {w} for edge {e} outside [0, 1]")


def min_over_paths(n: int, edges, weights) -> np.ndarray:
    """Unit-diagonal matrix of path minima for an arbitrary forest graph."""
    adj: dict[int, list] = {v: [] for v in range(n)}
    for u, v in edges:
        adj[u].append((v, weights[(u, v)]))
        adj[v].append((u, weights[(u, v)]))
    out = np.zeros((n, n))
    for root in range(n):
        out[root, root] = 1.0
        stack = [(root, 1.0)]
        seen = {root}
        while stack:
            node, cur = stack.pop()
            for nxt, w in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    m = min(cur, w)
                    out[root, nxt] = m
                    stack.append((nxt, m))
    return out


def x_matrix(forest: Forest, weights: dict) -> np.ndarray:
    """Interpolated covariance X^F(w) on the forest's vertices."""
    _validate_weights(forest.edges, weights)
    return min_over_paths(forest.n, forest.edges, weights)


def block_matrix(n: int, blocks) -> np.ndarray:
    """X^Pi: 1 on same-block pairs, 0 across blocks."""
    out = np.zeros((n, n))
    for b in blocks:
        for i in b:
            for j in b:
                out[i, j] = 1.0
    return out


def y_block_matrix(num_blocks: int, fermionic_edges, weights: dict) -> np.ndarray:
    """Block-level interpolated matrix Y(w) from Fermionic tree weights."""
    edges = [norm_edge(*e) for e in fermionic_edges]
    if len(set(edges)) != len(edges):
        raise ValueError("duplicate Fermionic block edge")
    f = Forest(num_blocks, frozenset(edges))  # validates acyclicity
    _validate_weights(f.edges, {norm_edge(*e): w for e, w in weights.items()})
    return min_over_paths(num_blocks, edges, {e: weights.get(e, weights.get((e[1], e[0]))) for e in edges})


def layered_decomposition(n: int, edges, weights):
    """Write the min-over-path matrix as sum_i c_i * sum_f 1_f 1_f^T.

    Sort the weights decreasingly (w_0 := 1, w_(k+1) := 0); after the i
    largest edges are switched on, the graph splits into components f and
    the matrix gains (w_i - w_(i+1)) on every same-component pair.  All
    coefficients are nonnegative, so positivity is manifest.
    """
    order = sorted(edges, key=lambda e: -weights[e])
    levels = [1.0] + [weights[e] for e in order] + [0.0]
    terms = []
    for i in range(len(order) + 1):
        coeff = levels[i] - levels[i + 1]
        comps = _components(n, order[:i])
        if coeff > 0:
            terms.append((coeff, comps))
    return terms


def _components(n: int, edges):
    from .combinatorics import _components_of

    return _components_of(n, edges)


def reconstruct_from_layers(n: int, terms) -> np.ndarray:
    out = np.zeros((n, n))
    for coeff, comps in terms:
        for comp in comps:
            idx = np.array(sorted(comp))
            out[np.ix_(idx, idx)] += coeff
    return out


def min_eigenvalue(mat: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(mat).min())


def is_positive_semidefinite(mat: np.ndarray, tol: float = 1e-12) -> bool:
    return min_eigenvalue(mat) >= -tol


# --- quadrature over the weakening parameters ------------------------------


@lru_cache(maxsize=None)
def gauss_legendre_01(order: int):
    """Gauss-Legendre nodes and weights shifted to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def integrate_unit_cube(f, k: int, order: int):
    """Integrate f(w) over [0,1]^k, splitting along coordinate orderings.

    Within each ordering cell every min() of coordinates is a single
    coordinate, so the integrand is smooth there.  The cell with
    w_(pi[0]) <= ... <= w_(pi[k-1]) is mapped from the unit cube through
    t_m = prod_{i>=m} v_i with Jacobian prod_m v_m^m.
    """
    if k == 0:
        return f(())
    nodes, wts = gauss_legendre_01(order)
    if k == 1:
        return sum(w * f((x,)) for x, w in zip(nodes, wts))
    total = 0.0
    grids = np.meshgrid(*([nodes] * k), indexing="ij")
    wgrid = np.ones([order] * k)
    for axis in range(k):
        shape = [1] * k
        shape[axis] = order
        wgrid = wgrid * wts.reshape(shape)
    v = np.stack([g.ravel() for g in grids])  # (k, order^k)
    weights_flat = wgrid.ravel()
    # ascending t values and the ordering Jacobian
    t = np.empty_like(v)
    t[k - 1] = v[k - 1]
    for m in range(k - 2, -1, -1):
        t[m] = v[m] * t[m + 1]
    jac = np.ones_like(weights_flat)
    for m in range(1, k):
        jac = jac * v[m] ** m
    for perm in permutations(range(k)):
        w_vec = np.empty_like(t)
        for rank, pos in enumerate(perm):
            w_vec[pos] = t[rank]
        for col in range(w_vec.shape[1]):
            total += weights_flat[col] * jac[col] * f(tuple(w_vec[:, col]))
    return total


# --- interpolation identities ------------------------------------------------


class ExpEdgeFunction:
    """f(X) = exp(sum_l c_l X_l) over chosen off-diagonal entries."""

    def __init__(self, n: int, coeffs: dict):
        self.n = n
        self.coeffs = {norm_edge(*e): c for e, c in coeffs.items()}

    def value(self, X: np.ndarray) -> float:
        s = sum(c * X[e[0], e[1]] for e, c in self.coeffs.items())
        return math.exp(s)

    def forest_derivative(self, edges, X: np.ndarray) -> float:
        prod = 1.0
        for e in edges:
            prod *= self.coeffs.get(norm_edge(*e), 0.0)
        return prod * self.value(X)


class MonomialEdgeFunction:
    """f(X) = prod_l X_l^(k_l) over chosen off-diagonal entries."""

    def __init__(self, n: int, powers: dict):
        self.n = n
        self.powers = {norm_edge(*e): int(k) for e, k in powers.items()}

    def value(self, X: np.ndarray) -> float:
        prod = 1.0
        for e, k in self.powers.items():
            prod *= X[e[0], e[1]] ** k
        return prod

    def forest_derivative(self, edges, X: np.ndarray) -> float:
        edges = {norm_edge(*e) for e in edges}
        prod = 1.0
        for e, k in self.powers.items():
            x = X[e[0], e[1]]
            if e in edges:
                if k == 0:
                    return 0.0
                prod *= k * x ** (k - 1)
            else:
                prod *= x**k
        for e in edges:
            if e not in self.powers:
                return 0.0
        return prod


class TabulatedEdgeFunction:
    """Caller-supplied value and mixed partials keyed by frozen edge sets."""

    def __init__(self, value_fn, partials: dict):
        self._value = value_fn
        self._partials = {frozenset(norm_edge(*e) for e in k): fn for k, fn in partials.items()}

    def value(self, X):
        return self._value(X)

    def forest_derivative(self, edges, X):
        key = frozenset(norm_edge(*e) for e in edges)
        if not key:
            return self._value(X)
        if key not in self._partials:
            raise ValueError(f"no derivative closure supplied for edge set {sorted(key)}")
        return self._partials[key](X)


def forest_formula_eval(n: int, func, quadrature_order: int = 16) -> float:
    """sum over forests of int dw (partial_F f)[X^F(w)]; equals f(all-ones)."""
    if n > 5:
        raise ValueError("forest formula evaluation budgeted to n <= 5")
    total = 0.0
    for forest in enumerate_forests(n):
        edges = sorted(forest.edges)

        def cell(w_tuple, edges=edges, forest=forest):
            weights = dict(zip(edges, w_tuple))
            X = x_matrix(forest, weights)
            return func.forest_derivative(edges, X)

        total += integrate_unit_cube(cell, len(edges), quadrature_order)
    return total


# --- polynomial Wick calculus for the replica corollary ---------------------


def poly_product(polys: list[dict], nvars: int) -> dict:
    out = {(0,) * nvars: 1.0}
    for p in polys:
        nxt: dict = {}
        for e1, c1 in out.items():
            for e2, c2 in p.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                nxt[key] = nxt.get(key, 0.0) + c1 * c2
        out = nxt
    return out


def poly_diff(poly: dict, var: int) -> dict:
    out: dict = {}
    for e, c in poly.items():
        if e[var] > 0:
            key = tuple(x - 1 if i == var else x for i, x in enumerate(e))
            out[key] = out.get(key, 0.0) + c * e[var]
    return out


def _wick(indices: tuple, cov: np.ndarray) -> float:
    if not indices:
        return 1.0
    if len(indices) % 2:
        return 0.0
    first, rest = indices[0], indices[1:]
    total = 0.0
    for pos in range(len(rest)):
        c = cov[first, rest[pos]]
        if c != 0.0:
            total += c * _wick(rest[:pos] + rest[pos + 1 :], cov)
    return total


def gaussian_expectation(poly: dict, cov: np.ndarray) -> float:
    """Exact centered-Gaussian expectation of a polynomial via Wick pairing."""
    total = 0.0
    for expo, coeff in poly.items():
        if coeff == 0.0:
            continue
        idx = []
        for var, p in enumerate(expo):
            idx.extend([var] * p)
        total += coeff * _wick(tuple(idx), cov)
    return total


def _expand_to_replicas(poly: dict, replica: int, n: int, ncomp: int) -> dict:
    out = {}
    for expo, coeff in poly.items():
        full = [0] * (n * ncomp)
        for p_idx, power in enumerate(expo):
            full[replica * ncomp + p_idx] = power
        out[tuple(full)] = coeff
    return out


def replica_gaussian_left(cov: np.ndarray, integrands: list[dict]) -> float:
    """Single-replica side: E[prod f_i(tau)] under covariance cov."""
    ncomp = cov.shape[0]
    prod = poly_product(list(integrands), ncomp)
    return gaussian_expectation(prod, cov)


def replica_gaussian_eval(n: int, cov: np.ndarray, integrands: list[dict], quadrature_order: int | None = None) -> float:
    """Replica forest expansion of E[prod f_i]; returns the forest-sum side.

    integrands are polynomials as {exponent tuple over components: coeff}.
    The w-integrands are polynomials in w on every ordering cell, so
    Gauss-Legendre of sufficient order makes the quadrature exact.
    """
    for f in integrands:
        if not isinstance(f, dict):
            raise TypeError("integrands must be polynomials given as exponent->coefficient maps")
    if n > 4:
        raise ValueError("replica evaluation budgeted to n <= 4")
    ncomp = cov.shape[0]
    if ncomp > 4:
        raise ValueError("covariance budgeted to 4 components")
    if len(integrands) != n:
        raise ValueError("need one integrand per replica")
    total_degree = sum(max((sum(e) for e in f), default=0) for f in integrands)
    if quadrature_order is None:
        quadrature_order = max(4, total_degree + 1)
    nvars = n * ncomp
    base = poly_product(
        [_expand_to_replicas(f, i, n, ncomp) for i, f in enumerate(integrands)], nvars
    )
    total = 0.0
    for forest in enumerate_forests(n):
        edges = sorted(forest.edges)
        poly = base
        for (i, j) in edges:
            acc: dict = {}
            for p in range(ncomp):
                for q in range(ncomp):
                    c = cov[p, q]
                    if c == 0.0:
                        continue
                    term = poly_diff(poly_diff(poly, i * ncomp + p), j * ncomp + q)
                    for e, v in term.items():
                        acc[e] = acc.get(e, 0.0) + c * v
            poly = acc

        def cell(w_tuple, poly=poly, edges=edges, forest=forest):
            weights = dict(zip(edges, w_tuple))
            X = x_matrix(forest, weights)
            big = np.kron(X, cov)
            return gaussian_expectation(poly, big)

        total += integrate_unit_cube(cell, len(edges), quadrature_order)
    return total
