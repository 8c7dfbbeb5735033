"""Order-by-order assembly of log Z from the two-level jungle formula.

Each spanning jungle and slice assignment contributes

    (Fermionic factor integrated over its edge weights)
    x prod over Bosonic blocks of the w-integrated block Gaussian integral,

and order n is 1/n! times the sum over jungles and slice assignments.
The Fermionic weights enter only the lifted Y matrix and the Bosonic
weights only their own block's covariance, so the two integrals
factorize exactly.

Structural zeros are returned exactly: a block with a repeated slice, or
a Fermionic edge joining different slices, never reaches quadrature.

Block Gaussian integrals use eigendecomposition of the interpolated
covariance (eigenvalues below 1e-12 are truncated, which only matters on
the boundary w = 1) and tensor Gauss-Hermite nodes; weight integrals use
Gauss-Legendre on ordering-simplex cells, where the min() interpolation
is smooth.  Values are cached on the isomorphism class of the decorated
block tree, which collapses the slice-assignment sum to a few distinct
integrals per order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations, product

import numpy as np

from .combinatorics import Jungle, enumerate_jungles, norm_edge
from .errors import BudgetExceededError
from .grassmann import (
    FermionicFactorInput,
    fermionic_factor,
    hardcore_violated,
    slice_delta_violated,
)
from .interpolation import gauss_legendre_01, min_over_paths
from .model_core import ModelParams, dw_grid
from .oracle import gauss_hermite_norm

ORDER_BUDGET = 4
BLOCK_BUDGET = 4


def default_gh_nodes() -> dict[int, int]:
    # 64 nodes per dimension up to three vertices per block, 32 at four
    return {1: 64, 2: 64, 3: 64, 4: 32}


@dataclass
class EngineOptions:
    gh_nodes: dict[int, int] = field(default_factory=default_gh_nodes)
    gl_nodes: int = 12
    eig_floor: float = 1e-12
    w_chunk: int = 4
    threads: int = 1

    def nodes_for(self, block_size: int) -> int:
        return self.gh_nodes.get(block_size, 32)


def bosonic_block_value(block, tree_edges, slices, weights, params: ModelParams, options: EngineOptions | None = None) -> complex:
    """E[prod_a (d^(d_a) W_(j_a))(sigma_a)] at a fixed interpolation point.

    block lists global vertex ids; tree_edges must span it; d_a is the
    tree degree (0 for a singleton).  sigma has the centered Gaussian law
    with covariance X restricted to the block.
    """
    options = options or EngineOptions()
    verts = sorted(block)
    b = len(verts)
    if b > BLOCK_BUDGET:
        raise BudgetExceededError(f"block size {b} > {BLOCK_BUDGET}")
    local = {v: i for i, v in enumerate(verts)}
    edges = [norm_edge(local[u], local[v]) for u, v in tree_edges]
    if len(edges) != b - 1:
        raise ValueError("tree must span the block")
    degrees = [0] * b
    for u, v in edges:
        degrees[u] += 1
        degrees[v] += 1
    wloc = {norm_edge(local[u], local[v]): w for (u, v), w in weights.items()}
    X = min_over_paths(b, edges, wloc)
    js = [slices[v] for v in verts]
    return _gaussian_block_expectation(X, js, degrees, params, options)


def _gaussian_block_expectation(X: np.ndarray, js, degrees, params: ModelParams, options: EngineOptions) -> complex:
    """Tensor Gauss-Hermite expectation over the (possibly degenerate) X."""
    b = X.shape[0]
    vals, vecs = np.linalg.eigh(X)
    keep = vals > options.eig_floor
    L = vecs[:, keep] * np.sqrt(vals[keep])
    rank = int(keep.sum())
    nodes = options.nodes_for(b)
    xi, wts = gauss_hermite_norm(nodes)
    if rank == 0:
        sigma = np.zeros((b, 1))
        gh_w = np.ones(1)
    else:
        grids = np.meshgrid(*([xi] * rank), indexing="ij")
        pts = np.stack([g.ravel() for g in grids])  # (rank, nodes^rank)
        sigma = L @ pts
        gh_w = np.ones(pts.shape[1])
        for axis in range(rank):
            wgrid = np.meshgrid(*([wts] * rank), indexing="ij")[axis].ravel()
            gh_w *= wgrid
    integrand = np.ones(sigma.shape[1], dtype=complex)
    for a in range(b):
        integrand = integrand * dw_grid(params, js[a], degrees[a], sigma[a])
    return complex(np.sum(gh_w * integrand))


def _simplex_points(k: int, order: int):
    """All (w-vector, weight) quadrature points of the ordering cells.

    Returns arrays of shape (P, k) and (P,).  Nodes are interior, so the
    interpolated covariances stay strictly positive definite.
    """
    nodes, wts = gauss_legendre_01(order)
    if k == 0:
        return np.zeros((1, 0)), np.ones(1)
    if k == 1:
        return nodes.reshape(-1, 1), wts.copy()
    grids = np.meshgrid(*([nodes] * k), indexing="ij")
    v = np.stack([g.ravel() for g in grids], axis=1)  # (order^k, k)
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
    all_w = []
    all_weights = []
    for perm in permutations(range(k)):
        w_pts = np.empty_like(t)
        for rank, pos in enumerate(perm):
            w_pts[:, pos] = t[:, rank]
        all_w.append(w_pts)
        all_weights.append(wflat * jac)
    return np.concatenate(all_w), np.concatenate(all_weights)


class TermEvaluator:
    """Caches block integrals across the jungle and slice sums."""

    def __init__(self, params: ModelParams, options: EngineOptions | None = None):
        self.params = params
        self.options = options or EngineOptions()
        self._block_cache: dict = {}

    # -- bosonic side --------------------------------------------------------

    def _canonical_block_key(self, edges, js):
        b = len(js)
        best = None
        for perm in permutations(range(b)):
            e = tuple(sorted(norm_edge(perm[u], perm[v]) for u, v in edges))
            lab = tuple(js[perm.index(i)] for i in range(b))
            cand = (e, lab)
            if best is None or cand < best:
                best = cand
        return best

    def block_integral(self, block, tree_edges, slices) -> complex:
        """The block Gaussian integral, integrated over its tree weights."""
        verts = sorted(block)
        b = len(verts)
        if b > BLOCK_BUDGET:
            raise BudgetExceededError(f"block size {b} > {BLOCK_BUDGET}")
        local = {v: i for i, v in enumerate(verts)}
        edges = [norm_edge(local[u], local[v]) for u, v in tree_edges]
        js = tuple(slices[v] for v in verts)
        key = self._canonical_block_key(edges, js)
        if key in self._block_cache:
            return self._block_cache[key]
        value = self._integrate_block(b, edges, js)
        self._block_cache[key] = value
        return value

    def _integrate_block(self, b, edges, js) -> complex:
        opts = self.options
        degrees = [0] * b
        for u, v in edges:
            degrees[u] += 1
            degrees[v] += 1
        if b == 1:
            return _gaussian_block_expectation(np.eye(1), js, degrees, self.params, opts)
        w_pts, w_weights = _simplex_points(len(edges), opts.gl_nodes)
        nodes = opts.nodes_for(b)
        xi, wts = gauss_hermite_norm(nodes)
        grids = np.meshgrid(*([xi] * b), indexing="ij")
        pts = np.stack([g.ravel() for g in grids])  # (b, nodes^b)
        gh_w = np.ones(pts.shape[1])
        for axis in range(b):
            gh_w *= np.meshgrid(*([wts] * b), indexing="ij")[axis].ravel()
        total = 0.0 + 0.0j
        for lo in range(0, w_pts.shape[0], opts.w_chunk):
            chunk = w_pts[lo : lo + opts.w_chunk]
            cw = w_weights[lo : lo + opts.w_chunk]
            xs = np.empty((chunk.shape[0], b, b))
            for i, wv in enumerate(chunk):
                xs[i] = min_over_paths(b, edges, dict(zip(edges, wv)))
            vals, vecs = np.linalg.eigh(xs)
            vals = np.clip(vals, 0.0, None)
            L = vecs * np.sqrt(vals)[:, None, :]
            sigma = L @ pts  # (chunk, b, nodes^b)
            integrand = np.ones((chunk.shape[0], pts.shape[1]), dtype=complex)
            for a in range(b):
                integrand = integrand * dw_grid(self.params, js[a], degrees[a], sigma[:, a, :])
            total += np.sum(cw * (integrand @ gh_w))
        return complex(total)

    # -- fermionic side ------------------------------------------------------

    def fermionic_integral(self, jungle: Jungle, slices) -> float:
        edges = sorted(jungle.fermionic)
        k = len(edges)
        if k == 0:
            return fermionic_factor(FermionicFactorInput(jungle, tuple(slices), {}))
        w_pts, w_weights = _simplex_points(k, self.options.gl_nodes)
        total = 0.0
        for wv, ww in zip(w_pts, w_weights):
            weights = dict(zip(edges, wv))
            total += ww * fermionic_factor(FermionicFactorInput(jungle, tuple(slices), weights))
        return total

    # -- full terms ----------------------------------------------------------

    def jungle_term(self, jungle: Jungle, slices) -> complex:
        slices = tuple(slices)
        if hardcore_violated(jungle, slices) or slice_delta_violated(jungle, slices):
            return 0j
        ferm = self.fermionic_integral(jungle, slices)
        if ferm == 0.0:
            return 0j
        value = complex(ferm)
        part = jungle.partition()
        for block in part.blocks:
            tree_edges = [e for e in jungle.bosonic.edges if e[0] in block]
            value *= self.block_integral(block, tree_edges, slices)
        return value

    def order_terms(self, n: int):
        """Yield (jungle, slices, value) over all contributions at order n."""
        if n > ORDER_BUDGET:
            raise BudgetExceededError(f"order {n} > budget {ORDER_BUDGET}")
        for jungle in enumerate_jungles(n, spanning=True):
            for slices in product(self.params.slices, repeat=n):
                yield jungle, slices, self.jungle_term(jungle, slices)

    def order_contribution(self, n: int) -> complex:
        if self.options.threads > 1:
            return self._order_contribution_parallel(n)
        total = 0j
        for _, _, value in self.order_terms(n):
            total += value
        return total / math.factorial(n)

    def _order_contribution_parallel(self, n: int) -> complex:
        from concurrent.futures import ThreadPoolExecutor

        if n > ORDER_BUDGET:
            raise BudgetExceededError(f"order {n} > budget {ORDER_BUDGET}")
        work = [
            (jungle, slices)
            for jungle in enumerate_jungles(n, spanning=True)
            for slices in product(self.params.slices, repeat=n)
        ]
        with ThreadPoolExecutor(max_workers=self.options.threads) as pool:
            values = list(pool.map(lambda args: self.jungle_term(*args), work))
        return sum(values, start=0j) / math.factorial(n)


@dataclass
class TruncationResult:
    orders: list[complex]
    partial_sums: list[complex]

    @property
    def total(self) -> complex:
        return self.partial_sums[-1] if self.partial_sums else 0j

    def distances_to(self, reference: complex) -> list[float]:
        return [abs(s - reference) for s in self.partial_sums]


def jungle_term(jungle: Jungle, slices, params: ModelParams, options: EngineOptions | None = None) -> complex:
    return TermEvaluator(params, options).jungle_term(jungle, slices)


def order_contribution(n: int, params: ModelParams, options: EngineOptions | None = None) -> complex:
    return TermEvaluator(params, options).order_contribution(n)


def logz_truncation(n_max: int, params: ModelParams, options: EngineOptions | None = None) -> TruncationResult:
    """Partial sums S_1..S_(n_max) of the jungle expansion of log Z."""
    if n_max > ORDER_BUDGET:
        raise BudgetExceededError(f"order {n_max} > budget {ORDER_BUDGET}")
    ev = TermEvaluator(params, options)
    orders: list[complex] = []
    sums: list[complex] = []
    running = 0j
    for n in range(1, n_max + 1):
        val = ev.order_contribution(n)
        orders.append(val)
        running += val
        sums.append(running)
    return TruncationResult(orders, sums)
