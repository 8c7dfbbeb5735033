import math

import numpy as np
import pytest

from mlve.combinatorics import Forest, Jungle, empty_forest
from mlve.engine import (
    EngineOptions,
    TermEvaluator,
    bosonic_block_value,
    jungle_term,
    logz_truncation,
    order_contribution,
)
from mlve.errors import BudgetExceededError
from mlve.model_core import ModelParams, dw_grid
from mlve.oracle import gauss_hermite_norm

# coarse but converged settings for unit tests; the acceptance suite runs
# the defaults
FAST = EngineOptions(gh_nodes={1: 64, 2: 32, 3: 24, 4: 16}, gl_nodes=8)


def gh_expectation(params, j, q, nodes=200):
    """Independent 1-D quadrature of E[d^q W_j]."""
    x, w = gauss_hermite_norm(nodes)
    return complex(np.sum(w * dw_grid(params, j, q, x)))


class TestBosonicBlockValue:
    params = ModelParams(0.5, 2, 1, 3)

    def test_vanishing_coupling(self):
        val = bosonic_block_value([0], [], (1,), {}, ModelParams(0.0, 2, 1, 3), FAST)
        assert val == 0

    def test_singleton_node_doubling(self):
        p = ModelParams(0.5, 2, 1, 1)
        a = bosonic_block_value([0], [], (1,), {}, p, EngineOptions(gh_nodes={1: 100}))
        b = bosonic_block_value([0], [], (1,), {}, p, EngineOptions(gh_nodes={1: 200}))
        assert abs(a - b) < 1e-9

    def test_pair_factorizes_at_w_zero(self):
        val = bosonic_block_value(
            [0, 1], [(0, 1)], (1, 2), {(0, 1): 0.0}, self.params, EngineOptions()
        )
        product = gh_expectation(self.params, 1, 1) * gh_expectation(self.params, 2, 1)
        assert abs(val - product) < 1e-9

    def test_pair_at_w_one_collapses_to_one_dimension(self):
        # w = 1 makes the two sigmas identical; the eigendecomposition drops
        # the null direction and the value equals a 1-D integral of the
        # product of derivatives
        val = bosonic_block_value(
            [0, 1], [(0, 1)], (1, 2), {(0, 1): 1.0}, self.params, EngineOptions()
        )
        x, w = gauss_hermite_norm(200)
        direct = complex(np.sum(w * dw_grid(self.params, 1, 1, x) * dw_grid(self.params, 2, 1, x)))
        assert abs(val - direct) < 1e-9

    def test_four_block_factorizes_at_w_zero(self):
        # star tree on four vertices, all weights 0: the covariance is the
        # identity and the value splits into four 1-D integrals with the
        # star degrees (3, 1, 1, 1)
        params = ModelParams(0.3, 2, 1, 4)
        edges = [(0, 1), (0, 2), (0, 3)]
        weights = {e: 0.0 for e in edges}
        val = bosonic_block_value(
            [0, 1, 2, 3], edges, (1, 2, 3, 4), weights, params, EngineOptions()
        )
        product = gh_expectation(params, 1, 3)
        for j in (2, 3, 4):
            product *= gh_expectation(params, j, 1)
        assert abs(val - product) < 1e-9

    def test_fermionic_chain_of_four_singletons(self):
        # n = 4 all-singleton jungle with a three-edge Fermionic path;
        # exercises the k = 3 weight integral and stays under the bound
        from mlve.bounds import assemble_term_bound

        params = ModelParams(0.5, 10, 3, 6)
        jungle = Jungle(4, empty_forest(4), frozenset({(0, 1), (1, 2), (2, 3)}))
        slices = (3, 3, 3, 3)  # Fermionic deltas require equal slices
        term = jungle_term(jungle, slices, params, FAST)
        assert abs(term.imag) < 1e-12
        assert 0 < abs(term) <= assemble_term_bound(jungle, slices, 0.5, 10)

    def test_block_budget(self):
        with pytest.raises(BudgetExceededError):
            bosonic_block_value(
                [0, 1, 2, 3, 4],
                [(0, 1), (1, 2), (2, 3), (3, 4)],
                (1, 2, 3, 4, 5),
                {(0, 1): 0.5, (1, 2): 0.5, (2, 3): 0.5, (3, 4): 0.5},
                ModelParams(0.1, 2, 1, 5),
                FAST,
            )


class TestStructuralZeros:
    params = ModelParams(0.3, 2, 1, 3)

    def test_fermionic_edge_slice_mismatch(self):
        jungle = Jungle(2, empty_forest(2), frozenset({(0, 1)}))
        assert jungle_term(jungle, (1, 2), self.params, FAST) == 0j

    def test_same_block_same_slice(self):
        jungle = Jungle(2, Forest(2, frozenset({(0, 1)})), frozenset())
        assert jungle_term(jungle, (2, 2), self.params, FAST) == 0j

    def test_block_larger_than_window(self):
        # a 4-vertex block cannot take pairwise-distinct slices in a
        # 3-slice window, so every assignment vanishes identically
        tree = Forest(4, frozenset({(0, 1), (1, 2), (2, 3)}))
        jungle = Jungle(4, tree, frozenset())
        from itertools import product

        for slices in product(self.params.slices, repeat=4):
            assert jungle_term(jungle, slices, self.params, FAST) == 0j


class TestOrders:
    def test_order_one_vanishing_coupling(self):
        assert order_contribution(1, ModelParams(0.0, 2, 1, 3), FAST) == 0j

    def test_order_one_matches_quadrature(self):
        params = ModelParams(0.2, 2, 1, 3)
        val = order_contribution(1, params, FAST)
        direct = sum(gh_expectation(params, j, 0, 400) for j in params.slices)
        assert abs(val - direct) < 1e-8

    def test_orders_real_for_real_coupling(self):
        params = ModelParams(0.3, 2, 1, 2)
        for n in (1, 2):
            val = order_contribution(n, params, FAST)
            assert abs(val.imag) < 1e-10

    def test_truncation_consistency(self):
        params = ModelParams(0.25, 2, 1, 2)
        res = logz_truncation(2, params, FAST)
        o1 = order_contribution(1, params, FAST)
        o2 = order_contribution(2, params, FAST)
        assert res.orders[0] == pytest.approx(o1, abs=1e-14)
        assert res.orders[1] == pytest.approx(o2, abs=1e-14)
        assert res.partial_sums[1] == pytest.approx(o1 + o2, abs=1e-14)

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            order_contribution(5, ModelParams(0.2, 2, 1, 3), FAST)
        with pytest.raises(BudgetExceededError):
            logz_truncation(5, ModelParams(0.2, 2, 1, 3), FAST)

    def test_threaded_reduction_reproducible(self):
        params = ModelParams(0.3, 2, 1, 2)
        serial = order_contribution(2, params, FAST)
        threaded_opts = EngineOptions(
            gh_nodes=dict(FAST.gh_nodes), gl_nodes=FAST.gl_nodes, threads=2
        )
        threaded = order_contribution(2, params, threaded_opts)
        assert abs(serial - threaded) < 1e-12

    def test_complex_coupling_matches_oracle(self):
        # the generic complex kernel route, end to end: partial sums of a
        # complex coupling inside the analyticity domain approach log Z
        import cmath

        from mlve.oracle import logz_oracle

        lam = 0.25 * cmath.exp(1j * math.pi / 12)
        params = ModelParams(lam, 2, 1, 2)
        ref = logz_oracle(params, 300)
        res = logz_truncation(2, params, EngineOptions(gh_nodes={1: 100, 2: 64}, gl_nodes=10))
        errs = res.distances_to(ref)
        assert errs[1] < errs[0] / 3.0
        assert errs[1] < 5e-5

    def test_order_two_second_order_identity(self):
        # order 2 must reproduce the exact covariance-splitting identity
        # sum_{j<k}(E[W_j W_k] - E[W_j]E[W_k]) - 1/2 sum_j E[W_j]^2
        params = ModelParams(0.35, 2, 1, 2)
        x, w = gauss_hermite_norm(300)
        W = {j: dw_grid(params, j, 0, x) for j in params.slices}
        ew = {j: complex(np.sum(w * W[j])) for j in params.slices}
        expect = 0j
        slices = list(params.slices)
        for i, j1 in enumerate(slices):
            for j2 in slices[i + 1 :]:
                expect += complex(np.sum(w * W[j1] * W[j2])) - ew[j1] * ew[j2]
        expect -= 0.5 * sum(ew[j] ** 2 for j in slices)
        val = order_contribution(2, params, EngineOptions(gh_nodes={1: 100, 2: 64}))
        assert abs(val - expect) < 1e-9


class TestSimplexPoints:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_order_statistic_closed_forms(self, k):
        from mlve.engine import _simplex_points

        pts, wts = _simplex_points(k, 10)
        assert wts.sum() == pytest.approx(1.0, abs=1e-12)
        mins = pts.min(axis=1)
        assert float(wts @ mins) == pytest.approx(1.0 / (k + 1), abs=1e-12)
        assert float(wts @ mins**2) == pytest.approx(2.0 / ((k + 1) * (k + 2)), abs=1e-12)
        prods = pts.prod(axis=1)
        assert float(wts @ prods) == pytest.approx(0.5**k, abs=1e-12)


class TestTraceRecords:
    def test_order_terms_zero_tagging(self):
        params = ModelParams(0.25, 2, 1, 2)
        ev = TermEvaluator(params, FAST)
        seen = 0
        for jungle, slices, value in ev.order_terms(2):
            seen += 1
            if any(slices[u] != slices[v] for u, v in jungle.fermionic):
                assert value == 0j
        assert seen == 2 * 4  # two spanning jungles, four assignments
