"""Exact reference values for the partition function.

In the intermediate-field representation Z is a one-dimensional Gaussian
integral,

    Z(lam, N) = int dnu(sigma) prod_p 1/(1 - i lam sigma/p) e^(-i lam sigma/p),

with p running over the full slice window.  Gauss-Hermite quadrature of
moderate order nails it to machine precision at desk scale; reliability
is defined operationally by node doubling.  The module also extracts the
low-order coefficients of log Z as a series in the quartic coupling
g = lam^2, by exact rational series manipulation of the integrand.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermitenorm

from . import numerics
from .errors import QuadratureUnreliableError
from .model_core import ModelParams

DOUBLING_TOL = 1e-10


@lru_cache(maxsize=None)
def gauss_hermite_norm(nodes: int):
    """Probabilists' Gauss-Hermite rule normalized to the N(0,1) measure.

    scipy's Golub-Welsch route stays finite at high node counts where the
    numpy recurrence overflows.
    """
    x, w = roots_hermitenorm(nodes)
    return x, w / math.sqrt(2.0 * math.pi)


def _z_value(params: ModelParams, nodes: int, sliced: bool) -> complex:
    lam = complex(params.lam)
    if lam == 0:
        return 1.0 + 0.0j  # integrand identically 1 under the normalized measure
    x, w = gauss_hermite_norm(nodes)
    if sliced:
        vals = np.ones_like(x, dtype=complex)
        for j in params.slices:
            sl = params.slice_set(j)
            vals = vals * numerics.exp_minus_v_range(lam, sl.lo, sl.hi, x)
    else:
        vals = numerics.exp_minus_v_range(lam, params.p_lo, params.cutoff, x)
    return complex(np.sum(w * vals))


def z_sigma_quadrature(params: ModelParams, nodes: int = 200) -> complex:
    """Gauss-Hermite value of Z over the full index window."""
    if nodes < 50:
        raise ValueError("need at least 50 quadrature nodes")
    return _z_value(params, nodes, sliced=False)


def z_sigma_quadrature_sliced(params: ModelParams, nodes: int = 200) -> complex:
    """Same integral with the slice-factorized form of the integrand."""
    if nodes < 50:
        raise ValueError("need at least 50 quadrature nodes")
    return _z_value(params, nodes, sliced=True)


def node_doubling_delta(params: ModelParams, nodes: int = 200) -> float:
    """|Z(nodes) - Z(2*nodes)|, the self-convergence measure."""
    return abs(z_sigma_quadrature(params, nodes) - z_sigma_quadrature(params, 2 * nodes))


def z_reliable(params: ModelParams, nodes: int = 200) -> tuple[complex, float, bool]:
    """Value at 2*nodes, the doubling delta, and the reliability verdict."""
    a = z_sigma_quadrature(params, nodes)
    b = z_sigma_quadrature(params, 2 * nodes)
    delta = abs(a - b)
    return b, delta, delta < DOUBLING_TOL


def logz_oracle(params: ModelParams, nodes: int = 200) -> complex:
    """Principal log of the quadrature Z; raises if the quadrature is not
    node-doubling stable or Z is too close to 0 for a meaningful log."""
    z, delta, ok = z_reliable(params, nodes)
    if not ok:
        raise QuadratureUnreliableError(
            f"node doubling moved Z by {delta:.3e} (tolerance {DOUBLING_TOL:.0e})"
        )
    if abs(z) < 1e-8:
        raise ValueError(f"Z = {z} too close to zero for a stable logarithm")
    return cmath.log(z)


def logz_scan(lams, M: int, j_min: int, j_max: int, nodes: int = 200) -> list[complex]:
    """log Z along a path of couplings, branch-tracked for continuity.

    The first coupling should be small enough that the principal branch is
    correct there (log Z -> 0 as lam -> 0); subsequent points unwind any
    2*pi jump relative to their predecessor.
    """
    out: list[complex] = []
    prev = 0.0 + 0.0j
    for lam in lams:
        z, _, ok = z_reliable(ModelParams(lam, M, j_min, j_max), nodes)
        if not ok:
            raise QuadratureUnreliableError(f"unreliable quadrature at lam = {lam}")
        val = cmath.log(z)
        k = round((prev.imag - val.imag) / (2.0 * math.pi))
        val += 2j * math.pi * k
        out.append(val)
        prev = val
    return out


# --- perturbative coefficients ----------------------------------------------


def _series_exp(coeffs: list[Fraction], order: int) -> list[Fraction]:
    """exp of a power series with zero constant term, truncated."""
    out = [Fraction(0)] * (order + 1)
    out[0] = Fraction(1)
    # exp(A)' = A' exp(A):  (n+1) e_(n+1) = sum_k (k+1) a_(k+1) e_(n-k)
    for n in range(order):
        acc = Fraction(0)
        for k in range(n + 1):
            if k + 1 <= order:
                acc += (k + 1) * coeffs[k + 1] * out[n - k]
        out[n + 1] = acc / (n + 1)
    return out


def _series_log1p(coeffs: list[Fraction], order: int) -> list[Fraction]:
    """log(1 + A) for a series A with zero constant term, truncated."""
    out = [Fraction(0)] * (order + 1)
    power = [Fraction(0)] * (order + 1)
    power[0] = Fraction(1)
    for m in range(1, order + 1):
        nxt = [Fraction(0)] * (order + 1)
        for i in range(order + 1):
            if power[i] == 0:
                continue
            for jj in range(1, order + 1 - i):
                nxt[i + jj] += power[i] * coeffs[jj]
        power = nxt
        sign = Fraction(-1) ** (m + 1)
        for i in range(order + 1):
            out[i] += sign * power[i] / m
    return out


def logz_series_g(p_lo: int, p_hi: int, order: int) -> list[Fraction]:
    """Coefficients c_1..c_order of log Z = sum c_k g^k, exact rationals.

    With z = i lam sigma, the interaction exponent is
    -V = sum_(k>=2) u_k z^k / k, u_k = sum_p p^(-k); exp(-V) is a series
    in z with rational coefficients h_t, and the Gaussian average kills
    odd powers while even ones pick up (2m-1)!! and a factor (-1)^m from
    i^(2m), leaving a real rational series in g.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if p_lo > p_hi:
        return [Fraction(0)] * order
    zmax = 2 * order
    u = {k: sum(Fraction(1, p**k) for p in range(p_lo, p_hi + 1)) for k in range(2, zmax + 1)}
    minus_v = [Fraction(0)] * (zmax + 1)
    for k in range(2, zmax + 1):
        minus_v[k] = u[k] / k
    h = _series_exp(minus_v, zmax)
    # Z = 1 + sum_(m>=1) h_(2m) (-1)^m (2m-1)!! g^m
    z_tail = [Fraction(0)] * (order + 1)
    for m in range(1, order + 1):
        dfact = math.factorial(2 * m) // (2**m * math.factorial(m))  # (2m-1)!!
        z_tail[m] = h[2 * m] * Fraction((-1) ** m) * dfact
    logz = _series_log1p(z_tail, order)
    return logz[1:]


def perturbative_coefficients(params: ModelParams, order: int) -> list[complex]:
    """First coefficients of log Z in g = lam^2; they depend only on the
    index window, not on how it is cut into slices."""
    if order > 4:
        raise ValueError("perturbative order budgeted to 4")
    exact = logz_series_g(params.p_lo, params.cutoff, order)
    return [complex(c) for c in exact]
