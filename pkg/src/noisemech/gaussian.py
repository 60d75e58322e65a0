"""Scalar and bivariate Gaussian kit plus the closed-form large-n limits.

Everything here is deterministic and stateless. The scalar cdf rides on the
C library's erfc; its inverse and the inverse density are found by bracketed
bisection polished with Newton steps rather than any special-function
inverse, so results are bit-stable across platforms. The bivariate cdf uses
a fixed 128-node Gauss-Legendre rule on the arcsin-substituted single
integral, never Monte Carlo, because frontier tables must reproduce exactly.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI

_BISECT_WIDTH = 1e-13
_MAX_ITER = 200


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) * INV_SQRT_2PI


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_ccdf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def norm_quantile(p: float) -> float:
    """Inverse cdf on (0, 1) by expanding bracket, bisection, and Newton polish."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must lie in (0, 1), got {p}")
    lo, hi = -1.0, 1.0
    while norm_cdf(lo) > p:
        lo *= 2.0
    while norm_cdf(hi) < p:
        hi *= 2.0
    x = 0.5 * (lo + hi)
    for _ in range(_MAX_ITER):
        fx = norm_cdf(x) - p
        if fx > 0.0:
            hi = x
        elif fx < 0.0:
            lo = x
        else:
            return x
        dens = norm_pdf(x)
        nxt = x - fx / dens if dens > 0.0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if hi - lo < _BISECT_WIDTH or nxt == x:
            return nxt
        x = nxt
    return x


def gaussian_scalar(kind: str, arg: float) -> float:
    """Dispatch for the four scalar operations: pdf, cdf, ccdf, quantile."""
    if kind == "pdf":
        return norm_pdf(arg)
    if kind == "cdf":
        return norm_cdf(arg)
    if kind == "ccdf":
        return norm_ccdf(arg)
    if kind == "quantile":
        return norm_quantile(arg)
    raise ValueError(f"unknown scalar kind: {kind!r}")


def phi_inv_plus(r: float) -> float:
    """The unique t >= 0 with pdf(t) = r, for 0 < r <= 1/sqrt(2 pi).

    Closed form t = sqrt(-2 log(r sqrt(2 pi))), followed by one Newton step
    when the derivative is usable.
    """
    if not 0.0 < r <= INV_SQRT_2PI + 1e-15:
        raise ValueError(f"density inverse needs 0 < r <= 1/sqrt(2 pi), got {r}")
    t = math.sqrt(max(0.0, -2.0 * math.log(min(r, INV_SQRT_2PI) * SQRT_2PI)))
    if t > 1e-8:
        t -= (norm_pdf(t) - r) / (-t * norm_pdf(t))
    return t


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(128)


def binormal_cdf(t1: float, t2: float, rho: float) -> float:
    """P(Z1 <= t1, Z2 <= t2) for standard Gaussians with correlation rho.

    Single-integral reduction over theta with rho = sin(theta):
    Phi(t1) Phi(t2) + (1/2 pi) int_0^{asin rho} exp(-(t1^2 + t2^2
    - 2 t1 t2 sin theta) / (2 cos^2 theta)) d theta.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
    if rho == 1.0:
        return norm_cdf(min(t1, t2))
    if rho == -1.0:
        return max(0.0, norm_cdf(t1) + norm_cdf(t2) - 1.0)
    half = 0.5 * math.asin(rho)
    theta = half * (_GL_NODES + 1.0)
    cos2 = np.cos(theta) ** 2
    expo = -(t1 * t1 + t2 * t2 - 2.0 * t1 * t2 * np.sin(theta)) / (2.0 * cos2)
    integral = half * float(np.dot(_GL_WEIGHTS, np.exp(expo)))
    return norm_cdf(t1) * norm_cdf(t2) + integral / (2.0 * math.pi)


class MajorityAsymptotics(NamedTuple):
    ns: float
    revenue: float
    revenue_normalized: float


def majority_asymptotics(delta: float, n: int) -> MajorityAsymptotics:
    """Large-n behavior of the simple majority rule.

    Noise sensitivity tends to arccos(1-2 delta)/pi; expected revenue grows
    like (1-2 delta) sqrt(n / 2 pi), i.e. normalized revenue 1/sqrt(2 pi).
    """
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"delta must lie in [0, 0.5], got {delta}")
    ns = math.acos(1.0 - 2.0 * delta) / math.pi
    return MajorityAsymptotics(ns, (1.0 - 2.0 * delta) * math.sqrt(n / (2.0 * math.pi)), INV_SQRT_2PI)


def ltf_ns_asymptotic(r: float, delta: float) -> float:
    """Limiting noise sensitivity of the threshold rules raising normalized revenue r.

    Both optimal cutoffs -phi_inv(r) and +phi_inv(r) share the value
    2 {Phi(-t) - Phi_rho(-t, -t)} with t = phi_inv(r) and rho = 1 - 2 delta.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 0.5), got {delta}")
    t = phi_inv_plus(r)
    ns = 2.0 * (norm_cdf(-t) - binormal_cdf(-t, -t, 1.0 - 2.0 * delta))
    return min(1.0, max(0.0, ns))


def alpha_limit(r: float) -> float:
    """Limit of the smallest mean among unit-range rules meeting revenue floor r."""
    return norm_ccdf(phi_inv_plus(r))


def privacy_convert(direction: str, value: float) -> float:
    """Map between the privacy budget eps and the flip probability delta.

    eps_to_delta returns the minimal delta attaining an eps-differentially
    private flip channel, delta = 1/(1 + e^eps); delta_to_eps inverts it.
    """
    if direction == "eps_to_delta":
        if value <= 0.0:
            raise ValueError("eps must be positive (otherwise delta >= 1/2, outside the model)")
        return 1.0 / (1.0 + math.exp(value))
    if direction == "delta_to_eps":
        if not 0.0 < value < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {value}")
        return math.log((1.0 - value) / value)
    raise ValueError(f"unknown direction: {direction!r}")
