"""The flip channel: noise operator, stability, and noise sensitivity.

Each coordinate of a uniform point x is independently flipped with
probability delta, producing the received vector y. Dense functions get
spectral formulas; anonymous functions get an exact joint law of the two
vote counts (m_x, m_y), which keeps large-n computations closed form. A
seeded Monte Carlo path covers sizes beyond the exact cutoff.

The endpoints delta = 0 and delta = 1/2 are accepted here for limit checks
even though the economic model keeps delta strictly inside (0, 1/2); the
mechanism layer enforces the open interval itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hypercube import (
    DenseFunction,
    FourierSpectrum,
    HypercubeFunction,
    fourier_transform,
    inverse_fourier,
    popcounts,
)

# O(n^3) dynamic program; beyond this the CLI falls back to Monte Carlo.
MAX_EXACT_COUNT_N = 2000

_MC_BATCH = 1 << 16


def _check_delta(delta: float) -> None:
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"delta must lie in [0, 0.5], got {delta}")


@dataclass(frozen=True, eq=False)
class JointCountDistribution:
    """Exact law of (m_x, m_y): vote counts of a uniform x and its noisy copy y."""

    n: int
    delta: float
    pmf: np.ndarray

    def marginal_x(self) -> np.ndarray:
        return self.pmf.sum(axis=1)

    def marginal_y(self) -> np.ndarray:
        return self.pmf.sum(axis=0)

    def suffix_mass(self) -> np.ndarray:
        """S[j, k] = P(m_x >= j, m_y >= k); used for threshold stabilities."""
        return self.pmf[::-1, ::-1].cumsum(axis=0).cumsum(axis=1)[::-1, ::-1]


def joint_count_distribution(n: int, delta: float) -> JointCountDistribution:
    """Build the (n+1) x (n+1) pmf by a DP over coordinates.

    Each coordinate adds one of four cells (+ +, + -, - +, - -) with
    probabilities ((1-d)/2, d/2, d/2, (1-d)/2). O(n^3) time, O(n^2) space.
    """
    if not 1 <= n <= MAX_EXACT_COUNT_N:
        raise ValueError(f"exact joint count law limited to n <= {MAX_EXACT_COUNT_N}, got {n}")
    _check_delta(delta)
    p_same = (1.0 - delta) / 2.0
    p_diff = delta / 2.0
    cur = np.zeros((n + 1, n + 1))
    nxt = np.zeros((n + 1, n + 1))
    cur[0, 0] = 1.0
    for i in range(n):
        k = i + 1
        src = cur[:k, :k]
        nxt[: k + 1, : k + 1] = 0.0
        nxt[1 : k + 1, 1 : k + 1] += p_same * src
        nxt[1 : k + 1, :k] += p_diff * src
        nxt[:k, 1 : k + 1] += p_diff * src
        nxt[:k, :k] += p_same * src
        cur, nxt = nxt, cur
    cur.setflags(write=False)
    return JointCountDistribution(n, delta, cur)


def noise_operator(f: DenseFunction, rho: float) -> DenseFunction:
    """Conditional expectation of f over a rho-correlated copy of the input.

    Damps each coefficient by rho^|S|; a semigroup in rho.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    spectrum = fourier_transform(f)
    damp = rho ** popcounts(f.n).astype(np.float64)
    return inverse_fourier(FourierSpectrum(f.n, spectrum.coeffs * damp))


def stability_exact(f: HypercubeFunction, delta: float) -> float:
    """E[f(x) f(y)] for the delta-flip channel.

    Dense: sum_S (1-2 delta)^|S| coeff(S)^2. Anonymous: the bilinear form
    g' P g under the joint count law. The two agree on representable inputs.
    """
    _check_delta(delta)
    if isinstance(f, DenseFunction):
        c = fourier_transform(f).coeffs
        w = (1.0 - 2.0 * delta) ** popcounts(f.n).astype(np.float64)
        return float(np.dot(w, c**2))
    joint = joint_count_distribution(f.n, delta)
    return float(f.g @ joint.pmf @ f.g)


def sensitivity_exact(f: HypercubeFunction, delta: float) -> float:
    """P(f(x) != f(y)) = 2 (E[f] - Stab) for Boolean-valued f."""
    if not f.is_boolean:
        raise ValueError("noise sensitivity requires a Boolean-valued function")
    _check_delta(delta)
    ns = 2.0 * (f.mean() - stability_exact(f, delta))
    return min(1.0, max(0.0, ns))


class MonteCarloEstimate(NamedTuple):
    estimate: float
    stderr: float


def sensitivity_monte_carlo(
    f: HypercubeFunction, delta: float, samples: int, seed: int
) -> MonteCarloEstimate:
    """Unbiased sampling estimate of P(f(x) != f(y)).

    Batches draw from independent child streams of SeedSequence(seed), so a
    future parallel execution of the batches reproduces the serial result.
    The standard error is the binomial sqrt(p(1-p)/samples).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not f.is_boolean:
        raise ValueError("noise sensitivity requires a Boolean-valued function")
    _check_delta(delta)

    n_batches = (samples + _MC_BATCH - 1) // _MC_BATCH
    children = np.random.SeedSequence(seed).spawn(n_batches)
    disagreements = 0
    remaining = samples
    for child in children:
        rng = np.random.Generator(np.random.Philox(child))
        size = min(_MC_BATCH, remaining)
        remaining -= size
        if isinstance(f, DenseFunction):
            x = rng.integers(0, 1 << f.n, size=size, dtype=np.int64)
            flips = rng.random((size, f.n)) < delta
            mask = (flips.astype(np.int64) << np.arange(f.n, dtype=np.int64)).sum(axis=1)
            disagreements += int(np.count_nonzero(f.values[x] != f.values[x ^ mask]))
        else:
            m_x = rng.binomial(f.n, 0.5, size=size)
            m_y = rng.binomial(m_x, 1.0 - delta) + rng.binomial(f.n - m_x, delta)
            disagreements += int(np.count_nonzero(f.g[m_x] != f.g[m_y]))
    p_hat = disagreements / samples
    return MonteCarloEstimate(p_hat, math.sqrt(p_hat * (1.0 - p_hat) / samples))
