"""Functions on the Boolean hypercube {-1,+1}^n and their Walsh expansions.

Two representations coexist. A dense truth table (n <= 24) stores one value
per point of the cube and supports the full Walsh transform. An anonymous,
count-indexed table g[m] (value when exactly m coordinates equal +1) scales
to n around 10^6 and is exact for every statistic that only depends on the
vote count, which is all the mechanism layer ever needs at large n.

Index convention for dense tables: index k encodes the point whose i-th
coordinate is +1 iff bit i of k is set (little-endian, bit i <-> coordinate i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

MAX_DENSE_N = 24
MAX_ANONYMOUS_N = 10**6

# Slack allowed on marginal coefficients before a function is declared
# non-monotone; implementability predicates gate the optimizers and must
# not flap on float noise.
MONOTONE_TOL = 1e-12

_BOOL_SET = (0.0, 1.0)


@lru_cache(maxsize=32)
def popcounts(n: int) -> np.ndarray:
    """popcount(k) for every k in [0, 2^n), as an immutable int64 array."""
    idx = np.arange(1 << n, dtype=np.int64)
    pc = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        pc += (idx >> i) & 1
    pc.setflags(write=False)
    return pc


@lru_cache(maxsize=32)
def log_factorials(n: int) -> np.ndarray:
    """Table of log(k!) for k = 0..n, each entry independently accurate."""
    table = np.fromiter((math.lgamma(k + 1.0) for k in range(n + 1)), dtype=np.float64, count=n + 1)
    table.setflags(write=False)
    return table


def binomial_weights(n: int) -> np.ndarray:
    """C(n, m) / 2^n for m = 0..n, computed in log space (safe to n ~ 10^6)."""
    lf = log_factorials(n)
    m = np.arange(n + 1)
    return np.exp(lf[n] - lf[m] - lf[n - m] - n * math.log(2.0))


def walsh(values: np.ndarray, inverse: bool = False) -> np.ndarray:
    """In-place-style fast Walsh kernel along the last axis, O(n 2^n).

    Forward applies the character matrix M[S, k] = chi_S(x_k); dividing the
    result by 2^n yields Fourier coefficients. Inverse applies M^T, which
    reconstructs point values from coefficients exactly (M M^T = 2^n I).
    """
    out = np.array(values, dtype=np.float64)
    size = out.shape[-1]
    n = size.bit_length() - 1
    if size != 1 << n:
        raise ValueError("last axis length must be a power of two")
    lead = out.shape[:-1]
    out = out.reshape(-1, size)
    for bit in range(n):
        v = out.reshape(out.shape[0], size >> (bit + 1), 2, 1 << bit)
        lo = v[:, :, 0, :].copy()
        hi = v[:, :, 1, :].copy()
        if inverse:
            v[:, :, 0, :] = lo - hi
            v[:, :, 1, :] = lo + hi
        else:
            v[:, :, 0, :] = lo + hi
            v[:, :, 1, :] = hi - lo
    return out.reshape(*lead, size)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DenseFunction:
    """A real-valued function on {-1,+1}^n stored as a full truth table."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DENSE_N:
            raise ValueError(f"dense dimension must be in [1, {MAX_DENSE_N}], got {self.n}")
        vals = _freeze(self.values)
        if vals.ndim != 1 or vals.size != 1 << self.n:
            raise ValueError(f"values must have length 2^{self.n}")
        object.__setattr__(self, "values", vals)

    @property
    def is_boolean(self) -> bool:
        return bool(np.isin(self.values, _BOOL_SET).all())

    @property
    def is_unit_range(self) -> bool:
        return bool((self.values >= 0.0).all() and (self.values <= 1.0).all())

    def mean(self) -> float:
        return float(self.values.mean())

    def degree1(self) -> np.ndarray:
        """E[f(x) x_i] for each coordinate i."""
        out = np.empty(self.n)
        size = 1 << self.n
        for i in range(self.n):
            v = self.values.reshape(size >> (i + 1), 2, 1 << i)
            out[i] = (v[:, 1, :].sum() - v[:, 0, :].sum()) / size
        return out

    def mean_nu(self) -> float:
        """E[f(x) sum_i x_i]."""
        nu = 2 * popcounts(self.n) - self.n
        return float(np.dot(self.values, nu) / self.values.size)


@dataclass(frozen=True, eq=False)
class FourierSpectrum:
    """Walsh coefficients indexed by subset bitmask S (bit i <-> coordinate i)."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DENSE_N:
            raise ValueError(f"dimension must be in [1, {MAX_DENSE_N}], got {self.n}")
        c = _freeze(self.coeffs)
        if c.ndim != 1 or c.size != 1 << self.n:
            raise ValueError(f"coeffs must have length 2^{self.n}")
        object.__setattr__(self, "coeffs", c)

    def mean(self) -> float:
        return float(self.coeffs[0])

    def weight_by_degree(self) -> np.ndarray:
        """Total squared coefficient mass at each degree 0..n."""
        pc = popcounts(self.n)
        return np.bincount(pc, weights=self.coeffs**2, minlength=self.n + 1)


@dataclass(frozen=True, eq=False)
class AnonymousFunction:
    """A function of the vote count m = #{i : x_i = +1}, values in [0, 1].

    The induced dense function is invariant under coordinate permutations,
    so every moment reduces to a weighted sum over the n+1 counts.
    """

    n: int
    g: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_ANONYMOUS_N:
            raise ValueError(f"anonymous dimension must be in [1, {MAX_ANONYMOUS_N}], got {self.n}")
        g = _freeze(self.g)
        if g.ndim != 1 or g.size != self.n + 1:
            raise ValueError(f"g must have length n+1 = {self.n + 1}")
        if (g < 0.0).any() or (g > 1.0).any():
            raise ValueError("anonymous values must lie in [0, 1]")
        object.__setattr__(self, "g", g)

    @property
    def is_boolean(self) -> bool:
        return bool(np.isin(self.g, _BOOL_SET).all())

    @property
    def is_unit_range(self) -> bool:
        return True

    def mean(self) -> float:
        return float(np.dot(self.g, binomial_weights(self.n)))

    def mean_nu(self) -> float:
        """E[f sum_i x_i] = sum_m g[m] (2m - n) C(n,m) / 2^n."""
        nu = 2.0 * np.arange(self.n + 1) - self.n
        return float(np.dot(self.g * nu, binomial_weights(self.n)))

    def degree1(self) -> float:
        """Common degree-1 coefficient E[f x_i], identical for every i."""
        return self.mean_nu() / self.n

    def to_dense(self) -> DenseFunction:
        if self.n > MAX_DENSE_N:
            raise ValueError(f"cannot densify beyond n = {MAX_DENSE_N}")
        return DenseFunction(self.n, self.g[popcounts(self.n)])


HypercubeFunction = Union[DenseFunction, AnonymousFunction]


def fourier_transform(f: DenseFunction) -> FourierSpectrum:
    """Walsh expansion: coeffs[S] = E[f(x) chi_S(x)] under the uniform measure."""
    return FourierSpectrum(f.n, walsh(f.values) / f.values.size)


def inverse_fourier(s: FourierSpectrum) -> DenseFunction:
    """Pointwise reconstruction f(x) = sum_S coeffs[S] chi_S(x)."""
    return DenseFunction(s.n, walsh(s.coeffs, inverse=True))


def influence(f: DenseFunction, i: int) -> float:
    """Influence of coordinate i: sum of squared coefficients over sets containing i.

    Equals E[(D_i f)^2] for the discrete derivative
    D_i f = (f(x^{i->+1}) - f(x^{i->-1})) / 2.
    """
    if not 0 <= i < f.n:
        raise ValueError(f"coordinate must be in [0, {f.n}), got {i}")
    c = fourier_transform(f).coeffs
    mask = (np.arange(c.size) >> i) & 1
    return float(np.dot(mask, c**2))


def influences(f: DenseFunction) -> np.ndarray:
    """All n coordinate influences in one transform."""
    c2 = fourier_transform(f).coeffs ** 2
    idx = np.arange(c2.size)
    return np.array([c2[(idx >> i) & 1 == 1].sum() for i in range(f.n)])


def _dense_degree1_exact(f: DenseFunction) -> np.ndarray:
    """2^n * E[f x_i] as exact integers (Boolean tables only)."""
    v = f.values.astype(np.int64)
    size = v.size
    out = np.empty(f.n, dtype=np.int64)
    for i in range(f.n):
        w = v.reshape(size >> (i + 1), 2, 1 << i)
        out[i] = w[:, 1, :].sum() - w[:, 0, :].sum()
    return out


def monotonicity_check(f: HypercubeFunction, kind: str) -> bool:
    """Implementability predicates.

    kind="monotone": f never falls when one coordinate moves from -1 to +1,
    in every context. kind="marginally-monotone": every degree-1 coefficient
    is nonnegative, i.e. the interim allocation rises with the report.
    Boolean tables at dense scale are decided in exact integer arithmetic;
    float inputs get a -1e-12 slack.
    """
    if kind not in ("monotone", "marginally-monotone"):
        raise ValueError(f"unknown monotonicity kind: {kind!r}")
    if not f.is_unit_range:
        raise ValueError("monotonicity predicates are defined for unit-range functions")

    if isinstance(f, AnonymousFunction):
        if kind == "monotone":
            return bool((np.diff(f.g) >= (0.0 if f.is_boolean else -MONOTONE_TOL)).all())
        if f.is_boolean and f.n <= MAX_DENSE_N:
            g = f.g.astype(object)
            total = sum(int(gm) * (2 * m - f.n) * math.comb(f.n, m) for m, gm in enumerate(g))
            return total >= 0
        return f.degree1() >= -MONOTONE_TOL

    exact = f.is_boolean
    if kind == "monotone":
        v = f.values.astype(np.int64) if exact else f.values
        size = v.size
        for i in range(f.n):
            w = v.reshape(size >> (i + 1), 2, 1 << i)
            diff = w[:, 1, :] - w[:, 0, :]
            if diff.min() < (0 if exact else -MONOTONE_TOL):
                return False
        return True
    if exact:
        return bool((_dense_degree1_exact(f) >= 0).all())
    return bool((f.degree1() >= -MONOTONE_TOL).all())


def threshold_function(n: int, theta: float) -> AnonymousFunction:
    """The rule 1{sum_i x_i >= theta}, stored anonymously (g[m] = 1 iff 2m-n >= theta)."""
    m = np.arange(n + 1)
    return AnonymousFunction(n, (2 * m - n >= theta).astype(np.float64))


def majority_function(n: int) -> AnonymousFunction:
    """Simple majority 1{sum_i x_i >= 0}."""
    return threshold_function(n, 0.0)


def build_function(spec: str) -> HypercubeFunction:
    """Parse the one-record function-spec text format.

    Lines of key=value pairs; '#' starts a comment, whitespace is ignored.
    kind=dense requires values=<2^n comma-separated reals>; kind=anonymous
    requires g=<n+1 reals in [0,1]>; kind=threshold requires theta=<real>.
    """
    fields: dict[str, str] = {}
    for raw in spec.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed function-spec line: {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower()
        if key in fields:
            raise ValueError(f"duplicate key in function-spec: {key!r}")
        fields[key] = value.strip()

    kind = fields.get("kind")
    if kind not in ("dense", "anonymous", "threshold"):
        raise ValueError(f"kind must be dense, anonymous or threshold, got {kind!r}")
    if "n" not in fields:
        raise ValueError("function-spec is missing n=<int>")
    try:
        n = int(fields["n"])
    except ValueError:
        raise ValueError(f"n must be an integer, got {fields['n']!r}") from None

    def parse_list(key: str) -> np.ndarray:
        if key not in fields:
            raise ValueError(f"kind={kind} requires {key}=<comma list>")
        try:
            return np.array([float(tok) for tok in fields[key].split(",") if tok.strip() != ""])
        except ValueError:
            raise ValueError(f"could not parse {key} as a comma list of reals") from None

    if kind == "dense":
        return DenseFunction(n, parse_list("values"))
    if kind == "anonymous":
        return AnonymousFunction(n, parse_list("g"))
    if "theta" not in fields:
        raise ValueError("kind=threshold requires theta=<real>")
    try:
        theta = float(fields["theta"])
    except ValueError:
        raise ValueError(f"theta must be a real, got {fields['theta']!r}") from None
    return threshold_function(n, theta)
