"""Economic layer: revenue, surplus, transfers, and constraint checking.

Two settings share one API. In the noisy-report setting the reports pass
through the flip channel on their way to the planner; in the
imperfect-knowledge setting agents observe a noisy signal of their own type
and report it verbatim. The setting changes the incentive and participation
inequalities and shifts the revenue coefficient on E[f] by delta.

Interim quantities written h_bar(+1), h_bar(-1) are conditional expectations
over the other agents' uniform types only; noise enters the constraints
through explicit delta weights.

Note on revenue accounting: revenue() evaluates
(1-2 delta) E[f sum_i x_i] + c E[f] with c = (b-1)/2 (noisy-report) or
(b-1)/2 + delta (imperfect-knowledge). The revenue-maximal transfer profile
built by optimal_interim_transfers() sums instead to
(1-2 delta) E[f sum_i x_i] + n c E[f]: the participation compensation c E[f]
is paid per agent, so the two agree only when n = 1, b = 1 (noisy) or
E[f] = 0. All normalized-revenue optimizations in this package use
revenue(), which keeps the E[f] term O(1) against the O(sqrt(n)) vote term.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .hypercube import (
    AnonymousFunction,
    HypercubeFunction,
    binomial_weights,
    fourier_transform,
    monotonicity_check,
    popcounts,
)
from .noise import sensitivity_exact

SETTINGS = ("noisy-report", "imperfect-knowledge")

CONSTRAINT_TOL = 1e-9
_EXPOST_FAMILIES = ("ds-ic", "eir")


@dataclass(frozen=True)
class MechanismParams:
    """Economy description: agent count, flip probability, bias, and setting."""

    n: int
    delta: float
    b: float = 0.0
    setting: str = "noisy-report"

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(f"agent count must be an integer >= 1, got {self.n}")
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in the open interval (0, 0.5), got {self.delta}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"bias b must lie in [0, 1], got {self.b}")
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}, got {self.setting!r}")

    @property
    def rho(self) -> float:
        return 1.0 - 2.0 * self.delta

    @property
    def mean_coef(self) -> float:
        """Coefficient on E[f] in the revenue formula."""
        c = (self.b - 1.0) / 2.0
        if self.setting == "imperfect-knowledge":
            c += self.delta
        return c


def _stats(f: HypercubeFunction, params: MechanismParams):
    """(mean, E[f sum x_i], degree-1 coefficients per agent)."""
    if f.n != params.n:
        raise ValueError(f"function dimension {f.n} does not match params.n = {params.n}")
    if isinstance(f, AnonymousFunction):
        mean = f.mean()
        efnu = f.mean_nu()
        d1 = np.full(params.n, efnu / params.n)
        return mean, efnu, d1
    coeffs = fourier_transform(f).coeffs
    d1 = np.array([coeffs[1 << i] for i in range(f.n)])
    return float(coeffs[0]), float(d1.sum()), d1


@dataclass(frozen=True, eq=False)
class InterimProfile:
    """Per-agent pairs (h_bar(-1), h_bar(+1)) of interim expectations."""

    v_minus: np.ndarray
    v_plus: np.ndarray

    def __post_init__(self):
        vm = np.atleast_1d(np.asarray(self.v_minus, dtype=np.float64))
        vp = np.atleast_1d(np.asarray(self.v_plus, dtype=np.float64))
        if vm.shape != vp.shape or vm.ndim != 1:
            raise ValueError("interim profile needs matching 1-d minus/plus arrays")
        object.__setattr__(self, "v_minus", vm)
        object.__setattr__(self, "v_plus", vp)

    def __len__(self) -> int:
        return self.v_minus.size

    @property
    def gap(self) -> np.ndarray:
        return self.v_plus - self.v_minus


def interim_marginals(f: HypercubeFunction, params: MechanismParams) -> InterimProfile:
    """Allocation marginals (E[f] - E[f x_i], E[f] + E[f x_i]) per agent."""
    if not f.is_unit_range:
        raise ValueError("interim marginals are defined for unit-range allocation rules")
    mean, _, d1 = _stats(f, params)
    return InterimProfile(mean - d1, mean + d1)


def revenue(f: HypercubeFunction, params: MechanismParams) -> float:
    """Maximum expected revenue index of an implementable rule.

    (1-2 delta) E[f sum x_i] + mean_coef E[f]; evaluates regardless of
    implementability but warns when marginal monotonicity fails.
    """
    mean, efnu, _ = _stats(f, params)
    if not monotonicity_check(f, "marginally-monotone"):
        warnings.warn("revenue evaluated for a rule that is not marginally monotone", stacklevel=2)
    return params.rho * efnu + params.mean_coef * mean


def revenue_normalized(f: HypercubeFunction, params: MechanismParams) -> float:
    """revenue / ((1-2 delta) sqrt(n))."""
    return revenue(f, params) / (params.rho * math.sqrt(params.n))


def surplus(f: HypercubeFunction, params: MechanismParams) -> float:
    """Expected social surplus under noisy implementation.

    (b n / 2) E[f] + ((1-2 delta)/2) sum_i E[f x_i]; equals the direct
    expectation E[sum_i ((b+x_i)/2) f(y)] on representable inputs.
    """
    if not f.is_unit_range:
        raise ValueError("surplus is defined for unit-range allocation rules")
    mean, efnu, _ = _stats(f, params)
    return 0.5 * params.b * params.n * mean + 0.5 * params.rho * efnu


def surplus_distortion_bound(
    f: HypercubeFunction, params: MechanismParams, ns: Optional[float] = None
) -> float:
    """Cauchy-Schwarz cap on E|S(x, f(y)) - S(x, f(x))|.

    sqrt(b^2 n^2 + n)/2 times the square root of the noise sensitivity,
    computed exactly unless a (e.g. sampled) value is supplied.
    """
    if not f.is_boolean:
        raise ValueError("the distortion bound applies to Boolean allocation rules")
    if ns is None:
        ns = sensitivity_exact(f, params.delta)
    return 0.5 * math.sqrt(params.b**2 * params.n**2 + params.n) * math.sqrt(ns)


@dataclass(frozen=True, eq=False)
class TransferSchedule:
    """Interim transfer pairs, optionally realized by an anonymous ex-post rule.

    When `anonymous_expost` is present it is a vector t(0..n) over vote
    counts, every agent paying t(m(y)); its induced interim pair must match
    `interim` through binomial averaging (checked to 1e-9).
    """

    interim: InterimProfile
    anonymous_expost: Optional[np.ndarray] = None
    setting: str = "noisy-report"

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}, got {self.setting!r}")
        if self.anonymous_expost is None:
            return
        t = np.asarray(self.anonymous_expost, dtype=np.float64)
        n = len(self.interim)
        if t.shape != (n + 1,):
            raise ValueError(f"ex-post schedule must have length n+1 = {n + 1}")
        beta_minus, beta_plus = induced_interim_pair(t)
        err = max(
            np.abs(self.interim.v_minus - beta_minus).max(),
            np.abs(self.interim.v_plus - beta_plus).max(),
        )
        if err > 1e-9:
            raise ValueError(f"ex-post schedule does not match interim pairs (error {err:.3e})")
        object.__setattr__(self, "anonymous_expost", t)

    def expected_total(self) -> float:
        """Expected revenue collected: sum over agents of (t_bar(-1)+t_bar(+1))/2."""
        return float(0.5 * (self.interim.v_minus + self.interim.v_plus).sum())


def induced_interim_pair(t: np.ndarray) -> tuple[float, float]:
    """Interim pair of an anonymous ex-post rule via binomial averaging.

    beta(-1) = sum_m t(m) C(n-1,m)/2^(n-1), beta(+1) shifts the count by one.
    """
    n = t.size - 1
    if n == 0:
        return float(t[0]), float(t[0])
    w = binomial_weights(n - 1)
    return float(np.dot(t[:n], w)), float(np.dot(t[1:], w))


def solve_anonymous_transfer(n: int, beta_minus: float, beta_plus: float) -> np.ndarray:
    """Minimum-norm anonymous ex-post rule matching a target interim pair.

    The 2 x (n+1) binomial-averaging system always has solutions (its first
    and last columns are independent); the Euclidean minimum-norm one is the
    canonical deterministic representative.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    w = binomial_weights(n - 1)
    rows = np.zeros((2, n + 1))
    rows[0, :n] = w
    rows[1, 1:] = w
    gram = rows @ rows.T
    coef = np.linalg.solve(gram, np.array([beta_minus, beta_plus]))
    return rows.T @ coef


def optimal_interim_pair(f_minus, f_plus, params: MechanismParams):
    """Per-agent revenue-maximal transfer pair for given allocation marginals.

    Binds the low-type participation constraint and the high-type incentive
    constraint; for marginally monotone marginals this is the unique maximizer
    of the expected transfer over the BN-IC + IIR polytope (the competing
    extreme point, low-type IC with low-type IIR, collects strictly less
    whenever delta < 1/2).
    """
    b, d = params.b, params.delta
    if params.setting == "noisy-report":
        tm = -d * f_plus + ((b - 1.0) / 2.0 + d) * f_minus
        tp = ((b + 1.0) / 2.0 - d) * f_plus - (1.0 - d) * f_minus
    else:
        tm = ((b - 1.0) / 2.0 + d) * f_minus
        tp = ((b + 1.0) / 2.0 - d) * f_plus - (1.0 - 2.0 * d) * f_minus
    return tm, tp


def optimal_interim_transfers(f: HypercubeFunction, params: MechanismParams) -> TransferSchedule:
    """Revenue-maximal interim transfers for a marginally monotone Boolean rule."""
    if not f.is_boolean:
        raise ValueError("optimal transfers are defined for Boolean allocation rules")
    if not monotonicity_check(f, "marginally-monotone"):
        raise ValueError("allocation rule is not marginally monotone; no incentive compatible transfers exist")
    prof = interim_marginals(f, params)
    tm, tp = optimal_interim_pair(prof.v_minus, prof.v_plus, params)
    interim = InterimProfile(tm, tp)
    expost = None
    if np.allclose(tm, tm[0], rtol=0.0, atol=1e-12) and np.allclose(tp, tp[0], rtol=0.0, atol=1e-12):
        expost = solve_anonymous_transfer(params.n, float(tm[0]), float(tp[0]))
    return TransferSchedule(interim, expost, params.setting)


@dataclass(frozen=True)
class ConstraintRow:
    agent: int
    constraint: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.slack >= -CONSTRAINT_TOL


@dataclass(frozen=True)
class ConstraintReport:
    rows: tuple[ConstraintRow, ...]

    @property
    def ok(self) -> bool:
        return all(row.passed for row in self.rows)

    def slack(self, constraint: str) -> np.ndarray:
        return np.array([row.slack for row in self.rows if row.constraint == constraint])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("agent,constraint,lhs,rhs,slack,pass\n")
        for row in self.rows:
            buf.write(
                f"{row.agent},{row.constraint},{row.lhs:.12g},{row.rhs:.12g},"
                f"{row.slack:.12g},{str(row.passed).lower()}\n"
            )
        return buf.getvalue()


def _expost_context_values(f: HypercubeFunction, t: np.ndarray, agent: int):
    """Per-context (f(+1, y), f(-1, y), t(+1, y), t(-1, y)) for one agent."""
    n = f.n
    if isinstance(f, AnonymousFunction):
        m = np.arange(n)  # count among the other agents
        return f.g[m + 1], f.g[m], t[m + 1], t[m]
    idx = np.arange(1 << n)
    low = idx[(idx >> agent) & 1 == 0]
    high = low | (1 << agent)
    pc = popcounts(n)
    return f.values[high], f.values[low], t[pc[high]], t[pc[low]]


def check_constraints(
    f: HypercubeFunction,
    transfers: TransferSchedule,
    params: MechanismParams,
    which: Union[str, Sequence[str]] = ("bn-ic", "iir"),
) -> ConstraintReport:
    """Evaluate incentive and participation inequalities, with slacks.

    Families: bn-ic and iir use interim pairs; ds-ic and eir need the
    anonymous ex-post representation and are reported per agent at the
    worst (minimum-slack) context. Binding constraints show slack 0.
    """
    families = (which,) if isinstance(which, str) else tuple(which)
    for fam in families:
        if fam not in ("bn-ic", "ds-ic", "iir", "eir"):
            raise ValueError(f"unknown constraint family: {fam!r}")
    if len(transfers.interim) != params.n:
        raise ValueError("transfer schedule does not match the agent count")
    if transfers.setting != params.setting:
        raise ValueError("transfer schedule was built for a different setting")
    needs_expost = [fam for fam in families if fam in _EXPOST_FAMILIES]
    if needs_expost and transfers.anonymous_expost is None:
        raise ValueError(f"{needs_expost[0]} requires an ex-post transfer representation")
    if needs_expost and params.setting != "noisy-report":
        raise ValueError("ex-post families are defined in the noisy-report setting only")

    prof = interim_marginals(f, params)
    b, d = params.b, params.delta
    imperfect = params.setting == "imperfect-knowledge"
    hi_coef = (b + 1.0) / 2.0 - (d if imperfect else 0.0)
    lo_coef = (b - 1.0) / 2.0 + (d if imperfect else 0.0)

    rows: list[ConstraintRow] = []
    for i in range(params.n):
        fm, fp = prof.v_minus[i], prof.v_plus[i]
        tm, tp = transfers.interim.v_minus[i], transfers.interim.v_plus[i]
        for fam in families:
            if fam == "bn-ic":
                rows.append(ConstraintRow(i, "bn-ic-high", hi_coef * (fp - fm), tp - tm))
                rows.append(ConstraintRow(i, "bn-ic-low", tp - tm, lo_coef * (fp - fm)))
            elif fam == "iir":
                if imperfect:
                    rows.append(ConstraintRow(i, "iir-high", hi_coef * fp, tp))
                    rows.append(ConstraintRow(i, "iir-low", lo_coef * fm, tm))
                else:
                    rows.append(ConstraintRow(
                        i, "iir-high",
                        ((b + 1.0) / 2.0) * ((1.0 - d) * fp + d * fm),
                        (1.0 - d) * tp + d * tm,
                    ))
                    rows.append(ConstraintRow(
                        i, "iir-low",
                        ((b - 1.0) / 2.0) * (d * fp + (1.0 - d) * fm),
                        d * tp + (1.0 - d) * tm,
                    ))
            else:
                fpv, fmv, tpv, tmv = _expost_context_values(f, transfers.anonymous_expost, i)
                if fam == "ds-ic":
                    pairs = (
                        ("ds-ic-high", ((b + 1.0) / 2.0) * (fpv - fmv), tpv - tmv),
                        ("ds-ic-low", tpv - tmv, ((b - 1.0) / 2.0) * (fpv - fmv)),
                    )
                else:
                    pairs = (
                        ("eir-high",
                         ((b + 1.0) / 2.0) * ((1.0 - d) * fpv + d * fmv),
                         (1.0 - d) * tpv + d * tmv),
                        ("eir-low",
                         ((b - 1.0) / 2.0) * (d * fpv + (1.0 - d) * fmv),
                         d * tpv + (1.0 - d) * tmv),
                    )
                for name, lhs_v, rhs_v in pairs:
                    worst = int(np.argmin(lhs_v - rhs_v))
                    rows.append(ConstraintRow(i, name, float(lhs_v[worst]), float(rhs_v[worst])))
    return ConstraintReport(tuple(rows))
