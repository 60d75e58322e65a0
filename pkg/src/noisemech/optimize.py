"""Constrained optimizers over allocation rules, plus brute-force oracles.

The threshold family 1{sum_i x_i >= theta} is searched exhaustively over the
n+1 attainable cutoffs (the vote sum has fixed parity, so only those matter).
That resolves the large-n o(1) calibration exactly at finite n: revenue-max,
surplus-max subject to a revenue floor, minimum-mean subject to a revenue
floor (with a fractional boundary weight for the LP optimum), and the
feasibility-boundary cutoffs that generate the noise-sensitivity frontier.

Desk-scale oracles enumerate every Boolean function (all 2^(2^n) at n <= 4,
or all 2^(n+1) anonymous ones at n <= 20) to audit the threshold family's
optimality gap. Ties break toward the smallest threshold or function index.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import gaussian
from .hypercube import binomial_weights, popcounts, walsh
from .mechanism import MechanismParams
from .noise import MAX_EXACT_COUNT_N, joint_count_distribution

MAX_ORACLE_DENSE_N = 4
MAX_ORACLE_ANONYMOUS_N = 20

_FEAS_TOL = 1e-12


class InfeasibleTargetError(ValueError):
    """No rule in the searched class meets the revenue floor."""


@dataclass(frozen=True)
class FrontierPoint:
    """One point of a revenue / noise-sensitivity trade-off curve.

    `threshold` is an integer vote-sum cutoff for regime="finite" and a
    cutoff in nu/sqrt(n) units for regime="asymptotic". `mean` carries the
    provision probability (for min-bias points, the exact LP value including
    the fractional boundary weight); `ns_high` records the mirrored
    high-cutoff candidate's noise sensitivity alongside the emitted one.
    """

    regime: str
    n: float
    delta: float
    b: float
    r: float
    threshold: float
    ns: float
    surplus_per_capita: float
    revenue_normalized: float
    mean: float = math.nan
    ns_high: float = math.nan


@dataclass(frozen=True)
class OracleResult:
    """Outcome of a brute-force noise-sensitivity minimization.

    `argmin_functions` are truth-table bitmask identifiers (over the 2^n
    points for scope="all-boolean", over the n+1 counts for
    scope="anonymous"), sorted ascending. `ltf_gap` is the best feasible
    threshold rule's noise sensitivity minus the global minimum; infeasible
    targets are reported with feasible_count = 0, not raised.
    """

    min_ns: float
    argmin_functions: tuple[int, ...]
    feasible_count: int
    ltf_gap: float
    best_ltf_ns: float
    best_ltf_threshold: Optional[int]


@dataclass(frozen=True, eq=False)
class ThresholdTable:
    """Exact statistics of every attainable cutoff at one (n, delta, b, setting).

    Index j means the rule 1{m >= j}, i.e. vote-sum cutoff nu = 2j - n.
    """

    params: MechanismParams
    nu: np.ndarray
    mean: np.ndarray
    efnu: np.ndarray
    revenue: np.ndarray
    revenue_normalized: np.ndarray
    surplus: np.ndarray

    def feasible_indices(self, r: float) -> np.ndarray:
        return np.nonzero(self.revenue_normalized >= r - _FEAS_TOL)[0]


def threshold_table(params: MechanismParams) -> ThresholdTable:
    w = binomial_weights(params.n)
    nu = 2.0 * np.arange(params.n + 1) - params.n
    mean = w[::-1].cumsum()[::-1]
    efnu = (w * nu)[::-1].cumsum()[::-1]
    rev = params.rho * efnu + params.mean_coef * mean
    revn = rev / (params.rho * math.sqrt(params.n))
    surp = 0.5 * params.b * params.n * mean + 0.5 * params.rho * efnu
    return ThresholdTable(params, nu.astype(np.int64), mean, efnu, rev, revn, surp)


def threshold_ns_table(n: int, delta: float) -> np.ndarray:
    """Exact noise sensitivity of every cutoff rule 1{m >= j}, j = 0..n."""
    joint = joint_count_distribution(n, delta)
    suffix = joint.suffix_mass()
    mean = joint.marginal_x()[::-1].cumsum()[::-1]
    ns = 2.0 * (mean - np.diag(suffix))
    return np.clip(ns, 0.0, 1.0)


@dataclass(frozen=True)
class RevenueMaxResult:
    """The three revenue-maximizing cutoff candidates, reported side by side.

    `tau_closed_form` = 2/((1-b)(1-2 delta)), the analytic large-n cutoff;
    `tau_pointwise` = (1-b)/(2(1-2 delta)) from maximizing the integrand
    (1-2 delta) nu + (b-1)/2 pointwise; `finite_opt_nu` is the exact argmax
    over attainable cutoffs. The first two are asymptotically
    revenue-equivalent; no adjudication between them is attempted.
    """

    tau_closed_form: Optional[float]
    tau_pointwise: float
    finite_opt_nu: int
    finite_opt_revenue: float
    finite_opt_revenue_normalized: float
    note: Optional[str] = None


def revenue_max_threshold(params: MechanismParams) -> RevenueMaxResult:
    table = threshold_table(params)
    best = int(np.argmax(table.revenue))
    ties = np.nonzero(table.revenue >= table.revenue[best] - _FEAS_TOL)[0]
    best = int(ties.min())  # most-provision tie-break
    tau_pointwise = -params.mean_coef / params.rho + 0.0
    if params.b == 1.0:
        tau_closed_form, note = None, "closed-form cutoff undefined at b = 1 (division by 1-b)"
    else:
        tau_closed_form, note = 2.0 / ((1.0 - params.b) * params.rho), None
    return RevenueMaxResult(
        tau_closed_form,
        tau_pointwise,
        int(table.nu[best]),
        float(table.revenue[best]),
        float(table.revenue_normalized[best]),
        note,
    )


def _check_r(r: float) -> None:
    if not 0.0 < r <= gaussian.INV_SQRT_2PI + 1e-12:
        raise ValueError(f"revenue target must lie in (0, 1/sqrt(2 pi)], got {r}")


def _require_finite_n(params: MechanismParams) -> None:
    if params.n > MAX_EXACT_COUNT_N:
        raise ValueError(f"finite-regime frontier operations need n <= {MAX_EXACT_COUNT_N}")


def surplus_max_threshold(params: MechanismParams, r: float, regime: str = "finite") -> FrontierPoint:
    """Surplus-maximal cutoff rule subject to normalized revenue >= r.

    Finite regime searches the n+1 cutoffs exactly; the large-n limit is the
    low cutoff -phi_inv(r).
    """
    _check_r(r)
    if regime == "asymptotic":
        t = gaussian.phi_inv_plus(r)
        mean = 1.0 - gaussian.alpha_limit(r)
        return FrontierPoint(
            "asymptotic", math.inf, params.delta, params.b, r, -t,
            gaussian.ltf_ns_asymptotic(r, params.delta),
            0.5 * params.b * mean, r, mean,
            gaussian.ltf_ns_asymptotic(r, params.delta),
        )
    if regime != "finite":
        raise ValueError(f"regime must be finite or asymptotic, got {regime!r}")
    _require_finite_n(params)
    table = threshold_table(params)
    feas = table.feasible_indices(r)
    if feas.size == 0:
        raise InfeasibleTargetError(f"no cutoff rule reaches normalized revenue {r} at n = {params.n}")
    best = int(feas[np.argmax(table.surplus[feas])])
    ties = feas[table.surplus[feas] >= table.surplus[best] - _FEAS_TOL]
    best = int(ties.min())
    ns = threshold_ns_table(params.n, params.delta)
    return FrontierPoint(
        "finite", params.n, params.delta, params.b, r, int(table.nu[best]),
        float(ns[best]), float(table.surplus[best] / params.n),
        float(table.revenue_normalized[best]), float(table.mean[best]),
    )


def min_bias_threshold(params: MechanismParams, r: float, regime: str = "finite") -> FrontierPoint:
    """Smallest-mean rule meeting the revenue floor.

    Finite regime: greedy fill of the highest vote counts, with a fractional
    weight in [0, 1] at the boundary cell so the revenue constraint binds
    exactly; that is the LP optimum over unit-range rules and its `mean` is
    the exact minimum. The reported threshold and ns belong to the Boolean
    cutoff containing the boundary cell. Asymptotic: cutoff +phi_inv(r),
    mean ccdf(phi_inv(r)).
    """
    _check_r(r)
    if regime == "asymptotic":
        t = gaussian.phi_inv_plus(r)
        alpha = gaussian.alpha_limit(r)
        return FrontierPoint(
            "asymptotic", math.inf, params.delta, params.b, r, t,
            gaussian.ltf_ns_asymptotic(r, params.delta),
            0.5 * params.b * alpha, r, alpha,
            gaussian.ltf_ns_asymptotic(r, params.delta),
        )
    if regime != "finite":
        raise ValueError(f"regime must be finite or asymptotic, got {regime!r}")
    _require_finite_n(params)
    w = binomial_weights(params.n)
    nu = 2.0 * np.arange(params.n + 1) - params.n
    cell_rev = (params.rho * nu + params.mean_coef) * w / (params.rho * math.sqrt(params.n))
    filled_rev = 0.0
    mean_lp = 0.0
    boundary = None
    for j in range(params.n, -1, -1):
        if cell_rev[j] <= 0.0:
            break
        if filled_rev + cell_rev[j] >= r - _FEAS_TOL:
            frac = min(1.0, max(0.0, (r - filled_rev) / cell_rev[j]))
            mean_lp += frac * w[j]
            boundary = j
            break
        filled_rev += cell_rev[j]
        mean_lp += w[j]
    if boundary is None:
        raise InfeasibleTargetError(f"no unit-range rule reaches normalized revenue {r} at n = {params.n}")
    table = threshold_table(params)
    ns = threshold_ns_table(params.n, params.delta)
    return FrontierPoint(
        "finite", params.n, params.delta, params.b, r, int(table.nu[boundary]),
        float(ns[boundary]), float(table.surplus[boundary] / params.n),
        float(table.revenue_normalized[boundary]), float(mean_lp),
    )


def _walsh_rows(vals: np.ndarray) -> np.ndarray:
    return walsh(vals) / vals.shape[-1]


def ns_min_bruteforce(params: MechanismParams, r: float, scope: str = "all-boolean") -> OracleResult:
    """Exact minimum noise sensitivity over every Boolean rule in scope.

    Constraints: marginal monotonicity (checked in integer arithmetic) and
    normalized revenue >= r. Also reports the best feasible cutoff rule and
    the gap to it.
    """
    if scope == "all-boolean":
        if params.n > MAX_ORACLE_DENSE_N:
            raise ValueError(f"all-boolean oracle limited to n <= {MAX_ORACLE_DENSE_N}")
        return _oracle_dense(params, r)
    if scope == "anonymous":
        if params.n > MAX_ORACLE_ANONYMOUS_N:
            raise ValueError(f"anonymous oracle limited to n <= {MAX_ORACLE_ANONYMOUS_N}")
        return _oracle_anonymous(params, r)
    raise ValueError(f"scope must be all-boolean or anonymous, got {scope!r}")


def _finish_oracle(ns: np.ndarray, feasible: np.ndarray, ltf_ids: Sequence[int],
                   ltf_nu: np.ndarray) -> OracleResult:
    count = int(feasible.sum())
    if count == 0:
        return OracleResult(math.nan, (), 0, math.nan, math.nan, None)
    min_ns = float(ns[feasible].min())
    argmin = np.nonzero(feasible & (ns <= min_ns + 1e-12))[0]
    feas_ltf = [(int(ltf_nu[j]), float(ns[fid])) for j, fid in enumerate(ltf_ids) if feasible[fid]]
    best_nu, best_ltf_ns = min(feas_ltf, key=lambda item: (item[1], item[0]))
    return OracleResult(
        min_ns, tuple(int(i) for i in argmin), count,
        best_ltf_ns - min_ns, best_ltf_ns, best_nu,
    )


def _oracle_dense(params: MechanismParams, r: float) -> OracleResult:
    n = params.n
    size = 1 << n
    count = 1 << size
    pts = np.arange(size, dtype=np.int64)
    pc = popcounts(n)
    nu = 2 * pc - n
    signs = (((pts[:, None] >> np.arange(n)[None, :]) & 1) * 2 - 1).astype(np.int64)
    vals = ((np.arange(count, dtype=np.int64)[:, None] >> pts[None, :]) & 1).astype(np.int64)
    marg = (vals @ signs >= 0).all(axis=1)
    mean = vals.sum(axis=1) / size
    efnu = (vals @ nu) / size
    revn = (params.rho * efnu + params.mean_coef * mean) / (params.rho * math.sqrt(n))
    coeffs = _walsh_rows(vals.astype(np.float64))
    stab = (coeffs**2) @ (params.rho ** pc.astype(np.float64))
    ns = np.clip(2.0 * (mean - stab), 0.0, 1.0)
    feasible = marg & (revn >= r - _FEAS_TOL)
    ltf_ids = [int(((pc >= j).astype(np.int64) << pts).sum()) for j in range(n + 1)]
    return _finish_oracle(ns, feasible, ltf_ids, 2 * np.arange(n + 1) - n)


def _oracle_anonymous(params: MechanismParams, r: float) -> OracleResult:
    n = params.n
    count = 1 << (n + 1)
    m = np.arange(n + 1, dtype=np.int64)
    nu = 2 * m - n
    w = binomial_weights(n)
    joint = joint_count_distribution(n, params.delta).pmf
    # exact integer marginal-monotonicity weights: (2m - n) C(n, m)
    mono_w = np.array([(2 * mm - n) * math.comb(n, mm) for mm in m], dtype=np.int64)
    mean = np.empty(count)
    efnu = np.empty(count)
    stab = np.empty(count)
    marg = np.empty(count, dtype=bool)
    chunk = 1 << 14
    for start in range(0, count, chunk):
        ids = np.arange(start, min(start + chunk, count), dtype=np.int64)
        g = ((ids[:, None] >> m[None, :]) & 1).astype(np.float64)
        mean[ids] = g @ w
        efnu[ids] = g @ (w * nu)
        marg[ids] = (g.astype(np.int64) @ mono_w) >= 0
        stab[ids] = np.einsum("ij,jk,ik->i", g, joint, g)
    revn = (params.rho * efnu + params.mean_coef * mean) / (params.rho * math.sqrt(n))
    ns = np.clip(2.0 * (mean - stab), 0.0, 1.0)
    feasible = marg & (revn >= r - _FEAS_TOL)
    ltf_ids = [int(((m >= j).astype(np.int64) << m).sum()) for j in range(n + 1)]
    return _finish_oracle(ns, feasible, ltf_ids, 2 * np.arange(n + 1) - n)


def pareto_frontier(
    params: MechanismParams, r_grid: Iterable[float], regime: str = "asymptotic"
) -> list[FrontierPoint]:
    """Minimum noise sensitivity versus required normalized revenue.

    Both asymptotically optimal cutoffs (-phi_inv(r) and +phi_inv(r), or at
    finite n the low and high feasibility-boundary cutoffs) are evaluated;
    the emitted point carries the low cutoff, which also maximizes surplus,
    with the high cutoff's noise sensitivity recorded in `ns_high`. Finite
    grid entries whose revenue floor is unattainable are skipped with a
    warning so sweeps continue.
    """
    points: list[FrontierPoint] = []
    if regime == "asymptotic":
        for r in r_grid:
            _check_r(r)
            t = gaussian.phi_inv_plus(r)
            ns_low = gaussian.ltf_ns_asymptotic(r, params.delta)
            alpha = gaussian.alpha_limit(r)
            # high-cutoff value from its own mean, equal to ns_low by the
            # symmetry of the Gaussian pair law
            ns_high = 2.0 * (alpha - gaussian.binormal_cdf(-t, -t, params.rho))
            points.append(FrontierPoint(
                "asymptotic", math.inf, params.delta, params.b, float(r), -t,
                ns_low, 0.5 * params.b * (1.0 - alpha), float(r), 1.0 - alpha,
                min(1.0, max(0.0, ns_high)),
            ))
        return points
    if regime != "finite":
        raise ValueError(f"regime must be finite or asymptotic, got {regime!r}")
    _require_finite_n(params)
    table = threshold_table(params)
    ns = threshold_ns_table(params.n, params.delta)
    for r in r_grid:
        _check_r(r)
        feas = table.feasible_indices(float(r))
        if feas.size == 0:
            warnings.warn(f"revenue target r = {r} infeasible at n = {params.n}; skipped", stacklevel=2)
            continue
        j_lo, j_hi = int(feas[0]), int(feas[-1])
        points.append(FrontierPoint(
            "finite", params.n, params.delta, params.b, float(r), int(table.nu[j_lo]),
            float(ns[j_lo]), float(table.surplus[j_lo] / params.n),
            float(table.revenue_normalized[j_lo]), float(table.mean[j_lo]),
            float(ns[j_hi]),
        ))
    return points


@dataclass(frozen=True)
class MajorityCurvePoint:
    """One point of the majority rule's revenue / noise-sensitivity curve.

    `revenue_over_sqrt_n` is (1-2 delta) E[max(sum x_i, 0)] / sqrt(n), the
    bias-free revenue term that survives the sqrt(n) normalization (finite),
    or its limit (1-2 delta)/sqrt(2 pi).
    """

    n: float
    delta: float
    revenue_over_sqrt_n: float
    ns: float
    revenue_normalized: float
    mean: float
    surplus_per_capita: float


def majority_curve(n: Optional[int], delta_grid: Iterable[float]) -> list[MajorityCurvePoint]:
    """Trace the majority rule across noise levels; n=None gives the limit curve.

    Surplus is reported at b = 1, the bias under which the revenue formula
    has no E[f] term (the term the curve drops as asymptotically negligible).
    """
    deltas = [float(d) for d in delta_grid]
    for d in deltas:
        if not 0.0 <= d <= 0.5:
            raise ValueError(f"delta grid values must lie in [0, 0.5], got {d}")
    if n is None:
        return [
            MajorityCurvePoint(
                math.inf, d,
                (1.0 - 2.0 * d) * gaussian.INV_SQRT_2PI,
                gaussian.majority_asymptotics(d, 1).ns,
                gaussian.INV_SQRT_2PI, 0.5, 0.25,
            )
            for d in deltas
        ]
    if not 1 <= n <= MAX_EXACT_COUNT_N:
        raise ValueError(f"finite majority curve needs 1 <= n <= {MAX_EXACT_COUNT_N}")
    w = binomial_weights(n)
    nu = 2.0 * np.arange(n + 1) - n
    j0 = (n + 1) // 2
    e_nu_plus = float((w[j0:] * nu[j0:]).sum())
    mean = float(w[j0:].sum())
    points = []
    for d in deltas:
        joint = joint_count_distribution(n, d)
        stab = float(joint.suffix_mass()[j0, j0])
        ns = min(1.0, max(0.0, 2.0 * (mean - stab)))
        points.append(MajorityCurvePoint(
            n, d, (1.0 - 2.0 * d) * e_nu_plus / math.sqrt(n), ns,
            e_nu_plus / math.sqrt(n), mean,
            0.5 * mean + (1.0 - 2.0 * d) * e_nu_plus / (2.0 * n),
        ))
    return points


CSV_HEADER = "regime,n,delta,b,r,threshold,ns,surplus_per_capita,revenue_normalized"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def frontier_csv(points: Sequence[FrontierPoint]) -> str:
    lines = [CSV_HEADER]
    for p in points:
        lines.append(",".join([
            p.regime, _fmt(p.n), _fmt(p.delta), _fmt(p.b), _fmt(p.r), _fmt(p.threshold),
            _fmt(p.ns), _fmt(p.surplus_per_capita), _fmt(p.revenue_normalized),
        ]))
    return "\n".join(lines) + "\n"


def majority_curve_csv(points: Sequence[MajorityCurvePoint], b_column: float = 1.0) -> str:
    """Majority curve in the shared schema.

    The r column carries the x-axis value R/sqrt(n); the b column is fixed
    at 1.0, the bias under which the revenue formula has no E[f] term, which
    is the term the curve drops as asymptotically negligible.
    """
    lines = [CSV_HEADER]
    for p in points:
        regime = "finite" if math.isfinite(p.n) else "asymptotic"
        lines.append(",".join([
            regime, _fmt(p.n), _fmt(p.delta), _fmt(b_column), _fmt(p.revenue_over_sqrt_n),
            "0", _fmt(p.ns), _fmt(p.surplus_per_capita), _fmt(p.revenue_normalized),
        ]))
    return "\n".join(lines) + "\n"
