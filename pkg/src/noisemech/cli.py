"""Command-line surface.

Subcommands: analyze, transfers, optimize, frontier, majority-curve, verify,
privacy. Output is plain text or CSV with 12 significant digits; identical
invocations produce byte-identical files. Exit codes: 0 success, 1
infeasibility or failed verification, 2 usage error.

NOISEMECH_THREADS is accepted as an optional parallelism hint (default: all
cores); the current evaluation is deterministic and single-process, so the
hint is validated and recorded but changes nothing.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import gaussian, hypercube, mechanism, noise, optimize

_GRID_TOL = 1e-12


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def parse_grid(text: str) -> list[float]:
    """start:stop:step (endpoints inclusive within 1e-12), a comma list, or one value."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise UsageError(f"grid endpoints must be reals, got {text!r}") from None
        if step <= 0 or stop < start:
            raise UsageError(f"grid needs stop >= start and step > 0, got {text!r}")
        count = int(math.floor((stop - start) / step + _GRID_TOL)) + 1
        values = [start + k * step for k in range(count)]
        if abs(values[-1] - stop) <= _GRID_TOL:
            values[-1] = stop  # endpoint inclusive, snapped against 1-ulp drift
        return values
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"could not parse grid {text!r}") from None


@dataclass
class RunConfig:
    """Validated invocation: one command plus its economy and sweep flags."""

    command: str
    delta: Optional[float] = None
    b: float = 0.0
    n: Optional[int] = None
    setting: str = "noisy-report"
    spec_path: Optional[str] = None
    out: Optional[str] = None
    report_out: Optional[str] = None
    r: Optional[float] = None
    r_grid: list[float] = field(default_factory=list)
    delta_grid: list[float] = field(default_factory=list)
    regime: str = "asymptotic"
    task: Optional[str] = None
    scope: str = "all-boolean"
    suite: Optional[str] = None
    mc_samples: Optional[int] = None
    seed: int = 0
    eps: Optional[float] = None
    threads: Optional[int] = None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisemech", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def econ(p, need_delta=True):
        p.add_argument("--delta", type=float, required=need_delta)
        p.add_argument("--b", type=float, default=0.0)
        p.add_argument("--setting", choices=mechanism.SETTINGS, default="noisy-report")

    p = sub.add_parser("analyze", help="statistics of one allocation rule")
    p.add_argument("--spec", required=True)
    econ(p)
    p.add_argument("--mc-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("transfers", help="optimal transfers and constraint report")
    p.add_argument("--spec", required=True)
    econ(p)
    p.add_argument("--report-out", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("optimize", help="threshold optimizers and oracles")
    p.add_argument("--task", required=True,
                   choices=["revenue-max", "surplus-max", "min-bias", "ns-min"])
    p.add_argument("--n", type=int, required=True)
    econ(p)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--regime", choices=["finite", "asymptotic"], default="finite")
    p.add_argument("--scope", choices=["all-boolean", "anonymous"], default="all-boolean")
    p.add_argument("--out", default=None)

    p = sub.add_parser("frontier", help="noise-sensitivity / revenue frontier CSV")
    econ(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--regime", choices=["finite", "asymptotic"], default="asymptotic")
    p.add_argument("--r-grid", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("majority-curve", help="majority rule curve CSV")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--delta-grid", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True, choices=["oracle-n2", "oracle-n4", "identities"])
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--setting", choices=mechanism.SETTINGS, default="noisy-report")
    p.add_argument("--r-grid", default="0.05:0.35:0.05")
    p.add_argument("--out", default=None)

    p = sub.add_parser("privacy", help="convert between eps and delta")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--eps", type=float)
    group.add_argument("--delta", type=float)
    return parser


def parse_args(argv: Sequence[str]) -> RunConfig:
    if not argv:
        raise UsageError("a command is required; see --help")
    parser = _build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig(command=ns.command)

    threads_env = os.environ.get("NOISEMECH_THREADS")
    if threads_env is not None:
        try:
            cfg.threads = int(threads_env)
            if cfg.threads < 1:
                raise ValueError
        except ValueError:
            raise UsageError(f"NOISEMECH_THREADS must be a positive integer, got {threads_env!r}") from None

    for name in ("delta", "b", "n", "setting", "out", "r", "regime", "task",
                  "scope", "suite", "seed", "eps"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    if hasattr(ns, "spec"):
        cfg.spec_path = ns.spec
    if hasattr(ns, "report_out"):
        cfg.report_out = ns.report_out
    if hasattr(ns, "mc_samples"):
        cfg.mc_samples = ns.mc_samples
    if hasattr(ns, "r_grid") and ns.r_grid is not None:
        cfg.r_grid = parse_grid(ns.r_grid)
    if hasattr(ns, "delta_grid"):
        cfg.delta_grid = parse_grid(ns.delta_grid)

    if cfg.command == "privacy":
        if cfg.eps is not None and cfg.eps <= 0:
            raise UsageError("eps must be positive")
        if cfg.delta is not None and not 0.0 < cfg.delta < 0.5:
            raise UsageError("delta must be in (0, 0.5)")
        return cfg
    if cfg.command == "majority-curve":
        for d in cfg.delta_grid:
            if not 0.0 <= d <= 0.5:
                raise UsageError("delta-grid values must be in [0, 0.5]")
        return cfg
    if cfg.delta is not None and not 0.0 < cfg.delta < 0.5:
        raise UsageError("delta must be in (0, 0.5)")
    if not 0.0 <= cfg.b <= 1.0:
        raise UsageError("b must be in [0, 1]")
    for r in cfg.r_grid + ([cfg.r] if cfg.r is not None else []):
        if not 0.0 < r <= gaussian.INV_SQRT_2PI + 1e-12:
            raise UsageError("r must be in (0, 1/sqrt(2 pi)]")
    if cfg.command == "optimize" and cfg.task != "revenue-max" and cfg.r is None:
        raise UsageError(f"--r is required for task {cfg.task}")
    if cfg.command == "frontier" and cfg.regime == "finite" and cfg.n is None:
        raise UsageError("--n is required for the finite regime")
    if cfg.mc_samples is not None and cfg.mc_samples < 1:
        raise UsageError("mc-samples must be >= 1")
    return cfg


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_function(path: str) -> hypercube.HypercubeFunction:
    return hypercube.build_function(Path(path).read_text())


def _cmd_analyze(cfg: RunConfig) -> int:
    f = _load_function(cfg.spec_path)
    params = mechanism.MechanismParams(f.n, cfg.delta, cfg.b, cfg.setting)
    alt = "imperfect-knowledge" if cfg.setting == "noisy-report" else "noisy-report"
    params_alt = mechanism.MechanismParams(f.n, cfg.delta, cfg.b, alt)
    lines = []
    kind = "dense" if isinstance(f, hypercube.DenseFunction) else "anonymous"
    lines.append(f"kind = {kind}")
    lines.append(f"n = {f.n}")
    lines.append(f"mean = {_fmt(f.mean())}")
    lines.append(f"degree1_sum = {_fmt(f.mean_nu())}")
    mono = hypercube.monotonicity_check(f, "monotone")
    marg = hypercube.monotonicity_check(f, "marginally-monotone")
    lines.append(f"monotone = {str(mono).lower()}")
    lines.append(f"marginally_monotone = {str(marg).lower()}")
    dense_view = f if isinstance(f, hypercube.DenseFunction) else None
    if dense_view is None and f.n <= hypercube.MAX_DENSE_N:
        dense_view = f.to_dense()
    if dense_view is not None:
        spectrum = hypercube.fourier_transform(dense_view)
        degw = spectrum.weight_by_degree()
        lines.append("spectral_weight_by_degree = " + ",".join(_fmt(v) for v in degw))
        lines.append("influences = " + ",".join(_fmt(v) for v in hypercube.influences(dense_view)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lines.append(f"revenue_{params.setting.replace('-', '_')} = {_fmt(mechanism.revenue(f, params))}")
        lines.append(f"revenue_{alt.replace('-', '_')} = {_fmt(mechanism.revenue(f, params_alt))}")
        lines.append(f"revenue_normalized = {_fmt(mechanism.revenue_normalized(f, params))}")
    lines.append(f"surplus = {_fmt(mechanism.surplus(f, params))}")
    lines.append(f"surplus_per_capita = {_fmt(mechanism.surplus(f, params) / f.n)}")
    if f.is_boolean:
        exact_ok = isinstance(f, hypercube.DenseFunction) or f.n <= noise.MAX_EXACT_COUNT_N
        if exact_ok:
            ns_value = noise.sensitivity_exact(f, cfg.delta)
            lines.append(f"stability = {_fmt(noise.stability_exact(f, cfg.delta))}")
            lines.append(f"ns_exact = {_fmt(ns_value)}")
        else:
            sys.stderr.write(
                f"warning: n = {f.n} exceeds the exact cutoff {noise.MAX_EXACT_COUNT_N}; "
                "falling back to Monte Carlo\n"
            )
            samples = cfg.mc_samples or 10**6
            est = noise.sensitivity_monte_carlo(f, cfg.delta, samples, cfg.seed)
            ns_value = est.estimate
            lines.append(f"ns_monte_carlo = {_fmt(est.estimate)}")
            lines.append(f"ns_stderr = {_fmt(est.stderr)}")
        if cfg.mc_samples is not None and exact_ok:
            est = noise.sensitivity_monte_carlo(f, cfg.delta, cfg.mc_samples, cfg.seed)
            lines.append(f"ns_monte_carlo = {_fmt(est.estimate)}")
            lines.append(f"ns_stderr = {_fmt(est.stderr)}")
        lines.append(
            "surplus_distortion_bound = "
            + _fmt(mechanism.surplus_distortion_bound(f, params, ns=ns_value))
        )
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def _cmd_transfers(cfg: RunConfig) -> int:
    f = _load_function(cfg.spec_path)
    params = mechanism.MechanismParams(f.n, cfg.delta, cfg.b, cfg.setting)
    schedule = mechanism.optimal_interim_transfers(f, params)
    lines = [f"setting = {params.setting}"]
    for i in range(params.n):
        lines.append(
            f"agent {i}: t_bar(-1) = {_fmt(schedule.interim.v_minus[i])}, "
            f"t_bar(+1) = {_fmt(schedule.interim.v_plus[i])}"
        )
    lines.append(f"expected_total_transfer = {_fmt(schedule.expected_total())}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lines.append(f"revenue_formula = {_fmt(mechanism.revenue(f, params))}")
    if schedule.anonymous_expost is not None:
        lines.append("anonymous_expost = " + ",".join(_fmt(v) for v in schedule.anonymous_expost))
    # interim families only: the min-norm ex-post vector reproduces the
    # interim pairs but is not itself a dominant-strategy implementation
    report = mechanism.check_constraints(f, schedule, params, ("bn-ic", "iir"))
    lines.append(f"constraints_pass = {str(report.ok).lower()}")
    _emit("\n".join(lines) + "\n", cfg.out)
    if cfg.report_out is not None:
        Path(cfg.report_out).write_text(report.to_csv())
    return 0


def _cmd_optimize(cfg: RunConfig) -> int:
    params = mechanism.MechanismParams(cfg.n, cfg.delta, cfg.b, cfg.setting)
    lines = []
    try:
        if cfg.task == "revenue-max":
            res = optimize.revenue_max_threshold(params)
            lines.append("tau_closed_form = " + ("undefined" if res.tau_closed_form is None else _fmt(res.tau_closed_form)))
            lines.append(f"tau_pointwise = {_fmt(res.tau_pointwise)}")
            lines.append(f"finite_opt_nu = {res.finite_opt_nu}")
            lines.append(f"finite_opt_revenue = {_fmt(res.finite_opt_revenue)}")
            lines.append(f"finite_opt_revenue_normalized = {_fmt(res.finite_opt_revenue_normalized)}")
            if res.note:
                lines.append(f"note = {res.note}")
        elif cfg.task in ("surplus-max", "min-bias"):
            fn = optimize.surplus_max_threshold if cfg.task == "surplus-max" else optimize.min_bias_threshold
            point = fn(params, cfg.r, cfg.regime)
            for name in ("regime", "n", "delta", "b", "r", "threshold", "ns",
                          "surplus_per_capita", "revenue_normalized", "mean"):
                value = getattr(point, name)
                lines.append(f"{name} = {value if isinstance(value, str) else _fmt(value)}")
        else:
            res = optimize.ns_min_bruteforce(params, cfg.r, cfg.scope)
            lines.append(f"feasible_count = {res.feasible_count}")
            if res.feasible_count == 0:
                lines.append("infeasible = true")
                _emit("\n".join(lines) + "\n", cfg.out)
                return 1
            lines.append(f"min_ns = {_fmt(res.min_ns)}")
            lines.append(f"argmin_count = {len(res.argmin_functions)}")
            lines.append("argmin_functions = " + ",".join(str(i) for i in res.argmin_functions[:16]))
            lines.append(f"best_ltf_ns = {_fmt(res.best_ltf_ns)}")
            lines.append(f"best_ltf_threshold = {res.best_ltf_threshold}")
            lines.append(f"ltf_gap = {_fmt(res.ltf_gap)}")
    except optimize.InfeasibleTargetError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return 1
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def _cmd_frontier(cfg: RunConfig) -> int:
    n = cfg.n if cfg.regime == "finite" else 1
    params = mechanism.MechanismParams(n, cfg.delta, cfg.b, cfg.setting)
    points = optimize.pareto_frontier(params, cfg.r_grid, cfg.regime)
    if not points:
        sys.stderr.write("infeasible: no grid point is attainable\n")
        return 1
    _emit(optimize.frontier_csv(points), cfg.out)
    return 0


def _cmd_majority_curve(cfg: RunConfig) -> int:
    points = optimize.majority_curve(cfg.n, cfg.delta_grid)
    _emit(optimize.majority_curve_csv(points), cfg.out)
    return 0


def _cmd_verify(cfg: RunConfig) -> int:
    lines = []
    ok = True
    if cfg.suite in ("oracle-n2", "oracle-n4"):
        n = 2 if cfg.suite == "oracle-n2" else 4
        params = mechanism.MechanismParams(n, cfg.delta, cfg.b, cfg.setting)
        lines.append("r,feasible_count,min_ns,best_ltf_ns,ltf_gap,sandwich_ok")
        for r in cfg.r_grid:
            res = optimize.ns_min_bruteforce(params, r, "all-boolean")
            if res.feasible_count == 0:
                lines.append(f"{_fmt(r)},0,nan,nan,nan,true")
                continue
            sandwich = res.min_ns <= res.best_ltf_ns + 1e-12
            ok &= sandwich and res.ltf_gap <= 0.06
            lines.append(
                f"{_fmt(r)},{res.feasible_count},{_fmt(res.min_ns)},"
                f"{_fmt(res.best_ltf_ns)},{_fmt(res.ltf_gap)},{str(sandwich).lower()}"
            )
    else:
        checks = []
        rho_grid = np.arange(-0.9, 0.95, 0.1)
        worst = max(
            abs(gaussian.binormal_cdf(0.0, 0.0, float(r)) - (0.25 + math.asin(float(r)) / (2 * math.pi)))
            for r in rho_grid
        )
        checks.append(("binormal_orthant_identity", worst, 1e-10))
        dict_f = hypercube.DenseFunction(1, [0.0, 1.0])
        worst = max(abs(noise.sensitivity_exact(dict_f, d) - d) for d in np.arange(0.05, 0.46, 0.05))
        checks.append(("dictator_sensitivity_identity", worst, 1e-12))
        rng = np.random.default_rng(20240901)
        worst_p = worst_rt = 0.0
        for _ in range(20):
            nn = int(rng.integers(2, 9))
            f = hypercube.DenseFunction(nn, rng.random(1 << nn))
            spec = hypercube.fourier_transform(f)
            worst_p = max(worst_p, abs((spec.coeffs**2).sum() - float((f.values**2).mean())))
            back = hypercube.inverse_fourier(spec)
            worst_rt = max(worst_rt, float(np.abs(back.values - f.values).max()))
        checks.append(("parseval", worst_p, 1e-10))
        checks.append(("fourier_round_trip", worst_rt, 1e-12))
        lines.append("check,error,tolerance,pass")
        for name, err, tol in checks:
            good = err <= tol
            ok &= good
            lines.append(f"{name},{_fmt(err)},{_fmt(tol)},{str(good).lower()}")
    lines.append(f"suite_pass = {str(ok).lower()}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0 if ok else 1


def _cmd_privacy(cfg: RunConfig) -> int:
    if cfg.eps is not None:
        delta = gaussian.privacy_convert("eps_to_delta", cfg.eps)
        sys.stdout.write(f"delta = {_fmt(delta)}\n")
    else:
        eps = gaussian.privacy_convert("delta_to_eps", cfg.delta)
        sys.stdout.write(f"eps = {_fmt(eps)}\n")
    return 0


_COMMANDS = {
    "analyze": _cmd_analyze,
    "transfers": _cmd_transfers,
    "optimize": _cmd_optimize,
    "frontier": _cmd_frontier,
    "majority-curve": _cmd_majority_curve,
    "verify": _cmd_verify,
    "privacy": _cmd_privacy,
}


def run(cfg: RunConfig) -> int:
    try:
        return _COMMANDS[cfg.command](cfg)
    except optimize.InfeasibleTargetError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return 1
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_args(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
