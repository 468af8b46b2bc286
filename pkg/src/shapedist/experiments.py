"""Seeded Monte Carlo drivers: rate fits, event frequencies, lemma suite.

Every run is reproducible: replicate ``r`` at sample size ``n`` draws from
a counter-based generator keyed by ``seed_for(base_seed, n, r)``, results
are merged in (n, replicate) order regardless of worker count, and CSV
floats are written with ``repr`` so identical configs give identical bytes.
"""

import json
import math
import os
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from .bounds import (
    bernstein_cell_bound,
    bernstein_residual_bound,
    binomial_cell_bound,
    cell_variance_report,
    compute_quantities,
    convexity_event_bound,
    interp_gap_report,
    mesh_ratio_check,
    slope_difference_bound,
    trapezoid_remainder_bounds,
)
from .convexlse import FitError, fit_lse
from .curves import sup_norm
from .empirical import ecdf, ecdf_curve, integrated_ecdf, integrated_ecdf_curve, sample, seed_for
from .models import constants, knot_mesh_convex, knot_mesh_monotone, make_model
from .monotone import broken_line_error_report, concavity_event, kw_tail_bound, lcm
from .spline import (
    convexity_event,
    interp_integrated_cdf,
    interp_integrated_ecdf,
    smooth_interp_error_bounds,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RateFit",
    "RateResult",
    "k_rule",
    "run_monotone_rate",
    "run_convex_rate",
    "run_event_frequency",
    "run_lemma_suite",
    "REPLICATE_COLUMNS",
]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """Settings shared by all experiment drivers.

    ``c0`` scales the cell-count rule ``k_n = ceil((c0 * beta^2 * n /
    log n)^(1/(2m+1)))`` (m = 1 monotone, m = 2 convex); ``k_override``
    pins ``k_n`` instead.  ``c0_sweep`` is used by the event-frequency
    driver only.
    """

    model: str = "truncated-exponential"
    params: tuple = (1.0,)
    target: str = "convex"
    n_grid: tuple = (512, 1024, 2048, 4096, 8192)
    replicates: int = 100
    base_seed: int = 1
    c0: float = 1.0
    c0_sweep: tuple = (0.5, 1.0, 2.0, 4.0)
    tau_quantile: float = 0.75
    out: str = ""
    workers: int = 1
    k_override: int = 0


def _validate(config: ExperimentConfig, min_sizes: int = 1) -> None:
    if not config.model:
        raise ConfigError("no model given")
    if config.target not in ("monotone", "convex"):
        raise ConfigError(f"unknown target {config.target!r}")
    if len(config.n_grid) < min_sizes:
        raise ConfigError(f"need at least {min_sizes} sample sizes, got {len(config.n_grid)}")
    sizes = list(config.n_grid)
    if any(n < 2 for n in sizes) or sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ConfigError("n_grid must be strictly increasing sizes >= 2")
    if config.replicates < 1:
        raise ConfigError("replicates must be >= 1")
    if config.c0 <= 0:
        raise ConfigError("c0 must be positive")
    if config.workers < 1:
        raise ConfigError("workers must be >= 1")
    if config.k_override < 0 or config.k_override == 1:
        raise ConfigError("k_override must be 0 (off) or >= 2")


def k_rule(n: int, beta: float, m: int, c0: float = 1.0) -> int:
    """Cell count ``ceil((c0 beta^2 n / log n)^(1/(2m+1)))``, at least 2."""
    if n < 2:
        raise ValueError("need n >= 2")
    k = math.ceil((c0 * beta ** 2 * n / math.log(n)) ** (1.0 / (2 * m + 1)))
    return max(2, k)


@dataclass(frozen=True)
class RateFit:
    """Ordinary least squares fit of log mean distance vs log(n^-1 log n)."""

    slope: float
    intercept: float
    stderr: float
    pairs: tuple


@dataclass(frozen=True)
class RateResult:
    fit_F: RateFit
    fit_H: "RateFit | None"
    rows: list
    summary: list


def _ols(x, y) -> RateFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3:
        raise ConfigError("rate fit needs at least 3 sample sizes")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else float("nan")
    return RateFit(slope=float(coef[0]), intercept=float(coef[1]),
                   stderr=stderr, pairs=tuple(zip(x.tolist(), y.tolist())))


# ---------------------------------------------------------------------------
# replicate workers (top level so they can cross process boundaries)

def _monotone_replicate(task):
    name, params, tau_q, n, rep, seed, k = task
    model = make_model(name, params, tau_q)
    data = sample(model, n, seed)
    maj = lcm(data)
    xmax = float(data.x[-1])
    dist = sup_norm(maj.as_curve(), ecdf_curve(data), (0.0, xmax))
    mesh = knot_mesh_monotone(model, k)
    return {
        "model": name, "n": n, "k": k, "replicate": rep,
        "sup_F_diff": float(dist), "sup_H_diff": None,
        "event_An": int(concavity_event(data, mesh)), "seed": seed,
    }


def _convex_replicate(task):
    name, params, tau_q, n, rep, seed, k = task
    model = make_model(name, params, tau_q)
    data = sample(model, n, seed)
    try:
        fit = fit_lse(data)
    except FitError as err:
        raise FitError(f"n={n} replicate={rep} seed={seed}: {err}") from err
    tau = model.tau
    cap = max(tau, float(data.x[-1])) * 1.5 + 1.0
    sup_f = sup_norm(fit.cdf_curve(cap), ecdf_curve(data, upto=cap), (0.0, tau))
    sup_h = sup_norm(fit.integrated_cdf_curve(cap),
                     integrated_ecdf_curve(data, upto=cap), (0.0, tau))
    mesh = knot_mesh_convex(model, k)
    return {
        "model": name, "n": n, "k": k, "replicate": rep,
        "sup_F_diff": float(sup_f), "sup_H_diff": float(sup_h),
        "event_An": int(convexity_event(data, mesh)), "seed": seed,
    }


def _monotone_event_replicate(task):
    name, params, tau_q, n, rep, seed, k = task
    model = make_model(name, params, tau_q)
    data = sample(model, n, seed)
    return {
        "model": name, "n": n, "k": k, "replicate": rep,
        "sup_F_diff": None, "sup_H_diff": None,
        "event_An": int(concavity_event(data, knot_mesh_monotone(model, k))),
        "seed": seed,
    }


def _convex_event_replicate(task):
    name, params, tau_q, n, rep, seed, k = task
    model = make_model(name, params, tau_q)
    data = sample(model, n, seed)
    return {
        "model": name, "n": n, "k": k, "replicate": rep,
        "sup_F_diff": None, "sup_H_diff": None,
        "event_An": int(convexity_event(data, knot_mesh_convex(model, k))),
        "seed": seed,
    }


def _run_tasks(worker, tasks, workers: int):
    if workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (workers * 8))
        with Pool(processes=workers) as pool:
            return pool.map(worker, tasks, chunksize=chunk)
    return [worker(t) for t in tasks]


# ---------------------------------------------------------------------------
# CSV / JSON emission

REPLICATE_COLUMNS = ("model", "n", "k", "replicate",
                     "sup_F_diff", "sup_H_diff", "event_An", "seed")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: str, schema: str, meta: dict, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {schema}\n")
        fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def _summary_path(path: str) -> str:
    root, ext = os.path.splitext(path)
    return root + ".summary" + (ext or ".csv")


def _meta(config: ExperimentConfig) -> dict:
    return {
        "model": config.model,
        "params": ";".join(repr(float(p)) for p in config.params),
        "target": config.target,
        "c0": repr(float(config.c0)),
        "tau_quantile": repr(float(config.tau_quantile)),
        "base_seed": config.base_seed,
        "replicates": config.replicates,
        "k_override": config.k_override,
    }


# ---------------------------------------------------------------------------
# drivers

def _rate_run(config: ExperimentConfig, worker, ks: dict) -> list:
    tasks = [
        (config.model, config.params, config.tau_quantile,
         n, rep, seed_for(config.base_seed, n, rep), ks[n])
        for n in config.n_grid for rep in range(config.replicates)
    ]
    return _run_tasks(worker, tasks, config.workers)


def _per_n_summary(config: ExperimentConfig, rows, ks: dict) -> list:
    out = []
    for n in config.n_grid:
        sub = [r for r in rows if r["n"] == n]
        mean_f = float(np.mean([r["sup_F_diff"] for r in sub]))
        have_h = sub[0]["sup_H_diff"] is not None
        mean_h = float(np.mean([r["sup_H_diff"] for r in sub])) if have_h else None
        out.append({
            "model": config.model, "n": n, "k": ks[n],
            "mean_sup_F_diff": mean_f,
            "mean_sup_H_diff": mean_h,
            "root_n_mean_sup_F_diff": math.sqrt(n) * mean_f,
            "root_n_mean_sup_H_diff": math.sqrt(n) * mean_h if have_h else None,
            "event_freq": float(np.mean([r["event_An"] for r in sub])),
        })
    return out


_SUMMARY_COLUMNS = ("model", "n", "k", "mean_sup_F_diff", "mean_sup_H_diff",
                    "root_n_mean_sup_F_diff", "root_n_mean_sup_H_diff", "event_freq")


def _emit_rate(config: ExperimentConfig, rows, summary) -> None:
    if not config.out:
        return
    _write_csv(config.out, "shapedist-rate-v1", _meta(config), REPLICATE_COLUMNS, rows)
    _write_csv(_summary_path(config.out), "shapedist-rate-summary-v1",
               _meta(config), _SUMMARY_COLUMNS, summary)


def _log_xy(config: ExperimentConfig, summary, key: str):
    x = [math.log(math.log(n) / n) for n in config.n_grid]
    y = [math.log(row[key]) for row in summary]
    return x, y


def run_monotone_rate(config: ExperimentConfig) -> RateResult:
    """Sup-norm distance of the concave-majorant estimator from the ECDF.

    For each n, averages ``sup |Fhat_n - Fn|`` over replicates and fits the
    log mean against ``log(n^-1 log n)``; the fitted slope estimates the
    convergence exponent (2/3 for strictly curved targets).
    """
    _validate(config, min_sizes=3)
    model = make_model(config.model, config.params, config.tau_quantile)
    if not np.isfinite(model.support_end):
        raise ConfigError("monotone rate run needs a finite-support model")
    cons = constants(model)
    if not (np.isfinite(cons.beta1) and cons.beta1 > 0):
        raise ConfigError("monotone rate run needs beta1 > 0")
    ks = {n: config.k_override or k_rule(n, cons.beta1, 1, config.c0)
          for n in config.n_grid}
    rows = _rate_run(config, _monotone_replicate, ks)
    summary = _per_n_summary(config, rows, ks)
    fit = _ols(*_log_xy(config, summary, "mean_sup_F_diff"))
    _emit_rate(config, rows, summary)
    return RateResult(fit_F=fit, fit_H=None, rows=rows, summary=summary)


def run_convex_rate(config: ExperimentConfig) -> RateResult:
    """Sup-norm distances of the convex LSE from the ECDF and its integral.

    Fits two exponents: one for ``sup |Ftilde_n - Fn|`` (target 3/5) and
    one for ``sup |Htilde_n - Yn|`` (target 4/5), both on [0, tau].
    """
    _validate(config, min_sizes=3)
    model = make_model(config.model, config.params, config.tau_quantile)
    cons = constants(model)
    if not (np.isfinite(cons.beta2) and cons.beta2 > 0):
        raise ConfigError("convex rate run needs beta2 > 0")
    ks = {n: config.k_override or k_rule(n, cons.beta2, 2, config.c0)
          for n in config.n_grid}
    rows = _rate_run(config, _convex_replicate, ks)
    summary = _per_n_summary(config, rows, ks)
    fit_f = _ols(*_log_xy(config, summary, "mean_sup_F_diff"))
    fit_h = _ols(*_log_xy(config, summary, "mean_sup_H_diff"))
    _emit_rate(config, rows, summary)
    return RateResult(fit_F=fit_f, fit_H=fit_h, rows=rows, summary=summary)


_EVENT_SUMMARY_COLUMNS = ("model", "target", "c0", "n", "k", "freq", "bound", "vacuous")


def run_event_frequency(config: ExperimentConfig) -> list:
    """Empirical frequency of the shape event across the c0 sweep.

    The event is concavity of the broken-line interpolant (monotone) or
    ordered second-derivative slopes of the spline interpolant (convex) on
    the rule-chosen mesh.  Each summary row carries the analytic bound on
    the failure probability and whether that bound is vacuous (>= 1).
    """
    _validate(config)
    model = make_model(config.model, config.params, config.tau_quantile)
    cons = constants(model)
    if config.target == "monotone":
        if not np.isfinite(model.support_end):
            raise ConfigError("monotone events need a finite-support model")
        beta, m, worker = cons.beta1, 1, _monotone_event_replicate
    else:
        beta, m, worker = cons.beta2, 2, _convex_event_replicate
    if not (np.isfinite(beta) and beta > 0):
        raise ConfigError("event frequency run needs a strictly curved model")

    sweep = (None,) if config.k_override else tuple(config.c0_sweep)
    rows, summary = [], []
    for c0 in sweep:
        for n in config.n_grid:
            k = config.k_override or k_rule(n, beta, m, c0)
            tasks = [(config.model, config.params, config.tau_quantile,
                      n, rep, seed_for(config.base_seed, n, rep), k)
                     for rep in range(config.replicates)]
            got = _run_tasks(worker, tasks, config.workers)
            rows.extend(got)
            freq = float(np.mean([r["event_An"] for r in got]))
            if config.target == "monotone":
                bound = float(kw_tail_bound(n, k, beta))
            else:
                bound = float(convexity_event_bound(n, k, beta))
            summary.append({
                "model": config.model, "target": config.target,
                "c0": float(c0) if c0 is not None else 0.0,
                "n": n, "k": k, "freq": freq, "bound": bound,
                "vacuous": int(bound >= 1.0),
            })
    if config.out:
        _write_csv(config.out, "shapedist-events-v1", _meta(config),
                   REPLICATE_COLUMNS, rows)
        _write_csv(_summary_path(config.out), "shapedist-events-summary-v1",
                   _meta(config), _EVENT_SUMMARY_COLUMNS, summary)
    return summary


# ---------------------------------------------------------------------------
# lemma suite

def _check(name: str, lhs: float, rhs: float, ok=None) -> dict:
    ok = bool(lhs <= rhs) if ok is None else bool(ok)
    return {"name": name, "pass": ok, "lhs": float(lhs), "rhs": float(rhs),
            "margin": float(rhs - lhs)}


def _suite_deterministic(model, config: ExperimentConfig) -> list:
    checks = []
    cons = constants(model)

    guarantee = 5.0 * cons.gamma1_tilde * cons.R
    k_fine = max(2, int(math.ceil(guarantee))) if np.isfinite(guarantee) else 16
    max_ratio, threshold_k = mesh_ratio_check(model, knot_mesh_convex(model, k_fine))
    checks.append(_check(f"mesh-ratio[k={k_fine}]", max_ratio, 2.0))
    checks.append(_check("mesh-ratio-threshold", float(threshold_k),
                         float(k_fine), ok=0 < threshold_k <= k_fine))

    gap = interp_gap_report(model, (25, 50, 100, 200))
    for row in gap["rows"]:
        checks.append(_check(f"interp-gap[k={row['k']}]",
                             row["max_abs_gap"], row["bound"]))
    checks.append(_check("interp-gap-decay", gap["final_over_first"], 0.25))

    rng = np.random.Generator(np.random.Philox(key=seed_for(config.base_seed, 0, 0)))
    worst = math.inf
    ok = True
    for _ in range(1000):
        u = np.sort(rng.random(2)) * model.tau
        if u[1] - u[0] < 1e-6:
            continue
        try:
            lo, hi, value = trapezoid_remainder_bounds(model, float(u[0]), float(u[1]))
        except AssertionError:
            ok = False
            break
        worst = min(worst, value - lo, hi - value)
    checks.append(_check("taylor-bracket[pairs=1000]", -worst, 0.0, ok=ok))

    mesh50 = knot_mesh_convex(model, 50)
    worst = -math.inf
    for j in range(1, 50):
        lhs, rhs = slope_difference_bound(model, mesh50, j)
        worst = max(worst, lhs - rhs)
    checks.append(_check("slope-difference[k=50]", worst, 0.0))

    data = sample(model, 1000, seed_for(config.base_seed, 1000, 0))
    mesh20 = knot_mesh_convex(model, 20)
    q = compute_quantities(data, model, mesh20)
    resid = float(np.max(np.abs((q.T - q.r) - ((q.R - q.r) + q.W + q.b))))
    scale = float(np.max(np.abs(q.T) + np.abs(q.r))) + 1.0
    checks.append(_check("defect-decomposition[n=1000,k=20]", resid, 1e-12 * scale))

    for k in (5, 20, 80, 200):
        mesh = knot_mesh_convex(model, k)
        for row in smooth_interp_error_bounds(model, mesh):
            checks.append(_check(f"{row['name']}[k={k}]", row["lhs"], row["rhs"]))
    for k in (5, 20, 80):
        row = broken_line_error_report(model, knot_mesh_convex(model, k))
        checks.append(_check(f"{row['name']}[k={k}]", row["lhs"], row["rhs"]))

    for row in cell_variance_report(model, knot_mesh_convex(model, 10)):
        checks.append(_check(row["name"], row["lhs"], row["rhs"]))
    return checks


def _suite_monte_carlo(model, config: ExperimentConfig) -> list:
    """Monte Carlo dominance checks for the three probabilistic bounds."""
    reps = config.replicates
    k = 3
    j = 2
    mesh = knot_mesh_convex(model, k)
    a = mesh.knots
    d = mesh.deltas
    p = mesh.p
    fstar = mesh.mass * p / float(d[j - 1])

    y = np.asarray(model.Fint(a), dtype=float)
    fv = np.asarray(model.F(a), dtype=float)
    s = interp_integrated_cdf(model, mesh).slopes
    dy = np.diff(y)
    t_det = 0.5 * (s[:-1] + s[1:]) * d - dy
    r_det = 0.5 * (fv[:-1] + fv[1:]) * d - dy

    sizes = (15000, 30000)
    abs_rr = {}
    abs_w = {}
    for n in sizes:
        rr = np.empty(reps)
        ww = np.empty(reps)
        for rep in range(reps):
            data = sample(model, n, seed_for(config.base_seed, n, rep))
            yn = integrated_ecdf(data, a)
            fn = ecdf(data, a)
            sn = interp_integrated_ecdf(data, mesh).slopes
            dyn = np.diff(yn)
            T = 0.5 * (sn[:-1] + sn[1:]) * d - dyn
            R = 0.5 * (fn[:-1] + fn[1:]) * d - dyn
            rr[rep] = abs(R[j - 1] - r_det[j - 1])
            ww[rep] = abs((T[j - 1] - t_det[j - 1]) - (R[j - 1] - r_det[j - 1]))
        abs_rr[n] = rr
        abs_w[n] = ww

    checks = []
    for n, delta in ((15000, 0.056), (15000, 0.075), (30000, 0.056)):
        freq = float(np.mean(abs_rr[n] > delta * p ** 3))
        bound = float(bernstein_cell_bound(n, delta, p, fstar))
        checks.append(_check(f"mc-raw-defect[n={n},delta={delta}]", freq, bound))
    for n, delta in ((15000, 1.0), (30000, 1.0), (30000, 1.3)):
        freq = float(np.mean(abs_w[n] > delta * p ** 3))
        bound = float(bernstein_residual_bound(n, delta, p, fstar))
        checks.append(_check(f"mc-residual[n={n},delta={delta}]", freq, bound))

    for n, pm, delta in ((40000, 0.01, 0.1), (40000, 0.01, 0.15), (100000, 0.005, 0.15)):
        hits = 0
        for rep in range(reps):
            g = np.random.Generator(np.random.Philox(key=seed_for(config.base_seed, n, rep)))
            frac = g.binomial(n, pm) / n
            hits += int(abs(frac - pm) >= delta * pm)
        freq = hits / reps
        for slack in (0.0, -0.1):
            bound = float(binomial_cell_bound(n, pm, delta, slack))
            checks.append(_check(
                f"mc-cell-mass[n={n},p={pm},delta={delta},slack={slack}]",
                freq, bound))
    return checks


def run_lemma_suite(config: ExperimentConfig) -> dict:
    """Run every deterministic inequality and Monte Carlo dominance check.

    Returns ``{"checks": [...], "pass": bool}`` where each check carries
    ``name``, ``pass``, ``lhs``, ``rhs``, ``margin``.  Writes JSON to
    ``config.out`` when set.
    """
    _validate(config)
    model = make_model(config.model, config.params, config.tau_quantile)
    checks = _suite_deterministic(model, config)
    checks.extend(_suite_monte_carlo(model, config))
    report = {"checks": checks, "pass": all(c["pass"] for c in checks)}
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return report
