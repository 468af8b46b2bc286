"""Per-cell trapezoid statistics and exponential tail bounds.

For a probability-equal knot mesh and a primitive G (integrated ECDF or
integrated CDF), each cell carries a "trapezoid defect"

    (average of the end slopes) * (cell width) - (increment of G),

computed once with interpolated slopes (complete cubic spline) and once
with the raw slopes of G itself.  The four resulting statistics -- spline
and raw, empirical and population -- drive every convexity-event bound:
the second-derivative slopes of the interpolants are exactly these
defects rescaled by 12 / width^3.

The module also evaluates the closed-form Bernstein/binomial tail bounds
for the statistics, the Taylor bracket for the population defect, and the
mesh-ratio and interpolation-gap checks used by the lemma suite.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .empirical import EmpiricalData, ecdf, integrated_ecdf
from .models import (
    AnalyticModel,
    KnotMesh,
    _extreme,
    constants,
    knot_mesh_convex,
    mean_value_knot,
)
from .spline import interp_integrated_cdf, interp_integrated_ecdf

__all__ = [
    "LemmaQuantities",
    "compute_quantities",
    "trapezoid_remainder_bounds",
    "slope_difference_bound",
    "mesh_ratio_check",
    "bernstein_cell_bound",
    "bernstein_slope_gap_bound",
    "bernstein_residual_bound",
    "convexity_event_bound",
    "binomial_cell_bound",
    "delta_schedule",
    "cell_variance",
    "cell_variance_bound",
    "cell_variance_report",
    "interp_gap_report",
]


@dataclass(frozen=True)
class LemmaQuantities:
    """Per-cell defect statistics on a knot mesh.

    All arrays have length ``k`` (one entry per cell).  Capital letters are
    empirical (built from a sample), lowercase their population analogues:

    * ``T`` / ``t`` : defect with complete-spline slopes at the cell ends;
    * ``R`` / ``r`` : defect with the raw slopes (ECDF / CDF values);
    * ``W = (T - t) - (R - r)`` : spline-vs-raw residual, random;
    * ``b = t - r`` : deterministic interpolation gap;
    * ``B = 12 T / delta^3`` : slope of the 2nd derivative of the spline
      interpolant of the integrated ECDF on each cell; ``Btilde`` the same
      with raw slopes (the Hermite version);
    * ``delta`` : cell widths; ``fstar`` : density at the in-cell point
      where density * width equals the cell mass.

    The identity ``T - r = (R - r) + W + b`` holds by construction and is
    asserted to 1e-12 relative accuracy.
    """

    T: np.ndarray
    R: np.ndarray
    t: np.ndarray
    r: np.ndarray
    W: np.ndarray
    b: np.ndarray
    B: np.ndarray
    Btilde: np.ndarray
    delta: np.ndarray
    fstar: np.ndarray


def _defect(slopes: np.ndarray, increments: np.ndarray, widths: np.ndarray) -> np.ndarray:
    return 0.5 * (slopes[:-1] + slopes[1:]) * widths - increments


def compute_quantities(data: EmpiricalData, model: AnalyticModel,
                       mesh: KnotMesh) -> LemmaQuantities:
    """Evaluate all per-cell statistics for one sample on one mesh."""
    a = mesh.knots
    widths = mesh.deltas

    yn = integrated_ecdf(data, a)
    fn = ecdf(data, a)
    sn = interp_integrated_ecdf(data, mesh).slopes
    y = np.asarray(model.Fint(a), dtype=float)
    fv = np.asarray(model.F(a), dtype=float)
    s = interp_integrated_cdf(model, mesh).slopes

    dyn = np.diff(yn)
    dy = np.diff(y)
    T = _defect(sn, dyn, widths)
    R = _defect(fn, dyn, widths)
    t = _defect(s, dy, widths)
    r = _defect(fv, dy, widths)
    W = (T - t) - (R - r)
    b = t - r

    scale = np.max(np.abs(T) + np.abs(r)) + 1.0
    if not np.allclose(T - r, (R - r) + W + b, rtol=0.0, atol=1e-12 * scale):
        raise AssertionError("defect decomposition failed to close")

    fstar = np.array([float(model.f(mean_value_knot(model, mesh, j)))
                      for j in range(1, mesh.k + 1)])
    return LemmaQuantities(
        T=T, R=R, t=t, r=r, W=W, b=b,
        B=12.0 * T / widths ** 3,
        Btilde=12.0 * R / widths ** 3,
        delta=widths.copy(),
        fstar=fstar,
    )


def trapezoid_remainder_bounds(model: AnalyticModel, s: float, t: float):
    """Taylor bracket for the population defect of one interval.

    The defect ``(F(s) + F(t))/2 * (t - s) - integral_s^t F`` is returned
    together with lower/upper bounds

        f'(s)(t-s)^3 / 12 + [inf or sup of f'' on [s, t]] (t-s)^4 / 24.

    Returns ``(lower, upper, value)``; raises if the bracket fails beyond
    roundoff.
    """
    if not 0.0 <= s < t:
        raise ValueError("need 0 <= s < t")
    value = 0.5 * (float(model.F(t)) + float(model.F(s))) * (t - s) \
        - (float(model.Fint(t)) - float(model.Fint(s)))
    cube = float(model.fprime(s)) * (t - s) ** 3 / 12.0
    quart = (t - s) ** 4 / 24.0
    lo = cube + _extreme(model.fsecond, s, t, "inf") * quart
    hi = cube + _extreme(model.fsecond, s, t, "sup") * quart
    tol = 1e-12 * max(1.0, abs(value), abs(lo), abs(hi))
    if value < lo - tol or value > hi + tol:
        raise AssertionError("Taylor bracket does not contain the defect")
    return lo, hi, value


def slope_difference_bound(model: AnalyticModel, mesh: KnotMesh, j: int):
    """One-sided bound for the drop of consecutive rescaled defects.

    For cells ``j`` and ``j+1`` (1-based) returns ``(lhs, rhs)`` with

        lhs = r_j / delta_j^3 - r_{j+1} / delta_{j+1}^3

    and ``rhs`` built from the exact difference quotient of ``f'`` across
    cell ``j`` (the mean-value representation of ``f'(a_j) - f'(a_{j-1})``)
    plus sup/inf corrections of ``f''`` over the two cells.
    """
    if not 1 <= j <= mesh.k - 1:
        raise ValueError("need 1 <= j <= k-1")
    a = mesh.knots
    d = mesh.deltas

    def defect(lo, hi):
        return 0.5 * (float(model.F(hi)) + float(model.F(lo))) * (hi - lo) \
            - (float(model.Fint(hi)) - float(model.Fint(lo)))

    rj = defect(a[j - 1], a[j])
    rj1 = defect(a[j], a[j + 1])
    lhs = rj / d[j - 1] ** 3 - rj1 / d[j] ** 3

    diff_quot = (float(model.fprime(a[j])) - float(model.fprime(a[j - 1]))) / d[j - 1]
    sup_j = _extreme(model.fsecond, a[j - 1], a[j], "sup")
    inf_j1 = _extreme(model.fsecond, a[j], a[j + 1], "inf")
    rhs = -diff_quot * d[j - 1] / 12.0 + (sup_j * d[j - 1] - inf_j1 * d[j]) / 24.0
    return lhs, rhs


def _mesh_ratios(model: AnalyticModel, mesh: KnotMesh) -> float:
    a = mesh.knots
    d = mesh.deltas
    fa = np.asarray(model.f(a), dtype=float)
    worst = float(np.max(fa[:-1] / fa[1:]))
    if mesh.k >= 2:
        worst = max(worst, float(np.max(d[1:] / d[:-1])))
    return worst


def mesh_ratio_check(model: AnalyticModel, mesh: KnotMesh):
    """Worst density/width ratio of adjacent cells, and the first good k.

    Returns ``(max_ratio, threshold_k)`` where ``max_ratio`` is the larger
    of ``max_j f(a_{j-1})/f(a_j)`` and ``max_j delta_{j+1}/delta_j`` for the
    given mesh, and ``threshold_k`` is the smallest cell count for which
    both stay <= 2 (or -1 if not found below an internal cap).  Raises when
    the mesh is fine enough that the ratio is guaranteed <= 2 (cell count
    at least 5 * gamma1_tilde * R) yet the bound fails.
    """
    cons = constants(model)
    guarantee = 5.0 * cons.gamma1_tilde * cons.R
    max_ratio = _mesh_ratios(model, mesh)
    if np.isfinite(guarantee) and mesh.k >= guarantee and max_ratio > 2.0:
        raise AssertionError("adjacent-cell ratio exceeds 2 on a fine mesh")

    cap = int(max(mesh.k, 16, np.ceil(guarantee) + 8 if np.isfinite(guarantee) else 16))
    threshold_k = -1
    for k in range(1, cap + 1):
        if _mesh_ratios(model, knot_mesh_convex(model, k)) <= 2.0:
            threshold_k = k
            break
    return max_ratio, threshold_k


def bernstein_cell_bound(n: int, delta: float, p: float, f_star: float) -> float:
    """Tail bound for the raw defect: prob(|R - r| > delta * p^3) is at most

        2 exp(-3 n delta^2 f*^2 p^3 / (1 + p delta f*)).
    """
    expo = 3.0 * n * delta ** 2 * f_star ** 2 * p ** 3 / (1.0 + p * delta * f_star)
    return 2.0 * np.exp(-expo)


def bernstein_slope_gap_bound(n: int, delta: float, p: float, f_star: float) -> float:
    """Tail bound for the spline defect against the population raw defect:
    prob(|T - r| > 3 delta p^3) is at most

        6 exp(-(n delta^2 f*^2 p^3 / 100) / (1 + p delta f* / 30)).
    """
    expo = (n * delta ** 2 * f_star ** 2 * p ** 3 / 100.0) \
        / (1.0 + p * delta * f_star / 30.0)
    return 6.0 * np.exp(-expo)


def bernstein_residual_bound(n: int, delta: float, p: float, f_star: float) -> float:
    """Tail bound for the spline-vs-raw residual W: prob(|W| > delta p^3)
    is at most ``4 exp(...)`` with the same exponent as the slope-gap bound.
    """
    expo = (n * delta ** 2 * f_star ** 2 * p ** 3 / 100.0) \
        / (1.0 + p * delta * f_star / 30.0)
    return 4.0 * np.exp(-expo)


#: reciprocal of the absolute constant in the convexity-event bound,
#: 8^2 * 144^2 * 16 * 200.
EVENT_BOUND_RECIP_K = 8 ** 2 * 144 ** 2 * 16 * 200


def convexity_event_bound(n: int, k: int, beta2: float) -> float:
    """Bound for the probability that the spline's second derivative fails
    to be convex on a k-cell mesh:

        12 k exp(-beta2^2 n p^5 / 4,246,732,800),   p = 1/k.
    """
    p = 1.0 / k
    return 12.0 * k * np.exp(-beta2 ** 2 * n * p ** 5 / EVENT_BOUND_RECIP_K)


def binomial_cell_bound(n: int, p: float, delta: float, slack: float = 0.0) -> float:
    """Tail bound for the relative error of one cell's empirical mass:
    prob(|Fn-mass - p| >= delta p) is at most

        2 exp(-n p delta^2 (1 + slack) / 2)

    where ``slack`` stands in for the vanishing correction term (callers
    pick an explicit value; 0 is the plain bound).
    """
    return 2.0 * np.exp(-0.5 * n * p * delta ** 2 * (1.0 + slack))


def delta_schedule(beta2: float, p: float, f_star: float) -> float:
    """Per-cell threshold rate ``beta2 * p / (1152 f*)`` used by the
    convexity-event analysis (1152 = 8 * 144)."""
    return beta2 * p / (1152.0 * f_star)


def cell_variance(model: AnalyticModel, s: float, t: float) -> float:
    """Variance of ``(X - (s+t)/2) 1_{(s,t]}(X)`` under the model.

    The mean is the population raw defect in closed form; the second moment
    is integrated numerically.
    """
    mid = 0.5 * (s + t)
    mean = 0.5 * (float(model.F(t)) + float(model.F(s))) * (t - s) \
        - (float(model.Fint(t)) - float(model.Fint(s)))
    second, _ = quad(lambda x: (x - mid) ** 2 * float(model.f(x)), s, t,
                     epsabs=1e-14, epsrel=1e-12, limit=200)
    return second - mean ** 2


def cell_variance_bound(p: float, f_star: float) -> float:
    """Closed-form bound ``p^3 / (6 f*^2)`` for the cell variance."""
    return p ** 3 / (6.0 * f_star ** 2)


def cell_variance_report(model: AnalyticModel, mesh: KnotMesh) -> list[dict]:
    """Check ``cell_variance <= cell_variance_bound`` on every cell."""
    rows = []
    a = mesh.knots
    for j in range(1, mesh.k + 1):
        lhs = cell_variance(model, float(a[j - 1]), float(a[j]))
        fstar = float(model.f(mean_value_knot(model, mesh, j)))
        rhs = cell_variance_bound(mesh.p, fstar)
        rows.append({
            "name": f"cell-variance-vs-bound[{j}]",
            "lhs": lhs,
            "rhs": rhs,
            "pass": bool(lhs <= rhs * (1.0 + 1e-12)),
            "margin": rhs - lhs,
        })
    return rows


def interp_gap_report(model: AnalyticModel, k_list) -> dict:
    """Deterministic interpolation gap ``t - r`` across mesh refinements.

    For each cell count ``k`` the report records ``max_j |t_j - r_j|``, the
    rescaled ``max_j |t_j - r_j| / delta_j^4``, and the curvature bound
    ``mesh^4 * sup|f''| / 24``; the rescaled column should decay as the
    mesh refines.
    """
    sup_curv = _extreme(lambda x: np.abs(model.fsecond(x)), 0.0, model.tau, "sup")
    rows = []
    for k in k_list:
        mesh = knot_mesh_convex(model, int(k))
        a = mesh.knots
        d = mesh.deltas
        y = np.asarray(model.Fint(a), dtype=float)
        fv = np.asarray(model.F(a), dtype=float)
        s = interp_integrated_cdf(model, mesh).slopes
        gap = _defect(s, np.diff(y), d) - _defect(fv, np.diff(y), d)
        max_abs = float(np.max(np.abs(gap)))
        bound = mesh.mesh ** 4 * sup_curv / 24.0
        rows.append({
            "k": int(k),
            "max_abs_gap": max_abs,
            "max_rescaled_gap": float(np.max(np.abs(gap) / d ** 4)),
            "bound": bound,
            "pass": bool(max_abs <= bound * (1.0 + 1e-9)),
        })
    ratios = [row["max_rescaled_gap"] for row in rows]
    decreasing = all(b <= a * (1.0 + 1e-9) for a, b in zip(ratios, ratios[1:]))
    final_over_first = ratios[-1] / ratios[0] if ratios and ratios[0] > 0 else 0.0
    return {
        "rows": rows,
        "rescaled_decreasing": decreasing,
        "final_over_first": final_over_first,
        "pass": decreasing and all(row["pass"] for row in rows),
    }
