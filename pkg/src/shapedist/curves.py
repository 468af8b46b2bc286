"""Piecewise-polynomial curves with exact extrema, sup-norms, and moduli.

Every estimator in this package (empirical CDFs and their integrals, least
concave majorants, convex least-squares fits, cubic spline interpolants) is a
piecewise polynomial of degree at most three.  Keeping that structure explicit
lets sup-norms, one-sided limits, and moduli of continuity be computed from
breakpoints and stationary points instead of grid scans.

Two kinds of curve objects appear:

* :class:`PiecewisePoly` -- right-continuous piecewise polynomial, possibly
  with jumps at breakpoints.
* :class:`SmoothCurve` -- a smooth function bundled with a chain of
  derivatives, used for analytic CDFs and their integrals.

A :class:`CurveSum` combines one of each (plus a constant), which is exactly
the shape of differences like ``ecdf - F`` or ``spline - Y``.  Extrema of such
differences are located by a nested bisection cascade that is exact whenever
the relevant derivative of the smooth part is monotone on each piece; all
catalog models used here satisfy that (their densities have one-signed,
monotone first and second derivatives on the working interval).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

_BISECT_ITERS = 90


@dataclass(frozen=True)
class PiecewisePoly:
    """Right-continuous piecewise polynomial on ``[x[0], x[-1]]``.

    Piece ``i`` covers ``[x[i], x[i+1])`` and evaluates as
    ``c[i,0] + c[i,1]*u + c[i,2]*u**2 + c[i,3]*u**3`` with ``u = t - x[i]``.
    The value at the right end ``x[-1]`` comes from the last piece, so a
    function built with a closing constant piece has no artificial jump there.
    """

    x: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if x.ndim != 1 or len(x) < 2:
            raise ValueError("need at least one piece")
        if c.shape != (len(x) - 1, 4):
            raise ValueError(f"coefficient array must be ({len(x)-1}, 4)")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "c", c)

    @property
    def npieces(self) -> int:
        return len(self.x) - 1

    def degree(self) -> int:
        for d in (3, 2, 1):
            if np.any(self.c[:, d] != 0.0):
                return d
        return 0

    def _piece_index(self, t, side="right"):
        return np.clip(np.searchsorted(self.x, t, side=side) - 1, 0, self.npieces - 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        i = self._piece_index(t)
        u = t - self.x[i]
        c = self.c[i]
        out = ((c[..., 3] * u + c[..., 2]) * u + c[..., 1]) * u + c[..., 0]
        return out if out.ndim else float(out)

    def left_limit(self, t):
        """Limit from the left; equals the value where the curve is continuous."""
        t = np.asarray(t, dtype=float)
        i = self._piece_index(t, side="left")
        u = t - self.x[i]
        c = self.c[i]
        out = ((c[..., 3] * u + c[..., 2]) * u + c[..., 1]) * u + c[..., 0]
        return out if out.ndim else float(out)

    def derivative(self) -> "PiecewisePoly":
        c = self.c
        dc = np.column_stack([c[:, 1], 2.0 * c[:, 2], 3.0 * c[:, 3], np.zeros(len(c))])
        return PiecewisePoly(self.x, dc)

    def antiderivative(self, y0: float = 0.0) -> "PiecewisePoly":
        """Continuous antiderivative with value ``y0`` at the left endpoint.

        Only defined for pieces of degree <= 2 (the result must stay cubic).
        """
        if np.any(self.c[:, 3] != 0.0):
            raise ValueError("antiderivative of a cubic piece exceeds degree 3")
        h = np.diff(self.x)
        c = self.c
        ints = ((c[:, 2] / 3.0 * h + c[:, 1] / 2.0) * h + c[:, 0]) * h
        starts = y0 + np.concatenate([[0.0], np.cumsum(ints)[:-1]])
        nc = np.column_stack([starts, c[:, 0], c[:, 1] / 2.0, c[:, 2] / 3.0])
        return PiecewisePoly(self.x, nc)

    def _retarget(self, xs: np.ndarray) -> "PiecewisePoly":
        """Re-express on a finer breakpoint grid spanning a sub-interval."""
        i = np.clip(np.searchsorted(self.x, xs[:-1], side="right") - 1, 0, self.npieces - 1)
        d = xs[:-1] - self.x[i]
        c0, c1, c2, c3 = (self.c[i, j] for j in range(4))
        n0 = ((c3 * d + c2) * d + c1) * d + c0
        n1 = (3.0 * c3 * d + 2.0 * c2) * d + c1
        n2 = 3.0 * c3 * d + c2
        return PiecewisePoly(xs, np.column_stack([n0, n1, n2, c3]))

    def _binary(self, other: "PiecewisePoly", sign: float) -> "PiecewisePoly":
        lo = max(self.x[0], other.x[0])
        hi = min(self.x[-1], other.x[-1])
        if hi <= lo:
            raise ValueError("domains do not overlap")
        xs = np.union1d(self.x, other.x)
        xs = xs[(xs >= lo) & (xs <= hi)]
        if xs[0] != lo:
            xs = np.concatenate([[lo], xs])
        if xs[-1] != hi:
            xs = np.concatenate([xs, [hi]])
        a = self._retarget(xs)
        b = other._retarget(xs)
        return PiecewisePoly(xs, a.c + sign * b.c)

    def __add__(self, other):
        if isinstance(other, PiecewisePoly):
            return self._binary(other, 1.0)
        if np.isscalar(other):
            c = self.c.copy()
            c[:, 0] += other
            return PiecewisePoly(self.x, c)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PiecewisePoly):
            return self._binary(other, -1.0)
        if np.isscalar(other):
            return self + (-other)
        return NotImplemented

    def __neg__(self):
        return PiecewisePoly(self.x, -self.c)

    def __mul__(self, a):
        if np.isscalar(a):
            return PiecewisePoly(self.x, self.c * a)
        return NotImplemented

    __rmul__ = __mul__


class SmoothCurve:
    """A smooth function with a chain of derivatives.

    ``funcs[k]`` is the k-th derivative, each vectorized over numpy arrays.
    The extrema cascade also assumes the *last* supplied derivative is
    monotone on the interval of interest; the analytic model curves used in
    this package satisfy that.
    """

    def __init__(self, *funcs):
        if not funcs:
            raise ValueError("need at least one callable")
        self.funcs = tuple(funcs)

    @property
    def order(self) -> int:
        return len(self.funcs) - 1

    def __call__(self, t):
        return self.funcs[0](t)

    def derivative(self) -> "SmoothCurve":
        if len(self.funcs) < 2:
            raise ValueError("derivative chain exhausted")
        return SmoothCurve(*self.funcs[1:])

    def _combine(self, other: "SmoothCurve", sign: float) -> "SmoothCurve":
        k = min(len(self.funcs), len(other.funcs))
        funcs = tuple(
            (lambda t, fa=self.funcs[j], fb=other.funcs[j], s=sign: fa(t) + s * fb(t))
            for j in range(k)
        )
        return SmoothCurve(*funcs)

    def __add__(self, other):
        if isinstance(other, SmoothCurve):
            return self._combine(other, 1.0)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SmoothCurve):
            return self._combine(other, -1.0)
        return NotImplemented

    def __neg__(self):
        return SmoothCurve(*((lambda t, f=f: -f(t)) for f in self.funcs))


@dataclass(frozen=True)
class CurveSum:
    """``poly + smooth + const``, either part optional."""

    poly: PiecewisePoly | None = None
    smooth: SmoothCurve | None = None
    const: float = 0.0

    def __call__(self, t):
        out = np.zeros_like(np.asarray(t, dtype=float)) + self.const
        if self.poly is not None:
            out = out + self.poly(t)
        if self.smooth is not None:
            out = out + self.smooth(t)
        return out if out.ndim else float(out)

    def left_limit(self, t):
        out = np.zeros_like(np.asarray(t, dtype=float)) + self.const
        if self.poly is not None:
            out = out + self.poly.left_limit(t)
        if self.smooth is not None:
            out = out + self.smooth(t)
        return out if out.ndim else float(out)

    def derivative(self) -> "CurveSum":
        return CurveSum(
            None if self.poly is None else self.poly.derivative(),
            None if self.smooth is None else self.smooth.derivative(),
            0.0,
        )


def as_curve(obj) -> CurveSum:
    """Coerce a curve-like object into a :class:`CurveSum`."""
    if isinstance(obj, CurveSum):
        return obj
    if isinstance(obj, PiecewisePoly):
        return CurveSum(poly=obj)
    if isinstance(obj, SmoothCurve):
        return CurveSum(smooth=obj)
    if np.isscalar(obj):
        return CurveSum(const=float(obj))
    if hasattr(obj, "as_curve"):
        return as_curve(obj.as_curve())
    raise TypeError(f"cannot interpret {type(obj).__name__} as a curve")


def curve_sub(g, h) -> CurveSum:
    g = as_curve(g)
    h = as_curve(h)
    if g.poly is not None and h.poly is not None:
        poly = g.poly - h.poly
    elif h.poly is not None:
        poly = -h.poly
    else:
        poly = g.poly
    if g.smooth is not None and h.smooth is not None:
        smooth = g.smooth - h.smooth
    elif h.smooth is not None:
        smooth = -h.smooth
    else:
        smooth = g.smooth
    return CurveSum(poly, smooth, g.const - h.const)


@dataclass(frozen=True)
class Extrema:
    min_val: float
    min_at: float
    max_val: float
    max_at: float

    @property
    def sup_abs(self) -> float:
        return max(abs(self.min_val), abs(self.max_val))


def _quad_roots(a, b, c):
    """Real roots of a*u^2 + b*u + c, vectorized; NaN where absent."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    r1 = np.full(a.shape, np.nan)
    r2 = np.full(a.shape, np.nan)
    lin = (a == 0.0) & (b != 0.0)
    r1[lin] = -c[lin] / b[lin]
    quad = a != 0.0
    disc = b * b - 4.0 * a * c
    ok = quad & (disc >= 0.0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    q = -0.5 * (b + np.where(b >= 0.0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(ok, np.where(q != 0.0, c / np.where(q == 0.0, 1.0, q), 0.0), r1)
        r2 = np.where(ok, q / np.where(a == 0.0, 1.0, a), r2)
    return r1, r2


def _poly_extrema(pp: PiecewisePoly, lo: float, hi: float) -> Extrema:
    """Exact extrema of a piecewise polynomial over [lo, hi].

    One-sided limits at breakpoints count: each piece contributes its closed
    left endpoint, its (open) right endpoint value, and interior stationary
    points, which together cover the closure of the range.
    """
    x, c = pp.x, pp.c
    m = pp.npieces
    i0 = int(np.clip(np.searchsorted(x, lo, side="right") - 1, 0, m - 1))
    i1 = int(np.clip(np.searchsorted(x, hi, side="right") - 1, 0, m - 1))
    idx = np.arange(i0, i1 + 1)
    h = x[idx + 1] - x[idx]
    ulo = np.clip(lo - x[idx], 0.0, h)
    uhi = np.clip(hi - x[idx], 0.0, h)
    cc = c[idx]
    r1, r2 = _quad_roots(3.0 * cc[:, 3], 2.0 * cc[:, 2], cc[:, 1])
    us = np.column_stack([ulo, uhi, r1, r2])
    bad = ~((us > ulo[:, None]) & (us < uhi[:, None]))
    bad[:, 0] = False
    bad[:, 1] = False
    us = np.where(bad, ulo[:, None], us)
    vals = ((cc[:, 3, None] * us + cc[:, 2, None]) * us + cc[:, 1, None]) * us + cc[:, 0, None]
    flat_v = vals.ravel()
    flat_t = (x[idx][:, None] + us).ravel()
    kmin = int(np.argmin(flat_v))
    kmax = int(np.argmax(flat_v))
    return Extrema(float(flat_v[kmin]), float(flat_t[kmin]),
                   float(flat_v[kmax]), float(flat_t[kmax]))


def _bisect_many(func, a, b, iters=_BISECT_ITERS):
    """Vectorized bisection on brackets [a, b] where func changes sign."""
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    fa = func(a)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = func(mid)
        take_left = fa * fm <= 0.0
        b = np.where(take_left, mid, b)
        a = np.where(take_left, a, mid)
        fa = np.where(take_left, fa, fm)
        if np.all(b - a <= 1e-15 * (1.0 + np.abs(a))):
            break
    return 0.5 * (a + b)


def _bisect_one(func, a, b, iters=_BISECT_ITERS):
    fa = func(a)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = func(mid)
        if fa * fm <= 0.0:
            b = mid
        else:
            a, fa = mid, fm
        if b - a <= 1e-15 * (1.0 + abs(a)):
            break
    return 0.5 * (a + b)


def _stationary_points_hybrid(cc, x0, a, b, smooth: SmoothCurve):
    """Stationary points of ``p(t - x0) + phi(t)`` on (a, b), scalar cascade.

    ``cc`` holds local coefficients of the cubic piece ``p``.  Works down the
    derivative chain: at the deepest level the polynomial term is constant and
    the last smooth derivative is assumed monotone, so each level has at most
    one more root than the level below, all isolated by sign changes.
    """
    deg = 3 if cc[3] != 0.0 else (2 if cc[2] != 0.0 else (1 if cc[1] != 0.0 else 0))
    need = deg  # derivative chain depth used below
    if smooth.order < max(need, 1):
        raise ValueError("smooth part lacks derivatives for exact extrema")

    def dlevel(level):
        # level-th derivative of the piece+smooth difference, as a callable
        pc = list(cc)
        for _ in range(level + 1):
            pc = [pc[1], 2.0 * pc[2], 3.0 * pc[3], 0.0]
        fs = smooth.funcs[level + 1]
        return lambda t: ((pc[3] * (t - x0) + pc[2]) * (t - x0) + pc[1]) * (t - x0) + pc[0] + fs(t)

    # splits[L] = roots of the (L+1)-th derivative, deepest level first
    top = min(deg, smooth.order - 1, 2)
    roots: list[float] = []
    for level in range(top, -1, -1):
        f = dlevel(level)
        pts = [a, *sorted(roots), b]
        new: list[float] = []
        for u, v in zip(pts[:-1], pts[1:]):
            fu, fv = f(u), f(v)
            if fu == 0.0:
                new.append(u)
            if fu * fv < 0.0:
                new.append(_bisect_one(f, u, v))
        if f(b) == 0.0:
            new.append(b)
        roots = new
    return [t for t in roots if a < t < b]


def _hybrid_extrema(poly: PiecewisePoly, smooth: SmoothCurve, lo: float, hi: float) -> Extrema:
    """Extrema of ``poly + smooth`` on [lo, hi]."""
    x, c = poly.x, poly.c
    m = poly.npieces
    i0 = int(np.clip(np.searchsorted(x, lo, side="right") - 1, 0, m - 1))
    i1 = int(np.clip(np.searchsorted(x, hi, side="right") - 1, 0, m - 1))
    idx = np.arange(i0, i1 + 1)
    h = x[idx + 1] - x[idx]
    alo = x[idx] + np.clip(lo - x[idx], 0.0, h)
    ahi = x[idx] + np.clip(hi - x[idx], 0.0, h)
    cc = c[idx]

    cand_t = [alo, ahi]
    if np.all(cc[:, 2:] == 0.0) and smooth.order >= 1:
        # vectorized path for constant/linear pieces: at most one stationary
        # point per piece since the smooth derivative is monotone
        dphi = smooth.funcs[1]
        slope = cc[:, 1]
        da = slope + dphi(alo)
        db = slope + dphi(ahi)
        mask = (da * db < 0.0) & (ahi > alo)
        if np.any(mask):
            sl = slope[mask]
            roots = _bisect_many(lambda t: sl + dphi(t), alo[mask], ahi[mask])
            full = np.full(len(idx), np.nan)
            full[mask] = roots
            cand_t.append(np.where(np.isnan(full), alo, full))
    else:
        for j in range(len(idx)):
            if ahi[j] <= alo[j]:
                continue
            for t in _stationary_points_hybrid(cc[j], x[idx[j]], alo[j], ahi[j], smooth):
                onehot = alo.copy()
                onehot[j] = t
                cand_t.append(onehot)

    best_min = (math.inf, lo)
    best_max = (-math.inf, lo)
    for ts in cand_t:
        u = ts - x[idx]
        vals = ((cc[:, 3] * u + cc[:, 2]) * u + cc[:, 1]) * u + cc[:, 0] + smooth(ts)
        j = int(np.argmin(vals))
        if vals[j] < best_min[0]:
            best_min = (float(vals[j]), float(ts[j]))
        j = int(np.argmax(vals))
        if vals[j] > best_max[0]:
            best_max = (float(vals[j]), float(ts[j]))
    return Extrema(best_min[0], best_min[1], best_max[0], best_max[1])


def _smooth_only_extrema(smooth: SmoothCurve, lo: float, hi: float) -> Extrema:
    zero = PiecewisePoly(np.array([lo, hi]), np.zeros((1, 4)))
    return _hybrid_extrema(zero, smooth, lo, hi)


def extrema(g, lo: float, hi: float) -> Extrema:
    """Exact extrema (values and locations) of a curve over [lo, hi].

    One-sided limits at jump points participate, so the results equal the
    closure of the range of ``g`` on the interval.
    """
    if hi <= lo:
        raise ValueError("empty interval")
    cs = as_curve(g)
    if cs.smooth is None:
        if cs.poly is None:
            return Extrema(cs.const, lo, cs.const, lo)
        e = _poly_extrema(cs.poly, lo, hi)
        return Extrema(e.min_val + cs.const, e.min_at, e.max_val + cs.const, e.max_at)
    if cs.poly is None:
        e = _smooth_only_extrema(cs.smooth, lo, hi)
    else:
        e = _hybrid_extrema(cs.poly, cs.smooth, lo, hi)
    return Extrema(e.min_val + cs.const, e.min_at, e.max_val + cs.const, e.max_at)


def sup_norm(g, h, interval) -> float:
    """Exact sup of ``|g - h|`` over a closed interval.

    Both arguments may be piecewise polynomials, smooth curves, curve sums,
    or constants.  Jumps contribute through their one-sided limits.
    """
    lo, hi = float(interval[0]), float(interval[1])
    return extrema(curve_sub(g, h), lo, hi).sup_abs


class _RangeTable:
    """Sparse table for O(1) range min/max queries, vectorized."""

    def __init__(self, vals: np.ndarray):
        n = len(vals)
        levels = max(1, n.bit_length())
        mins = [np.asarray(vals, dtype=float)]
        maxs = [np.asarray(vals, dtype=float)]
        for L in range(1, levels):
            half = 1 << (L - 1)
            prev_min, prev_max = mins[-1], maxs[-1]
            if len(prev_min) <= half:
                break
            mins.append(np.minimum(prev_min[:-half], prev_min[half:]))
            maxs.append(np.maximum(prev_max[:-half], prev_max[half:]))
        self._mins = mins
        self._maxs = maxs

    def query(self, i, j):
        """Range min and max over inclusive index ranges [i, j]; empty -> inf/-inf."""
        i = np.asarray(i, dtype=int)
        j = np.asarray(j, dtype=int)
        out_min = np.full(i.shape, np.inf)
        out_max = np.full(i.shape, -np.inf)
        ok = j >= i
        if not np.any(ok):
            return out_min, out_max
        length = np.where(ok, j - i + 1, 1)
        k = np.frexp(length.astype(float))[1] - 1  # floor(log2(length))
        k = np.clip(k, 0, len(self._mins) - 1)
        for kk in np.unique(k[ok]):
            sel = ok & (k == kk)
            tab_min, tab_max = self._mins[kk], self._maxs[kk]
            a = i[sel]
            b = j[sel] - (1 << int(kk)) + 1
            out_min[sel] = np.minimum(tab_min[a], tab_min[b])
            out_max[sel] = np.maximum(tab_max[a], tab_max[b])
        return out_min, out_max


def _pinned_pair_candidates(cs: CurveSum, pts: np.ndarray, width: float, lo: float, hi: float):
    """Increment candidates for window pairs pinned at exact distance ``width``.

    When both window ends sit strictly inside pieces, the optimal pair has
    equal one-sided slopes.  For pure polynomials the pinned increment is a
    quadratic in the window position and is solved in closed form; for
    constant/linear pieces plus a smooth part with monotone second derivative
    a single bisection per overlapping piece pair suffices.  Pairs whose
    increment derivative cannot vanish are skipped.
    """
    poly = cs.poly
    if poly is None or poly.npieces == 0:
        return []
    x, c = poly.x, poly.c
    m = poly.npieces
    smooth = cs.smooth
    out = []
    hybrid_linear = smooth is not None and np.all(c[:, 2:] == 0.0)
    if smooth is not None and not hybrid_linear:
        raise NotImplementedError(
            "modulus with quadratic/cubic pieces plus a smooth part is not supported"
        )
    dphi = smooth.funcs[1] if hybrid_linear else None
    for bpiece in range(m):
        wlo = max(x[bpiece], lo)
        whi = min(x[bpiece + 1], hi - width)
        if whi <= wlo:
            continue
        a0 = int(np.clip(np.searchsorted(x, wlo + width, side="right") - 1, 0, m - 1))
        a1 = int(np.clip(np.searchsorted(x, whi + width, side="right") - 1, 0, m - 1))
        for apiece in range(a0, a1 + 1):
            qlo = max(wlo, x[apiece] - width)
            qhi = min(whi, (x[apiece + 1] if apiece + 1 <= m else hi) - width)
            qhi = min(qhi, hi - width)
            if qhi <= qlo:
                continue
            ca, cb = c[apiece], c[bpiece]
            if hybrid_linear:
                ds = ca[1] - cb[1]
                f = lambda w, ds=ds: ds + dphi(w + width) - dphi(w)
                if f(qlo) * f(qhi) < 0.0:
                    out.append(_bisect_one(f, qlo, qhi))
            else:
                # derivative of increment: p_a'(w + width) - p_b'(w), quadratic in w
                da = x[apiece] - width  # local origin of shifted piece a
                A = 3.0 * (ca[3] - cb[3])
                B = (-6.0 * ca[3] * da + 2.0 * ca[2]) - (-6.0 * cb[3] * x[bpiece] + 2.0 * cb[2])
                C = ((3.0 * ca[3] * da - 2.0 * ca[2]) * da + ca[1]) - (
                    (3.0 * cb[3] * x[bpiece] - 2.0 * cb[2]) * x[bpiece] + cb[1]
                )
                if A == 0.0 and B == 0.0:
                    continue
                r1, r2 = _quad_roots(np.array([A]), np.array([B]), np.array([C]))
                for r in (float(r1[0]), float(r2[0])):
                    if not math.isnan(r) and qlo < r < qhi:
                        out.append(r)
    return out


def modulus(g, width: float, interval) -> float:
    """Modulus of continuity ``sup {|g(t) - g(s)| : |t - s| <= width}``.

    Exact for piecewise polynomials (jumps allowed, one-sided limits counted)
    and for constant/linear pieces plus a smooth part whose first and second
    derivatives are monotone on the interval -- which covers empirical CDFs,
    their centered versions, and all catalog model curves.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if width <= 0.0:
        raise ValueError("width must be positive")
    if hi <= lo:
        raise ValueError("empty interval")
    cs = as_curve(g)
    if width >= hi - lo:
        e = extrema(cs, lo, hi)
        return e.max_val - e.min_val

    # events: breakpoints, interval ends, and stationary points inside pieces
    ev = [np.array([lo, hi])]
    if cs.poly is not None:
        bx = cs.poly.x
        ev.append(bx[(bx > lo) & (bx < hi)])
    if cs.smooth is not None or (cs.poly is not None and cs.poly.degree() >= 2):
        body = extrema(cs, lo, hi)  # runs the stationary-point cascade
        ev.append(np.array([body.min_at, body.max_at]))
        # per-piece stationary points (arc splitting)
        poly = cs.poly if cs.poly is not None else PiecewisePoly(np.array([lo, hi]), np.zeros((1, 4)))
        if cs.smooth is not None:
            if np.all(poly.c[:, 2:] == 0.0):
                x = poly.x
                m = poly.npieces
                i0 = int(np.clip(np.searchsorted(x, lo, side="right") - 1, 0, m - 1))
                i1 = int(np.clip(np.searchsorted(x, hi, side="right") - 1, 0, m - 1))
                idx = np.arange(i0, i1 + 1)
                h = x[idx + 1] - x[idx]
                alo = x[idx] + np.clip(lo - x[idx], 0.0, h)
                ahi = x[idx] + np.clip(hi - x[idx], 0.0, h)
                dphi = cs.smooth.funcs[1]
                slope = poly.c[idx, 1]
                da = slope + dphi(alo)
                db = slope + dphi(ahi)
                mask = (da * db < 0.0) & (ahi > alo)
                if np.any(mask):
                    sl = slope[mask]
                    ev.append(_bisect_many(lambda t: sl + dphi(t), alo[mask], ahi[mask]))
            else:
                raise NotImplementedError(
                    "modulus with quadratic/cubic pieces plus a smooth part is not supported"
                )
        else:
            dp = poly.derivative()
            for j in range(poly.npieces):
                u0 = max(0.0, lo - poly.x[j])
                u1 = min(poly.x[j + 1] - poly.x[j], hi - poly.x[j])
                if u1 <= u0:
                    continue
                r1, r2 = _quad_roots(
                    np.array([3.0 * poly.c[j, 3]]),
                    np.array([2.0 * poly.c[j, 2]]),
                    np.array([poly.c[j, 1]]),
                )
                for r in (float(r1[0]), float(r2[0])):
                    if not math.isnan(r) and u0 < r < u1:
                        ev.append(np.array([poly.x[j] + r]))

    pts = np.unique(np.concatenate(ev))
    pts = pts[(pts >= lo) & (pts <= hi)]
    rvals = np.asarray(cs(pts), dtype=float)
    lvals = np.asarray(cs.left_limit(pts), dtype=float)
    lvals[0] = rvals[0]  # left limit at lo is outside the interval

    rtab = _RangeTable(rvals)
    ltab = _RangeTable(lvals)

    wlo = np.maximum(lo, pts - width)
    whi = np.minimum(hi, pts + width)
    # right values count for event points in [wlo, whi]
    r_i = np.searchsorted(pts, wlo, side="left")
    r_j = np.searchsorted(pts, whi, side="right") - 1
    # left limits count for event points in (wlo, whi]
    l_i = np.searchsorted(pts, wlo, side="right")
    l_j = r_j
    rmin, rmax = rtab.query(r_i, r_j)
    lmin, lmax = ltab.query(l_i, l_j)
    edge_lo = np.asarray(cs(wlo), dtype=float)
    edge_hi = np.asarray(cs(whi), dtype=float)
    wmin = np.minimum(np.minimum(rmin, lmin), np.minimum(edge_lo, edge_hi))
    wmax = np.maximum(np.maximum(rmax, lmax), np.maximum(edge_lo, edge_hi))
    here_hi = np.maximum(rvals, lvals)
    here_lo = np.minimum(rvals, lvals)
    best = float(np.max(np.maximum(here_hi - wmin, wmax - here_lo)))

    for w in _pinned_pair_candidates(cs, pts, width, lo, hi):
        inc = abs(float(cs(w + width)) - float(cs(w)))
        best = max(best, inc)
    return max(best, 0.0)
