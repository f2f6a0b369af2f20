"""Natural cubic splines through lane knots.

The spline is stored in moment form: on ``[t_i, t_{i+1}]`` with width
``h_i`` and second derivatives ``M_i`` at the knots,

    S(t) = M_i (t_{i+1}-t)^3 / (6 h_i) + M_{i+1} (t-t_i)^3 / (6 h_i)
         + (y_i/h_i - M_i h_i/6)(t_{i+1}-t) + (y_{i+1}/h_i - M_{i+1} h_i/6)(t-t_i)

and the moments solve the tridiagonal system

    h_{i-1}/6 M_{i-1} + (h_{i-1}+h_i)/3 M_i + h_i/6 M_{i+1}
        = (y_{i+1}-y_i)/h_i - (y_i-y_{i-1})/h_{i-1}

closed with natural end rows ``M_0 = M_n = 0``.  Planar curves are handled by
fitting ``x(t)`` and ``y(t)`` separately over the chord-length parameter.
"""

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_points, check_positive
from .exceptions import CoincidentPointsError, IllConditionedError, TooFewPointsError
from .road import Polyline, WORLD

PIVOT_EPS = 1e-12
COINCIDENT_EPS = 1e-9


def solve_tridiagonal(sub, diag, sup, rhs):
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``sub[i]`` multiplies ``x[i-1]`` in row ``i`` (``sub[0]`` is ignored) and
    ``sup[i]`` multiplies ``x[i+1]`` (``sup[-1]`` is ignored).  ``rhs`` may
    have several columns.  No pivoting: raises ``IllConditionedError`` when a
    pivot falls below 1e-12 in magnitude.
    """
    diag = np.asarray(diag, dtype=float)
    n = len(diag)
    rhs = np.array(rhs, dtype=float)
    c = np.zeros(n)
    d = np.zeros_like(rhs)

    pivot = diag[0]
    if abs(pivot) < PIVOT_EPS:
        raise IllConditionedError("zero pivot in row 0")
    c[0] = sup[0] / pivot if n > 1 else 0.0
    d[0] = rhs[0] / pivot
    for i in range(1, n):
        pivot = diag[i] - sub[i] * c[i - 1]
        if abs(pivot) < PIVOT_EPS:
            raise IllConditionedError(f"zero pivot in row {i}")
        if i < n - 1:
            c[i] = sup[i] / pivot
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot

    x = np.empty_like(d)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def moment_system(knots, values):
    """Bands and right-hand side of the natural-spline moment system."""
    t = np.asarray(knots, dtype=float)
    y = np.asarray(values, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n = len(t) - 1
    h = np.diff(t)
    sub = np.zeros(n + 1)
    diag = np.ones(n + 1)
    sup = np.zeros(n + 1)
    rhs = np.zeros((n + 1, y.shape[1]))
    slopes = np.diff(y, axis=0) / h[:, None]
    sub[1:n] = h[:-1] / 6.0
    diag[1:n] = (h[:-1] + h[1:]) / 3.0
    sup[1:n] = h[1:] / 6.0
    rhs[1:n] = slopes[1:] - slopes[:-1]
    # natural ends: mu = 1, lambda = 0, b = 0 on rows 0 and n
    return sub, diag, sup, rhs


class NaturalCubicSpline(BaseEstimator):
    """Natural cubic interpolating spline, vector-valued, fitted once.

    ``fit(t, Y)`` takes strictly increasing knots ``t`` (n+1,) and values
    ``Y`` of shape (n+1,) or (n+1, d).  After fitting, ``knots_``,
    ``values_``, ``moments_`` and ``widths_`` describe the spline.
    """

    def fit(self, t, Y):
        t = np.asarray(t, dtype=float)
        Y = np.asarray(Y, dtype=float)
        self._scalar_output = Y.ndim == 1
        if Y.ndim == 1:
            Y = Y[:, None]
        if t.ndim != 1 or len(t) != len(Y):
            raise ValueError("t and Y must have the same length")
        if len(t) < 2:
            raise TooFewPointsError("a spline needs at least two knots")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(Y))):
            raise ValueError("knots and values must be finite")
        h = np.diff(t)
        if np.any(h <= 0):
            raise ValueError("knots must be strictly increasing")
        self.knots_ = t
        self.values_ = Y
        self.widths_ = h
        self.moments_ = solve_tridiagonal(*moment_system(t, Y))
        return self

    def _check_fitted(self):
        if not hasattr(self, "moments_"):
            raise AttributeError("spline is not fitted yet; call fit first")

    def _interval(self, t):
        i = np.searchsorted(self.knots_, t, side="right") - 1
        return np.clip(i, 0, len(self.widths_) - 1)

    def predict(self, t, derivative=0):
        """Evaluate the spline (or its 1st/2nd derivative) at ``t``."""
        self._check_fitted()
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i = self._interval(t)
        h = self.widths_[i][:, None]
        a = (self.knots_[i + 1][:, None] - t[:, None])  # distance to right knot
        b = (t[:, None] - self.knots_[i][:, None])      # distance to left knot
        m0, m1 = self.moments_[i], self.moments_[i + 1]
        y0, y1 = self.values_[i], self.values_[i + 1]
        if derivative == 0:
            out = (m0 * a**3 + m1 * b**3) / (6 * h) \
                + (y0 / h - m0 * h / 6) * a + (y1 / h - m1 * h / 6) * b
        elif derivative == 1:
            out = (-m0 * a**2 + m1 * b**2) / (2 * h) \
                - (y0 / h - m0 * h / 6) + (y1 / h - m1 * h / 6)
        elif derivative == 2:
            out = (m0 * a + m1 * b) / h
        else:
            raise ValueError("derivative must be 0, 1 or 2")
        if self._scalar_output:
            out = out[:, 0]
        return out[0] if scalar else out

    @property
    def t_range(self):
        self._check_fitted()
        return float(self.knots_[0]), float(self.knots_[-1])


def chord_parameters(points):
    points = np.asarray(points, dtype=float)
    chords = np.hypot(*np.diff(points, axis=0).T)
    if np.any(chords < COINCIDENT_EPS):
        i = int(np.argmin(chords))
        raise CoincidentPointsError(f"known points {i} and {i + 1} coincide")
    return np.concatenate([[0.0], np.cumsum(chords)])


def fit_spline(known):
    """Natural cubic spline through ordered planar points, chord-length
    parameterised.  Needs at least three points."""
    pts = check_points(known, min_points=3, name="known points")
    return NaturalCubicSpline().fit(chord_parameters(pts), pts)


def spline_arc_table(spline, t0, t1, tol=1e-4, max_level=12):
    """Cumulative arc length of a planar spline over ``[t0, t1]``.

    Integrates the speed with 5-point Gauss-Legendre on a uniform grid and
    halves the grid until the total changes by less than ``tol`` metres.
    Returns ``(t_grid, cumulative_length)``.
    """
    nodes, weights = np.polynomial.legendre.leggauss(5)

    def table(m):
        grid = np.linspace(t0, t1, m + 1)
        lo, hi = grid[:-1], grid[1:]
        half = (hi - lo)[:, None] / 2
        tq = (lo + hi)[:, None] / 2 + half * nodes[None, :]
        speed = np.hypot(*spline.predict(tq.ravel(), derivative=1).T).reshape(tq.shape)
        seg = (half[:, 0]) * (speed @ weights)
        return grid, np.concatenate([[0.0], np.cumsum(seg)])

    m = max(8, int(np.ceil((t1 - t0) / 0.05)))
    grid, cum = table(m)
    for _ in range(max_level):
        grid2, cum2 = table(2 * m)
        if abs(cum2[-1] - cum[-1]) < tol:
            return grid2, cum2
        m, grid, cum = 2 * m, grid2, cum2
    return grid, cum


def sample_spline(spline, spacing=0.10, t0=None, t1=None):
    """Points of a planar spline at (near) uniform arc-length steps.

    The curve between ``t0`` and ``t1`` (default: the whole spline) is split
    into ``round(L / spacing)`` equal arc-length steps; both ends are kept.
    """
    check_positive(spacing, "spacing")
    lo, hi = spline.t_range
    t0 = lo if t0 is None else t0
    t1 = hi if t1 is None else t1
    if t1 - t0 <= 0:
        return spline.predict(np.array([t0, t1]))
    grid, cum = spline_arc_table(spline, t0, t1)
    n = max(1, int(round(cum[-1] / spacing)))
    stations = np.linspace(0.0, cum[-1], n + 1)
    t = np.interp(stations, cum, grid)
    t[0], t[-1] = t0, t1
    return spline.predict(t)


def sample_spline_polyline(spline, spacing=0.10, t0=None, t1=None, frame=WORLD):
    return Polyline(sample_spline(spline, spacing, t0, t1), frame)
