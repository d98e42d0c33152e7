"""Greatest convex minorant of a nondecreasing step function on ``[a, b]``.

A convex function lies below a step function that equals ``c`` on
``[x_k, x_{k+1})`` exactly when it is below ``c`` at both ends of the step.
For a nondecreasing step function the binding values are therefore
``lam(a)`` at ``a``, the left limit ``lam(x-)`` at every jump ``x`` in
``(a, b]`` and ``lam(b)`` at ``b``.  The minorant is the lower convex hull of
those corner points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .empirical import StepFunction
from .errors import DomainError, InvalidParameterError

# Adjacent segments whose slopes differ by less than this are merged.
SLOPE_TOL = 1e-12


class InvalidIntervalError(InvalidParameterError):
    pass


@dataclass(frozen=True, eq=False)
class ConvexMinorant:
    knots: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    interval: tuple[float, float]

    def __call__(self, x):
        out = np.interp(x, self.knots, self.values)
        return out if np.ndim(x) else float(out)

    def left_derivative(self, v):
        return left_derivative(self, v)


def constraint_points(lam: StepFunction, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Corner points of ``lam`` on ``[a, b]`` that bound any convex minorant."""
    if not a < b:
        raise InvalidIntervalError(f"invalid interval: need a < b, got a={a}, b={b}")
    knots = lam.knots
    if knots.size == 0 or a < knots[0] or b > knots[-1]:
        lo = knots[0] if knots.size else float("nan")
        hi = knots[-1] if knots.size else float("nan")
        raise InvalidIntervalError(f"interval [{a}, {b}] outside data range [{lo}, {hi}]")
    lo_i = np.searchsorted(knots, a, side="right")
    hi_i = np.searchsorted(knots, b, side="right")
    jumps = knots[lo_i:hi_i]
    xs = [np.array([a]), jumps]
    ys = [np.array([lam(a)]), lam.left_limit(jumps)]
    if jumps.size == 0 or jumps[-1] < b:
        xs.append(np.array([b]))
        ys.append(np.array([lam(b)]))
    return np.concatenate(xs), np.concatenate(ys)


def lower_hull(xs, ys, tol: float = SLOPE_TOL) -> tuple[list[float], list[float]]:
    """Lower convex hull of points with strictly increasing ``xs`` (monotone chain)."""
    hx: list[float] = []
    hy: list[float] = []
    for x, y in zip(np.asarray(xs, dtype=float).tolist(), np.asarray(ys, dtype=float).tolist()):
        while len(hx) >= 2:
            s_prev = (hy[-1] - hy[-2]) / (hx[-1] - hx[-2])
            s_new = (y - hy[-1]) / (x - hx[-1])
            if s_new - s_prev < tol:
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(x)
        hy.append(y)
    return hx, hy


def minorant_from_points(xs, ys) -> ConvexMinorant:
    hx, hy = lower_hull(xs, ys)
    knots = np.array(hx)
    values = np.array(hy)
    slopes = np.diff(values) / np.diff(knots)
    return ConvexMinorant(knots, values, slopes, (float(knots[0]), float(knots[-1])))


def gcm_of_step(lam: StepFunction, a: float, b: float) -> ConvexMinorant:
    """Greatest convex minorant of ``lam`` restricted to ``[a, b]``."""
    xs, ys = constraint_points(lam, a, b)
    cm = minorant_from_points(xs, ys)
    return ConvexMinorant(cm.knots, cm.values, cm.slopes, (float(a), float(b)))


def left_derivative(cm: ConvexMinorant, v):
    """Slope of the segment reached from the left; the first slope at ``v = a``."""
    arr = np.asarray(v, dtype=float)
    a, b = cm.interval
    if np.any((arr < a) | (arr > b)):
        raise DomainError(f"v outside [{a}, {b}]")
    idx = np.searchsorted(cm.knots, arr, side="left") - 1
    out = cm.slopes[np.clip(idx, 0, cm.slopes.size - 1)]
    return out if arr.ndim else float(out)


def switching_check(
    lam: StepFunction, cm: ConvexMinorant, v: float, c: float, tie_tol: float = 1e-12
) -> bool | None:
    """Check ``left_derivative(v) <= c  <=>  argmin_s {lam(s) - c s} >= v``.

    The argmin runs over the constraint points and takes the largest
    minimizer.  Returns ``None`` when ``c`` coincides with a hull slope or
    the near-minimizers straddle ``v``; those cases have no canonical answer.
    """
    a, b = cm.interval
    if not a < v < b:
        raise DomainError(f"v={v} not inside ({a}, {b})")
    if c <= 0:
        raise InvalidParameterError(f"c must be positive, got {c}")
    if np.any(np.abs(cm.slopes - c) < tie_tol):
        return None
    xs, ys = constraint_points(lam, a, b)
    g = ys - c * xs
    near = xs[g <= g.min() + tie_tol]
    if near.min() < v <= near.max():
        return None
    u = near.max()
    return bool((left_derivative(cm, v) <= c) == (u >= v))
