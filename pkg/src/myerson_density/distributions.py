"""Analytic valuation distributions used as ground truth.

Every family exposes an exact ``pdf``, ``cdf`` and ``pdf_deriv`` on a compact
support, a deterministic sampler and a JSON-friendly dict form.  The
module-level functions (:func:`pdf`, :func:`cdf`, ...) are thin wrappers so the
families can be used interchangeably.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from typing import ClassVar

import numpy as np
from scipy.optimize import brentq

from .empirical import ValueSample
from .errors import DomainError, InvalidParameterError, ZeroDensityError

# Upper bound on the perturbation size for which the perturbed density stays regular.
PERTURBATION_DELTA_MAX = 1.0 / 3.0

DEFAULT_REGULARITY_TOL = 1e-9
DEFAULT_REGULARITY_GRID = 10_001


def perturbation_phi(t):
    """Piecewise-linear bump: rises on [-1, 0], falls on [0, 2], recovers on [2, 3].

    Zero outside ``[-1, 3]`` and integrates to zero over the real line.
    """
    t = np.asarray(t, dtype=float)
    out = np.select(
        [(t >= -1) & (t <= 0), (t > 0) & (t <= 2), (t > 2) & (t <= 3)],
        [t + 1.0, 1.0 - t, t - 3.0],
        default=0.0,
    )
    return out if out.ndim else float(out)


def _scalar_or_array(x, like):
    return x if np.ndim(like) else float(x)


class DistributionSpec(ABC):
    """Common interface for the valuation families."""

    family: ClassVar[str]

    @property
    @abstractmethod
    def support(self) -> tuple[float, float]: ...

    @abstractmethod
    def _pdf(self, v: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _cdf(self, v: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _pdf_deriv(self, v: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _draw(self, n: int, rng: np.random.Generator) -> np.ndarray: ...

    def kinks(self) -> list[float]:
        """Interior points where the density is not differentiable."""
        return []

    def jumps(self) -> list[tuple[float, float, float]]:
        """Interior discontinuities of the density as ``(x, f(x-), f(x+))``."""
        return []

    def _check(self, v) -> np.ndarray:
        arr = np.asarray(v, dtype=float)
        lo, hi = self.support
        bad = (arr < lo) | (arr > hi) | ~np.isfinite(arr)
        if np.any(bad):
            where = arr[bad].flat[0] if arr.ndim else float(arr)
            raise DomainError(f"v={where!r} outside support [{lo}, {hi}] of {self.family}")
        return arr

    def pdf(self, v):
        arr = self._check(v)
        return _scalar_or_array(self._pdf(arr), arr)

    def cdf(self, v):
        arr = self._check(v)
        return _scalar_or_array(np.clip(self._cdf(arr), 0.0, 1.0), arr)

    def pdf_deriv(self, v):
        """Derivative of the density; the left derivative at kinks."""
        arr = self._check(v)
        return _scalar_or_array(self._pdf_deriv(arr), arr)

    def to_dict(self) -> dict:
        return {"family": self.family, **asdict(self)}


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    lo: float = 0.0
    hi: float = 1.0
    family: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidParameterError(f"uniform needs lo < hi, got ({self.lo}, {self.hi})")

    @property
    def support(self):
        return (float(self.lo), float(self.hi))

    def _pdf(self, v):
        return np.full_like(v, 1.0 / (self.hi - self.lo))

    def _cdf(self, v):
        return (v - self.lo) / (self.hi - self.lo)

    def _pdf_deriv(self, v):
        return np.zeros_like(v)

    def _draw(self, n, rng):
        return self.lo + (self.hi - self.lo) * rng.random(n)

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class TruncExp(DistributionSpec):
    """Exponential with the given rate, truncated to ``[lo, hi]``."""

    rate: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    family: ClassVar[str] = "trunc_exp"

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidParameterError(f"trunc_exp needs rate > 0, got {self.rate}")
        if not self.lo < self.hi:
            raise InvalidParameterError(f"trunc_exp needs lo < hi, got ({self.lo}, {self.hi})")

    @property
    def support(self):
        return (float(self.lo), float(self.hi))

    @property
    def _mass(self) -> float:
        # 1 - exp(-rate * width), the untruncated mass of the support
        return -math.expm1(-self.rate * (self.hi - self.lo))

    def _pdf(self, v):
        return self.rate * np.exp(-self.rate * (v - self.lo)) / self._mass

    def _cdf(self, v):
        return -np.expm1(-self.rate * (v - self.lo)) / self._mass

    def _pdf_deriv(self, v):
        return -self.rate * self._pdf(v)

    def _draw(self, n, rng):
        u = rng.random(n)
        return self.lo - np.log1p(-u * self._mass) / self.rate

    def mean(self) -> float:
        width = self.hi - self.lo
        return self.lo + 1.0 / self.rate - width * math.exp(-self.rate * width) / self._mass

    def variance(self) -> float:
        width = self.hi - self.lo
        r = self.rate
        e = math.exp(-r * width)
        # E[(X - lo)^2] for the truncated law
        m2 = (2.0 / r**2 - e * (width**2 + 2 * width / r + 2.0 / r**2)) / self._mass
        m1 = self.mean() - self.lo
        return m2 - m1**2


@dataclass(frozen=True)
class PerturbedUniform(DistributionSpec):
    """Uniform(0, 1) plus the bump ``delta * phi((v - 1/2) / delta)``.

    For ``delta <= 1/6`` the bump sits inside [0, 1] and the support is [0, 1].
    For larger ``delta`` the negative lobe is cut off by the right end of
    [0, 1], so the density would carry excess mass; the support is then
    truncated at the point where the cdf reaches 1.  The density formula is
    unchanged on the support.
    """

    delta: float
    family: ClassVar[str] = "perturbed_uniform"

    def __post_init__(self):
        if not 0.0 < self.delta < PERTURBATION_DELTA_MAX:
            raise InvalidParameterError(
                f"perturbed_uniform needs 0 < delta < 1/3, got {self.delta}"
            )

    def kinks(self):
        d = self.delta
        hi = self.support[1]
        return [k for k in (0.5 - d, 0.5, 0.5 + 2 * d, 0.5 + 3 * d) if k < hi]

    @property
    def support(self):
        return (0.0, self._upper)

    @property
    def _upper(self) -> float:
        if self.delta <= 1.0 / 6.0:
            return 1.0
        cached = self.__dict__.get("_hi_cache")
        if cached is None:
            cached = brentq(lambda v: float(self._cdf(np.asarray(v))) - 1.0, 0.5, 1.0, xtol=1e-15)
            object.__setattr__(self, "_hi_cache", cached)
        return cached

    def _branches(self, v):
        d = self.delta
        return [
            (v >= 0.5 - d) & (v < 0.5),
            (v >= 0.5) & (v < 0.5 + 2 * d),
            (v >= 0.5 + 2 * d) & (v < 0.5 + 3 * d),
        ]

    def _pdf(self, v):
        d = self.delta
        return np.select(self._branches(v), [v + 0.5 + d, -v + 1.5 + d, v + 0.5 - 3 * d], default=1.0)

    def _cdf(self, v):
        d = self.delta
        return np.select(
            self._branches(v),
            [
                v**2 / 2 + (0.5 + d) * v + (d - 0.5) ** 2 / 2,
                -(v**2) / 2 + (1.5 + d) * v + (d**2 - d - 0.25) / 2,
                v**2 / 2 + (0.5 - 3 * d) * v + (0.5 - 3 * d) ** 2 / 2 + 3 * d,
            ],
            default=v,
        )

    def _pdf_deriv(self, v):
        d = self.delta
        # half-open on the left so kinks get the incoming slope
        return np.select(
            [
                (v > 0.5 - d) & (v <= 0.5),
                (v > 0.5) & (v <= 0.5 + 2 * d),
                (v > 0.5 + 2 * d) & (v <= 0.5 + 3 * d),
            ],
            [1.0, -1.0, 1.0],
            default=0.0,
        )

    def psi(self, v):
        """Analytic ``2 f^2 + (1 - F) f'`` from the branch formulas.

        Branches are closed on the left, like the density pieces, so at a kink
        this takes the outgoing slope (unlike :meth:`pdf_deriv`).
        """
        arr = self._check(v)
        d = self.delta
        out = np.select(
            self._branches(arr),
            [
                1.5 * (arr + 0.5 + d) ** 2 + 1.0 + d,
                1.5 * (-arr + 1.5 + d) ** 2 + d * (1.0 + d),
                1.5 * (arr + 0.5 - 3 * d) ** 2 + 1.0 - 3 * d,
            ],
            default=2.0,
        )
        return _scalar_or_array(out, arr)

    def _draw(self, n, rng):
        bound = 1.0 + self.delta
        hi = self.support[1]
        out = np.empty(n)
        have = 0
        while have < n:
            m = int((n - have) * bound * 1.1) + 16
            x = hi * rng.random(m)
            u = bound * rng.random(m)
            keep = x[u <= self._pdf(x)][: n - have]
            out[have : have + keep.size] = keep
            have += keep.size
        return out


@dataclass(frozen=True)
class GapMixture(DistributionSpec):
    """Two uniform blocks separated by a zero-density gap; deliberately irregular."""

    w: float = 0.5
    lo1: float = 0.0
    hi1: float = 0.1
    lo2: float = 0.9
    hi2: float = 1.0
    family: ClassVar[str] = "gap_mixture"

    def __post_init__(self):
        if not 0.0 < self.w < 1.0:
            raise InvalidParameterError(f"gap_mixture needs 0 < w < 1, got {self.w}")
        if not self.lo1 < self.hi1 < self.lo2 < self.hi2:
            raise InvalidParameterError("gap_mixture needs lo1 < hi1 < lo2 < hi2")

    @property
    def support(self):
        return (float(self.lo1), float(self.hi2))

    @property
    def _heights(self):
        return self.w / (self.hi1 - self.lo1), (1.0 - self.w) / (self.hi2 - self.lo2)

    def jumps(self):
        h1, h2 = self._heights
        return [(float(self.hi1), h1, 0.0), (float(self.lo2), 0.0, h2)]

    def _pdf(self, v):
        h1, h2 = self._heights
        return np.select([v <= self.hi1, v >= self.lo2], [h1, h2], default=0.0)

    def _cdf(self, v):
        h1, h2 = self._heights
        return np.select(
            [v <= self.hi1, v < self.lo2],
            [h1 * (v - self.lo1), self.w],
            default=self.w + h2 * (v - self.lo2),
        )

    def _pdf_deriv(self, v):
        return np.zeros_like(v)

    def _draw(self, n, rng):
        u = rng.random(n)
        first = self.lo1 + u / self.w * (self.hi1 - self.lo1)
        second = self.lo2 + (u - self.w) / (1.0 - self.w) * (self.hi2 - self.lo2)
        return np.where(u < self.w, first, second)


FAMILIES: dict[str, type[DistributionSpec]] = {
    cls.family: cls for cls in (Uniform, TruncExp, PerturbedUniform, GapMixture)
}


def from_dict(data: dict) -> DistributionSpec:
    """Build a spec from ``{"family": ..., **params}``."""
    data = dict(data)
    try:
        cls = FAMILIES[data.pop("family")]
    except KeyError as exc:
        raise InvalidParameterError(f"unknown or missing family: {exc}") from None
    try:
        return cls(**{k: float(v) for k, v in data.items()})
    except TypeError as exc:
        raise InvalidParameterError(str(exc)) from None


def pdf(spec: DistributionSpec, v):
    return spec.pdf(v)


def cdf(spec: DistributionSpec, v):
    return spec.cdf(v)


def pdf_deriv(spec: DistributionSpec, v):
    return spec.pdf_deriv(v)


def virtual_value(spec: DistributionSpec, v):
    """``v - (1 - F(v)) / f(v)``, the marginal revenue of a bidder with value ``v``."""
    f = np.asarray(spec.pdf(v))
    if np.any(f <= 0):
        where = np.asarray(v, dtype=float)[f <= 0].flat[0] if f.ndim else v
        raise ZeroDensityError(f"density is zero at v={where!r}; virtual value undefined")
    out = np.asarray(v, dtype=float) - (1.0 - np.asarray(spec.cdf(v))) / f
    return _scalar_or_array(out, f)


def psi(spec: DistributionSpec, v):
    """Regularity numerator ``2 f^2 + (1 - F) f'``; its sign is the sign of Lambda''."""
    f = np.asarray(spec.pdf(v))
    out = 2.0 * f**2 + (1.0 - np.asarray(spec.cdf(v))) * np.asarray(spec.pdf_deriv(v))
    return _scalar_or_array(out, f)


@dataclass(frozen=True)
class RegularityReport:
    is_regular: bool
    min_psi: float
    argmin_v: float
    grid_size: int

    def to_dict(self) -> dict:
        return asdict(self)


def check_regularity(
    spec: DistributionSpec,
    grid_size: int = DEFAULT_REGULARITY_GRID,
    tol: float = DEFAULT_REGULARITY_TOL,
) -> RegularityReport:
    """Evaluate ``psi`` on an even interior grid and test ``min psi >= -tol``.

    A density discontinuity at ``x`` is a point mass in ``f'``; it is smeared
    over one grid cell, so a downward jump shows up as a large negative ``psi``.
    """
    if grid_size < 3:
        raise InvalidParameterError(f"grid_size must be >= 3, got {grid_size}")
    lo, hi = spec.support
    grid = np.linspace(lo, hi, grid_size + 2)[1:-1]
    h = grid[1] - grid[0]
    vals = psi(spec, grid)
    i = int(np.argmin(vals))
    min_psi, argmin_v = float(vals[i]), float(grid[i])
    for x, f_left, f_right in spec.jumps():
        jump_psi = 2.0 * f_left**2 + (1.0 - float(spec.cdf(x))) * (f_right - f_left) / h
        if jump_psi < min_psi:
            min_psi, argmin_v = jump_psi, x
    return RegularityReport(bool(min_psi >= -tol), float(min_psi), float(argmin_v), int(grid_size))


def sample(spec: DistributionSpec, n: int, seed: int) -> ValueSample:
    """Draw ``n`` iid values; identical ``seed`` gives identical output."""
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return ValueSample.from_values(spec._draw(int(n), rng))
