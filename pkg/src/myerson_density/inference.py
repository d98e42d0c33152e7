"""Pointwise confidence intervals from the cube-root limit law.

``n^(1/3) (f_hat(v) - f(v))`` converges to ``C(v) Z`` with Z Chernoff's
distribution.  Quantiles of Z come from the normal approximation
``N(0, 0.52^2)`` unless the caller supplies a table.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .empirical import ValueSample
from .errors import DomainError, InsufficientDataError, InvalidParameterError, RegularityViolation
from .estimator import FittedDensity, fit

CHERNOFF_SD = 0.52
CHERNOFF_VARIANCE = 0.26
# classical bandwidth exponent for first-derivative estimation
DERIV_BANDWIDTH_EXPONENT = -1.0 / 7.0
MIN_DERIV_SAMPLE = 10


def chernoff_bracket(f: float, f_prime: float, F: float) -> float:
    return 8.0 * f**3 / (1.0 - F) + 4.0 * f * f_prime


def chernoff_scale(f: float, f_prime: float, F: float) -> float:
    """``C = (8 f^3 / (1 - F) + 4 f f')^(1/3)``."""
    if not F < 1.0:
        raise DomainError(f"F must be < 1, got {F}")
    if f < 0:
        raise DomainError(f"density must be nonnegative, got {f}")
    bracket = chernoff_bracket(f, f_prime, F)
    if bracket < 0:
        raise RegularityViolation(f"regularity violated at v: bracket {bracket} < 0")
    return float(np.cbrt(bracket))


@dataclass(frozen=True)
class ChernoffApprox:
    """Quantile source for Chernoff's distribution.

    ``table`` holds ``(p, q)`` pairs, strictly increasing in both; quantiles
    are linearly interpolated inside its range.  Without a table the normal
    approximation with standard deviation ``sd`` is used.
    """

    sd: float = CHERNOFF_SD
    table: tuple[tuple[float, float], ...] | None = field(default=None)

    def __post_init__(self):
        if not self.sd > 0:
            raise InvalidParameterError(f"sd must be positive, got {self.sd}")
        if self.table is not None:
            tbl = tuple((float(p), float(q)) for p, q in self.table)
            if len(tbl) < 2:
                raise InvalidParameterError("quantile table needs at least two rows")
            ps = np.array([p for p, _ in tbl])
            qs = np.array([q for _, q in tbl])
            if np.any(np.diff(ps) <= 0) or np.any(np.diff(qs) <= 0):
                raise InvalidParameterError("quantile table must be strictly increasing in p and q")
            if ps[0] <= 0 or ps[-1] >= 1:
                raise InvalidParameterError("table probabilities must lie in (0, 1)")
            object.__setattr__(self, "table", tbl)

    @classmethod
    def from_json(cls, source) -> "ChernoffApprox":
        """Load ``[{"p": ..., "q": ...}, ...]`` from a path or a parsed list."""
        rows = json.loads(Path(source).read_text()) if isinstance(source, (str, Path)) else source
        try:
            table = tuple((row["p"], row["q"]) for row in rows)
        except (KeyError, TypeError) as exc:
            raise InvalidParameterError(f"malformed quantile table: {exc}") from None
        return cls(table=table)

    def quantile(self, p: float) -> float:
        return chernoff_quantile(self, p)


def chernoff_quantile(approx: ChernoffApprox, p: float) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must be in (0, 1), got {p}")
    if approx.table is None:
        return approx.sd * NormalDist().inv_cdf(p)
    ps, qs = zip(*approx.table)
    if not ps[0] <= p <= ps[-1]:
        raise DomainError(f"p={p} outside the quantile table range [{ps[0]}, {ps[-1]}]")
    return float(np.interp(p, ps, qs))


def derivative_bandwidth(sample: ValueSample) -> float:
    return float(np.std(sample.values, ddof=1) * sample.n**DERIV_BANDWIDTH_EXPONENT)


def estimate_f_prime(
    sample: ValueSample,
    v: float,
    a: float | None = None,
    b: float | None = None,
    *,
    fitted: FittedDensity | None = None,
) -> float:
    """Central difference of ``f_hat`` with step ``s_n n^(-1/7)``, shrunk to stay in ``[a, b]``."""
    if sample.n < MIN_DERIV_SAMPLE:
        raise InsufficientDataError(f"need at least {MIN_DERIV_SAMPLE} values for a derivative estimate")
    fd = fitted if fitted is not None else fit(sample, a, b)
    lo, hi = fd.interval
    if not lo < v < hi:
        raise DomainError(f"v={v} not inside ({lo}, {hi})")
    h = min(derivative_bandwidth(sample), v - lo, hi - v)
    if not h >= 1e-12:
        raise DomainError(f"derivative window collapsed at v={v} (h={h})")
    return float((fd(v + h) - fd(v - h)) / (2.0 * h))


@dataclass(frozen=True)
class InferenceResult:
    v: float
    f_hat: float
    c_hat: float
    f_prime_hat: float
    F_n: float
    quantile: float
    ci_lo: float
    ci_hi: float
    level: float
    n: int
    interval: tuple[float, float]
    fallback: bool = False

    @property
    def width(self) -> float:
        return self.ci_hi - self.ci_lo

    def covers(self, value: float) -> bool:
        return self.ci_lo <= value <= self.ci_hi

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interval"] = list(self.interval)
        return d


def confidence_interval(
    sample: ValueSample,
    v: float,
    level: float = 0.95,
    approx: ChernoffApprox | None = None,
    a: float | None = None,
    b: float | None = None,
    *,
    fitted: FittedDensity | None = None,
) -> InferenceResult:
    """Symmetric interval ``f_hat +- n^(-1/3) C_hat q``, no bias correction.

    If sampling noise makes the bracket of ``C_hat`` negative, the derivative
    estimate is replaced by zero (which can only widen the interval relative
    to any negative derivative) and ``fallback`` is set.
    """
    if not 0.5 <= level < 1.0:
        raise InvalidParameterError(f"level must be in [0.5, 1), got {level}")
    approx = approx or ChernoffApprox()
    fd = fitted if fitted is not None else fit(sample, a, b)
    lo, hi = fd.interval
    if not lo < v < hi:
        raise DomainError(f"v={v} not inside ({lo}, {hi})")
    f_hat = float(fd(v))
    F_v = float(fd.F_n(v))
    f_prime = estimate_f_prime(sample, v, fitted=fd)
    fallback = chernoff_bracket(f_hat, f_prime, F_v) < 0
    c_hat = chernoff_scale(f_hat, 0.0 if fallback else f_prime, F_v)
    q = chernoff_quantile(approx, (1.0 + level) / 2.0)
    half = c_hat * q * fd.n ** (-1.0 / 3.0)
    return InferenceResult(
        v=float(v),
        f_hat=f_hat,
        c_hat=c_hat,
        f_prime_hat=f_prime,
        F_n=F_v,
        quantile=q,
        ci_lo=f_hat - half,
        ci_hi=f_hat + half,
        level=float(level),
        n=fd.n,
        interval=fd.interval,
        fallback=bool(fallback),
    )
