"""The shape-constrained density estimate ``f_hat = lambda_hat * (1 - F_n)^2``."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .empirical import StepFunction, ValueSample, ecdf, format_float, lambda_n
from .errors import DomainError, InsufficientDataError
from .gcm import ConvexMinorant, InvalidIntervalError, gcm_of_step, left_derivative

DEFAULT_GRID_POINTS = 257
DEFAULT_QUANTILES = (0.05, 0.95)
MIN_SAMPLE = 3
CSV_COLUMNS = ("v", "f_hat", "lambda_hat", "F_n")


def default_interval(sample: ValueSample) -> tuple[float, float]:
    """Working interval away from the support boundary: the 5% and 95% sample quantiles."""
    a, b = np.quantile(sample.values, DEFAULT_QUANTILES)
    return float(a), float(b)


@dataclass(frozen=True, eq=False)
class FittedDensity:
    """All pieces of the estimator for one sample and working interval."""

    n: int
    interval: tuple[float, float]
    F_n: StepFunction
    Lambda_n: StepFunction
    minorant: ConvexMinorant

    def lambda_hat(self, v):
        return left_derivative(self.minorant, v)

    def __call__(self, v):
        return self.lambda_hat(v) * (1.0 - self.F_n(v)) ** 2


def _validate(sample: ValueSample):
    if sample.n < MIN_SAMPLE:
        raise InsufficientDataError(f"insufficient data: need at least {MIN_SAMPLE} values, got {sample.n}")
    if sample.values[0] == sample.values[-1]:
        raise InsufficientDataError("all values identical; Lambda_n is degenerate")


def fit(sample: ValueSample, a: float | None = None, b: float | None = None) -> FittedDensity:
    _validate(sample)
    if a is None or b is None:
        da, db = default_interval(sample)
        a = da if a is None else a
        b = db if b is None else b
    a, b = float(a), float(b)
    if not a < b:
        raise InvalidIntervalError(f"invalid interval: need a < b, got a={a}, b={b}")
    lam = lambda_n(sample)
    cm = gcm_of_step(lam, a, b)
    return FittedDensity(sample.n, (a, b), ecdf(sample), lam, cm)


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    grid: np.ndarray
    f_hat: np.ndarray
    lambda_hat: np.ndarray
    F_n_vals: np.ndarray
    interval: tuple[float, float]
    n: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "interval": list(self.interval),
            "v": self.grid.tolist(),
            "f_hat": self.f_hat.tolist(),
            "lambda_hat": self.lambda_hat.tolist(),
            "F_n": self.F_n_vals.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in zip(self.grid, self.f_hat, self.lambda_hat, self.F_n_vals):
            writer.writerow([format_float(x) for x in row])
        return buf.getvalue()

    def write(self, path, fmt: str = "csv") -> None:
        Path(path).write_text(self.to_csv() if fmt == "csv" else self.to_json() + "\n")


def estimate_density(
    sample: ValueSample,
    a: float | None = None,
    b: float | None = None,
    grid=None,
    *,
    fitted: FittedDensity | None = None,
) -> DensityEstimate:
    """Run the full pipeline and evaluate on ``grid`` (257 even points on ``[a, b]`` by default)."""
    fd = fitted if fitted is not None else fit(sample, a, b)
    a, b = fd.interval
    grid = np.linspace(a, b, DEFAULT_GRID_POINTS) if grid is None else np.asarray(grid, dtype=float)
    if np.any((grid < a) | (grid > b)):
        raise DomainError(f"grid points must lie in [{a}, {b}]")
    lam_hat = fd.lambda_hat(grid)
    F_vals = fd.F_n(grid)
    f_hat = lam_hat * (1.0 - F_vals) ** 2
    return DensityEstimate(grid, f_hat, lam_hat, F_vals, (a, b), fd.n)


def estimate_at(sample: ValueSample, v: float, a: float | None = None, b: float | None = None) -> float:
    return float(estimate_density(sample, a, b, np.array([v])).f_hat[0])
