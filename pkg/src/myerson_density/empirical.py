"""Empirical distribution function and the transformed step function Lambda_n."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, ParseError


@dataclass(frozen=True, eq=False)
class ValueSample:
    """Observed valuations, sorted ascending."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if vals.size > 1 and np.any(np.diff(vals) < 0):
            raise ValueError("values must be sorted; use ValueSample.from_values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, values) -> "ValueSample":
        return cls(np.sort(np.asarray(values, dtype=float)))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step function.

    ``f(x)`` is ``values[k]`` for the largest ``knots[k] <= x`` and
    ``left_value`` when ``x`` is left of every knot.
    """

    knots: np.ndarray
    values: np.ndarray
    left_value: float = 0.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.shape != values.shape or knots.ndim != 1:
            raise ValueError("knots and values must be 1-D arrays of equal length")
        if knots.size > 1 and np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def _lookup(self, idx):
        padded = np.concatenate(([self.left_value], self.values))
        return padded[idx + 1]

    def __call__(self, x):
        idx = np.searchsorted(self.knots, x, side="right") - 1
        out = self._lookup(idx)
        return out if np.ndim(x) else float(out)

    def left_limit(self, x):
        """``lim f(s)`` as ``s`` increases to ``x``."""
        idx = np.searchsorted(self.knots, x, side="left") - 1
        out = self._lookup(idx)
        return out if np.ndim(x) else float(out)


def _require(sample: ValueSample):
    if sample.n < 1:
        raise InsufficientDataError("empty sample")


def ecdf(sample: ValueSample) -> StepFunction:
    """F_n; tied observations share one knot with a jump of (multiplicity)/n."""
    _require(sample)
    knots, counts = np.unique(sample.values, return_counts=True)
    return StepFunction(knots, np.cumsum(counts) / sample.n, 0.0)


def lambda_transform(p, n: int):
    """``p -> 1 / (1 - p + 1/n)``; the ``1/n`` keeps the value finite at ``p = 1``."""
    return 1.0 / (1.0 - p + 1.0 / n)


def lambda_n(sample: ValueSample) -> StepFunction:
    """``Lambda_n(v) = 1 / (1 - F_n(v) + 1/n)``, bounded above by ``n``."""
    F = ecdf(sample)
    n = sample.n
    return StepFunction(F.knots, lambda_transform(F.values, n), lambda_transform(0.0, n))


def read_values_csv(source) -> ValueSample:
    """Parse one value per line with an optional ``value`` header.

    Blank lines are skipped.  Anything else that does not parse as a finite
    float raises :class:`ParseError` carrying the 1-based line number.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        text = source.read()
    else:
        raise TypeError("source must be a path or a text stream")
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if lineno == 1 and line.lower() == "value":
            continue
        try:
            x = float(line)
        except ValueError:
            raise ParseError(f"not a number: {line!r}", lineno) from None
        if not np.isfinite(x):
            raise ParseError(f"non-finite value: {line!r}", lineno)
        values.append(x)
    return ValueSample.from_values(values)


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_values_csv(values, path) -> None:
    lines = ["value"] + [format_float(x) for x in np.asarray(values, dtype=float)]
    Path(path).write_text("\n".join(lines) + "\n")
