"""Monte Carlo checks of consistency, the cube-root rate and CI coverage.

Each replication gets its own seed derived from ``(seed, n, rep)``, so the
report does not depend on how replications are scheduled across workers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .distributions import DistributionSpec, from_dict, sample
from .empirical import ValueSample, format_float
from .errors import ExperimentError, InsufficientDataError, InvalidParameterError, MyersonDensityError
from .estimator import fit
from .inference import ChernoffApprox, confidence_interval

log = logging.getLogger(__name__)

MAX_FAILURE_RATE = 0.01
SUP_GRID_POINTS = 33


def rep_seed(seed: int, n: int, rep: int) -> int:
    """64-bit seed for one replication, a fixed hash of ``(seed, n, rep)``."""
    return int(np.random.SeedSequence([seed, n, rep]).generate_state(1, dtype=np.uint64)[0])


def _env_threads() -> int | None:
    try:
        return max(1, int(os.environ["MG_THREADS"]))
    except (KeyError, ValueError):
        return None


def default_workers() -> int:
    return _env_threads() or 1


def effective_workers(requested: int | None) -> int:
    """Requested worker count, capped by ``MG_THREADS`` when that is set."""
    if requested is None:
        return default_workers()
    cap = _env_threads()
    n = max(1, int(requested))
    return n if cap is None else min(n, cap)


@dataclass
class McConfig:
    spec: DistributionSpec
    v: float
    n_grid: list[int]
    reps: int
    seed: int = 0
    level: float = 0.95
    interval: tuple[float, float] | None = None
    sup_range: tuple[float, float] | None = None

    def __post_init__(self):
        self.n_grid = [int(n) for n in self.n_grid]
        if self.reps < 1:
            raise InvalidParameterError(f"reps must be >= 1, got {self.reps}")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise InvalidParameterError("n_grid must be non-empty and strictly increasing")
        if self.interval is not None:
            a, b = self.interval
            if not a < self.v < b:
                raise InvalidParameterError(f"v={self.v} must lie inside the interval ({a}, {b})")
        if not 0.5 <= self.level < 1:
            raise InvalidParameterError(f"level must be in [0.5, 1), got {self.level}")

    def sup_grid(self) -> np.ndarray:
        """33 even points on ``sup_range``, default the middle 80% of the support."""
        if self.sup_range is not None:
            lo, hi = self.sup_range
        else:
            s_lo, s_hi = self.spec.support
            width = s_hi - s_lo
            lo, hi = s_lo + 0.1 * width, s_hi - 0.1 * width
        return np.linspace(lo, hi, SUP_GRID_POINTS)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = self.spec.to_dict()
        d["interval"] = None if self.interval is None else list(self.interval)
        d["sup_range"] = None if self.sup_range is None else list(self.sup_range)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "McConfig":
        data = dict(data)
        data["spec"] = from_dict(data["spec"])
        for key in ("interval", "sup_range"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass
class Replication:
    n: int
    rep: int
    seed: int
    err: float = math.nan
    abs_err: float = math.nan
    sup_err: float = math.nan
    covered: bool | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class NStats:
    n: int
    mean_abs_err: float
    median_abs_err: float
    sup_err_mean: float | None
    coverage: float | None
    failed: int


@dataclass
class McReport:
    per_n: list[NStats]
    slope: float | None
    slope_stderr: float | None
    config: dict = field(default_factory=dict)
    replications: list[Replication] = field(default_factory=list, repr=False)

    def to_dict(self, include_replications: bool = False) -> dict:
        d = {
            "per_n": [asdict(s) for s in self.per_n],
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "config": self.config,
        }
        if include_replications:
            d["replications"] = [asdict(r) for r in self.replications]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def per_n_csv(self) -> str:
        """Per-n table, ready for a log-log plot."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "log_n", "mean_abs_err", "log_mean_abs_err", "median_abs_err", "sup_err_mean", "coverage"])
        for s in self.per_n:
            w.writerow([
                s.n,
                format_float(math.log(s.n)),
                format_float(s.mean_abs_err),
                format_float(math.log(s.mean_abs_err)) if s.mean_abs_err > 0 else "",
                format_float(s.median_abs_err),
                "" if s.sup_err_mean is None else format_float(s.sup_err_mean),
                "" if s.coverage is None else format_float(s.coverage),
            ])
        return buf.getvalue()

    def replications_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "rep", "seed", "err", "abs_err", "sup_err", "covered", "error"])
        for r in self.replications:
            w.writerow([
                r.n, r.rep, r.seed, format_float(r.err), format_float(r.abs_err), format_float(r.sup_err),
                "" if r.covered is None else int(r.covered), r.error or "",
            ])
        return buf.getvalue()


def loglog_slope(ns, errs) -> tuple[float | None, float | None]:
    """Least-squares slope of ``log err`` on ``log n`` and its standard error."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(errs, dtype=float))
    if x.size < 2 or not np.all(np.isfinite(y)):
        return None, None
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean()) / sxx)
    if x.size < 3:
        return slope, None
    resid = y - y.mean() - slope * xc
    return slope, float(math.sqrt(resid @ resid / (x.size - 2) / sxx))


def _one_rep(cfg: McConfig, n: int, rep: int, coverage: bool, sup_grid: np.ndarray | None,
             approx: ChernoffApprox) -> Replication:
    s = rep_seed(cfg.seed, n, rep)
    out = Replication(n, rep, s)
    truth = float(cfg.spec.pdf(cfg.v))
    try:
        data = sample(cfg.spec, n, s)
        a, b = cfg.interval if cfg.interval is not None else (None, None)
        fd = fit(data, a, b)
        out.err = float(fd(cfg.v)) - truth
        out.abs_err = abs(out.err)
        if sup_grid is not None:
            lo, hi = fd.interval
            g = sup_grid[(sup_grid >= lo) & (sup_grid <= hi)]
            out.sup_err = float(np.max(np.abs(fd(g) - cfg.spec.pdf(g))))
        if coverage:
            ci = confidence_interval(data, cfg.v, cfg.level, approx, fitted=fd)
            out.covered = ci.covers(truth)
    except (MyersonDensityError, ValueError) as exc:
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def run_replications(cfg: McConfig, *, coverage: bool, sup: bool, workers: int | None = None,
                     approx: ChernoffApprox | None = None) -> list[Replication]:
    workers = effective_workers(workers)
    approx = approx or ChernoffApprox()
    sup_grid = cfg.sup_grid() if sup else None
    jobs = [(n, rep) for n in cfg.n_grid for rep in range(cfg.reps)]
    if workers == 1:
        return [_one_rep(cfg, n, rep, coverage, sup_grid, approx) for n, rep in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _one_rep(cfg, *job, coverage, sup_grid, approx), jobs))


def _summarize(cfg: McConfig, reps: list[Replication], coverage: bool, sup: bool) -> McReport:
    per_n = []
    for n in cfg.n_grid:
        rows = [r for r in reps if r.n == n]
        ok = [r for r in rows if not r.failed]
        failed = len(rows) - len(ok)
        if failed > MAX_FAILURE_RATE * len(rows) or not ok:
            first = next(r.error for r in rows if r.failed)
            raise ExperimentError(f"n={n}: {failed}/{len(rows)} replications failed (first: {first})")
        if failed:
            log.warning("n=%d: %d replications failed and were skipped", n, failed)
        errs = np.array([r.abs_err for r in ok])
        per_n.append(NStats(
            n=n,
            mean_abs_err=float(errs.mean()),
            median_abs_err=float(np.median(errs)),
            sup_err_mean=float(np.mean([r.sup_err for r in ok])) if sup else None,
            coverage=float(np.mean([r.covered for r in ok])) if coverage else None,
            failed=failed,
        ))
    slope, stderr = loglog_slope([s.n for s in per_n], [s.mean_abs_err for s in per_n])
    return McReport(per_n, slope, stderr, cfg.to_dict(), reps)


def run_rate_experiment(cfg: McConfig, workers: int | None = None) -> McReport:
    """Absolute and sup errors per n, plus the log-log slope of mean absolute error."""
    reps = run_replications(cfg, coverage=False, sup=True, workers=workers)
    return _summarize(cfg, reps, coverage=False, sup=True)


def run_coverage_experiment(cfg: McConfig, workers: int | None = None,
                            approx: ChernoffApprox | None = None) -> McReport:
    """Fraction of replications whose confidence interval contains the true density."""
    reps = run_replications(cfg, coverage=True, sup=False, workers=workers, approx=approx)
    return _summarize(cfg, reps, coverage=True, sup=False)


def kde_baseline(sample: ValueSample, v: float) -> float:
    """Gaussian kernel estimate with bandwidth ``1.06 s n^(-1/5)``."""
    if sample.n < 2:
        raise InsufficientDataError("kernel baseline needs at least two values")
    s = float(np.std(sample.values, ddof=1))
    if s == 0:
        raise InsufficientDataError("zero-variance sample; bandwidth would be zero")
    h = 1.06 * s * sample.n ** (-0.2)
    z = (v - sample.values) / h
    return float(np.mean(np.exp(-0.5 * z * z)) / (h * math.sqrt(2 * math.pi)))
