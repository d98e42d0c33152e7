"""Two-point lower-bound construction for estimating f(1/2) on [0, 1].

``f1`` is the uniform density and ``f2 = 1 + delta * phi((v - 1/2) / delta)``.
The pair is close in Hellinger distance but ``|f1(1/2) - f2(1/2)| = delta``;
choosing ``delta ~ n^(-1/3)`` gives the ``n^(-1/3)`` minimax lower bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad

from .distributions import (
    PERTURBATION_DELTA_MAX,
    DistributionSpec,
    PerturbedUniform,
    Uniform,
    perturbation_phi,
)
from .errors import CertificateError, DomainError, InvalidParameterError

__all__ = [
    "perturbation_phi",
    "perturbed_density",
    "hellinger_sq",
    "perturbed_hellinger_sq",
    "hellinger_bound",
    "delta_schedule",
    "build_certificate",
    "MinimaxCertificate",
    "LOWER_BOUND_CONSTANT",
]

EVAL_POINT = 0.5
HELLINGER_BOUND_FACTOR = 2.0 * math.sqrt(2.0) / 3.0
# 1/8 from Le Cam's two-point bound times delta(n) n^(1/3)
LOWER_BOUND_CONSTANT = (3.0 / (8.0 * math.sqrt(2.0))) ** (1.0 / 3.0) / 8.0
CERT_TOL = 1e-10
MIN_QUAD_POINTS = 128


class RegularityPremiseWarning(UserWarning):
    """delta >= 1/3, where the perturbed density is no longer guaranteed regular."""


def perturbed_density(v, delta: float):
    """``1 + delta * phi((v - 1/2) / delta)`` evaluated as written, on any ``v``."""
    return 1.0 + delta * perturbation_phi((np.asarray(v, dtype=float) - EVAL_POINT) / delta)


def _kinks(delta: float) -> list[float]:
    return [EVAL_POINT - delta, EVAL_POINT, EVAL_POINT + 2 * delta, EVAL_POINT + 3 * delta]


def _piecewise_integral(func, lo: float, hi: float, breaks, limit: int) -> float:
    edges = sorted({lo, hi, *(x for x in breaks if lo < x < hi)})
    total = 0.0
    for left, right in zip(edges, edges[1:]):
        val, _ = quad(func, left, right, epsabs=1e-13, epsrel=1e-12, limit=limit)
        total += val
    return total


def _hellinger_integrand(f1, f2):
    def integrand(v):
        return (math.sqrt(float(f1(v))) - math.sqrt(float(f2(v)))) ** 2

    return integrand


def hellinger_sq(spec1: DistributionSpec, spec2: DistributionSpec, quad_points: int = 256) -> float:
    """``int (sqrt f1 - sqrt f2)^2`` over the shared support, split at every kink."""
    if quad_points < MIN_QUAD_POINTS:
        raise InvalidParameterError(f"quad_points must be >= {MIN_QUAD_POINTS}")
    (lo1, hi1), (lo2, hi2) = spec1.support, spec2.support
    if abs(lo1 - lo2) > 1e-12 or abs(hi1 - hi2) > 1e-12:
        raise DomainError(f"supports differ: {spec1.support} vs {spec2.support}")
    lo, hi = lo1, min(hi1, hi2)
    breaks = [*spec1.kinks(), *spec2.kinks(), *(x for x, *_ in spec1.jumps()), *(x for x, *_ in spec2.jumps())]
    return _piecewise_integral(_hellinger_integrand(spec1.pdf, spec2.pdf), lo, hi, breaks, quad_points)


def perturbed_hellinger_sq(delta: float, quad_points: int = 256) -> float:
    """Squared Hellinger distance between 1 and ``perturbed_density`` on [0, 1].

    Agrees with ``hellinger_sq(Uniform(), PerturbedUniform(delta))`` when the
    bump fits inside [0, 1] (``delta <= 1/6``); past that it integrates the
    formula as written, which then has mass above one on [0, 1].
    """
    if quad_points < MIN_QUAD_POINTS:
        raise InvalidParameterError(f"quad_points must be >= {MIN_QUAD_POINTS}")
    integrand = _hellinger_integrand(lambda v: 1.0, lambda v: perturbed_density(v, delta))
    return _piecewise_integral(integrand, 0.0, 1.0, _kinks(delta), quad_points)


def perturbed_mass(delta: float) -> float:
    """``int_0^1 perturbed_density``; exactly 1 when ``delta <= 1/6``."""
    return _piecewise_integral(lambda v: float(perturbed_density(v, delta)), 0.0, 1.0, _kinks(delta), 256)


def hellinger_bound(delta: float) -> float:
    return HELLINGER_BOUND_FACTOR * delta**3


def delta_schedule(n: int) -> float:
    """``delta = (3 / (8 sqrt(2) n))^(1/3)``, which makes the Hellinger bound equal ``1/(4n)``.

    Warns with :class:`RegularityPremiseWarning` when the result is at least 1/3.
    """
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    delta = (3.0 / (8.0 * math.sqrt(2.0) * n)) ** (1.0 / 3.0)
    if delta >= PERTURBATION_DELTA_MAX:
        warnings.warn(
            f"delta={delta:.5f} >= 1/3 for n={n}: the perturbed density may not be regular",
            RegularityPremiseWarning,
            stacklevel=2,
        )
    return delta


@dataclass(frozen=True)
class MinimaxCertificate:
    n: int
    delta: float
    hellinger_sq: float
    bound: float
    separation: float
    psi_min: float
    f2_mass: float
    window_inside_support: bool
    risk_lower_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def build_certificate(n: int, grid_points: int = 10_000, quad_points: int = 256) -> MinimaxCertificate:
    """Assemble and check every inequality of the two-point construction for sample size ``n``.

    Raises :class:`CertificateError` naming the first inequality that fails.
    """
    delta = delta_schedule(n)
    if delta >= PERTURBATION_DELTA_MAX:
        raise CertificateError(f"delta={delta} >= 1/3: regularity of the perturbed density not guaranteed")
    h2 = perturbed_hellinger_sq(delta, quad_points)
    bound = hellinger_bound(delta)
    f1, f2 = Uniform(0.0, 1.0), PerturbedUniform(delta)
    separation = abs(float(f1.pdf(EVAL_POINT)) - float(f2.pdf(EVAL_POINT)))
    grid = np.linspace(*f2.support, grid_points)
    psi_min = float(np.min(f2.psi(grid)))
    cert = MinimaxCertificate(
        n=int(n),
        delta=delta,
        hellinger_sq=h2,
        bound=bound,
        separation=separation,
        psi_min=psi_min,
        f2_mass=perturbed_mass(delta),
        window_inside_support=EVAL_POINT + 3 * delta <= 1.0,
        risk_lower_bound=LOWER_BOUND_CONSTANT * n ** (-1.0 / 3.0),
    )
    checks = [
        (h2 <= bound + CERT_TOL, f"H^2={h2} > (2 sqrt2 / 3) delta^3 = {bound}"),
        (h2 <= 1.0 / (4 * n) + CERT_TOL, f"H^2={h2} > 1/(4n) = {1.0 / (4 * n)}"),
        (abs(separation - delta) <= 4 * np.finfo(float).eps, f"separation {separation} != delta {delta}"),
        (psi_min >= 0.0, f"psi_min={psi_min} < 0"),
    ]
    for ok, msg in checks:
        if not ok:
            raise CertificateError(msg)
    return cert
