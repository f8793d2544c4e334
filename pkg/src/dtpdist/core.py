"""The double two-piece (DTP) construction.

A DTP density glues two half-densities from the same symmetric family at a
common mode mu, with scale sigma1 / shape delta1 on the left and sigma2 /
delta2 on the right.  Continuity at the mode fixes the mixing weight

    eps = sigma1 f(0; delta2) / (sigma1 f(0; delta2) + sigma2 f(0; delta1)),

which is also the probability mass to the left of the mode.  Three
interchangeable parameterisations are supported:

* natural (mu, sigma1, sigma2, delta1, delta2),
* eps-skew (mu, sigma, gamma, delta, zeta) with sigma1 = sigma (1 + gamma),
  sigma2 = sigma (1 - gamma), delta1 = delta (1 + zeta),
  delta2 = delta (1 - zeta),
* read-only inverse-scale-factors (gamma, 1/gamma) view of the scales.

The natural form is the canonical internal representation; conversions are
pure bijections applied at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .families import descriptor, make_family
from .numerics import DomainError, adaptive_quad

__all__ = [
    "MODEL_KINDS",
    "DtpParams",
    "DtpParamsEpsSkew",
    "Observation",
    "MomentResult",
    "NEG_INF",
    "epsilon_weight",
    "dtp_pdf",
    "dtp_log_pdf",
    "dtp_pdf_repar",
    "to_natural",
    "to_eps_skew",
    "to_inverse_scale",
    "dtp_cdf",
    "dtp_quantile",
    "dtp_sample",
    "dtp_moment",
    "log_likelihood",
]

MODEL_KINDS = ("DTP", "TPSC", "TPSH", "SYMMETRIC")

# sentinel for impossible data under the model; a value, not an exception,
# so optimizers and samplers can reject and continue
NEG_INF = float("-inf")


@dataclass(frozen=True)
class DtpParams:
    """Natural parameterisation (mu, sigma1, sigma2, delta1, delta2)."""

    mu: float
    sigma1: float
    sigma2: float
    delta1: float
    delta2: float
    family: str

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise DomainError("scales must be positive")
        desc = descriptor(self.family)
        if desc.has_shape_param:
            lo, hi = desc.delta_domain
            for d in (self.delta1, self.delta2):
                if not lo < d < hi:
                    raise DomainError(
                        f"delta={d} outside {self.family} domain ({lo}, {hi})"
                    )

    @property
    def kind(self) -> str:
        tpsc = self.delta1 == self.delta2
        tpsh = self.sigma1 == self.sigma2
        if tpsc and tpsh:
            return "SYMMETRIC"
        if tpsc:
            return "TPSC"
        if tpsh:
            return "TPSH"
        return "DTP"


@dataclass(frozen=True)
class DtpParamsEpsSkew:
    """Eps-skew parameterisation (mu, sigma, gamma, delta, zeta)."""

    mu: float
    sigma: float
    gamma: float
    delta: float
    zeta: float
    family: str

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if not abs(self.gamma) < 1:
            raise DomainError("gamma must lie in (-1, 1)")
        if not abs(self.zeta) < 1:
            raise DomainError("zeta must lie in (-1, 1)")
        # induced delta1/delta2 must land in the family domain
        to_natural(self)


@dataclass(frozen=True)
class Observation:
    """A point observation or an interval (set) observation."""

    point: Optional[float] = None
    interval: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if (self.point is None) == (self.interval is None):
            raise DomainError("observation is either a point or an interval")
        if self.interval is not None:
            lo, hi = self.interval
            if not hi - lo > 1e-12:
                raise DomainError("interval observation must have positive width")


class MomentResult(NamedTuple):
    value: float
    diverges: bool


def to_natural(p) -> DtpParams:
    """Convert any parameterisation to the natural one."""
    if isinstance(p, DtpParams):
        return p
    if isinstance(p, DtpParamsEpsSkew):
        desc = descriptor(p.family)
        if desc.has_shape_param:
            d1 = p.delta * (1.0 + p.zeta)
            d2 = p.delta * (1.0 - p.zeta)
        else:
            d1 = d2 = 0.0
        return DtpParams(
            mu=p.mu,
            sigma1=p.sigma * (1.0 + p.gamma),
            sigma2=p.sigma * (1.0 - p.gamma),
            delta1=d1,
            delta2=d2,
            family=p.family,
        )
    raise DomainError(f"cannot convert {type(p).__name__}")


def to_eps_skew(p) -> DtpParamsEpsSkew:
    """Convert any parameterisation to the eps-skew one."""
    if isinstance(p, DtpParamsEpsSkew):
        return p
    n = to_natural(p)
    sigma = 0.5 * (n.sigma1 + n.sigma2)
    gamma = (n.sigma1 - n.sigma2) / (n.sigma1 + n.sigma2)
    if descriptor(n.family).has_shape_param:
        delta = 0.5 * (n.delta1 + n.delta2)
        zeta = (n.delta1 - n.delta2) / (n.delta1 + n.delta2)
    else:
        delta, zeta = 0.0, 0.0
    return DtpParamsEpsSkew(
        mu=n.mu, sigma=sigma, gamma=gamma, delta=delta, zeta=zeta, family=n.family
    )


def to_inverse_scale(p) -> dict:
    """Read-only inverse-scale-factors view {a, b} = {gamma, 1/gamma}."""
    n = to_natural(p)
    gamma = math.sqrt(n.sigma2 / n.sigma1)
    sigma = math.sqrt(n.sigma1 * n.sigma2)
    return {
        "mu": n.mu,
        "sigma": sigma,
        "gamma": gamma,
        "delta1": n.delta1,
        "delta2": n.delta2,
        "family": n.family,
    }


def _halves(params: DtpParams):
    left = make_family(params.family, params.delta1)
    right = make_family(params.family, params.delta2)
    return left, right


def epsilon_weight(params) -> float:
    """Continuity weight eps; equals the mass left of the mode."""
    n = to_natural(params)
    left, right = _halves(n)
    a = n.sigma1 * right.height_at_mode
    return a / (a + n.sigma2 * left.height_at_mode)


def dtp_log_pdf(params, x):
    n = to_natural(params)
    left, right = _halves(n)
    # log eps and log(1 - eps) from the unnormalized weights, stable when one
    # side dominates (optimizers probe extreme scale ratios)
    la = math.log(n.sigma1) + math.log(right.height_at_mode)
    lb = math.log(n.sigma2) + math.log(left.height_at_mode)
    log_norm = np.logaddexp(la, lb)
    log_eps = la - log_norm
    log_1m_eps = lb - log_norm
    x = np.asarray(x, float)
    zl = (x - n.mu) / n.sigma1
    zr = (x - n.mu) / n.sigma2
    log_left = math.log(2.0) + log_eps - math.log(n.sigma1) + left.log_pdf_at(zl)
    log_right = math.log(2.0) + log_1m_eps - math.log(n.sigma2) + right.log_pdf_at(zr)
    out = np.where(x < n.mu, log_left, log_right)
    return float(out) if out.ndim == 0 else out


def dtp_pdf(params, x):
    return np.exp(dtp_log_pdf(params, x))


def dtp_pdf_repar(mu, sigma, gamma, delta1, delta2, family, x):
    """Density in the scale-reparameterised form with explicit shapes.

    Uses the normalizer c(gamma, delta1, delta2) =
    b(gamma) f(0; delta2) + a(gamma) f(0; delta1) with the eps-skew choice
    {a, b} = {1 - gamma, 1 + gamma}.
    """
    left = make_family(family, delta1)
    right = make_family(family, delta2)
    b, a = 1.0 + gamma, 1.0 - gamma
    c = b * right.height_at_mode + a * left.height_at_mode
    x = np.asarray(x, float)
    lo = right.height_at_mode * left.pdf_at((x - mu) / (sigma * b))
    hi = left.height_at_mode * right.pdf_at((x - mu) / (sigma * a))
    out = 2.0 / (sigma * c) * np.where(x < mu, lo, hi)
    return float(out) if out.ndim == 0 else out


def dtp_cdf(params, x):
    n = to_natural(params)
    left, right = _halves(n)
    eps = epsilon_weight(n)
    x = np.asarray(x, float)
    lo = 2.0 * eps * left.cdf_at((x - n.mu) / n.sigma1)
    hi = eps + (1.0 - eps) * (2.0 * right.cdf_at((x - n.mu) / n.sigma2) - 1.0)
    out = np.where(x < n.mu, lo, hi)
    return float(out) if out.ndim == 0 else out


def dtp_quantile(params, q):
    n = to_natural(params)
    left, right = _halves(n)
    eps = epsilon_weight(n)
    q = np.asarray(q, float)
    if np.any((q <= 0.0) | (q >= 1.0)):
        raise DomainError("dtp_quantile requires 0 < q < 1")
    ql = np.clip(q / (2.0 * eps), 1e-300, 1.0 - 1e-16)
    qr = np.clip((q - eps) / (2.0 * (1.0 - eps)) + 0.5, 0.5, 1.0 - 1e-16)
    lo = n.mu + n.sigma1 * np.asarray(left.quantile_at(ql), float)
    hi = n.mu + n.sigma2 * np.asarray(right.quantile_at(qr), float)
    out = np.where(q < eps, lo, np.where(q == eps, n.mu, hi))
    return float(out) if out.ndim == 0 else out


def dtp_sample(params, rng: np.random.Generator, n: int):
    """n draws: left half-density with probability eps, right otherwise."""
    if n < 1:
        raise DomainError("n must be >= 1")
    nat = to_natural(params)
    left, right = _halves(nat)
    eps = epsilon_weight(nat)
    side_left = rng.random(n) < eps
    v = np.clip(rng.random(n), 1e-15, 1.0 - 1e-15)
    xl = nat.mu + nat.sigma1 * np.asarray(left.quantile_at(v / 2.0), float)
    xr = nat.mu + nat.sigma2 * np.asarray(right.quantile_at((1.0 + v) / 2.0), float)
    return np.where(side_left, xl, xr)


def dtp_moment(params, r: int, tol: float = 1e-8) -> MomentResult:
    """r-th raw moment by quadrature over each half.

    For the Student-t base the moment exists iff both delta1, delta2 > r;
    divergence is reported as a flag, not an error.
    """
    if r < 1:
        raise DomainError("moment order must be >= 1")
    n = to_natural(params)
    if n.family == "student_t" and min(n.delta1, n.delta2) <= r:
        return MomentResult(value=math.nan, diverges=True)
    left, right = _halves(n)
    eps = epsilon_weight(n)

    def left_integrand(u):
        return (n.mu + n.sigma1 * u) ** r * float(left.pdf_at(u))

    def right_integrand(u):
        return (n.mu + n.sigma2 * u) ** r * float(right.pdf_at(u))

    li = adaptive_quad(left_integrand, -np.inf, 0.0, tol=tol)
    ri = adaptive_quad(right_integrand, 0.0, np.inf, tol=tol)
    return MomentResult(value=2.0 * eps * li.value + 2.0 * (1.0 - eps) * ri.value,
                        diverges=False)


def log_likelihood(params, data: Sequence) -> float:
    """Sum of log density over points and log interval probabilities.

    Returns -inf (a sentinel) when any point has zero density or any
    interval carries zero probability.
    """
    if len(data) == 0:
        raise DomainError("data must be nonempty")
    points = []
    total = 0.0
    for obs in data:
        if isinstance(obs, Observation):
            if obs.point is not None:
                points.append(obs.point)
            else:
                lo, hi = obs.interval
                p_hi = dtp_cdf(params, hi) if np.isfinite(hi) else 1.0
                p_lo = dtp_cdf(params, lo) if np.isfinite(lo) else 0.0
                prob = float(p_hi) - float(p_lo)
                if prob <= 0.0:
                    return NEG_INF
                total += math.log(prob)
        else:
            points.append(float(obs))
    if points:
        lp = dtp_log_pdf(params, np.asarray(points, float))
        lp = np.atleast_1d(lp)
        if not np.all(np.isfinite(lp)):
            return NEG_INF
        total += float(np.sum(lp))
    return total
