"""Shared numerical kernels: special functions, quadrature, root finding, RNG.

Everything downstream (families, shape measures, inference) builds on the
small set of primitives in this module so that accuracy and reproducibility
are controlled in one place.  Infinite integration ranges are handled by
``scipy.integrate.quad``'s rational change of variable; the RNG is PCG64 and
the algorithm name is exported so reports can record it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special

__all__ = [
    "QuadratureResult",
    "Bracket",
    "DomainError",
    "ConvergenceError",
    "BracketError",
    "log_gamma",
    "reg_inc_beta",
    "bessel_k",
    "adaptive_quad",
    "invert_monotone",
    "rng_stream",
    "RNG_ALGORITHM",
    "DEFAULT_QUAD_TOL",
    "DEFAULT_ROOT_TOL",
]

RNG_ALGORITHM = "pcg64"

# One order tighter than every downstream acceptance tolerance.
DEFAULT_QUAD_TOL = 1e-8
DEFAULT_ROOT_TOL = 1e-10


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """An iterative routine failed to reach its tolerance within budget."""


class BracketError(ValueError):
    """A root-finding bracket does not straddle the target."""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.abs_error_estimate < 0:
            raise ValueError("abs_error_estimate must be >= 0")
        if self.evaluations < 1:
            raise ValueError("evaluations must be >= 1")


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError("bracket requires lo < hi")


def log_gamma(x):
    """Natural log of the gamma function for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("log_gamma requires x > 0")
    out = special.gammaln(x)
    return float(out) if out.ndim == 0 else out


def reg_inc_beta(a: float, b: float, x):
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise DomainError("reg_inc_beta requires a, b > 0")
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise DomainError("reg_inc_beta requires 0 <= x <= 1")
    out = special.betainc(a, b, x)
    return float(out) if out.ndim == 0 else out


def bessel_k(order: int, z):
    """Modified Bessel function of the second kind, K_0 or K_1.

    Underflows to 0 for arguments beyond the representable range.
    """
    if order not in (0, 1):
        raise DomainError("bessel_k supports order 0 or 1 only")
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("bessel_k requires z > 0")
    with np.errstate(under="ignore"):
        out = special.k0(z) if order == 0 else special.k1(z)
    return float(out) if out.ndim == 0 else out


def adaptive_quad(
    integrand: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_QUAD_TOL,
) -> QuadratureResult:
    """Adaptive quadrature of ``integrand`` over (lo, hi); +/-inf endpoints allowed."""
    if not lo < hi:
        raise DomainError("adaptive_quad requires lo < hi")
    if tol <= 0:
        raise DomainError("tol must be positive")
    value, abserr, info = integrate.quad(
        integrand, lo, hi, epsabs=tol, epsrel=tol, full_output=True, limit=200
    )[:3]
    neval = int(info["neval"])
    if abserr > max(tol, 1e-6 * max(1.0, abs(value))):
        raise ConvergenceError(
            f"quadrature error estimate {abserr:.3e} above tolerance {tol:.3e}"
        )
    return QuadratureResult(value=value, abs_error_estimate=abserr, evaluations=neval)


def invert_monotone(
    g: Callable[[float], float],
    target: float,
    bracket: Bracket,
    tol: float = DEFAULT_ROOT_TOL,
) -> float:
    """Solve g(x) = target for monotone g on the given bracket."""
    glo = g(bracket.lo) - target
    ghi = g(bracket.hi) - target
    if glo == 0.0:
        return bracket.lo
    if ghi == 0.0:
        return bracket.hi
    if glo * ghi > 0:
        raise BracketError(
            f"target {target} not straddled on [{bracket.lo}, {bracket.hi}]"
        )
    x = optimize.brentq(
        lambda t: g(t) - target, bracket.lo, bracket.hi, xtol=tol, rtol=4 * tol
    )
    return float(x)


def rng_stream(seed: int) -> np.random.Generator:
    """Deterministic uniform stream; identical seed gives an identical stream."""
    return np.random.Generator(np.random.PCG64(seed))
