"""Asymmetry and kurtosis functionals.

Three moment-free shape summaries:

* AG, the Arnold-Groeneveld skewness 1 - 2 G(mode), which for the two-piece
  construction reduces to 1 - 2 eps;
* CJ(p), the Critchley-Jones asymmetry curve built from the pair of points
  left and right of the mode where the density drops to a fraction p of its
  mode height;
* kappa = 2 f(inflection) / f(mode) - 1, a bounded kurtosis measure equal to
  0.213 for the normal distribution.

kappa is injective in the shape parameter on a per-family validity range
(registry constants below), which is what makes the uniform-on-kappa prior
elicitation in :mod:`dtpdist.priors` well defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import families
from .core import epsilon_weight, to_natural
from .families import descriptor, inflection_point, make_family
from .numerics import Bracket, DomainError, invert_monotone

__all__ = [
    "CjCurve",
    "KappaProfile",
    "KappaRange",
    "ag_measure",
    "cj_functional",
    "cj_curve",
    "kappa_measure",
    "kappa_range",
    "scan_injectivity",
    "invert_kappa",
]

# finite evaluation windows standing in for the open kappa-validity ranges
_KAPPA_GRID_WINDOW = {
    "student_t": (1e-3, 1e4),
    "exp_power": (1.0 + 1e-3, 1e4),
    # kappa attains its minimum near delta = 97 and creeps back up, so the
    # injectivity window stops short of the turning point
    "sas_symmetric": (0.02, 95.0),
    "johnson_su_symmetric": (0.02, 1e3),
    "smn_bs": (1e-3, 2.65 * (1.0 - 1e-9)),
}


@dataclass(frozen=True)
class CjCurve:
    p_grid: np.ndarray
    cj_values: np.ndarray


@dataclass(frozen=True)
class KappaProfile:
    delta_grid: np.ndarray
    kappa_values: np.ndarray
    injective_on: Optional[tuple[float, float]]


@dataclass(frozen=True)
class KappaRange:
    lo: float
    hi: float
    delta_grid: np.ndarray
    kappa_values: np.ndarray


def ag_measure(params) -> float:
    """Arnold-Groeneveld skewness, 1 - 2 eps."""
    return 1.0 - 2.0 * epsilon_weight(params)


def _density_level_inverse(family_id: str, delta: float, p: float) -> float:
    """Positive x with f(x; delta) = p * f(0; delta)."""
    ev = make_family(family_id, delta)
    target = p * ev.height_at_mode
    # interquartile spread guards heavy tails when expanding the bracket
    spread = float(families.quantile(family_id, delta, 0.75)) - float(
        families.quantile(family_id, delta, 0.25)
    )
    hi = max(spread, 1e-3)
    for _ in range(200):
        if float(ev.pdf_at(hi)) < target:
            break
        hi *= 2.0
    return invert_monotone(
        lambda x: -float(ev.pdf_at(x)), -target, Bracket(0.0, hi), tol=1e-12
    )


def cj_functional(params, p: float) -> float:
    """Critchley-Jones asymmetry at relative density height p."""
    if not 0.0 < p < 1.0:
        raise DomainError("cj_functional requires 0 < p < 1")
    n = to_natural(params)
    x1 = _density_level_inverse(n.family, n.delta1, p)  # left: -sigma1 * x1
    x2 = _density_level_inverse(n.family, n.delta2, p)  # right: +sigma2 * x2
    return (n.sigma2 * x2 - n.sigma1 * x1) / (n.sigma2 * x2 + n.sigma1 * x1)


def cj_curve(params, p_grid: Sequence[float]) -> CjCurve:
    p_grid = np.asarray(p_grid, float)
    vals = np.array([cj_functional(params, p) for p in p_grid])
    return CjCurve(p_grid=p_grid, cj_values=vals)


def kappa_measure(family_id: str, delta: float = 0.0) -> float:
    """Bounded kurtosis: 2 f(inflection) / f(mode) - 1."""
    # validated against the family domain only: scans probe beyond the
    # declared injectivity window on purpose
    desc = descriptor(family_id)
    if desc.has_shape_param:
        lo, hi = desc.delta_domain
        if not lo < delta < hi:
            raise DomainError(f"delta={delta} outside {family_id} domain ({lo}, {hi})")
        if family_id == "exp_power" and delta <= 1.0:
            raise DomainError("exp_power kurtosis measure requires delta > 1")
    ev = make_family(family_id, delta)
    pi_r = inflection_point(family_id, delta)
    return 2.0 * float(ev.pdf_at(pi_r)) / ev.height_at_mode - 1.0


_KAPPA_GRID_CACHE: dict[str, tuple[np.ndarray, np.ndarray]] = {}


def _kappa_grid(family_id: str, n_nodes: int = 256):
    cached = _KAPPA_GRID_CACHE.get(family_id)
    if cached is not None and len(cached[0]) >= n_nodes:
        return cached
    if family_id not in _KAPPA_GRID_WINDOW:
        raise DomainError(f"{family_id} has no shape parameter to scan")
    lo, hi = _KAPPA_GRID_WINDOW[family_id]
    deltas = np.geomspace(lo, hi, n_nodes)
    kappas = np.array([kappa_measure(family_id, d) for d in deltas])
    _KAPPA_GRID_CACHE[family_id] = (deltas, kappas)
    return deltas, kappas


def kappa_range(family_id: str, n_nodes: int = 256) -> KappaRange:
    """Numerical infimum/supremum of kappa over the validity window."""
    deltas, kappas = _kappa_grid(family_id, n_nodes)
    return KappaRange(
        lo=float(np.min(kappas)),
        hi=float(np.max(kappas)),
        delta_grid=deltas,
        kappa_values=kappas,
    )


def scan_injectivity(
    family_id: str, delta_grid: Sequence[float], tol: float = 1e-9
) -> KappaProfile:
    """Evaluate kappa on a grid and report the largest strictly-monotone
    prefix or suffix interval."""
    deltas = np.asarray(delta_grid, float)
    if np.any(np.diff(deltas) <= 0):
        raise DomainError("delta_grid must be strictly increasing")
    kappas = np.array([kappa_measure(family_id, d) for d in deltas])
    diffs = np.diff(kappas)
    strict = np.where(diffs > tol, 1, np.where(diffs < -tol, -1, 0))

    def run_length(signs):
        if len(signs) == 0 or signs[0] == 0:
            return 0
        k = 1
        while k < len(signs) and signs[k] == signs[0]:
            k += 1
        return k

    prefix = run_length(strict)
    suffix = run_length(strict[::-1])
    if prefix == len(strict) or suffix == len(strict):
        interval = (float(deltas[0]), float(deltas[-1]))
    elif prefix >= suffix and prefix > 0:
        interval = (float(deltas[0]), float(deltas[prefix]))
    elif suffix > 0:
        interval = (float(deltas[-1 - suffix]), float(deltas[-1]))
    else:
        interval = None
    return KappaProfile(delta_grid=deltas, kappa_values=kappas, injective_on=interval)


def invert_kappa(family_id: str, kappa_target: float, tol: float = 1e-8) -> float:
    """Shape parameter delta with kappa(delta) = kappa_target."""
    deltas, kappas = _kappa_grid(family_id)
    k_lo, k_hi = float(np.min(kappas)), float(np.max(kappas))
    if not k_lo < kappa_target < k_hi:
        raise DomainError(
            f"kappa target {kappa_target} outside range ({k_lo:.4f}, {k_hi:.4f})"
        )
    # locate a straddling cell on the cached profile
    sign = np.sign(kappas - kappa_target)
    idx = np.nonzero(sign[:-1] * sign[1:] <= 0)[0]
    if len(idx) == 0:
        raise DomainError("kappa target not straddled on the evaluation grid")
    i = int(idx[0])
    lo, hi = float(deltas[i]), float(deltas[i + 1])
    delta = invert_monotone(
        lambda d: kappa_measure(family_id, d), kappa_target, Bracket(lo, hi), tol=tol
    )
    if abs(kappa_measure(family_id, delta) - kappa_target) > max(tol, 1e-8):
        raise DomainError("kappa inversion did not reach tolerance")
    return delta
