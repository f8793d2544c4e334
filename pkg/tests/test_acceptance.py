"""Acceptance gate for the package.

Each test covers one release criterion and prints a single PASS/FAIL line.
Tolerances and time budgets are part of the criteria and are asserted, not
advisory.
"""

import math
import os
import time

import numpy as np
import pytest
from scipy import integrate

from dtpdist.core import (
    DtpParams,
    DtpParamsEpsSkew,
    dtp_cdf,
    dtp_log_pdf,
    dtp_moment,
    dtp_pdf,
    dtp_quantile,
    dtp_sample,
    epsilon_weight,
    to_eps_skew,
    to_natural,
)
from dtpdist.families import make_family
from dtpdist.inference import (
    McmcConfig,
    hier_fit,
    marginal_lik_is,
    mcmc_sample,
    mle_fit,
    fit_bayes,
    savage_dickey_bf,
)
from dtpdist.measures import (
    ag_measure,
    cj_functional,
    kappa_measure,
    kappa_range,
)
from dtpdist.numerics import rng_stream
from dtpdist.priors import (
    Observation,
    induce_delta_prior,
    repeated_obs_threshold,
    thm2_audit,
    uniform_prior,
)


def check(label, ok, elapsed, budget):
    ok = bool(ok) and elapsed <= budget
    print(f"{'PASS' if ok else 'FAIL'}: {label} ({elapsed:.1f}s / {budget:.0f}s budget)")
    assert ok, label


# ---------------------------------------------------------------------------
# criterion 1: published skewness table for scale-free shape asymmetry

AG_TABLE = [
    ("student_t", 0.1, 10.0, -0.45, 0.005),
    ("student_t", 0.5, 10.0, -0.18, 0.005),
    ("student_t", 1.0, 10.0, -0.10, 0.005),
    ("student_t", 5.0, 10.0, -0.01, 0.005),
    ("sas_symmetric", 5.0, 1.0, 2.0 / 3.0, 1e-12),
    ("sas_symmetric", 5.0, 2.0, 0.43, 0.005),
    ("sas_symmetric", 1.0, 0.25, 3.0 / 5.0, 1e-12),
    ("sas_symmetric", 1.0, 0.5, 1.0 / 3.0, 1e-12),
    ("smn_bs", 1.0, 50.0, -0.44, 0.005),
    ("smn_bs", 1.0, 10.0, -0.09, 0.005),
    ("smn_bs", 1.0, 5.0, 0.03, 0.005),
    ("smn_bs", 2.0, 1.0, -0.07, 0.01),
    ("exp_power", 1.0, 2.0, 0.11, 0.005),
    ("exp_power", 1.5, 2.0, 0.03, 0.005),
    ("exp_power", 2.0, 2.0, 0.0, 1e-12),
    ("exp_power", 2.5, 2.0, -0.01, 0.005),
]


def test_criterion_1_ag_table():
    t0 = time.time()
    ok = True
    for family, d1, d2, want, tol in AG_TABLE:
        p = DtpParams(mu=0.0, sigma1=1.0, sigma2=1.0,
                      delta1=d1, delta2=d2, family=family)
        ok = ok and abs(ag_measure(p) - want) <= tol
    check("criterion 1: 16-row AG skewness table", ok, time.time() - t0, 10.0)


# ---------------------------------------------------------------------------
# criterion 2: kurtosis measure anchors and attainable ranges

def test_criterion_2_kappa_anchors():
    t0 = time.time()
    ok = abs(kappa_measure("normal") - 0.213) <= 1e-3
    r = kappa_range("student_t")
    ok = ok and abs(r.lo - 0.213) <= 0.005 and abs(r.hi - 0.633) <= 0.005
    r = kappa_range("smn_bs")
    ok = ok and abs(r.lo - 0.213) <= 0.005 and abs(r.hi - 0.560) <= 0.005
    check("criterion 2: kurtosis anchors and ranges", ok, time.time() - t0, 30.0)


# ---------------------------------------------------------------------------
# criterion 3: repeated-observation threshold and the propriety audit

def test_criterion_3_repeated_obs_threshold():
    t0 = time.time()
    thr = repeated_obs_threshold(1823, 30)
    ok = thr == 29.0 / 1793.0 and f"{thr:.6f}" == "0.016174"
    rng = rng_stream(17)
    pts = list(rng.normal(0.0, 1.0, 1793)) + [2.0] * 30
    data = [Observation(point=float(x)) for x in pts]
    verdict = thm2_audit("student_t", uniform_prior(2.0, 50.0), data)
    ok = ok and verdict.status == "proper"
    check("criterion 3: tie threshold exact and proper above it",
          ok, time.time() - t0, 1.0)


# ---------------------------------------------------------------------------
# criterion 4: structural identities over randomized parameter draws

_DELTA_RANGE = {
    "student_t": (0.5, 10.0),
    "exp_power": (0.6, 4.0),
    "sas_symmetric": (0.3, 3.0),
    "johnson_su_symmetric": (0.3, 3.0),
    "smn_bs": (0.3, 2.5),
    "normal": (0.0, 0.0),
    "laplace": (0.0, 0.0),
}

_FAMILIES = tuple(_DELTA_RANGE)


def _random_params(family, kind, rng):
    lo, hi = _DELTA_RANGE[family]
    delta = float(rng.uniform(lo, hi)) if hi > lo else 0.0
    gamma = float(rng.uniform(-0.8, 0.8)) if kind in ("DTP", "TPSC") else 0.0
    zeta = (float(rng.uniform(-0.7, 0.7))
            if kind in ("DTP", "TPSH") and hi > lo else 0.0)
    return DtpParamsEpsSkew(mu=float(rng.uniform(-2, 2)),
                            sigma=float(rng.uniform(0.3, 3.0)),
                            gamma=gamma, delta=delta, zeta=zeta, family=family)


def _check_one(p, kind):
    n = to_natural(p)
    eps = epsilon_weight(n)
    f = lambda x: dtp_pdf(n, x)
    cuts = (-np.inf, n.mu - 30 * n.sigma1, n.mu, n.mu + 30 * n.sigma2, np.inf)
    mass = sum(integrate.quad(f, a, b, limit=200)[0]
               for a, b in zip(cuts, cuts[1:]))
    assert abs(mass - 1.0) <= 1e-6

    left = 2.0 * eps * make_family(n.family, n.delta1).height_at_mode / n.sigma1
    right = (2.0 * (1.0 - eps)
             * make_family(n.family, n.delta2).height_at_mode / n.sigma2)
    assert abs(left - right) <= 1e-12 * max(left, right)

    assert abs(dtp_cdf(n, n.mu) - eps) <= 1e-12

    for q in (0.001, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999, eps):
        assert abs(dtp_cdf(n, dtp_quantile(n, q)) - q) <= 1e-7

    back = to_natural(to_eps_skew(n))
    for x in (n.mu - 1.7 * n.sigma1, n.mu + 0.3 * n.sigma2, n.mu + 2.4 * n.sigma2):
        la, lb = dtp_log_pdf(n, x), dtp_log_pdf(back, x)
        assert abs(la - lb) <= 1e-12 * max(1.0, abs(la))

    if kind == "TPSH":
        mirror = DtpParams(mu=n.mu, sigma1=n.sigma1, sigma2=n.sigma2,
                           delta1=n.delta2, delta2=n.delta1, family=n.family)
        for x in (0.4, 1.3, 2.6):
            fa = dtp_pdf(n, n.mu + x)
            fb = dtp_pdf(mirror, n.mu - x)
            assert abs(fa - fb) <= 1e-12 * max(fa, 1e-300)

    if kind == "TPSC":
        ag = ag_measure(n)
        for prob in (0.2, 0.5, 0.8):
            assert abs(cj_functional(n, prob) - ag) <= 1e-8


def test_criterion_4_structural_identities():
    t0 = time.time()
    rng = rng_stream(99)
    for family in _FAMILIES:
        for kind in ("DTP", "TPSC", "TPSH"):
            for _ in range(20):
                _check_one(_random_params(family, kind, rng), kind)
    check("criterion 4: structural identities, 20 random draws per combo",
          True, time.time() - t0, 300.0)


# ---------------------------------------------------------------------------
# criterion 5: sampler agrees with the distribution function

def test_criterion_5_sampler_ks():
    t0 = time.time()
    n = 5000
    crit = 1.63 / math.sqrt(n)  # 1% level
    for family in _FAMILIES:
        for rep in range(10):
            rng = rng_stream(1000 + rep)
            p = _random_params(family, "DTP", rng)
            draws = np.sort(dtp_sample(p, rng_stream(2000 + rep), n))
            cdf = np.array([dtp_cdf(p, x) for x in draws])
            grid = np.arange(1, n + 1) / n
            ks = max(np.max(grid - cdf), np.max(cdf - (grid - 1.0 / n)))
            assert ks < crit, (family, rep, ks)
    check("criterion 5: KS of 5000 draws against the CDF, 10 seeds per family",
          True, time.time() - t0, 120.0)


# ---------------------------------------------------------------------------
# criterion 6: moment existence boundary for heavy tails

def test_criterion_6_moment_existence():
    t0 = time.time()
    ok = True
    for r in (1, 2, 3):
        for delta in (0.5, 1.5, 2.5, 3.5):
            p = DtpParams(mu=0.0, sigma1=1.0, sigma2=1.0,
                          delta1=delta, delta2=delta + 2.0, family="student_t")
            res = dtp_moment(p, r)
            ok = ok and res.diverges == (min(p.delta1, p.delta2) <= r)
    check("criterion 6: moment divergence exactly at min(delta1, delta2) <= r",
          ok, time.time() - t0, 60.0)


# ---------------------------------------------------------------------------
# criterion 7: induced shape prior pushes forward to a uniform kurtosis law

def _pushforward_uniform(family):
    prior = induce_delta_prior(family)
    n = 100_000
    deltas = np.sort(prior.sample(rng_stream(5), n))
    # kappa is monotone, so an order-preserving subsample keeps the KS
    # statistic honest while holding the kappa evaluations to 2000
    sub = deltas[:: n // 2000]
    kappas = np.array([kappa_measure(family, d) for d in sub])
    r = kappa_range(family)
    u = np.sort((kappas - r.lo) / (r.hi - r.lo))
    m = len(u)
    grid = np.arange(1, m + 1) / m
    ks = max(np.max(grid - u), np.max(u - (grid - 1.0 / m)))
    return ks < 1.63 / math.sqrt(m)


def test_criterion_7_induced_prior_pushforward():
    t0 = time.time()
    ok = _pushforward_uniform("student_t") and _pushforward_uniform("sas_symmetric")
    check("criterion 7: induced prior pushforward uniform at 1e5 draws",
          ok, time.time() - t0, 120.0)


# ---------------------------------------------------------------------------
# criterion 8: calibration of the estimation and testing machinery

def _experiment_mle_recovery():
    truth = DtpParamsEpsSkew(mu=0.0, sigma=1.0, gamma=0.5, delta=1.0,
                             zeta=-0.3, family="sas_symmetric")
    data = [Observation(point=float(x))
            for x in dtp_sample(truth, rng_stream(51), 2000)]
    rep = mle_fit(data, "sas_symmetric", "DTP", restarts=10, seed=0)
    est = rep.params_hat
    ok = (abs(est["mu"]) <= 0.1 and abs(est["sigma"] - 1.0) <= 0.15
          and abs(est["gamma"] - 0.5) <= 0.1 and abs(est["zeta"] + 0.3) <= 0.15)

    sym = DtpParamsEpsSkew(mu=0.0, sigma=1.0, gamma=0.0, delta=1.0,
                           zeta=0.0, family="sas_symmetric")
    data = [Observation(point=float(x))
            for x in dtp_sample(sym, rng_stream(32), 2000)]
    rep = mle_fit(data, "sas_symmetric", "DTP", restarts=6, seed=0)
    est = rep.params_hat
    return ok and abs(est["gamma"]) <= 0.1 and abs(est["zeta"]) <= 0.15


def _experiment_symmetry_tests():
    cfg = McmcConfig(iterations=6000, burn_in=2000, thin=2, seed=0)
    wins = 0
    for rep in range(20):
        y = rng_stream(100 + rep).normal(0.0, 1.0, 150)
        data = [Observation(point=float(x)) for x in y]
        fit = fit_bayes(data, "normal", "TPSC", config=cfg)
        if savage_dickey_bf(fit, {"gamma": 0.0}).value > 1.0:
            wins += 1
    ok = wins >= 18

    from dtpdist.inference import HierData

    detections = 0
    law = DtpParamsEpsSkew(mu=0.0, sigma=0.3, gamma=0.6, delta=0.0,
                           zeta=0.0, family="normal")
    for rep in range(20):
        rng = rng_stream(300 + rep)
        theta = dtp_sample(law, rng, 70)
        y = theta + rng.normal(0.0, 0.05, 70)
        hfit = hier_fit(HierData(y=y, sigma_j=np.full(70, 0.05)),
                        "TPSC-normal", config=cfg)
        if savage_dickey_bf(hfit, {"gamma": 0.0}).value < 1.0:
            detections += 1
    return ok and detections >= 16


def _experiment_conjugate_toy():
    rng = rng_stream(2)
    y = rng.normal(0.4, 1.0, 40)
    n, ybar = len(y), y.mean()

    def log_post(v):
        th = float(v[0])
        return -0.5 * np.sum((y - th) ** 2) - 0.5 * th * th

    cfg = McmcConfig(iterations=20000, burn_in=4000, thin=2, seed=9)
    chain = mcmc_sample(log_post, [0.0], cfg, param_names=("theta",))

    from dtpdist.inference import _kde_at

    m, s2 = n * ybar / (n + 1), 1.0 / (n + 1)
    post0 = math.exp(-0.5 * m * m / s2) / math.sqrt(2 * math.pi * s2)
    prior0 = 1.0 / math.sqrt(2 * math.pi)
    bf_true = post0 / prior0
    bf_est = _kde_at(chain.draws[:, 0], 0.0) / prior0
    ok = abs(bf_est - bf_true) <= 0.10 * bf_true

    logz_true = (-0.5 * n * math.log(2 * math.pi) - 0.5 * math.log(n + 1)
                 - 0.5 * (np.sum(y ** 2) - n * n * ybar * ybar / (n + 1)))
    ev = marginal_lik_is(
        chain.draws, log_post,
        prior_sample=lambda r, k: r.normal(0, 1, (k, 1)),
        prior_logpdf=lambda v: -0.5 * float(v[0]) ** 2
        - 0.5 * math.log(2 * math.pi),
        n_draws=100_000, seed=3,
    )
    logz_est = math.log(ev.value) - 0.5 * (n + 1) * math.log(2 * math.pi)
    return ok and abs(math.exp(logz_est - logz_true) - 1.0) <= 0.05


def test_criterion_8_calibration():
    t0 = time.time()
    ok = (_experiment_mle_recovery() and _experiment_symmetry_tests()
          and _experiment_conjugate_toy())
    check("criterion 8: MLE recovery, symmetry tests, conjugate-toy checks",
          ok, time.time() - t0, 1800.0)


# ---------------------------------------------------------------------------
# criterion 9: documented limits of reproducibility

def test_criterion_9_reproducibility_disclosure():
    t0 = time.time()
    readme = os.path.join(os.path.dirname(__file__), os.pardir, "README.md")
    text = open(readme, encoding="utf-8").read().lower()
    ok = "reproducib" in text and "not bundled" in text
    check("criterion 9: external-data reproducibility disclosure in README",
          ok, time.time() - t0, 10.0)
