import math

import numpy as np
import pytest
from scipy.integrate import quad

from dtpdist.core import (
    DtpParams,
    DtpParamsEpsSkew,
    Observation,
    dtp_cdf,
    dtp_log_pdf,
    dtp_moment,
    dtp_pdf,
    dtp_pdf_repar,
    dtp_quantile,
    dtp_sample,
    epsilon_weight,
    log_likelihood,
    to_eps_skew,
    to_inverse_scale,
    to_natural,
)
from dtpdist.families import height_at_mode
from dtpdist.numerics import DomainError, rng_stream


def random_params(rng, family):
    deltas = {
        "normal": (0.0, 0.0),
        "laplace": (0.0, 0.0),
        "student_t": tuple(rng.uniform(0.5, 8.0, 2)),
        "exp_power": tuple(rng.uniform(0.8, 3.0, 2)),
        "sas_symmetric": tuple(rng.uniform(0.4, 2.5, 2)),
        "johnson_su_symmetric": tuple(rng.uniform(0.4, 2.5, 2)),
        "smn_bs": tuple(rng.uniform(0.3, 2.0, 2)),
    }[family]
    return DtpParams(
        mu=float(rng.uniform(-3, 3)),
        sigma1=float(rng.uniform(0.3, 3.0)),
        sigma2=float(rng.uniform(0.3, 3.0)),
        delta1=deltas[0],
        delta2=deltas[1],
        family=family,
    )


def test_params_validation():
    with pytest.raises(DomainError):
        DtpParams(0.0, -1.0, 1.0, 1.0, 1.0, "student_t")
    with pytest.raises(DomainError):
        DtpParams(0.0, 1.0, 1.0, -2.0, 1.0, "student_t")
    with pytest.raises(DomainError):
        DtpParamsEpsSkew(0.0, 1.0, 1.5, 1.0, 0.0, "student_t")
    with pytest.raises(DomainError):
        # zeta = -1 pushes delta2 to twice delta but delta1 to zero
        DtpParamsEpsSkew(0.0, 1.0, 0.0, 1.0, -1.0, "student_t")


def test_kind_classification():
    assert DtpParams(0, 1, 1, 2, 2, "student_t").kind == "SYMMETRIC"
    assert DtpParams(0, 2, 1, 2, 2, "student_t").kind == "TPSC"
    assert DtpParams(0, 1, 1, 3, 2, "student_t").kind == "TPSH"
    assert DtpParams(0, 2, 1, 3, 2, "student_t").kind == "DTP"


def test_epsilon_weight_symmetric():
    p = DtpParams(0, 1.3, 1.3, 2.0, 2.0, "student_t")
    assert epsilon_weight(p) == pytest.approx(0.5, abs=1e-14)


def test_epsilon_weight_tpsh_sas():
    # sinh-arcsinh f(0;d) = d/sqrt(2 pi), so eps = d2/(d1+d2)
    p = DtpParams(0, 1, 1, 5.0, 1.0, "sas_symmetric")
    assert epsilon_weight(p) == pytest.approx(1.0 / 6.0, rel=1e-12)


def test_epsilon_weight_tpsc_scales():
    p = DtpParams(0, 2.0, 1.0, 1.5, 1.5, "exp_power")
    assert epsilon_weight(p) == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_pdf_continuity_at_mode():
    rng = rng_stream(1)
    for family in ("normal", "student_t", "sas_symmetric", "smn_bs"):
        for _ in range(5):
            p = random_params(rng, family)
            left = dtp_pdf(p, p.mu - 1e-12)
            right = dtp_pdf(p, p.mu + 1e-12)
            assert left == pytest.approx(right, rel=1e-9)
            # continuity identity at the mode itself
            eps = epsilon_weight(p)
            expect = 2 * eps * height_at_mode(family, p.delta1) / p.sigma1
            assert dtp_pdf(p, p.mu) == pytest.approx(expect, rel=1e-12)


def test_pdf_symmetric_reduction():
    p = DtpParams(1.0, 0.7, 0.7, 3.0, 3.0, "student_t")
    from dtpdist.families import make_family

    base = make_family("student_t", 3.0)
    xs = np.linspace(-4, 6, 41)
    direct = np.asarray(base.pdf_at((xs - 1.0) / 0.7), float) / 0.7
    assert np.allclose(dtp_pdf(p, xs), direct, rtol=1e-12)


def test_pdf_normalization_random():
    rng = rng_stream(4)
    for family in ("student_t", "exp_power", "johnson_su_symmetric"):
        p = random_params(rng, family)
        val, _ = quad(lambda x: float(dtp_pdf(p, x)), -np.inf, np.inf, limit=400)
        assert val == pytest.approx(1.0, abs=1e-6)


def test_repar_density_matches_natural():
    rng = rng_stream(9)
    for family in ("student_t", "sas_symmetric"):
        mu = float(rng.uniform(-2, 2))
        sigma = float(rng.uniform(0.5, 2))
        gamma = float(rng.uniform(-0.8, 0.8))
        d1, d2 = rng.uniform(0.5, 4.0, 2)
        nat = DtpParams(mu, sigma * (1 + gamma), sigma * (1 - gamma),
                        float(d1), float(d2), family)
        xs = np.linspace(mu - 5, mu + 5, 51)
        a = dtp_pdf_repar(mu, sigma, gamma, float(d1), float(d2), family, xs)
        b = dtp_pdf(nat, xs)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_conversions_roundtrip():
    p = DtpParams(0.3, 2.0, 1.0, 3.0, 1.0, "student_t")
    e = to_eps_skew(p)
    assert e.sigma == pytest.approx(1.5)
    assert e.gamma == pytest.approx(1.0 / 3.0)
    assert e.delta == pytest.approx(2.0)
    assert e.zeta == pytest.approx(0.5)
    back = to_natural(e)
    for field in ("mu", "sigma1", "sigma2", "delta1", "delta2"):
        assert getattr(back, field) == pytest.approx(getattr(p, field), abs=1e-12)


def test_inverse_scale_view():
    p = DtpParams(0.0, 4.0, 1.0, 2.0, 2.0, "student_t")
    view = to_inverse_scale(p)
    assert view["gamma"] == pytest.approx(0.5)
    assert view["sigma"] == pytest.approx(2.0)


def test_cdf_at_mode_is_eps():
    rng = rng_stream(2)
    for family in ("normal", "student_t", "smn_bs"):
        p = random_params(rng, family)
        assert dtp_cdf(p, p.mu) == pytest.approx(epsilon_weight(p), abs=1e-12)


def test_cdf_derivative_matches_pdf():
    p = DtpParams(0.5, 1.2, 0.8, 4.0, 2.0, "student_t")
    h = 1e-5
    for x in [-2.0, 0.0, 0.5, 1.5, 4.0]:
        num = (dtp_cdf(p, x + h) - dtp_cdf(p, x - h)) / (2 * h)
        assert num == pytest.approx(dtp_pdf(p, x), abs=1e-5)


def test_quantile_roundtrip_and_mode():
    rng = rng_stream(6)
    for family in ("student_t", "exp_power", "sas_symmetric"):
        p = random_params(rng, family)
        eps = epsilon_weight(p)
        assert dtp_quantile(p, eps) == pytest.approx(p.mu, abs=1e-9)
        qs = np.arange(0.01, 0.995, 0.03)
        xs = dtp_quantile(p, qs)
        assert np.allclose(dtp_cdf(p, xs), qs, atol=1e-7)
    with pytest.raises(DomainError):
        dtp_quantile(p, 0.0)


def test_symmetric_median_is_mu():
    p = DtpParams(2.5, 1.0, 1.0, 3.0, 3.0, "student_t")
    assert dtp_quantile(p, 0.5) == pytest.approx(2.5, abs=1e-10)


def test_sample_deterministic_and_mass_split():
    p = DtpParams(0.0, 2.0, 1.0, 3.0, 1.0, "student_t")
    a = dtp_sample(p, rng_stream(8), 200)
    b = dtp_sample(p, rng_stream(8), 200)
    assert np.array_equal(a, b)
    big = dtp_sample(p, rng_stream(13), 100_000)
    frac = np.mean(big < 0.0)
    assert frac == pytest.approx(epsilon_weight(p), abs=0.005)


def test_sample_ks_against_cdf():
    p = DtpParams(1.0, 0.8, 1.4, 2.0, 5.0, "student_t")
    n = 5000
    x = np.sort(dtp_sample(p, rng_stream(17), n))
    u = np.asarray(dtp_cdf(p, x), float)
    grid = np.arange(1, n + 1) / n
    ks = max(np.max(grid - u), np.max(u - (grid - 1.0 / n)))
    assert ks < 1.63 / math.sqrt(n)


def test_moment_symmetric_normal_mean():
    p = DtpParams(1.7, 1.0, 1.0, 0.0, 0.0, "normal")
    res = dtp_moment(p, 1)
    assert not res.diverges
    assert res.value == pytest.approx(1.7, abs=1e-7)


def test_moment_student_divergence_gate():
    p = DtpParams(0.0, 1.0, 1.0, 1.0, 1.0, "student_t")
    assert dtp_moment(p, 1).diverges
    p2 = DtpParams(0.0, 1.0, 1.0, 3.0, 3.0, "student_t")
    assert not dtp_moment(p2, 2).diverges
    assert dtp_moment(p2, 3).diverges  # boundary: delta = r not strictly greater


def test_moment_tpsc_normal_sign():
    # heavier scale on the left pulls the mean negative
    p = DtpParams(0.0, 2.0, 1.0, 0.0, 0.0, "normal")
    res = dtp_moment(p, 1)
    assert res.value < 0


def test_log_likelihood_point_at_mode():
    p = DtpParams(0.0, 2.0, 1.0, 3.0, 1.0, "student_t")
    eps = epsilon_weight(p)
    expect = math.log(2 * eps * height_at_mode("student_t", 3.0) / 2.0)
    assert log_likelihood(p, [Observation(point=0.0)]) == pytest.approx(
        expect, rel=1e-12
    )


def test_log_likelihood_full_line_interval():
    p = DtpParams(0.0, 1.0, 1.0, 0.0, 0.0, "normal")
    ll = log_likelihood(p, [Observation(interval=(-math.inf, math.inf))])
    assert ll == pytest.approx(0.0, abs=1e-12)


def test_log_likelihood_matches_pdf_sum():
    p = DtpParams(0.3, 1.1, 0.9, 2.0, 4.0, "student_t")
    pts = np.linspace(-3, 3, 10)
    expect = float(np.sum(dtp_log_pdf(p, pts)))
    assert log_likelihood(p, list(pts)) == pytest.approx(expect, abs=1e-12)


def test_log_likelihood_zero_probability_interval():
    p = DtpParams(0.0, 1.0, 1.0, 0.0, 0.0, "normal")
    ll = log_likelihood(p, [Observation(interval=(50.0, 50.0 + 1e-9))])
    assert ll == -math.inf


def test_observation_validation():
    with pytest.raises(DomainError):
        Observation()
    with pytest.raises(DomainError):
        Observation(point=1.0, interval=(0.0, 2.0))
    with pytest.raises(DomainError):
        Observation(interval=(1.0, 1.0))


def test_tpsh_reflection_identity():
    p = DtpParams(0.5, 1.0, 1.0, 4.0, 1.5, "student_t")
    swapped = DtpParams(0.5, 1.0, 1.0, 1.5, 4.0, "student_t")
    xs = np.linspace(-5, 6, 61)
    assert np.allclose(dtp_pdf(p, xs), dtp_pdf(swapped, 1.0 - xs), rtol=1e-12)
