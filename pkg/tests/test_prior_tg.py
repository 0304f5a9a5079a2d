import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special as sc, stats

from oracles import beta_prime_mixture_log_density, normal_gamma_log_density
from shrinktg.errors import DomainError, UnsupportedCaseError
from shrinktg.prior_tg import (
    REPRESENTATIONS,
    HyperPriorSpec,
    TripleGammaPrior,
    asymptotic_density,
    log_density_sqrt_theta,
    log_marginal_density_sqrt_theta,
    pi_xi,
    profile_bands,
    sample_hyperpriors,
    sample_profile,
    sample_sqrt_theta,
    shrinkage_profile_density,
    special_case,
)
from shrinktg.rand_dist import RngStream, sample_f


def test_phi_and_from_phi_roundtrip():
    p = TripleGammaPrior(0.2, 0.3, 1.5)
    assert p.phi == pytest.approx(2 * 0.3 / (1.5 * 0.2))
    q = TripleGammaPrior.from_phi(0.2, 0.3, p.phi)
    assert q.kappa_B2 == pytest.approx(1.5)


@pytest.mark.parametrize("kw", [
    dict(a=0.0, c=0.3, kappa_B2=1.0),
    dict(a=0.2, c=-1.0, kappa_B2=1.0),
    dict(a=0.2, c=0.3, kappa_B2=0.0),
    dict(a=math.inf, c=0.3, kappa_B2=1.0),
    dict(a=0.2, c=0.3, kappa_B2=1.0, role="gamma"),
])
def test_invalid_priors(kw):
    with pytest.raises(DomainError):
        TripleGammaPrior(**kw)


@pytest.mark.parametrize("tag, params, expected", [
    ("horseshoe", {"tau2": 1.0}, (0.5, 0.5, 2.0)),
    ("lasso", {"tau2": 1.0}, (1.0, math.inf, 2.0)),
    ("half_cauchy", {"tau2": 4.0}, (math.inf, 0.5, 0.5)),
    ("double_gamma", {"a": 0.1, "tau2": 2.0}, (0.1, math.inf, 1.0)),
    ("half_t", {"nu": 3.0, "tau2": 1.0}, (math.inf, 1.5, 2.0)),
    ("normal", {"B0": 4.0}, (math.inf, math.inf, 0.5)),
    ("strawderman_berger", {}, (0.5, 1.0, 4.0)),
    ("neg", {"c": 2.0, "lambda2": 0.5}, (1.0, 2.0, 2.0)),
])
def test_special_case_embeddings(tag, params, expected):
    p = special_case(tag, **params)
    assert (p.a, p.c, p.kappa_B2) == expected
    assert p.tag == tag


def test_special_case_errors():
    with pytest.raises(UnsupportedCaseError):
        special_case("ridge")
    with pytest.raises(DomainError):
        special_case("horseshoe", nu=1.0)
    with pytest.raises(UnsupportedCaseError):
        special_case("lasso").phi


def test_density_origin_limit_finite_branch():
    p = TripleGammaPrior.from_phi(1.0, 0.5, 1.0)
    assert math.exp(log_marginal_density_sqrt_theta(p, 0.0)) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
    assert log_marginal_density_sqrt_theta(p, 1e-9) == pytest.approx(
        log_marginal_density_sqrt_theta(p, 0.0), abs=1e-8)
    assert log_marginal_density_sqrt_theta(TripleGammaPrior.from_phi(0.3, 0.5, 1.0), 0.0) == math.inf


def test_density_against_beta_prime_mixture():
    p = TripleGammaPrior.from_phi(0.5, 0.5, 1.0)
    ref = beta_prime_mixture_log_density(1.0, 0.5, 0.5, 1.0)
    assert log_marginal_density_sqrt_theta(p, 1.0) == pytest.approx(ref, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(0.1, 10.0), st.floats(1e-4, 1e3))
def test_density_symmetry(a, c, phi, x):
    p = TripleGammaPrior.from_phi(a, c, phi)
    assert log_marginal_density_sqrt_theta(p, -x) == log_marginal_density_sqrt_theta(p, x)


def test_density_integrates_to_one():
    p = TripleGammaPrior.from_phi(0.3, 0.8, 1.5)
    f = lambda x: 2.0 * math.exp(log_marginal_density_sqrt_theta(p, x))
    edges = [0.0, 1e-8, 1e-4, 1e-2, 1.0, 100.0, 1e4, np.inf]
    total = sum(integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-9, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    assert total == pytest.approx(1.0, abs=1e-6)


def test_density_vectorized():
    p = TripleGammaPrior(0.2, 0.3, 1.1)
    x = np.array([[0.1, -2.0], [3.0, 1e-5]])
    out = log_marginal_density_sqrt_theta(p, x)
    assert out.shape == (2, 2)
    assert out[1, 0] == log_marginal_density_sqrt_theta(p, 3.0)


def test_asymptotic_pole_branch_formula():
    p = TripleGammaPrior.from_phi(0.25, 0.5, 1.0)
    x = 1e-5
    expected = math.gamma(0.25) / (math.sqrt(math.pi) * 2**0.25 * sc.beta(0.25, 0.5)) * x**-0.5
    assert asymptotic_density(p, x, "origin") == pytest.approx(expected, rel=1e-12)
    assert asymptotic_density(p, x, "origin_pole") == pytest.approx(expected, rel=1e-12)


def test_asymptotic_log_branch_includes_euler_constant():
    # leading term of U(a, 1, z) is -(ln z + psi(a) + 2 gamma) / Gamma(a)
    p = TripleGammaPrior.from_phi(0.5, 0.5, 1.0)
    x = 1e-5
    expected = (-math.log(x * x) + math.log(2.0) - sc.digamma(1.0) - 2 * np.euler_gamma) / (
        math.sqrt(2 * math.pi) * sc.beta(0.5, 0.5))
    assert asymptotic_density(p, x, "origin_log") == pytest.approx(expected, rel=1e-12)
    exact = math.exp(log_marginal_density_sqrt_theta(p, x))
    assert asymptotic_density(p, x, "origin") == pytest.approx(exact, rel=1e-3)


def test_asymptotic_tail_formula():
    p = TripleGammaPrior.from_phi(0.5, 0.5, 1.0)
    x = 1e3
    expected = math.gamma(1.0) * math.sqrt(2.0) / (math.sqrt(math.pi) * sc.beta(0.5, 0.5)) * x**-2
    assert asymptotic_density(p, x, "tail") == pytest.approx(expected, rel=1e-12)
    exact = math.exp(log_marginal_density_sqrt_theta(p, x))
    assert asymptotic_density(p, x, "tail") == pytest.approx(exact, rel=1e-3)


def test_asymptotic_errors():
    p = TripleGammaPrior.from_phi(0.25, 0.5, 1.0)
    with pytest.raises(DomainError):
        asymptotic_density(p, 1e-3, "origin_log")
    with pytest.raises(DomainError):
        asymptotic_density(p, 1e-3, "middle")
    with pytest.raises(DomainError):
        asymptotic_density(p, 0.0, "origin")
    with pytest.raises(UnsupportedCaseError):
        asymptotic_density(special_case("lasso"), 1.0, "tail")


def test_log_density_special_cases():
    dg = special_case("double_gamma", a=0.3, tau2=2.0)
    for x in (1e-3, 0.4, 5.0):
        assert log_density_sqrt_theta(dg, x) == pytest.approx(
            normal_gamma_log_density(x, 0.3, 0.3 * dg.kappa_B2 / 2), abs=1e-9)
    nrm = special_case("normal", B0=2.0)
    assert log_density_sqrt_theta(nrm, 0.7) == pytest.approx(stats.norm(0, math.sqrt(2.0)).logpdf(0.7), abs=1e-14)
    ht = special_case("half_t", nu=3.0, tau2=1.0)
    assert log_density_sqrt_theta(ht, 0.7) == pytest.approx(stats.t(3.0, scale=1.0).logpdf(0.7), abs=1e-13)


def test_profile_horseshoe_and_uniform():
    hs = special_case("horseshoe", tau2=1.0)
    assert shrinkage_profile_density(hs, 0.5) == pytest.approx(2 / math.pi, rel=1e-12)
    assert shrinkage_profile_density(TripleGammaPrior.from_phi(1.0, 1.0, 1.0), 0.3) == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.001, 0.999))
def test_profile_symmetric_prior(k):
    p = TripleGammaPrior.from_phi(0.1, 0.1, 1.0)
    assert shrinkage_profile_density(p, k) == pytest.approx(shrinkage_profile_density(p, 1.0 - k), rel=1e-9)


def test_profile_double_gamma_against_simulation():
    p = special_case("double_gamma", a=0.1, tau2=1.0)
    rng = RngStream(3, 0)
    k = sample_profile(rng, p, 400_000)
    h = 0.02
    frac = np.mean(np.abs(k - 0.5) < h) / (2 * h)
    val = integrate.quad(lambda u: shrinkage_profile_density(p, u), 0.5 - h, 0.5 + h)[0] / (2 * h)
    se = math.sqrt(val / (2 * h * k.size))
    assert abs(frac - val) < 4 * se
    assert shrinkage_profile_density(p, 0.5) == pytest.approx(val, rel=0.01)


def test_profile_half_cauchy_normalizes():
    p = special_case("half_cauchy", tau2=1.0)
    total = integrate.quad(lambda u: shrinkage_profile_density(p, u), 0, 1, limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-7)
    with pytest.raises(UnsupportedCaseError):
        shrinkage_profile_density(special_case("normal"), 0.5)
    with pytest.raises(DomainError):
        shrinkage_profile_density(p, 1.0)


def test_pi_xi_values():
    for a in (0.05, 0.2, 0.45):
        assert pi_xi(TripleGammaPrior.from_phi(a, a, 1.0)) == pytest.approx(0.5, abs=1e-13)
    assert pi_xi(TripleGammaPrior.from_phi(0.5, 0.5, 4.0)) == pytest.approx(0.70483, abs=1e-5)


def test_pi_xi_against_simulation():
    p = TripleGammaPrior(0.2, 0.35, 1.3)
    k = sample_profile(RngStream(9, 0), p, 1_000_000)
    target = pi_xi(p)
    assert abs(np.mean(k < 0.5) - target) < 3 * math.sqrt(target * (1 - target) / k.size)


def test_hyperprior_mean():
    a, c, kb = sample_hyperpriors(RngStream(1, 0), HyperPriorSpec(), size=1_000_000)
    assert abs(np.mean(2 * a) - 1 / 7) < 3 * math.sqrt(6 / (49 * 8) / a.size)
    assert np.all((a > 0) & (a < 0.5) & (c > 0) & (c < 0.5) & (kb > 0))


def test_hyperprior_concentration():
    a, _, _ = sample_hyperpriors(RngStream(1, 0), HyperPriorSpec(1e6, 1e6, 1e6, 1e6), size=10_000)
    assert np.std(2 * a) < 1e-3
    assert np.mean(2 * a) == pytest.approx(0.5, abs=1e-3)


def test_hyperprior_gamma_global():
    spec = HyperPriorSpec(use_f_hyperprior=False, gamma_shape=2.0, gamma_rate=4.0)
    _, _, kb = sample_hyperpriors(RngStream(2, 0), spec, size=100_000)
    assert stats.kstest(kb, stats.gamma(2.0, scale=0.25).cdf).pvalue > 1e-3
    a, c, kb1 = sample_hyperpriors(RngStream(2, 0), spec)
    assert isinstance(kb1, float)


def test_pi_xi_uniform_under_f_hyperprior_small():
    a, c = 0.3, 0.2
    kb = 2.0 * sample_f(RngStream(5, 0), 2 * a, 2 * c, size=20_000)
    pis = [pi_xi(TripleGammaPrior(a, c, float(v))) for v in kb]
    assert stats.kstest(pis, "uniform").pvalue > 1e-3


def test_representations_agree_small():
    p = TripleGammaPrior(0.2, 0.3, 1.7)
    draws = {r: sample_sqrt_theta(RngStream(4, k), p, 20_000, r) for k, r in enumerate(REPRESENTATIONS)}
    base = draws["hierarchy"]
    for r, x in draws.items():
        assert x.shape == (20_000,)
        assert stats.ks_2samp(base, x).pvalue > 1e-3, r


def test_hierarchy_sample_against_density():
    p = TripleGammaPrior(0.6, 0.9, 1.2)
    x = sample_sqrt_theta(RngStream(8, 0), p, 20_000)
    edges = np.concatenate([[-np.inf], np.linspace(-3, 3, 13), [np.inf]])
    pdf = lambda v: math.exp(log_marginal_density_sqrt_theta(p, v))
    probs = [integrate.quad(pdf, lo, hi, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:])]
    counts = np.histogram(x, edges)[0]
    probs = np.array(probs) / np.sum(probs)
    assert stats.chisquare(counts, probs * x.size).pvalue > 1e-3


def test_representation_errors():
    with pytest.raises(UnsupportedCaseError):
        sample_sqrt_theta(RngStream(0), TripleGammaPrior(0.2, 0.3, 1.0), 5, "mixture")
    with pytest.raises(UnsupportedCaseError):
        sample_sqrt_theta(RngStream(0), special_case("lasso"), 5)


def test_sample_profile_matches_density():
    p = TripleGammaPrior(0.4, 0.3, 0.8)
    k = sample_profile(RngStream(6, 0), p, 50_000)
    # kappa <= v  <=>  xi2 / phi = (1/v - 1) / phi or more, with xi2 / phi ~ BetaPrime(a, c)
    def cdf(v):
        y = (1.0 / v - 1.0) / p.phi
        return stats.beta(0.4, 0.3).sf(y / (1.0 + y))

    assert stats.kstest(k, cdf).pvalue > 1e-3
    assert np.all(sample_profile(RngStream(0), special_case("normal", B0=1.0), 3) == pytest.approx(0.5))


def test_profile_bands_shape_and_order():
    p = TripleGammaPrior(0.1, 0.1, 2.0)
    kb = 2.0 * sample_f(RngStream(7, 0), 0.2, 0.2, size=300)
    kappa = np.linspace(0.05, 0.95, 19)
    bands = profile_bands(p, kappa, kb)
    assert bands.shape == (19, 5)
    assert np.all(np.diff(bands, axis=1) >= 0)


@pytest.mark.parametrize("a, c, phi", [(0.45, 0.05, 1e-20), (0.1, 0.4, 1e20), (0.3, 0.2, 0.7), (0.3, 0.2, 3.0)])
def test_pi_xi_extreme_scales(a, c, phi):
    mp.mp.dps = 40
    x = mp.mpf(phi) / (1 + mp.mpf(phi))
    ref = float(mp.betainc(c, a, 0, x, regularized=True))
    assert pi_xi(TripleGammaPrior.from_phi(a, c, phi)) == pytest.approx(ref, rel=1e-10)
