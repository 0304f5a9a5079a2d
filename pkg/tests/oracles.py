"""Independent reference computations shared by the unit and acceptance tests.

Nothing here calls into shrinktg; every value comes from scipy or mpmath
applied to the defining integrals or hierarchies.
"""

import math

import numpy as np
from scipy import integrate, special as sc, stats


def _log_normal(x, v):
    return -0.5 * math.log(2.0 * math.pi * v) - 0.5 * x * x / v


def _quad_log_scale(log_f, center, width=60.0):
    # int exp(log_f(s)) ds over the real line, integrated piecewise around the peak
    edges = center + np.array([-width, -20.0, -8.0, -3.0, 0.0, 3.0, 8.0, 20.0, width])
    ref = log_f(center)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda s: math.exp(log_f(s) - ref), lo, hi,
                                epsabs=0.0, epsrel=1e-12, limit=400)
        total += val
    return ref + math.log(total)


def _peak(log_f, lo=-200.0, hi=200.0):
    grid = np.linspace(lo, hi, 4001)
    vals = np.array([log_f(s) for s in grid])
    return float(grid[int(np.argmax(vals))])


def beta_prime_mixture_log_density(x, a, c, phi):
    """log p(x) with x | w ~ N(0, phi w) and w ~ BetaPrime(a, c)."""
    lb = sc.betaln(a, c)

    def log_f(s):  # w = e^s
        w = math.exp(s)
        return _log_normal(x, phi * w) + a * s - (a + c) * math.log1p(w) - lb

    return _quad_log_scale(log_f, _peak(log_f))


def normal_gamma_log_density(x, a, rate):
    """log p(x) with x | v ~ N(0, v) and v ~ Gamma(a, rate)."""
    def log_f(s):
        v = math.exp(s)
        return _log_normal(x, v) + a * math.log(rate) - sc.gammaln(a) + a * s - rate * v

    return _quad_log_scale(log_f, _peak(log_f))


def horseshoe_log_density(x, tau2):
    """log p(x) with x | lam ~ N(0, tau2 lam^2) and lam ~ half-Cauchy(0, 1)."""
    def log_f(s):  # lam = e^s
        lam = math.exp(s)
        return _log_normal(x, tau2 * lam * lam) + math.log(2.0 / math.pi) - math.log1p(lam * lam) + s

    return _quad_log_scale(log_f, _peak(log_f))


def laplace_log_density(x, b):
    return -abs(x) / b - math.log(2.0 * b)


def cauchy_log_density(x, scale):
    return float(stats.cauchy(scale=scale).logpdf(x))


def bessel_k_quadrature(nu, x):
    """K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt, on the log scale."""
    def log_f(t):
        return -x * math.cosh(t) + abs(nu) * t + math.log1p(math.exp(-2.0 * abs(nu) * t)) - math.log(2.0)

    # the integrand peaks where x sinh t = |nu|
    t0 = math.asinh(abs(nu) / x) if x > 0 else 0.0
    ref = log_f(t0)
    hi = t0 + 10.0 + math.acosh(1.0 + 800.0 / x) if x < 1e300 else t0 + 10.0
    edges = sorted({0.0, max(0.0, t0 - 2.0), t0, t0 + 2.0, hi})
    total = 0.0
    for lo, up in zip(edges[:-1], edges[1:]):
        if up <= lo:
            continue
        val, _ = integrate.quad(lambda t: math.exp(log_f(t) - ref), lo, up,
                                epsabs=0.0, epsrel=1e-13, limit=400)
        total += val
    return ref + math.log(total)


def gamma_log_pdf(x, shape, rate):
    return shape * math.log(rate) - sc.gammaln(shape) + (shape - 1.0) * math.log(x) - rate * x


def normal_log_pdf(x, var):
    return _log_normal(x, var)
