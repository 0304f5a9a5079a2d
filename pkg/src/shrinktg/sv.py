"""Stochastic volatility block for eps_t ~ N(0, exp(h_t)).

    h_1 ~ N(mu, sigma_eta2 / (1 - phi^2))
    h_t = mu + phi (h_{t-1} - mu) + sigma_eta eta_t

One sweep draws the mixture indicators of the linearized model
log(eps_t^2) = h_t + log chi2_1, the whole log-volatility path from its
tridiagonal Gaussian posterior, then (sigma_eta2, mu, phi) in the centered
parametrization and (mu, sigma_eta) jointly in the non-centered one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg, special as sc, stats

from .errors import DomainError, SamplerError
from .rand_dist import GigParams, RngStream, sample_gig
from .ssm import _cholesky_banded_guarded, _cholesky_guarded

__all__ = [
    "MIX_WEIGHTS",
    "MIX_MEANS",
    "MIX_VARS",
    "SvPriors",
    "SvState",
    "sample_sv_block",
    "log_sq_residuals",
]

# Ten-component normal mixture for log chi2_1 from Omori, Chib, Shephard and
# Nakajima (2007, J. Econometrics 140).
MIX_WEIGHTS = np.array(
    [0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115]
)
MIX_MEANS = np.array(
    [1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000]
)
MIX_VARS = np.array(
    [0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342]
)
_LOG_MIX_CONST = np.log(MIX_WEIGHTS) - 0.5 * np.log(MIX_VARS)


@dataclass(frozen=True)
class SvPriors:
    """mu ~ N(mu_mean, mu_var), (phi+1)/2 ~ Beta(phi_a, phi_b), sigma_eta2 ~ G(1/2, 1/(2 B_sigma))."""

    mu_mean: float = 0.0
    mu_var: float = 100.0
    phi_a: float = 5.0
    phi_b: float = 1.5
    B_sigma: float = 1.0
    offset: float = 1e-8


@dataclass
class SvState:
    h: np.ndarray
    mu: float
    phi: float
    sigma_eta2: float

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        if not (-1.0 < self.phi < 1.0):
            raise DomainError(f"phi must lie in (-1, 1), got {self.phi}")
        if not self.sigma_eta2 > 0:
            raise DomainError(f"sigma_eta2 must be positive, got {self.sigma_eta2}")

    @property
    def variances(self) -> np.ndarray:
        return np.exp(self.h)


def log_sq_residuals(residuals, offset_scale: float = 1e-8) -> np.ndarray:
    """log(eps_t^2 + c) with c = offset_scale times the mean squared residual."""
    e2 = np.square(np.asarray(residuals, dtype=float))
    c = offset_scale * max(float(np.mean(e2)), 1e-300)
    return np.log(e2 + c)


def _draw_indicators(rng, ystar, h):
    resid = ystar[:, None] - h[:, None] - MIX_MEANS[None, :]
    logp = _LOG_MIX_CONST[None, :] - 0.5 * resid**2 / MIX_VARS[None, :]
    logp -= logp.max(axis=1, keepdims=True)
    p = np.exp(logp)
    cum = np.cumsum(p, axis=1)
    u = rng.gen.random(h.size) * cum[:, -1]
    return np.minimum((cum < u[:, None]).sum(axis=1), MIX_WEIGHTS.size - 1)


def _draw_h(rng, ystar, s, mu, phi, sig2):
    T = ystar.size
    v = MIX_VARS[s]
    obs = ystar - MIX_MEANS[s]
    diag = np.full(T, (1.0 + phi * phi) / sig2)
    diag[0] = diag[-1] = 1.0 / sig2
    diag += 1.0 / v
    ab = np.zeros((2, T))
    ab[1] = diag
    ab[0, 1:] = -phi / sig2
    # prior mean mu times the AR precision
    pm = np.full(T, (1.0 - phi) ** 2 / sig2)
    pm[0] = pm[-1] = (1.0 - phi) / sig2
    if T == 1:
        pm[0] = (1.0 - phi * phi) / sig2
        ab[1, 0] = (1.0 - phi * phi) / sig2 + 1.0 / v[0]
    b = mu * pm + obs / v
    cb = _cholesky_banded_guarded(ab, "sv")
    mean = linalg.cho_solve_banded((cb, False), b, check_finite=False)
    z = rng.gen.standard_normal(T)
    return mean + linalg.solve_banded((0, 1), cb, z, check_finite=False)


def _log_phi_prior(phi, pri):
    u = 0.5 * (phi + 1.0)
    return (pri.phi_a - 1.0) * math.log(u) + (pri.phi_b - 1.0) * math.log1p(-u)


def _truncnorm(rng, m, s, lo, hi):
    u = rng.gen.random()
    a, b = (lo - m) / s, (hi - m) / s
    flip = a > 0.0
    if flip:
        # keep the interval on the lower side, where ndtr keeps its precision
        a, b = -b, -a
    pa, pb = sc.ndtr(a), sc.ndtr(b)
    if pb - pa > 1e-300:
        z = float(sc.ndtri(pa + u * (pb - pa)))
    else:
        z = float(stats.truncnorm.ppf(u, a, b))
    z = min(max(z, a), b)
    x = m + s * (-z if flip else z)
    return min(max(x, math.nextafter(lo, hi)), math.nextafter(hi, lo))


def _centered_step(rng, h, st, pri):
    T = h.size
    mu, phi = st.mu, st.phi
    # sigma_eta2 | h, mu, phi  ~  GIG(1/2 - T/2, 1/B_sigma, Q)
    e = h[1:] - mu - phi * (h[:-1] - mu)
    Q = float(e @ e) + (1.0 - phi * phi) * (h[0] - mu) ** 2
    sig2 = sample_gig(rng, GigParams(0.5 - 0.5 * T, 1.0 / pri.B_sigma, max(Q, 1e-300)))
    # mu | h, phi, sigma_eta2
    prec = 1.0 / pri.mu_var + ((1.0 - phi * phi) + (T - 1) * (1.0 - phi) ** 2) / sig2
    num = pri.mu_mean / pri.mu_var + (
        (1.0 - phi * phi) * h[0] + (1.0 - phi) * float(np.sum(h[1:] - phi * h[:-1]))
    ) / sig2
    mu = num / prec + rng.gen.standard_normal() / math.sqrt(prec)
    # phi | h, mu, sigma_eta2: independence MH from the AR regression
    x = h[:-1] - mu
    yv = h[1:] - mu
    sxx = float(x @ x)
    if T >= 2 and sxx > 0:
        phi_hat = float(x @ yv) / sxx
        phi_prop = _truncnorm(rng, phi_hat, math.sqrt(sig2 / sxx), -1.0, 1.0)
    else:
        phi_prop = 2.0 * rng.gen.beta(pri.phi_a, pri.phi_b) - 1.0
    h0 = (h[0] - mu) ** 2

    def log_extra(ph):
        lp = _log_phi_prior(ph, pri) + 0.5 * math.log(1.0 - ph * ph) - 0.5 * (1.0 - ph * ph) * h0 / sig2
        if not (T >= 2 and sxx > 0):
            # proposal is the prior; target adds the AR likelihood
            lp += -0.5 * float(np.sum((yv - ph * x) ** 2)) / sig2 - _log_phi_prior(ph, pri)
        return lp

    log_r = log_extra(phi_prop) - log_extra(phi)
    if math.log(rng.gen.random()) < log_r:
        phi = phi_prop
    return mu, phi, sig2


def _noncentered_step(rng, h, s, ystar, mu, phi, sig2, pri):
    sig = math.sqrt(sig2)
    ht = (h - mu) / sig
    v = MIX_VARS[s]
    obs = ystar - MIX_MEANS[s]
    Z = np.column_stack([np.ones_like(ht), ht])
    w = 1.0 / v
    prec = (Z * w[:, None]).T @ Z
    prec[0, 0] += 1.0 / pri.mu_var
    prec[1, 1] += 1.0 / pri.B_sigma
    rhs = Z.T @ (w * obs)
    rhs[0] += pri.mu_mean / pri.mu_var
    L = _cholesky_guarded(prec, "sv")
    mean = linalg.cho_solve((L, True), rhs)
    g = mean + linalg.solve_triangular(L.T, rng.gen.standard_normal(2), lower=False)
    mu_new, sig_new = float(g[0]), float(g[1])
    return mu_new + sig_new * ht, mu_new, max(sig_new * sig_new, 1e-300)


def sample_sv_block(rng: RngStream, residuals, state: SvState, priors: SvPriors = SvPriors(), interweave: bool = True) -> SvState:
    """One sweep of the SV sampler given residuals with variances exp(h_t)."""
    ystar = log_sq_residuals(residuals, priors.offset)
    if ystar.size != state.h.size:
        raise DomainError("residuals and h have different lengths")
    s = _draw_indicators(rng, ystar, state.h)
    h = _draw_h(rng, ystar, s, state.mu, state.phi, state.sigma_eta2)
    mu, phi, sig2 = _centered_step(rng, h, replace(state, h=h), priors)
    if interweave:
        h, mu, sig2 = _noncentered_step(rng, h, s, ystar, mu, phi, sig2, priors)
    if not (np.all(np.isfinite(h)) and -1.0 < phi < 1.0 and sig2 > 0):
        raise SamplerError("SV sweep produced invalid values", step="sv")
    return SvState(h, mu, phi, sig2)
