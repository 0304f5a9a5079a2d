"""The triple gamma prior on a signed scale sqrt(theta).

The hierarchy is

    sqrt(theta) | xi2 ~ N(0, xi2)
    xi2 | kappa2 ~ G(a, a kappa2 / 2)
    kappa2 ~ G(c, c / kappa_B2)

with shape-rate gamma laws.  ``phi = 2 c / (kappa_B2 a)`` is the derived
global scale; it is never stored.  Infinite shapes are limits of the
hierarchy (c = inf fixes kappa2 = kappa_B2, a = inf fixes xi2 = 2 / kappa2)
and are only created through :func:`special_case`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .errors import DomainError, UnsupportedCaseError
from .rand_dist import (
    RngStream,
    cdf_beta,
    log_density_tpb,
    sample_beta,
    sample_f,
    sample_log_gamma,
)
from .special_fn import log_bessel_k, log_hyper_u

__all__ = [
    "TripleGammaPrior",
    "HyperPriorSpec",
    "special_case",
    "SPECIAL_CASES",
    "log_marginal_density_sqrt_theta",
    "log_density_sqrt_theta",
    "asymptotic_density",
    "shrinkage_profile_density",
    "pi_xi",
    "sample_hyperpriors",
    "sample_sqrt_theta",
    "REPRESENTATIONS",
    "profile_bands",
    "sample_profile",
]

INF = math.inf


@dataclass(frozen=True)
class TripleGammaPrior:
    """Shapes ``a`` (spike), ``c`` (tail) and global ``kappa_B2``.

    ``role`` labels the side of the model the prior sits on: ``"xi"`` for
    the scales sqrt(theta_j), ``"tau"`` for the levels beta_j.
    """

    a: float
    c: float
    kappa_B2: float
    tag: str | None = None
    role: str = "xi"

    def __post_init__(self):
        for name in ("a", "c"):
            v = getattr(self, name)
            if math.isnan(v) or v <= 0:
                raise DomainError(f"{name} must be positive, got {v!r}")
            if math.isinf(v) and self.tag is None:
                raise DomainError(
                    f"infinite {name} is only available through special_case()"
                )
        if not (math.isfinite(self.kappa_B2) and self.kappa_B2 > 0):
            raise DomainError(f"kappa_B2 must be finite and positive, got {self.kappa_B2!r}")
        if self.role not in ("xi", "tau"):
            raise DomainError(f"role must be 'xi' or 'tau', got {self.role!r}")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.a) and math.isfinite(self.c)

    @property
    def phi(self) -> float:
        """Derived global scale 2c / (kappa_B2 a); defined for finite shapes."""
        if not self.finite:
            raise UnsupportedCaseError(f"phi is undefined for {self.tag or 'infinite'} shapes")
        return 2.0 * self.c / (self.kappa_B2 * self.a)

    @classmethod
    def from_phi(cls, a: float, c: float, phi: float, role: str = "xi") -> "TripleGammaPrior":
        if not (phi > 0 and math.isfinite(phi)):
            raise DomainError(f"phi must be finite and positive, got {phi!r}")
        return cls(a, c, 2.0 * c / (phi * a), role=role)


@dataclass(frozen=True)
class HyperPriorSpec:
    """Hyperpriors 2a ~ Beta(alpha_a, beta_a), 2c ~ Beta(alpha_c, beta_c).

    With ``use_f_hyperprior`` the global parameter follows
    kappa_B2 / 2 | a, c ~ F(2a, 2c); otherwise kappa_B2 ~ G(gamma_shape,
    gamma_rate) independently of the shapes.
    """

    alpha_a: float = 1.0
    beta_a: float = 6.0
    alpha_c: float = 1.0
    beta_c: float = 6.0
    use_f_hyperprior: bool = True
    gamma_shape: float = 0.01
    gamma_rate: float = 0.01

    def __post_init__(self):
        for name in ("alpha_a", "beta_a", "alpha_c", "beta_c", "gamma_shape", "gamma_rate"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and positive, got {v!r}")


# ---------------------------------------------------------------------------
# Special cases


def _horseshoe(tau2=1.0):
    return TripleGammaPrior(0.5, 0.5, 2.0 / tau2, tag="horseshoe")


def _lasso(tau2=1.0):
    return TripleGammaPrior(1.0, INF, 2.0 / tau2, tag="lasso")


def _double_gamma(a, tau2=1.0):
    return TripleGammaPrior(a, INF, 2.0 / tau2, tag="double_gamma")


def _half_t(nu, tau2=1.0):
    return TripleGammaPrior(INF, nu / 2.0, 2.0 / tau2, tag="half_t")


def _half_cauchy(tau2=1.0):
    return TripleGammaPrior(INF, 0.5, 2.0 / tau2, tag="half_cauchy")


def _normal(B0=1.0):
    return TripleGammaPrior(INF, INF, 2.0 / B0, tag="normal")


def _strawderman_berger():
    return TripleGammaPrior(0.5, 1.0, 4.0, tag="strawderman_berger")


def _neg(c, lambda2=1.0):
    return TripleGammaPrior(1.0, c, 2.0 * lambda2 * c, tag="neg")


SPECIAL_CASES = {
    "horseshoe": _horseshoe,
    "lasso": _lasso,
    "double_gamma": _double_gamma,
    "half_t": _half_t,
    "half_cauchy": _half_cauchy,
    "normal": _normal,
    "strawderman_berger": _strawderman_berger,
    "neg": _neg,
}


def special_case(tag: str, **params) -> TripleGammaPrior:
    """Named member of the triple gamma family.

    Parameters
    ----------
    tag : str
        One of ``horseshoe(tau2)``, ``lasso(tau2)``, ``double_gamma(a, tau2)``,
        ``half_t(nu, tau2)``, ``half_cauchy(tau2)``, ``normal(B0)``,
        ``strawderman_berger()`` or ``neg(c, lambda2)``.
    **params
        The free quantities of the chosen family.

    Examples
    --------
    >>> special_case("horseshoe", tau2=1.0)
    TripleGammaPrior(a=0.5, c=0.5, kappa_B2=2.0, tag='horseshoe', role='xi')
    """
    try:
        ctor = SPECIAL_CASES[tag]
    except KeyError:
        raise UnsupportedCaseError(
            f"unknown special case {tag!r}; choose from {sorted(SPECIAL_CASES)}"
        ) from None
    try:
        return ctor(**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {tag}: {exc}") from None


# ---------------------------------------------------------------------------
# Marginal densities of sqrt(theta)


def _log_origin_c(a, c, phi):
    return (
        sc.gammaln(c + 0.5)
        + sc.gammaln(a - 0.5)
        - 0.5 * math.log(2.0 * math.pi * phi)
        - sc.betaln(a, c)
        - sc.gammaln(a + c)
    )


def log_marginal_density_sqrt_theta(prior: TripleGammaPrior, x):
    """Closed-form log density of sqrt(theta) on the real line.

    ``ln G(c+1/2) - ln sqrt(2 pi phi) - ln B(a, c) + ln U(c+1/2, 3/2-a, x^2/(2 phi))``.
    At ``x = 0`` the density is finite only for ``a > 0.5``; otherwise
    ``+inf`` is returned.
    """
    if not prior.finite:
        raise UnsupportedCaseError(
            f"closed form needs finite shapes; use log_density_sqrt_theta for {prior.tag}"
        )
    a, c, phi = prior.a, prior.c, prior.phi
    const = sc.gammaln(c + 0.5) - 0.5 * math.log(2.0 * math.pi * phi) - sc.betaln(a, c)

    def one(xi):
        if xi == 0.0:
            return _log_origin_c(a, c, phi) if a > 0.5 else INF
        return const + log_hyper_u(c + 0.5, 1.5 - a, xi * xi / (2.0 * phi))

    if np.ndim(x) == 0:
        return float(one(abs(float(x))))
    xa = np.abs(np.asarray(x, dtype=float))
    return np.array([one(float(v)) for v in xa.ravel()]).reshape(xa.shape)


def _log_normal_gamma(x, a, rate):
    # int N(x; 0, v) G(v; a, rate) dv
    x = np.abs(np.asarray(x, dtype=float))
    nu = a - 0.5
    with np.errstate(divide="ignore"):
        lx = np.log(x)
    out = (
        a * math.log(rate)
        - sc.gammaln(a)
        - 0.5 * math.log(2.0 * math.pi)
        + math.log(2.0)
        + 0.5 * nu * (2.0 * lx - math.log(2.0 * rate))
        + log_bessel_k(nu, np.maximum(x, 1e-300) * math.sqrt(2.0 * rate))
    )
    return out


def log_density_sqrt_theta(prior: TripleGammaPrior, x):
    """Log density of sqrt(theta) for any member of the family.

    Finite shapes use the closed form; ``c = inf`` gives the normal-gamma
    (Bessel) density, ``a = inf`` a Student-t with 2c degrees of freedom and
    scale sqrt(2 / kappa_B2), and both infinite a normal with variance
    2 / kappa_B2.
    """
    a, c, kb = prior.a, prior.c, prior.kappa_B2
    if prior.finite:
        return log_marginal_density_sqrt_theta(prior, x)
    if math.isinf(a) and math.isinf(c):
        v = 2.0 / kb
        out = -0.5 * np.log(2.0 * math.pi * v) - 0.5 * np.square(x) / v
    elif math.isinf(c):
        out = _log_normal_gamma(x, a, a * kb / 2.0)
    else:
        nu = 2.0 * c
        s2 = 2.0 / kb
        out = (
            sc.gammaln((nu + 1.0) / 2.0)
            - sc.gammaln(nu / 2.0)
            - 0.5 * math.log(nu * math.pi * s2)
            - (nu + 1.0) / 2.0 * np.log1p(np.square(x) / (nu * s2))
        )
    return float(out) if np.ndim(out) == 0 else np.asarray(out)


def asymptotic_density(prior: TripleGammaPrior, x: float, branch: str) -> float:
    """Leading-order density near the origin or in the tail.

    ``branch`` is ``"origin"`` (regime chosen from ``a``), ``"tail"``, or an
    explicit regime ``"origin_pole"`` (a < 0.5), ``"origin_log"`` (a = 0.5),
    ``"origin_finite"`` (a > 0.5), which must match ``a``.
    """
    if not prior.finite:
        raise UnsupportedCaseError("asymptotics are stated for finite shapes")
    a, c, phi = prior.a, prior.c, prior.phi
    x = abs(float(x))
    lb = sc.betaln(a, c)
    if branch == "tail":
        if x <= 0:
            raise DomainError("tail branch needs x > 0")
        return math.exp(
            sc.gammaln(c + 0.5) + c * math.log(2.0 * phi) - 0.5 * math.log(math.pi) - lb
            - (2.0 * c + 1.0) * math.log(x)
        )
    regime = "origin_pole" if a < 0.5 else ("origin_log" if a == 0.5 else "origin_finite")
    if branch != "origin" and branch != regime:
        if branch in ("origin_pole", "origin_log", "origin_finite"):
            raise DomainError(f"branch {branch!r} does not match a = {a}")
        raise DomainError(f"unknown branch {branch!r}")
    if regime == "origin_finite":
        return math.exp(_log_origin_c(a, c, phi))
    if x <= 0:
        raise DomainError("origin branch with a <= 0.5 diverges at x = 0")
    if regime == "origin_pole":
        return math.exp(
            sc.gammaln(0.5 - a) - 0.5 * math.log(math.pi) - a * math.log(2.0 * phi) - lb
            - (1.0 - 2.0 * a) * math.log(x)
        )
    # U(a, 1, z) = -(ln z + psi(a) + 2 gamma_E) / Gamma(a) + O(z ln z)
    return (
        (-math.log(x * x) + math.log(2.0 * phi) - sc.digamma(c + 0.5) - 2.0 * np.euler_gamma)
        / (math.sqrt(2.0 * math.pi * phi) * math.exp(lb))
    )


# ---------------------------------------------------------------------------
# Shrinkage profiles and model size


def shrinkage_profile_density(prior: TripleGammaPrior, kappa):
    """Prior density of the shrinkage factor kappa = 1 / (1 + xi^2).

    Finite shapes give TPB(a, c, phi).  For ``c = inf`` xi^2 ~ G(a, a kappa_B2/2)
    and for ``a = inf`` xi^2 ~ IG(c, 2c / kappa_B2); both are transformed to
    the kappa scale.
    """
    k = np.asarray(kappa, dtype=float)
    if np.any(~(k > 0)) or np.any(~(k < 1)):
        raise DomainError("shrinkage profile requires 0 < kappa < 1")
    a, c, kb = prior.a, prior.c, prior.kappa_B2
    if prior.finite:
        out = np.exp(log_density_tpb(k, a, c, prior.phi))
    elif math.isinf(a) and math.isinf(c):
        raise UnsupportedCaseError("the normal prior has a degenerate shrinkage profile")
    elif math.isinf(c):
        r = a * kb / 2.0
        out = np.exp(
            a * math.log(r) - sc.gammaln(a) + (a - 1.0) * np.log1p(-k)
            - (a + 1.0) * np.log(k) - (1.0 - k) / k * r
        )
    else:
        s = 2.0 * c / kb
        v = (1.0 - k) / k
        out = np.exp(
            c * math.log(s) - sc.gammaln(c) - (c + 1.0) * np.log(v) - s / v - 2.0 * np.log(k)
        )
    return float(out) if np.ndim(out) == 0 else out


def pi_xi(prior: TripleGammaPrior) -> float:
    """Prior inclusion probability P(kappa < 0.5) = 1 - I_{1/(1+phi)}(a, c).

    The incomplete beta is always evaluated at the smaller of 1 / (1 + phi)
    and phi / (1 + phi), so extreme phi do not round the argument to 1.
    """
    if not prior.finite:
        raise UnsupportedCaseError("pi_xi needs finite shapes")
    phi = prior.phi
    if phi >= 1.0:
        return 1.0 - cdf_beta(1.0 / (1.0 + phi), prior.a, prior.c)
    return cdf_beta(phi / (1.0 + phi), prior.c, prior.a)


def sample_hyperpriors(rng: RngStream, spec: HyperPriorSpec, size=None):
    """Draw ``(a, c, kappa_B2)`` from the shape and global hyperpriors."""
    a = 0.5 * sample_beta(rng, spec.alpha_a, spec.beta_a, size)
    c = 0.5 * sample_beta(rng, spec.alpha_c, spec.beta_c, size)
    a = np.maximum(a, 1e-300)
    c = np.maximum(c, 1e-300)
    if spec.use_f_hyperprior:
        kb = 2.0 * np.minimum(sample_f(rng, 2.0 * a, 2.0 * c, size), 0.5 * np.finfo(float).max)
    else:
        kb = np.exp(sample_log_gamma(rng, spec.gamma_shape, size)) / spec.gamma_rate
    if size is None:
        return float(a), float(c), float(kb)
    return a, c, kb


# ---------------------------------------------------------------------------
# Sampling sqrt(theta) through equivalent representations

REPRESENTATIONS = ("hierarchy", "f", "student_t", "student_t_phi", "gamma_ratio", "beta_prime")


def _lg(rng, shape, n):
    return sample_log_gamma(rng, np.full(n, float(shape)))


def sample_sqrt_theta(rng: RngStream, prior: TripleGammaPrior, n: int, representation: str = "hierarchy"):
    """Draw ``n`` values of sqrt(theta) through one of six equivalent routes.

    Every route builds the log of the conditional normal variance so that
    small shapes do not underflow before the final square root.
    """
    if not prior.finite:
        raise UnsupportedCaseError("representation sampling needs finite shapes")
    a, c, kb, phi = prior.a, prior.c, prior.kappa_B2, prior.phi
    if representation == "hierarchy":
        lk2 = _lg(rng, c, n) - math.log(c / kb)
        lv = _lg(rng, a, n) - (math.log(a / 2.0) + lk2)
        z = rng.gen.standard_normal(n)
    elif representation == "f":
        lxf = _lg(rng, a, n) - _lg(rng, c, n) + math.log(c / a)
        lv = math.log(2.0 / kb) + lxf
        z = rng.gen.standard_normal(n)
    elif representation in ("student_t", "student_t_phi"):
        if representation == "student_t":
            lscale = math.log(2.0 / kb) + _lg(rng, a, n) - math.log(a)
        else:
            lscale = math.log(2.0 / (a * kb)) + _lg(rng, a, n)
        lw = _lg(rng, c, n) - math.log(c)
        lv = lscale - lw
        z = rng.gen.standard_normal(n)
    elif representation == "gamma_ratio":
        lv = math.log(phi) + _lg(rng, a, n) - _lg(rng, c, n)
        z = rng.gen.standard_normal(n)
    elif representation == "beta_prime":
        # Y / (1 - Y) with Y ~ Beta(a, c) from numpy's own beta generator
        y = rng.gen.beta(a, c, size=n)
        with np.errstate(divide="ignore"):
            lv = math.log(phi) + np.log(y) - np.log1p(-y)
        z = rng.gen.standard_normal(n)
    else:
        raise UnsupportedCaseError(
            f"unknown representation {representation!r}; choose from {REPRESENTATIONS}"
        )
    with np.errstate(over="ignore"):
        return z * np.exp(0.5 * lv)


def sample_profile(rng: RngStream, prior: TripleGammaPrior, n: int) -> np.ndarray:
    """Draw ``n`` shrinkage factors kappa = 1 / (1 + xi^2) under ``prior``."""
    a, c, kb = prior.a, prior.c, prior.kappa_B2
    if math.isinf(c) and math.isinf(a):
        return np.full(n, 1.0 / (1.0 + 2.0 / kb))
    if math.isinf(c):
        lxi = _lg(rng, a, n) - math.log(a * kb / 2.0)
    elif math.isinf(a):
        lxi = math.log(2.0 * c / kb) - _lg(rng, c, n)
    else:
        lxi = math.log(prior.phi) + _lg(rng, a, n) - _lg(rng, c, n)
    return sc.expit(-lxi)


def profile_bands(prior: TripleGammaPrior, kappa, kappa_B2_draws, quantiles=(0.025, 0.25, 0.5, 0.75, 0.975)):
    """Quantiles over ``kappa_B2_draws`` of the profile density at each ``kappa``.

    Returns an array of shape ``(len(kappa), len(quantiles))``.
    """
    k = np.asarray(kappa, dtype=float)
    dens = np.empty((len(kappa_B2_draws), k.size))
    for i, kb in enumerate(kappa_B2_draws):
        p = TripleGammaPrior(prior.a, prior.c, float(kb), tag=prior.tag, role=prior.role)
        with np.errstate(over="ignore", under="ignore"):
            dens[i] = shrinkage_profile_density(p, k)
    return np.quantile(dens, quantiles, axis=0).T
