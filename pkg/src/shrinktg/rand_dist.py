"""Random variate generation and a few densities used by the samplers.

All samplers draw from an :class:`RngStream`, a thin wrapper around numpy's
counter-based Philox bit generator keyed by ``(seed, stream_id)``.  Gamma
draws use the shape-boost trick for shapes below one and are produced on
the log scale so that shapes near zero do not underflow to exactly 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .errors import DomainError

__all__ = [
    "RngStream",
    "GigParams",
    "TINY",
    "sample_gamma",
    "sample_log_gamma",
    "sample_gig",
    "sample_f",
    "sample_beta_prime",
    "sample_normal",
    "sample_student_t",
    "sample_uniform",
    "sample_inverse_gamma",
    "sample_bernoulli",
    "sample_exponential",
    "sample_beta",
    "density_tpb",
    "log_density_tpb",
    "cdf_beta",
    "log_density_gig",
]

TINY = np.finfo(float).tiny
_LOG_TINY = math.log(TINY)
_LOG_HUGE = math.log(np.finfo(float).max)


class RngStream:
    """Replayable random stream keyed by ``(seed, stream_id)``.

    Distinct ``stream_id`` values give independent Philox streams spawned
    from the same seed sequence.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise DomainError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.Philox(ss))

    def spawn(self, stream_id: int) -> "RngStream":
        """Independent stream sharing this stream's seed."""
        return RngStream(self.seed, stream_id)

    def copy(self) -> "RngStream":
        other = RngStream(self.seed, self.stream_id)
        other.gen.bit_generator.state = self.gen.bit_generator.state
        return other

    @property
    def state(self) -> dict:
        return self.gen.bit_generator.state

    @state.setter
    def state(self, value: dict):
        self.gen.bit_generator.state = value

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def _positive(name, x):
    if isinstance(x, float):
        if not (x > 0 and x != math.inf):
            raise DomainError(f"{name} must be finite and positive")
        return
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainError(f"{name} must be finite and positive")


def sample_log_gamma(rng: RngStream, shape, size=None):
    """Log of a Gamma(shape, 1) draw, accurate for very small shapes."""
    _positive("shape", shape)
    g = rng.gen
    if isinstance(shape, float):
        if size is None:
            if shape >= 1.0:
                return math.log(max(g.standard_gamma(shape), TINY))
            x = g.standard_gamma(shape + 1.0)
            u = g.random()
            return math.log(x) + math.log(u) / shape if u > 0 else -math.inf
        if shape >= 1.0:
            return np.log(np.maximum(g.standard_gamma(shape, size=size), TINY))
        x = g.standard_gamma(shape + 1.0, size=size)
        u = g.random(size=size)
        with np.errstate(divide="ignore"):
            return np.log(np.maximum(x, TINY)) + np.log(u) / shape
    if np.ndim(shape) == 0 and size is None:
        shape = float(shape)
        if shape >= 1.0:
            return math.log(max(g.standard_gamma(shape), TINY))
        x = g.standard_gamma(shape + 1.0)
        u = g.random()
        return math.log(x) + math.log(u) / shape if u > 0 else -math.inf
    shape = np.asarray(shape, dtype=float)
    if size is None:
        size = shape.shape
    shape = np.broadcast_to(shape, size)
    small = shape < 1.0
    x = g.standard_gamma(np.where(small, shape + 1.0, shape), size=size)
    u = g.random(size=size)
    with np.errstate(divide="ignore"):
        out = np.log(np.maximum(x, TINY))
        out = np.where(small, out + np.log(u) / shape, out)
    return out


def sample_gamma(rng: RngStream, shape, rate=1.0, size=None):
    """Gamma draw with mean ``shape / rate``; result floored at ``TINY``."""
    _positive("rate", rate)
    if size is None and isinstance(shape, float) and isinstance(rate, float):
        lg = sample_log_gamma(rng, shape) - math.log(rate)
        return math.exp(min(max(lg, _LOG_TINY), _LOG_HUGE))
    lg = sample_log_gamma(rng, shape, size) - np.log(rate)
    out = np.exp(np.clip(lg, _LOG_TINY, _LOG_HUGE))
    return float(out) if np.ndim(out) == 0 else out


def sample_inverse_gamma(rng: RngStream, shape, scale=1.0, size=None):
    """Inverse-gamma draw with density proportional to x^(-shape-1) e^(-scale/x)."""
    _positive("scale", scale)
    lg = np.log(scale) - sample_log_gamma(rng, shape, size)
    out = np.exp(np.clip(lg, _LOG_TINY, _LOG_HUGE))
    return float(out) if np.ndim(out) == 0 else out


def sample_f(rng: RngStream, d1, d2, size=None):
    """F(d1, d2) draw as a ratio of scaled gamma variates."""
    _positive("d1", d1)
    _positive("d2", d2)
    lx = (
        sample_log_gamma(rng, np.multiply(d1, 0.5), size)
        - sample_log_gamma(rng, np.multiply(d2, 0.5), size)
        + np.log(d2) - np.log(d1)
    )
    out = np.exp(np.clip(lx, _LOG_TINY, _LOG_HUGE))
    return float(out) if np.ndim(out) == 0 else out


def sample_beta_prime(rng: RngStream, a, c, size=None):
    """Beta-prime draw: X / (1 + X) ~ Beta(a, c)."""
    _positive("a", a)
    _positive("c", c)
    lx = sample_log_gamma(rng, a, size) - sample_log_gamma(rng, c, size)
    out = np.exp(np.clip(lx, _LOG_TINY, _LOG_HUGE))
    return float(out) if np.ndim(out) == 0 else out


def sample_beta(rng: RngStream, a, b, size=None):
    _positive("a", a)
    _positive("b", b)
    la = sample_log_gamma(rng, a, size)
    lb = sample_log_gamma(rng, b, size)
    out = sc.expit(la - lb)
    return float(out) if np.ndim(out) == 0 else out


def sample_normal(rng: RngStream, mean=0.0, sd=1.0, size=None):
    out = mean + sd * rng.gen.standard_normal(size)
    return float(out) if np.ndim(out) == 0 else out


def sample_student_t(rng: RngStream, df, location=0.0, scale=1.0, size=None):
    """Location-scale Student-t draw as a normal / sqrt(gamma) mixture."""
    _positive("df", df)
    _positive("scale", scale)
    z = rng.gen.standard_normal(size)
    lw = sample_log_gamma(rng, np.multiply(df, 0.5), size) - np.log(np.multiply(df, 0.5))
    out = location + scale * z * np.exp(-0.5 * lw)
    return float(out) if np.ndim(out) == 0 else out


def sample_uniform(rng: RngStream, low=0.0, high=1.0, size=None):
    if not np.all(np.asarray(high) > np.asarray(low)):
        raise DomainError("sample_uniform requires high > low")
    out = low + (high - low) * rng.gen.random(size)
    return float(out) if np.ndim(out) == 0 else out


def sample_exponential(rng: RngStream, rate=1.0, size=None):
    _positive("rate", rate)
    out = rng.gen.standard_exponential(size) / rate
    return float(out) if np.ndim(out) == 0 else out


def sample_bernoulli(rng: RngStream, p, size=None):
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr >= 0)) or np.any(p_arr > 1):
        raise DomainError("sample_bernoulli requires p in [0, 1]")
    out = rng.gen.random(size) < p_arr
    return bool(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Generalized inverse Gaussian


@dataclass(frozen=True)
class GigParams:
    """GIG(p, a, b) with density proportional to y^(p-1) exp(-(a y + b / y) / 2)."""

    p: float
    a: float
    b: float

    def __post_init__(self):
        p, a, b = float(self.p), float(self.a), float(self.b)
        if not (math.isfinite(p) and math.isfinite(a) and math.isfinite(b)):
            raise DomainError(f"GIG parameters must be finite, got {self}")
        if a < 0 or b < 0:
            raise DomainError(f"GIG rates must be non-negative, got {self}")
        if a == 0 and b == 0:
            raise DomainError("GIG requires a > 0 or b > 0")
        if p >= 0 and a == 0:
            raise DomainError(f"GIG with p >= 0 requires a > 0, got {self}")
        if p <= 0 and b == 0:
            raise DomainError(f"GIG with p <= 0 requires b > 0, got {self}")


def log_density_gig(x, params: GigParams):
    """Normalized GIG log density."""
    p, a, b = params.p, params.a, params.b
    x = np.asarray(x, dtype=float)
    kern = (p - 1.0) * np.log(x) - 0.5 * (a * x + b / x)
    if b == 0:
        lognc = p * math.log(a / 2.0) - sc.gammaln(p)
    elif a == 0:
        lognc = -p * math.log(b / 2.0) - sc.gammaln(-p)
    else:
        from .special_fn import log_bessel_k

        om = math.sqrt(a * b)
        lognc = 0.5 * p * math.log(a / b) - math.log(2.0) - log_bessel_k(p, om)
    return kern + lognc


def _gig_mode(lam, omega):
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


def _rou_shift(u01, lam, omega):
    # ratio-of-uniforms with mode shift, for lam > 2 or omega > 3
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    fi = math.acos(max(-1.0, min(1.0, -q / (2.0 * math.sqrt(-(p**3) / 27.0)))))
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)
    while True:
        u = uminus + u01() * (uplus - uminus)
        v = u01()
        if v <= 0.0:
            continue
        x = u / v + xm
        if x <= 0.0:
            continue
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _rou_noshift(u01, lam, omega):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)
    while True:
        u = um * u01()
        v = u01()
        if u <= 0.0 or v <= 0.0:
            continue
        x = u / v
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _gig_small(u01, lam, omega):
    # rejection from a three-piece hat for 0 <= lam < 1 and small omega
    xm = _gig_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    k0 = math.exp((lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm))
    a0 = k0 * x0
    lam_zero = lam < 1e-12
    if x0 >= 2.0 / omega:
        k1 = 0.0
        a1 = 0.0
        k2 = x0 ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-omega * x0 / 2.0) / omega
    else:
        k1 = math.exp(-omega)
        if lam_zero:
            a1 = k1 * math.log(2.0 / (omega * omega))
        else:
            a1 = k1 / lam * ((2.0 / omega) ** lam - x0**lam)
        k2 = (2.0 / omega) ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-1.0) / omega
    total = a0 + a1 + a2
    cut = max(x0, 2.0 / omega)
    while True:
        v = total * u01()
        if v <= a0:
            x = x0 * v / a0
            hx = k0
        else:
            v -= a0
            if v <= a1:
                if lam_zero:
                    x = omega * math.exp(math.exp(omega) * v)
                    hx = k1 / x
                else:
                    x = (x0**lam + lam / k1 * v) ** (1.0 / lam)
                    hx = k1 * x ** (lam - 1.0)
            else:
                v -= a1
                arg = math.exp(-omega / 2.0 * cut) - omega / (2.0 * k2) * v
                if arg <= 0.0:
                    continue
                x = -2.0 / omega * math.log(arg)
                hx = k2 * math.exp(-omega / 2.0 * x)
        if x <= 0.0:
            continue
        u = u01() * hx
        if u <= 0.0:
            return x
        if math.log(u) <= (lam - 1.0) * math.log(x) - 0.5 * omega * (x + 1.0 / x):
            return x


def sample_gig(rng: RngStream, params: GigParams) -> float:
    """Draw from GIG(p, a, b).

    Uses the ratio-of-uniforms family of Hoermann and Leydold (2014) on the
    two-parameter form GIG(|p|, omega) with omega = sqrt(a b), then rescales
    by sqrt(b / a) and inverts when p < 0.  The boundary cases b = 0 and
    a = 0 reduce to gamma and inverse-gamma draws.
    """
    p, a, b = float(params.p), float(params.a), float(params.b)
    if b == 0.0:
        return sample_gamma(rng, p, a / 2.0)
    if a == 0.0:
        return sample_inverse_gamma(rng, -p, b / 2.0)
    lam = abs(p)
    omega = math.sqrt(a * b)
    alpha = math.sqrt(b / a)
    u01 = rng.gen.random
    if lam > 2.0 or omega > 3.0:
        x = _rou_shift(u01, lam, omega)
    elif lam >= 1.0 - 2.25 * omega * omega or omega > 0.2:
        x = _rou_noshift(u01, lam, omega)
    else:
        x = _gig_small(u01, lam, omega)
    out = alpha / x if p < 0 else alpha * x
    return min(max(out, TINY), np.finfo(float).max)


# ---------------------------------------------------------------------------
# Densities


def log_density_tpb(kappa, a: float, c: float, phi: float):
    """Log density of the three-parameter beta law TPB(a, c, phi) on (0, 1)."""
    _positive("a", a)
    _positive("c", c)
    _positive("phi", phi)
    k = np.asarray(kappa, dtype=float)
    if np.any(~(k > 0)) or np.any(~(k < 1)):
        raise DomainError("TPB density requires 0 < kappa < 1")
    out = (
        c * math.log(phi)
        + (c - 1.0) * np.log(k)
        + (a - 1.0) * np.log1p(-k)
        - (a + c) * np.log1p((phi - 1.0) * k)
        - sc.betaln(a, c)
    )
    return float(out) if np.ndim(out) == 0 else out


def density_tpb(kappa, a: float, c: float, phi: float):
    """TPB density phi^c k^(c-1) (1-k)^(a-1) (1 + (phi-1) k)^-(a+c) / B(a, c)."""
    return np.exp(log_density_tpb(kappa, a, c, phi))


def cdf_beta(x, a: float, b: float):
    """Regularized incomplete beta function I_x(a, b)."""
    _positive("a", a)
    _positive("b", b)
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa >= 0)) or np.any(xa > 1):
        raise DomainError("cdf_beta requires x in [0, 1]")
    out = sc.betainc(a, b, xa)
    return float(out) if np.ndim(out) == 0 else out
