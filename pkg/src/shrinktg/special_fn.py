"""Scalar special functions evaluated on the log scale.

``log_gamma``, ``digamma`` and ``log_beta`` are thin, validated wrappers
around :mod:`scipy.special`.  ``log_bessel_k`` and ``log_hyper_u`` need to
stay finite where the functions themselves overflow (tiny arguments, large
orders, negative ``b``), so both fall back to a log-space composite
Gauss-Legendre integrator over an integral representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc
from scipy.optimize import brentq

from .errors import DomainError, NumericalAccuracyError

__all__ = [
    "QuadratureRule",
    "log_gamma",
    "digamma",
    "log_beta",
    "log_bessel_k",
    "log_hyper_u",
    "log_integrate",
]

_GL_ORDER = 16
_MAX_NODES = 2**15
_REL_TOL = 1e-12
# log-integrand drop beyond which a region is discarded (e^-60 ~ 1e-26)
_LOG_CUTOFF = 60.0


@dataclass(frozen=True)
class QuadratureRule:
    """Immutable set of quadrature nodes and positive weights.

    ``domain`` is ``"interval"`` for rules on [-1, 1] and ``"half-line"``
    for rules on [0, inf).
    """

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    domain: str = "interval"

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise DomainError("nodes and weights must be 1-d arrays of equal length")
        if np.any(weights <= 0):
            raise DomainError("quadrature weights must be strictly positive")
        if self.domain not in ("interval", "half-line"):
            raise DomainError(f"unknown quadrature domain {self.domain!r}")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    @classmethod
    def gauss_legendre(cls, order: int = _GL_ORDER) -> "QuadratureRule":
        x, w = np.polynomial.legendre.leggauss(order)
        return cls(x, w, "interval")

    @classmethod
    def half_line(cls, n_panels: int = 8, order: int = _GL_ORDER) -> "QuadratureRule":
        """Composite Gauss-Legendre rule on [0, inf) via t = u / (1 - u)."""
        x, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(0.0, 1.0, n_panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wu = (half[:, None] * w[None, :]).ravel()
        t = u / (1.0 - u)
        wt = wu / (1.0 - u) ** 2
        return cls(t, wt, "half-line")

    def integrate(self, f) -> float:
        return float(np.sum(self.weights * f(self.nodes)))

    def log_integrate(self, log_f) -> float:
        return float(sc.logsumexp(log_f(self.nodes) + np.log(self.weights)))


_GL = QuadratureRule.gauss_legendre()


def _panel_log_sum(log_f, lo: float, hi: float, n_panels: int) -> float:
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * _GL.nodes[None, :]).ravel()
    logw = np.log((half[:, None] * _GL.weights[None, :]).ravel())
    return float(sc.logsumexp(log_f(s) + logw))


def log_integrate(log_f, lo: float, hi: float, n_panels: int = 16) -> float:
    """Log of the integral of ``exp(log_f)`` over [lo, hi].

    Composite 16-point Gauss-Legendre with panel doubling until two
    successive estimates agree to 1e-12 (relative).  ``log_f`` must accept
    an array.
    """
    prev = _panel_log_sum(log_f, lo, hi, n_panels)
    while n_panels * _GL_ORDER * 2 <= _MAX_NODES:
        n_panels *= 2
        cur = _panel_log_sum(log_f, lo, hi, n_panels)
        if abs(cur - prev) <= _REL_TOL or (np.isneginf(cur) and np.isneginf(prev)):
            return cur
        prev = cur
    raise NumericalAccuracyError(
        f"quadrature did not converge on [{lo}, {hi}] with {_MAX_NODES} nodes"
    )


def _check_positive(name, x):
    if not (isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x) and x > 0):
        raise DomainError(f"{name} must be a finite positive number, got {x!r}")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    _check_positive("x", x)
    return float(sc.gammaln(x))


def digamma(x: float) -> float:
    _check_positive("x", x)
    return float(sc.psi(x))


def log_beta(a: float, b: float) -> float:
    """ln B(a, b) for a, b > 0."""
    _check_positive("a", a)
    _check_positive("b", b)
    return float(sc.betaln(a, b))


def _log_bessel_k_quad(nu: float, x: float) -> float:
    # K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt, nu >= 0
    def log_f(t):
        t = np.asarray(t, dtype=float)
        nt = nu * t
        return -x * np.cosh(t) + nt + np.log1p(np.exp(-2.0 * nt)) - math.log(2.0)

    # mode of the integrand: x sinh t = nu tanh(nu t)
    if nu == 0.0:
        t_mode = 0.0
    else:
        def dlog(t):
            return -x * math.sinh(t) + nu * math.tanh(nu * t)

        t_big = math.asinh(nu / x) + 1.0
        t_mode = brentq(dlog, 1e-300, t_big) if dlog(1e-300) > 0 else 0.0
    g_max = float(log_f(np.array([t_mode]))[0])
    t_hi = max(t_mode, 1.0)
    while float(log_f(np.array([t_hi]))[0]) > g_max - _LOG_CUTOFF:
        t_hi += max(1.0, 0.25 * t_hi)
    return log_integrate(log_f, 0.0, t_hi)


_HANKEL_X = 1e8


def _log_bessel_k_hankel(nu, x):
    # large-argument expansion; the amos routine returns nan beyond ~1e9
    mu = 4.0 * np.square(nu)
    t1 = (mu - 1.0) / (8.0 * x)
    t2 = t1 * (mu - 9.0) / (16.0 * x)
    t3 = t2 * (mu - 25.0) / (24.0 * x)
    return 0.5 * np.log(np.pi / (2.0 * x)) - x + np.log1p(t1 + t2 + t3)


def _log_bessel_k_scalar(nu: float, x: float) -> float:
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"log_bessel_k requires x > 0, got {x!r}")
    if not math.isfinite(nu):
        raise DomainError(f"log_bessel_k requires a finite order, got {nu!r}")
    nu = abs(nu)
    if x > _HANKEL_X and x > nu * nu:
        return float(_log_bessel_k_hankel(nu, x))
    kx = sc.kve(nu, x)
    if math.isfinite(kx) and kx > 0.0:
        return math.log(kx) - x
    return _log_bessel_k_quad(nu, x)


def log_bessel_k(nu, x):
    """ln K_nu(x), the modified Bessel function of the second kind.

    Uses the exponentially scaled Amos routine where it is representable and
    a log-space integral of ``exp(-x cosh t) cosh(nu t)`` where ``K_nu(x)``
    overflows (small ``x`` with large ``|nu|``).  Accepts scalars or arrays.
    """
    if np.ndim(nu) == 0 and np.ndim(x) == 0:
        return _log_bessel_k_scalar(float(nu), float(x))
    nu_b, x_b = np.broadcast_arrays(np.asarray(nu, float), np.asarray(x, float))
    if np.any(~(x_b > 0)) or np.any(~np.isfinite(x_b)):
        raise DomainError("log_bessel_k requires x > 0")
    anu = np.abs(nu_b)
    with np.errstate(divide="ignore", over="ignore"):
        kx = sc.kve(anu, x_b)
        out = np.log(kx) - x_b
    big = (x_b > _HANKEL_X) & (x_b > anu * anu)
    if np.any(big):
        out[big] = _log_bessel_k_hankel(anu[big], x_b[big])
    bad = ~np.isfinite(out)
    for idx in zip(*np.nonzero(bad)):
        out[idx] = _log_bessel_k_quad(float(anu[idx]), float(x_b[idx]))
    return out


def _log_hyper_u_scalar(a: float, b: float, z: float) -> float:
    if not (math.isfinite(a) and a > 0):
        raise DomainError(f"log_hyper_u requires a > 0, got {a!r}")
    if not math.isfinite(b):
        raise DomainError(f"log_hyper_u requires finite b, got {b!r}")
    if not (math.isfinite(z) and z > 0):
        raise DomainError(f"log_hyper_u requires z > 0, got {z!r}")
    # t = e^s:  U = 1/Gamma(a) int exp(a s + (b-a-1) log(1+e^s) - z e^s) ds
    k = b - a - 1.0

    def log_f(s):
        s = np.asarray(s, dtype=float)
        return a * s + k * np.logaddexp(0.0, s) - z * np.exp(s)

    def g(s):
        return a * s + k * float(np.logaddexp(0.0, s)) - z * math.exp(s)

    def dg(s):
        return a + k * sc.expit(s) - z * math.exp(s)

    s_lo = math.log(1e-15 / (abs(k) + z + 1.0))
    s_big = math.log((a + abs(k) + 1.0) / z) + 1.0
    s_big = max(s_big, s_lo + 1.0)
    s_mode = brentq(dg, s_lo, s_big) if dg(s_lo) > 0 else s_lo
    g_max = g(s_mode)
    s_hi = s_big
    step = 1.0
    while g(s_hi) > g_max - _LOG_CUTOFF:
        s_hi += step
        step *= 1.5
    body = log_integrate(log_f, s_lo, s_hi)
    # left tail: integrand ~ exp(a s) for s < s_lo, up to a relative O(1e-15)
    tail = g(s_lo) - math.log(a)
    return float(np.logaddexp(body, tail)) - float(sc.gammaln(a))


def log_hyper_u(a, b, z):
    """ln U(a, b, z), Tricomi's confluent hypergeometric function.

    Evaluated from ``U = Gamma(a)^-1 int_0^inf e^{-zt} t^{a-1} (1+t)^{b-a-1} dt``
    after the substitution ``t = e^s``, so that ``b < 0`` and tiny ``z`` do not
    need series recurrences.  Requires ``a > 0`` and ``z > 0``.
    """
    if np.ndim(a) == 0 and np.ndim(b) == 0 and np.ndim(z) == 0:
        return _log_hyper_u_scalar(float(a), float(b), float(z))
    a_b, b_b, z_b = np.broadcast_arrays(
        np.asarray(a, float), np.asarray(b, float), np.asarray(z, float)
    )
    out = np.empty(a_b.shape)
    for idx in np.ndindex(a_b.shape):
        out[idx] = _log_hyper_u_scalar(float(a_b[idx]), float(b_b[idx]), float(z_b[idx]))
    return out
