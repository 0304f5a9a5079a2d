"""Conditionally Gaussian pieces of the non-centered TVP regression.

    y_t = x_t beta + sum_j x_tj sqrt(theta_j) bt_jt + eps_t,  eps_t ~ N(0, sigma2_t)
    bt_t = bt_{t-1} + w_t,  w_t ~ N(0, I_d),  bt_0 ~ N(0, I_d)

The standardized path ``bt_{0:T}`` is drawn jointly.  The default sampler
factors the block-tridiagonal posterior precision with a banded Cholesky
decomposition; ``method="ffbs"`` runs a covariance-form Kalman filter with
backward sampling instead.  Both give exact draws from the same law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DataError, DomainError, SamplerError
from .rand_dist import GigParams, RngStream, sample_gig

__all__ = [
    "TvpData",
    "StatePath",
    "LevelsAndScales",
    "ffbs_states",
    "forward_filter",
    "state_precision",
    "draw_levels_scales",
    "asis_interweave",
    "VAR_FLOOR",
]

# smallest variance handed to a Gaussian draw or GIG argument
VAR_FLOOR = 1e-300


@dataclass
class TvpData:
    """Response ``y`` (T,) and regressors ``X`` (T, d)."""

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        self.y = np.ascontiguousarray(self.y, dtype=float).reshape(-1)
        self.X = np.ascontiguousarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        if self.X.ndim != 2 or self.X.shape[0] != self.y.size:
            raise DataError(f"X must be (T, d) with T = len(y) = {self.y.size}")
        if self.y.size < 2:
            raise DataError("need at least two observations")
        if self.X.shape[1] < 1:
            raise DataError("need at least one regressor")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise DataError("data contain missing or non-finite values")

    @property
    def T(self) -> int:
        return self.y.size

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass
class StatePath:
    """Standardized states ``beta_tilde`` of shape (T + 1, d); row 0 is t = 0."""

    beta_tilde: np.ndarray


@dataclass
class LevelsAndScales:
    """Levels ``beta`` and signed scales ``sqrt_theta`` (both length d)."""

    beta: np.ndarray
    sqrt_theta: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        return self.sqrt_theta**2


def _as_sigma2(sigma2, T):
    s = np.broadcast_to(np.asarray(sigma2, dtype=float), (T,))
    if np.any(~(s > 0)) or not np.all(np.isfinite(s)):
        raise DomainError("observation variances must be finite and positive")
    return s


def state_precision(data: TvpData, levels: LevelsAndScales, sigma2):
    """Upper banded posterior precision and linear term of ``bt_{0:T}``.

    States are stacked time-major, so the precision has bandwidth ``d``.
    Returns ``(ab, b)`` with ``ab`` in :func:`scipy.linalg.cholesky_banded`
    upper form.
    """
    T, d = data.T, data.d
    n = (T + 1) * d
    w = 1.0 / _as_sigma2(sigma2, T)
    F = data.X * levels.sqrt_theta[None, :]
    r = data.y - data.X @ levels.beta
    ab = np.zeros((d + 1, n))
    diag = np.full(n, 2.0)
    diag[T * d:] = 1.0
    ab[d] = diag
    ab[0, d:] = -1.0
    # within-block likelihood terms F_tp F_tq w_t for p <= q
    for p in range(d):
        for q in range(p, d):
            ab[d - (q - p), d + q::d] += F[:, p] * F[:, q] * w
    b = np.zeros(n)
    b[d:] = (F * (w * r)[:, None]).ravel()
    return ab, b


# relative diagonal loadings tried when a factorization fails in floating
# point; only reached when signal-to-noise ratios exceed double precision
_JITTERS = (1e-14, 1e-12, 1e-10, 1e-8)


def _cholesky_banded_guarded(ab, step):
    try:
        return linalg.cholesky_banded(ab, lower=False, check_finite=False)
    except linalg.LinAlgError as exc:
        err = exc
    for eps in _JITTERS:
        ab2 = ab.copy()
        ab2[-1] += eps * np.abs(ab[-1])
        try:
            return linalg.cholesky_banded(ab2, lower=False, check_finite=False)
        except linalg.LinAlgError:
            continue
    raise SamplerError(f"precision not positive definite: {err}", step=step) from None


def _banded_draw(rng, ab, b, d):
    cb = _cholesky_banded_guarded(ab, "states")
    mean = linalg.cho_solve_banded((cb, False), b, check_finite=False)
    z = rng.gen.standard_normal(b.size)
    return mean + linalg.solve_banded((0, d), cb, z, check_finite=False)


def forward_filter(data: TvpData, levels: LevelsAndScales, sigma2):
    """Covariance-form Kalman filter for ``bt_{0:T}``.

    Returns filtered means (T + 1, d) and covariances (T + 1, d, d); index 0
    holds the prior N(0, I).
    """
    T, d = data.T, data.d
    s2 = _as_sigma2(sigma2, T)
    F = data.X * levels.sqrt_theta[None, :]
    r = data.y - data.X @ levels.beta
    m = np.zeros((T + 1, d))
    P = np.zeros((T + 1, d, d))
    P[0] = np.eye(d)
    eye = np.eye(d)
    for t in range(1, T + 1):
        R = P[t - 1] + eye
        f_t = F[t - 1]
        RF = R @ f_t
        q = float(f_t @ RF) + s2[t - 1]
        if not q > 0:
            q += 1e-10 * (np.trace(R) / d)
        if not q > 0:
            raise SamplerError("non-positive innovation variance", step="states", time_index=t)
        K = RF / q
        m[t] = m[t - 1] + K * (r[t - 1] - f_t @ m[t - 1])
        Pt = R - np.outer(K, RF)
        P[t] = 0.5 * (Pt + Pt.T)
    return m, P


def _ffbs_draw(rng, data, levels, sigma2):
    T, d = data.T, data.d
    m, P = forward_filter(data, levels, sigma2)
    out = np.empty((T + 1, d))
    eye = np.eye(d)

    def mvn(mean, cov, t):
        try:
            L = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            jit = 1e-10 * max(np.trace(cov) / d, 1e-300)
            try:
                L = np.linalg.cholesky(cov + jit * eye)
            except np.linalg.LinAlgError:
                raise SamplerError("state covariance not positive definite",
                                   step="states", time_index=t) from None
        return mean + L @ rng.gen.standard_normal(d)

    out[T] = mvn(m[T], P[T], T)
    for t in range(T - 1, -1, -1):
        G = np.linalg.solve(P[t] + eye, P[t]).T
        mean = m[t] + G @ (out[t + 1] - m[t])
        cov = P[t] - G @ P[t]
        out[t] = mvn(mean, 0.5 * (cov + cov.T), t)
    return out


def ffbs_states(rng: RngStream, data: TvpData, levels: LevelsAndScales, sigma2, method: str = "banded") -> StatePath:
    """Exact joint draw of ``bt_{0:T}`` given levels, scales and variances.

    Parameters
    ----------
    method : {"banded", "ffbs"}
        ``"banded"`` factors the sparse posterior precision directly;
        ``"ffbs"`` runs forward filtering and backward sampling.
    """
    if levels.beta.size != data.d or levels.sqrt_theta.size != data.d:
        raise DomainError("levels and data disagree on d")
    if method == "banded":
        ab, b = state_precision(data, levels, sigma2)
        path = _banded_draw(rng, ab, b, data.d).reshape(data.T + 1, data.d)
    elif method == "ffbs":
        path = _ffbs_draw(rng, data, levels, sigma2)
    else:
        raise DomainError(f"unknown state sampler {method!r}")
    return StatePath(path)


def _cholesky_guarded(prec, step):
    try:
        return np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        pass
    dg = np.abs(np.diag(prec))
    for eps in _JITTERS:
        try:
            return np.linalg.cholesky(prec + np.diag(eps * dg))
        except np.linalg.LinAlgError:
            continue
    raise SamplerError("posterior precision not positive definite", step=step)


def _gauss_regression_draw(rng, Z, ywt, w, prior_var, step):
    # posterior of coefficients in y ~ N(Z g, 1/w) with g ~ N(0, diag(prior_var))
    prec = (Z * w[:, None]).T @ Z
    prec[np.diag_indices_from(prec)] += 1.0 / np.maximum(prior_var, VAR_FLOOR)
    rhs = Z.T @ ywt
    L = _cholesky_guarded(prec, step)
    mean = linalg.cho_solve((L, True), rhs, check_finite=False)
    z = rng.gen.standard_normal(prec.shape[0])
    return mean + linalg.solve_triangular(L.T, z, lower=False, check_finite=False)


def draw_levels_scales(rng: RngStream, data: TvpData, states: StatePath, sigma2, tau2, xi2) -> LevelsAndScales:
    """Joint Gaussian draw of ``(beta, sqrt_theta)`` given the standardized path.

    The regressor row at time t is ``(x_t, x_t * bt_t)`` and the priors are
    beta_j ~ N(0, tau2_j), sqrt_theta_j ~ N(0, xi2_j).
    """
    T, d = data.T, data.d
    w = 1.0 / _as_sigma2(sigma2, T)
    Z = np.hstack([data.X, data.X * states.beta_tilde[1:]])
    pv = np.concatenate([np.broadcast_to(tau2, (d,)), np.broadcast_to(xi2, (d,))])
    g = _gauss_regression_draw(rng, Z, data.y * w, w, pv, "levels")
    return LevelsAndScales(g[:d].copy(), g[d:].copy())


def asis_interweave(rng: RngStream, data: TvpData, states: StatePath, levels: LevelsAndScales, sigma2, tau2, xi2):
    """One centered-parametrization sweep for ``(theta_j, beta_j)``.

    Moves to ``beta_jt = beta_j + sqrt_theta_j bt_jt``, draws
    theta_j ~ GIG(1/2 - (T+1)/2, 1/xi2_j, S_j) with
    S_j = sum_t (beta_jt - beta_j,t-1)^2 + (beta_j0 - beta_j)^2, then beta_j from
    its Gaussian conditional given beta_j0, and maps back with a random sign
    on sqrt(theta_j).  ``sigma2`` is unused: the centered conditionals do not
    involve the observation equation.
    """
    T, d = data.T, data.d
    bt = states.beta_tilde
    xi2 = np.broadcast_to(np.asarray(xi2, dtype=float), (d,))
    tau2 = np.broadcast_to(np.asarray(tau2, dtype=float), (d,))
    new_bt = np.empty_like(bt)
    beta = levels.beta.copy()
    st = levels.sqrt_theta.copy()
    p = 0.5 - 0.5 * (T + 1)
    signs = rng.gen.random(d) < 0.5
    for j in range(d):
        # deviations from the current level keep precision when theta_j is tiny
        dev = st[j] * bt[:, j]
        S = float(np.sum(np.diff(dev) ** 2) + dev[0] ** 2)
        theta = sample_gig(rng, GigParams(p, 1.0 / max(xi2[j], VAR_FLOOR), max(S, VAR_FLOOR)))
        theta = max(theta, VAR_FLOOR)
        v = 1.0 / (1.0 / max(tau2[j], VAR_FLOOR) + 1.0 / theta)
        b0 = beta[j] + dev[0]
        b_new = v * b0 / theta + math.sqrt(v) * rng.gen.standard_normal()
        s_new = math.sqrt(theta) * (-1.0 if signs[j] else 1.0)
        new_bt[:, j] = (dev + (beta[j] - b_new)) / s_new
        beta[j] = b_new
        st[j] = s_new
    return StatePath(new_bt), LevelsAndScales(beta, st)
