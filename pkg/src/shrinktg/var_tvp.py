"""Equation-by-equation sampler for a TVP-VAR with a Cholesky-type covariance.

    y_t = (I_m kron X_t) beta_t + eps_t,   eps_t = A_t eta_t,   eta_it ~ N(0, d_it)

with X_t = (y_{t-1}', ..., y_{t-p}', 1) and A_t unit lower triangular, so
that row i reads

    y_it = X_t beta_t^i + sum_{j<i} a_ij,t eta_jt + eta_it.

Each row is two TVP regressions sharing one error: block "beta" on X_t and,
for i > 1, block "a" on the residuals eta_1t, ..., eta_{i-1,t}.  Every block
runs one sweep of :func:`shrinktg.gibbs_tvp.sweep` with its own triple gamma
shrinkage sides.

``eta_i`` also enters rows k > i as a regressor.  With ``scheme="exact"``
(default) that dependence is folded into a Gaussian pseudo-likelihood for
``eta_i``: writing eta_k = r_k + G_k eta_i for k > i,

    P_t = 1/d_it + sum_{k>i} G_kt^2 / d_kt,   mu_t = -(sum_{k>i} G_kt r_kt / d_kt) / P_t,

and the block regresses (response - mu_t) with variance 1/P_t.  For the last
row this is the plain likelihood.  ``scheme="literal"`` ignores the later
rows and conditions on row i alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .drawstore import DrawStore, config_hash
from .errors import DataError, DomainError, SamplerError, ShrinkTGError
from .gibbs_tvp import (
    GibbsConfig,
    TvpModelState,
    _new_tuners,
    _record_values,
    _shapes,
    fitted,
    initial_state,
    prior_batch,
    sweep,
)
from .rand_dist import RngStream
from .ssm import TvpData

__all__ = [
    "VarData",
    "VarConfig",
    "VarEquationState",
    "VarModelState",
    "lag_matrix",
    "build_equation_a",
    "build_equation_b",
    "compute_eta",
    "pseudo_likelihood",
    "initial_var_state",
    "var_sweep",
    "run_var_chain",
    "prior_var_state",
    "prior_var_batch",
    "VarPriorBatch",
    "simulate_var_y",
    "simulate_var_y_batch",
    "covariance_path",
    "SCHEMES",
]

SCHEMES = ("exact", "literal")


def lag_matrix(Y: np.ndarray, p: int) -> np.ndarray:
    """Rows (y_{t-1}', ..., y_{t-p}', 1) for t = p+1, ..., T."""
    T = Y.shape[0]
    cols = [Y[p - l: T - l] for l in range(1, p + 1)]
    return np.hstack(cols + [np.ones((T - p, 1))])


@dataclass
class VarData:
    """Endogenous series ``Y`` (T, m) and lag order ``p``.

    The first ``p`` rows condition the likelihood; the effective sample is
    rows p, ..., T-1 (zero-based).
    """

    Y: np.ndarray
    p: int = 1

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2:
            raise DataError("Y must be a (T, m) matrix")
        self.Y = np.ascontiguousarray(Y)
        self.p = int(self.p)
        if self.p < 1:
            raise DataError("lag order p must be >= 1")
        if self.Y.shape[0] <= self.p + 1:
            raise DataError(f"need more than p + 1 = {self.p + 1} rows, got {self.Y.shape[0]}")
        if not np.all(np.isfinite(self.Y)):
            raise DataError("Y contains missing or non-finite values")

    @property
    def T(self) -> int:
        return self.Y.shape[0]

    @property
    def m(self) -> int:
        return self.Y.shape[1]

    @property
    def n_eff(self) -> int:
        return self.T - self.p

    @cached_property
    def X(self) -> np.ndarray:
        return lag_matrix(self.Y, self.p)

    @cached_property
    def Y_eff(self) -> np.ndarray:
        return self.Y[self.p:]

    @property
    def d_beta(self) -> int:
        return self.m * self.p + 1


@dataclass
class VarConfig:
    """Sampler settings shared by every block plus the row-coupling scheme."""

    gibbs: GibbsConfig = field(default_factory=lambda: GibbsConfig(sv_enabled=True))
    scheme: str = "exact"

    def problems(self) -> list:
        out = list(self.gibbs.problems())
        if self.scheme not in SCHEMES:
            out.append(f"scheme must be one of {SCHEMES}")
        return out

    def validate(self) -> "VarConfig":
        from .errors import ConfigError

        p = self.problems()
        if p:
            raise ConfigError(p)
        return self


@dataclass
class VarEquationState:
    """Row i: the beta block, the a block (None for row 1).

    The observation block (SV or constant variance) lives on the block that
    updates it last in a sweep: ``beta`` for row 1, ``a`` otherwise.
    """

    beta: TvpModelState
    a: TvpModelState | None = None

    @property
    def owner(self) -> TvpModelState:
        return self.a if self.a is not None else self.beta

    def variances(self, n: int) -> np.ndarray:
        return self.owner.obs_variance(n)


@dataclass
class VarModelState:
    equations: list
    eta: np.ndarray

    @property
    def m(self) -> int:
        return len(self.equations)


# ---------------------------------------------------------------------------
# Row construction


def _a_paths(state: VarModelState, i: int, n: int) -> np.ndarray:
    """Time-varying a_ij,t for j < i as an (n, i-1) array; i is 1-based."""
    blk = state.equations[i - 1].a
    if blk is None:
        return np.zeros((n, 0))
    lv = blk.levels
    return lv.beta[None, :] + lv.sqrt_theta[None, :] * blk.states.beta_tilde[1:]


def _beta_fit(data: VarData, state: VarModelState, i: int) -> np.ndarray:
    blk = state.equations[i - 1].beta
    return fitted(TvpData(np.zeros(data.n_eff), data.X), blk)


def build_equation_a(i: int, data: VarData, A_draws, eta) -> TvpData:
    """Row i's beta block: response y_i - sum_{j<i} a_ij,t eta_jt on X_t."""
    if not 1 <= i <= data.m:
        raise DomainError(f"equation index must lie in 1..{data.m}, got {i}")
    n = data.n_eff
    A = np.asarray(A_draws, dtype=float).reshape(n, -1) if i > 1 else np.zeros((n, 0))
    eta = np.asarray(eta, dtype=float)
    if A.shape != (n, i - 1) or eta.shape[0] != n or eta.shape[1] < i - 1:
        raise DataError("a-paths and residuals do not match the equation dimensions")
    y = data.Y_eff[:, i - 1] - np.sum(A * eta[:, : i - 1], axis=1)
    return TvpData(y, data.X)


def build_equation_b(i: int, data: VarData, beta_fit, eta) -> TvpData:
    """Row i's a block: response y_i - X_t beta_t^i on eta_1t, ..., eta_{i-1,t}.

    ``beta_fit`` is the fitted path X_t beta_t^i of length n_eff.
    """
    if i <= 1:
        raise DomainError("the a block exists only for rows i > 1")
    if i > data.m:
        raise DomainError(f"equation index must lie in 2..{data.m}, got {i}")
    n = data.n_eff
    beta_fit = np.asarray(beta_fit, dtype=float).reshape(-1)
    eta = np.asarray(eta, dtype=float)
    if beta_fit.size != n or eta.shape[0] != n:
        raise DataError("fitted path and residuals must have n_eff rows")
    return TvpData(data.Y_eff[:, i - 1] - beta_fit, eta[:, : i - 1])


def compute_eta(data: VarData, state: VarModelState, start: int = 1) -> np.ndarray:
    """Recompute residuals eta_i for rows i >= start (1-based) in place."""
    n = data.n_eff
    for i in range(start, data.m + 1):
        eps = data.Y_eff[:, i - 1] - _beta_fit(data, state, i)
        A = _a_paths(state, i, n)
        state.eta[:, i - 1] = eps - np.sum(A * state.eta[:, : i - 1], axis=1)
    return state.eta


def pseudo_likelihood(data: VarData, state: VarModelState, i: int):
    """Offset ``mu`` and variance ``1 / P`` of the Gaussian factor in eta_i.

    Returns ``(mu, var)``; for the last row ``mu = 0`` and ``var = d_i``.
    """
    n, m = data.n_eff, data.m
    d = [state.equations[k].variances(n) for k in range(m)]
    if i == m:
        return np.zeros(n), d[i - 1]
    eta = state.eta
    # G_k = d eta_k / d eta_i through the recursion, G_i = 1
    G = np.zeros((n, m))
    G[:, i - 1] = 1.0
    P = 1.0 / d[i - 1]
    lin = np.zeros(n)
    for k in range(i + 1, m + 1):
        A = _a_paths(state, k, n)
        G[:, k - 1] = -np.sum(A[:, i - 1: k - 1] * G[:, i - 1: k - 1], axis=1)
        r = eta[:, k - 1] - G[:, k - 1] * eta[:, i - 1]
        P = P + G[:, k - 1] ** 2 / d[k - 1]
        lin = lin + G[:, k - 1] * r / d[k - 1]
    return -lin / P, 1.0 / P


# ---------------------------------------------------------------------------
# Sampler


def _resolve(cfg: GibbsConfig, y) -> GibbsConfig:
    if cfg.sigma2_C0 is None and not cfg.sv_enabled:
        return replace(cfg, sigma2_C0=1.5 * max(float(np.var(y)), 1e-12))
    return cfg


def initial_var_state(data: VarData, config: VarConfig) -> VarModelState:
    n, m = data.n_eff, data.m
    eqs = []
    for i in range(1, m + 1):
        y = data.Y_eff[:, i - 1]
        cfg = _resolve(config.gibbs, y)
        beta = initial_state(TvpData(y, data.X), cfg)
        a = None
        if i > 1:
            a = initial_state(TvpData(y, np.zeros((n, i - 1)) + 1.0), cfg)
            a.states.beta_tilde[:] = 0.0
            beta.sv = None
        eqs.append(VarEquationState(beta, a))
    state = VarModelState(eqs, np.zeros((n, m)))
    compute_eta(data, state)
    return state


def var_sweep(rng: RngStream, state: VarModelState, data: VarData, config: VarConfig,
              tuners=None, adapt: bool = False, cfgs=None, trace: list | None = None) -> VarModelState:
    """One pass over rows 1..m: beta block, then a block, then eta refresh."""
    n, m = data.n_eff, data.m
    X = data.X
    cfgs = cfgs or [_resolve(config.gibbs, data.Y_eff[:, i]) for i in range(m)]
    for i in range(1, m + 1):
        eq = state.equations[i - 1]
        cfg = cfgs[i - 1]
        if config.scheme == "exact":
            mu, pvar = pseudo_likelihood(data, state, i)
        else:
            mu, pvar = np.zeros(n), eq.variances(n)
        direct = i == m or config.scheme == "literal"
        # beta block
        ylit = build_equation_a(i, data, _a_paths(state, i, n), state.eta).y
        owner = eq.a is None
        obs_var = None if (owner and direct) else pvar
        tvp = TvpData(ylit - mu, X)

        def resid_beta(st, ylit=ylit):
            return ylit - fitted(tvp, st)

        if trace is not None:
            trace.append((i, "beta"))
        try:
            sweep(rng, eq.beta, tvp, cfg, tuners[(i, "beta")] if tuners else None, adapt,
                  obs_var=obs_var, update_obs=owner, residual_fn=resid_beta)
        except SamplerError as exc:
            exc.equation = i
            raise
        compute_eta(data, state, i)
        if eq.a is not None:
            bfit = _beta_fit(data, state, i)
            lit = build_equation_b(i, data, bfit, state.eta)
            obs_var = None if direct else pvar
            tvp_a = TvpData(lit.y - mu, lit.X)

            def resid_a(st, ylit=lit.y):
                return ylit - fitted(tvp_a, st)

            if trace is not None:
                trace.append((i, "a"))
            try:
                sweep(rng, eq.a, tvp_a, cfg, tuners[(i, "a")] if tuners else None, adapt,
                      obs_var=obs_var, update_obs=True, residual_fn=resid_a)
            except SamplerError as exc:
                exc.equation = i
                raise
            compute_eta(data, state, i)
    return state


def _var_record(state: VarModelState, data: VarData) -> dict:
    out = {}
    for i, eq in enumerate(state.equations, start=1):
        for blk_name, blk in (("beta", eq.beta), ("a", eq.a)):
            if blk is None:
                continue
            for k, v in _record_values(blk).items():
                if k in ("h", "sv_mu", "sv_phi", "sv_sigma_eta2", "sigma2"):
                    continue
                out[f"eq{i}.{blk_name}.{k}"] = v
        own = eq.owner
        if own.sv is not None:
            out[f"eq{i}.h"] = own.sv.h
            out[f"eq{i}.sv_mu"] = own.sv.mu
            out[f"eq{i}.sv_phi"] = own.sv.phi
            out[f"eq{i}.sv_sigma_eta2"] = own.sv.sigma_eta2
        else:
            out[f"eq{i}.sigma2"] = own.sigma2
    return out


def _var_shapes(data: VarData, sv: bool) -> dict:
    n = data.n_eff
    out = {}
    for i in range(1, data.m + 1):
        blocks = [("beta", data.d_beta)] + ([("a", i - 1)] if i > 1 else [])
        for name, d in blocks:
            for k, s in _shapes(n, d, False).items():
                if k == "sigma2":
                    continue
                out[f"eq{i}.{name}.{k}"] = s
        if sv:
            out.update({f"eq{i}.h": (n,), f"eq{i}.sv_mu": (), f"eq{i}.sv_phi": (), f"eq{i}.sv_sigma_eta2": ()})
        else:
            out[f"eq{i}.sigma2"] = ()
    return out


def run_var_chain(rng: RngStream | None, data: VarData, config: VarConfig,
                  state: VarModelState | None = None) -> DrawStore:
    """Run the row-wise sampler and return thinned post-burn-in draws.

    Columns are prefixed ``eq{i}.beta.`` and ``eq{i}.a.``; ``beta_path``
    under the beta block holds (own lags of every variable, intercept) paths
    and under the a block the free elements of row i of A_t.
    """
    config.validate()
    g = config.gibbs
    if rng is None:
        rng = RngStream(g.seed, 0)
    m = data.m
    cfgs = [_resolve(g, data.Y_eff[:, i]) for i in range(m)]
    state = initial_var_state(data, config) if state is None else state
    tuners = {}
    for i in range(1, m + 1):
        tuners[(i, "beta")] = _new_tuners(g)
        if i > 1:
            tuners[(i, "a")] = _new_tuners(g)
    meta = {
        "model": "var",
        "T": data.T,
        "m": m,
        "p": data.p,
        "n_eff": data.n_eff,
        "scheme": config.scheme,
        "seed": g.seed,
        "stream_id": rng.stream_id,
        "config_hash": config_hash({"gibbs": g.to_dict(), "scheme": config.scheme}),
    }
    store = DrawStore.allocate(g.n_keep, _var_shapes(data, g.sv_enabled), meta)
    k = 0
    for it in range(g.n_iter):
        try:
            var_sweep(rng, state, data, config, tuners, g.adapt_mh and it < g.n_burnin, cfgs)
        except SamplerError as exc:
            exc.sweep = it
            raise
        except (FloatingPointError, ValueError, ArithmeticError) as exc:
            if isinstance(exc, ShrinkTGError):
                raise
            raise SamplerError(str(exc), sweep=it) from exc
        if it >= g.n_burnin and (it - g.n_burnin) % g.thin == 0:
            store.record(k, _var_record(state, data))
            k += 1
    acc = {}
    for (i, blk), tn in tuners.items():
        for (side, p), t in tn.items():
            acc[f"eq{i}.{blk}.{side}_{p}"] = t.rate
    store.meta["acceptance"] = acc
    return store


# ---------------------------------------------------------------------------
# Prior simulation


@dataclass
class VarPriorBatch:
    """Independent prior draws of every row; ``rows[i]`` is ``(beta batch, a batch or None)``."""

    rows: list
    n_eff: int

    @property
    def n(self) -> int:
        return self.rows[0][0].n

    def state(self, k: int, eta=None) -> VarModelState:
        eqs = [VarEquationState(b.state(k), None if a is None else a.state(k)) for b, a in self.rows]
        e = np.zeros((self.n_eff, len(self.rows))) if eta is None else np.array(eta, dtype=float)
        return VarModelState(eqs, e)


def prior_var_batch(rng: RngStream, n_draws: int, data_shape: tuple, config: VarConfig) -> VarPriorBatch:
    """``n_draws`` independent prior draws; ``data_shape`` is ``(n_eff, m, p)``."""
    n, m, p = data_shape
    g = config.gibbs
    rows = []
    for i in range(1, m + 1):
        beta = prior_batch(rng, n_draws, n, m * p + 1, g, with_obs=i == 1)
        a = prior_batch(rng, n_draws, n, i - 1, g) if i > 1 else None
        rows.append((beta, a))
    return VarPriorBatch(rows, n)


def prior_var_state(rng: RngStream, data_shape: tuple, config: VarConfig) -> VarModelState:
    """Draw every row's latent quantities from the prior.

    ``data_shape`` is ``(n_eff, m, p)``.  Residuals are left at zero; fill
    them with :func:`simulate_var_y`.
    """
    return prior_var_batch(rng, 1, data_shape, config).state(0)


def simulate_var_y_batch(rng: RngStream, batch: VarPriorBatch, Y0: np.ndarray,
                         bound: float = math.inf):
    """Vectorized :func:`simulate_var_y` over a batch.

    Returns ``(Y, eta, ok)`` with shapes (N, p + n_eff, m), (N, n_eff, m) and
    (N,); ``ok`` flags draws with every |y| <= ``bound``.
    """
    n, N = batch.n_eff, batch.n
    m = len(batch.rows)
    Y0 = np.asarray(Y0, dtype=float).reshape(-1, m)
    p = Y0.shape[0]
    Y = np.zeros((N, p + n, m))
    Y[:, :p] = Y0
    sd = np.stack([np.sqrt((a if a is not None else b).obs_variance()) for b, a in batch.rows], axis=2)
    eta = sd * rng.gen.standard_normal((N, n, m))
    B = [b.coefficient_paths() for b, _ in batch.rows]
    A = [a.coefficient_paths() if a is not None else None for _, a in batch.rows]
    ok = np.ones(N, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(n):
            row = p + t
            x = np.concatenate([Y[:, row - l] for l in range(1, p + 1)] + [np.ones((N, 1))], axis=1)
            for i in range(m):
                v = np.einsum("nk,nk->n", x, B[i][:, t]) + eta[:, t, i]
                if A[i] is not None:
                    v += np.einsum("nj,nj->n", A[i][:, t], eta[:, t, :i])
                Y[:, row, i] = v
            ok &= np.all(np.abs(Y[:, row]) <= bound, axis=1)
    return Y, eta, ok


def simulate_var_y(rng: RngStream, state: VarModelState, Y0: np.ndarray,
                   bound: float = math.inf) -> np.ndarray | None:
    """Simulate Y forward from the presample ``Y0`` (p, m); fills ``state.eta``.

    Returns the full (p + n_eff, m) matrix, or None as soon as a value
    exceeds ``bound`` in magnitude.  The random stream advances by the same
    amount either way.
    """
    n, m = state.eta.shape
    Y0 = np.asarray(Y0, dtype=float).reshape(-1, m)
    p = Y0.shape[0]
    Y = np.vstack([Y0, np.zeros((n, m))])
    sd = np.column_stack([np.sqrt(eq.variances(n)) for eq in state.equations])
    z = rng.gen.standard_normal((n, m))
    B = []
    A = []
    for i, eq in enumerate(state.equations, start=1):
        lv = eq.beta.levels
        B.append(lv.beta[None, :] + lv.sqrt_theta[None, :] * eq.beta.states.beta_tilde[1:])
        A.append(_a_paths(state, i, n))
    for t in range(n):
        row = p + t
        x = np.concatenate([Y[row - l] for l in range(1, p + 1)] + [np.ones(1)])
        eta = sd[t] * z[t]
        state.eta[t] = eta
        for i in range(m):
            Y[row, i] = x @ B[i][t] + A[i][t] @ eta[:i] + eta[i]
        if not np.all(np.abs(Y[row]) <= bound):
            return None
    return Y


def covariance_path(state: VarModelState, n: int) -> np.ndarray:
    """Sigma_t = A_t D_t A_t' for every effective time point, shape (n, m, m)."""
    m = state.m
    A = np.zeros((n, m, m))
    A[:, range(m), range(m)] = 1.0
    for i in range(2, m + 1):
        A[:, i - 1, : i - 1] = _a_paths(state, i, n)
    D = np.column_stack([eq.variances(n) for eq in state.equations])
    return np.einsum("tij,tj,tkj->tik", A, D, A)
