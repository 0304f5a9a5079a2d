"""Gibbs sampler for a univariate TVP regression under triple gamma priors.

Both shrinkage sides use the gamma-ratio representation

    x_j | psi2_j, chi2_j ~ N(0, phi psi2_j / chi2_j),
    psi2_j ~ G(a, 1),  chi2_j ~ G(c, 1),  phi = 2c / (kappa_B2 a),

with x_j = sqrt(theta_j) on the variance side ("xi") and x_j = beta_j on the
level side ("tau").  Hyperpriors are 2a ~ Beta, 2c ~ Beta and
kappa_B2 / 2 ~ F(2a, 2c), the latter written as kappa_B2 ~ G(a, d2),
d2 ~ G(c, 2c / a).

One sweep runs, for both sides,

    a. states, levels and scales, then sigma2 or the SV block
    b. a | kappa, with psi2 and d2 integrated out (random-walk MH on logit)
    c. psi2_j ~ GIG(a - 1/2, 2, chi2_j x_j^2 / phi)
    d. c | psi2, with chi2 and d2 integrated out (random-walk MH on logit)
    e. chi2_j ~ G(1/2 + c, x_j^2 / (2 phi psi2_j) + 1)
    f. d2 ~ G(a + c, kappa_B2 + 2c/a), then
       kappa_B2 ~ G(d/2 + a, (a / 4c) sum chi2_j x_j^2 / psi2_j + d2)

The order matters because b and d use partially marginalized targets.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import special as sc

from .drawstore import DrawStore, config_hash
from .errors import ConfigError, DomainError, SamplerError, ShrinkTGError
from .prior_tg import HyperPriorSpec
from .rand_dist import (
    GigParams,
    RngStream,
    sample_gamma,
    sample_gig,
    sample_inverse_gamma,
)
from .special_fn import log_bessel_k
from .ssm import (
    VAR_FLOOR,
    LevelsAndScales,
    StatePath,
    TvpData,
    asis_interweave,
    draw_levels_scales,
    ffbs_states,
)
from .sv import SvPriors, SvState, sample_sv_block

__all__ = [
    "ShrinkageSideState",
    "GibbsConfig",
    "TvpModelState",
    "log_target_a",
    "log_target_c",
    "log_q_a",
    "log_q_c",
    "log_f_prior",
    "mh_update_a",
    "mh_update_c",
    "update_psi2",
    "update_chi2",
    "update_global",
    "step_a",
    "sweep",
    "initial_state",
    "run_chain",
    "prior_state",
    "prior_batch",
    "PriorBatch",
    "simulate_y",
    "fitted",
    "PRIORS",
    "X_FLOOR",
]

# |x| floor inside Bessel and GIG arguments; x^2 = 1e-300 keeps the
# small-argument limit of the marginal exact to double precision
X_FLOOR = 1e-150
PRIORS = ("triple-gamma", "horseshoe", "fixed")
SIDES = ("xi", "tau")


@dataclass
class ShrinkageSideState:
    """Shapes, global parameter and local scales of one shrinkage side."""

    a: float
    c: float
    kappa_B2: float
    d2: float
    psi2: np.ndarray
    chi2: np.ndarray

    @property
    def phi(self) -> float:
        return 2.0 * self.c / (self.kappa_B2 * self.a)

    def prior_var(self) -> np.ndarray:
        """Composed conditional variances phi psi2_j / chi2_j."""
        return np.maximum(self.phi * self.psi2 / self.chi2, VAR_FLOOR)

    def copy(self) -> "ShrinkageSideState":
        return replace(self, psi2=self.psi2.copy(), chi2=self.chi2.copy())


@dataclass
class GibbsConfig:
    """Run length, MH tuning, prior choices and feature flags.

    ``prior`` selects how shapes and globals are treated on both sides:
    ``"triple-gamma"`` learns all of them, ``"horseshoe"`` fixes a = c = 1/2
    and keeps the F hyperprior on the global, ``"fixed"`` holds
    ``(fixed_a, fixed_c, fixed_kappa_B2)`` constant.
    """

    n_iter: int = 200_000
    n_burnin: int = 100_000
    thin: int = 100
    mh_step_v2: float = 1.0
    adapt_mh: bool = True
    target_accept: float = 0.44
    prior: str = "triple-gamma"
    symmetric_xi: bool = False
    symmetric_tau: bool = False
    interweave: bool = True
    sv_enabled: bool = False
    hyper_xi: HyperPriorSpec = field(default_factory=HyperPriorSpec)
    hyper_tau: HyperPriorSpec = field(default_factory=HyperPriorSpec)
    fixed_a: float = 0.1
    fixed_c: float = 0.1
    fixed_kappa_B2: float = 2.0
    sv_priors: SvPriors = field(default_factory=SvPriors)
    sigma2_c0: float = 2.5
    sigma2_C0: float | None = None
    init_a: float = 0.25
    init_c: float = 0.25
    init_kappa_B2: float = 2.0
    init_sqrt_theta: float = 0.1
    state_sampler: str = "banded"
    seed: int = 0
    mutation: str | None = None

    def problems(self) -> list:
        out = []
        if self.n_iter < 1:
            out.append("n_iter must be >= 1")
        if not 0 <= self.n_burnin < self.n_iter:
            out.append("n_burnin must satisfy 0 <= n_burnin < n_iter")
        if self.thin < 1:
            out.append("thin must be >= 1")
        if not self.mh_step_v2 > 0:
            out.append("mh_step_v2 must be positive")
        if not 0 < self.target_accept < 1:
            out.append("target_accept must lie in (0, 1)")
        if self.prior not in PRIORS:
            out.append(f"prior must be one of {PRIORS}")
        for name in ("init_a", "init_c"):
            if not 0 < getattr(self, name) < 0.5:
                out.append(f"{name} must lie in (0, 0.5)")
        if self.prior == "fixed":
            if not (self.fixed_a > 0 and self.fixed_c > 0 and self.fixed_kappa_B2 > 0):
                out.append("fixed prior needs positive fixed_a, fixed_c, fixed_kappa_B2")
        if not self.init_kappa_B2 > 0:
            out.append("init_kappa_B2 must be positive")
        if not self.sigma2_c0 > 0:
            out.append("sigma2_c0 must be positive")
        if self.sigma2_C0 is not None and not self.sigma2_C0 > 0:
            out.append("sigma2_C0 must be positive")
        if self.state_sampler not in ("banded", "ffbs"):
            out.append("state_sampler must be 'banded' or 'ffbs'")
        if self.mutation not in (None, "gkappa-rate"):
            out.append(f"unknown mutation {self.mutation!r}")
        if self.seed < 0:
            out.append("seed must be non-negative")
        return out

    def validate(self) -> "GibbsConfig":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self

    @property
    def n_keep(self) -> int:
        return len(range(self.n_burnin, self.n_iter, self.thin))

    def hyper(self, side: str) -> HyperPriorSpec:
        return self.hyper_xi if side == "xi" else self.hyper_tau

    def symmetric(self, side: str) -> bool:
        return self.symmetric_xi if side == "xi" else self.symmetric_tau

    def learn_shapes(self) -> bool:
        return self.prior == "triple-gamma"

    def learn_global(self) -> bool:
        return self.prior != "fixed"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GibbsConfig":
        d = dict(d)
        for key in ("hyper_xi", "hyper_tau"):
            if isinstance(d.get(key), dict):
                d[key] = HyperPriorSpec(**d[key])
        if isinstance(d.get("sv_priors"), dict):
            d["sv_priors"] = SvPriors(**d["sv_priors"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class TvpModelState:
    """Every latent quantity of one TVP regression."""

    states: StatePath
    levels: LevelsAndScales
    xi: ShrinkageSideState
    tau: ShrinkageSideState
    sigma2: float = 1.0
    sv: SvState | None = None

    def side(self, name: str) -> ShrinkageSideState:
        return self.xi if name == "xi" else self.tau

    def side_values(self, name: str) -> np.ndarray:
        return self.levels.sqrt_theta if name == "xi" else self.levels.beta

    def obs_variance(self, T: int) -> np.ndarray:
        if self.sv is not None:
            return np.exp(self.sv.h)
        return np.full(T, self.sigma2)

    def copy(self) -> "TvpModelState":
        return TvpModelState(
            StatePath(self.states.beta_tilde.copy()),
            LevelsAndScales(self.levels.beta.copy(), self.levels.sqrt_theta.copy()),
            self.xi.copy(),
            self.tau.copy(),
            self.sigma2,
            None if self.sv is None else SvState(self.sv.h.copy(), self.sv.mu, self.sv.phi, self.sv.sigma_eta2),
        )


# ---------------------------------------------------------------------------
# Log targets for the shape parameters


def log_f_prior(kappa_B2: float, a: float, c: float) -> float:
    """log density of kappa_B2 when kappa_B2 / 2 ~ F(2a, 2c)."""
    return (
        -math.log(2.0)
        + a * math.log(a / c)
        + (a - 1.0) * math.log(kappa_B2 / 2.0)
        - (a + c) * math.log1p(a * kappa_B2 / (2.0 * c))
        - sc.betaln(a, c)
    )


def _log_shape_prior(a: float, alpha: float, beta: float) -> float:
    # density of a when 2a ~ Beta(alpha, beta)
    return (
        math.log(2.0)
        + (alpha - 1.0) * math.log(2.0 * a)
        + (beta - 1.0) * math.log1p(-2.0 * a)
        - sc.betaln(alpha, beta)
    )


def _log_jacobian(a: float) -> float:
    # a = 0.5 / (1 + exp(-z))  =>  da/dz = 2 a (0.5 - a)
    return math.log(2.0 * a * (0.5 - a))


def log_target_a(a, c, kappa_B2, chi2, x, hyper: HyperPriorSpec, symmetric=False) -> float:
    """Log target of ``a`` on the logit scale z = log(a / (0.5 - a)).

    Sum of the log marginals p(x_j | chi2_j, a, c, kappa_B2) with psi2_j
    integrated out (a Bessel-K form), the F prior of kappa_B2 (when used),
    the Beta prior on 2a and the Jacobian of the logit map.  With
    ``symmetric`` the constraint c = a is imposed and sum_j log G(chi2_j; a, 1)
    is added.
    """
    if not 0.0 < a < 0.5:
        return -math.inf
    cc = a if symmetric else c
    phi = 2.0 * cc / (kappa_B2 * a)
    chi2 = np.asarray(chi2, dtype=float)
    s = phi / chi2
    ax = np.maximum(np.abs(np.asarray(x, dtype=float)), X_FLOOR)
    nu = a - 0.5
    lm = (
        -0.5 * np.log(2.0 * math.pi * s)
        - sc.gammaln(a)
        + math.log(2.0)
        + nu * (np.log(ax) - 0.5 * np.log(2.0 * s))
        + log_bessel_k(nu, ax * np.sqrt(2.0 / s))
    )
    total = float(np.sum(lm))
    if hyper.use_f_hyperprior:
        total += log_f_prior(kappa_B2, a, cc)
    if symmetric:
        total += float(np.sum((a - 1.0) * np.log(chi2) - chi2)) - chi2.size * sc.gammaln(a)
    total += _log_shape_prior(a, hyper.alpha_a, hyper.beta_a) + _log_jacobian(a)
    return total


def log_target_c(c, a, kappa_B2, psi2, x, hyper: HyperPriorSpec) -> float:
    """Log target of ``c`` on the logit scale.

    Uses the Student-t marginal x_j | psi2_j ~ t_{2c}(0, 2 psi2_j / (a kappa_B2))
    with chi2_j integrated out, the F prior of kappa_B2, the Beta prior on 2c
    and the Jacobian.
    """
    if not 0.0 < c < 0.5:
        return -math.inf
    S = 2.0 * np.asarray(psi2, dtype=float) / (a * kappa_B2)
    x2 = np.square(np.asarray(x, dtype=float))
    lt = (
        sc.gammaln(c + 0.5)
        - sc.gammaln(c)
        - 0.5 * np.log(2.0 * c * math.pi * S)
        - (c + 0.5) * np.log1p(x2 / (2.0 * c * S))
    )
    total = float(np.sum(lt))
    if hyper.use_f_hyperprior:
        total += log_f_prior(kappa_B2, a, c)
    total += _log_shape_prior(c, hyper.alpha_c, hyper.beta_c) + _log_jacobian(c)
    return total


def log_q_a(a: float, state: TvpModelState, side: str, config: GibbsConfig) -> float:
    """:func:`log_target_a` evaluated at candidate ``a`` for ``side`` of ``state``."""
    if not 0.0 < a < 0.5:
        raise DomainError(f"candidate a must lie in (0, 0.5), got {a}")
    s = state.side(side)
    return log_target_a(a, s.c, s.kappa_B2, s.chi2, state.side_values(side),
                        config.hyper(side), config.symmetric(side))


def log_q_c(c: float, state: TvpModelState, side: str, config: GibbsConfig) -> float:
    if not 0.0 < c < 0.5:
        raise DomainError(f"candidate c must lie in (0, 0.5), got {c}")
    s = state.side(side)
    return log_target_c(c, s.a, s.kappa_B2, s.psi2, state.side_values(side), config.hyper(side))


# ---------------------------------------------------------------------------
# Moves


def _rw_logit(rng, cur, v2, log_target):
    z = math.log(cur / (0.5 - cur))
    z_new = z + math.sqrt(v2) * rng.gen.standard_normal()
    prop = 0.5 * sc.expit(z_new)
    lp_new = log_target(prop) if 0.0 < prop < 0.5 else -math.inf
    lp_old = log_target(cur)
    u = rng.gen.random()
    if math.isfinite(lp_new) and math.log(u) < lp_new - lp_old:
        return prop, True
    return cur, False


def mh_update_a(rng: RngStream, state: TvpModelState, side: str, v2: float, config: GibbsConfig) -> bool:
    """Random-walk MH on logit(2a); returns whether the proposal was accepted."""
    s = state.side(side)
    x = state.side_values(side)
    hyper = config.hyper(side)
    sym = config.symmetric(side)
    a, acc = _rw_logit(
        rng, s.a, v2,
        lambda a_: log_target_a(a_, s.c, s.kappa_B2, s.chi2, x, hyper, sym),
    )
    s.a = a
    if sym:
        s.c = a
    return acc


def mh_update_c(rng: RngStream, state: TvpModelState, side: str, v2: float, config: GibbsConfig) -> bool:
    s = state.side(side)
    x = state.side_values(side)
    hyper = config.hyper(side)
    c, acc = _rw_logit(
        rng, s.c, v2,
        lambda c_: log_target_c(c_, s.a, s.kappa_B2, s.psi2, x, hyper),
    )
    s.c = c
    return acc


def update_psi2(rng: RngStream, state: TvpModelState, side: str) -> None:
    """psi2_j ~ GIG(a - 1/2, 2, chi2_j x_j^2 / phi) for every j."""
    s = state.side(side)
    x = state.side_values(side)
    phi = s.phi
    p = s.a - 0.5
    for j in range(x.size):
        b = max(s.chi2[j] * max(x[j] * x[j], X_FLOOR**2) / phi, VAR_FLOOR)
        s.psi2[j] = sample_gig(rng, GigParams(p, 2.0, b))


def update_chi2(rng: RngStream, state: TvpModelState, side: str, mutation: str | None = None) -> None:
    """chi2_j ~ G(1/2 + c, x_j^2 / (2 phi psi2_j) + 1) for every j."""
    s = state.side(side)
    x = state.side_values(side)
    rate = np.square(x) / (2.0 * s.phi * s.psi2) + 1.0
    if mutation == "gkappa-rate":
        rate = rate + 0.1
    s.chi2[:] = sample_gamma(rng, np.full(x.size, 0.5 + s.c), rate)


def update_global(rng: RngStream, state: TvpModelState, side: str, hyper: HyperPriorSpec) -> None:
    """d2 then kappa_B2 (F hyperprior), or kappa_B2 alone under a gamma hyperprior."""
    s = state.side(side)
    x = state.side_values(side)
    d = x.size
    rate_data = s.a / (4.0 * s.c) * float(np.sum(s.chi2 * np.square(x) / s.psi2))
    if hyper.use_f_hyperprior:
        s.d2 = sample_gamma(rng, s.a + s.c, s.kappa_B2 + 2.0 * s.c / s.a)
        s.kappa_B2 = sample_gamma(rng, 0.5 * d + s.a, rate_data + s.d2)
    else:
        s.kappa_B2 = sample_gamma(rng, 0.5 * d + hyper.gamma_shape, rate_data + hyper.gamma_rate)


def fitted(data: TvpData, state: TvpModelState) -> np.ndarray:
    """x_t beta + sum_j x_tj sqrt(theta_j) bt_jt for t = 1..T."""
    lv = state.levels
    return data.X @ lv.beta + np.sum(data.X * (state.states.beta_tilde[1:] * lv.sqrt_theta), axis=1)


def step_a(rng: RngStream, state: TvpModelState, data: TvpData, config: GibbsConfig,
           obs_var=None, update_obs: bool = True, residual_fn=None) -> TvpModelState:
    """States, levels and scales, then the observation-variance block.

    ``obs_var`` overrides the variances used for the Gaussian draws (the VAR
    sampler passes its pseudo-likelihood variances); ``residual_fn`` maps
    the updated state to the residuals fed to the variance update.
    """
    var = state.obs_variance(data.T) if obs_var is None else obs_var
    tau2 = state.tau.prior_var()
    xi2 = state.xi.prior_var()
    states = ffbs_states(rng, data, state.levels, var, config.state_sampler)
    levels = draw_levels_scales(rng, data, states, var, tau2, xi2)
    if config.interweave:
        states, levels = asis_interweave(rng, data, states, levels, var, tau2, xi2)
    state.states, state.levels = states, levels
    if update_obs:
        resid = residual_fn(state) if residual_fn is not None else data.y - fitted(data, state)
        if state.sv is not None:
            state.sv = sample_sv_block(rng, resid, state.sv, config.sv_priors, config.interweave)
        else:
            C0 = config.sigma2_C0 if config.sigma2_C0 is not None else 1.0
            state.sigma2 = sample_inverse_gamma(
                rng, config.sigma2_c0 + 0.5 * data.T, C0 + 0.5 * float(resid @ resid)
            )
    return state


class _Tuner:
    """Robbins-Monro adaptation of the log proposal variance."""

    def __init__(self, v2, target):
        self.log_v2 = math.log(v2)
        self.target = target
        self.n = 0
        self.accepted = 0
        self.tried = 0

    @property
    def v2(self):
        return math.exp(self.log_v2)

    def update(self, acc: bool, adapt: bool):
        self.tried += 1
        self.accepted += int(acc)
        if adapt:
            self.n += 1
            self.log_v2 += (float(acc) - self.target) / self.n**0.6
            self.log_v2 = min(max(self.log_v2, -10.0), 5.0)

    @property
    def rate(self):
        return self.accepted / self.tried if self.tried else float("nan")


def _new_tuners(config):
    return {(side, p): _Tuner(config.mh_step_v2, config.target_accept) for side in SIDES for p in ("a", "c")}


def sweep(rng: RngStream, state: TvpModelState, data: TvpData, config: GibbsConfig,
          tuners=None, adapt: bool = False, trace: list | None = None,
          obs_var=None, update_obs: bool = True, residual_fn=None) -> TvpModelState:
    """One full pass of steps a to f over both shrinkage sides."""
    def mark(label):
        if trace is not None:
            trace.append(label)

    def guard(fn, label):
        try:
            return fn()
        except SamplerError as exc:
            if exc.step is None:
                exc.step = label
            raise

    mark("a")
    guard(lambda: step_a(rng, state, data, config, obs_var, update_obs, residual_fn), "a")
    learn_shapes = config.learn_shapes()
    for side in SIDES:
        if learn_shapes:
            mark(f"b:{side}")
            acc = mh_update_a(rng, state, side, tuners[(side, "a")].v2 if tuners else config.mh_step_v2, config)
            if tuners:
                tuners[(side, "a")].update(acc, adapt)
    for side in SIDES:
        mark(f"c:{side}")
        guard(lambda: update_psi2(rng, state, side), "c")
    for side in SIDES:
        if learn_shapes and not config.symmetric(side):
            mark(f"d:{side}")
            acc = mh_update_c(rng, state, side, tuners[(side, "c")].v2 if tuners else config.mh_step_v2, config)
            if tuners:
                tuners[(side, "c")].update(acc, adapt)
    for side in SIDES:
        mark(f"e:{side}")
        update_chi2(rng, state, side, config.mutation if side == "xi" else None)
    if config.learn_global():
        for side in SIDES:
            mark(f"f:{side}")
            update_global(rng, state, side, config.hyper(side))
    return state


# ---------------------------------------------------------------------------
# Initialization, prior simulation and the chain driver


def _side_init(config: GibbsConfig, d: int) -> ShrinkageSideState:
    if config.prior == "fixed":
        a, c, kb = config.fixed_a, config.fixed_c, config.fixed_kappa_B2
    elif config.prior == "horseshoe":
        a, c, kb = 0.5, 0.5, config.init_kappa_B2
    else:
        a, c, kb = config.init_a, config.init_c, config.init_kappa_B2
    return ShrinkageSideState(a, c, kb, 1.0, np.ones(d), np.ones(d))


def initial_state(data: TvpData, config: GibbsConfig) -> TvpModelState:
    """Deterministic starting values sitting mid-support."""
    T, d = data.T, data.d
    vy = float(np.var(data.y)) if np.var(data.y) > 0 else 1.0
    xi = _side_init(config, d)
    tau = _side_init(config, d)
    if config.symmetric_xi and config.prior == "triple-gamma":
        xi.c = xi.a
    if config.symmetric_tau and config.prior == "triple-gamma":
        tau.c = tau.a
    sv = None
    if config.sv_enabled:
        sv = SvState(np.full(T, math.log(vy)), math.log(vy), 0.5, 0.1)
    return TvpModelState(
        StatePath(np.zeros((T + 1, d))),
        LevelsAndScales(np.zeros(d), np.full(d, config.init_sqrt_theta)),
        xi, tau, vy, sv,
    )


def _prior_sides(rng, config, side, n, d) -> dict:
    hyper = config.hyper(side)
    d2 = np.ones(n)
    if config.prior == "fixed":
        a = np.full(n, float(config.fixed_a))
        c = np.full(n, float(config.fixed_c))
        kb = np.full(n, float(config.fixed_kappa_B2))
    else:
        if config.prior == "horseshoe":
            a = c = np.full(n, 0.5)
        else:
            a = 0.5 * rng.gen.beta(hyper.alpha_a, hyper.beta_a, n)
            c = a if config.symmetric(side) else 0.5 * rng.gen.beta(hyper.alpha_c, hyper.beta_c, n)
        if hyper.use_f_hyperprior:
            # kappa_B2 / 2 ~ F(2a, 2c) through its gamma-gamma form
            d2 = np.atleast_1d(sample_gamma(rng, c, 2.0 * c / a))
            kb = np.atleast_1d(sample_gamma(rng, a, d2))
        else:
            kb = np.atleast_1d(sample_gamma(rng, float(hyper.gamma_shape), float(hyper.gamma_rate), size=n))
    psi2 = sample_gamma(rng, np.repeat(a[:, None], d, axis=1))
    chi2 = sample_gamma(rng, np.repeat(c[:, None], d, axis=1))
    with np.errstate(over="ignore"):  # kappa_B2 can underflow for tiny shapes
        phi = 2.0 * c / (kb * a)
        var = np.maximum(phi[:, None] * psi2 / chi2, VAR_FLOOR)
    x = np.sqrt(var) * rng.gen.standard_normal((n, d))
    return {"a": a, "c": c, "kappa_B2": kb, "d2": d2, "psi2": psi2, "chi2": chi2, "values": x}


@dataclass
class PriorBatch:
    """Independent prior draws of one TVP block; every array has the draw axis first.

    ``xi`` and ``tau`` hold the side arrays (``values`` are sqrt(theta) and
    beta respectively); ``sv`` holds ``h``, ``mu``, ``phi`` and ``sigma_eta2``
    or is None when the block has a constant observation variance.
    """

    xi: dict
    tau: dict
    beta_tilde: np.ndarray  # (n, T + 1, d)
    sigma2: np.ndarray
    sv: dict | None

    @property
    def n(self) -> int:
        return self.beta_tilde.shape[0]

    def coefficient_paths(self) -> np.ndarray:
        """beta_j + sqrt(theta_j) bt_jt for t = 1..T, shape (n, T, d)."""
        return self.tau["values"][:, None, :] + self.xi["values"][:, None, :] * self.beta_tilde[:, 1:]

    def obs_variance(self) -> np.ndarray:
        """Observation variances, shape (n, T)."""
        T = self.beta_tilde.shape[1] - 1
        if self.sv is not None:
            return np.exp(self.sv["h"])
        return np.repeat(self.sigma2[:, None], T, axis=1)

    def state(self, k: int) -> TvpModelState:
        def side(dct):
            return ShrinkageSideState(float(dct["a"][k]), float(dct["c"][k]), float(dct["kappa_B2"][k]),
                                      float(dct["d2"][k]), dct["psi2"][k].copy(), dct["chi2"][k].copy())

        sv = None
        if self.sv is not None:
            sv = SvState(self.sv["h"][k].copy(), float(self.sv["mu"][k]), float(self.sv["phi"][k]),
                         float(self.sv["sigma_eta2"][k]))
        return TvpModelState(
            StatePath(self.beta_tilde[k].copy()),
            LevelsAndScales(self.tau["values"][k].copy(), self.xi["values"][k].copy()),
            side(self.xi), side(self.tau), float(self.sigma2[k]), sv,
        )


def prior_batch(rng: RngStream, n: int, T: int, d: int, config: GibbsConfig,
                with_obs: bool = True) -> PriorBatch:
    """``n`` independent draws of every latent quantity from the prior.

    With ``with_obs=False`` the observation block is left out (sigma2 = 1,
    no SV), as for VAR coefficient blocks that do not own the variances.
    """
    xi = _prior_sides(rng, config, "xi", n, d)
    tau = _prior_sides(rng, config, "tau", n, d)
    bt = np.cumsum(rng.gen.standard_normal((n, T + 1, d)), axis=1)
    sv = None
    sigma2 = np.ones(n)
    if with_obs and config.sv_enabled:
        p = config.sv_priors
        mu = p.mu_mean + math.sqrt(p.mu_var) * rng.gen.standard_normal(n)
        phi = 2.0 * rng.gen.beta(p.phi_a, p.phi_b, n) - 1.0
        s2 = np.atleast_1d(sample_gamma(rng, 0.5, 1.0 / (2.0 * p.B_sigma), size=n))
        e = np.sqrt(s2)[:, None] * rng.gen.standard_normal((n, T))
        h = np.empty((n, T))
        h[:, 0] = mu + np.sqrt(s2 / (1.0 - phi * phi)) * rng.gen.standard_normal(n)
        for t in range(1, T):
            h[:, t] = mu + phi * (h[:, t - 1] - mu) + e[:, t]
        sv = {"h": h, "mu": mu, "phi": phi, "sigma_eta2": s2}
    elif with_obs:
        C0 = config.sigma2_C0 if config.sigma2_C0 is not None else 1.0
        sigma2 = np.atleast_1d(sample_inverse_gamma(rng, float(config.sigma2_c0), float(C0), size=n))
    return PriorBatch(xi, tau, bt, sigma2, sv)


def prior_state(rng: RngStream, T: int, d: int, config: GibbsConfig) -> TvpModelState:
    """Draw every latent quantity from the prior (data not included)."""
    return prior_batch(rng, 1, T, d, config).state(0)


def simulate_y(rng: RngStream, state: TvpModelState, X: np.ndarray) -> np.ndarray:
    """Observation draw y | states, levels, scales, variances."""
    T = X.shape[0]
    data = TvpData(np.zeros(T), X)
    mean = fitted(data, state)
    return mean + np.sqrt(state.obs_variance(T)) * rng.gen.standard_normal(T)


def _record_values(state: TvpModelState) -> dict:
    lv = state.levels
    out = {
        "beta": lv.beta,
        "sqrt_theta": lv.sqrt_theta,
        "beta_path": lv.beta[None, :] + lv.sqrt_theta[None, :] * state.states.beta_tilde,
    }
    for side in SIDES:
        s = state.side(side)
        out[f"a_{side}"] = s.a
        out[f"c_{side}"] = s.c
        out[f"kappa_B2_{side}"] = s.kappa_B2
        out[f"phi_{side}"] = s.phi
        out[f"psi2_{side}"] = s.psi2
        out[f"chi2_{side}"] = s.chi2
        out[f"{side}2"] = s.prior_var()
    if state.sv is not None:
        out["h"] = state.sv.h
        out["sv_mu"] = state.sv.mu
        out["sv_phi"] = state.sv.phi
        out["sv_sigma_eta2"] = state.sv.sigma_eta2
    else:
        out["sigma2"] = state.sigma2
    return out


def _shapes(T, d, sv):
    s = {"beta": (d,), "sqrt_theta": (d,), "beta_path": (T + 1, d)}
    for side in SIDES:
        s.update({f"a_{side}": (), f"c_{side}": (), f"kappa_B2_{side}": (), f"phi_{side}": (),
                  f"psi2_{side}": (d,), f"chi2_{side}": (d,), f"{side}2": (d,)})
    if sv:
        s.update({"h": (T,), "sv_mu": (), "sv_phi": (), "sv_sigma_eta2": ()})
    else:
        s["sigma2"] = ()
    return s


def run_chain(rng: RngStream | None, data: TvpData, config: GibbsConfig,
              state: TvpModelState | None = None, trace: list | None = None) -> DrawStore:
    """Run the sampler and return thinned post-burn-in draws.

    A chain with ``rng=None`` uses stream 0 of ``config.seed``.
    """
    config.validate()
    if rng is None:
        rng = RngStream(config.seed, 0)
    if config.sigma2_C0 is None and not config.sv_enabled:
        config = replace(config, sigma2_C0=1.5 * max(float(np.var(data.y)), 1e-12))
    state = initial_state(data, config) if state is None else state
    tuners = _new_tuners(config)
    meta = {
        "model": "tvp",
        "T": data.T,
        "d": data.d,
        "seed": config.seed,
        "stream_id": rng.stream_id,
        "config_hash": config_hash(config.to_dict()),
    }
    store = DrawStore.allocate(config.n_keep, _shapes(data.T, data.d, state.sv is not None), meta)
    k = 0
    for it in range(config.n_iter):
        try:
            sweep(rng, state, data, config, tuners, adapt=config.adapt_mh and it < config.n_burnin,
                  trace=trace if it == 0 else None)
        except SamplerError as exc:
            exc.sweep = it
            raise
        except (FloatingPointError, ValueError, ArithmeticError) as exc:
            if isinstance(exc, ShrinkTGError):
                raise
            raise SamplerError(str(exc), sweep=it) from exc
        if it >= config.n_burnin and (it - config.n_burnin) % config.thin == 0:
            store.record(k, _record_values(state))
            k += 1
    store.meta["acceptance"] = {f"{s}_{p}": t.rate for (s, p), t in tuners.items()}
    store.meta["mh_v2"] = {f"{s}_{p}": t.v2 for (s, p), t in tuners.items()}
    return store
