"""Posterior summaries, inclusion probabilities, ESS and the joint-distribution test."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .drawstore import DrawStore, config_hash
from .errors import DomainError, SamplerError
from .gibbs_tvp import GibbsConfig, prior_state, simulate_y, sweep
from .prior_tg import HyperPriorSpec
from .rand_dist import RngStream
from .ssm import TvpData
from .sv import SvPriors

__all__ = [
    "DrawStore",
    "Summary",
    "EssResult",
    "GirReport",
    "resolve_target",
    "inclusion_probability",
    "inclusion_table",
    "summarize",
    "effective_sample_size",
    "ess_column",
    "z_scores",
    "chain_z_scores",
    "getting_it_right",
    "gir_config",
    "tvp_statistics",
    "var_statistics",
    "DEFAULT_QUANTILES",
    "representation_equivalence",
]

DEFAULT_QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)
_TARGET = re.compile(r"^(?P<name>[^\[\]]+)(?:\[(?P<idx>[0-9,\s]+)\])?$")


def resolve_target(draws: DrawStore, target: str) -> np.ndarray:
    """Draws of ``name`` or one element ``name[i]`` / ``name[i,j]`` (zero-based)."""
    m = _TARGET.match(target.strip())
    if m is None:
        raise KeyError(f"malformed parameter id {target!r}")
    col = draws[m.group("name")]
    if m.group("idx") is None:
        return col
    idx = tuple(int(v) for v in m.group("idx").split(","))
    if len(idx) != col.ndim - 1 or any(not 0 <= k < s for k, s in zip(idx, col.shape[1:])):
        raise KeyError(f"index {idx} out of range for {m.group('name')!r} with shape {col.shape[1:]}")
    return col[(slice(None),) + idx]


def _variance_column(target: str) -> bool:
    base = _TARGET.match(target.strip())
    name = base.group("name") if base else target
    return name.split(".")[-1] in ("xi2", "tau2")


def inclusion_probability(draws: DrawStore, target: str):
    """Fraction of draws in which the composed prior variance exceeds 1.

    The event xi_j^2 > 1 is the same as a shrinkage factor
    1 / (1 + xi_j^2) below one half.  ``target`` names an ``xi2`` or ``tau2``
    column, optionally indexed; a whole column gives one probability per
    element.
    """
    if not _variance_column(target):
        raise KeyError(f"{target!r} is not a composed variance column (xi2 or tau2)")
    x = resolve_target(draws, target)
    if x.shape[0] == 0:
        raise DomainError("no draws stored")
    p = np.mean(x > 1.0, axis=0)
    return float(p) if np.ndim(p) == 0 else p


def inclusion_table(draws: DrawStore) -> list:
    """(column, index, probability) for every composed variance element."""
    rows = []
    for name in draws.names:
        if name.split(".")[-1] not in ("xi2", "tau2"):
            continue
        p = np.atleast_1d(inclusion_probability(draws, name))
        for j, v in enumerate(p):
            rows.append((name, j, float(v)))
    return rows


@dataclass
class Summary:
    """Median, mean and quantile bands of one parameter column."""

    name: str
    quantiles: tuple
    bands: np.ndarray  # (len(quantiles), *param_shape)
    median: np.ndarray
    mean: np.ndarray

    def band(self, q: float) -> np.ndarray:
        for k, qq in enumerate(self.quantiles):
            if abs(qq - q) < 1e-12:
                return self.bands[k]
        raise KeyError(f"quantile {q} was not computed")


def summarize(draws: DrawStore, target: str, quantiles=DEFAULT_QUANTILES) -> Summary:
    """Quantile bands per element (per time point for state paths)."""
    x = resolve_target(draws, target)
    if x.shape[0] == 0:
        raise DomainError("no draws stored")
    q = tuple(float(v) for v in quantiles)
    if any(not 0.0 <= v <= 1.0 for v in q):
        raise DomainError("quantiles must lie in [0, 1]")
    bands = np.quantile(x, q, axis=0)
    return Summary(target, q, bands, np.median(x, axis=0), np.mean(x, axis=0))


@dataclass
class EssResult:
    ess: float
    degenerate: bool


def _autocov_fft(x: np.ndarray) -> np.ndarray:
    n = x.size
    x = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    return np.fft.irfft(f * np.conj(f), nfft)[:n] / n


def ess_column(x) -> EssResult:
    """Initial-monotone-sequence ESS of a one-dimensional chain, capped at n."""
    x = np.asarray(x, dtype=float).reshape(-1)
    n = x.size
    if n < 4 or not np.all(np.isfinite(x)) or np.ptp(x) == 0.0:
        return EssResult(0.0, True)
    acov = _autocov_fft(x)
    if not acov[0] > 0:
        return EssResult(0.0, True)
    rho = acov / acov[0]
    n_pairs = n // 2
    pairs = rho[0: 2 * n_pairs: 2] + rho[1: 2 * n_pairs: 2]
    pos = np.nonzero(pairs <= 0)[0]
    k = pos[0] if pos.size else pairs.size
    gam = np.minimum.accumulate(pairs[:k]) if k else np.zeros(0)
    tau = -1.0 + 2.0 * float(np.sum(gam))
    tau = max(tau, 1.0 / n)
    return EssResult(min(n / tau, float(n)), False)


def effective_sample_size(draws, target: str | None = None):
    """ESS of a stored column element, or of a raw 1-d array when ``target`` is None.

    Returns an :class:`EssResult`; constant chains report ESS 0 with the
    degeneracy flag set.
    """
    if target is None:
        return ess_column(draws)
    x = resolve_target(draws, target)
    if x.ndim != 1:
        raise DomainError(f"{target!r} is not scalar; index one element")
    return ess_column(x)


def z_scores(mc: np.ndarray, sc: np.ndarray):
    """Difference-in-means z statistics, the second sample ESS-corrected.

    Returns ``(z, ess_sc)``; a statistic constant in both samples gives z = 0.
    """
    mc = np.asarray(mc, dtype=float)
    sc = np.asarray(sc, dtype=float)
    k = mc.shape[1]
    z = np.zeros(k)
    ess = np.zeros(k)
    for j in range(k):
        e = ess_column(sc[:, j])
        ess[j] = e.ess
        v = np.var(mc[:, j], ddof=1) / mc.shape[0]
        if not e.degenerate:
            v += np.var(sc[:, j], ddof=1) / e.ess
        diff = sc[:, j].mean() - mc[:, j].mean()
        if v > 0:
            z[j] = diff / math.sqrt(v)
        elif diff != 0:
            z[j] = math.copysign(math.inf, diff)
    return z, ess


# ---------------------------------------------------------------------------
# Joint-distribution ("getting it right") test


def _u(x):
    x = np.abs(x)
    return x / (1.0 + x)


def _g(x):
    return x / (1.0 + np.abs(x))


TVP_STAT_NAMES = [
    "a_xi", "a_xi^2", "c_xi", "c_xi^2", "a_tau", "a_tau^2", "c_tau", "c_tau^2", "a_xi*c_xi",
    "u(theta_1)", "u(theta_2)", "u(beta_1^2)", "u(beta_2^2)", "a_xi*u(theta_1)",
    "g(sqrt_theta_1)", "g(beta_1)", "u(kappa_B2_xi)", "u(kappa_B2_tau)",
    "u(psi2_xi_1)", "u(chi2_xi_1)", "u(psi2_tau_1)", "u(chi2_tau_1)", "mean chi2_xi",
    "mean chi2_tau", "u(xi2_1)",
    "1{xi2_1>1}", "g(beta_path_T_1)", "u(mean y^2)", "obs_1", "obs_2",
]


def tvp_statistics(state, y) -> np.ndarray:
    """Bounded test functions of one TVP draw and its data.

    Raw moments such as E[theta_1] do not exist under heavy-tailed shape
    choices, so unbounded quantities enter through u(x) = |x| / (1 + |x|)
    or g(x) = x / (1 + |x|).  The chi2 scales are gamma distributed a priori,
    so their plain means are finite.
    """
    xi, tau = state.xi, state.tau
    lv = state.levels
    d = lv.beta.size
    j2 = 1 if d > 1 else 0
    th = lv.theta
    path_T = lv.beta[0] + lv.sqrt_theta[0] * state.states.beta_tilde[-1, 0]
    if state.sv is not None:
        obs = (_g(state.sv.mu), _u(state.sv.sigma_eta2))
    else:
        obs = (_u(state.sigma2), _u(math.log(state.sigma2)))
    return np.array([
        xi.a, xi.a**2, xi.c, xi.c**2, tau.a, tau.a**2, tau.c, tau.c**2, xi.a * xi.c,
        _u(th[0]), _u(th[j2]), _u(lv.beta[0] ** 2), _u(lv.beta[j2] ** 2), xi.a * _u(th[0]),
        _g(lv.sqrt_theta[0]), _g(lv.beta[0]), _u(xi.kappa_B2), _u(tau.kappa_B2),
        _u(xi.psi2[0]), _u(xi.chi2[0]), _u(tau.psi2[0]), _u(tau.chi2[0]),
        float(np.mean(xi.chi2)), float(np.mean(tau.chi2)), _u(xi.prior_var()[0]),
        float(xi.prior_var()[0] > 1.0), _g(path_T), _u(float(np.mean(np.square(y)))),
        obs[0], obs[1],
    ])


def var_statistics(state, Y) -> np.ndarray:
    """Bounded test functions of one VAR draw: every block's shapes and scales."""
    out = []
    for eq in state.equations:
        for blk in (eq.beta, eq.a):
            if blk is None:
                continue
            xi, tau = blk.xi, blk.tau
            lv = blk.levels
            out += [xi.a, xi.c, tau.a, tau.c, _u(lv.theta[0]), _u(lv.beta[0] ** 2),
                    _g(lv.beta[0]), _u(xi.kappa_B2), _u(tau.kappa_B2),
                    float(np.mean(xi.chi2)), float(np.mean(tau.chi2))]
        own = eq.owner
        if own.sv is not None:
            out += [_g(own.sv.mu), _u(own.sv.sigma_eta2)]
        else:
            out += [_u(own.sigma2)]
    out.append(_u(float(np.mean(np.square(Y)))))
    return np.array(out, dtype=float)


def var_stat_names(m: int, sv: bool) -> list:
    names = []
    for i in range(1, m + 1):
        for blk in ("beta", "a") if i > 1 else ("beta",):
            names += [f"eq{i}.{blk}.{s}" for s in (
                "a_xi", "c_xi", "a_tau", "c_tau", "u(theta_1)", "u(beta_1^2)", "g(beta_1)",
                "u(kappa_B2_xi)", "u(kappa_B2_tau)", "mean chi2_xi", "mean chi2_tau")]
        names += [f"eq{i}.g(sv_mu)", f"eq{i}.u(sv_sigma_eta2)"] if sv else [f"eq{i}.u(sigma2)"]
    return names + ["u(mean Y^2)"]


@dataclass
class GirReport:
    """Outcome of a joint-distribution test."""

    model: str
    names: list
    mc_mean: np.ndarray
    sc_mean: np.ndarray
    z: np.ndarray
    ess: np.ndarray
    n_mc: int
    n_sc: int
    threshold: float = 4.0
    meta: dict = field(default_factory=dict)

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z)))

    @property
    def passed(self) -> bool:
        return self.max_abs_z < self.threshold

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "passed": self.passed,
            "threshold": self.threshold,
            "max_abs_z": self.max_abs_z,
            "n_mc": self.n_mc,
            "n_sc": self.n_sc,
            "statistics": [
                {"name": n, "mc_mean": float(a), "sc_mean": float(b), "z": float(z), "ess": float(e)}
                for n, a, b, z, e in zip(self.names, self.mc_mean, self.sc_mean, self.z, self.ess)
            ],
            "meta": self.meta,
        }


def gir_config(**overrides) -> GibbsConfig:
    """Sampler settings for the joint-distribution test.

    Shape hyperpriors keep a and c away from 0, where the prior puts mass on
    scales far below double-precision resolution; the observation-variance
    prior is proper and data-independent.
    """
    base = dict(
        n_iter=2, n_burnin=1, thin=1, adapt_mh=False, mh_step_v2=1.0,
        hyper_xi=HyperPriorSpec(4.0, 2.0, 4.0, 2.0),
        hyper_tau=HyperPriorSpec(4.0, 2.0, 4.0, 2.0),
        sigma2_c0=3.0, sigma2_C0=2.0,
        sv_priors=SvPriors(mu_mean=0.0, mu_var=1.0, phi_a=5.0, phi_b=1.5, B_sigma=0.1),
    )
    base.update(overrides)
    return GibbsConfig(**base)


def _gir_tvp(rng, T, d, config, n_chains, chain_length, n_mc, progress):
    X = rng.gen.standard_normal((T, d))
    k_stat = len(TVP_STAT_NAMES)
    mc = np.empty((n_mc, k_stat))
    for k in range(n_mc):
        st = prior_state(rng, T, d, config)
        y = simulate_y(rng, st, X)
        mc[k] = tvp_statistics(st, y)
    sc = np.empty((n_chains, chain_length, k_stat))
    for r in range(n_chains):
        st = prior_state(rng, T, d, config)
        y = simulate_y(rng, st, X)
        for k in range(chain_length):
            sweep(rng, st, TvpData(y, X), config)
            y = simulate_y(rng, st, X)
            sc[r, k] = tvp_statistics(st, y)
        if progress and (r + 1) % progress == 0:
            print(f"  chain {r + 1}/{n_chains}", flush=True)
    return TVP_STAT_NAMES, mc, sc


# Heavy-tailed coefficient draws make the simulated VAR explode.  The VAR
# test therefore targets the joint law restricted to {max |Y| <= bound}.
# That event depends on Y alone, so the posterior given Y is unchanged.
VAR_GIR_BOUND = 1e6
VAR_GIR_MAX_TRIES = 1_000_000


class _BoundedJoint:
    """Exact draws of (state, Y) from the bounded joint law, by batched rejection."""

    def __init__(self, rng, shape, vconfig, Y0, batch: int = 256):
        self.rng, self.shape, self.vconfig, self.Y0, self.batch = rng, shape, vconfig, Y0, batch
        self.queue = []

    def _refill(self):
        from .var_tvp import prior_var_batch, simulate_var_y_batch

        for _ in range(max(1, VAR_GIR_MAX_TRIES // self.batch)):
            b = prior_var_batch(self.rng, self.batch, self.shape, self.vconfig)
            Y, eta, ok = simulate_var_y_batch(self.rng, b, self.Y0, VAR_GIR_BOUND)
            idx = np.flatnonzero(ok)
            if idx.size:
                self.queue = [(b, k, Y[k], eta[k]) for k in idx[::-1]]
                return
        raise SamplerError(f"no bounded prior draw in {VAR_GIR_MAX_TRIES} tries")

    def draw(self):
        if not self.queue:
            self._refill()
        b, k, Y, eta = self.queue.pop()
        return b.state(k, eta), Y


def _gir_var(rng, n_eff, m, p, vconfig, n_chains, chain_length, n_mc, progress):
    from .var_tvp import VarData, compute_eta, var_sweep

    shape = (n_eff, m, p)
    Y0 = rng.gen.standard_normal((p, m))
    names = var_stat_names(m, vconfig.gibbs.sv_enabled)
    source = _BoundedJoint(rng, shape, vconfig, Y0)
    mc = np.empty((n_mc, len(names)))
    for k in range(n_mc):
        st, Y = source.draw()
        mc[k] = var_statistics(st, Y)
    sc = np.empty((n_chains, chain_length, len(names)))
    cfgs = [vconfig.gibbs] * m
    for r in range(n_chains):
        # the data stay fixed within a chain: a bounded redraw given an
        # explosive posterior draw can need unboundedly many tries
        st, Y = source.draw()
        data = VarData(Y, p)
        for k in range(chain_length):
            compute_eta(data, st)
            var_sweep(rng, st, data, vconfig, cfgs=cfgs)
            sc[r, k] = var_statistics(st, Y)
        if progress and (r + 1) % progress == 0:
            print(f"  chain {r + 1}/{n_chains}", flush=True)
    return names, mc, sc


def chain_z_scores(mc: np.ndarray, sc: np.ndarray):
    """z statistics of the successive-conditional mean against the prior mean.

    ``sc`` has shape (n_chains, chain_length, n_stats); chains are
    independent, so the standard error comes from the spread of chain means.
    Returns ``(z, effective draws)``.
    """
    n_chains = sc.shape[0]
    cm = sc.mean(axis=1)
    v_sc = np.var(cm, axis=0, ddof=1) / n_chains
    v_mc = np.var(mc, axis=0, ddof=1) / mc.shape[0]
    diff = cm.mean(axis=0) - mc.mean(axis=0)
    v = v_sc + v_mc
    z = np.zeros(diff.size)
    ok = v > 0
    z[ok] = diff[ok] / np.sqrt(v[ok])
    z[~ok & (diff != 0)] = np.copysign(np.inf, diff[~ok & (diff != 0)])
    per_draw = np.var(sc.reshape(-1, sc.shape[2]), axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ess = np.where(v_sc > 0, per_draw / v_sc, 0.0)
    return z, np.minimum(ess, sc.shape[0] * sc.shape[1])


def getting_it_right(model: str = "tvp", shape: dict | None = None, config=None,
                     n_outer: int = 100_000, n_mc: int | None = None, seed: int = 0,
                     chain_length: int = 10,
                     mutation: str | None = None, threshold: float = 4.0,
                     progress: int = 0) -> GirReport:
    """Compare prior-and-data simulation against sampler-and-data alternation.

    The successive-conditional side runs ``n_outer // chain_length``
    independent chains of ``chain_length`` sweeps, each started from an exact
    prior-and-data draw and alternating one sampler sweep with one data
    redraw.  If every move leaves the posterior invariant, every iterate
    has the joint law of the prior-and-data simulator.  Restarting avoids
    the near-absorbing behaviour of a single alternating chain once heavy
    tails produce highly informative data.

    The VAR test draws from the joint law restricted to
    ``max |Y| <= VAR_GIR_BOUND`` and keeps each chain's data fixed, so
    every iterate again has the restricted joint law.

    Parameters
    ----------
    model : {"tvp", "var"}
    shape : dict
        ``{"T", "d"}`` for "tvp" (default T=20, d=2) or ``{"T", "m", "p"}``
        for "var" (default T=15, m=2, p=1; T counts the presample).
    config : GibbsConfig or VarConfig, optional
        Defaults to :func:`gir_config`.
    n_outer : int
        Total sampler sweeps in the successive-conditional simulator.
    chain_length : int
        Sweeps per restarted chain.
    n_mc : int, optional
        Independent prior draws; defaults to ``n_outer``.
    mutation : str, optional
        Deliberate sampler corruption to confirm the test has power.
    """
    if model not in ("tvp", "var"):
        raise DomainError(f"model must be 'tvp' or 'var', got {model!r}")
    n_mc = n_outer if n_mc is None else n_mc
    if chain_length < 1:
        raise DomainError("chain_length must be >= 1")
    n_chains = n_outer // chain_length
    if n_chains < 10 or n_mc < 10:
        raise DomainError("need at least 10 chains and 10 prior draws")
    rng = RngStream(seed, 7)
    if model == "tvp":
        shape = {"T": 20, "d": 2, **(shape or {})}
        cfg = config if config is not None else gir_config()
        if mutation is not None:
            cfg = replace(cfg, mutation=mutation)
        cfg.validate()
        names, mc, sc = _gir_tvp(rng, shape["T"], shape["d"], cfg, n_chains, chain_length, n_mc, progress)
        cfg_dict = cfg.to_dict()
    else:
        from .var_tvp import VarConfig

        shape = {"T": 15, "m": 2, "p": 1, **(shape or {})}
        vcfg = config if config is not None else VarConfig(gir_config(sv_enabled=True))
        if mutation is not None:
            vcfg = replace(vcfg, gibbs=replace(vcfg.gibbs, mutation=mutation))
        vcfg.validate()
        names, mc, sc = _gir_var(rng, shape["T"] - shape["p"], shape["m"], shape["p"],
                                 vcfg, n_chains, chain_length, n_mc, progress)
        cfg_dict = {"gibbs": vcfg.gibbs.to_dict(), "scheme": vcfg.scheme}
    z, ess = chain_z_scores(mc, sc)
    return GirReport(model, list(names), mc.mean(axis=0), sc.mean(axis=(0, 1)), z, ess, n_mc,
                     n_chains * chain_length, threshold,
                     {"shape": shape, "seed": seed, "mutation": mutation, "n_chains": n_chains,
                      "chain_length": chain_length, "config_hash": config_hash(cfg_dict)})


# ---------------------------------------------------------------------------
# Equivalent representations of the marginal prior

EQUIVALENCE_REPRESENTATIONS = ("hierarchy", "f", "student_t", "gamma_ratio", "beta_prime")


def representation_equivalence(prior, n: int = 100_000, seed: int = 0,
                               representations=EQUIVALENCE_REPRESENTATIONS) -> dict:
    """Pairwise two-sample KS p-values between sqrt(theta) samplers.

    Each representation draws ``n`` values from its own stream.  Returns
    ``{(r1, r2): p_value}``.
    """
    from scipy import stats

    from .prior_tg import sample_sqrt_theta

    draws = {
        r: sample_sqrt_theta(RngStream(seed, 100 + k), prior, n, r)
        for k, r in enumerate(representations)
    }
    out = {}
    for i, r1 in enumerate(representations):
        for r2 in representations[i + 1:]:
            out[(r1, r2)] = float(stats.ks_2samp(draws[r1], draws[r2]).pvalue)
    return out
