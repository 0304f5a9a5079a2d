"""Synthetic TVP-VAR-SV data with a controlled share of zero coefficients.

Every VAR coefficient (own and cross lags plus intercept) and every free
element of A_t follows

    b_t = b + sqrt(theta) w_t,   w_t = w_{t-1} + N(0, 1),   w_0 ~ N(0, 1)

with a prescribed fraction of exactly-zero levels b and, independently, of
exactly-zero variances theta.  Log volatilities follow stationary AR(1)s.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, SamplerError
from .rand_dist import RngStream
from .var_tvp import VarData

__all__ = ["DgpSpec", "GroundTruth", "simulate", "preset", "PRESETS", "write_csv", "MAX_ATTEMPTS"]

MAX_ATTEMPTS = 100
PRESETS = {"sparse": 0.9, "dense": 0.3}
# with 70% of a 7-variable VAR drifting, increments of variance 0.01 or more
# explode within 200 steps; the dense preset uses smaller ones
_PRESET_EXTRA = {"sparse": {}, "dense": {"theta_range": (1e-4, 1e-3)}}


@dataclass(frozen=True)
class DgpSpec:
    """Dimensions, sparsity and magnitude ranges of the generating process."""

    T: int = 200
    m: int = 7
    p: int = 1
    sparsity_beta: float = 0.9
    sparsity_theta: float = 0.9
    beta_range: tuple = (0.1, 0.5)
    theta_range: tuple = (0.01, 0.1)
    sv_mu_range: tuple = (-1.0, 0.0)
    sv_phi_range: tuple = (0.8, 0.95)
    sv_sigma_range: tuple = (0.1, 0.3)
    overflow_bound: float = 1e3
    seed: int = 0

    def problems(self) -> list:
        out = []
        if self.m < 1 or self.p < 1:
            out.append("m and p must be >= 1")
        if self.T <= self.p + 1:
            out.append("T must exceed p + 1")
        for name in ("sparsity_beta", "sparsity_theta"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                out.append(f"{name} must lie in [0, 1]")
        for name in ("beta_range", "theta_range", "sv_phi_range", "sv_sigma_range", "sv_mu_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                out.append(f"{name} must be (low, high) with low <= high")
        if not (self.theta_range[0] >= 0 and self.sv_sigma_range[0] >= 0):
            out.append("variance ranges must be non-negative")
        lo, hi = self.sv_phi_range
        if not (-1 < lo and hi < 1):
            out.append("sv_phi_range must lie inside (-1, 1)")
        if not self.overflow_bound > 0:
            out.append("overflow_bound must be positive")
        return out

    def validate(self) -> "DgpSpec":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self


def preset(name: str, **overrides) -> DgpSpec:
    """``"sparse"`` (90% zeros) or ``"dense"`` (30% zeros) at T=200, m=7, p=1.

    The dense preset draws nonzero theta from [1e-4, 1e-3].
    """
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    f = PRESETS[name]
    return DgpSpec(**{"sparsity_beta": f, "sparsity_theta": f, **_PRESET_EXTRA[name], **overrides})


@dataclass
class GroundTruth:
    """True parameters; A-side arrays hold the m(m-1)/2 free elements row by row."""

    beta_beta: np.ndarray  # (m, m p + 1)
    theta_beta: np.ndarray
    beta_a: np.ndarray  # (m(m-1)/2,)
    theta_a: np.ndarray
    beta_paths: np.ndarray  # (n_eff, m, m p + 1)
    a_paths: np.ndarray  # (n_eff, m(m-1)/2)
    h: np.ndarray  # (n_eff, m)
    sv_mu: np.ndarray
    sv_phi: np.ndarray
    sv_sigma: np.ndarray
    attempts: int

    @property
    def zero_beta_beta(self) -> np.ndarray:
        return self.beta_beta == 0.0

    @property
    def zero_theta_beta(self) -> np.ndarray:
        return self.theta_beta == 0.0

    @property
    def zero_beta_a(self) -> np.ndarray:
        return self.beta_a == 0.0

    @property
    def zero_theta_a(self) -> np.ndarray:
        return self.theta_a == 0.0

    def a_index(self) -> list:
        """(row, column) of each free A element, 1-based."""
        m = self.h.shape[1]
        return [(i, j) for i in range(2, m + 1) for j in range(1, i)]


def _masked(rng, n, frac, lo, hi, signed):
    k = int(round(frac * n))
    vals = rng.gen.uniform(lo, hi, n)
    if signed:
        vals *= np.where(rng.gen.random(n) < 0.5, -1.0, 1.0)
    zero = np.zeros(n, dtype=bool)
    zero[rng.gen.permutation(n)[:k]] = True
    vals[zero] = 0.0
    return vals


def _attempt(rng, spec):
    m, p = spec.m, spec.p
    n = spec.T - p
    k = m * p + 1
    na = m * (m - 1) // 2
    bb = _masked(rng, m * k, spec.sparsity_beta, *spec.beta_range, True).reshape(m, k)
    tb = _masked(rng, m * k, spec.sparsity_theta, *spec.theta_range, False).reshape(m, k)
    ba = _masked(rng, na, spec.sparsity_beta, *spec.beta_range, True)
    ta = _masked(rng, na, spec.sparsity_theta, *spec.theta_range, False)
    wb = np.cumsum(rng.gen.standard_normal((n + 1, m, k)), axis=0)[1:]
    wa = np.cumsum(rng.gen.standard_normal((n + 1, na)), axis=0)[1:]
    bpaths = bb[None] + np.sqrt(tb)[None] * wb
    apaths = ba[None] + np.sqrt(ta)[None] * wa
    mu = rng.gen.uniform(*spec.sv_mu_range, m)
    phi = rng.gen.uniform(*spec.sv_phi_range, m)
    sig = rng.gen.uniform(*spec.sv_sigma_range, m)
    h = np.empty((n, m))
    h[0] = mu + sig / np.sqrt(1.0 - phi**2) * rng.gen.standard_normal(m)
    for t in range(1, n):
        h[t] = mu + phi * (h[t - 1] - mu) + sig * rng.gen.standard_normal(m)
    eta = np.exp(0.5 * h) * rng.gen.standard_normal((n, m))
    A = np.zeros((n, m, m))
    rows, cols = np.tril_indices(m, -1)
    # tril_indices is row-major, matching a_index()
    A[:, rows, cols] = apaths
    A[:, range(m), range(m)] = 1.0
    eps = np.einsum("tij,tj->ti", A, eta)
    Y = np.zeros((spec.T, m))
    for t in range(n):
        row = p + t
        x = np.concatenate([Y[row - l] for l in range(1, p + 1)] + [np.ones(1)])
        Y[row] = bpaths[t] @ x + eps[t]
        if not np.all(np.abs(Y[row]) <= spec.overflow_bound):
            return None
    truth = GroundTruth(bb, tb, ba, ta, bpaths, apaths, h, mu, phi, sig, 0)
    return Y, truth


def simulate(spec: DgpSpec, rng: RngStream | None = None):
    """Draw one dataset and its ground truth.

    Series whose magnitude exceeds ``spec.overflow_bound`` are discarded and
    redrawn; after ``MAX_ATTEMPTS`` failures a :class:`SamplerError` is raised.
    The presample rows are zero.
    """
    spec.validate()
    rng = RngStream(spec.seed, 11) if rng is None else rng
    for attempt in range(1, MAX_ATTEMPTS + 1):
        out = _attempt(rng, spec)
        if out is not None:
            Y, truth = out
            truth.attempts = attempt
            return VarData(Y, spec.p), truth
    raise SamplerError(f"no series within |y| <= {spec.overflow_bound} after {MAX_ATTEMPTS} attempts")


def write_csv(directory, data: VarData, truth: GroundTruth, spec: DgpSpec) -> dict:
    """Write ``data.csv``, ``truth.csv`` and ``truth_paths.csv``; return the paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    m, p = data.m, data.p
    paths = {"data": d / "data.csv", "truth": d / "truth.csv", "truth_paths": d / "truth_paths.csv"}
    with open(paths["data"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"y{i}" for i in range(1, m + 1)])
        for row in data.Y:
            w.writerow([repr(float(v)) for v in row])
    names = [f"lag{l}.y{j}" for l in range(1, p + 1) for j in range(1, m + 1)] + ["intercept"]
    with open(paths["truth"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["block", "equation", "regressor", "beta", "theta", "beta_zero", "theta_zero"])
        for i in range(m):
            for k, nm in enumerate(names):
                b, th = truth.beta_beta[i, k], truth.theta_beta[i, k]
                w.writerow(["beta", i + 1, nm, repr(float(b)), repr(float(th)), int(b == 0), int(th == 0)])
        for q, (i, j) in enumerate(truth.a_index()):
            b, th = truth.beta_a[q], truth.theta_a[q]
            w.writerow(["a", i, f"eta{j}", repr(float(b)), repr(float(th)), int(b == 0), int(th == 0)])
        for i in range(m):
            w.writerow(["sv_mu", i + 1, "", repr(float(truth.sv_mu[i])), "", "", ""])
            w.writerow(["sv_phi", i + 1, "", repr(float(truth.sv_phi[i])), "", "", ""])
            w.writerow(["sv_sigma", i + 1, "", repr(float(truth.sv_sigma[i])), "", "", ""])
    with open(paths["truth_paths"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        head = ["t"] + [f"beta.eq{i + 1}.{nm}" for i in range(m) for nm in names]
        head += [f"a.{i}{j}" for i, j in truth.a_index()] + [f"h{i + 1}" for i in range(m)]
        w.writerow(head)
        for t in range(data.n_eff):
            row = [t + p + 1] + [repr(float(v)) for v in truth.beta_paths[t].ravel()]
            row += [repr(float(v)) for v in truth.a_paths[t]] + [repr(float(v)) for v in truth.h[t]]
            w.writerow(row)
    return paths
