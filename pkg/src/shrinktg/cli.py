"""Command-line front end: simulate, fit, prior grids and self-checks.

Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 data
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_QUANTILES,
    ess_column,
    getting_it_right,
    inclusion_table,
    representation_equivalence,
)
from .drawstore import DrawStore
from .errors import (
    ConfigError,
    DataError,
    DomainError,
    NumericalAccuracyError,
    SamplerError,
    UnsupportedCaseError,
)
from .gibbs_tvp import GibbsConfig, run_chain
from .prior_tg import (
    HyperPriorSpec,
    TripleGammaPrior,
    log_density_sqrt_theta,
    profile_bands,
    sample_hyperpriors,
    sample_profile,
    shrinkage_profile_density,
    special_case,
)
from .rand_dist import RngStream, sample_f
from .simgen import PRESETS, preset, simulate, write_csv
from .ssm import TvpData
from .var_tvp import VarConfig, VarData, run_var_chain

__all__ = [
    "main",
    "build_parser",
    "RunConfig",
    "read_data_csv",
    "write_summary_csv",
    "read_summary_csv",
    "write_inclusion_csv",
    "write_diagnostics_csv",
    "EXIT_OK",
    "EXIT_CHECK_FAILED",
    "EXIT_CONFIG",
    "EXIT_DATA",
    "EXIT_NUMERICAL",
]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

FIT_DEFAULTS = {
    "iters": 200_000,
    "burnin": 100_000,
    "thin": 100,
    "prior": "triple-gamma",
    "symmetric_xi": False,
    "symmetric_tau": False,
    "interweave": True,
    "sv": None,
    "lags": 1,
    "scheme": "exact",
    "mh_v2": 1.0,
    "adapt": True,
    "hyper": "f",
    "alpha_a": 1.0,
    "beta_a": 6.0,
    "alpha_c": 1.0,
    "beta_c": 6.0,
    "seed": 0,
    "chains": 1,
    "response": None,
    "intercept": False,
}


# ---------------------------------------------------------------------------
# CSV ingestion and export


def read_data_csv(path, min_rows: int = 3):
    """Header row plus numeric body; returns ``(names, array)``.

    Raises :class:`DataError` naming the row and column of the first bad cell.
    Row numbers count the header as row 1.
    """
    p = Path(path)
    try:
        fh = open(p, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {p}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{p}: empty file") from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise DataError(f"{p}: header row has empty column names")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{p}: row {line_no} has {len(row)} cells, expected {len(header)}")
            vals = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{p}: row {line_no}, column {col!r}: non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{p}: row {line_no}, column {col!r}: non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if len(rows) < min_rows:
        raise DataError(f"{p}: need at least {min_rows} data rows, got {len(rows)}")
    return header, np.array(rows, dtype=float)


def _index_label(idx) -> str:
    return ":".join(str(i) for i in idx)


def _qname(q: float) -> str:
    return f"q{q:g}"


def write_summary_csv(path, draws: DrawStore, quantiles=DEFAULT_QUANTILES) -> Path:
    """One row per parameter element: mean and quantiles.

    State paths get one row per (time, coefficient) with index ``t:j``.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "index", "mean"] + [_qname(q) for q in quantiles])
        for name in draws.names:
            x = draws[name]
            if x.shape[0] == 0:
                continue
            bands = np.quantile(x, quantiles, axis=0)
            mean = x.mean(axis=0)
            for idx in np.ndindex(*x.shape[1:]):
                w.writerow([name, _index_label(idx), repr(float(mean[idx]))]
                           + [repr(float(bands[(k,) + idx])) for k in range(len(quantiles))])
    return path


def read_summary_csv(path) -> dict:
    """Inverse of :func:`write_summary_csv`: ``{(parameter, index): {stat: value}}``."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            key = (row.pop("parameter"), row.pop("index"))
            out[key] = {k: float(v) for k, v in row.items()}
    return out


def write_inclusion_csv(path, draws: DrawStore) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "index", "probability"])
        for name, j, p in inclusion_table(draws):
            w.writerow([name, j, repr(p)])
    return path


def write_diagnostics_csv(path, draws: DrawStore) -> Path:
    """ESS of every scalar and vector element (paths excluded) and MH acceptance rates."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "parameter", "index", "value", "degenerate"])
        for name in draws.names:
            x = draws[name]
            if x.ndim > 2:
                continue
            for idx in np.ndindex(*x.shape[1:]):
                e = ess_column(x[(slice(None),) + idx])
                w.writerow(["ess", name, _index_label(idx), repr(e.ess), int(e.degenerate)])
        for key, rate in sorted(draws.meta.get("acceptance", {}).items()):
            w.writerow(["acceptance", key, "", repr(float(rate)), 0])
    return path


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class RunConfig:
    """Merged settings of one command: defaults, then config file, then flags."""

    command: str
    settings: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)

    def problems(self) -> list:
        s = self.settings
        out = []
        if self.command == "fit":
            for k in ("iters", "burnin", "thin", "chains", "lags", "seed"):
                v = s.get(k)
                if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                    out.append(f"{k} must be an integer, got {v!r}")
            if s.get("hyper") not in ("f", "gamma"):
                out.append("hyper must be 'f' or 'gamma'")
            if isinstance(s.get("chains"), int) and s["chains"] < 1:
                out.append("chains must be >= 1")
            unknown = set(s) - set(FIT_DEFAULTS) - {"model", "input", "out"}
            if unknown:
                out.append(f"unknown settings: {sorted(unknown)}")
        return out

    def validate(self) -> "RunConfig":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _merge(defaults: dict, file_values: dict, args: argparse.Namespace) -> dict:
    out = dict(defaults)
    out.update(file_values)
    for k in defaults:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _gibbs_config(s: dict, sv_default: bool) -> GibbsConfig:
    hyper = HyperPriorSpec(
        alpha_a=float(s["alpha_a"]), beta_a=float(s["beta_a"]),
        alpha_c=float(s["alpha_c"]), beta_c=float(s["beta_c"]),
        use_f_hyperprior=s["hyper"] == "f",
    )
    sv = sv_default if s["sv"] is None else bool(s["sv"])
    return GibbsConfig(
        n_iter=int(s["iters"]), n_burnin=int(s["burnin"]), thin=int(s["thin"]),
        mh_step_v2=float(s["mh_v2"]), adapt_mh=bool(s["adapt"]), prior=s["prior"],
        symmetric_xi=bool(s["symmetric_xi"]), symmetric_tau=bool(s["symmetric_tau"]),
        interweave=bool(s["interweave"]), sv_enabled=sv,
        hyper_xi=hyper, hyper_tau=hyper, seed=int(s["seed"]),
    )


def _parse_grid(text: str):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError(f"grid must be lo:hi:n, got {text!r}") from None
    if not (lo < hi and n >= 2):
        raise ConfigError(f"grid needs lo < hi and n >= 2, got {text!r}")
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(args) -> int:
    overrides = {"seed": args.seed}
    for k in ("T", "m", "p"):
        v = getattr(args, k)
        if v is not None:
            overrides[k] = v
    spec = preset(args.preset, **overrides)
    data, truth = simulate(spec)
    paths = write_csv(args.out, data, truth, spec)
    meta = {"preset": args.preset, "spec": {k: getattr(spec, k) for k in spec.__dataclass_fields__},
            "attempts": truth.attempts}
    (Path(args.out) / "simulate.json").write_text(json.dumps(meta, indent=1, default=list))
    print(f"wrote {paths['data']} ({data.T} rows, {data.m} series) and {paths['truth']}")
    return EXIT_OK


def _chain_job(job):
    kind, payload, cfg, stream = job
    if kind == "tvp":
        y, X = payload
        return run_chain(RngStream(cfg.seed, stream), TvpData(y, X), cfg)
    Y, p, vcfg = payload
    return run_var_chain(RngStream(vcfg.gibbs.seed, stream), VarData(Y, p), vcfg)


def _threads(k: int) -> int:
    cap = os.environ.get("SHRINKTG_THREADS")
    n = k
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"SHRINKTG_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(n, os.cpu_count() or 1))


def _write_fit_outputs(directory: Path, store: DrawStore, write_draws: bool = True):
    directory.mkdir(parents=True, exist_ok=True)
    if write_draws:
        store.save(directory)
    write_summary_csv(directory / "summary.csv", store)
    write_inclusion_csv(directory / "inclusion.csv", store)
    write_diagnostics_csv(directory / "diagnostics.csv", store)


def cmd_fit(args) -> int:
    s = _merge(FIT_DEFAULTS, _load_config_file(args.config), args)
    rc = RunConfig("fit", s, {"input": args.input, "out": args.out}).validate()
    names, arr = read_data_csv(args.input)
    k = int(s["chains"])
    if args.model == "tvp":
        cfg = _gibbs_config(s, sv_default=False).validate()
        resp = s["response"] or names[0]
        if resp not in names:
            raise DataError(f"response column {resp!r} not in {names}")
        j = names.index(resp)
        y = arr[:, j]
        X = np.delete(arr, j, axis=1)
        if s["intercept"]:
            X = np.column_stack([X, np.ones(len(y))])
        if X.shape[1] == 0:
            raise DataError("no regressor columns; add columns or pass --intercept")
        TvpData(y, X)
        jobs = [("tvp", (y, X), cfg, c) for c in range(k)]
    else:
        cfg = _gibbs_config(s, sv_default=True)
        vcfg = VarConfig(cfg, s["scheme"]).validate()
        VarData(arr, int(s["lags"]))
        jobs = [("var", (arr, int(s["lags"]), vcfg), cfg, c) for c in range(k)]
    if k == 1:
        stores = [_chain_job(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=_threads(k)) as ex:
            stores = list(ex.map(_chain_job, jobs))
    out = Path(args.out)
    for st in stores:
        st.meta["columns_in"] = names
        st.meta["settings"] = rc.settings
    if k == 1:
        _write_fit_outputs(out, stores[0])
    else:
        for c, st in enumerate(stores, start=1):
            _write_fit_outputs(out / f"chain{c}", st)
        _write_fit_outputs(out, DrawStore.pool(stores), write_draws=False)
    n = stores[0].n_draws
    print(f"{args.model}: {k} chain(s), {n} stored draws each; outputs in {out}")
    return EXIT_OK


def _overlay(args):
    """Named special case matched to the main prior's global scale."""
    tag = args.preset
    if tag is None:
        return None
    tau2 = 2.0 / args.kappa_b2
    params = {
        "horseshoe": {"tau2": tau2},
        "lasso": {"tau2": tau2},
        "double_gamma": {"a": args.a, "tau2": tau2},
        "half_t": {"nu": 2.0 * args.c, "tau2": tau2},
        "half_cauchy": {"tau2": tau2},
        "normal": {"B0": tau2},
        "strawderman_berger": {},
        "neg": {"c": args.c, "lambda2": args.kappa_b2 / (2.0 * args.c)},
    }[tag]
    return special_case(tag, **params)


def _kappa_b2_draws(rng, prior, hyper: str, n: int) -> np.ndarray:
    """Global-scale draws: kappa_B2 / 2 ~ F(2a, 2c) or the vague gamma."""
    if n < 1:
        raise ConfigError("draws must be >= 1")
    if hyper == "f":
        return 2.0 * np.asarray(sample_f(rng, 2.0 * prior.a, 2.0 * prior.c, n))
    return np.asarray(sample_hyperpriors(rng, HyperPriorSpec(use_f_hyperprior=False), n)[2])


def _write_columns(path: Path, header, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) for v in row])


def cmd_prior(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        prior = TripleGammaPrior(args.a, args.c, args.kappa_b2)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    overlay = _overlay(args)
    rng = RngStream(args.seed, 0)

    x = _parse_grid(args.grid)
    head, cols = ["x", "log_density"], [x, log_density_sqrt_theta(prior, x)]
    if overlay is not None:
        head.append(f"log_density_{args.preset}")
        cols.append(log_density_sqrt_theta(overlay, x))
    _write_columns(out / "density.csv", head, cols)

    kappa = _parse_grid(args.profile_grid)
    head, cols = ["kappa", "density"], [kappa, shrinkage_profile_density(prior, kappa)]
    if overlay is not None and not (math.isinf(overlay.a) and math.isinf(overlay.c)):
        head.append(f"density_{args.preset}")
        cols.append(shrinkage_profile_density(overlay, kappa))
    _write_columns(out / "profile.csv", head, cols)

    if args.bands:
        kb = _kappa_b2_draws(rng, prior, args.hyper, args.draws)
        q = (0.5, 0.25, 0.75, 0.025, 0.975)
        bands = profile_bands(prior, kappa, kb, q)
        _write_columns(out / "profile_bands.csv", ["kappa", "median", "q0.25", "q0.75", "q0.025", "q0.975"],
                       [kappa] + [bands[:, k] for k in range(len(q))])

    # pairs share one kappa_B2; it is drawn from the hyperprior when --bands is set
    k1 = np.empty(args.biv)
    k2 = np.empty(args.biv)
    kb = _kappa_b2_draws(rng, prior, args.hyper, args.biv) if args.bands else np.full(args.biv, prior.kappa_B2)
    for i in range(args.biv):
        k1[i], k2[i] = sample_profile(rng, TripleGammaPrior(prior.a, prior.c, float(kb[i])), 2)
    _write_columns(out / "profile_biv.csv", ["kappa1", "kappa2"], [k1, k2])
    print(f"wrote prior grids to {out}")
    return EXIT_OK


def cmd_check(args) -> int:
    quick = args.quick
    n_tvp = args.n_outer or (4_000 if quick else 100_000)
    n_var = args.n_outer_var or (1_000 if quick else 100_000)
    n_ks = 20_000 if quick else 100_000
    report = {"quick": quick, "mutation": args.mutate, "checks": []}
    ok = True
    progress = 0 if not args.verbose else 1000
    for model, n in (("tvp", n_tvp), ("var", n_var)):
        r = getting_it_right(model, n_outer=n, seed=args.seed, mutation=args.mutate, progress=progress)
        d = r.to_dict()
        d["check"] = f"getting_it_right_{model}"
        report["checks"].append(d)
        ok &= r.passed
        print(f"getting-it-right {model}: max |z| = {r.max_abs_z:.2f} over {len(r.names)} statistics "
              f"-> {'pass' if r.passed else 'FAIL'}")
    triples = [(0.1, 0.1, 2.0), (0.25, 0.4, 1.0), (0.45, 0.2, 5.0)]
    for a, c, kb in triples:
        pv = representation_equivalence(TripleGammaPrior(a, c, kb), n_ks, args.seed)
        passed = min(pv.values()) > 1e-3
        ok &= passed
        report["checks"].append({"check": "representations", "a": a, "c": c, "kappa_B2": kb,
                                 "passed": passed,
                                 "p_values": {f"{r1}|{r2}": p for (r1, r2), p in pv.items()}})
        print(f"representations a={a} c={c} kappa_B2={kb}: min p = {min(pv.values()):.4f} "
              f"-> {'pass' if passed else 'FAIL'}")
    report["passed"] = bool(ok)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "check_report.json").write_text(json.dumps(report, indent=1, default=float))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shrinktg", description="Triple gamma shrinkage for TVP models")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="synthetic TVP-VAR-SV data with known sparsity")
    s.add_argument("--preset", choices=sorted(PRESETS), default="sparse")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--T", type=int, default=None)
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--p", type=int, default=None)
    s.add_argument("-o", "--out", required=True, help="output directory (created if missing)")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="run the Gibbs sampler on a CSV file")
    f.add_argument("model", choices=("tvp", "var"))
    f.add_argument("input", help="CSV file with a header row")
    f.add_argument("-o", "--out", default="fit_out")
    f.add_argument("--config", help="JSON file of settings; flags override it")
    f.add_argument("--iters", type=int)
    f.add_argument("--burnin", type=int)
    f.add_argument("--thin", type=int)
    f.add_argument("--prior", choices=("triple-gamma", "horseshoe"))
    f.add_argument("--symmetric-xi", dest="symmetric_xi", action="store_const", const=True)
    f.add_argument("--symmetric-tau", dest="symmetric_tau", action="store_const", const=True)
    f.add_argument("--interweave", action=argparse.BooleanOptionalAction, default=None)
    f.add_argument("--sv", action=argparse.BooleanOptionalAction, default=None,
                   help="stochastic volatility (default: on for var, off for tvp)")
    f.add_argument("--lags", type=int, help="VAR lag order")
    f.add_argument("--scheme", choices=("exact", "literal"), help="VAR row coupling")
    f.add_argument("--mh-v2", dest="mh_v2", type=float, help="initial MH proposal variance")
    f.add_argument("--adapt", action=argparse.BooleanOptionalAction, default=None)
    f.add_argument("--hyper", choices=("f", "gamma"), help="global hyperprior")
    f.add_argument("--alpha-a", dest="alpha_a", type=float)
    f.add_argument("--beta-a", dest="beta_a", type=float)
    f.add_argument("--alpha-c", dest="alpha_c", type=float)
    f.add_argument("--beta-c", dest="beta_c", type=float)
    f.add_argument("--seed", type=int)
    f.add_argument("--chains", type=int)
    f.add_argument("--response", help="tvp: response column (default: first)")
    f.add_argument("--intercept", action="store_const", const=True, help="tvp: add a constant regressor")
    f.set_defaults(func=cmd_fit)

    p = sub.add_parser("prior", help="density and shrinkage-profile grids")
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--kappa-b2", dest="kappa_b2", type=float, default=2.0)
    p.add_argument("--preset", choices=("horseshoe", "lasso", "double_gamma", "half_t", "half_cauchy",
                                        "normal", "strawderman_berger", "neg"))
    p.add_argument("--grid", default="0.001:4:500", help="sqrt(theta) grid lo:hi:n")
    p.add_argument("--profile-grid", dest="profile_grid", default="0.001:0.999:500")
    p.add_argument("--bands", action="store_true", help="profile bands over hyperprior draws of kappa_B2")
    p.add_argument("--hyper", choices=("f", "gamma"), default="f")
    p.add_argument("--draws", type=int, default=5000)
    p.add_argument("--biv", type=int, default=2000, help="bivariate profile samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default="prior_out")
    p.set_defaults(func=cmd_prior)

    c = sub.add_parser("check", help="joint-distribution and representation checks")
    c.add_argument("--quick", action="store_true")
    c.add_argument("--mutate", choices=("gkappa-rate",))
    c.add_argument("--n-outer", dest="n_outer", type=int)
    c.add_argument("--n-outer-var", dest="n_outer_var", type=int)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--verbose", action="store_true")
    c.add_argument("-o", "--out", default="check_out")
    c.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SamplerError, NumericalAccuracyError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UnsupportedCaseError,) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
