"""Experiment configuration, subcommand pipelines and report files.

A run is fully described by an ``ExperimentConfig``; ``run_experiment``
dispatches on ``config.command`` and returns an ``ExperimentReport`` which
``emit_report`` writes as ``results.csv`` and ``manifest.json``.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, sampler
from .bgmeasure import BGMeasure
from .errors import ConfigError, DirectnessViolation, TailwalkError
from .residual import ResidualLaw
from .steplaw import CANONICAL, StepLaw

COMMANDS = ("constants", "dichotomy", "sample", "naive", "hitting", "certify-c", "crosscheck")
DEFAULT_ALPHA_GRID = (1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9)
RNG_SCHEME = "numpy PCG64, stream = SeedSequence(seed, spawn_key=(*arm, replication))"


def _version():
    from . import __version__
    return __version__


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one run."""

    command: str
    step: StepLaw
    b: float = 1.0
    c: float | str = 0.0
    seed: int = 0
    replications: int = 1000
    horizon: int = 10_000
    guard: int = sampler.DEFAULT_GUARD
    strict: bool = True
    restrict_to_horizon: bool = False
    stop_on_guard: bool = False
    max_attempts: int | None = None
    t_grid: list | None = None
    alpha_grid: list | None = None
    b_grid: list | None = None
    hill_k: int | None = None
    certify_t_max: float | None = None
    certify_grid_size: int = 200
    workers: int = 1
    out: str | None = None

    # fields that do not change results
    _NEUTRAL = ("workers", "out")

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if not isinstance(self.step, StepLaw):
            self.step = _parse_step(self.step)
        for name in ("replications", "horizon", "guard", "workers", "certify_grid_size"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
            setattr(self, name, int(value))
        if self.max_attempts is not None and int(self.max_attempts) < 1:
            raise ConfigError("max_attempts must be positive")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not (isinstance(self.b, (int, float)) and math.isfinite(self.b) and self.b >= 0):
            raise ConfigError(f"b must be a finite nonnegative number, got {self.b!r}")
        self.b = float(self.b)
        if self.c != "auto":
            if not isinstance(self.c, (int, float)) or not math.isfinite(self.c) or self.c < 0:
                raise ConfigError(f"c must be a nonnegative number or 'auto', got {self.c!r}")
            self.c = float(self.c)
        for name in ("t_grid", "alpha_grid", "b_grid"):
            grid = getattr(self, name)
            if grid is not None:
                try:
                    grid = [float(x) for x in grid]
                except (TypeError, ValueError):
                    raise ConfigError(f"{name} must be a list of numbers") from None
                if not grid:
                    raise ConfigError(f"{name} is empty")
                setattr(self, name, grid)

    @classmethod
    def from_dict(cls, d, **overrides):
        d = {**d, **{k: v for k, v in overrides.items() if v is not None}}
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config fields {unknown}")
        if "command" not in d or "step" not in d:
            raise ConfigError("config needs 'command' and 'step'")
        return cls(**d)

    @classmethod
    def load(cls, path, **overrides):
        try:
            d = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d, **overrides)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["step"] = self.step.to_dict()
        return d

    def config_hash(self):
        d = {k: v for k, v in self.to_dict().items() if k not in self._NEUTRAL}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _parse_step(value):
    if isinstance(value, str):
        if value in CANONICAL:
            return CANONICAL[value]
        raise ConfigError(f"unknown canonical step law {value!r}")
    if isinstance(value, dict):
        try:
            return StepLaw.from_dict(value)
        except TailwalkError as exc:
            raise ConfigError(f"bad step law: {exc}") from None
    raise ConfigError("step must be a law name or a JSON object")


@dataclass
class ExperimentReport:
    command: str
    columns: tuple
    rows: list
    estimates: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    paths: list = field(default_factory=list, repr=False)

    @property
    def exit_code(self):
        """0 when clean; 3 for likelihood ratios above one in a strict or certified run; 5 for guard hits."""
        d = self.diagnostics
        if d.get("violations", 0) and d.get("directness_required", False):
            return DirectnessViolation.exit_code
        if d.get("guard_hits", 0):
            return 5
        return 0

    def metadata(self):
        return {"command": self.command, "estimates": self.estimates,
                "diagnostics": self.diagnostics, "manifest": self.manifest}


# -- helpers ------------------------------------------------------------------------

def _measure(cfg, b=None):
    """BGMeasure for the config, resolving c = "auto" by certification."""
    measure = BGMeasure(cfg.step, cfg.b if b is None else b, 0.0)
    info = {"c_requested": cfg.c}
    if cfg.c == "auto":
        c = measure.certify_c(cfg.certify_t_max, cfg.certify_grid_size)
        info.update(c_resolved=c, certified=True,
                    certify_t_max=float(measure.certification["grid"][-1]))
    else:
        c = cfg.c
        info.update(c_resolved=c, certified=False)
    return measure.with_c(c), info


def _payload(cfg, measure=None, **extra):
    d = {"b": cfg.b, "horizon": cfg.horizon, "guard": cfg.guard, "strict": cfg.strict,
         "max_attempts": cfg.max_attempts, "step": cfg.step.to_dict()}
    if measure is not None:
        d["measure"] = measure.to_dict()
    d.update(extra)
    return d


def _run(cfg, kind, payload, key=()):
    return sampler.run_replications(kind, payload, cfg.seed, cfg.replications, key=key,
                                    workers=cfg.workers, stop_on_guard=cfg.stop_on_guard)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan
    return float(x.mean()), se


def _path_stats(paths, b):
    crossed = [p for p in paths if p.crossed]
    tau = np.array([p.tau for p in crossed], dtype=float)
    over = np.array([p.s_tau - b for p in crossed])
    mean_tau, se_tau = _mean_se(tau)
    out = {"n_crossed": len(crossed), "mean_tau": mean_tau, "se_tau": se_tau,
           "median_tau": float(np.median(tau)) if tau.size else math.nan}
    if over.size:
        q = np.quantile(over, [0.1, 0.5, 0.9])
        out.update(overshoot_q10=float(q[0]), overshoot_q50=float(q[1]), overshoot_q90=float(q[2]))
    return out


def _rate(successes, attempts):
    """Success fraction with a binomial standard error."""
    p = successes / attempts
    return p, math.sqrt(max(p * (1 - p), 0.0) / attempts)


# -- pipelines ----------------------------------------------------------------------

def _constants(cfg):
    grid = cfg.alpha_grid or list(DEFAULT_ALPHA_GRID)
    rows = []
    for a in grid:
        thr = analysis.threshold_integral(a)
        k = analysis.k_alpha(a)
        ident = analysis.k_alpha_identity(a)
        rows.append({"alpha_or_t": a, "threshold_integral": thr, "a_integral": analysis.a_integral(a),
                     "k_alpha": k, "k_identity": ident, "identity_gap": k - ident,
                     "sign_agrees": int(np.sign(k) == np.sign(thr))})
    root = analysis.threshold_root()
    est = {"threshold_root": root, "threshold_at_root": analysis.threshold_integral(root),
           "max_identity_gap": max(abs(r["identity_gap"]) for r in rows),
           "signs_agree": all(r["sign_agrees"] for r in rows)}
    cols = ("alpha_or_t", "threshold_integral", "a_integral", "k_alpha", "k_identity",
            "identity_gap", "sign_agrees")
    return ExperimentReport(cfg.command, cols, rows, est, {})


DECOMPOSITION_COLUMNS = ("alpha_or_t", "p", "q", "eps1", "eps2", "difference", "ratio_to_K")


def _default_t_grid(res):
    t0 = max(16.0, 4.0 * (res.z0 + 1.0))
    return list(analysis.doubling_grid(t0, 1e16))


def _dichotomy(cfg):
    res = ResidualLaw(cfg.step)
    grid = cfg.t_grid or _default_t_grid(res)
    alpha = cfg.step.alpha
    k = analysis.k_alpha(alpha) if 1.0 < alpha < 2.0 else math.nan
    rows = []
    for t in grid:
        d = analysis.decomposition(res, t)
        ratio = d.difference / (res.tail(t) * cfg.step.sf(t))
        rows.append({"alpha_or_t": t, "p": d.p, "q": d.q, "eps1": d.eps1, "eps2": d.eps2,
                     "difference": d.difference, "ratio_to_K": ratio / k if k else math.nan})
    diff = [r["difference"] for r in rows]
    expected = -1.0 if alpha < 1.5 else 1.0
    onset = analysis.sign_onset(grid, diff, expected)
    last = rows[-1]
    pq = last["p"] - last["q"]
    est = {"k_alpha": k, "expected_sign": expected, "onset": onset,
           "signs_hold_from_onset": onset is not None,
           "ratio_to_K_last": last["ratio_to_K"], "t_last": grid[-1],
           "eps1_share_last": abs(last["eps1"] / pq) if pq else math.nan,
           "eps2_share_last": abs(last["eps2"] / pq) if pq else math.nan}
    diag = {}
    if cfg.c == "auto":
        _, info = _measure(cfg)
        est.update(info)
    return ExperimentReport(cfg.command, DECOMPOSITION_COLUMNS, rows, est, diag)


def _certify(cfg):
    measure = BGMeasure(cfg.step, cfg.b, 0.0)
    c = measure.certify_c(cfg.certify_t_max, cfg.certify_grid_size)
    cert = measure.certification
    rows = [{"t": float(t), "difference": float(d), "certified": int(t >= c)}
            for t, d in zip(cert["grid"], cert["difference"])]
    return ExperimentReport(cfg.command, ("t", "difference", "certified"), rows,
                            {"c_resolved": c, "certified": True}, {})


def _sample(cfg):
    measure, info = _measure(cfg)
    horizon = cfg.horizon if cfg.restrict_to_horizon else None
    paths = _run(cfg, "ar_sample", _payload(cfg, measure, horizon=horizon))
    attempts = sum(p.attempts for p in paths)
    rate, se = _rate(len(paths), attempts)
    est = {**info, "accepted": len(paths), "attempts": attempts, "rejected": attempts - len(paths),
           "acceptance_rate": rate, "acceptance_se": se, **_path_stats(paths, cfg.b)}
    diag = {"violations": sum(p.violations for p in paths), "guard_hits": 0,
            "directness_required": cfg.strict or info["certified"]}
    return ExperimentReport(cfg.command, sampler.CSV_FIELDS, [p.row() for p in paths], est, diag,
                            paths=paths)


def _naive(cfg):
    paths = _run(cfg, "naive", _payload(cfg))
    attempts = sum(p.attempts for p in paths)
    rate, se = _rate(len(paths), attempts)
    est = {"kept": len(paths), "attempts": attempts, "crossing_frequency": rate,
           "crossing_se": se, **_path_stats(paths, cfg.b)}
    return ExperimentReport(cfg.command, sampler.CSV_FIELDS, [p.row() for p in paths], est, {},
                            paths=paths)


HITTING_COLUMNS = ("b", "replications", "mean_tau", "se_tau", "median_tau", "max_tau",
                   "guard_hits", "truncated", "violations", "accept_frequency", "accept_probability",
                   "accept_probability_se", "pv", "pv_ratio", "hill_index", "max_growth")


def _hitting(cfg):
    grid = cfg.b_grid or [cfg.b]
    base, info = _measure(cfg)
    rows, paths_by_b = [], {}
    hits = viol = truncated = 0
    limit = min(cfg.guard, cfg.horizon) if cfg.restrict_to_horizon else cfg.guard
    for j, b in enumerate(grid):
        measure = base.__class__(cfg.step, b, base.c, base.quadrature_tol)
        horizon = cfg.horizon if cfg.restrict_to_horizon else None
        payload = _payload(cfg, measure, b=b, horizon=horizon, strict=False)
        paths = _run(cfg, "ar", payload, key=(j,))
        paths_by_b[b] = paths
        tau = np.array([p.tau for p in paths], dtype=float)
        lr = np.array([p.log_lr for p in paths])
        crossed = np.array([p.crossed for p in paths])
        # acceptance probability of each path given the path, i.e. min(1, LR) on crossing
        prob = np.where(crossed, np.exp(np.minimum(lr, 0.0)), 0.0)
        g = int(np.count_nonzero([p.guard_hit for p in paths]))
        cut = int(np.count_nonzero(~crossed)) - g
        v = int(np.count_nonzero(lr > 0.0))
        hits += g
        truncated += cut
        viol += v
        mean_tau, se_tau = _mean_se(tau)
        acc, acc_se = _mean_se(prob)
        pv = analysis.pv_estimate(cfg.step, b)
        k = cfg.hill_k or max(1, tau.size // 2)
        hill = analysis.hill_estimator(tau, k, censor_at=limit) if tau.size > k else math.nan
        rows.append({"b": b, "replications": tau.size, "mean_tau": mean_tau, "se_tau": se_tau,
                     "median_tau": float(np.median(tau)), "max_tau": float(tau.max()),
                     "guard_hits": g, "truncated": cut, "violations": v,
                     "accept_frequency": float(np.mean([p.accepted for p in paths])),
                     "accept_probability": acc, "accept_probability_se": acc_se, "pv": pv,
                     "pv_ratio": pv / acc if acc > 0 else math.nan, "hill_index": hill,
                     "max_growth": analysis.max_growth(tau) if tau.size >= 2 else math.nan})
    est = dict(info)
    if len(grid) >= 2:
        fit = analysis.linear_fit(grid, [r["mean_tau"] for r in rows])
        est.update(tau_slope=fit.slope, tau_intercept=fit.intercept, tau_r2=fit.r2)
        dev = [abs(r["pv_ratio"] - 1.0) for r in rows]
        est["pv_ratio_monotone"] = bool(all(x >= y for x, y in zip(dev, dev[1:])))
    diag = {"guard_hits": hits, "truncated": truncated, "violations": viol,
            "directness_required": info["certified"],
            "stopped_on_guard": bool(cfg.stop_on_guard and hits > 0)}
    report = ExperimentReport(cfg.command, HITTING_COLUMNS, rows, est, diag)
    report.paths = paths_by_b
    return report


CROSSCHECK_COLUMNS = ("arm",) + sampler.CSV_FIELDS


def _crosscheck(cfg):
    measure, info = _measure(cfg)
    ar = _run(cfg, "ar_sample", _payload(cfg, measure, horizon=cfg.horizon), key=(0,))
    naive = _run(cfg, "naive", _payload(cfg), key=(1,))
    est = dict(info)
    for name, paths in (("ar", ar), ("naive", naive)):
        attempts = sum(p.attempts for p in paths)
        rate, se = _rate(len(paths), attempts)
        est[f"{name}_attempts"] = attempts
        est[f"{name}_rate"] = rate
        est[f"{name}_rate_se"] = se
    gap = abs(est["ar_rate"] - est["naive_rate"])
    sd = math.hypot(est["ar_rate_se"], est["naive_rate_se"])
    est["rate_z"] = gap / sd if sd > 0 else (0.0 if gap == 0 else math.inf)
    for what, get in (("tau", lambda p: p.tau), ("overshoot", lambda p: p.s_tau - cfg.b)):
        ks = analysis.ks_two_sample([get(p) for p in ar], [get(p) for p in naive])
        est[f"ks_{what}"] = ks.statistic
        est[f"ks_{what}_threshold"] = ks.threshold
        est[f"ks_{what}_pvalue"] = ks.pvalue
        est[f"ks_{what}_same"] = ks.same
    rows = [{"arm": "ar", **p.row()} for p in ar] + [{"arm": "naive", **p.row()} for p in naive]
    diag = {"violations": sum(p.violations for p in ar), "guard_hits": 0,
            "directness_required": cfg.strict or info["certified"]}
    report = ExperimentReport(cfg.command, CROSSCHECK_COLUMNS, rows, est, diag)
    report.paths = {"ar": ar, "naive": naive}
    return report


PIPELINES = {"constants": _constants, "dichotomy": _dichotomy, "sample": _sample, "naive": _naive,
             "hitting": _hitting, "certify-c": _certify, "crosscheck": _crosscheck}


def manifest_for(cfg, report):
    import numba
    import scipy

    return {"command": cfg.command, "seed": cfg.seed, "config": cfg.to_dict(),
            "config_hash": cfg.config_hash(),
            "c_resolved": report.estimates.get("c_resolved"), "rng": RNG_SCHEME,
            "versions": {"tailwalk": _version(), "numpy": np.__version__,
                         "scipy": scipy.__version__, "numba": numba.__version__,
                         "python": platform.python_version()}}


def run_experiment(config):
    """Run the pipeline named by ``config.command``; writes files when ``config.out`` is set."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    report = PIPELINES[config.command](config)
    report.manifest = manifest_for(config, report)
    report.diagnostics.setdefault("violations", 0)
    report.diagnostics.setdefault("guard_hits", 0)
    report.diagnostics["exit_code"] = report.exit_code
    if config.out is not None:
        emit_report(report, config.out)
    return report


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def emit_report(report, out, format="both"):
    """Write ``results.csv`` and/or ``manifest.json`` under directory ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if format in ("csv", "both"):
        path = out / "results.csv"
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(report.columns), lineterminator="\n")
            writer.writeheader()
            for row in report.rows:
                writer.writerow({k: _cell(row[k]) for k in report.columns})
        written.append(path)
    if format in ("json", "both"):
        path = out / "manifest.json"
        path.write_text(json.dumps(_jsonable(report.metadata()), indent=2, sort_keys=True) + "\n")
        written.append(path)
    if not written:
        raise ValueError(f"unknown report format {format!r}")
    return written
