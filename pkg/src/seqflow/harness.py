"""Experiment harness: configured runs with reproducible CSV/JSON outputs.

Each run is a pure function of (config, seed): outputs are byte-identical
across repeats and thread counts.  A run directory holds the resolved
config snapshot, raw per-repetition risks, per-(estimator, n) summaries,
and the fitted convergence rates.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, fields

import numpy as np

from .engine import (
    EngineSettings,
    build_components,
    cell_stream,
    noise_matrix,
    risk_curves,
)
from .flows import checkpoint_times, integrate_deep, integrate_twolayer
from .flows import IntegratorConfig, export_trajectories_csv, make_schedule
from .risk import RateFit, RiskSummary, SUMMARY_COLUMNS, export_summary_csv, loglog_rate_fit
from .signals import SignalSpec, build_signal, noise_values
from .torus import (
    fit_adaptive_diagonal,
    fit_fixed_kernel_gf,
    make_fourier_design,
    make_torus_design,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config_file",
    "run_compare",
    "run_table",
    "run_eigtrace",
    "run_kernel2d",
]


class ConfigError(ValueError):
    """Invalid or unknown configuration input."""


def _int_tuple(s):
    return tuple(int(v) for v in s)


def _float_tuple(s):
    return tuple(float(v) for v in s)


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for every subcommand; unknown keys are rejected at parse time."""

    # truth signal and eigenvalues
    p: float = 1.0
    q: float = 2.0
    gamma: float = 1.5
    D: int = 0
    # sweep
    n_grid: tuple[int, ...] = tuple(range(2000, 4001, 200))
    reps: int = 64
    seed: int = 20240518
    estimators: tuple[str, ...] = ("vanilla", "op")
    output_dir: str = "runs"
    threads: int = 0
    # engine
    n_dense: int = 10_000
    tail: str = "truncate"
    rank_floor: float = 1.0 / 12.0
    op_search: float = 20.0
    vanilla_search: float = 30.0
    grid_ratio: float = 1.2
    euler_safety: float = 0.025
    rise_stop: float = 8.0
    eta_override: float = 0.0  # 0 means automatic
    # table sweeps
    p_list: tuple[float, ...] = (0.6, 1.0, 3.0)
    q_list: tuple[float, ...] = (1.0, 1.5, 2.0)
    gamma_list: tuple[float, ...] = (1.1, 2.0, 3.0)
    # eigenvalue traces
    n: int = 4000
    j_window: tuple[int, ...] = (100, 200)
    # torus kernel demo
    kd_n_grid: tuple[int, ...] = (1000,)
    kd_seeds: int = 16
    kd_sigma: float = 0.1
    kd_r: float = 2.0
    kd_freq: float = 7.5
    kd_basis_cut: float = 1e-4
    kd_cap: int = 5000
    kd_t_fixed: float = 2e5
    kd_t_adaptive: float = 5e3

    def validate(self) -> None:
        if not self.p > 0:
            raise ConfigError("p must be positive")
        if not self.q >= 1:
            raise ConfigError("q must be at least 1")
        if not self.gamma > 1:
            raise ConfigError("gamma must exceed 1")
        if self.D < 0:
            raise ConfigError("D must be non-negative")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if any(n < 2 for n in self.n_grid) or not self.n_grid:
            raise ConfigError("n_grid entries must be at least 2")
        bad = set(self.estimators) - {"vanilla", "op"}
        if bad or not self.estimators:
            raise ConfigError(f"unknown estimators: {sorted(bad)}")
        if self.tail not in ("truncate", "zeta"):
            raise ConfigError("tail must be 'truncate' or 'zeta'")
        if len(self.j_window) != 2 or self.j_window[0] < 1 or (
            self.j_window[1] < self.j_window[0]
        ):
            raise ConfigError("j_window must be (lo, hi) with 1 <= lo <= hi")
        if not self.kd_r > 1.0:
            raise ConfigError("kd_r must exceed d/2 = 1 for the 2-d torus demo")

    def engine_settings(self) -> EngineSettings:
        return EngineSettings(
            n_dense=self.n_dense,
            tail=self.tail,
            rank_floor=self.rank_floor,
            op_search=self.op_search,
            vanilla_search=self.vanilla_search,
            grid_ratio=self.grid_ratio,
            euler_safety=self.euler_safety,
            rise_stop=self.rise_stop,
            eta_override=self.eta_override if self.eta_override > 0 else None,
        )

    def signal_spec(self, p=None, q=None) -> SignalSpec:
        return SignalSpec(p=self.p if p is None else p, q=self.q if q is None else q)


_PARSERS = {
    "tuple[int, ...]": lambda v: _int_tuple(_split(v)),
    "tuple[float, ...]": lambda v: _float_tuple(_split(v)),
    "tuple[str, ...]": lambda v: tuple(_split(v)),
}


def _split(v: str) -> list[str]:
    if ":" in v and "," not in v:
        parts = v.split(":")
        if len(parts) == 3:
            lo, hi, step = (int(float(x)) for x in parts)
            return [str(x) for x in range(lo, hi + 1, step)]
        if len(parts) == 2:
            return [p for p in parts]
    return [p.strip() for p in v.split(",") if p.strip()]


def _coerce(name: str, raw: str) -> object:
    ftypes = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in ftypes:
        raise ConfigError(f"unknown config key: {name!r}")
    t = ftypes[name]
    try:
        if t in ("int",):
            return int(raw)
        if t in ("float",):
            return float(raw)
        if t in ("str",):
            return raw.strip()
        return _PARSERS[t](raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"cannot parse {name}={raw!r}: {exc}") from exc


def parse_config_file(path=None, overrides=None, **direct) -> ExperimentConfig:
    """Flat key=value config with '#' comments; overrides win over the file."""
    values: dict[str, object] = {}
    if path is not None:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, raw = (s.strip() for s in line.split("=", 1))
                values[key] = _coerce(key, raw)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = (s.strip() for s in item.split("=", 1))
        values[key] = _coerce(key, raw)
    values.update(direct)
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


def _prepare_dir(cfg: ExperimentConfig, name: str) -> str:
    out = os.path.join(cfg.output_dir, name)
    os.makedirs(out, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    with open(os.path.join(out, "config.txt"), "w") as fh:
        for f in fields(cfg):
            v = getattr(cfg, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            fh.write(f"{f.name} = {v}\n")
    if cfg.threads > 0:
        import numba

        numba.set_num_threads(cfg.threads)
    return out


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _summary_row(cfg, p, q, gamma, summ: RiskSummary, fit: RateFit | None):
    return {
        "estimator": summ.estimator,
        "D": summ.D,
        "p": p,
        "q": q,
        "gamma": gamma,
        "n": summ.n,
        "reps": summ.reps,
        "mean_risk": summ.mean_risk,
        "std_risk": summ.std_risk,
        "oracle_t": summ.oracle_t,
        "exponent": fit.exponent if fit else "",
        "stderr": fit.stderr if fit else "",
    }


def _sweep_cell(spec, gamma, cfg: ExperimentConfig, estimators, D):
    """Risk summaries over cfg.n_grid, instances shared across estimators."""
    settings = cfg.engine_settings()
    out = {est: [] for est in estimators}
    raw = []
    for n in cfg.n_grid:
        eps = n**-0.5
        model = build_components(spec, gamma, eps, settings)
        xi = noise_matrix(model, cfg.reps, cfg.seed, cell_stream(spec, gamma, n))
        for est in estimators:
            curves = risk_curves(
                spec, gamma, n, cfg.reps, cfg.seed, est, D,
                settings, model=model, xi=xi,
            )
            t_star, vals = curves.mean_curve_oracle()
            summ = RiskSummary(
                n=n,
                mean_risk=float(vals.mean()),
                std_risk=float(vals.std(ddof=1)) if cfg.reps > 1 else 0.0,
                reps=cfg.reps,
                oracle_t=t_star,
                estimator=est,
                D=D if est == "op" else 0,
            )
            out[est].append(summ)
            sched_t = min(
                make_schedule(eps, D if est == "op" else 0).t_stop, curves.ts[-1]
            )
            sched_vals = curves.at_time(sched_t)
            for rep, v in enumerate(vals):
                raw.append(
                    {
                        "estimator": est,
                        "D": D if est == "op" else 0,
                        "n": n,
                        "rep": rep,
                        "risk_oracle": v,
                        "oracle_t": t_star,
                        "risk_schedule": sched_vals[rep],
                        "schedule_t": sched_t,
                    }
                )
    return out, raw


def _write_raw(path, raw_rows) -> None:
    cols = [
        "estimator", "D", "n", "rep",
        "risk_oracle", "oracle_t", "risk_schedule", "schedule_t",
    ]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in raw_rows:
            w.writerow({k: _fmtv(row[k]) for k in cols})


def _fmtv(v):
    return f"{v:.12g}" if isinstance(v, float) else v


# ---------------------------------------------------------------------------
# subcommand runners
# ---------------------------------------------------------------------------


def run_compare(cfg: ExperimentConfig) -> dict:
    """Vanilla vs over-parameterized risk rates on one (p, q, gamma) cell."""
    cfg.validate()
    out = _prepare_dir(cfg, "compare")
    spec = cfg.signal_spec()
    summaries, raw = _sweep_cell(spec, cfg.gamma, cfg, cfg.estimators, cfg.D)
    rows, fits = [], {}
    for est, summs in summaries.items():
        fit = loglog_rate_fit([s.n for s in summs], [s.mean_risk for s in summs])
        fits[est] = fit
        for s in summs:
            rows.append(_summary_row(cfg, cfg.p, cfg.q, cfg.gamma, s, fit))
    export_summary_csv(os.path.join(out, "summary.csv"), rows)
    _write_raw(os.path.join(out, "risks_raw.csv"), raw)
    result = {
        "exponents": {est: fits[est].exponent for est in fits},
        "stderr": {est: fits[est].stderr for est in fits},
        "mean_risks": {
            est: [s.mean_risk for s in summaries[est]] for est in summaries
        },
        "sem_risks": {
            est: [s.sem_risk for s in summaries[est]] for est in summaries
        },
        "std_risks": {
            est: [s.std_risk for s in summaries[est]] for est in summaries
        },
        "oracle_ts": {est: [s.oracle_t for s in summaries[est]] for est in summaries},
        "n_grid": list(cfg.n_grid),
    }
    if "op" in summaries:
        tfit = loglog_rate_fit(
            [s.n for s in summaries["op"]], [s.oracle_t for s in summaries["op"]]
        )
        result["oracle_t_slope"] = -tfit.exponent
    _write_json(os.path.join(out, "summary.json"), result)
    return result


def run_table(cfg: ExperimentConfig) -> dict:
    """Fitted convergence-rate exponent per (p, q, gamma) cell, op only."""
    cfg.validate()
    out = _prepare_dir(cfg, f"table_D{cfg.D}")
    rows, cells = [], []
    for p in cfg.p_list:
        for q in cfg.q_list:
            for gamma in cfg.gamma_list:
                spec = cfg.signal_spec(p=p, q=q)
                summaries, _ = _sweep_cell(spec, gamma, cfg, ("op",), cfg.D)
                summs = summaries["op"]
                fit = loglog_rate_fit(
                    [s.n for s in summs], [s.mean_risk for s in summs]
                )
                cells.append(
                    {
                        "p": p,
                        "q": q,
                        "gamma": gamma,
                        "D": cfg.D,
                        "reps": cfg.reps,
                        "exponent": fit.exponent,
                        "stderr": fit.stderr,
                    }
                )
                for s in summs:
                    rows.append(_summary_row(cfg, p, q, gamma, s, fit))
    export_summary_csv(os.path.join(out, "summary.csv"), rows)
    with open(os.path.join(out, "rate_table.csv"), "w", newline="") as fh:
        w = csv.DictWriter(
            fh, fieldnames=["p", "q", "gamma", "D", "reps", "exponent", "stderr"]
        )
        w.writeheader()
        for c in cells:
            w.writerow({k: _fmtv(v) for k, v in c.items()})
    result = {"cells": cells}
    _write_json(os.path.join(out, "summary.json"), result)
    return result


def run_eigtrace(cfg: ExperimentConfig) -> dict:
    """Eigen-term trajectories a_j(t) b_j(t)^D for a window of components."""
    cfg.validate()
    out = _prepare_dir(cfg, f"eigtrace_D{cfg.D}")
    spec = cfg.signal_spec()
    n = cfg.n
    eps = n**-0.5
    sched = make_schedule(eps, cfg.D)
    lo, hi = cfg.j_window
    theta_star = build_signal(spec, hi)
    idx = np.arange(lo, hi + 1, dtype=np.int64)
    stream = cell_stream(spec, cfg.gamma, n)
    xi = noise_values(cfg.seed, 0, idx, eps, stream=stream)
    zmax = float(np.max(np.abs(theta_star[idx - 1] + xi)))
    L0 = lo ** (-cfg.gamma) + 2 * zmax + sched.b0 ** (2 * cfg.D) * (1 + zmax) ** 2
    ts = np.unique(
        np.append(
            checkpoint_times(cfg.euler_safety / L0, sched.t_stop, cfg.grid_ratio),
            sched.t_stop,
        )
    )
    icfg = IntegratorConfig(record_times=ts, method="euler")
    trajectories = []
    marks = []
    exp_mark = (cfg.D + 1.0) / (cfg.D + 2.0)
    for i, j in enumerate(idx):
        lam = float(j) ** (-cfg.gamma)
        z = theta_star[j - 1] + xi[i]
        if cfg.D == 0:
            traj = integrate_twolayer(lam, z, icfg)
        else:
            traj = integrate_deep(lam, sched.b0, cfg.D, z, icfg)
        trajectories.append(traj)
        marks.append(
            {
                "component_index": int(j),
                "theta_star": theta_star[j - 1],
                "lambda": lam,
                "signal_mark": abs(theta_star[j - 1]) ** exp_mark,
                "final_eigen_term": float(traj.eigen_term[-1]),
            }
        )
    export_trajectories_csv(os.path.join(out, "eigtrace.csv"), trajectories, idx)
    with open(os.path.join(out, "marks.csv"), "w", newline="") as fh:
        w = csv.DictWriter(
            fh,
            fieldnames=[
                "component_index", "theta_star", "lambda",
                "signal_mark", "final_eigen_term",
            ],
        )
        w.writeheader()
        for m in marks:
            w.writerow({k: _fmtv(v) for k, v in m.items()})
    result = {
        "n": n,
        "epsilon": eps,
        "b0": sched.b0,
        "t_stop": sched.t_stop,
        "marks": marks,
    }
    _write_json(os.path.join(out, "summary.json"), result)
    return {"trajectories": trajectories, "indices": idx, **result}


def run_kernel2d(cfg: ExperimentConfig) -> dict:
    """Fixed vs adaptive kernel flow on f(x) = sin(freq pi x1), d = 2."""
    cfg.validate()
    out = _prepare_dir(cfg, "kernel2d")
    freq = cfg.kd_freq

    def f_true(X):
        return np.sin(freq * np.pi * X[:, 0])

    basis = make_fourier_design(2, cfg.kd_r, cfg.kd_basis_cut, cfg.kd_cap)
    grid_fixed = np.geomspace(0.5, cfg.kd_t_fixed, 45)
    grid_adapt = np.geomspace(0.5, cfg.kd_t_adaptive, 40)
    rows, records = [], []
    for n in cfg.kd_n_grid:
        for s in range(cfg.kd_seeds):
            seed = cfg.seed + 1000 * s
            design = make_torus_design(2, n, f_true, cfg.kd_sigma, seed)
            holdout = make_torus_design(2, n, f_true, cfg.kd_sigma, seed + 7919)
            fits = {
                "fixed": fit_fixed_kernel_gf(design, basis, grid_fixed, holdout),
                "adaptive": fit_adaptive_diagonal(
                    design, basis, cfg.D, grid_adapt, holdout
                ),
            }
            rec = {"n": n, "seed": s}
            for name, fit in fits.items():
                i = int(np.argmin(fit.holdout_risk))
                rec[f"{name}_oracle_t"] = float(fit.ts[i])
                rec[f"{name}_oracle_risk"] = float(fit.holdout_risk[i])
                top = np.argsort(-np.abs(fit.coeffs[-1]))[:8]
                for k, t in enumerate(fit.ts):
                    rows.append(
                        {
                            "method": name,
                            "seed": s,
                            "n": n,
                            "t": t,
                            "train_loss": fit.train_loss[k],
                            "holdout_risk": fit.holdout_risk[k],
                            **{
                                f"coef_{rkk + 1}": fit.coeffs[k, jj]
                                for rkk, jj in enumerate(top)
                            },
                        }
                    )
            records.append(rec)
    cols = ["method", "seed", "n", "t", "train_loss", "holdout_risk"] + [
        f"coef_{i+1}" for i in range(8)
    ]
    with open(os.path.join(out, "kernel2d.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmtv(row.get(k, "")) for k in cols})
    with open(os.path.join(out, "kernel2d_summary.csv"), "w", newline="") as fh:
        cols2 = [
            "n", "seed", "fixed_oracle_t", "fixed_oracle_risk",
            "adaptive_oracle_t", "adaptive_oracle_risk",
        ]
        w = csv.DictWriter(fh, fieldnames=cols2)
        w.writeheader()
        for rec in records:
            w.writerow({k: _fmtv(rec[k]) for k in cols2})
    wins = sum(
        1 for r in records if r["adaptive_oracle_risk"] <= r["fixed_oracle_risk"]
    )
    result = {
        "records": records,
        "adaptive_wins": wins,
        "total": len(records),
        "basis_size": basis.M,
    }
    _write_json(os.path.join(out, "summary.json"), result)
    return result
