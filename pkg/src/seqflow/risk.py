"""Generalization risk, oracle stopping, and convergence-rate fitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .engine import EngineSettings, risk_curves
from .signals import EigenSchedule, SignalSpec, structure_report

__all__ = [
    "RiskSummary",
    "RateFit",
    "risk",
    "vanilla_risk_closed_form",
    "ideal_risk",
    "monte_carlo_risk",
    "oracle_stopping_search",
    "loglog_rate_fit",
    "export_summary_csv",
    "SUMMARY_COLUMNS",
]


@dataclass(frozen=True)
class RiskSummary:
    """Monte Carlo risk of one estimator at one sample size."""

    n: int
    mean_risk: float
    std_risk: float
    reps: int
    oracle_t: float
    estimator: str
    D: int = 0

    @property
    def sem_risk(self) -> float:
        return self.std_risk / math.sqrt(self.reps)


@dataclass(frozen=True)
class RateFit:
    """OLS fit of log(risk) on log(n); exponent is the positive decay rate."""

    exponent: float
    intercept: float
    stderr: float
    n_grid: tuple[int, ...]


def risk(theta_hat, theta_star) -> float:
    """Squared-error risk ``sum_j (theta_hat_j - theta*_j)**2``."""
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    theta_star = np.asarray(theta_star, dtype=np.float64)
    if theta_hat.shape != theta_star.shape:
        raise ValueError("theta_hat and theta_star must have equal length")
    d = theta_hat - theta_star
    return float(d @ d)


def vanilla_risk_closed_form(theta_star, lambdas, epsilon: float, t: float) -> dict:
    """Exact bias/variance decomposition of the vanilla estimator's risk."""
    if t < 0:
        raise ValueError("t must be non-negative")
    theta_star = np.asarray(theta_star, dtype=np.float64)
    lam = np.asarray(lambdas, dtype=np.float64)
    decay = np.exp(-lam * t)
    bias2 = float(np.sum((decay * theta_star) ** 2))
    variance = float(epsilon**2 * np.sum(np.expm1(-lam * t) ** 2))
    return {"bias2": bias2, "variance": variance, "total": bias2 + variance}


def ideal_risk(theta_star, epsilon: float) -> float:
    """Oracle-thresholding benchmark ``eps^2 Phi(eps) + Psi(eps)``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rep = structure_report(theta_star, epsilon)
    return epsilon**2 * rep.phi_of_delta + rep.psi_of_delta


def oracle_stopping_search(curve) -> tuple[float, float]:
    """Discrete argmin of a (t, risk) checkpoint curve, first minimum wins.

    Accepts a sequence of (t, risk) pairs or a (ts, risks) pair of arrays.
    """
    if isinstance(curve, tuple) and len(curve) == 2 and np.ndim(curve[0]) == 1:
        ts = np.asarray(curve[0], dtype=np.float64)
        rs = np.asarray(curve[1], dtype=np.float64)
    else:
        arr = np.asarray(curve, dtype=np.float64)
        if arr.size == 0:
            raise ValueError("empty risk curve")
        ts, rs = arr[:, 0], arr[:, 1]
    if ts.size == 0:
        raise ValueError("empty risk curve")
    i = int(np.argmin(rs))
    return float(ts[i]), float(rs[i])


def loglog_rate_fit(n_grid, risks) -> RateFit:
    """Least squares of log(risk) on log(n), reported as risk ~ n**(-rate)."""
    n_grid = np.asarray(n_grid, dtype=np.float64)
    risks = np.asarray(risks, dtype=np.float64)
    if n_grid.size < 3:
        raise ValueError("need at least 3 grid points")
    if np.any(risks <= 0):
        raise ValueError("risks must be positive for a log-log fit")
    x = np.log(n_grid)
    y = np.log(risks)
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ y) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = max(n_grid.size - 2, 1)
    stderr = math.sqrt(float(resid @ resid) / dof / sxx)
    return RateFit(
        exponent=-slope,
        intercept=intercept,
        stderr=stderr,
        n_grid=tuple(int(v) for v in n_grid),
    )


def monte_carlo_risk(
    spec: SignalSpec,
    schedule: EigenSchedule,
    estimator: str,
    n: int,
    reps: int,
    master_seed: int,
    D: int = 0,
    stopping: str = "oracle",
    settings: EngineSettings | None = None,
) -> RiskSummary:
    """Mean/std of risk over independent repetitions at ``eps = n**-0.5``.

    ``stopping="oracle"`` evaluates every repetition at the checkpoint
    minimizing the mean risk curve; ``stopping="schedule"`` evaluates at
    the theory stopping time.  Bit-reproducible from ``master_seed``.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if n < 2:
        raise ValueError("n must be at least 2")
    if stopping not in ("oracle", "schedule"):
        raise ValueError(f"unknown stopping rule {stopping!r}")
    settings = settings or EngineSettings(n_dense=schedule.N)
    curves = risk_curves(
        spec, schedule.gamma, n, reps, master_seed, estimator, D, settings
    )
    if stopping == "oracle":
        oracle_t, vals = curves.mean_curve_oracle()
    else:
        from .flows import make_schedule

        t_stop = make_schedule(n**-0.5, D if estimator == "op" else 0).t_stop
        t_stop = min(t_stop, curves.ts[-1])
        vals = curves.at_time(t_stop)
        oracle_t = t_stop
    return RiskSummary(
        n=n,
        mean_risk=float(vals.mean()),
        std_risk=float(vals.std(ddof=1)) if reps > 1 else 0.0,
        reps=reps,
        oracle_t=oracle_t,
        estimator=estimator,
        D=D if estimator == "op" else 0,
    )


SUMMARY_COLUMNS = [
    "estimator",
    "D",
    "p",
    "q",
    "gamma",
    "n",
    "reps",
    "mean_risk",
    "std_risk",
    "oracle_t",
    "exponent",
    "stderr",
]


def export_summary_csv(path, rows) -> None:
    """Write summary rows with the canonical column set."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in SUMMARY_COLUMNS})


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return v
