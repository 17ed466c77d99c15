"""Per-component gradient flows for the factored estimator ``a * b**D * beta``.

The two-layer flow (D=0) trains ``(a, beta)`` from ``a(0) = sqrt(lambda)``,
``beta(0) = 0``; the deep flow adds a shared depth factor ``b`` starting at
``b0``.  Closed forms used as oracles live here too: the vanilla
exponential-smoothing estimator, the comparison solution ``theta_tilde``
that sandwiches the two-layer flow, and the escape/crossing time bounds of
the noise and signal phases.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = [
    "NumericalAbort",
    "FlowState",
    "IntegratorConfig",
    "Schedule",
    "Trajectory",
    "EscapeTimeBounds",
    "vanilla_estimate",
    "theta_tilde",
    "lipschitz_bound",
    "integrate_twolayer",
    "integrate_deep",
    "escape_time_bounds",
    "eigen_term",
    "make_schedule",
    "checkpoint_times",
    "export_trajectories_csv",
]


class NumericalAbort(RuntimeError):
    """Integration aborted: conservation drift or divergence."""


@dataclass(frozen=True)
class FlowState:
    """Snapshot of one component's trainable triple at time t."""

    a: float
    b: float
    beta: float
    t: float
    D: int
    lam: float
    b0: float

    @property
    def theta(self) -> float:
        return self.a * self.b**self.D * self.beta


@dataclass(frozen=True)
class IntegratorConfig:
    """Discretization settings for the reference integrators.

    ``eta=None`` picks the stability step ``safety / L`` automatically with
    safety 0.05 for euler and 0.01 for rk4, where L is the conservative
    local-Lipschitz estimate of :func:`lipschitz_bound`.  An explicit eta
    must satisfy ``eta * L <= 0.1``.
    """

    record_times: np.ndarray
    eta: float | None = None
    method: str = "euler"
    drift_tol: float | None = None  # default: 1e-6 for rk4, 5e-2 for euler

    def __post_init__(self):
        if self.method not in ("euler", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.drift_tol is None:
            object.__setattr__(
                self, "drift_tol", 1e-6 if self.method == "rk4" else 5e-2
            )
        ts = np.asarray(self.record_times, dtype=np.float64)
        if ts.ndim != 1 or ts.size == 0:
            raise ValueError("record_times must be a non-empty 1-d grid")
        if np.any(ts < 0) or np.any(np.diff(ts) <= 0):
            raise ValueError("record_times must be non-negative and increasing")
        object.__setattr__(self, "record_times", ts)


@dataclass(frozen=True)
class Schedule:
    """Theory stopping schedule: ``b0 = eps**(1/(D+2))``, unit constants."""

    epsilon: float
    D: int
    b0: float
    t_stop: float


@dataclass(frozen=True)
class Trajectory:
    """Checkpointed states of one component's flow."""

    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    beta: np.ndarray
    D: int
    lam: float
    b0: float
    z: float
    max_drift_a: float
    max_drift_b: float

    @property
    def theta(self) -> np.ndarray:
        return self.a * self.b**self.D * self.beta

    @property
    def eigen_term(self) -> np.ndarray:
        return self.a * self.b**self.D


@dataclass(frozen=True)
class EscapeTimeBounds:
    T1_lower: float
    T2_lower: float
    T12_lower: float
    Tsig_upper: float


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def vanilla_estimate(z, lambdas, t: float):
    """Exponential-smoothing estimator ``(1 - exp(-lambda_j t)) z_j``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    z = np.asarray(z, dtype=np.float64)
    lam = np.asarray(lambdas, dtype=np.float64)
    if z.shape != lam.shape:
        raise ValueError("z and lambdas must have equal length")
    return -np.expm1(-lam * t) * z


def theta_tilde(lam: float, z: float, t: float) -> float:
    """Closed-form solution of ``d/dt x = (lam + 2|x|)(z - x)``, x(0)=0.

    Overflow-safe: for exponents above 300 the expression is evaluated in
    terms of ``exp(-x)`` instead of ``exp(x)``.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    az = abs(z)
    x = (2.0 * az + lam) * t
    if x > 300.0:
        einv = math.exp(-x)
        return lam * (1.0 - einv) / (2.0 * az * einv + lam) * z
    e = math.exp(x)
    return lam * (e - 1.0) / (2.0 * az + lam * e) * z


def lipschitz_bound(lam: float, z: float, b0: float, D: int) -> float:
    """Conservative stiffness estimate for step-size selection."""
    az = abs(z)
    return lam + 2.0 * az + b0 ** (2 * D) * (1.0 + az) ** 2


def checkpoint_times(t_start: float, t_stop: float, ratio: float = 1.2) -> np.ndarray:
    """Geometric checkpoint grid from t_start up to and including t_stop."""
    if not (t_start > 0 and t_stop > t_start and ratio > 1):
        raise ValueError("need 0 < t_start < t_stop and ratio > 1")
    count = int(np.ceil(np.log(t_stop / t_start) / np.log(ratio)))
    ts = t_start * ratio ** np.arange(count)
    return np.append(ts[ts < t_stop * (1 - 1e-12)], t_stop)


# ---------------------------------------------------------------------------
# reference integrators
# ---------------------------------------------------------------------------

_SAFETY = {"euler": 0.05, "rk4": 0.01}


def _integrate(lam, b0, D, z, cfg: IntegratorConfig) -> Trajectory:
    if lam <= 0:
        raise ValueError("lam must be positive (a(0) = sqrt(lam) > 0)")
    if b0 <= 0:
        raise ValueError("b0 must be positive")
    L = lipschitz_bound(lam, z, b0, D)
    if cfg.eta is None:
        eta = _SAFETY[cfg.method] / L
    else:
        eta = cfg.eta
        if eta * L > 0.1:
            raise ValueError(
                f"eta={eta:g} violates the stability bound 0.1/L with L={L:g}"
            )
    a, b, beta, drift_a, drift_b, ok = _kernels.flow_path(
        float(lam),
        float(b0),
        int(D),
        float(z),
        np.asarray(cfg.record_times, dtype=np.float64),
        float(eta),
        cfg.method == "rk4",
        1e-13,
    )
    if not ok:
        raise NumericalAbort(
            f"flow diverged (lam={lam:g}, z={z:g}, D={D}, eta={eta:g})"
        )
    traj = Trajectory(
        t=np.asarray(cfg.record_times, dtype=np.float64),
        a=a,
        b=b,
        beta=beta,
        D=D,
        lam=lam,
        b0=b0,
        z=z,
        max_drift_a=drift_a,
        max_drift_b=drift_b,
    )
    if max(drift_a, drift_b) > cfg.drift_tol:
        raise NumericalAbort(
            f"conservation drift {max(drift_a, drift_b):.3e} exceeds "
            f"tolerance {cfg.drift_tol:g} (lam={lam:g}, z={z:g}, D={D})"
        )
    return traj


def integrate_twolayer(lam: float, z: float, cfg: IntegratorConfig) -> Trajectory:
    """Two-layer flow ``theta' = sqrt(lam**2 + 4 theta**2)(z - theta)``.

    Integrated in the (a, beta) parameterization so the conserved quantity
    ``a**2 - beta**2 = lam`` is a real check on the discretization.
    """
    return _integrate(lam, 1.0, 0, z, cfg)


def integrate_deep(
    lam: float, b0: float, D: int, z: float, cfg: IntegratorConfig
) -> Trajectory:
    """Depth-D flow on (a, b, beta) with both conservation identities."""
    if D < 1:
        raise ValueError("integrate_deep requires D >= 1 (use integrate_twolayer)")
    return _integrate(lam, b0, D, z, cfg)


def eigen_term(state: FlowState) -> float:
    """Learned-eigenvalue product ``a * b**D``; non-decreasing along flows."""
    return state.a * state.b**state.D


# ---------------------------------------------------------------------------
# schedules and phase-time bounds
# ---------------------------------------------------------------------------


def make_schedule(epsilon: float, D: int) -> Schedule:
    """Stopping schedule with unit constants: ``t = eps**(-(2D+2)/(D+2))``."""
    if not (0 < epsilon < 1):
        raise ValueError("epsilon must lie in (0, 1)")
    if D < 0:
        raise ValueError("D must be non-negative")
    b0 = epsilon ** (1.0 / (D + 2)) if D >= 1 else 1.0
    t_stop = epsilon ** (-(2.0 * D + 2.0) / (D + 2.0))
    return Schedule(epsilon=epsilon, D=D, b0=b0, t_stop=t_stop)


def escape_time_bounds(lam: float, b0: float, D: int, z: float) -> EscapeTimeBounds:
    """Closed-form phase-time bounds for the depth-D flow.

    T1/T2 lower-bound the times at which beta can reach sqrt(lam) and
    b0/sqrt(D); T12 extends T1 through the exponential phase when
    sqrt(lam) <= b0/sqrt(D); Tsig upper-bounds the first crossing of z/2,
    with the case split on sqrt(lam) vs b0/sqrt(D).
    """
    if lam <= 0 or b0 <= 0:
        raise ValueError("lam and b0 must be positive")
    if D < 1:
        raise ValueError("phase-time bounds require D >= 1")
    az = abs(z)
    if az == 0:
        return EscapeTimeBounds(math.inf, math.inf, math.inf, math.inf)
    c = 2.0 ** ((D + 1) / 2.0)
    t1 = 1.0 / (c * b0**D * az)
    t2 = 1.0 / (c * math.sqrt(D) * math.sqrt(lam) * b0 ** (D - 1) * az)
    t12 = (1.0 + math.log(b0 / (math.sqrt(D) * math.sqrt(lam)))) * t1
    if math.sqrt(lam) <= b0 / math.sqrt(D):
        grow = (D ** (-D / 2.0) * az / 2.0) ** (1.0 / (D + 2))
        tsig = 2.0 / (b0**D * az) * (1.0 + max(0.0, math.log(grow / math.sqrt(lam))))
    else:
        if D == 1:
            r = math.log((D * az / 2.0) ** (1.0 / (D + 2)) / b0)
        else:
            r = 1.0 / (D - 1)
        tsig = (
            2.0
            / (math.sqrt(D) * math.sqrt(lam) * b0 ** (D - 1) * az)
            * (1.0 + max(0.0, r))
        )
    return EscapeTimeBounds(T1_lower=t1, T2_lower=t2, T12_lower=t12, Tsig_upper=tsig)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def export_trajectories_csv(path, trajectories, component_indices) -> None:
    """Write trajectories as rows of (component_index, t, theta, a, b, beta, eigen_term)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["component_index", "t", "theta", "a", "b", "beta", "eigen_term"])
        for j, traj in zip(component_indices, trajectories):
            theta = traj.theta
            eig = traj.eigen_term
            for i, t in enumerate(traj.t):
                w.writerow(
                    [
                        j,
                        f"{t:.12g}",
                        f"{theta[i]:.17g}",
                        f"{traj.a[i]:.17g}",
                        f"{traj.b[i]:.17g}",
                        f"{traj.beta[i]:.17g}",
                        f"{eig[i]:.17g}",
                    ]
                )
