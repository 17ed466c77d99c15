"""Trigonometric-basis regression on the torus [-1, 1)^d.

Connects the sequence-model flows to actual nonparametric regression:
a fixed-kernel gradient flow on the feature map ``sqrt(lam_m) e_m(x)``
versus a diagonal adaptive feature map whose per-function scales are
trained jointly with the coefficients.  The basis is the real
trigonometric system with Sobolev-type eigenvalues
``lam_m = (1 + |m|^2)**(-r)``, ordered by eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .flows import NumericalAbort

__all__ = [
    "BasisFunction",
    "FourierDesign",
    "TorusDesign",
    "FitResult",
    "fourier_index_order",
    "make_fourier_design",
    "eval_basis",
    "make_torus_design",
    "fit_fixed_kernel_gf",
    "fit_adaptive_diagonal",
]


@dataclass(frozen=True)
class BasisFunction:
    """One real trigonometric basis function.

    kind "const" is the constant 1; "cos"/"sin" are sqrt(2) cos(pi m.x)
    and sqrt(2) sin(pi m.x), orthonormal under the uniform probability
    measure on [-1, 1)^d.
    """

    m: tuple[int, ...]
    kind: str
    lam: float


@dataclass(frozen=True)
class FourierDesign:
    """Ordered basis truncation: functions sorted by eigenvalue descending."""

    d: int
    r: float
    functions: tuple[BasisFunction, ...]

    @property
    def M(self) -> int:
        return len(self.functions)

    @property
    def lam(self) -> np.ndarray:
        return np.array([f.lam for f in self.functions])


@dataclass(frozen=True)
class TorusDesign:
    """n sample points on the torus with noisy responses."""

    d: int
    n: int
    X: np.ndarray
    y: np.ndarray
    sigma: float
    seed: int


@dataclass(frozen=True)
class FitResult:
    """Checkpointed coefficient trajectories of one gradient-flow fit."""

    ts: np.ndarray
    coeffs: np.ndarray  # (len(ts), M) values of theta_j
    train_loss: np.ndarray
    holdout_risk: np.ndarray


def _representatives(d: int, max_norm2: int):
    """Multi-index representatives (one per {m, -m} pair) with |m|^2 <= max_norm2."""
    lim = int(math.isqrt(max_norm2))
    for m in product(range(-lim, lim + 1), repeat=d):
        n2 = sum(v * v for v in m)
        if n2 > max_norm2:
            continue
        if all(v == 0 for v in m):
            yield m, n2
            continue
        first = next(v for v in m if v != 0)
        if first > 0:
            yield m, n2


def fourier_index_order(d: int, r: float, M: int) -> list[BasisFunction]:
    """First M basis functions by eigenvalue (1+|m|^2)^(-r) descending.

    Ties break lexicographically on the multi-index, cos before sin.
    Requires r > d/2 so the eigenvalue sequence is summable.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    if not r > d / 2:
        raise ValueError(f"r must exceed d/2 = {d / 2} (kernel not trace class)")
    max_norm2 = 4
    while True:
        funcs = []
        for m, n2 in _representatives(d, max_norm2):
            lam = (1.0 + n2) ** (-r)
            if n2 == 0:
                funcs.append((n2, m, 0, BasisFunction(m, "const", lam)))
            else:
                funcs.append((n2, m, 1, BasisFunction(m, "cos", lam)))
                funcs.append((n2, m, 2, BasisFunction(m, "sin", lam)))
        if len(funcs) >= M:
            # the truncation is only valid if every kept norm is fully
            # enumerated; over-enumerate one shell to be safe
            funcs.sort(key=lambda f: (f[0], f[1], f[2]))
            kept = funcs[:M]
            if kept[-1][0] < max_norm2:
                return [f[3] for f in kept]
        max_norm2 *= 2


def make_fourier_design(
    d: int, r: float, lam_cut: float = 1e-4, cap: int = 5000
) -> FourierDesign:
    """Basis truncated at the smallest M with lam_M <= lam_cut * lam_1."""
    # smallest lattice norm with (1+|m|^2)^(-r) <= cut; +d slack because not
    # every integer is a sum of d squares
    n2_max = max(int(math.ceil(lam_cut ** (-1.0 / r) - 1.0)), 1) + d + 1
    count = 0
    for _, n2 in sorted(_representatives(d, n2_max), key=lambda t: t[1]):
        count += 1 if n2 == 0 else 2
        if (1.0 + n2) ** (-r) <= lam_cut or count >= cap:
            break
    M = min(count, cap)
    return FourierDesign(d=d, r=r, functions=tuple(fourier_index_order(d, r, M)))


def eval_basis(X: np.ndarray, design: FourierDesign) -> np.ndarray:
    """Evaluate the basis at sample points; returns (n, M)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    E = np.empty((n, design.M), dtype=np.float64)
    sqrt2 = math.sqrt(2.0)
    for j, f in enumerate(design.functions):
        if f.kind == "const":
            E[:, j] = 1.0
        else:
            phase = math.pi * (X @ np.asarray(f.m, dtype=np.float64))
            E[:, j] = sqrt2 * (np.cos(phase) if f.kind == "cos" else np.sin(phase))
    return E


def make_torus_design(
    d: int, n: int, f_true, sigma: float, seed: int
) -> TorusDesign:
    """Uniform sample on [-1,1)^d with responses f_true(X) + sigma * noise."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, d))
    y = np.asarray(f_true(X), dtype=np.float64)
    if sigma > 0:
        y = y + sigma * rng.standard_normal(n)
    return TorusDesign(d=d, n=n, X=X, y=y, sigma=sigma, seed=seed)


def _power_max_eig(G: np.ndarray, iters: int = 60) -> float:
    v = np.ones(G.shape[0]) / math.sqrt(G.shape[0])
    ev = 1.0
    for _ in range(iters):
        w = G @ v
        ev = float(np.linalg.norm(w))
        if ev == 0.0:
            return 0.0
        v = w / ev
    return ev


def _checkpoint_steps(t_grid: np.ndarray, eta: float) -> list[tuple[int, float]]:
    """(cumulative step count, actual time) per requested checkpoint."""
    out = []
    for t in t_grid:
        k = max(int(round(t / eta)), 1)
        out.append((k, k * eta))
    return out


def fit_fixed_kernel_gf(
    design: TorusDesign,
    basis: FourierDesign,
    t_grid: np.ndarray,
    holdout: TorusDesign | None = None,
    eta: float | None = None,
) -> FitResult:
    """Discretized gradient flow on beta with features sqrt(lam_j) e_j(x).

    Coefficients are reported as theta_j = sqrt(lam_j) beta_j.  Aborts on
    divergence (step too large for the empirical feature Gram).
    """
    E = eval_basis(design.X, basis)
    lam_half = np.sqrt(basis.lam)
    F = E * lam_half  # feature matrix rows Phi(x_i)
    n = design.n
    G = F.T @ F / n
    c = F.T @ design.y / n
    top = _power_max_eig(G)
    if eta is None:
        eta = 0.4 / max(top, 1e-12)
    beta = np.zeros(basis.M)
    E_h = eval_basis(holdout.X, basis) if holdout is not None else None
    ts, coeffs, tloss, hrisk = [], [], [], []
    done = 0
    ynorm2 = float(design.y @ design.y) / n
    for k, t_actual in _checkpoint_steps(np.asarray(t_grid, dtype=np.float64), eta):
        for _ in range(k - done):
            beta += eta * (c - G @ beta)
        done = max(done, k)
        theta = lam_half * beta
        resid = E @ theta - design.y
        loss = float(resid @ resid) / (2 * n)
        if not math.isfinite(loss) or loss > 1e6 * (ynorm2 + 1.0):
            raise NumericalAbort(f"fixed-kernel flow diverged at t={t_actual:g}")
        ts.append(t_actual)
        coeffs.append(theta.copy())
        tloss.append(loss)
        if E_h is not None:
            hres = E_h @ theta - holdout.y
            hrisk.append(float(hres @ hres) / holdout.n)
    return FitResult(
        ts=np.array(ts),
        coeffs=np.array(coeffs),
        train_loss=np.array(tloss),
        holdout_risk=np.array(hrisk) if E_h is not None else np.array([]),
    )


def fit_adaptive_diagonal(
    design: TorusDesign,
    basis: FourierDesign,
    D: int,
    t_grid: np.ndarray,
    holdout: TorusDesign | None = None,
    eta: float | None = None,
    b0: float = 1.0,
) -> FitResult:
    """Joint gradient descent on (a, b, beta) with feature map a_j e_j(x).

    a_j(0) = sqrt(lam_j), b_j(0) = b0, beta(0) = 0; coefficients are
    theta_j = a_j b_j**D beta_j.  The empirical loss couples components
    through the data, unlike the diagonal sequence-model flows.
    """
    if D < 0:
        raise ValueError("D must be non-negative")
    E = eval_basis(design.X, basis)
    n = design.n
    Ghat = E.T @ E / n
    chat = E.T @ design.y / n
    top = _power_max_eig(Ghat)
    a = np.sqrt(basis.lam)
    b = np.full(basis.M, b0)
    beta = np.zeros(basis.M)
    E_h = eval_basis(holdout.X, basis) if holdout is not None else None
    ts, coeffs, tloss, hrisk = [], [], [], []
    ynorm2 = float(design.y @ design.y) / n
    t = 0.0
    for t_target in np.asarray(t_grid, dtype=np.float64):
        while t < t_target:
            # stability: the loss Hessian in theta scales with top * the
            # largest factor products, so refresh the step as they grow
            bD = b**D
            scale = float(np.max(a**2 * bD**2 + beta**2 * bD**2 + 1e-12))
            h = 0.1 / (top * max(scale, 1.0) * (D + 1.0)) if eta is None else eta
            h = min(h, t_target - t)
            theta = a * bD * beta
            g = Ghat @ theta - chat
            da = bD * beta * g
            dbeta = a * bD * g
            if D > 0:
                db = D * a * b ** (D - 1) * beta * g
                b = b - h * db
            a = a - h * da
            beta = beta - h * dbeta
            t += h
        theta = a * b**D * beta
        resid = E @ theta - design.y
        loss = float(resid @ resid) / (2 * n)
        if not math.isfinite(loss) or loss > 1e6 * (ynorm2 + 1.0):
            raise NumericalAbort(f"adaptive flow diverged at t={t:g}")
        ts.append(t)
        coeffs.append(theta.copy())
        tloss.append(loss)
        if E_h is not None:
            hres = E_h @ theta - holdout.y
            hrisk.append(float(hres @ hres) / holdout.n)
    return FitResult(
        ts=np.array(ts),
        coeffs=np.array(coeffs),
        train_loss=np.array(tloss),
        holdout_risk=np.array(hrisk) if E_h is not None else np.array([]),
    )
