"""Trigonometric basis ordering and the two kernel-flow fits."""

import math

import numpy as np
import pytest

from seqflow.flows import IntegratorConfig, integrate_twolayer
from seqflow.torus import (
    FourierDesign,
    eval_basis,
    fit_adaptive_diagonal,
    fit_fixed_kernel_gf,
    fourier_index_order,
    make_fourier_design,
    make_torus_design,
)


def grid_design(n, funcs_design, coeffs, sigma=0.0, seed=0):
    """Uniform 1-d grid design: the empirical Gram is exactly identity."""
    X = (-1.0 + 2.0 * np.arange(n) / n).reshape(-1, 1)
    E = eval_basis(X, funcs_design)
    y = E @ coeffs
    if sigma:
        y = y + sigma * np.random.default_rng(seed).standard_normal(n)
    from seqflow.torus import TorusDesign

    return TorusDesign(d=1, n=n, X=X, y=y, sigma=sigma, seed=seed)


class TestBasisOrdering:
    def test_first_function_is_constant(self):
        funcs = fourier_index_order(2, 2.0, 1)
        assert funcs[0].kind == "const" and funcs[0].lam == 1.0

    def test_tie_order_at_unit_norm(self):
        funcs = fourier_index_order(2, 2.0, 5)
        got = [(f.m, f.kind) for f in funcs]
        assert got == [
            ((0, 0), "const"),
            ((0, 1), "cos"),
            ((0, 1), "sin"),
            ((1, 0), "cos"),
            ((1, 0), "sin"),
        ]

    def test_d1_eigenvalues(self):
        funcs = fourier_index_order(1, 1.0, 3)
        assert [f.lam for f in funcs] == [1.0, 0.5, 0.5]

    def test_descending_eigenvalues(self):
        funcs = fourier_index_order(3, 2.0, 200)
        lam = [f.lam for f in funcs]
        assert all(a >= b for a, b in zip(lam, lam[1:]))

    def test_small_r_rejected(self):
        with pytest.raises(ValueError):
            fourier_index_order(2, 1.0, 5)

    def test_truncation_rule(self):
        design = make_fourier_design(2, 2.0, lam_cut=1e-4, cap=5000)
        assert design.lam[-1] <= 1e-4
        assert design.M <= 5000

    def test_orthonormal_on_fine_grid(self):
        # quadrature oracle: the basis is orthonormal in L2 of the uniform law
        design = FourierDesign(1, 2.0, tuple(fourier_index_order(1, 2.0, 9)))
        n = 4096
        X = (-1.0 + 2.0 * np.arange(n) / n).reshape(-1, 1)
        E = eval_basis(X, design)
        gram = E.T @ E / n
        np.testing.assert_allclose(gram, np.eye(9), atol=1e-12)


class TestFixedKernelFlow:
    def test_zero_response_stays_zero(self):
        design = make_torus_design(2, 50, lambda X: np.zeros(X.shape[0]), 0.0, 1)
        basis = make_fourier_design(2, 2.0, cap=40)
        fit = fit_fixed_kernel_gf(design, basis, np.array([1.0, 10.0, 100.0]))
        assert np.all(fit.coeffs == 0.0)

    def test_single_point_constant_target(self):
        from seqflow.torus import TorusDesign

        basis = FourierDesign(1, 2.0, tuple(fourier_index_order(1, 2.0, 1)))
        design = TorusDesign(
            d=1, n=1, X=np.zeros((1, 1)), y=np.array([2.0]), sigma=0.0, seed=0
        )
        fit = fit_fixed_kernel_gf(design, basis, np.array([1e4]))
        assert fit.coeffs[-1, 0] == pytest.approx(2.0, rel=1e-6)

    def test_recovers_single_basis_function(self):
        # noiseless y = e_k; least-squares oracle is exact recovery
        basis = make_fourier_design(2, 2.0, cap=400)
        k = 1  # cos(pi x2), eigenvalue 0.25
        f_true = lambda X: eval_basis(X, basis)[:, k]
        design = make_torus_design(2, 500, f_true, 0.0, 7)
        E = eval_basis(design.X, basis)
        lstsq = np.linalg.lstsq(E, design.y, rcond=None)[0]
        np.testing.assert_allclose(lstsq[k], 1.0, atol=1e-8)
        fit = fit_fixed_kernel_gf(design, basis, np.geomspace(1.0, 5e3, 25))
        final = fit.coeffs[-1]
        assert abs(final[k] - 1.0) <= 0.05
        others = np.delete(final, k)
        assert np.max(np.abs(others)) <= 0.05

    def test_interpolation_when_overparameterized(self):
        # n < M: training loss reaches ~0 while holdout risk stays finite
        funcs = tuple(fourier_index_order(1, 0.7, 101))
        basis = FourierDesign(1, 0.7, funcs)
        f_true = lambda X: np.sin(3.3 * np.pi * X[:, 0])
        design = make_torus_design(1, 40, f_true, 0.1, 3)
        holdout = make_torus_design(1, 200, f_true, 0.1, 4)
        fit = fit_fixed_kernel_gf(
            design, basis, np.geomspace(1.0, 2e6, 30), holdout=holdout
        )
        assert fit.train_loss[-1] <= 1e-6
        assert 0.0 < fit.holdout_risk[-1] < 10.0


class TestAdaptiveDiagonalFlow:
    def test_zero_response_stays_zero(self):
        design = make_torus_design(2, 50, lambda X: np.zeros(X.shape[0]), 0.0, 1)
        basis = make_fourier_design(2, 2.0, cap=40)
        fit = fit_adaptive_diagonal(design, basis, 0, np.array([1.0, 10.0]))
        assert np.all(fit.coeffs == 0.0)

    def test_matches_sequence_flow_on_orthonormal_design(self):
        # with Gram == I the fit decouples into per-component two-layer flows
        funcs = tuple(fourier_index_order(1, 2.0, 11))
        basis = FourierDesign(1, 2.0, funcs)
        coeffs = np.zeros(11)
        coeffs[3] = 0.8
        coeffs[6] = -0.3
        design = grid_design(64, basis, coeffs)
        ts = np.geomspace(0.5, 60.0, 12)
        fit = fit_adaptive_diagonal(design, basis, 0, ts, eta=0.005)
        E = eval_basis(design.X, basis)
        z = E.T @ design.y / design.n
        for j in (3, 6, 0):
            ref = integrate_twolayer(
                basis.lam[j], z[j], IntegratorConfig(ts, method="rk4")
            )
            np.testing.assert_allclose(fit.coeffs[:, j], ref.theta, atol=1e-2)

    def test_holdout_invariant_under_training_permutation(self):
        from seqflow.torus import TorusDesign

        basis = make_fourier_design(2, 2.0, cap=60)
        f_true = lambda X: np.sin(1.5 * np.pi * X[:, 0])
        design = make_torus_design(2, 120, f_true, 0.05, 5)
        holdout = make_torus_design(2, 120, f_true, 0.05, 6)
        perm = np.random.default_rng(0).permutation(120)
        shuffled = TorusDesign(
            d=2, n=120, X=design.X[perm], y=design.y[perm], sigma=0.05, seed=5
        )
        ts = np.geomspace(0.5, 100.0, 10)
        a = fit_adaptive_diagonal(design, basis, 0, ts, holdout=holdout)
        b = fit_adaptive_diagonal(shuffled, basis, 0, ts, holdout=holdout)
        np.testing.assert_allclose(a.holdout_risk, b.holdout_risk, rtol=1e-8)

    def test_adaptive_beats_fixed_on_misaligned_target(self):
        # the late-ranked pure-frequency target favors eigenvalue adaptation
        basis = make_fourier_design(2, 2.0, cap=400)
        f_true = lambda X: np.sin(7.5 * np.pi * X[:, 0])
        design = make_torus_design(2, 1000, f_true, 0.1, 11)
        holdout = make_torus_design(2, 1000, f_true, 0.1, 1011)
        fixed = fit_fixed_kernel_gf(
            design, basis, np.geomspace(0.5, 2e5, 40), holdout=holdout
        )
        adap = fit_adaptive_diagonal(
            design, basis, 0, np.geomspace(0.5, 5e3, 35), holdout=holdout
        )
        assert adap.holdout_risk.min() < fixed.holdout_risk.min()
