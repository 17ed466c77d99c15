"""Adaptive versus fixed kernel regression on the 2-d torus.

The target sin(7.5 pi x1) lives on high-frequency basis functions whose
Sobolev eigenvalues are tiny, so the fixed-kernel gradient flow learns it
slowly and its oracle holdout risk is poor.  Training the per-function
scales jointly with the coefficients re-ranks the spectrum on the fly.
"""

import numpy as np

from seqflow.torus import (
    fit_adaptive_diagonal,
    fit_fixed_kernel_gf,
    make_fourier_design,
    make_torus_design,
)

f_true = lambda X: np.sin(7.5 * np.pi * X[:, 0])
basis = make_fourier_design(2, 2.0)
design = make_torus_design(2, 1000, f_true, 0.1, seed=42)
holdout = make_torus_design(2, 1000, f_true, 0.1, seed=43)
print(f"basis: {basis.M} trigonometric functions, n={design.n}, sigma=0.1")

fixed = fit_fixed_kernel_gf(
    design, basis, np.geomspace(0.5, 2e5, 40), holdout=holdout
)
adaptive = fit_adaptive_diagonal(
    design, basis, 0, np.geomspace(0.5, 5e3, 35), holdout=holdout
)

for name, fit in (("fixed kernel", fixed), ("adaptive", adaptive)):
    i = int(np.argmin(fit.holdout_risk))
    print(f"\n{name}: oracle holdout risk {fit.holdout_risk[i]:.4f} "
          f"at t={fit.ts[i]:.4g} (noise floor sigma^2 = 0.01)")
    top = np.argsort(-np.abs(fit.coeffs[i]))[:4]
    for j in top:
        f = basis.functions[j]
        print(f"   {f.kind}{f.m} lam={f.lam:.2e}: coeff {fit.coeffs[i, j]: .3f}")
print("\nthe adaptive fit concentrates on the sin(m1=7..8, m2=0) pair that")
print("carries the target, despite those functions ranking late by eigenvalue")
