"""Diagnose eigenvalue misalignment in a tabular regression dataset.

Builds a synthetic dataset whose response depends on one feature at a
high frequency, ingests it like any CSV, and reports the empirical
Fourier spectrum in kernel-eigenvalue order: the energy sits in a few
late-ranked coefficients, the signature of misalignment.

Same pipeline as: seqflow spectrum --input data.csv --target y --out spec.csv
"""

import csv
import tempfile

import numpy as np

from seqflow.spectrum import empirical_coefficients, ingest_csv, normalize_to_torus
from seqflow.torus import make_fourier_design

path = tempfile.mktemp(suffix=".csv", prefix="seqflow_demo_")
rng = np.random.default_rng(0)
n = 4000
X = np.column_stack([rng.uniform(0, 8, n), rng.normal(5, 2, n)])
y = np.sin(2.2 * np.pi * X[:, 0]) + 0.2 * rng.standard_normal(n)
with open(path, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["temperature", "pressure", "yield"])
    for i in range(n):
        w.writerow([f"{X[i, 0]:.6f}", f"{X[i, 1]:.6f}", f"{y[i]:.6f}"])

data = normalize_to_torus(ingest_csv(path, "yield"))
print(f"ingested {data.n} rows, {data.d} features "
      f"({data.dropped_rows} dropped), mapped onto [-1, 1)^{data.d}")

basis = make_fourier_design(data.d, 2.0, cap=600)
spec = empirical_coefficients(data, basis)
print(f"noise floor ~ {spec.noise_floor:.4f}; "
      f"top-10 coefficients hold {100 * spec.top_k_energy_fraction(10):.1f}% "
      "of the spectrum energy\n")

order = np.argsort(-np.abs(spec.coefficients))[:8]
print(f"{'rank':>5} {'function':>12} {'lambda':>10} {'coefficient':>12}")
for j in order:
    f = basis.functions[j]
    label = f.kind if f.kind == "const" else f"{f.kind}{f.m}"
    print(f"{j + 1:5d} {label:>12} {f.lam:10.2e} {spec.coefficients[j]:12.4f}")
print("\nlarge coefficients at late ranks (small lambda) = the kernel's")
print("eigenvalue order disagrees with the target: misalignment")
