"""Empirical Fourier-coefficient spectra of tabular regression targets.

Ingests a numeric CSV, maps features onto the torus, and reports the
empirical inner products of the response with the trigonometric basis in
kernel-eigenvalue order.  Spiky, late-ranked coefficients diagnose
misalignment between the eigenvalue order and the target function.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .torus import FourierDesign, eval_basis

__all__ = [
    "IngestError",
    "TabularDataset",
    "CoefficientSpectrum",
    "ingest_csv",
    "normalize_to_torus",
    "empirical_coefficients",
    "export_spectrum_csv",
]


class IngestError(ValueError):
    """CSV ingestion failure with a machine-readable code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class TabularDataset:
    """Numeric design matrix and response, post-cleaning."""

    feature_matrix: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    dropped_rows: int = 0
    dropped_features: tuple[str, ...] = ()
    # affine maps applied by normalize_to_torus: (scale, offset) per feature
    torus_maps: tuple[tuple[float, float], ...] = ()

    @property
    def n(self) -> int:
        return self.target.size

    @property
    def d(self) -> int:
        return self.feature_matrix.shape[1]


@dataclass(frozen=True)
class CoefficientSpectrum:
    """Empirical coefficients in eigenvalue order."""

    design: FourierDesign
    coefficients: np.ndarray
    noise_floor: float  # O(n^-1/2) scale below which coefficients are noise

    @property
    def energy(self) -> np.ndarray:
        return self.coefficients**2

    @property
    def cumulative_energy_fraction(self) -> np.ndarray:
        e = self.energy
        tot = e.sum()
        if tot == 0:
            return np.zeros_like(e)
        return np.cumsum(e) / tot

    def top_k_energy_fraction(self, k: int) -> float:
        e = np.sort(self.energy)[::-1]
        tot = e.sum()
        return float(e[:k].sum() / tot) if tot > 0 else 0.0


def ingest_csv(path, target_column: str, min_rows: int = 10) -> TabularDataset:
    """Read a delimited numeric file, dropping malformed rows with a count.

    Raises IngestError with codes "not-utf8", "missing-target",
    "zero-usable-rows", and "too-few-rows".
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise IngestError("zero-usable-rows", f"{path}: empty file")
            rows = list(reader)
    except UnicodeDecodeError:
        raise IngestError("not-utf8", f"{path}: not valid UTF-8 text")
    header = [h.strip() for h in header]
    if target_column not in header:
        raise IngestError(
            "missing-target", f"{path}: no column named {target_column!r}"
        )
    ti = header.index(target_column)
    feature_names = tuple(h for i, h in enumerate(header) if i != ti)
    feats, targets, dropped = [], [], 0
    for row in rows:
        if len(row) != len(header):
            dropped += 1
            continue
        try:
            vals = [float(v) for v in row]
        except ValueError:
            dropped += 1
            continue
        if not all(np.isfinite(vals)):
            dropped += 1
            continue
        targets.append(vals[ti])
        feats.append([v for i, v in enumerate(vals) if i != ti])
    if not targets:
        raise IngestError("zero-usable-rows", f"{path}: zero usable rows")
    if len(targets) < min_rows:
        raise IngestError(
            "too-few-rows", f"{path}: only {len(targets)} usable rows (< {min_rows})"
        )
    return TabularDataset(
        feature_matrix=np.asarray(feats, dtype=np.float64),
        target=np.asarray(targets, dtype=np.float64),
        feature_names=feature_names,
        dropped_rows=dropped,
    )


def normalize_to_torus(dataset: TabularDataset) -> TabularDataset:
    """Affine-map each feature onto [-1, 1 - guard) with a small grid guard.

    Constant features carry no information on the torus and are dropped
    (recorded in ``dropped_features``).  Applying the map twice moves
    points by at most the guard width.
    """
    X = dataset.feature_matrix
    n = dataset.n
    guard = 2.0 / (10.0 * n)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    keep = hi > lo
    dropped = tuple(
        name for name, k in zip(dataset.feature_names, keep) if not k
    )
    X = X[:, keep]
    lo, hi = lo[keep], hi[keep]
    scale = (2.0 - guard) / (hi - lo)
    out = (X - lo) * scale - 1.0
    return TabularDataset(
        feature_matrix=out,
        target=dataset.target,
        feature_names=tuple(
            name for name, k in zip(dataset.feature_names, keep) if k
        ),
        dropped_rows=dataset.dropped_rows,
        dropped_features=dataset.dropped_features + dropped,
        torus_maps=tuple((float(s), float(l)) for s, l in zip(scale, lo)),
    )


def empirical_coefficients(
    dataset: TabularDataset, design: FourierDesign
) -> CoefficientSpectrum:
    """Coefficients ``(1/n) sum_i y_i e_m(x_i)`` in eigenvalue order."""
    if dataset.d != design.d:
        raise ValueError(
            f"dataset has {dataset.d} features but basis expects {design.d}"
        )
    E = eval_basis(dataset.feature_matrix, design)
    coeff = E.T @ dataset.target / dataset.n
    y2 = float(dataset.target @ dataset.target) / dataset.n
    noise_floor = (y2 / dataset.n) ** 0.5
    return CoefficientSpectrum(
        design=design, coefficients=coeff, noise_floor=noise_floor
    )


def export_spectrum_csv(path, spectrum: CoefficientSpectrum) -> None:
    """Write ranked coefficients with cumulative energy fractions."""
    cum = spectrum.cumulative_energy_fraction
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["rank", "multi_index", "lambda", "coefficient",
             "cumulative_energy_fraction"]
        )
        for i, f in enumerate(spectrum.design.functions):
            label = f.kind if f.kind == "const" else (
                f"{f.kind}({','.join(str(v) for v in f.m)})"
            )
            w.writerow(
                [
                    i + 1,
                    label,
                    f"{f.lam:.12g}",
                    f"{spectrum.coefficients[i]:.17g}",
                    f"{cum[i]:.12g}",
                ]
            )
