"""Truth signals, eigenvalue schedules, and noisy sequence instances.

The observation model is ``z_j = theta*_j + xi_j`` for components
``j = 1..N``, with i.i.d. Gaussian noise of scale ``epsilon`` and a
truth sequence whose magnitude ranks may be scattered across component
indices by an injective map ``l(rank) ~ rank**q``.  Everything here is
a pure function of its inputs; noise is counter-based so that any
evaluation order (dense, sparse, parallel) reproduces the same bits.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri, zeta

__all__ = [
    "SignalSpec",
    "EigenSchedule",
    "SequenceInstance",
    "StructureReport",
    "build_eigenvalues",
    "build_signal",
    "index_map",
    "power_law_magnitudes",
    "signal_tail_energy",
    "sample_instance",
    "noise_values",
    "structure_report",
    "phi_psi_rate_check",
]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignalSpec:
    """Description of the truth sequence.

    mode "power_law": rank ``r`` carries magnitude ``r**(-(p+1)/2)`` placed
    at component index ``l(r)`` (see :func:`index_map`).  mode "sparse":
    unit-style spikes of ``magnitude`` on ``support``.  mode "explicit":
    literal values.
    """

    mode: str = "power_law"
    p: float = 1.0
    q: float = 1.0
    support: tuple[int, ...] = ()
    magnitude: float = 1.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.mode not in ("power_law", "sparse", "explicit"):
            raise ValueError(f"unknown signal mode: {self.mode!r}")
        if self.mode == "power_law":
            if not self.p > 0:
                raise ValueError("power_law mode requires p > 0")
            if not self.q >= 1:
                raise ValueError("power_law mode requires q >= 1")
        if self.mode == "sparse":
            if len(set(self.support)) != len(self.support):
                raise ValueError("sparse support indices must be distinct")
            if any(j < 1 for j in self.support):
                raise ValueError("sparse support indices must be positive (1-based)")


@dataclass(frozen=True)
class EigenSchedule:
    """Initialization eigenvalues ``lambda_j = j**(-gamma)`` truncated at N."""

    gamma: float
    N: int

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1 (eigenvalue sum must be finite)")
        if self.N < 1:
            raise ValueError("N must be a positive integer")


@dataclass(frozen=True)
class SequenceInstance:
    """One noisy observation of the truth sequence."""

    epsilon: float
    theta_star: np.ndarray
    z: np.ndarray
    seed: int


@dataclass(frozen=True)
class StructureReport:
    """Significant-component structure of a truth sequence at level delta."""

    delta: float
    phi_of_delta: int
    psi_of_delta: float
    jsig: np.ndarray
    max_jsig: int
    kappa_hat: float


# ---------------------------------------------------------------------------
# eigenvalues and signals
# ---------------------------------------------------------------------------


def build_eigenvalues(schedule: EigenSchedule) -> np.ndarray:
    """Return ``[1**-g, 2**-g, ..., N**-g]`` for ``g = schedule.gamma``."""
    j = np.arange(1, schedule.N + 1, dtype=np.float64)
    return j ** (-schedule.gamma)


@lru_cache(maxsize=32)
def _index_map_cached(q: float, count: int) -> np.ndarray:
    targets = np.rint(np.arange(1, count + 1, dtype=np.float64) ** q).astype(np.int64)
    out = np.empty(count, dtype=np.int64)
    occupied: set[int] = set()
    for i, t in enumerate(targets):
        t = max(int(t), 1)
        while t in occupied:
            t += 1
        occupied.add(t)
        out[i] = t
    out.setflags(write=False)
    return out

def index_map(q: float, count: int) -> np.ndarray:
    """Injective placement map ``l(r) = round(r**q)``, collisions advanced.

    Returns the component indices (1-based) of ranks ``1..count``.
    """
    return _index_map_cached(float(q), int(count))


def power_law_magnitudes(p: float, count: int) -> np.ndarray:
    """Descending magnitudes ``r**(-(p+1)/2)`` for ranks ``1..count``."""
    r = np.arange(1, count + 1, dtype=np.float64)
    return r ** (-(p + 1.0) / 2.0)


def signal_tail_energy(spec: SignalSpec, rank_from: int) -> float:
    """Exact energy ``sum_{r >= rank_from} theta_r**2`` of a power-law signal.

    Uses the Hurwitz zeta function; zero for finite (sparse/explicit) modes.
    """
    if spec.mode != "power_law" or rank_from < 1:
        return 0.0
    return float(zeta(spec.p + 1.0, rank_from))


def build_signal(spec: SignalSpec, N: int) -> np.ndarray:
    """Materialize the truth vector of length N.

    power_law mode places every rank whose mapped index fits inside N;
    sparse/explicit modes place literally and reject out-of-range indices.
    """
    if N < 1:
        raise ValueError("N must be positive")
    theta = np.zeros(N, dtype=np.float64)
    if spec.mode == "power_law":
        # ranks whose raw target fits can only move forward on collision,
        # so scanning until round(r**q) > N covers everything placeable
        r_guess = int(np.ceil((N + 1) ** (1.0 / spec.q))) + 2
        placed = index_map(spec.q, r_guess)
        inside = placed <= N
        ranks = np.nonzero(inside)[0]
        if ranks.size:
            theta[placed[ranks] - 1] = power_law_magnitudes(spec.p, ranks[-1] + 1)[ranks]
    elif spec.mode == "sparse":
        support = np.asarray(spec.support, dtype=np.int64)
        if support.size and support.max() > N:
            raise ValueError(
                f"sparse support index {support.max()} exceeds truncation N={N}"
            )
        theta[support - 1] = spec.magnitude
    else:  # explicit
        vals = np.asarray(spec.values, dtype=np.float64)
        if vals.size > N:
            raise ValueError(f"explicit values (len {vals.size}) exceed N={N}")
        theta[: vals.size] = vals
    return theta


# ---------------------------------------------------------------------------
# counter-based noise
# ---------------------------------------------------------------------------

_U53 = 1.0 / float(1 << 53)


def _stream_key(seed: int, stream: int) -> list[int]:
    # 128-bit Philox key from (seed, stream); blake2b keeps arbitrary ints stable
    h = hashlib.blake2b(f"seqflow|{int(seed)}|{int(stream)}".encode(), digest_size=8)
    return [int(seed) & 0xFFFFFFFFFFFFFFFF, int.from_bytes(h.digest(), "little")]


def _gauss_from_words(words: np.ndarray, epsilon: float) -> np.ndarray:
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _U53
    return epsilon * ndtri(u)


def noise_values(
    seed: int, rep: int, indices: np.ndarray, epsilon: float, stream: int = 0
) -> np.ndarray:
    """Gaussian noise keyed by (seed, stream, rep, component index).

    ``indices`` are 1-based component indices; the value at a given index
    is independent of which other indices are requested alongside it.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if epsilon == 0.0:
        return np.zeros(indices.shape, dtype=np.float64)
    key = _stream_key(seed, stream)
    out = np.empty(indices.size, dtype=np.uint64)
    flat = indices.ravel()
    # contiguous prefixes are the common case; grab them in one raw draw
    splits = np.nonzero(np.diff(flat) != 1)[0] + 1
    start = 0
    for stop in list(splits) + [flat.size]:
        j0 = int(flat[start])
        count = stop - start
        bg = Philox(key=key, counter=[j0, int(rep), 0, 0])
        out[start:stop] = bg.random_raw(4 * count)[:: 4]
        start = stop
    return _gauss_from_words(out, epsilon).reshape(indices.shape)


def sample_instance(
    spec: SignalSpec,
    schedule: EigenSchedule,
    epsilon: float,
    seed: int,
    rep: int = 0,
) -> SequenceInstance:
    """Draw ``z = theta* + xi`` with per-component counter-based noise."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    theta_star = build_signal(spec, schedule.N)
    xi = noise_values(seed, rep, np.arange(1, schedule.N + 1), epsilon)
    return SequenceInstance(
        epsilon=epsilon, theta_star=theta_star, z=theta_star + xi, seed=seed
    )


# ---------------------------------------------------------------------------
# structure quantities
# ---------------------------------------------------------------------------


def structure_report(theta_star: np.ndarray, delta: float) -> StructureReport:
    """Count and residual energy of significant components at level delta.

    ``jsig`` collects indices with ``|theta*_j| >= delta`` (1-based),
    ``phi = |jsig|`` and ``psi`` is the energy of everything else.
    ``kappa_hat = log(max jsig) / log(1/delta)`` is a diagnostic of how far
    the significant set stretches; NaN when undefined (empty set or
    delta >= 1).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    theta_star = np.asarray(theta_star, dtype=np.float64)
    mask = np.abs(theta_star) >= delta
    jsig = np.nonzero(mask)[0] + 1
    phi = int(jsig.size)
    psi = float(np.sum(theta_star[~mask] ** 2))
    if phi > 0 and delta < 1.0:
        kappa_hat = float(np.log(jsig[-1]) / np.log(1.0 / delta))
    else:
        kappa_hat = float("nan")
    return StructureReport(
        delta=float(delta),
        phi_of_delta=phi,
        psi_of_delta=psi,
        jsig=jsig,
        max_jsig=int(jsig[-1]) if phi else 0,
        kappa_hat=kappa_hat,
    )


def phi_psi_rate_check(
    spec: SignalSpec, delta_grid: np.ndarray, rank_cap: int = 10**6
) -> tuple[float, float]:
    """Fit log-log slopes of Phi and Psi against delta for a power-law signal.

    Phi and Psi are invariant under the index placement, so both are
    evaluated in rank space; the Psi tail beyond ``rank_cap`` is added
    exactly via the Hurwitz zeta function.  Returns the raw fitted slopes
    ``(d log Phi / d log delta, d log Psi / d log delta)``.
    """
    if spec.mode != "power_law":
        raise ValueError("rate check applies to power_law signals")
    deltas = np.asarray(delta_grid, dtype=np.float64)
    if deltas.size < 3:
        raise ValueError("need at least 3 grid points")
    if deltas.max() / deltas.min() < 100.0:
        raise ValueError("delta grid must span at least 2 decades")
    mags = power_law_magnitudes(spec.p, rank_cap)
    energy = mags**2
    # suffix sums give Psi for thresholds inside the materialized ranks
    suffix = np.concatenate([np.cumsum(energy[::-1])[::-1], [0.0]])
    tail = signal_tail_energy(spec, rank_cap + 1)
    phis = np.empty(deltas.size)
    psis = np.empty(deltas.size)
    for i, d in enumerate(deltas):
        k = int(np.searchsorted(-mags, -d, side="right"))  # mags descending
        if k >= rank_cap:
            raise ValueError("delta grid reaches below the materialized ranks")
        phis[i] = k
        psis[i] = suffix[k] + tail
    lx = np.log(deltas)
    phi_slope = float(np.polyfit(lx, np.log(phis), 1)[0])
    psi_slope = float(np.polyfit(lx, np.log(psis), 1)[0])
    return phi_slope, psi_slope
