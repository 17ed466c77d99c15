"""Truth-signal construction, noise determinism, and structure quantities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqflow.signals import (
    EigenSchedule,
    SignalSpec,
    build_eigenvalues,
    build_signal,
    index_map,
    noise_values,
    phi_psi_rate_check,
    power_law_magnitudes,
    sample_instance,
    structure_report,
)


class TestEigenvalues:
    def test_direct_values(self):
        lam = build_eigenvalues(EigenSchedule(gamma=2.0, N=4))
        np.testing.assert_allclose(lam, [1.0, 0.25, 1.0 / 9.0, 0.0625])

    def test_single_component(self):
        np.testing.assert_array_equal(
            build_eigenvalues(EigenSchedule(gamma=1.5, N=1)), [1.0]
        )

    def test_tail_sum_against_integral_bound(self):
        # integral bound: sum_{j>10^4} j^-3 < int_{10^4}^inf x^-3 dx = 5e-9
        lam = build_eigenvalues(EigenSchedule(gamma=3.0, N=100_000))
        assert lam[10_000:].sum() < 5e-9

    def test_strictly_decreasing(self):
        lam = build_eigenvalues(EigenSchedule(gamma=1.2, N=1000))
        assert np.all(np.diff(lam) < 0)

    def test_gamma_at_most_one_rejected(self):
        with pytest.raises(ValueError):
            EigenSchedule(gamma=1.0, N=10)


class TestBuildSignal:
    def test_identity_map_power_one(self):
        # (p+1)/2 = 1 so magnitudes are 1/j under the identity placement
        theta = build_signal(SignalSpec(p=1.0, q=1.0), 5)
        np.testing.assert_allclose(theta, [1, 0.5, 1 / 3, 0.25, 0.2])

    def test_square_map_placement(self):
        theta = build_signal(SignalSpec(p=1.0, q=2.0), 10)
        nz = np.nonzero(theta)[0] + 1
        np.testing.assert_array_equal(nz, [1, 4, 9])
        np.testing.assert_allclose(theta[[0, 3, 8]], [1.0, 0.5, 1 / 3])

    def test_sparse_placement(self):
        spec = SignalSpec(mode="sparse", support=(3, 7), magnitude=1.0)
        np.testing.assert_array_equal(
            build_signal(spec, 8), [0, 0, 1, 0, 0, 0, 1, 0]
        )

    def test_sparse_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="exceeds truncation"):
            build_signal(SignalSpec(mode="sparse", support=(9,), magnitude=1.0), 8)

    def test_sorted_magnitudes_match_power_law(self):
        # placement must not change the magnitude multiset
        theta = build_signal(SignalSpec(p=0.6, q=1.7), 5000)
        mags = np.sort(np.abs(theta[theta != 0]))[::-1]
        np.testing.assert_allclose(mags, power_law_magnitudes(0.6, mags.size))

    def test_explicit_mode(self):
        theta = build_signal(
            SignalSpec(mode="explicit", values=(0.5, -0.25)), 4
        )
        np.testing.assert_array_equal(theta, [0.5, -0.25, 0, 0])

    def test_invalid_spec_params(self):
        with pytest.raises(ValueError):
            SignalSpec(p=0.0, q=1.0)
        with pytest.raises(ValueError):
            SignalSpec(p=1.0, q=0.5)
        with pytest.raises(ValueError):
            SignalSpec(mode="sparse", support=(2, 2))


class TestIndexMap:
    def test_integer_powers_collision_free(self):
        np.testing.assert_array_equal(index_map(2.0, 5), [1, 4, 9, 16, 25])

    def test_collisions_resolved_injectively(self):
        for q in (1.0, 1.02, 1.3, 1.5, 2.0):
            placed = index_map(q, 4000)
            assert np.unique(placed).size == placed.size
            assert np.all(np.diff(placed) > 0)

    def test_tracks_rank_power(self):
        placed = index_map(1.5, 10_000)
        r = np.arange(1, 10_001)
        ratio = placed / r**1.5
        assert ratio.max() < 1.6 and ratio.min() > 0.6


class TestSampleInstance:
    def test_noiseless_limit(self):
        spec = SignalSpec(p=1.0, q=1.0)
        inst = sample_instance(spec, EigenSchedule(2.0, 50), 0.0, seed=1)
        np.testing.assert_array_equal(inst.z, inst.theta_star)

    def test_unit_variance_concentration(self):
        # chi-square concentration of the sample variance at N = 1e5
        spec = SignalSpec(mode="explicit", values=())
        inst = sample_instance(spec, EigenSchedule(2.0, 100_000), 1.0, seed=3)
        assert 0.98 <= inst.z.var() <= 1.02

    def test_bit_identical_across_calls(self):
        spec = SignalSpec(p=1.0, q=2.0)
        a = sample_instance(spec, EigenSchedule(1.5, 1000), 0.3, seed=42)
        b = sample_instance(spec, EigenSchedule(1.5, 1000), 0.3, seed=42)
        np.testing.assert_array_equal(a.z, b.z)

    def test_noise_mean_sanity(self):
        spec = SignalSpec(p=1.0, q=1.0)
        inst = sample_instance(spec, EigenSchedule(2.0, 40_000), 0.5, seed=9)
        xi = inst.z - inst.theta_star
        assert abs(xi.mean()) <= 5 * 0.5 / np.sqrt(xi.size)

    def test_evaluation_order_independence(self):
        # scattered evaluation must reproduce the dense stream bit-for-bit
        dense = noise_values(7, 3, np.arange(1, 501), 0.7)
        scattered = noise_values(7, 3, np.array([2, 17, 101, 499]), 0.7)
        np.testing.assert_array_equal(
            scattered, dense[[1, 16, 100, 498]]
        )

    def test_reps_are_independent_streams(self):
        a = noise_values(7, 0, np.arange(1, 101), 1.0)
        b = noise_values(7, 1, np.arange(1, 101), 1.0)
        assert not np.allclose(a, b)


class TestStructureReport:
    def test_sparse_unit_signal(self):
        theta = build_signal(
            SignalSpec(mode="sparse", support=tuple(range(1, 8)), magnitude=1.0), 50
        )
        rep = structure_report(theta, 0.5)
        assert rep.phi_of_delta == 7
        assert rep.psi_of_delta == 0.0

    def test_power_law_count(self):
        theta = build_signal(SignalSpec(p=1.0, q=1.0), 10_000)
        assert structure_report(theta, 0.1).phi_of_delta == 10

    def test_power_law_residual_energy(self):
        # oracle: partial sum of j^-2 from 3 to 1e7 plus integral tail bound
        theta = build_signal(SignalSpec(p=1.0, q=1.0), 10_000_000)
        rep = structure_report(theta, 0.5)
        j = np.arange(3, 10_000_001, dtype=np.float64)
        oracle = (1.0 / j**2).sum() + 1e-7  # tail in (1e-7, 1e-7 + 5e-15)
        assert rep.phi_of_delta == 2
        assert abs(rep.psi_of_delta - 0.394934) < 1e-5
        assert abs(rep.psi_of_delta + 1e-7 - oracle) < 1e-9

    def test_zero_signal_degenerate(self):
        rep = structure_report(np.zeros(100), 0.25)
        assert rep.phi_of_delta == 0 and rep.psi_of_delta == 0.0
        assert np.isnan(rep.kappa_hat)

    def test_kappa_hat_tracks_misalignment(self):
        # max J_sig(delta) ~ delta^(-2q/(p+1)) so kappa_hat ~ 2q/(p+1)
        theta = build_signal(SignalSpec(p=1.0, q=2.0), 300_000)
        rep = structure_report(theta, 0.02)
        assert abs(rep.kappa_hat - 2.0) < 0.15

    def test_monotone_in_delta(self):
        theta = build_signal(SignalSpec(p=0.8, q=1.5), 20_000)
        deltas = np.logspace(-2, 0, 15)
        phis = [structure_report(theta, d).phi_of_delta for d in deltas]
        psis = [structure_report(theta, d).psi_of_delta for d in deltas]
        assert np.all(np.diff(phis) <= 0)
        assert np.all(np.diff(psis) >= 0)

    @given(
        delta=st.floats(min_value=0.01, max_value=2.0),
        p=st.floats(min_value=0.3, max_value=3.0),
    )
    @settings(max_examples=25, deadline=None)
    def test_min_split_identity(self, delta, p):
        # delta^2 Phi(delta) + Psi(delta) == sum_j min(delta^2, theta_j^2)
        theta = build_signal(SignalSpec(p=p, q=1.0), 2000)
        rep = structure_report(theta, delta)
        lhs = delta**2 * rep.phi_of_delta + rep.psi_of_delta
        rhs = np.minimum(delta**2, theta**2).sum()
        assert np.isclose(lhs, rhs, rtol=1e-12)

    def test_permutation_invariance(self):
        # same magnitude multiset under q=1 and q=2 placements
        n_ranks = 50
        spec1 = SignalSpec(p=1.2, q=1.0)
        spec2 = SignalSpec(p=1.2, q=2.0)
        t1 = build_signal(spec1, n_ranks)
        t2 = build_signal(spec2, n_ranks**2 + 1)
        assert np.count_nonzero(t1) == np.count_nonzero(t2) == n_ranks
        for delta in (0.03, 0.1, 0.9):
            r1 = structure_report(t1, delta)
            r2 = structure_report(t2, delta)
            assert r1.phi_of_delta == r2.phi_of_delta
            assert np.isclose(r1.psi_of_delta, r2.psi_of_delta)


class TestPhiPsiRates:
    def test_p1_exponents(self):
        grid = np.logspace(-3, -1, 12)
        phi_slope, psi_slope = phi_psi_rate_check(SignalSpec(p=1.0, q=2.0), grid)
        assert abs(phi_slope - (-1.0)) < 0.05
        assert abs(psi_slope - 1.0) < 0.05

    def test_p3_phi_exponent(self):
        # brute-force slope of Phi over the grid, theory -2/(p+1) = -0.5
        grid = np.logspace(-3.5, -1, 14)
        phi_slope, _ = phi_psi_rate_check(SignalSpec(p=3.0, q=1.0), grid)
        assert abs(phi_slope - (-0.5)) < 0.05

    def test_ordering_independence(self):
        grid = np.logspace(-3, -1, 10)
        a = phi_psi_rate_check(SignalSpec(p=1.0, q=1.0), grid)
        b = phi_psi_rate_check(SignalSpec(p=1.0, q=2.0), grid)
        assert a == b

    def test_narrow_grid_rejected(self):
        with pytest.raises(ValueError, match="decades"):
            phi_psi_rate_check(SignalSpec(p=1.0, q=1.0), np.array([0.1, 0.2, 0.3]))
        with pytest.raises(ValueError, match="grid"):
            phi_psi_rate_check(SignalSpec(p=1.0, q=1.0), np.array([0.001, 0.1]))
