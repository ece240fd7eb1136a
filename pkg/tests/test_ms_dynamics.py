#!/usr/bin/env python

"""Tests for `spin_motion.ms_dynamics`."""

import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from spin_motion.exceptions import DomainError, IntegrationError, TruncationError
from spin_motion.fock import (
    SpinMotionState,
    annihilation,
    coherent_amplitudes,
    fidelity,
    fock_state,
    ground_state,
    ms_spin_basis,
    required_dim,
)
from spin_motion.ms_dynamics import (
    DriveConfig,
    alpha_of_t,
    cat_state_fidelity,
    detuning_scan,
    displacement_reach,
    evolve_numeric,
    loop_radius,
    max_branch_distance,
    p_up_fock,
    p_up_ground,
    p_up_thermal,
    p_up_thermal_sum,
    phase_space_insets,
    time_scan,
    trajectory,
    two_branch_entropy,
)
from spin_motion.presets import (
    FIG5_DURATION,
    FIG5_ETA,
    FIG5_NBAR,
    FIG5_RABI,
    fig5_drive,
    fig5_grid,
    fig5_loop_detunings,
)

TWO_PI = 2 * math.pi
ETA = FIG5_ETA
TAU = FIG5_DURATION


class TestDriveConfig(unittest.TestCase):
    def test_validation(self):
        for kwargs in (
            {"rabi": -1.0, "detuning": 0.0, "duration": 1e-4},
            {"rabi": 1.0, "detuning": math.inf, "duration": 1e-4},
            {"rabi": 1.0, "detuning": 0.0, "duration": math.nan},
            {"rabi": 1.0, "detuning": 0.0, "duration": -1e-4},
        ):
            with self.assertRaises(DomainError):
                DriveConfig(**kwargs)

    def test_copies(self):
        drive = fig5_drive()
        self.assertEqual(drive.with_detuning(5.0).detuning, 5.0)
        self.assertEqual(drive.with_duration(1e-5).duration, 1e-5)
        self.assertEqual(drive.detuning, 0.0)


class TestTrajectory(unittest.TestCase):
    def setUp(self):
        self.drive = DriveConfig(FIG5_RABI, TWO_PI * 5e3, TAU)
        self.alpha0 = ETA * FIG5_RABI / (2 * self.drive.detuning)

    def test_anchors(self):
        period = TWO_PI / self.drive.detuning
        self.assertEqual(alpha_of_t(self.drive, ETA, 0.0), 0.0)
        self.assertLess(abs(alpha_of_t(self.drive, ETA, period)), 1e-12 * self.alpha0)
        assert_allclose(alpha_of_t(self.drive, ETA, period / 2), 2 * self.alpha0, rtol=1e-12)
        self.assertAlmostEqual(loop_radius(self.drive, ETA), self.alpha0)

    def test_zero_detuning_limit(self):
        drive = self.drive.with_detuning(0.0)
        t = np.linspace(0, TAU, 7)
        assert_allclose(alpha_of_t(drive, ETA, t), 1j * ETA * FIG5_RABI * t / 2, rtol=1e-15)
        self.assertEqual(loop_radius(drive, ETA), math.inf)

    def test_vector_times(self):
        t = np.linspace(0, TAU, 11)
        values = alpha_of_t(self.drive, ETA, t)
        self.assertEqual(values.shape, (11,))
        assert_allclose(values[3], alpha_of_t(self.drive, ETA, t[3]))
        with self.assertRaises(DomainError):
            alpha_of_t(self.drive, ETA, -1e-6)

    def test_trajectory_stays_on_circle(self):
        points = trajectory(self.drive, ETA)
        self.assertEqual(len(points), 201)
        self.assertEqual(points[0].alpha, 0.0)
        self.assertEqual(points[-1].t, TAU)
        centre = self.alpha0
        radii = [abs(pt.alpha - centre) for pt in points]
        assert_allclose(radii[1:], self.alpha0, rtol=1e-9)
        self.assertLessEqual(max(abs(pt.alpha) for pt in points), 2 * self.alpha0 * (1 + 1e-12))

    def test_max_branch_distance(self):
        assert_allclose(max_branch_distance(self.drive, ETA), 4 * self.alpha0, rtol=1e-12)
        at_zero = max_branch_distance(self.drive.with_detuning(0.0), ETA)
        self.assertAlmostEqual(at_zero, ETA * FIG5_RABI * TAU)
        self.assertAlmostEqual(at_zero, 0.515, delta=1e-3)
        self.assertEqual(max_branch_distance(DriveConfig(0.0, 1.0, TAU), ETA), 0.0)
        short = self.drive.with_duration(1e-6)
        assert_allclose(
            max_branch_distance(short, ETA), 2 * abs(alpha_of_t(short, ETA, 1e-6)), rtol=1e-12
        )

    def test_insets(self):
        ds = phase_space_insets(fig5_drive(), ETA, fig5_loop_detunings(2), n_points=51)
        self.assertEqual(dict(ds.sizes), {"detuning": 4, "t": 51})
        # every loop is closed at the end of the pulse
        self.assertLess(float(ds["branch_distance"].isel(t=-1).max()), 1e-12)
        self.assertEqual(ds.attrs["eta_eff"], ETA)
        assert_allclose(
            ds["branch_distance"],
            2 * np.hypot(ds["alpha_re"], ds["alpha_im"]),
            rtol=1e-12,
        )


class TestClosedForms(unittest.TestCase):
    def test_loop_zeros(self):
        for j in range(1, 6):
            drive = DriveConfig(FIG5_RABI, TWO_PI * j / TAU, TAU)
            self.assertLess(p_up_ground(drive, ETA, TAU), 1e-12)

    def test_ground_state_range(self):
        drive = DriveConfig(FIG5_RABI, TWO_PI * 3e3, TAU)
        values = p_up_ground(drive, ETA, np.linspace(0, 5 * TAU, 200))
        self.assertTrue(np.all(values >= 0) and np.all(values <= 0.5))

    def test_thermal_reduces_to_ground(self):
        drive = DriveConfig(FIG5_RABI, TWO_PI * 3e3, TAU)
        t = np.linspace(0, TAU, 17)
        assert_allclose(p_up_thermal(drive, ETA, t, 0.0), p_up_ground(drive, ETA, t), rtol=1e-15)
        assert_allclose(p_up_fock(drive, ETA, 5e-5, 0), p_up_ground(drive, ETA, 5e-5), rtol=1e-12)

    def test_thermal_monotone_in_nbar(self):
        drive = DriveConfig(FIG5_RABI, TWO_PI * 3e3, TAU)
        values = [p_up_thermal(drive, ETA, 2e-5, nbar) for nbar in np.linspace(0, 300, 31)]
        self.assertTrue(np.all(np.diff(values) > 0))
        with self.assertRaises(DomainError):
            p_up_thermal(drive, ETA, 2e-5, -1.0)

    def test_thermal_sum_identity(self):
        drive = DriveConfig(1.0, ETA / (2 * 0.3), 1.0)
        t = math.pi / (3 * drive.detuning)
        for nbar in (0.0, 2.0):
            assert_allclose(
                p_up_thermal_sum(drive, ETA, t, nbar),
                p_up_thermal(drive, ETA, t, nbar),
                rtol=1e-8,
            )

    def test_continuity_at_zero_detuning(self):
        at_zero = p_up_ground(fig5_drive(0.0), ETA, TAU)
        near = p_up_ground(fig5_drive(1e-6 * TWO_PI / TAU), ETA, TAU)
        self.assertLess(abs(near - at_zero), 1e-10)

    def test_two_branch_entropy(self):
        self.assertEqual(two_branch_entropy(0.0), 0.0)
        self.assertAlmostEqual(two_branch_entropy(3.0), 1.0, places=12)


class TestDetuningScan(unittest.TestCase):
    def test_reference_scan(self):
        scan = detuning_scan(fig5_drive(), ETA, FIG5_NBAR, fig5_grid())
        self.assertEqual(len(scan), 501 + 8)
        on_loops = np.isin(scan.x, fig5_loop_detunings(4))
        self.assertEqual(on_loops.sum(), 8)
        self.assertLess(scan.p[on_loops].max(), 1e-10)
        self.assertEqual(scan.meta["kind"], "detuning")
        zeros = detuning_scan(fig5_drive(), ETA, FIG5_NBAR, fig5_loop_detunings(4))
        self.assertLess(zeros.p.max(), 1e-10)
        # half-loop detunings and resonance give the largest |alpha|
        peaks = detuning_scan(fig5_drive(), ETA, FIG5_NBAR, [-math.pi / TAU, 0.0, math.pi / TAU])
        self.assertTrue(np.all(peaks.p >= 0.45))

    def test_parallel_matches_serial(self):
        grid = fig5_grid()
        serial = detuning_scan(fig5_drive(), ETA, FIG5_NBAR, grid)
        parallel = detuning_scan(fig5_drive(), ETA, FIG5_NBAR, grid, parallel=True, chunk_size=64)
        assert_allclose(parallel.p, serial.p, rtol=1e-14, atol=1e-300)
        assert_allclose(parallel.x, grid)

    def test_bad_grids(self):
        for grid in ([], [[0.0, 1.0]], [0.0, math.nan], [0.0, 0.0, 1.0], [0.0, 2.0, 1.0]):
            with self.assertRaises(DomainError):
                detuning_scan(fig5_drive(), ETA, FIG5_NBAR, grid)

    def test_descending_grid(self):
        grid = fig5_grid()[::-1]
        scan = detuning_scan(fig5_drive(), ETA, FIG5_NBAR, grid)
        assert_allclose(scan.x, grid)

    def test_time_scan(self):
        drive = DriveConfig(FIG5_RABI, TWO_PI * 3e3, TAU)
        times = np.linspace(0, 2 * TAU, 41)
        scan = time_scan(drive, ETA, 10.0, times)
        assert_allclose(scan.p, p_up_thermal(drive, ETA, times, 10.0))
        self.assertEqual(scan.meta["kind"], "time")


class TestNumericIntegration(unittest.TestCase):
    def test_no_coupling(self):
        initial = ground_state(8)
        self.assertIs(evolve_numeric(DriveConfig(0.0, 1.0, TAU), ETA, initial), initial)

    def test_matches_closed_form(self):
        drive = DriveConfig(FIG5_RABI, TWO_PI * 3e3, TAU)
        dim = required_dim(displacement_reach(drive, ETA))
        final = evolve_numeric(drive, ETA, ground_state(dim))
        self.assertLessEqual(abs(final.population_up - p_up_ground(drive, ETA, TAU)), 1e-4)
        self.assertAlmostEqual(final.norm, 1.0, places=9)

    def test_excited_fock_levels(self):
        drive = DriveConfig(FIG5_RABI, TWO_PI * 2e3, 1e-4, phase_sum=0.4)
        for n in (1, 2):
            dim = required_dim(displacement_reach(drive, ETA), n)
            final = evolve_numeric(drive, ETA, fock_state(n, dim))
            self.assertLess(abs(final.population_up - p_up_fock(drive, ETA, 1e-4, n)), 1e-6)

    def test_right_branch_is_displaced(self):
        drive = DriveConfig(FIG5_RABI, TWO_PI * 4e3, 1e-4, phase_sum=1.1)
        dim = required_dim(displacement_reach(drive, ETA))
        right, _ = ms_spin_basis(drive.phase_sum)
        motion = np.zeros(dim, dtype=complex)
        motion[0] = 1.0
        final = evolve_numeric(drive, ETA, SpinMotionState.product(right, motion))
        expected = SpinMotionState.product(
            right, coherent_amplitudes(alpha_of_t(drive, ETA, 1e-4), dim)
        )
        self.assertGreater(fidelity(expected, final), 1 - 1e-8)

    def test_mean_displacement_at_half_loop(self):
        # <a> of the |right> branch reaches 2 alpha0 half way round the loop
        detuning = TWO_PI * 4e3
        half_loop = math.pi / detuning
        drive = DriveConfig(FIG5_RABI, detuning, half_loop, phase_sum=0.6)
        dim = required_dim(displacement_reach(drive, ETA))
        right, _ = ms_spin_basis(drive.phase_sum)
        motion = np.zeros(dim, dtype=complex)
        motion[0] = 1.0
        final = evolve_numeric(drive, ETA, SpinMotionState.product(right, motion))
        mean_a = final.expectation_motional(annihilation(dim))
        assert_allclose(mean_a, alpha_of_t(drive, ETA, half_loop), atol=1e-7)
        self.assertAlmostEqual(abs(mean_a), 2 * loop_radius(drive, ETA), delta=1e-7)

    def test_undersized_truncation(self):
        with self.assertRaises(TruncationError) as ctx:
            evolve_numeric(fig5_drive(), ETA, ground_state(8))
        self.assertGreater(ctx.exception.suggested_dim, 8)

    def test_refinement_limit(self):
        drive = DriveConfig(FIG5_RABI, TWO_PI * 3e3, TAU)
        dim = required_dim(displacement_reach(drive, ETA))
        with self.assertRaises(IntegrationError):
            evolve_numeric(drive, ETA, ground_state(dim), tolerance=1e-30, max_halvings=1)


class TestCatState(unittest.TestCase):
    def setUp(self):
        self.eta = 0.13
        self.drive = DriveConfig(TWO_PI * 35e3, TWO_PI * 10e3, 1e-4)

    def test_fidelity_along_loop(self):
        for t in np.linspace(0, 1e-4, 10):
            fid, _ = cat_state_fidelity(self.drive, self.eta, t)
            self.assertGreater(fid, 1 - 1e-4)

    def test_disentangled_after_loop(self):
        _, entropy = cat_state_fidelity(self.drive, self.eta, TWO_PI / self.drive.detuning)
        self.assertLess(entropy, 1e-6)

    def test_entropy_of_separated_branches(self):
        # half a loop of radius 0.15 separates the branches by |alpha| = 0.3
        detuning = self.eta * self.drive.rabi / 0.3
        drive = DriveConfig(self.drive.rabi, detuning, math.pi / detuning)
        self.assertAlmostEqual(abs(alpha_of_t(drive, self.eta, drive.duration)), 0.3, places=12)
        _, entropy = cat_state_fidelity(drive, self.eta, drive.duration)
        self.assertAlmostEqual(entropy, two_branch_entropy(0.3), delta=1e-6)


if __name__ == "__main__":
    unittest.main()
