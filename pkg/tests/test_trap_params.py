#!/usr/bin/env python

"""Tests for `spin_motion.trap_params` and `spin_motion.constants`."""

import math
import unittest
from pathlib import Path

import numpy as np
import scipy.constants as sc
from numpy.testing import assert_allclose

from spin_motion import constants
from spin_motion.exceptions import DomainError
from spin_motion.trap_params import (
    YB171,
    YB171_MINUS,
    IonSpecies,
    TrapEnvironment,
    crosstalk_bound,
    derived_quantities,
    effective_lamb_dicke,
    gradient_from_splitting,
    ground_state_extent,
    laser_lamb_dicke,
    load_species,
    splitting_from_gradient,
    two_ion_positions,
    two_ion_separation,
    zeeman_shift,
)

NU_Z = 2 * math.pi * 268e3
SPLITTING = 2 * math.pi * 2.71e6


class TestConstants(unittest.TestCase):
    def test_against_scipy_constants(self):
        pairs = [
            (constants.HBAR, sc.hbar),
            (constants.MU_B, sc.physical_constants["Bohr magneton"][0]),
            (constants.E_CHARGE, sc.e),
            (constants.EPS0, sc.epsilon_0),
            (constants.AMU, sc.physical_constants["atomic mass constant"][0]),
            (
                constants.ELECTRON_MASS_AMU,
                sc.physical_constants["electron mass in u"][0],
            ),
        ]
        for ours, reference in pairs:
            assert_allclose(ours, reference, rtol=1e-8)

    def test_ion_is_lighter_than_atom(self):
        self.assertLess(constants.YB171_ION_MASS_AMU, constants.YB171_ATOM_MASS_AMU)


class TestLambDicke(unittest.TestCase):
    def setUp(self):
        self.trap = TrapEnvironment(nu_z=NU_Z, gradient=23.3)

    def test_effective_lamb_dicke_anchor(self):
        eta = effective_lamb_dicke(YB171, self.trap)
        self.assertAlmostEqual(eta, 0.013, delta=5e-4)
        assert_allclose(eta, 0.0128, rtol=1e-2)

    def test_closed_form_equivalent(self):
        # mu_B dB/dz / (sqrt(2 m hbar) nu_z^(3/2)) for a g_F = 1 transition
        expected = (
            constants.MU_B
            * 23.3
            / (math.sqrt(2 * YB171.mass * constants.HBAR) * NU_Z**1.5)
        )
        assert_allclose(effective_lamb_dicke(YB171, self.trap), expected, rtol=1e-12)

    def test_frequency_scaling(self):
        faster = TrapEnvironment(nu_z=4 * NU_Z, gradient=23.3)
        assert_allclose(
            effective_lamb_dicke(YB171, faster),
            effective_lamb_dicke(YB171, self.trap) / 8,
            rtol=1e-12,
        )

    def test_sign_of_slope_irrelevant(self):
        self.assertEqual(
            effective_lamb_dicke(YB171, self.trap),
            effective_lamb_dicke(YB171_MINUS, self.trap),
        )

    def test_no_gradient(self):
        self.assertEqual(effective_lamb_dicke(YB171, TrapEnvironment(nu_z=NU_Z)), 0.0)

    def test_laser_lamb_dicke_anchor(self):
        eta = laser_lamb_dicke(YB171, self.trap, 369.5e-9, counterpropagating=True)
        self.assertAlmostEqual(eta, 0.36, delta=0.01)
        single = laser_lamb_dicke(YB171, self.trap, 369.5e-9, counterpropagating=False)
        assert_allclose(eta, 2 * single, rtol=1e-15)

    def test_laser_infinite_wavelength(self):
        self.assertEqual(laser_lamb_dicke(YB171, self.trap, math.inf), 0.0)
        with self.assertRaises(DomainError):
            laser_lamb_dicke(YB171, self.trap, 0.0)

    def test_ground_state_extent(self):
        z0 = ground_state_extent(YB171, NU_Z)
        assert_allclose(z0, math.sqrt(sc.hbar / (2 * YB171.mass * NU_Z)), rtol=1e-8)
        self.assertEqual(z0, self.trap.z0(YB171))


class TestRandomizedLambDicke(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(1)
        self.samples = zip(
            rng.uniform(1.0, 250.0, 1000),
            2 * math.pi * rng.uniform(10e3, 10e6, 1000),
            rng.uniform(0.0, 100.0, 1000),
        )

    def test_two_forms_agree(self):
        for mass_amu, nu_z, gradient in self.samples:
            species = IonSpecies("random", mass_amu, YB171.zeeman_slope)
            eta = effective_lamb_dicke(species, TrapEnvironment(nu_z, gradient))
            expected = (
                constants.MU_B
                * gradient
                / (math.sqrt(2 * species.mass * constants.HBAR) * nu_z**1.5)
            )
            assert_allclose(eta, expected, rtol=1e-12)

    def test_gradient_and_mass_scaling(self):
        for mass_amu, nu_z, gradient in self.samples:
            species = IonSpecies("random", mass_amu, YB171.zeeman_slope)
            heavier = IonSpecies("random x4", 4 * mass_amu, YB171.zeeman_slope)
            eta = effective_lamb_dicke(species, TrapEnvironment(nu_z, gradient))
            steeper = effective_lamb_dicke(species, TrapEnvironment(nu_z, 2 * gradient))
            assert_allclose(steeper, 2 * eta, rtol=1e-12)
            assert_allclose(
                effective_lamb_dicke(heavier, TrapEnvironment(nu_z, gradient)),
                eta / 2,
                rtol=1e-12,
            )


class TestTwoIons(unittest.TestCase):
    def test_separation_anchor(self):
        d = two_ion_separation(YB171, NU_Z)
        self.assertAlmostEqual(d * 1e6, 8.3, delta=0.05)
        assert_allclose(d * 1e6, 8.307, atol=1e-3)

    def test_positions_symmetric(self):
        z1, z2 = two_ion_positions(YB171, NU_Z)
        self.assertEqual(z1, -z2)
        assert_allclose(z2 - z1, two_ion_separation(YB171, NU_Z), rtol=1e-15)

    def test_gradient_from_splitting_anchor(self):
        d = two_ion_separation(YB171, NU_Z)
        gradient = gradient_from_splitting(YB171_MINUS, SPLITTING, d)
        self.assertAlmostEqual(gradient, 23.3, delta=0.6)
        assert_allclose(gradient, 23.31, atol=0.01)

    def test_interleaved_gradient_inversion(self):
        # splitting implied by a 23.6 T/m gradient at 268 kHz, and back
        d = two_ion_separation(YB171_MINUS, NU_Z)
        splitting = splitting_from_gradient(YB171_MINUS, 23.6, d)
        self.assertAlmostEqual(splitting / (2 * math.pi) / 1e6, 2.744, delta=1e-3)
        assert_allclose(gradient_from_splitting(YB171_MINUS, splitting, d), 23.6, rtol=1e-12)
        eta = effective_lamb_dicke(YB171, TrapEnvironment(nu_z=NU_Z, gradient=23.6))
        anchor = effective_lamb_dicke(YB171, TrapEnvironment(nu_z=NU_Z, gradient=23.3))
        assert_allclose(eta / anchor, 23.6 / 23.3, rtol=1e-12)
        self.assertAlmostEqual(eta, 0.01295, delta=5e-5)

    def test_splitting_round_trip(self):
        d = two_ion_separation(YB171, NU_Z)
        splitting = splitting_from_gradient(YB171, 23.3, d)
        assert_allclose(gradient_from_splitting(YB171, splitting, d), 23.3, rtol=1e-12)

    def test_zeeman_shift_difference_is_splitting(self):
        trap = TrapEnvironment(nu_z=NU_Z, gradient=23.3, bias_field=1e-4)
        z1, z2 = two_ion_positions(YB171, NU_Z)
        difference = zeeman_shift(YB171, trap, z2) - zeeman_shift(YB171, trap, z1)
        assert_allclose(
            difference,
            splitting_from_gradient(YB171, 23.3, z2 - z1),
            rtol=1e-9,
        )

    def test_crosstalk_anchor(self):
        bound = crosstalk_bound(2 * math.pi * 40e3, SPLITTING)
        self.assertAlmostEqual(bound, 2.2e-4, delta=0.1e-4)
        assert_allclose(bound, (40 / 2710) ** 2, rtol=1e-12)

    def test_crosstalk_zero_splitting(self):
        with self.assertRaises(DomainError):
            crosstalk_bound(2 * math.pi * 40e3, 0.0)


class TestValidation(unittest.TestCase):
    def test_trap_rejects_bad_values(self):
        for kwargs in (
            {"nu_z": 0.0},
            {"nu_z": -NU_Z},
            {"nu_z": math.nan},
            {"nu_z": NU_Z, "gradient": -1.0},
            {"nu_z": NU_Z, "gradient": math.inf},
        ):
            with self.assertRaises(DomainError):
                TrapEnvironment(**kwargs)

    def test_species_rejects_bad_mass(self):
        with self.assertRaises(DomainError):
            IonSpecies("bad", 0.0, 1.0)

    def test_zero_slope_has_no_gradient(self):
        flat = IonSpecies("clock", 171.0, 0.0)
        with self.assertRaises(DomainError):
            gradient_from_splitting(flat, SPLITTING, 8e-6)
        self.assertIsNone(
            derived_quantities(flat, TrapEnvironment(nu_z=NU_Z)).predicted_splitting
        )

    def test_non_positive_separation(self):
        with self.assertRaises(DomainError):
            gradient_from_splitting(YB171, SPLITTING, 0.0)


class TestDerived(unittest.TestCase):
    def test_matches_individual_calls(self):
        trap = TrapEnvironment(nu_z=NU_Z, gradient=23.3)
        derived = derived_quantities(YB171, trap, 369.5e-9)
        self.assertEqual(derived.eta_eff, effective_lamb_dicke(YB171, trap))
        self.assertEqual(derived.eta_laser, laser_lamb_dicke(YB171, trap, 369.5e-9))
        self.assertEqual(derived.ion_separation, two_ion_separation(YB171, NU_Z))
        self.assertIsNone(derived_quantities(YB171, trap).eta_laser)

    def test_packaged_species_file(self):
        path = Path(__file__).parents[1] / "spin_motion" / "species.cfg"
        species = load_species(str(path))
        self.assertEqual(species.label, YB171.label)
        assert_allclose(species.mass_amu, YB171.mass_amu, rtol=1e-10)
        assert_allclose(species.zeeman_slope, YB171.zeeman_slope, rtol=1e-8)


if __name__ == "__main__":
    unittest.main()
