"""
Tests for the size-dependent bar: closed form, damage profile and the
finite element cross-check.
"""
import math
import os
import sys
import unittest
import warnings
import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from engine.analytic1d import (
    Bar1DParams, bar_stiffness, damage_profile, effective_modulus,
    profile_residual, simulate_bar, stress_of_damage,
)


class TestEffectiveModulus(unittest.TestCase):
    def test_unit_moduli(self):
        p = Bar1DParams(C_B=1.0, C_C=1.0, C_R=1.0)
        self.assertAlmostEqual(effective_modulus(p, "literal"), 1.0)
        self.assertAlmostEqual(effective_modulus(p, "consistent"), 3.0)

    def test_default_moduli(self):
        p = Bar1DParams()
        self.assertAlmostEqual(bar_stiffness(p), 30000.0 + 10000.0 / 3.0, places=8)
        self.assertAlmostEqual(effective_modulus(p, "consistent"), 2.0 * bar_stiffness(p), places=8)
        self.assertAlmostEqual(effective_modulus(p, "literal"), 40000.0 / 3.0, places=6)

    def test_vanishing_coupling_gives_classical_bar(self):
        p = Bar1DParams(C_B=30000.0, C_C=1e-9, C_R=5000.0)
        for convention in ("literal", "consistent"):
            self.assertAlmostEqual(effective_modulus(p, convention) / 60000.0, 1.0, places=9)

    def test_unknown_convention(self):
        with self.assertRaises(ValueError):
            effective_modulus(Bar1DParams(), "exact")

    def test_nonpositive_modulus(self):
        with self.assertRaises(ValueError):
            Bar1DParams(C_C=0.0)

    def test_short_bar_warns(self):
        with self.assertWarns(RuntimeWarning):
            Bar1DParams(L=100.0, l_c=15.0)


class TestStressOfDamage(unittest.TestCase):
    def setUp(self):
        self.p = Bar1DParams()

    def test_end_points(self):
        c_star = effective_modulus(self.p, "consistent")
        self.assertAlmostEqual(stress_of_damage(0.0, self.p, "consistent"), math.sqrt(c_star * 1e-4), places=12)
        self.assertAlmostEqual(stress_of_damage(1.0, self.p, "consistent"), 0.0)
        c_literal = effective_modulus(self.p, "literal")
        self.assertAlmostEqual(stress_of_damage(0.0, self.p, "literal"), math.sqrt(2.0 * c_literal * 1e-4), places=12)

    def test_independent_of_regularization_length(self):
        d = np.linspace(0.05, 0.95, 10)
        short = stress_of_damage(d, Bar1DParams(l_c=7.5), "consistent")
        long = stress_of_damage(d, Bar1DParams(l_c=30.0), "consistent")
        np.testing.assert_allclose(short, long, rtol=0.0, atol=0.0)

    def test_softening_branch_decreases(self):
        sigma = stress_of_damage(np.linspace(0.0, 1.0, 51), self.p)
        self.assertTrue(np.all(np.diff(sigma) < 0.0))

    def test_scalar_and_array(self):
        self.assertIsInstance(stress_of_damage(0.5, self.p), float)
        self.assertEqual(stress_of_damage([0.1, 0.2], self.p).shape, (2,))

    def test_out_of_range(self):
        with self.assertRaises(ValueError):
            stress_of_damage(1.2, self.p)


class TestDamageProfile(unittest.TestCase):
    def setUp(self):
        self.p = Bar1DParams()

    def test_shape(self):
        prof = damage_profile(0.6, self.p)
        self.assertAlmostEqual(prof.d[0], 0.6)
        self.assertAlmostEqual(prof.d[-1], 0.0, delta=1e-15)
        self.assertEqual(prof.x[0], 0.0)
        self.assertTrue(np.all(np.diff(prof.x) > 0.0))
        self.assertTrue(np.all(np.diff(prof.d) <= 0.0))
        self.assertTrue(np.all(prof.dprime <= 0.0))
        self.assertGreater(prof.l_z, self.p.l_c)

    def test_first_integral_holds(self):
        for convention in ("literal", "consistent"):
            for d_star in (0.1, 0.5, 0.9):
                res = profile_residual(damage_profile(d_star, self.p), self.p, convention)
                self.assertLess(np.abs(res).max(), 1e-12)

    def test_support_scales_with_regularization_length(self):
        base = damage_profile(0.5, Bar1DParams(l_c=15.0)).l_z
        double = damage_profile(0.5, Bar1DParams(l_c=30.0)).l_z
        self.assertAlmostEqual(double / base, 2.0, places=7)

    def test_evaluate_is_symmetric(self):
        prof = damage_profile(0.4, self.p)
        np.testing.assert_allclose(prof.evaluate([-3.0, 3.0]), prof.evaluate([3.0, -3.0]))
        self.assertEqual(float(prof.evaluate(prof.l_z + 1.0)), 0.0)
        self.assertEqual(len(prof.points), len(prof.x))

    def test_rejects_boundary_values(self):
        with self.assertRaises(ValueError):
            damage_profile(0.0, self.p)
        with self.assertRaises(ValueError):
            damage_profile(1.0, self.p)


class TestSimulateBar(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.p = Bar1DParams()
        cls.result = simulate_bar(cls.p, n_elements=1200, increments=(0.2, 0.5, 0.9))

    def test_undamaged_compliance(self):
        self.assertAlmostEqual(self.result.compliance / self.result.compliance_exact, 1.0, places=6)

    def test_energy_at_unit_stress(self):
        """Mean elastic energy at unit end stress equals 1 / C*."""
        c_star = effective_modulus(self.p, "consistent")
        self.assertAlmostEqual(self.result.elastic_energy * c_star, 1.0, places=6)

    def test_agrees_with_closed_form(self):
        self.assertLess(self.result.relative_error.max(), 0.05)
        self.assertTrue(np.all(np.diff(self.result.sigma0) < 0.0))

    def test_support_close_to_profile(self):
        expected = np.array([damage_profile(d, self.p).l_z for d in self.result.d_star])
        np.testing.assert_allclose(self.result.l_z, expected, rtol=0.1)

    def test_couple_length_does_not_change_compliance(self):
        other = simulate_bar(Bar1DParams(l_e=2.0), n_elements=400, increments=())
        self.assertAlmostEqual(other.compliance / self.result.compliance, 1.0, places=8)

    def test_independent_of_regularization_length(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            long = simulate_bar(Bar1DParams(l_c=30.0), n_elements=1200, increments=(0.2, 0.5, 0.9))
        np.testing.assert_allclose(long.sigma0, self.result.sigma0, rtol=0.02)

    def test_classical_limit(self):
        p = Bar1DParams(C_C=1e-3)
        result = simulate_bar(p, n_elements=1200, increments=(0.5,))
        classical = math.sqrt(2.0 * p.C_B * p.psi_crit * 0.25 / 6.0)
        self.assertAlmostEqual(result.sigma0[0] / classical, 1.0, delta=0.05)

    def test_odd_element_count_rejected(self):
        with self.assertRaises(ValueError):
            simulate_bar(self.p, n_elements=401, increments=(0.5,))


if __name__ == "__main__":
    unittest.main()
