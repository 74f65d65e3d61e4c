"""
Tests for scenario parsing: units, validation, sweeps and the bar section.
"""
import copy
import os
import sys
import tempfile
import unittest
import warnings

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from cli.config import expand_sweep, parse_bar, parse_scenario, read_config, sweep_label
from cli.scenarios import list_scenarios, resolve_config, scenario_names, scenario_path
from common.errors import ConfigError
from common.units import parse_quantity

MINIMAL = """
[scenario]
name = "mini"

[material]
E = "30 GPa"
nu = 0.2

[fracture]
Gc = "0.1 N/mm"
psi_crit = "1 kJ/m^3"
l_c = "0.75 mm"

[geometry]
mesh = "square.mesh"

[bc]
steps = 3

[[bc.conditions]]
tag = "bottom"
field = "u2"

[[bc.conditions]]
tag = "top"
field = "u2"
increment = "1e-4 mm"
"""


def _raw(text: str = MINIMAL):
    handle = tempfile.NamedTemporaryFile("w", suffix=".toml", delete=False, encoding="utf-8")
    handle.write(text)
    handle.close()
    try:
        return read_config(handle.name)
    finally:
        os.unlink(handle.name)


class TestUnits(unittest.TestCase):
    def test_conversions(self):
        self.assertAlmostEqual(parse_quantity("30 GPa", "stress"), 30000.0)
        self.assertAlmostEqual(parse_quantity("0.1 kJ/m^3", "stress"), 1e-4)
        self.assertAlmostEqual(parse_quantity("2.7 N/mm", "release"), 2.7)
        self.assertAlmostEqual(parse_quantity("1 m", "length"), 1000.0)

    def test_missing_or_wrong_suffix(self):
        with self.assertRaises(ValueError):
            parse_quantity(30.0, "stress")
        with self.assertRaises(ValueError):
            parse_quantity("3 mm", "stress")


class TestParseScenario(unittest.TestCase):
    def test_minimal_scenario(self):
        scenario = parse_scenario(_raw())
        self.assertEqual(scenario.name, "mini")
        self.assertEqual(scenario.steps, 3)
        self.assertAlmostEqual(scenario.engineering.E, 30000.0)
        self.assertAlmostEqual(scenario.fracture.psi_crit, 1e-3)
        self.assertEqual(scenario.degrade_set, "BCR")
        self.assertTrue(scenario.geometry.mesh_path.endswith("square.mesh"))
        self.assertTrue(os.path.isabs(scenario.geometry.mesh_path))
        self.assertEqual(scenario.driving_condition.tag, "top")
        self.assertNotIn("_base_dir", scenario.source["scenario"])

    def test_collects_every_problem(self):
        raw = _raw()
        raw["material"]["nu"] = 0.7
        raw["fracture"]["Gc"] = "0.1 MPa"
        raw["degradation"] = {"set": "BX"}
        raw["bc"]["steps"] = 0
        with self.assertRaises(ConfigError) as ctx:
            parse_scenario(raw)
        messages = ctx.exception.messages
        self.assertGreaterEqual(len(messages), 4)
        self.assertTrue(any(m.startswith("[material]") for m in messages))
        self.assertTrue(any(m.startswith("[fracture] Gc") for m in messages))
        self.assertTrue(any("allowed tokens: B, C, R" in m for m in messages))
        self.assertTrue(any(m.startswith("[bc] steps") for m in messages))

    def test_inconsistent_shear_modulus(self):
        raw = _raw()
        raw["material"]["G"] = "13 GPa"
        with self.assertRaises(ConfigError) as ctx:
            parse_scenario(raw)
        self.assertIn("inconsistent", str(ctx.exception))
        raw["material"]["G"] = "12.5 GPa"
        self.assertAlmostEqual(parse_scenario(raw).engineering.shear_modulus, 12500.0)

    def test_couple_stress_limit(self):
        raw = _raw()
        raw["material"]["N"] = 1.0
        with self.assertRaises(ConfigError) as ctx:
            parse_scenario(raw)
        self.assertIn("N < 1", str(ctx.exception))

    def test_static_loading_rejected(self):
        raw = _raw()
        raw["bc"]["conditions"][1]["increment"] = "0 mm"
        with self.assertRaises(ConfigError) as ctx:
            parse_scenario(raw)
        self.assertIn("no condition changes with the load factor", str(ctx.exception))

    def test_theta_condition_is_dimensionless(self):
        raw = _raw()
        raw["bc"]["conditions"].append({"tag": "top", "field": "theta3", "increment": 1e-3})
        scenario = parse_scenario(raw)
        self.assertEqual(scenario.conditions[-1].increment, 1e-3)

    def test_band_narrower_than_six_lengths(self):
        raw = _raw()
        raw["geometry"] = {"id": "sen_plate", "h_far": "0.05 mm", "h_fine": "0.01 mm", "band": "1 mm"}
        with self.assertRaises(ConfigError) as ctx:
            parse_scenario(raw)
        self.assertIn("band must be at least 6 l_c", str(ctx.exception))
        raw["geometry"]["band"] = "5 mm"
        self.assertAlmostEqual(parse_scenario(raw).geometry.band, 5.0)

    def test_unknown_section(self):
        with self.assertRaises(ConfigError):
            _raw(MINIMAL + "\n[extras]\nfoo = 1\n")

    def test_syntax_error(self):
        with self.assertRaises(ConfigError):
            _raw("[material\nE = 1")


class TestSweeps(unittest.TestCase):
    def test_label(self):
        self.assertEqual(sweep_label("material.l_b", "0.05 mm"), "material.l_b=0.05mm")
        self.assertEqual(sweep_label("degradation.set", "BR"), "degradation.set=BR")

    def test_no_sweep_single_entry(self):
        raw = _raw()
        self.assertEqual(expand_sweep(raw), [("", raw)])

    def test_variants(self):
        raw = _raw()
        raw["sweep"] = {"parameter": "material.N", "values": [0.1, 0.5]}
        original = copy.deepcopy(raw)
        runs = expand_sweep(raw)
        self.assertEqual([label for label, _ in runs], ["material.N=0.1", "material.N=0.5"])
        self.assertEqual(runs[1][1]["material"]["N"], 0.5)
        self.assertEqual(runs[0][1]["scenario"]["name"], "mini[material.N=0.1]")
        self.assertNotIn("sweep", runs[0][1])
        self.assertEqual(raw, original)

    def test_malformed_sweep(self):
        raw = _raw()
        raw["sweep"] = {"parameter": "l_b", "values": []}
        with self.assertRaises(ConfigError) as ctx:
            expand_sweep(raw)
        self.assertEqual(len(ctx.exception.messages), 2)


class TestBundledScenarios(unittest.TestCase):
    def test_every_scenario_parses(self):
        names = scenario_names()
        self.assertIn("bar_1d", names)
        self.assertIn("tpb_beam", names)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for name in names:
                raw = read_config(scenario_path(name))
                if name == "bar_1d":
                    params, options = parse_bar(raw)
                    self.assertAlmostEqual(params.C_B, 30000.0)
                    self.assertAlmostEqual(params.psi_crit, 1e-4)
                    self.assertEqual(options["n_elements"], 1200)
                    self.assertEqual(options["l_c_sweep"], [7.5, 15.0, 30.0])
                    continue
                for label, variant in expand_sweep(raw):
                    scenario = parse_scenario(variant)
                    self.assertTrue(scenario.name.startswith(name))
                    self.assertIsNotNone(scenario.driving_condition)

    def test_descriptions_listed(self):
        listed = dict(list_scenarios())
        self.assertTrue(all(listed.values()))
        sections = {
            "trapezoid_p10": "§5.1", "trapezoid_p2_5": "§5.1", "trapezoid_micropolar": "§5.1",
            "sen_tension": "§5.2", "sen_shear": "§5.2", "tpb_beam": "§5.3", "den_plate": "§5.4",
        }
        for name, section in sections.items():
            self.assertTrue(listed[name].endswith(f"({section})"), listed[name])

    def test_resolve_by_name(self):
        self.assertEqual(resolve_config("den_plate"), scenario_path("den_plate"))
        with self.assertRaises(KeyError):
            scenario_path("no_such_case")

    def test_bar_section_errors(self):
        raw = read_config(scenario_path("bar_1d"))
        raw["bar"]["n_elements"] = 401
        raw["bar"]["d_targets"] = [0.5, 1.5]
        with self.assertRaises(ConfigError) as ctx:
            parse_bar(raw)
        self.assertEqual(len(ctx.exception.messages), 2)


if __name__ == "__main__":
    unittest.main()
