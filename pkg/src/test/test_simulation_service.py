"""
Tests for the simulation service: problem preparation, run bookkeeping and the 1D rows.
"""
import io
import contextlib
import math
import os
import sys
import threading
import unittest
from unittest import mock

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from common.errors import IncrementUnderflow, MeshError, SolverError
from engine.analytic1d import Bar1DParams
from engine.fem.mesh import build_p2
from engine.material import EngineeringParams, FractureParams
from engine.models import BoundaryCondition, GeometrySettings, OutputSettings, Scenario, SolverSettings
from engine.services.simulation_service import (
    ANALYTIC_COLUMNS, RUN_COMPLETED, RUN_FAILED, SimulationService,
)


def _square():
    nodes = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    groups = {"bottom": [(0, 1)], "top": [(2, 3)], "left": [(3, 0)]}
    return build_p2(nodes, [(0, 1, 2), (0, 2, 3)], groups)


def _scenario(name="square", steps=2, **solver) -> Scenario:
    return Scenario(
        name=name,
        engineering=EngineeringParams(E=30000.0, nu=0.2, N=0.5, l_b=0.1),
        fracture=FractureParams(Gc=1000.0, psi_crit=10.0, l_c=0.1),
        degrade_set="BCR",
        geometry=GeometrySettings(mesh_path="unused.mesh"),
        conditions=[
            BoundaryCondition("bottom", "u2"),
            BoundaryCondition("left", "u1"),
            BoundaryCondition("top", "u2", increment=1e-4),
        ],
        steps=steps,
        solver=SolverSettings(**solver),
        output=OutputSettings(reaction_tag="top", verbose=False),
    )


def _quiet(fn, *args, **kwargs):
    with contextlib.redirect_stdout(io.StringIO()):
        return fn(*args, **kwargs)


class TestPreparation(unittest.TestCase):
    def setUp(self):
        self.service = SimulationService()

    def test_build_problem_on_given_mesh(self):
        problem = self.service.build_problem(_scenario(), mesh=_square(), threads=2)
        self.assertEqual(problem.threads, 2)
        self.assertAlmostEqual(problem.material.kappa, 2.0 * 12500.0 / 3.0)
        self.assertEqual(problem.degradation.label, "BCR")

    def test_dangling_condition_tag(self):
        scenario = _scenario()
        scenario.conditions.append(BoundaryCondition("right", "u1"))
        with self.assertRaises(MeshError):
            self.service.build_problem(scenario, mesh=_square())

    def test_manifest_contents(self):
        scenario = _scenario()
        problem = self.service.build_problem(scenario, mesh=_square())
        manifest = self.service.manifest_for(scenario, problem)
        self.assertEqual(manifest.scenario, {"name": "square"})
        self.assertAlmostEqual(manifest.derived["N_check"], 0.5)
        self.assertAlmostEqual(manifest.derived["E_check"], 30000.0, places=6)
        self.assertEqual(manifest.mesh["elements"], 2)

    def test_mesh_info_rejects_unknown_source(self):
        with self.assertRaises(ValueError):
            self.service.mesh_info("not_a_file_or_domain")


class TestRunBookkeeping(unittest.TestCase):
    def setUp(self):
        self.service = SimulationService()

    def test_completed_run(self):
        scenario = _scenario(steps=3)
        problem = self.service.build_problem(scenario, mesh=_square())
        seen = []
        records, state = _quiet(self.service.run, scenario, problem,
                                on_step=lambda record, st: seen.append(record.step), max_steps=2)
        self.assertEqual(seen, [1, 2])
        self.assertEqual(len(records), 2)
        status = self.service.get_status("square")
        self.assertEqual(status.status, RUN_COMPLETED)
        self.assertEqual(status.steps_total, 2)
        self.assertEqual(status.steps_completed, 2)
        self.assertAlmostEqual(records[-1].F_y, 30000.0 / 0.96 * 2e-4, delta=1e-8)

    def test_failed_run_is_marked(self):
        scenario = _scenario(max_halvings=0)
        problem = self.service.build_problem(scenario, mesh=_square())
        with mock.patch("engine.solver.staggered.solve_damage", side_effect=SolverError("forced")):
            with self.assertRaises(IncrementUnderflow):
                _quiet(self.service.run, scenario, problem)
        status = self.service.get_status("square")
        self.assertEqual(status.status, RUN_FAILED)
        self.assertIn("halvings", status.message)

    def test_status_is_a_snapshot(self):
        scenario = _scenario()
        problem = self.service.build_problem(scenario, mesh=_square())
        _quiet(self.service.run, scenario, problem)
        status = self.service.get_status("square")
        status.records.clear()
        self.assertEqual(len(self.service.get_status("square").records), 2)
        self.assertIsNone(self.service.get_status("other"))

    def test_concurrent_runs(self):
        """Two runs in parallel threads keep separate bookkeeping."""
        problems = {}
        for name in ("a", "b"):
            scenario = _scenario(name=name)
            problems[name] = (scenario, self.service.build_problem(scenario, mesh=_square()))
        threads = [threading.Thread(target=self.service.run, args=problems[n], kwargs={"verbose": False})
                   for n in problems]
        with contextlib.redirect_stdout(io.StringIO()):
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        for name in ("a", "b"):
            self.assertEqual(self.service.get_status(name).status, RUN_COMPLETED)
            self.assertEqual(self.service.get_status(name).steps_completed, 2)


class TestAnalyticRows(unittest.TestCase):
    def test_rows_without_fem(self):
        rows = SimulationService().analytic(Bar1DParams(), [0.2, 0.7], l_c_values=[15.0, 30.0],
                                            with_fem=False, verbose=False)
        self.assertEqual(len(rows), 4)
        self.assertEqual(len(rows[0]), len(ANALYTIC_COLUMNS))
        by_lc = {(row[0], row[1]): row for row in rows}
        self.assertEqual(by_lc[(15.0, 0.2)][2], by_lc[(30.0, 0.2)][2])
        self.assertAlmostEqual(by_lc[(30.0, 0.7)][6] / by_lc[(15.0, 0.7)][6], 2.0, places=6)
        self.assertTrue(math.isnan(rows[0][4]))
        self.assertTrue(math.isnan(rows[0][5]))


if __name__ == "__main__":
    unittest.main()
