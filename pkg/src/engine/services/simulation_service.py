"""
Service layer for simulation runs.
Combines mesh preparation, material derivation, the load loop and the 1D oracle.
"""
from dataclasses import dataclass, field, replace
from functools import wraps
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import math
import os
import sys
import threading

current_dir = os.path.dirname(os.path.abspath(__file__))
engine_dir = os.path.dirname(current_dir)
src_dir = os.path.dirname(engine_dir)
if src_dir not in sys.path:
    sys.path.insert(0, src_dir)


def _synchronized(method):
    @wraps(method)
    def wrapper(self, *args, **kwargs):
        with self._lock:
            return method(self, *args, **kwargs)
    return wrapper

from common.errors import SolverError
from engine import analytic1d
from engine.analytic1d import Bar1DParams
from engine.fem.geometry import generate_benchmark
from engine.fem.mesh import Mesh, load_mesh, mesh_summary
from engine.material import (
    derive_constants, engineering_from_constants, fracture_threshold, max_regularization_length,
)
from engine.models import GeometrySettings, LoadStepRecord, RunManifest, Scenario
from engine.phasefield import DegradationConfig
from engine.solver.assembly import Problem
from engine.solver.staggered import FieldState, run_load_loop

RUN_PENDING = "pending"
RUN_RUNNING = "running"
RUN_COMPLETED = "completed"
RUN_FAILED = "failed"

# element sizes for mesh-info on a bare geometry id (h_far, h_fine) [mm]
DEFAULT_SIZES = {
    "trapezoid": (20.0, 3.0),
    "sen_plate": (0.05, 0.01),
    "tpb_beam": (10.0, 2.0),
    "den_plate": (5.0, 1.0),
}

ANALYTIC_COLUMNS = (
    "l_c", "d_star", "sigma0_analytic", "sigma0_analytic_literal", "sigma0_fem", "rel_error", "l_z",
)


@dataclass
class RunStatus:
    name: str
    status: str = RUN_PENDING
    steps_total: int = 0
    steps_completed: int = 0
    records: List[LoadStepRecord] = field(default_factory=list)
    message: str = ""


class SimulationService:
    """Service running scenarios; run bookkeeping is shared between threads."""

    def __init__(self):
        self._lock = threading.RLock()
        self.runs: Dict[str, RunStatus] = {}

    # ── bookkeeping ─────────────────────────────────────────────────────────

    @_synchronized
    def _begin(self, name: str, steps: int) -> None:
        self.runs[name] = RunStatus(name=name, status=RUN_RUNNING, steps_total=steps)

    @_synchronized
    def _record(self, name: str, record: LoadStepRecord) -> None:
        run = self.runs[name]
        run.records.append(record)
        run.steps_completed = record.step

    @_synchronized
    def _end(self, name: str, status: str, message: str = "") -> None:
        self.runs[name].status = status
        self.runs[name].message = message

    @_synchronized
    def get_status(self, name: str) -> Optional[RunStatus]:
        run = self.runs.get(name)
        if run is None:
            return None
        return replace(run, records=list(run.records))

    # ── preparation ─────────────────────────────────────────────────────────

    def build_mesh(self, geometry: GeometrySettings, l_c: Optional[float] = None) -> Mesh:
        """Load the mesh file or generate the benchmark domain with a band covering 6 l_c."""
        if geometry.mesh_path:
            mesh = load_mesh(geometry.mesh_path)
            print(f"[MESH] loaded {geometry.mesh_path}: {mesh.n_elements} elements, {mesh.n_nodes} nodes")
            return mesh
        return generate_benchmark(
            geometry.id, geometry.h_far, geometry.h_fine, geometry.band,
            dims=geometry.dims, notch_mode=geometry.notch_mode, l_c=l_c,
        )

    def build_problem(self, scenario: Scenario, mesh: Optional[Mesh] = None,
                      threads: Optional[int] = None) -> Problem:
        mesh = mesh if mesh is not None else self.build_mesh(scenario.geometry, scenario.fracture.l_c)
        mesh.require_tags({bc.tag for bc in scenario.conditions})
        if scenario.output.reaction_tag:
            mesh.require_tags([scenario.output.reaction_tag])
        return Problem(
            mesh=mesh,
            material=derive_constants(scenario.engineering),
            fracture=scenario.fracture,
            degradation=DegradationConfig.from_fracture(scenario.fracture, scenario.degrade_set),
            residual_stiffness=scenario.solver.residual_stiffness,
            threads=threads or scenario.solver.threads,
        )

    def derived_constants(self, problem: Problem) -> Dict[str, float]:
        """Everything needed to re-derive the run besides the scenario file."""
        E, nu, N, l_b = engineering_from_constants(problem.material)
        return {
            "m": problem.degradation.m,
            "F_crit": fracture_threshold(problem.fracture),
            "l_c_bound": max_regularization_length(problem.fracture),
            "shear_modulus": problem.material.shear_modulus,
            "E_check": E,
            "nu_check": nu,
            "N_check": N,
            "l_b_check": l_b,
        }

    def manifest_for(self, scenario: Scenario, problem: Problem) -> RunManifest:
        summary = mesh_summary(problem.mesh)
        return RunManifest(
            scenario=scenario.source or {"name": scenario.name},
            material_constants=problem.material.as_dict(),
            derived=self.derived_constants(problem),
            mesh={k: summary[k] for k in ("nodes", "corner_nodes", "elements", "min_jacobian", "min_angle_deg", "tags")},
            status=RUN_RUNNING,
        )

    # ── runs ────────────────────────────────────────────────────────────────

    def run(self, scenario: Scenario, problem: Problem,
            on_step: Optional[Callable[[LoadStepRecord, FieldState], None]] = None,
            max_steps: Optional[int] = None, verbose: Optional[bool] = None) -> Tuple[List[LoadStepRecord], FieldState]:
        """
        Execute the load schedule of a scenario on a prepared problem.

        Raises:
            IncrementUnderflow: the step-halving guard tripped (run marked failed)
            SolverError: any other solver failure (run marked failed)
        """
        steps = scenario.steps if max_steps is None else min(scenario.steps, max_steps)
        self._begin(scenario.name, steps)
        print(f"[SOLVER] {scenario.name}: {steps} step(s), mode {scenario.solver.momentum_mode}, "
              f"degraded set {problem.degradation.label}, m = {problem.degradation.m:.6g}")

        def step_done(record: LoadStepRecord, state: FieldState) -> None:
            self._record(scenario.name, record)
            if on_step is not None:
                on_step(record, state)

        try:
            records, state = run_load_loop(
                problem, scenario.conditions, steps, scenario.solver,
                reaction_tag=scenario.output.reaction_tag, on_step=step_done,
                with_cmod=scenario.output.cmod,
                verbose=scenario.output.verbose if verbose is None else verbose,
            )
        except SolverError as exc:
            self._end(scenario.name, RUN_FAILED, str(exc))
            raise
        self._end(scenario.name, RUN_COMPLETED)
        return records, state

    # ── 1D bar ──────────────────────────────────────────────────────────────

    def analytic(self, params: Bar1DParams, d_targets: Sequence[float], n_elements: int = 1200,
                 l_c_values: Optional[Sequence[float]] = None, with_fem: bool = True,
                 verbose: bool = True) -> List[tuple]:
        """Rows of ANALYTIC_COLUMNS for every l_c and d* target."""
        rows = []
        for l_c in (l_c_values or [params.l_c]):
            bar = replace(params, l_c=float(l_c))
            sigma = analytic1d.stress_of_damage(list(d_targets), bar, "consistent")
            sigma_literal = analytic1d.stress_of_damage(list(d_targets), bar, "literal")
            l_z = [analytic1d.damage_profile(float(d), bar).l_z for d in d_targets]
            fem = [math.nan] * len(d_targets)
            if with_fem:
                result = analytic1d.simulate_bar(bar, n_elements, d_targets, verbose=verbose)
                fem = result.sigma0.tolist()
                if verbose:
                    print(f"[ANALYTIC] l_c = {l_c:g} mm: compliance {result.compliance:.6e} "
                          f"(exact {result.compliance_exact:.6e})")
            for k, d_star in enumerate(d_targets):
                error = abs(fem[k] - sigma[k]) / sigma[k] if with_fem else math.nan
                rows.append((float(l_c), float(d_star), float(sigma[k]), float(sigma_literal[k]), fem[k], error, l_z[k]))
        return rows

    # ── diagnostics ─────────────────────────────────────────────────────────

    def mesh_info(self, source: str, h_far: Optional[float] = None, h_fine: Optional[float] = None) -> Dict:
        """
        Summary of a mesh file, or of a generated benchmark domain given its id.

        Raises:
            MeshError: unreadable or invalid mesh file
            ValueError: neither a file nor a known geometry id
        """
        if os.path.isfile(source):
            return mesh_summary(load_mesh(source))
        if source not in DEFAULT_SIZES:
            raise ValueError(f"{source!r} is neither a mesh file nor a geometry id ({', '.join(DEFAULT_SIZES)})")
        far, fine = DEFAULT_SIZES[source]
        return mesh_summary(generate_benchmark(source, h_far or far, h_fine or fine))
