"""
Controller to handle the sub-commands of the command line
"""
import json
import os
import sys
from typing import List, Tuple

current_file = os.path.abspath(__file__)
controllers_dir = os.path.dirname(current_file)
cli_dir = os.path.dirname(controllers_dir)
src_dir = os.path.dirname(cli_dir)

if src_dir not in sys.path:
    sys.path.insert(0, src_dir)

from common import constants as C
from common.errors import AdmissibilityError, ConfigError, IncrementUnderflow, MeshError, SolverError
from engine.models import Scenario
from engine.services.simulation_service import ANALYTIC_COLUMNS, SimulationService
from cli import config as config_io
from cli import scenarios as library
from cli.output import RunWriter, jsonable, write_table


class CommandController:
    """Controller that translates parsed command-line arguments into service calls"""
    def __init__(self, service: SimulationService):
        self.service = service

    def handle(self, args) -> int:
        """
        Dispatches a parsed command

        Returns:
            int: process exit code
        """
        handlers = {
            "run": self.run,
            "analytic": self.analytic,
            "mesh-info": self.mesh_info,
            "scenarios": self.scenarios,
        }
        try:
            return handlers[args.command](args)
        except ConfigError as exc:
            for message in exc.messages:
                print(f"[CONFIG] error: {message}")
            return C.EXIT_CONFIG
        except (MeshError, AdmissibilityError, KeyError, ValueError) as exc:
            text = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
            print(f"[CONFIG] error: {text}")
            return C.EXIT_CONFIG
        except SolverError as exc:
            print(f"[SOLVER] error: {exc}")
            return C.EXIT_SOLVER

    # ── run ─────────────────────────────────────────────────────────────────

    def _load_runs(self, source: str) -> List[Tuple[str, Scenario]]:
        """Parse every sweep variant before anything is computed."""
        path = library.resolve_config(source)
        print(f"[CONFIG] reading {path}")
        raw = config_io.read_config(path)
        runs, errors = [], []
        for label, variant in config_io.expand_sweep(raw):
            try:
                runs.append((label, config_io.parse_scenario(variant)))
            except ConfigError as exc:
                prefix = f"{label}: " if label else ""
                errors.extend(prefix + message for message in exc.messages)
        if errors:
            raise ConfigError(errors)
        return runs

    def _apply_overrides(self, scenario: Scenario, args) -> None:
        if args.threads is not None:
            scenario.solver.threads = args.threads
        if args.snapshot_every is not None:
            scenario.output.snapshot_every = args.snapshot_every
        if args.quiet:
            scenario.output.verbose = False

    def run(self, args) -> int:
        runs = self._load_runs(args.config)
        base_name = runs[0][1].name.split("[")[0]
        output_dir = args.output_dir or os.path.join("runs", base_name)
        exit_code = C.EXIT_OK
        for label, scenario in runs:
            self._apply_overrides(scenario, args)
            target = os.path.join(output_dir, label) if label else output_dir
            exit_code = max(exit_code, self._run_one(scenario, target, args.max_steps))
        return exit_code

    def _run_one(self, scenario: Scenario, output_dir: str, max_steps) -> int:
        problem = self.service.build_problem(scenario)
        writer = RunWriter(output_dir, self.service.manifest_for(scenario, problem),
                           scenario.output.snapshot_every).open()

        def on_step(record, state) -> None:
            writer.write_record(record)
            if writer.wants_snapshot(record.step):
                writer.snapshot(record.step, problem, state)

        try:
            records, state = self.service.run(scenario, problem, on_step=on_step, max_steps=max_steps)
        except IncrementUnderflow as exc:
            last = getattr(exc, "state", None)
            if last is not None:
                writer.snapshot(writer.manifest.steps_completed, problem, last)
            writer.finish("failed", str(exc))
            print(f"[SOLVER] error: {exc}")
            return C.EXIT_SOLVER
        except SolverError as exc:
            writer.finish("failed", str(exc))
            print(f"[SOLVER] error: {exc}")
            return C.EXIT_SOLVER
        if records and writer.snapshot_every > 0 and not writer.wants_snapshot(records[-1].step):
            writer.snapshot(records[-1].step, problem, state)
        writer.finish("completed")
        return C.EXIT_OK

    # ── analytic ────────────────────────────────────────────────────────────

    def analytic(self, args) -> int:
        path = library.resolve_config(args.config or "bar_1d")
        params, options = config_io.parse_bar(config_io.read_config(path))
        l_c_values = options["l_c_sweep"] if args.lc_sweep and options["l_c_sweep"] else [params.l_c]
        rows = self.service.analytic(
            params, options["d_targets"], options["n_elements"], l_c_values,
            with_fem=not args.no_fem, verbose=not args.quiet,
        )
        output_dir = args.output_dir or os.path.join("runs", "analytic1d")
        target = os.path.join(output_dir, C.ANALYTIC_CSV)
        write_table(target, ANALYTIC_COLUMNS, rows)
        checked = [row[5] for row in rows if 0.2 <= row[1] <= 0.9 and row[5] == row[5]]
        if checked:
            print(f"[ANALYTIC] max relative error on d* in [0.2, 0.9]: {max(checked):.3%}")
        print(f"[OUTPUT] {len(rows)} row(s) written to {target}")
        return C.EXIT_OK

    # ── mesh-info ───────────────────────────────────────────────────────────

    def mesh_info(self, args) -> int:
        summary = self.service.mesh_info(args.source, args.h_far, args.h_fine)
        print(json.dumps(summary, indent=2, default=jsonable))
        return C.EXIT_OK

    # ── scenarios ───────────────────────────────────────────────────────────

    def scenarios(self, args) -> int:
        if args.action == "show":
            print(library.show_scenario(args.name))
            return C.EXIT_OK
        for name, description in library.list_scenarios():
            print(f"{name:<22} {description}")
        return C.EXIT_OK
