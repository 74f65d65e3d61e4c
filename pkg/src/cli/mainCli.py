"""
Command-line entry point: run scenarios, the 1D oracle and mesh diagnostics.
"""
import argparse
import os
import sys
from typing import List, Optional

_here = os.path.dirname(os.path.abspath(__file__))
_src = os.path.dirname(_here)
if _src not in sys.path:
    sys.path.insert(0, _src)

from engine.services.simulation_service import SimulationService
from cli.controller.command_controller import CommandController


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cosserat-pf",
        description="Cohesive phase-field fracture of 2D micropolar solids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario file or a bundled scenario")
    run.add_argument("--config", required=True, help="TOML scenario file or bundled scenario name")
    run.add_argument("--output-dir", default=None, help="Output directory (default: runs/<scenario>)")
    run.add_argument("--threads", type=int, default=None, help="Assembly threads (overrides [solver] threads)")
    run.add_argument("--snapshot-every", type=int, default=None, help="Write a VTK snapshot every N steps")
    run.add_argument("--max-steps", type=int, default=None, help="Truncate the load schedule")
    run.add_argument("--quiet", action="store_true", help="Suppress per-step lines")

    analytic = sub.add_parser("analytic", help="1D bar: closed form against finite elements")
    analytic.add_argument("--config", default=None, help="TOML file with [bar] and [fracture] (default: bar_1d)")
    analytic.add_argument("--output-dir", default=None, help="Output directory (default: runs/analytic1d)")
    analytic.add_argument("--lc-sweep", action="store_true", help="Repeat for every [bar] l_c_sweep value")
    analytic.add_argument("--no-fem", action="store_true", help="Closed form and profile only")
    analytic.add_argument("--quiet", action="store_true")

    info = sub.add_parser("mesh-info", help="Mesh statistics of a file or a generated benchmark domain")
    info.add_argument("source", help="Mesh file, or one of trapezoid, sen_plate, tpb_beam, den_plate")
    info.add_argument("--h-far", type=float, default=None, help="Coarse element size [mm] for generated domains")
    info.add_argument("--h-fine", type=float, default=None, help="Fine element size [mm] for generated domains")

    scen = sub.add_parser("scenarios", help="Bundled scenarios")
    scen_sub = scen.add_subparsers(dest="action", required=True)
    scen_sub.add_parser("list", help="List bundled scenarios")
    show = scen_sub.add_parser("show", help="Print a bundled scenario file")
    show.add_argument("name")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    controller = CommandController(SimulationService())
    return controller.handle(args)


if __name__ == "__main__":
    sys.exit(main())
