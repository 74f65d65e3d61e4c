"""
Run artifacts: force-displacement CSV, VTK snapshots and the run manifest.
"""
import csv
import json
import os
import sys
from typing import Any, Iterable, Sequence

current_dir = os.path.dirname(os.path.abspath(__file__))
src_dir = os.path.dirname(current_dir)
if src_dir not in sys.path:
    sys.path.insert(0, src_dir)

import numpy as np

from common import constants as C
from engine.fem.vtk import write_vtk
from engine.solver.assembly import element_energies
from engine.models import LoadStepRecord, RunManifest, manifest_from_dict, manifest_to_dict


def jsonable(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot encode {type(value).__name__}")


def write_manifest(path: str, manifest: RunManifest) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest_to_dict(manifest), handle, indent=2, sort_keys=True, default=jsonable)
        handle.write("\n")


def read_manifest(path: str) -> RunManifest:
    with open(path, "r", encoding="utf-8") as handle:
        return manifest_from_dict(json.load(handle))


class RunWriter:
    """Owns one output directory; the CSV grows by one row per accepted step."""

    def __init__(self, output_dir: str, manifest: RunManifest, snapshot_every: int = 0):
        self.output_dir = output_dir
        self.manifest = manifest
        self.snapshot_every = snapshot_every
        self.csv_path = os.path.join(output_dir, C.FORCE_CSV)
        self.manifest_path = os.path.join(output_dir, C.MANIFEST_FILE)

    def open(self) -> "RunWriter":
        os.makedirs(self.output_dir, exist_ok=True)
        with open(self.csv_path, "w", newline="", encoding="utf-8") as handle:
            csv.writer(handle).writerow(C.CSV_COLUMNS)
        self._register(C.FORCE_CSV)
        self._register(C.MANIFEST_FILE)
        write_manifest(self.manifest_path, self.manifest)
        print(f"[OUTPUT] writing to {self.output_dir}")
        return self

    def _register(self, name: str) -> None:
        if name not in self.manifest.files:
            self.manifest.files.append(name)

    def write_record(self, record: LoadStepRecord) -> None:
        with open(self.csv_path, "a", newline="", encoding="utf-8") as handle:
            csv.writer(handle).writerow(record.csv_row())
        self.manifest.steps_completed = record.step

    def wants_snapshot(self, step: int) -> bool:
        return self.snapshot_every > 0 and step % self.snapshot_every == 0

    def snapshot(self, step: int, problem, state) -> str:
        """VTK file with u, theta3 and d at the nodes and the degraded energy averages per element."""
        name = C.VTK_PATTERN.format(step)
        mesh = problem.mesh
        energies = element_energies(problem, state.u, state.theta, state.d)
        write_vtk(
            os.path.join(self.output_dir, name),
            mesh,
            point_data={
                C.VTK_FIELD_U: state.u.reshape(-1, 2),
                C.VTK_FIELD_THETA: mesh.corner_to_nodal(state.theta),
                C.VTK_FIELD_D: mesh.corner_to_nodal(state.d),
            },
            cell_data=dict(zip(C.VTK_CELL_FIELDS, energies)),
        )
        self._register(name)
        return name

    def finish(self, status: str, message: str = "") -> None:
        self.manifest.status = status
        self.manifest.message = message
        write_manifest(self.manifest_path, self.manifest)
        print(f"[OUTPUT] {status}: {self.manifest.steps_completed} step(s), manifest {self.manifest_path}")


def write_table(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
