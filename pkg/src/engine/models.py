"""
Scenario and result records, plus the versioned JSON codec of the run manifest.
"""
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional
import os
import sys

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from common import constants as C
from engine.material import EngineeringParams, FractureParams

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class BoundaryCondition:
    """Value at load factor t is value + increment * t."""
    tag: str
    field: str
    kind: str = C.BC_DIRICHLET
    increment: float = 0.0
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.field not in C.BC_FIELDS:
            raise ValueError(f"unknown field {self.field!r}; allowed: {', '.join(C.BC_FIELDS)}")
        if self.kind not in C.BC_KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; allowed: {', '.join(C.BC_KINDS)}")
        if self.kind == C.BC_TRACTION and self.field == C.FIELD_THETA:
            raise ValueError("a traction acts on u1 or u2, use kind 'moment' for theta3")
        if self.kind == C.BC_MOMENT and self.field != C.FIELD_THETA:
            raise ValueError("a moment acts on theta3 only")

    def at(self, t: float) -> float:
        return self.value + self.increment * t


@dataclass
class GeometrySettings:
    id: Optional[str] = None
    mesh_path: Optional[str] = None
    h_far: Optional[float] = None
    h_fine: Optional[float] = None
    band: Optional[float] = None
    notch_mode: str = "slit"
    dims: Dict[str, Any] = field(default_factory=dict)


@dataclass
class SolverSettings:
    momentum_mode: str = C.MODE_PAPER_EXPLICIT
    tol_u: float = C.TOL_U
    tol_d: float = C.TOL_D
    max_iter_u: int = C.MAX_ITER_U
    max_iter_d: int = C.MAX_ITER_D
    stagger_passes: int = C.STAGGER_PASSES
    tol_stagger: float = C.TOL_STAGGER
    linear_solver: str = C.LINEAR_DIRECT
    max_halvings: int = C.MAX_HALVINGS
    residual_stiffness: float = C.RESIDUAL_STIFFNESS
    threads: int = 1


@dataclass
class OutputSettings:
    snapshot_every: int = 0
    reaction_tag: Optional[str] = None
    cmod: bool = False
    verbose: bool = True


@dataclass
class Scenario:
    name: str
    engineering: EngineeringParams
    fracture: FractureParams
    degrade_set: str
    geometry: GeometrySettings
    conditions: List[BoundaryCondition]
    steps: int
    solver: SolverSettings = field(default_factory=SolverSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    description: str = ""
    source: Dict[str, Any] = field(default_factory=dict)

    @property
    def driving_condition(self) -> Optional[BoundaryCondition]:
        """First Dirichlet condition with a non-zero increment; defines u_bar."""
        for bc in self.conditions:
            if bc.kind == C.BC_DIRICHLET and bc.increment != 0.0:
                return bc
        return None


@dataclass
class LoadStepRecord:
    step: int
    u_bar: float
    F_x: float
    F_y: float
    CMOD: float
    psi_B: float
    psi_C: float
    psi_R: float
    crack_area: float
    iters_d: int
    iters_u: int
    halvings: int = 0
    max_d: float = 0.0

    def csv_row(self) -> List[Any]:
        return [getattr(self, column) for column in C.CSV_COLUMNS]


@dataclass
class RunManifest:
    scenario: Dict[str, Any]
    material_constants: Dict[str, float]
    derived: Dict[str, float]
    mesh: Dict[str, Any]
    status: str = "running"
    steps_completed: int = 0
    files: List[str] = field(default_factory=list)
    message: str = ""


def manifest_to_dict(manifest: RunManifest) -> Dict[str, Any]:
    """Convert a RunManifest into a plain dict ready to be JSON-encoded."""
    out = {"version": MANIFEST_VERSION}
    out.update(asdict(manifest))
    return out


def manifest_from_dict(d: Dict[str, Any]) -> RunManifest:
    if d.get("version") != MANIFEST_VERSION:
        raise ValueError(
            f"Unsupported manifest version: got {d.get('version')!r}, "
            f"expected {MANIFEST_VERSION}"
        )
    return RunManifest(
        scenario=dict(d["scenario"]),
        material_constants={k: float(v) for k, v in d["material_constants"].items()},
        derived={k: float(v) for k, v in d["derived"].items()},
        mesh=dict(d.get("mesh", {})),
        status=d.get("status", "unknown"),
        steps_completed=int(d.get("steps_completed", 0)),
        files=list(d.get("files", [])),
        message=d.get("message", ""),
    )
