# src/common/constants.py
"""
Constants shared by the engine and the command-line front end.
Internal unit system is MPa, mm, N (1 MPa * mm^2 = 1 N).
"""

# ── Degradation sets ────────────────────────────────────────────────────────
ENERGY_PARTS = ("B", "C", "R")
DEFAULT_DEGRADE_SET = "BCR"
DEFAULT_SHAPE_P = 10.0

# ── Fields ──────────────────────────────────────────────────────────────────
FIELD_U1 = "u1"
FIELD_U2 = "u2"
FIELD_THETA = "theta3"
BC_FIELDS = (FIELD_U1, FIELD_U2, FIELD_THETA)

BC_DIRICHLET = "dirichlet"
BC_TRACTION = "traction"
BC_MOMENT = "moment"
BC_KINDS = (BC_DIRICHLET, BC_TRACTION, BC_MOMENT)

# ── Geometries ──────────────────────────────────────────────────────────────
GEOMETRY_IDS = ("trapezoid", "sen_plate", "tpb_beam", "den_plate")
CIRCLE_MIN_SEGMENTS = 64
BAND_MIN_LC = 6.0          # refinement band width >= 6 l_c
BAND_DEFAULT_H = 10.0      # and >= 10 h_fine when not given

# ── Solver defaults ─────────────────────────────────────────────────────────
MODE_PAPER_EXPLICIT = "paper_explicit"
MODE_NEWTON = "newton"
MOMENTUM_MODES = (MODE_PAPER_EXPLICIT, MODE_NEWTON)

LINEAR_DIRECT = "direct"
LINEAR_CG = "cg"
LINEAR_SOLVERS = (LINEAR_DIRECT, LINEAR_CG)

TOL_D = 1e-8
TOL_U = 1e-8
MAX_ITER_D = 50
MAX_ITER_U = 25
STAGGER_PASSES = 1
TOL_STAGGER = 1e-4
MAX_HALVINGS = 6
RESIDUAL_STIFFNESS = 1e-8
COALESCENCE_TOL = 1e-12

# ── Output ──────────────────────────────────────────────────────────────────
CSV_COLUMNS = (
    "step", "u_bar", "F_x", "F_y", "CMOD",
    "psi_B", "psi_C", "psi_R", "crack_area", "iters_d", "iters_u",
)
FORCE_CSV = "force_displacement.csv"
MANIFEST_FILE = "run_manifest.json"
VTK_PATTERN = "fields_{:04d}.vtk"
VTK_FIELD_U = "u"
VTK_FIELD_THETA = FIELD_THETA
VTK_FIELD_D = "d"
VTK_CELL_FIELDS = ("psi_B", "psi_C", "psi_R")
ANALYTIC_CSV = "analytic1d.csv"

# ── Exit codes ──────────────────────────────────────────────────────────────
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
