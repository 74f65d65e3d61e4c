"""
Staggered load loop: per increment the history is refreshed from the last
converged (u, theta), the damage problem is solved, then the momentum
problem at the new load level. Failed increments are halved.
"""
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple
import math
import numpy as np

from common import constants as C
from common.errors import IncrementUnderflow, SolverError
from engine.models import BoundaryCondition, LoadStepRecord, SolverSettings
from engine.phasefield import HistoryField, crack_surface_total, driving_force, update_history
from engine.solver.assembly import (
    Problem, assemble_damage, assemble_momentum, external_force, internal_force,
    quadrature_energies, stored_energies,
)
from engine.solver.linear import solve_constrained, solve_linear


@dataclass
class FieldState:
    u: np.ndarray            # (2 nn,)
    theta: np.ndarray        # (nc,)
    d: np.ndarray            # (nc,)
    history: HistoryField    # (ne, nq)
    t: float = 0.0

    def copy(self) -> "FieldState":
        return FieldState(self.u.copy(), self.theta.copy(), self.d.copy(), self.history.copy(), self.t)


def initial_state(problem: Problem) -> FieldState:
    """Zero fields; d = 1 on nodes seeded by an initial-damage notch."""
    mesh = problem.mesh
    d = np.zeros(mesh.n_corners)
    seeded = mesh.meta.get("initial_damage_nodes")
    if seeded:
        d[mesh.corner_index[np.asarray(seeded, dtype=np.int64)]] = 1.0
    history = HistoryField.initial((mesh.n_elements, problem.n_quad), problem.fracture)
    return FieldState(np.zeros(2 * mesh.n_nodes), np.zeros(mesh.n_corners), d, history)


# ── Constraints ─────────────────────────────────────────────────────────────

def theta_decoupled(problem: Problem, conditions: Sequence[BoundaryCondition]) -> bool:
    """kappa = 0 and no theta3 condition: theta carries no load and is fixed to zero."""
    return problem.material.kappa == 0.0 and not any(bc.field == C.FIELD_THETA for bc in conditions)


def dirichlet_values(problem: Problem, conditions: Sequence[BoundaryCondition], t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Constrained momentum dofs and their values at load factor t (later conditions win)."""
    mesh, dm = problem.mesh, problem.dofmap
    values = {}
    if theta_decoupled(problem, conditions):
        for dof in range(dm.theta_offset, dm.n_momentum):
            values[dof] = 0.0
    for bc in conditions:
        if bc.kind != C.BC_DIRICHLET:
            continue
        for dof in dm.field_dofs(mesh, mesh.node_set(bc.tag), bc.field):
            values[int(dof)] = bc.at(t)
    dofs = np.array(sorted(values), dtype=np.int64)
    return dofs, np.array([values[k] for k in dofs], dtype=float)


# ── Sub-solvers ─────────────────────────────────────────────────────────────

def solve_damage(problem: Problem, d_old: np.ndarray, H: np.ndarray,
                 settings: SolverSettings) -> Tuple[np.ndarray, int]:
    """
    Projected Newton on the damage residual with bounds d_old <= d <= 1.

    Returns:
        (d, iterations)
    Raises:
        SolverError: no convergence within max_iter_d
    """
    lower = np.clip(np.asarray(d_old, dtype=float), 0.0, 1.0)
    d = lower.copy()
    atol = 1e-12 * float(problem.lumped.sum())
    reference = None
    for iteration in range(1, settings.max_iter_d + 1):
        J, R = assemble_damage(problem, d, H)
        pinned = ((d <= lower) & (R > 0.0)) | ((d >= 1.0) & (R < 0.0))
        free = np.nonzero(~pinned)[0]
        norm = float(np.linalg.norm(R[free])) if free.size else 0.0
        if reference is None:
            reference = norm
        if norm <= max(settings.tol_d * reference, atol):
            return d, iteration
        J_free = J[free][:, free].tocsr()
        step = solve_linear(J_free, -R[free])
        d[free] = np.clip(d[free] + step, lower[free], 1.0)
    raise SolverError(f"damage Newton did not converge in {settings.max_iter_d} iterations")


def solve_momentum(problem: Problem, u0: np.ndarray, theta0: np.ndarray, d: np.ndarray,
                   fixed: np.ndarray, fixed_values: np.ndarray, f_ext: np.ndarray,
                   settings: SolverSettings) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    paper_explicit: one solve with the tangent at the previous state.
    newton: iterate until |R_free| <= tol_u * reference force.

    Returns:
        (u, theta, iterations)
    """
    n_u = problem.dofmap.n_u
    x = np.concatenate([u0, theta0])
    mask = np.ones(len(x), dtype=bool)
    mask[fixed] = False
    reference = None
    max_iter = 1 if settings.momentum_mode == C.MODE_PAPER_EXPLICIT else settings.max_iter_u
    for iteration in range(1, max_iter + 1):
        K, R = assemble_momentum(problem, x[:n_u], x[n_u:], d, f_ext)
        delta_fixed = fixed_values - x[fixed]
        if settings.momentum_mode == C.MODE_NEWTON and iteration > 1:
            scale = max(reference, float(np.linalg.norm(f_ext)), 1e-300)
            if float(np.linalg.norm(R[mask])) <= settings.tol_u * scale:
                return x[:n_u], x[n_u:], iteration - 1
        x = x + solve_constrained(K, R, fixed, delta_fixed, settings.linear_solver)
        if reference is None:
            f_int = internal_force(problem, x[:n_u], x[n_u:], d)
            reference = float(np.linalg.norm(f_int))
    if settings.momentum_mode == C.MODE_PAPER_EXPLICIT:
        return x[:n_u], x[n_u:], 1
    _, R = assemble_momentum(problem, x[:n_u], x[n_u:], d, f_ext, with_matrix=False)
    scale = max(reference or 0.0, float(np.linalg.norm(f_ext)), 1e-300)
    if float(np.linalg.norm(R[mask])) <= settings.tol_u * scale:
        return x[:n_u], x[n_u:], max_iter
    raise SolverError(f"momentum Newton did not converge in {settings.max_iter_u} iterations")


def history_from_fields(problem: Problem, H_old: np.ndarray, u, theta) -> np.ndarray:
    es = quadrature_energies(problem, u, theta)
    F = driving_force(es, problem.degradation, problem.fracture)
    return update_history(H_old, F, problem.fracture)


def advance(problem: Problem, state: FieldState, t_new: float, conditions: Sequence[BoundaryCondition],
            settings: SolverSettings) -> Tuple[FieldState, int, int]:
    """One staggered increment from state.t to t_new."""
    fixed, fixed_values = dirichlet_values(problem, conditions, t_new)
    f_ext = external_force(problem, conditions, t_new)
    H_old = state.history.H
    H = history_from_fields(problem, H_old, state.u, state.theta)
    d, iters_d = solve_damage(problem, state.d, H, settings)
    u, theta, iters_u = solve_momentum(problem, state.u, state.theta, d, fixed, fixed_values, f_ext, settings)
    for _ in range(1, settings.stagger_passes):
        H = history_from_fields(problem, H_old, u, theta)
        d_next, it_d = solve_damage(problem, state.d, H, settings)
        u, theta, it_u = solve_momentum(problem, u, theta, d_next, fixed, fixed_values, f_ext, settings)
        iters_d += it_d
        iters_u += it_u
        change = float(np.max(np.abs(d_next - d))) if d.size else 0.0
        d = d_next
        if change <= settings.tol_stagger:
            break
    return FieldState(u, theta, d, HistoryField(H), t_new), iters_d, iters_u


# ── Outputs ─────────────────────────────────────────────────────────────────

def reaction_force(problem: Problem, state: FieldState, tag: str) -> np.ndarray:
    """
    Sum of internal forces on the tagged nodes (per unit thickness).

    Raises:
        KeyError: unknown tag
    """
    nodes = problem.mesh.node_set(tag)
    f_int = internal_force(problem, state.u, state.theta, state.d)
    return np.array([f_int[2 * nodes].sum(), f_int[2 * nodes + 1].sum()])


def cmod(problem: Problem, state: FieldState, positive: str = "mouth_pos", negative: str = "mouth_neg") -> float:
    """Norm of the relative displacement of the two notch-mouth nodes; nan without markers."""
    markers = problem.mesh.markers
    if positive not in markers or negative not in markers:
        return math.nan
    u = state.u.reshape(-1, 2)
    return float(np.linalg.norm(u[markers[positive]] - u[markers[negative]]))


def make_record(problem: Problem, state: FieldState, step: int, conditions: Sequence[BoundaryCondition],
                reaction_tag: Optional[str], iters_d: int, iters_u: int, halvings: int,
                with_cmod: bool = True) -> LoadStepRecord:
    driver = next((bc for bc in conditions if bc.kind == C.BC_DIRICHLET and bc.increment != 0.0), None)
    u_bar = driver.at(state.t) if driver is not None else 0.0
    tag = reaction_tag or (driver.tag if driver is not None else None)
    F = reaction_force(problem, state, tag) if tag is not None else np.zeros(2)
    psi = stored_energies(problem, state.u, state.theta, state.d)
    return LoadStepRecord(
        step=step, u_bar=u_bar, F_x=float(F[0]), F_y=float(F[1]),
        CMOD=cmod(problem, state) if with_cmod else math.nan,
        psi_B=psi[0], psi_C=psi[1], psi_R=psi[2],
        crack_area=crack_surface_total(problem.mesh, state.d, problem.fracture.l_c),
        iters_d=iters_d, iters_u=iters_u, halvings=halvings,
        max_d=float(state.d.max()) if state.d.size else 0.0,
    )


def run_load_loop(problem: Problem, conditions: Sequence[BoundaryCondition], steps: int,
                  settings: SolverSettings, reaction_tag: Optional[str] = None,
                  on_step: Optional[Callable[[LoadStepRecord, FieldState], None]] = None,
                  state: Optional[FieldState] = None, with_cmod: bool = True,
                  verbose: bool = True) -> Tuple[List[LoadStepRecord], FieldState]:
    """
    Run `steps` increments of the load factor.

    Raises:
        IncrementUnderflow: an increment still fails after max_halvings halvings;
            the exception carries the last accepted state in `.state`
    """
    state = state if state is not None else initial_state(problem)
    problem.mesh.require_tags({bc.tag for bc in conditions} | ({reaction_tag} if reaction_tag else set()))
    records: List[LoadStepRecord] = []
    for step in range(1, steps + 1):
        target = float(step)
        dt = target - state.t
        halvings = 0
        iters_d = iters_u = 0
        while state.t < target - 1e-12:
            t_new = min(state.t + dt, target)
            try:
                new_state, it_d, it_u = advance(problem, state, t_new, conditions, settings)
            except SolverError as exc:
                halvings += 1
                if halvings > settings.max_halvings:
                    error = IncrementUnderflow(step, settings.max_halvings)
                    error.state = state
                    error.records = records
                    raise error from exc
                dt *= 0.5
                print(f"[LOAD] step {step}: {exc}; halving increment to {dt:g}")
                continue
            state = new_state
            iters_d += it_d
            iters_u += it_u
        record = make_record(problem, state, step, conditions, reaction_tag, iters_d, iters_u, halvings, with_cmod)
        records.append(record)
        if verbose:
            print(f"[SOLVER] step {step}: u_bar={record.u_bar:.4e} F=({record.F_x:.4e}, {record.F_y:.4e}) "
                  f"max d={record.max_d:.3f} iters d/u={iters_d}/{iters_u}")
        if on_step is not None:
            on_step(record, state)
    return records, state
