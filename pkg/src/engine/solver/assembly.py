"""
Global assembly of the coupled (u, theta) momentum block and the damage block.

Element kernels are evaluated for all quadrature points of a chunk of
elements at once and scattered with COO triplets; duplicate entries are
summed by the CSR conversion. With threads > 1 the chunks are evaluated
concurrently and concatenated in chunk order, so results do not depend on
the thread count.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple
import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from common import constants as C
from engine.constitutive import (
    EnergySplit, KinematicState, compute_kinematics, consistent_tangent,
    degraded_stresses, energy_split,
)
from engine.fem.dofmap import DofMap
from engine.fem.elements import ElementGeometry, element_geometry
from engine.fem.mesh import Mesh
from engine.material import FractureParams, MaterialConstants
from engine.models import BoundaryCondition
from engine.phasefield import DegradationConfig, degradation_factors, g_prime, g_prime2

CHUNK_SIZE = 4096


@dataclass(eq=False)
class Problem:
    """Discretization plus material data shared by every assembly call."""
    mesh: Mesh
    material: MaterialConstants
    fracture: FractureParams
    degradation: DegradationConfig
    residual_stiffness: float = C.RESIDUAL_STIFFNESS
    threads: int = 1
    dofmap: DofMap = field(init=False)
    geometry: ElementGeometry = field(init=False)

    def __post_init__(self) -> None:
        self.dofmap = DofMap.build(self.mesh)
        self.geometry = element_geometry(self.mesh)
        self._corner_elements = self.mesh.corner_index[self.mesh.elements[:, :3]]
        self._momentum_dofs = self.dofmap.momentum_dofs
        self.lumped = np.bincount(
            self._corner_elements.ravel(),
            weights=(self.geometry.weights @ self.geometry.N1).ravel(),
            minlength=self.mesh.n_corners,
        )

    @property
    def n_quad(self) -> int:
        return self.geometry.weights.shape[1]

    def _chunks(self) -> List[np.ndarray]:
        ne = self.mesh.n_elements
        return [np.arange(s, min(s + CHUNK_SIZE, ne)) for s in range(0, ne, CHUNK_SIZE)]

    def map_chunks(self, kernel):
        chunks = self._chunks()
        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(kernel, chunks))
        return [kernel(idx) for idx in chunks]


# ── Quadrature-point fields ─────────────────────────────────────────────────

def _gather(problem: Problem, idx: np.ndarray, u: np.ndarray, theta: np.ndarray):
    geo = problem.geometry
    ue = u.reshape(-1, 2)[problem.mesh.elements[idx]]
    grad_u = np.einsum("eqkj,eki->eqij", geo.dN2[idx], ue)
    te = theta[problem._corner_elements[idx]]
    theta_q = te @ geo.N1.T
    grad_t = np.einsum("eqkj,ek->eqj", geo.dN1[idx], te)
    return compute_kinematics(grad_u, theta_q, grad_t)


def quadrature_kinematics(problem: Problem, u, theta) -> KinematicState:
    return _gather(problem, np.arange(problem.mesh.n_elements), np.asarray(u), np.asarray(theta))


def quadrature_energies(problem: Problem, u, theta) -> EnergySplit:
    return energy_split(quadrature_kinematics(problem, u, theta), problem.material)


def damage_at_quadrature(problem: Problem, d) -> np.ndarray:
    return np.asarray(d, dtype=float)[problem._corner_elements] @ problem.geometry.N1.T


# ── Momentum block ──────────────────────────────────────────────────────────

def _b_matrices(dN2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """B_sym (e, q, 3, 12) for Voigt strain and b_skew (e, q, 12) for the skew strain."""
    shape = dN2.shape[:2]
    nx, ny = dN2[..., 0], dN2[..., 1]
    B = np.zeros(shape + (3, 12))
    B[..., 0, 0::2] = nx
    B[..., 1, 1::2] = ny
    B[..., 2, 0::2] = ny
    B[..., 2, 1::2] = nx
    b = np.zeros(shape + (12,))
    b[..., 0::2] = -0.5 * ny
    b[..., 1::2] = 0.5 * nx
    return B, b


def _momentum_kernel(problem: Problem, u, theta, d, with_matrix: bool):
    geo = problem.geometry
    mc = problem.material

    def kernel(idx: np.ndarray):
        ks = _gather(problem, idx, u, theta)
        d_q = np.asarray(d, dtype=float)[problem._corner_elements[idx]] @ geo.N1.T
        st = degraded_stresses(ks, mc, d_q, problem.degradation, problem.residual_stiffness)
        w = geo.weights[idx]
        B, b = _b_matrices(geo.dN2[idx])
        N1 = geo.N1
        dN1 = geo.dN1[idx]
        s_voigt = np.stack([st.sigma_B[..., 0, 0], st.sigma_B[..., 1, 1], st.sigma_B[..., 0, 1]], axis=-1)
        f_u = np.einsum("eq,eqvk,eqv->ek", w, B, s_voigt) + np.einsum("eq,eq,eqk->ek", 2.0 * w, st.sigma_C, b)
        f_t = np.einsum("eq,eq,qa->ea", -2.0 * w, st.sigma_C, N1) + np.einsum("eq,eqaj,eqj->ea", w, dN1, st.m_R)
        fe = np.hstack([f_u, f_t])
        if not with_matrix:
            return fe, None
        tg = consistent_tangent(ks, mc, d_q, problem.degradation, problem.residual_stiffness)
        c2 = 2.0 * w * tg.c_skew
        Kuu = np.einsum("eq,eqvk,eqvx,eqxl->ekl", w, B, tg.D_sym, B, optimize=True) + np.einsum("eq,eqk,eql->ekl", c2, b, b)
        Kut = -np.einsum("eq,eqk,qa->eka", c2, b, N1)
        Ktt = np.einsum("eq,qa,qb->eab", c2, N1, N1) + np.einsum("eq,eqai,eqij,eqbj->eab", w, dN1, tg.D_curv, dN1, optimize=True)
        Ke = np.empty((len(idx), 15, 15))
        Ke[:, :12, :12] = Kuu
        Ke[:, :12, 12:] = Kut
        Ke[:, 12:, :12] = np.swapaxes(Kut, 1, 2)
        Ke[:, 12:, 12:] = Ktt
        return fe, Ke

    return kernel


def _scatter_vector(dofs: np.ndarray, values: np.ndarray, size: int) -> np.ndarray:
    return np.bincount(dofs.ravel(), weights=values.ravel(), minlength=size)


def _scatter_matrix(dofs: np.ndarray, values: np.ndarray, size: int) -> csr_matrix:
    n = dofs.shape[1]
    rows = np.repeat(dofs, n, axis=1).ravel()
    cols = np.tile(dofs, (1, n)).ravel()
    return coo_matrix((values.ravel(), (rows, cols)), shape=(size, size)).tocsr()


def internal_force(problem: Problem, u, theta, d) -> np.ndarray:
    """Internal force vector of the momentum block (length 2 nn + nc)."""
    return assemble_momentum(problem, u, theta, d, with_matrix=False)[1]


def assemble_momentum(problem: Problem, u, theta, d, f_ext: Optional[np.ndarray] = None,
                      with_matrix: bool = True) -> Tuple[Optional[csr_matrix], np.ndarray]:
    """
    Tangent matrix and residual f_int - f_ext of the coupled (u, theta) block at fixed d.

    Returns:
        (K or None, R)
    """
    u = np.asarray(u, dtype=float)
    theta = np.asarray(theta, dtype=float)
    size = problem.dofmap.n_momentum
    parts = problem.map_chunks(_momentum_kernel(problem, u, theta, d, with_matrix))
    dofs = problem._momentum_dofs
    fe = np.concatenate([p[0] for p in parts])
    R = _scatter_vector(dofs, fe, size)
    if f_ext is not None:
        R = R - f_ext
    if not with_matrix:
        return None, R
    Ke = np.concatenate([p[1] for p in parts])
    return _scatter_matrix(dofs, Ke, size), R


def external_force(problem: Problem, conditions: Iterable[BoundaryCondition], t: float) -> np.ndarray:
    """
    Consistent nodal loads of traction (N/mm^2 on edges, N/mm on markers) and
    moment conditions at load factor t.
    """
    mesh, dm = problem.mesh, problem.dofmap
    f = np.zeros(dm.n_momentum)
    for bc in conditions:
        if bc.kind == C.BC_DIRICHLET:
            continue
        value = bc.at(t)
        if value == 0.0:
            continue
        if bc.tag in mesh.markers:
            node = np.array([mesh.markers[bc.tag]])
            f[dm.field_dofs(mesh, node, bc.field)] += value
            continue
        edges = mesh.edge_groups[bc.tag]
        length = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
        if bc.field == C.FIELD_THETA:
            for k in (0, 1):
                np.add.at(f, dm.field_dofs(mesh, edges[:, k], bc.field), 0.5 * length * value)
        else:
            for k, share in ((0, 1.0 / 6.0), (1, 1.0 / 6.0), (2, 2.0 / 3.0)):
                np.add.at(f, dm.field_dofs(mesh, edges[:, k], bc.field), share * length * value)
    return f


# ── Damage block ────────────────────────────────────────────────────────────

def assemble_damage(problem: Problem, d, H) -> Tuple[csr_matrix, np.ndarray]:
    """
    Jacobian and residual of
        int zeta (g'(d) H + 3/8) + 3/4 l_c^2 int grad zeta . grad d
    with H the quadrature-point history (ne, nq).
    """
    geo = problem.geometry
    cfg = problem.degradation
    l_c = problem.fracture.l_c
    d = np.asarray(d, dtype=float)
    H = np.asarray(H, dtype=float)
    de = d[problem._corner_elements]
    d_q = de @ geo.N1.T
    grad_d = np.einsum("eqkj,ek->eqj", geo.dN1, de)
    w = geo.weights
    diff = 0.75 * l_c ** 2
    source = g_prime(d_q, cfg) * H + 0.375
    re = np.einsum("eq,eq,qa->ea", w, source, geo.N1) + diff * np.einsum("eq,eqaj,eqj->ea", w, geo.dN1, grad_d)
    curvature = g_prime2(d_q, cfg) * H
    Je = np.einsum("eq,eq,qa,qb->eab", w, curvature, geo.N1, geo.N1, optimize=True) \
        + diff * np.einsum("eq,eqaj,eqbj->eab", w, geo.dN1, geo.dN1)
    n = problem.mesh.n_corners
    dofs = problem._corner_elements
    return _scatter_matrix(dofs, Je, n), _scatter_vector(dofs, re, n)


# ── Post-processing integrals ───────────────────────────────────────────────

def _degraded_energies(problem: Problem, u, theta, d) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    es = quadrature_energies(problem, u, theta)
    g_B, g_C, g_R = degradation_factors(damage_at_quadrature(problem, d), problem.degradation)
    return g_B * es.psi_B_pos + es.psi_B_neg, g_C * es.psi_C, g_R * es.psi_R


def stored_energies(problem: Problem, u, theta, d) -> Tuple[float, float, float]:
    """Integrated degraded psi_B, psi_C, psi_R (no residual stiffness)."""
    w = problem.geometry.weights
    return tuple(float(np.sum(w * psi)) for psi in _degraded_energies(problem, u, theta, d))


def element_energies(problem: Problem, u, theta, d) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature averages of the degraded psi_B, psi_C, psi_R on every element."""
    w = problem.geometry.weights
    area = w.sum(axis=1)
    return tuple(np.sum(w * psi, axis=1) / area for psi in _degraded_energies(problem, u, theta, d))
