"""
Lagrange triangles on the reference element (0,0), (1,0), (0,1).

Node ordering of the 6-node triangle: corners 0, 1, 2 then midsides of
edges 01, 12, 20. Mapping is isoparametric through the P2 functions, which
reduces to the affine map when midside nodes sit at edge midpoints.
"""
from dataclasses import dataclass
from typing import Tuple, TYPE_CHECKING
import numpy as np

from common.errors import MeshError

if TYPE_CHECKING:
    from engine.fem.mesh import Mesh

# ── Quadrature ──────────────────────────────────────────────────────────────
# 6-point symmetric rule, exact for polynomials of degree 4.
_A = 0.445948490915965
_B = 0.091576213509771
_WA = 0.223381589678011 / 2.0
_WB = 0.109951743655322 / 2.0

QUAD_POINTS = np.array([
    [_A, _A], [1.0 - 2.0 * _A, _A], [_A, 1.0 - 2.0 * _A],
    [_B, _B], [1.0 - 2.0 * _B, _B], [_B, 1.0 - 2.0 * _B],
])
QUAD_WEIGHTS = np.array([_WA, _WA, _WA, _WB, _WB, _WB])


def quadrature_rule() -> Tuple[np.ndarray, np.ndarray]:
    """Points (6, 2) and weights (6,) on the reference triangle; weights sum to 1/2."""
    return QUAD_POINTS.copy(), QUAD_WEIGHTS.copy()


# ── Shape functions ─────────────────────────────────────────────────────────
_DL = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])  # d L_i / d xi
_EDGES = ((0, 1), (1, 2), (2, 0))


def _barycentric(xi) -> np.ndarray:
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    return np.stack([1.0 - xi[:, 0] - xi[:, 1], xi[:, 0], xi[:, 1]], axis=-1)


def p1_shape(xi) -> Tuple[np.ndarray, np.ndarray]:
    """Values (n, 3) and reference gradients (n, 3, 2)."""
    L = _barycentric(xi)
    return L, np.broadcast_to(_DL, (L.shape[0], 3, 2)).copy()


def p2_shape(xi) -> Tuple[np.ndarray, np.ndarray]:
    """Values (n, 6) and reference gradients (n, 6, 2)."""
    L = _barycentric(xi)
    n = L.shape[0]
    N = np.empty((n, 6))
    dN = np.empty((n, 6, 2))
    for i in range(3):
        N[:, i] = L[:, i] * (2.0 * L[:, i] - 1.0)
        dN[:, i] = (4.0 * L[:, i] - 1.0)[:, None] * _DL[i]
    for k, (i, j) in enumerate(_EDGES):
        N[:, 3 + k] = 4.0 * L[:, i] * L[:, j]
        dN[:, 3 + k] = 4.0 * (L[:, i][:, None] * _DL[j] + L[:, j][:, None] * _DL[i])
    return N, dN


@dataclass
class ShapeEval:
    N2: np.ndarray       # (6,)
    dN2: np.ndarray      # (6, 2) physical
    N1: np.ndarray       # (3,)
    dN1: np.ndarray      # (3, 2) physical
    detJ: float


def shape_eval(coords, ref_point) -> ShapeEval:
    """
    Shape values and physical gradients of one element at one reference point.

    Args:
        coords   : (6, 2) node coordinates, or (3, 2) corners (midsides synthesized)
        ref_point: (xi, eta) inside the reference triangle
    Raises:
        MeshError: singular Jacobian
    """
    coords = np.asarray(coords, dtype=float)
    if coords.shape == (3, 2):
        coords = np.vstack([coords, [(coords[i] + coords[j]) / 2.0 for i, j in _EDGES]])
    N2, dN2 = p2_shape(ref_point)
    N1, dN1 = p1_shape(ref_point)
    J = coords.T @ dN2[0]  # J[i, j] = d x_i / d xi_j
    det = float(np.linalg.det(J))
    if abs(det) <= 1e-14 * max(float(np.abs(J).max()), 1e-300) ** 2:
        raise MeshError("singular Jacobian")
    Jinv = np.linalg.inv(J)
    return ShapeEval(N2[0], dN2[0] @ Jinv, N1[0], dN1[0] @ Jinv, det)


# ── Mesh-wide precomputation ────────────────────────────────────────────────

@dataclass
class ElementGeometry:
    """Quadrature data for every element: q = quadrature point index."""
    N2: np.ndarray       # (nq, 6)
    N1: np.ndarray       # (nq, 3)
    dN2: np.ndarray      # (ne, nq, 6, 2)
    dN1: np.ndarray      # (ne, nq, 3, 2)
    detJ: np.ndarray     # (ne, nq)
    weights: np.ndarray  # (ne, nq) detJ * reference weight
    points: np.ndarray   # (ne, nq, 2) physical coordinates


def jacobians(nodes: np.ndarray, elements: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Jacobian matrices (ne, nq, 2, 2) of the P2 map at reference points xi."""
    _, dN2 = p2_shape(xi)
    X = nodes[elements]  # (ne, 6, 2)
    return np.einsum("eki,qkj->eqij", X, dN2)


def element_geometry(mesh: "Mesh") -> ElementGeometry:
    cached = getattr(mesh, "_geometry_cache", None)
    if cached is not None:
        return cached
    xi, w = quadrature_rule()
    N2, dN2_ref = p2_shape(xi)
    N1, dN1_ref = p1_shape(xi)
    J = jacobians(mesh.nodes, mesh.elements, xi)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(det <= 0.0):
        bad = int(np.argmin(det.min(axis=1)))
        raise MeshError(f"inverted element {bad} (non-positive Jacobian)")
    Jinv = np.linalg.inv(J)
    dN2 = np.einsum("qkj,eqji->eqki", dN2_ref, Jinv)
    dN1 = np.einsum("qkj,eqji->eqki", dN1_ref, Jinv)
    points = np.einsum("qk,eki->eqi", N2, mesh.nodes[mesh.elements])
    geo = ElementGeometry(N2, N1, dN2, dN1, det, det * w[None, :], points)
    object.__setattr__(mesh, "_geometry_cache", geo)
    return geo


def interpolate_p1(mesh: "Mesh", corner_values) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values (ne, nq), gradients (ne, nq, 2) and quadrature weights of a P1 field."""
    geo = element_geometry(mesh)
    ve = np.asarray(corner_values, dtype=float)[mesh.corner_index[mesh.elements[:, :3]]]
    vals = ve @ geo.N1.T
    grads = np.einsum("eqkj,ek->eqj", geo.dN1, ve)
    return vals, grads, geo.weights


def integrate(mesh: "Mesh", values_q) -> float:
    """Integral of a quadrature-point array (ne, nq)."""
    return float(np.sum(np.asarray(values_q) * element_geometry(mesh).weights))
