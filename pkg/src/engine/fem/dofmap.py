"""
Taylor-Hood layout: u is P2 (two dofs per node), theta3 and d are P1 on
corner nodes. Global numbering: [u (2 nn) | theta (nc) | d (nc)].
The momentum system uses the leading 2 nn + nc block; damage is solved on
its own corner numbering.
"""
from dataclasses import dataclass
import numpy as np

from common.constants import FIELD_THETA, FIELD_U1, FIELD_U2
from engine.fem.mesh import Mesh


@dataclass
class DofMap:
    n_nodes: int
    n_corners: int
    u_dofs: np.ndarray       # (ne, 12) node-major [x0, y0, x1, y1, ...]
    theta_dofs: np.ndarray   # (ne, 3) global
    d_dofs: np.ndarray       # (ne, 3) corner numbering

    @classmethod
    def build(cls, mesh: Mesh) -> "DofMap":
        nn, nc = mesh.n_nodes, mesh.n_corners
        u = np.stack([2 * mesh.elements, 2 * mesh.elements + 1], axis=-1).reshape(len(mesh.elements), 12)
        corners = mesh.corner_index[mesh.elements[:, :3]]
        return cls(nn, nc, u, 2 * nn + corners, corners)

    @property
    def n_u(self) -> int:
        return 2 * self.n_nodes

    @property
    def n_momentum(self) -> int:
        return 2 * self.n_nodes + self.n_corners

    @property
    def n_total(self) -> int:
        return 2 * self.n_nodes + 2 * self.n_corners

    @property
    def theta_offset(self) -> int:
        return 2 * self.n_nodes

    @property
    def d_offset(self) -> int:
        return 2 * self.n_nodes + self.n_corners

    @property
    def momentum_dofs(self) -> np.ndarray:
        """(ne, 15) element dofs of the coupled (u, theta) block."""
        return np.hstack([self.u_dofs, self.theta_dofs])

    def field_dofs(self, mesh: Mesh, nodes: np.ndarray, field: str) -> np.ndarray:
        """Momentum-block dofs of a field on the given nodes (theta: corner nodes only)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        if field == FIELD_U1:
            return 2 * nodes
        if field == FIELD_U2:
            return 2 * nodes + 1
        if field == FIELD_THETA:
            corners = mesh.corner_index[nodes]
            return self.theta_offset + corners[corners >= 0]
        raise ValueError(f"unknown field {field!r}")
