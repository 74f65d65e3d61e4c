"""Legacy ASCII VTK snapshots through meshio."""
from typing import Dict, Optional
import numpy as np
import meshio

from engine.fem.mesh import Mesh


def write_vtk(path: str, mesh: Mesh, point_data: Dict[str, np.ndarray],
              cell_data: Optional[Dict[str, np.ndarray]] = None) -> None:
    """
    Write 6-node triangles with nodal fields.

    Args:
        point_data: arrays of length n_nodes (vectors as (n_nodes, 2))
        cell_data : arrays of length n_elements
    """
    points = np.column_stack([mesh.nodes, np.zeros(mesh.n_nodes)])
    pdata = {}
    for name, values in point_data.items():
        values = np.asarray(values, dtype=float)
        if values.ndim == 2 and values.shape[1] == 2:
            values = np.column_stack([values, np.zeros(len(values))])
        pdata[name] = values
    cdata = {name: [np.asarray(v, dtype=float)] for name, v in (cell_data or {}).items()}
    out = meshio.Mesh(points, [("triangle6", mesh.elements)], point_data=pdata, cell_data=cdata)
    out.write(path, file_format="vtk", binary=False)
