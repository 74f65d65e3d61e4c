from engine.fem.elements import quadrature_rule, shape_eval, element_geometry
from engine.fem.mesh import Mesh, load_mesh, save_mesh, mesh_summary, build_p2
from engine.fem.geometry import generate_benchmark, refinement_band
from engine.fem.dofmap import DofMap
from engine.fem.vtk import write_vtk
from engine.fem.crackpath import crack_band, hausdorff_distance, mean_deviation, crack_angle
