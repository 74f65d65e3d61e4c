"""
Tests for mesh construction, the native file format and mesh diagnostics.
"""
import os
import sys
import tempfile
import unittest
import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from common.errors import MeshError
from engine.fem.dofmap import DofMap
from engine.fem.geometry import generate_benchmark
from engine.fem.mesh import build_p2, load_mesh, mesh_summary, save_mesh
from engine.fem.vtk import write_vtk

SQUARE = """$Nodes
4
1 0 0
2 1 0
3 1 1
4 0 1
$EndNodes
$Elements
2
1 2 1 2 3
2 2 1 3 4
$EndElements
$EdgeGroups
2
bottom 1
1 2
top 1
3 4
$EndEdgeGroups
$Markers
1
corner 3
$EndMarkers
"""


def _write(text: str) -> str:
    handle = tempfile.NamedTemporaryFile("w", suffix=".mesh", delete=False, encoding="utf-8")
    handle.write(text)
    handle.close()
    return handle.name


class TestNativeFormat(unittest.TestCase):
    def setUp(self):
        self.paths = []

    def tearDown(self):
        for path in self.paths:
            os.unlink(path)

    def _load(self, text: str):
        path = _write(text)
        self.paths.append(path)
        return load_mesh(path)

    def test_two_triangle_square(self):
        mesh = self._load(SQUARE)
        self.assertEqual(mesh.n_elements, 2)
        self.assertEqual(mesh.n_corners, 4)
        self.assertEqual(mesh.n_nodes, 9)
        self.assertEqual(sorted(mesh.edge_groups), ["bottom", "top"])
        self.assertEqual(len(mesh.node_set("bottom")), 3)
        self.assertEqual(mesh.markers["corner"], 2)

    def test_undefined_node_id_reports_line(self):
        with self.assertRaises(MeshError) as ctx:
            self._load(SQUARE.replace("2 2 1 3 4", "2 2 1 3 7"))
        self.assertIn("undefined node id 7", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 11)

    def test_malformed_node_line(self):
        with self.assertRaises(MeshError) as ctx:
            self._load(SQUARE.replace("2 1 0\n", "2 one 0\n"))
        self.assertIn("malformed", str(ctx.exception))
        self.assertEqual(ctx.exception.line, 4)

    def test_inverted_element(self):
        with self.assertRaises(MeshError) as ctx:
            self._load(SQUARE.replace("1 2 1 2 3", "1 2 1 3 2"))
        self.assertIn("inverted element", str(ctx.exception))

    def test_dangling_edge_group(self):
        with self.assertRaises(MeshError) as ctx:
            self._load(SQUARE.replace("bottom 1\n1 2", "bottom 1\n2 4"))
        self.assertIn("dangling boundary tag", str(ctx.exception))

    def test_unsupported_element_type(self):
        with self.assertRaises(MeshError):
            self._load(SQUARE.replace("1 2 1 2 3", "1 5 1 2 3"))

    def test_save_then_load(self):
        mesh = self._load(SQUARE)
        path = _write("")
        self.paths.append(path)
        save_mesh(mesh, path)
        again = load_mesh(path)
        np.testing.assert_allclose(again.nodes, mesh.nodes)
        np.testing.assert_array_equal(again.elements, mesh.elements)
        self.assertEqual(again.markers, mesh.markers)
        np.testing.assert_array_equal(again.edge_groups["top"], mesh.edge_groups["top"])

    def test_save_then_load_keeps_damage_seed(self):
        mesh = generate_benchmark("den_plate", 20.0, 4.0, notch_mode="damage", l_c=0.75)
        path = _write("")
        self.paths.append(path)
        save_mesh(mesh, path)
        again = load_mesh(path)
        seeded = mesh.meta["initial_damage_nodes"]
        self.assertGreater(len(seeded), 0)
        self.assertEqual(again.meta["initial_damage_nodes"], seeded)
        np.testing.assert_allclose(again.nodes[seeded], mesh.nodes[seeded])
        self.assertEqual(again.meta["notch_mode"], "damage")
        self.assertAlmostEqual(again.meta["band"], mesh.meta["band"])
        self.assertEqual(again.meta["guides"], mesh.meta["guides"])

    def test_meta_section_on_three_node_mesh(self):
        mesh = self._load(SQUARE + '$Meta\n2\ninitial_damage_nodes [1, 3]\ngeometry "square"\n$EndMeta\n')
        self.assertEqual(mesh.meta["geometry"], "square")
        np.testing.assert_allclose(mesh.nodes[mesh.meta["initial_damage_nodes"]], [[0.0, 0.0], [1.0, 1.0]])

    def test_malformed_meta(self):
        with self.assertRaises(MeshError):
            self._load(SQUARE + "$Meta\n1\nband [1,\n$EndMeta\n")
        with self.assertRaises(MeshError):
            self._load(SQUARE + "$Meta\n1\ninitial_damage_nodes [7]\n$EndMeta\n")


class TestMeshModel(unittest.TestCase):
    def setUp(self):
        nodes = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        self.mesh = build_p2(nodes, [(0, 1, 2), (0, 2, 3)], {"left": [(3, 0)]}, {"tip": 1})

    def test_midside_nodes_shared(self):
        self.assertEqual(self.mesh.n_nodes, 9)
        np.testing.assert_allclose(self.mesh.nodes[self.mesh.elements[0, 4]], [1.0, 0.5])
        self.assertEqual(self.mesh.elements[0, 5], self.mesh.elements[1, 3])

    def test_unknown_tag(self):
        with self.assertRaises(KeyError):
            self.mesh.node_set("right")
        with self.assertRaises(MeshError):
            self.mesh.require_tags(["left", "right"])
        self.mesh.require_tags(["left", "tip"])

    def test_build_rejects_foreign_edge(self):
        with self.assertRaises(MeshError):
            build_p2([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)], {"bad": [(1, 3)]})

    def test_corner_to_nodal(self):
        values = self.mesh.nodes[self.mesh.corner_nodes, 0] + self.mesh.nodes[self.mesh.corner_nodes, 1]
        nodal = self.mesh.corner_to_nodal(values)
        np.testing.assert_allclose(nodal, self.mesh.nodes.sum(axis=1), atol=1e-14)

    def test_summary(self):
        summary = mesh_summary(self.mesh)
        self.assertEqual(summary["elements"], 2)
        self.assertEqual(summary["corner_nodes"], 4)
        self.assertAlmostEqual(summary["area"], 1.0, places=12)
        self.assertAlmostEqual(summary["min_angle_deg"], 45.0, places=8)
        self.assertEqual(summary["tags"], {"left": 1})
        self.assertEqual(summary["markers"], {"tip": 1})


GMSH_SQUARE = """$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
1 1 "bottom"
2 2 "domain"
$EndPhysicalNames
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
3
1 1 2 1 1 1 2
2 2 2 2 1 1 2 3
3 2 2 2 1 1 3 4
$EndElements
"""


class TestGmshAndVtk(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _path(self, name, text=None):
        path = os.path.join(self.tmp.name, name)
        if text is not None:
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(text)
        return path

    def test_linear_gmsh_mesh_is_upgraded(self):
        mesh = load_mesh(self._path("square.msh", GMSH_SQUARE))
        self.assertEqual(mesh.n_elements, 2)
        self.assertEqual(mesh.n_nodes, 9)
        self.assertEqual(mesh.tags, ["bottom"])
        np.testing.assert_allclose(mesh.nodes[mesh.node_set("bottom")][:, 1], 0.0)
        self.assertEqual(len(mesh.node_set("bottom")), 3)

    def test_corrupt_gmsh_file(self):
        text = GMSH_SQUARE.replace("3 1 1 0\n4 0 1 0\n", "")
        with self.assertRaises(MeshError):
            load_mesh(self._path("broken.msh", text))

    def test_vtk_snapshot_reads_back(self):
        import meshio
        nodes = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        mesh = build_p2(nodes, [(0, 1, 2), (0, 2, 3)])
        path = self._path("fields_0001.vtk")
        write_vtk(path, mesh,
                  point_data={"u": np.ones((mesh.n_nodes, 2)),
                              "d": mesh.corner_to_nodal(np.linspace(0.0, 1.0, mesh.n_corners))},
                  cell_data={"psi_B": np.array([1.0, 2.0])})
        back = meshio.read(path)
        self.assertEqual(back.cells[0].type, "triangle6")
        self.assertEqual(back.points.shape, (9, 3))
        self.assertEqual(back.point_data["u"].shape, (9, 3))
        np.testing.assert_allclose(back.cell_data["psi_B"][0], [1.0, 2.0])


class TestDofMap(unittest.TestCase):
    def setUp(self):
        nodes = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        self.mesh = build_p2(nodes, [(0, 1, 2), (0, 2, 3)], {"left": [(3, 0)]})
        self.dofs = DofMap.build(self.mesh)

    def test_block_sizes(self):
        self.assertEqual(self.dofs.n_u, 18)
        self.assertEqual(self.dofs.n_momentum, 22)
        self.assertEqual(self.dofs.n_total, 26)
        self.assertEqual(self.dofs.momentum_dofs.shape, (2, 15))

    def test_interleaved_displacement(self):
        row = self.dofs.u_dofs[0]
        np.testing.assert_array_equal(row[0::2], 2 * self.mesh.elements[0])
        np.testing.assert_array_equal(row[1::2], 2 * self.mesh.elements[0] + 1)

    def test_rotation_only_on_corners(self):
        nodes = self.mesh.node_set("left")
        self.assertEqual(len(nodes), 3)
        theta = self.dofs.field_dofs(self.mesh, nodes, "theta3")
        self.assertEqual(len(theta), 2)
        self.assertTrue(np.all(theta >= self.dofs.theta_offset))
        self.assertTrue(np.all(theta < self.dofs.n_momentum))
        with self.assertRaises(ValueError):
            self.dofs.field_dofs(self.mesh, nodes, "d")


if __name__ == "__main__":
    unittest.main()
