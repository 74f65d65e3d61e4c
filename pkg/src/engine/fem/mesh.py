"""
Triangle mesh with boundary edge groups and named marker nodes.

Native ASCII format (ids are arbitrary positive integers):

    $Nodes
    <count>
    <id> <x> <y>
    $EndNodes
    $Elements
    <count>
    <id> <ntype> <node ids...>      ntype 2: 3-node, 9: 6-node triangle
    $EndElements
    $EdgeGroups
    <group count>
    <name> <edge count>
    <a> <b> [<mid>]
    $EndEdgeGroups
    $Markers                        optional
    <count>
    <name> <node id>
    $EndMarkers
    $Meta                           optional
    <count>
    <key> <JSON value>              initial_damage_nodes holds node ids
    $EndMeta

Files starting with $MeshFormat are read as Gmsh MSH 2.2 through meshio.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple
import json
import math
import numpy as np

from common.errors import MeshError

EDGE_LOCAL = ((0, 1, 3), (1, 2, 4), (2, 0, 5))
NTYPE_TRI3 = 2
NTYPE_TRI6 = 9
DAMAGE_NODES_KEY = "initial_damage_nodes"


@dataclass(eq=False)
class Mesh:
    nodes: np.ndarray                                 # (nn, 2)
    elements: np.ndarray                              # (ne, 6)
    edge_groups: Dict[str, np.ndarray] = field(default_factory=dict)  # name -> (k, 3) a, b, mid
    markers: Dict[str, int] = field(default_factory=dict)
    meta: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.elements = np.asarray(self.elements, dtype=np.int64)
        corners = np.unique(self.elements[:, :3])
        self.corner_nodes = corners
        self.corner_index = np.full(len(self.nodes), -1, dtype=np.int64)
        self.corner_index[corners] = np.arange(len(corners))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_corners(self) -> int:
        return len(self.corner_nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def tags(self) -> List[str]:
        return sorted(set(self.edge_groups) | set(self.markers))

    def node_set(self, tag: str) -> np.ndarray:
        """All nodes on an edge group, or the single node of a marker."""
        if tag in self.edge_groups:
            return np.unique(self.edge_groups[tag])
        if tag in self.markers:
            return np.array([self.markers[tag]], dtype=np.int64)
        raise KeyError(f"unknown boundary tag {tag!r}; available: {', '.join(self.tags) or 'none'}")

    def require_tags(self, tags: Iterable[str]) -> None:
        missing = sorted(set(tags) - set(self.tags))
        if missing:
            raise MeshError(f"dangling boundary tag(s) {', '.join(missing)}; mesh defines {', '.join(self.tags) or 'none'}")

    def midside_parents(self) -> np.ndarray:
        """(nn, 2) corner pair of each midside node; corner nodes map to themselves."""
        parents = np.repeat(np.arange(self.n_nodes)[:, None], 2, axis=1)
        for a, b, m in EDGE_LOCAL:
            parents[self.elements[:, m], 0] = self.elements[:, a]
            parents[self.elements[:, m], 1] = self.elements[:, b]
        return parents

    def corner_to_nodal(self, corner_values) -> np.ndarray:
        """Extend a P1 field to all nodes (midsides get the edge average)."""
        v = np.asarray(corner_values, dtype=float)
        parents = self.midside_parents()
        return 0.5 * (v[self.corner_index[parents[:, 0]]] + v[self.corner_index[parents[:, 1]]])


# ── Construction helpers ────────────────────────────────────────────────────

def _edge_key(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)


def build_p2(nodes, triangles, edge_groups: Optional[Dict[str, Iterable[Tuple[int, int]]]] = None,
             markers: Optional[Dict[str, int]] = None, meta=None) -> Mesh:
    """
    Synthesize midside nodes for 3-node triangles and resolve corner-pair edge groups.

    Raises:
        MeshError: an edge group names an edge that belongs to no triangle
    """
    nodes = np.asarray(nodes, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    mid_of: Dict[Tuple[int, int], int] = {}
    new_nodes: List[np.ndarray] = []
    elements = np.empty((len(triangles), 6), dtype=np.int64)
    elements[:, :3] = triangles
    next_id = len(nodes)
    for e, tri in enumerate(triangles):
        for a, b, m in EDGE_LOCAL:
            key = _edge_key(int(tri[a]), int(tri[b]))
            node = mid_of.get(key)
            if node is None:
                node = next_id
                next_id += 1
                mid_of[key] = node
                new_nodes.append(0.5 * (nodes[key[0]] + nodes[key[1]]))
            elements[e, m] = node
    if new_nodes:
        nodes = np.vstack([nodes, np.array(new_nodes)])
    groups = {}
    for name, pairs in (edge_groups or {}).items():
        rows = []
        for a, b in pairs:
            key = _edge_key(int(a), int(b))
            if key not in mid_of:
                raise MeshError(f"dangling boundary tag {name!r}: edge ({a}, {b}) is not an element edge")
            rows.append((int(a), int(b), mid_of[key]))
        groups[name] = np.array(rows, dtype=np.int64).reshape(-1, 3)
    return Mesh(nodes, elements, groups, dict(markers or {}), dict(meta or {}))


def boundary_edges(elements: np.ndarray) -> np.ndarray:
    """(k, 3) edges used by exactly one element, oriented as in that element."""
    rows = np.concatenate([elements[:, [a, b, m]] for a, b, m in EDGE_LOCAL])
    keys = np.sort(rows[:, :2], axis=1)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    return rows[counts[inverse.ravel()] == 1]


def validate(mesh: Mesh, element_lines: Optional[List[int]] = None) -> None:
    """Positive Jacobian everywhere and edge groups lying on element edges."""
    from engine.fem.elements import jacobians, QUAD_POINTS
    xi = np.vstack([QUAD_POINTS, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])
    J = jacobians(mesh.nodes, mesh.elements, xi)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    bad = np.nonzero(det.min(axis=1) <= 0.0)[0]
    if len(bad):
        e = int(bad[0])
        line = element_lines[e] if element_lines else None
        raise MeshError(f"inverted element {e} (non-positive Jacobian)", line)
    known = {_edge_key(int(a), int(b)) for a, b, _ in np.concatenate([mesh.elements[:, [a, b, m]] for a, b, m in EDGE_LOCAL])}
    for name, edges in mesh.edge_groups.items():
        for a, b, _ in edges:
            if _edge_key(int(a), int(b)) not in known:
                raise MeshError(f"dangling boundary tag {name!r}: edge ({a}, {b}) is not an element edge")
    for name, node in mesh.markers.items():
        if not 0 <= node < mesh.n_nodes:
            raise MeshError(f"dangling marker {name!r}: undefined node")


# ── Reading ─────────────────────────────────────────────────────────────────

class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self) -> Tuple[int, List[str]]:
        while self.pos < len(self.lines):
            self.pos += 1
            parts = self.lines[self.pos - 1].split()
            if parts and not parts[0].startswith("#"):
                return self.pos, parts
        raise MeshError("malformed mesh: unexpected end of file", self.pos)

    def done(self) -> bool:
        while self.pos < len(self.lines):
            parts = self.lines[self.pos].split()
            if parts and not parts[0].startswith("#"):
                return False
            self.pos += 1
        return True


def _count(reader: _Lines, section: str) -> int:
    line, parts = reader.next()
    try:
        return int(parts[0])
    except (ValueError, IndexError):
        raise MeshError(f"malformed {section} section: expected a count", line)


def _expect(reader: _Lines, token: str) -> None:
    line, parts = reader.next()
    if parts[0] != token:
        raise MeshError(f"malformed mesh: expected {token}, found {parts[0]}", line)


def _parse_native(text: str) -> Mesh:
    reader = _Lines(text)
    node_index: Dict[int, int] = {}
    coords: List[Tuple[float, float]] = []
    tri3: List[List[int]] = []
    tri6: List[List[int]] = []
    elem_lines: List[int] = []
    raw_groups: Dict[str, List[Tuple[List[int], int]]] = {}
    raw_markers: Dict[str, Tuple[int, int]] = {}
    meta: Dict[str, object] = {}
    damage_nodes: List[int] = []

    def lookup(node_id: str, line: int) -> int:
        try:
            return node_index[int(node_id)]
        except ValueError:
            raise MeshError(f"malformed node id {node_id!r}", line)
        except KeyError:
            raise MeshError(f"undefined node id {node_id}", line)

    seen_nodes = seen_elements = False
    while not reader.done():
        line, parts = reader.next()
        header = parts[0]
        if header == "$Nodes":
            for _ in range(_count(reader, "$Nodes")):
                line, parts = reader.next()
                if len(parts) < 3:
                    raise MeshError("malformed node line (expected: id x y)", line)
                try:
                    node_id, x, y = int(parts[0]), float(parts[1]), float(parts[2])
                except ValueError:
                    raise MeshError("malformed node line (expected: id x y)", line)
                if node_id in node_index:
                    raise MeshError(f"duplicate node id {node_id}", line)
                node_index[node_id] = len(coords)
                coords.append((x, y))
            _expect(reader, "$EndNodes")
            seen_nodes = True
        elif header == "$Elements":
            if not seen_nodes:
                raise MeshError("malformed mesh: $Elements before $Nodes", line)
            for _ in range(_count(reader, "$Elements")):
                line, parts = reader.next()
                try:
                    ntype = int(parts[1])
                except (ValueError, IndexError):
                    raise MeshError("malformed element line (expected: id ntype node ids)", line)
                expected = {NTYPE_TRI3: 3, NTYPE_TRI6: 6}.get(ntype)
                if expected is None:
                    raise MeshError(f"unsupported element type {ntype} (use 2 or 9)", line)
                if len(parts) != 2 + expected:
                    raise MeshError(f"element of type {ntype} needs {expected} node ids", line)
                ids = [lookup(p, line) for p in parts[2:]]
                (tri3 if expected == 3 else tri6).append(ids)
                elem_lines.append(line)
            _expect(reader, "$EndElements")
            seen_elements = True
        elif header == "$EdgeGroups":
            for _ in range(_count(reader, "$EdgeGroups")):
                line, parts = reader.next()
                if len(parts) != 2:
                    raise MeshError("malformed edge group header (expected: name count)", line)
                try:
                    n_edges = int(parts[1])
                except ValueError:
                    raise MeshError("malformed edge group header (expected: name count)", line)
                rows = raw_groups.setdefault(parts[0], [])
                for _ in range(n_edges):
                    line, parts = reader.next()
                    if len(parts) not in (2, 3):
                        raise MeshError("malformed edge line (expected: a b [mid])", line)
                    rows.append(([lookup(p, line) for p in parts], line))
            _expect(reader, "$EndEdgeGroups")
        elif header == "$Markers":
            for _ in range(_count(reader, "$Markers")):
                line, parts = reader.next()
                if len(parts) != 2:
                    raise MeshError("malformed marker line (expected: name node id)", line)
                raw_markers[parts[0]] = (lookup(parts[1], line), line)
            _expect(reader, "$EndMarkers")
        elif header == "$Meta":
            for _ in range(_count(reader, "$Meta")):
                line, parts = reader.next()
                key = parts[0]
                value = reader.lines[line - 1].strip()[len(key):].strip()
                try:
                    meta[key] = json.loads(value)
                except json.JSONDecodeError:
                    raise MeshError(f"malformed meta value for {key!r} (expected JSON)", line)
                if key == DAMAGE_NODES_KEY:
                    if not isinstance(meta[key], list):
                        raise MeshError(f"{key} must be a list of node ids", line)
                    damage_nodes = [lookup(str(node_id), line) for node_id in meta.pop(key)]
            _expect(reader, "$EndMeta")
        else:
            raise MeshError(f"malformed mesh: unknown section {header}", line)

    if not seen_elements or not (tri3 or tri6):
        raise MeshError("malformed mesh: no elements")
    if tri3 and tri6:
        raise MeshError("malformed mesh: mixed 3-node and 6-node triangles")

    nodes = np.array(coords, dtype=float)
    markers = {name: node for name, (node, _) in raw_markers.items()}
    if tri3:
        triangles = np.array(tri3, dtype=np.int64)
        known = {_edge_key(int(row[a]), int(row[b])) for row in triangles for a, b, _ in EDGE_LOCAL}
        for name, rows in raw_groups.items():
            for ids, line in rows:
                if _edge_key(ids[0], ids[1]) not in known:
                    raise MeshError(f"dangling boundary tag {name!r}: edge is not an element edge", line)
        used = np.unique(triangles)
        remap = np.full(len(nodes), -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        for name, node in markers.items():
            if remap[node] < 0:
                raise MeshError(f"dangling marker {name!r}: node belongs to no element", raw_markers[name][1])
        pairs = {k: [(remap[ids[0]], remap[ids[1]]) for ids, _ in v] for k, v in raw_groups.items()}
        mesh = build_p2(nodes[used], remap[triangles], pairs, {k: int(remap[v]) for k, v in markers.items()}, meta)
        validate(mesh, elem_lines)
        return _attach_damage_nodes(mesh, remap[np.asarray(damage_nodes, dtype=np.int64)])
    elements = np.array(tri6, dtype=np.int64)
    mid_of = {}
    for a, b, m in EDGE_LOCAL:
        for row in elements:
            mid_of[_edge_key(int(row[a]), int(row[b]))] = int(row[m])
    groups = {}
    for name, rows in raw_groups.items():
        out = []
        for ids, line in rows:
            key = _edge_key(ids[0], ids[1])
            if key not in mid_of:
                raise MeshError(f"dangling boundary tag {name!r}: edge is not an element edge", line)
            out.append((ids[0], ids[1], mid_of[key]))
        groups[name] = np.array(out, dtype=np.int64).reshape(-1, 3)
    used = np.unique(elements)
    mesh = _compact(nodes, elements, groups, markers, used)
    mesh.meta.update(meta)
    validate(mesh, elem_lines)
    remap = np.full(len(nodes), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return _attach_damage_nodes(mesh, remap[np.asarray(damage_nodes, dtype=np.int64)])


def _attach_damage_nodes(mesh: Mesh, nodes: np.ndarray) -> Mesh:
    """Seeded damage has to sit on corner nodes."""
    if len(nodes) == 0:
        return mesh
    if np.any(nodes < 0) or np.any(mesh.corner_index[nodes] < 0):
        raise MeshError(f"{DAMAGE_NODES_KEY}: node is not an element corner")
    mesh.meta[DAMAGE_NODES_KEY] = [int(n) for n in nodes]
    return mesh


def _compact(nodes, elements, groups, markers, used) -> Mesh:
    """Drop nodes that no element references."""
    remap = np.full(len(nodes), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    groups = {k: remap[v] for k, v in groups.items()}
    for name, node in markers.items():
        if remap[node] < 0:
            raise MeshError(f"dangling marker {name!r}: node belongs to no element")
    return Mesh(nodes[used], remap[elements], groups, {k: int(remap[v]) for k, v in markers.items()})


def _read_gmsh(path: str) -> Mesh:
    import meshio
    try:
        msh = meshio.read(path, file_format="gmsh")
    except Exception as exc:  # meshio raises several reader-specific types
        raise MeshError(f"malformed MSH file: {exc}")
    names = {int(tag): name for name, (tag, dim) in msh.field_data.items() if int(dim) == 1}
    nodes = np.asarray(msh.points, dtype=float)[:, :2]
    triangles = None
    groups_pairs: Dict[str, List[Tuple[int, int]]] = {}
    physical = msh.cell_data.get("gmsh:physical")
    for i, block in enumerate(msh.cells):
        if block.type in ("triangle", "triangle6"):
            if triangles is not None and triangles.shape[1] != block.data.shape[1]:
                raise MeshError("malformed MSH file: mixed triangle orders")
            triangles = block.data if triangles is None else np.vstack([triangles, block.data])
        elif block.type in ("line", "line3") and physical is not None:
            for row, tag in zip(block.data, physical[i]):
                name = names.get(int(tag), f"physical_{int(tag)}")
                groups_pairs.setdefault(name, []).append((int(row[0]), int(row[1])))
    if triangles is None:
        raise MeshError("malformed MSH file: no triangle elements")
    if triangles.shape[1] == 3:
        used = np.unique(triangles)
        remap = np.full(len(nodes), -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        pairs = {k: [(remap[a], remap[b]) for a, b in v] for k, v in groups_pairs.items()}
        mesh = build_p2(nodes[used], remap[triangles], pairs)
    else:
        elements = np.asarray(triangles, dtype=np.int64)
        mid_of = {}
        for a, b, m in EDGE_LOCAL:
            for row in elements:
                mid_of[_edge_key(int(row[a]), int(row[b]))] = int(row[m])
        groups = {}
        for name, pairs in groups_pairs.items():
            rows = []
            for a, b in pairs:
                key = _edge_key(a, b)
                if key not in mid_of:
                    raise MeshError(f"dangling boundary tag {name!r}: edge is not an element edge")
                rows.append((a, b, mid_of[key]))
            groups[name] = np.array(rows, dtype=np.int64).reshape(-1, 3)
        mesh = _compact(nodes, elements, groups, {}, np.unique(elements))
    validate(mesh)
    return mesh


def load_mesh(path: str) -> Mesh:
    """
    Read a mesh file (native ASCII or Gmsh MSH 2.2).

    Raises:
        MeshError: malformed file, undefined node id, inverted element, dangling tag
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise MeshError(f"cannot read mesh file {path}: {exc}")
    if text.lstrip().startswith("$MeshFormat"):
        return _read_gmsh(path)
    return _parse_native(text)


def _plain(value):
    if isinstance(value, (np.ndarray, np.generic)):
        return value.tolist()
    raise TypeError(f"cannot store {type(value).__name__} in $Meta")


def save_mesh(mesh: Mesh, path: str) -> None:
    """Write the native format with 6-node elements; node ids are 1-based. Mesh.meta goes to $Meta."""
    out = ["$Nodes", str(mesh.n_nodes)]
    out += [f"{i + 1} {x!r} {y!r}" for i, (x, y) in enumerate(mesh.nodes)]
    out += ["$EndNodes", "$Elements", str(mesh.n_elements)]
    out += [f"{e + 1} {NTYPE_TRI6} " + " ".join(str(n + 1) for n in row) for e, row in enumerate(mesh.elements)]
    out += ["$EndElements", "$EdgeGroups", str(len(mesh.edge_groups))]
    for name, edges in mesh.edge_groups.items():
        out.append(f"{name} {len(edges)}")
        out += [" ".join(str(n + 1) for n in row) for row in edges]
    out.append("$EndEdgeGroups")
    if mesh.markers:
        out += ["$Markers", str(len(mesh.markers))]
        out += [f"{name} {node + 1}" for name, node in mesh.markers.items()]
        out.append("$EndMarkers")
    if mesh.meta:
        out += ["$Meta", str(len(mesh.meta))]
        for key, value in mesh.meta.items():
            if key == DAMAGE_NODES_KEY:
                value = [int(node) + 1 for node in value]
            out.append(f"{key} {json.dumps(value, default=_plain)}")
        out.append("$EndMeta")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(out) + "\n")


# ── Diagnostics ─────────────────────────────────────────────────────────────

def _angles(corners: np.ndarray) -> np.ndarray:
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    result = []
    for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
        u, v = q - p, r - p
        cos = np.sum(u * v, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        result.append(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
    return np.stack(result, axis=1)


def mesh_summary(mesh: Mesh) -> Dict[str, object]:
    """Counts, Jacobian range, angles, edge lengths, tags, and fine-band statistics."""
    from engine.fem.elements import element_geometry
    geo = element_geometry(mesh)
    corners = mesh.nodes[mesh.elements[:, :3]]
    lengths = np.concatenate([
        np.linalg.norm(corners[:, i] - corners[:, j], axis=1) for i, j in ((0, 1), (1, 2), (2, 0))
    ])
    angles = _angles(corners)
    summary: Dict[str, object] = {
        "nodes": mesh.n_nodes,
        "corner_nodes": mesh.n_corners,
        "elements": mesh.n_elements,
        "min_jacobian": float(geo.detJ.min()),
        "max_jacobian": float(geo.detJ.max()),
        "min_angle_deg": float(angles.min()),
        "edge_length_min": float(lengths.min()),
        "edge_length_mean": float(lengths.mean()),
        "edge_length_max": float(lengths.max()),
        "area": float(geo.weights.sum()),
        "tags": {name: int(len(edges)) for name, edges in sorted(mesh.edge_groups.items())},
        "markers": dict(sorted(mesh.markers.items())),
    }
    band = mesh.meta.get("band")
    guides = mesh.meta.get("guides")
    if band and guides:
        import shapely
        from shapely.geometry import MultiLineString
        centroids = corners.mean(axis=1)
        dist = shapely.distance(shapely.points(centroids), MultiLineString([list(map(tuple, g)) for g in guides]))
        inside = dist <= 0.5 * float(band)
        band_lengths = np.concatenate([
            np.linalg.norm(corners[inside, i] - corners[inside, j], axis=1) for i, j in ((0, 1), (1, 2), (2, 0))
        ]) if inside.any() else np.zeros(0)
        summary["fine_band"] = {
            "h_fine": float(mesh.meta.get("h_fine", math.nan)),
            "width": float(band),
            "elements": int(inside.sum()),
            "edge_length_mean": float(band_lengths.mean()) if band_lengths.size else math.nan,
            "edge_length_max": float(band_lengths.max()) if band_lengths.size else math.nan,
        }
    return summary
