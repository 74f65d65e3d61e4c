"""
Built-in benchmark domains and a small sizing-driven triangulator.

Points come from boundary sampling plus hexagonal lattices whose spacing
doubles from h_fine (inside the refinement band around guide polylines, at
least 6 l_c wide) up to h_far. Lattice points keep 0.6 h away from boundaries
and slits so that every boundary and slit segment is a Delaunay edge. Slits are
then opened by duplicating their nodes on the negative side (mouth included,
tip excluded).

Dimensions are millimetres. Numbers marked approximate are read off the
benchmark sketches.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import math
import numpy as np
import shapely
from shapely.geometry import LineString, MultiLineString, Point, Polygon
from scipy.spatial import Delaunay, cKDTree

from common.constants import BAND_DEFAULT_H, BAND_MIN_LC, CIRCLE_MIN_SEGMENTS, GEOMETRY_IDS
from common.errors import MeshError
from engine.fem.mesh import Mesh, build_p2

XY = Tuple[float, float]
TagRule = Callable[[np.ndarray], np.ndarray]

LATTICE_CLEARANCE = 0.6
SIZE_GRADE = 0.3


@dataclass
class GeometryDef:
    exterior: List[XY]
    holes: List[Tuple[XY, float]] = field(default_factory=list)
    slits: List[Tuple[XY, XY]] = field(default_factory=list)        # (mouth, tip)
    guides: List[List[XY]] = field(default_factory=list)
    fixed_points: Dict[str, XY] = field(default_factory=dict)
    tag_rules: Dict[str, TagRule] = field(default_factory=dict)
    scale: float = 1.0


# ── Benchmark definitions ───────────────────────────────────────────────────

def _tol(scale: float) -> float:
    return 1e-7 * scale


def sen_plate(dims: Optional[dict] = None) -> GeometryDef:
    """Square plate, horizontal slit from the left edge to the centre at mid-height."""
    dims = dict(dims or {})
    W = float(dims.get("width", 1.0))
    mode = dims.get("mode", "tension")
    tol = _tol(W)
    if mode == "shear":
        guides = [[(0.5 * W, 0.5 * W), tuple(dims.get("guide_end", (W, 0.0)))]]
    else:
        guides = [[(0.5 * W, 0.5 * W), (W, 0.5 * W)]]
    return GeometryDef(
        exterior=[(0.0, 0.0), (W, 0.0), (W, W), (0.0, W)],
        slits=[((0.0, 0.5 * W), (0.5 * W, 0.5 * W))],
        guides=guides,
        tag_rules={
            "bottom": lambda p: np.abs(p[:, 1]) < tol,
            "top": lambda p: np.abs(p[:, 1] - W) < tol,
            "left": lambda p: np.abs(p[:, 0]) < tol,
            "right": lambda p: np.abs(p[:, 0] - W) < tol,
        },
        scale=W,
    )


def den_plate(dims: Optional[dict] = None) -> GeometryDef:
    """Square plate with two symmetric edge notches at mid-height."""
    dims = dict(dims or {})
    W = float(dims.get("width", 100.0))
    a = float(dims.get("notch_length", 25.0))
    tol = _tol(W)
    y = 0.5 * W
    return GeometryDef(
        exterior=[(0.0, 0.0), (W, 0.0), (W, W), (0.0, W)],
        slits=[((0.0, y), (a, y)), ((W, y), (W - a, y))],
        guides=[[(a, y), (W - a, y)]],
        tag_rules={
            "bottom": lambda p: np.abs(p[:, 1]) < tol,
            "top": lambda p: np.abs(p[:, 1] - W) < tol,
            "left": lambda p: np.abs(p[:, 0]) < tol,
            "right": lambda p: np.abs(p[:, 0] - W) < tol,
        },
        scale=W,
    )


def tpb_beam(dims: Optional[dict] = None) -> GeometryDef:
    """
    Asymmetrically notched beam with three holes under three-point bending.
    Notch and hole positions are approximate.
    """
    dims = dict(dims or {})
    Lx = float(dims.get("length", 508.0))
    Ly = float(dims.get("height", 203.2))
    notch_x = float(dims.get("notch_x", 152.4))
    depth = float(dims.get("notch_depth", 25.4))
    hole_x = float(dims.get("hole_x", 203.2))
    hole_r = 0.5 * float(dims.get("hole_diameter", 12.7))
    hole_ys = [float(v) for v in dims.get("hole_y", (50.8, 101.6, 152.4))]
    support = float(dims.get("support_offset", 25.4))
    load_x = float(dims.get("load_x", 0.5 * Lx))
    tol = _tol(Lx)
    return GeometryDef(
        exterior=[(0.0, 0.0), (Lx, 0.0), (Lx, Ly), (0.0, Ly)],
        holes=[((hole_x, y), hole_r) for y in hole_ys],
        slits=[((notch_x, 0.0), (notch_x, depth))],
        guides=[[(notch_x, depth), (hole_x, hole_ys[len(hole_ys) // 2]), (load_x, Ly)]],
        fixed_points={
            "support_left": (support, 0.0),
            "support_right": (Lx - support, 0.0),
            "load": (load_x, Ly),
        },
        tag_rules={
            "bottom": lambda p: np.abs(p[:, 1]) < tol,
            "top": lambda p: np.abs(p[:, 1] - Ly) < tol,
            "left": lambda p: np.abs(p[:, 0]) < tol,
            "right": lambda p: np.abs(p[:, 0] - Lx) < tol,
        },
        scale=Lx,
    )


def trapezoid(dims: Optional[dict] = None) -> GeometryDef:
    """
    Trapezoid opened by opposite vertical displacements of the two left edges
    around a notch on the axis. Dimensions are approximate.
    """
    dims = dict(dims or {})
    hl = 0.5 * float(dims.get("left_height", 200.0))
    hr = 0.5 * float(dims.get("right_height", 600.0))
    W = float(dims.get("width", 600.0))
    a = float(dims.get("notch_length", 50.0))
    tol = _tol(W)
    slope = (hr - hl) / W
    return GeometryDef(
        exterior=[(0.0, -hl), (W, -hr), (W, hr), (0.0, hl)],
        slits=[((0.0, 0.0), (a, 0.0))],
        guides=[[(a, 0.0), (W, 0.0)]],
        tag_rules={
            "left_upper": lambda p: (np.abs(p[:, 0]) < tol) & (p[:, 1] > 0.0),
            "left_lower": lambda p: (np.abs(p[:, 0]) < tol) & (p[:, 1] < 0.0),
            "right": lambda p: np.abs(p[:, 0] - W) < tol,
            "top": lambda p: np.abs(p[:, 1] - (hl + slope * p[:, 0])) < tol,
            "bottom": lambda p: np.abs(p[:, 1] + (hl + slope * p[:, 0])) < tol,
        },
        scale=W,
    )


BENCHMARKS: Dict[str, Callable[[Optional[dict]], GeometryDef]] = {
    "trapezoid": trapezoid,
    "sen_plate": sen_plate,
    "tpb_beam": tpb_beam,
    "den_plate": den_plate,
}


# ── Sizing ──────────────────────────────────────────────────────────────────

def _segments(polylines: Sequence[Sequence[XY]]) -> np.ndarray:
    segs = [(p, q) for line in polylines for p, q in zip(line[:-1], line[1:])]
    return np.array(segs, dtype=float).reshape(-1, 2, 2)


def segment_distance(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest segment."""
    points = np.atleast_2d(points)
    if len(segments) == 0:
        return np.full(len(points), np.inf)
    a = segments[:, 0][None]
    ab = (segments[:, 1] - segments[:, 0])[None]
    ap = points[:, None, :] - a
    t = np.clip(np.sum(ap * ab, axis=-1) / np.maximum(np.sum(ab * ab, axis=-1), 1e-300), 0.0, 1.0)
    return np.linalg.norm(ap - t[..., None] * ab, axis=-1).min(axis=1)


class Sizing:
    """h(x) = h_fine inside the band, growing linearly outside it up to h_far."""

    def __init__(self, guides, h_fine: float, h_far: float, band: float, grade: float = SIZE_GRADE):
        self.segments = _segments(guides)
        self.h_fine = h_fine
        self.h_far = h_far
        self.band = band
        self.grade = grade

    def __call__(self, points) -> np.ndarray:
        dist = segment_distance(np.asarray(points, dtype=float), self.segments)
        return np.minimum(self.h_fine + self.grade * np.maximum(dist - 0.5 * self.band, 0.0), self.h_far)

    def distance_for(self, h: float) -> float:
        if h <= self.h_fine:
            return 0.5 * self.band
        return 0.5 * self.band + (h - self.h_fine) / self.grade


# ── Point generation ────────────────────────────────────────────────────────

def _cross2(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _subdivide(a: np.ndarray, b: np.ndarray, size: Sizing, depth: int = 0) -> List[np.ndarray]:
    """Points of a→b (b excluded) with spacing at most the local size."""
    mid = 0.5 * (a + b)
    if depth > 40 or np.linalg.norm(b - a) <= float(size(mid[None])[0]):
        return [a]
    return _subdivide(a, mid, size, depth + 1) + _subdivide(mid, b, size, depth + 1)


def _sample_polyline(vertices: Sequence[XY], size: Sizing, closed: bool) -> np.ndarray:
    pts = [np.asarray(v, dtype=float) for v in vertices]
    if closed:
        pts.append(pts[0])
    out: List[np.ndarray] = []
    for a, b in zip(pts[:-1], pts[1:]):
        out.extend(_subdivide(a, b, size))
    if not closed:
        out.append(pts[-1])
    return np.array(out)


def _insert_on_ring(ring: List[XY], extra: Sequence[XY], tol: float) -> List[XY]:
    ring = list(ring)
    for p in extra:
        P = np.asarray(p)
        if any(np.linalg.norm(P - np.asarray(v)) < tol for v in ring):
            continue
        for i in range(len(ring)):
            a, b = np.asarray(ring[i]), np.asarray(ring[(i + 1) % len(ring)])
            if abs(_cross2(b - a, P - a)) < tol * np.linalg.norm(b - a) and \
                    -tol <= np.dot(P - a, b - a) <= np.dot(b - a, b - a) + tol:
                ring.insert(i + 1, tuple(p))
                break
        else:
            raise MeshError(f"fixed point {tuple(p)} is not on the outer boundary")
    return ring


def _circle(center: XY, radius: float, h: float) -> List[XY]:
    n = max(CIRCLE_MIN_SEGMENTS, int(math.ceil(2.0 * math.pi * radius / h)))
    t = 2.0 * math.pi * np.arange(n) / n
    return [(center[0] + radius * math.cos(a), center[1] + radius * math.sin(a)) for a in t]


def _lattice(bbox, spacing: float) -> np.ndarray:
    xmin, ymin, xmax, ymax = bbox
    dy = spacing * math.sqrt(3.0) / 2.0
    rows = np.arange(int(math.floor(ymin / dy)), int(math.ceil(ymax / dy)) + 1)
    cols = np.arange(int(math.floor(xmin / spacing)) - 1, int(math.ceil(xmax / spacing)) + 1)
    X, R = np.meshgrid(cols * spacing, rows)
    X = X + (R % 2) * 0.5 * spacing
    Y = R * dy
    pts = np.column_stack([X.ravel(), Y.ravel()])
    keep = (pts[:, 0] >= xmin) & (pts[:, 0] <= xmax) & (pts[:, 1] >= ymin) & (pts[:, 1] <= ymax)
    return pts[keep]


def _levels(h_fine: float, h_far: float) -> List[float]:
    levels = [h_fine]
    while levels[-1] < h_far * (1.0 - 1e-12):
        levels.append(min(2.0 * levels[-1], h_far))
    return levels


def _interior_points(guides, domain: Polygon, lines, size: Sizing) -> np.ndarray:
    bbox = domain.bounds
    levels = _levels(size.h_fine, size.h_far)
    guide_bounds = MultiLineString(guides).bounds if guides else bbox
    chosen: List[np.ndarray] = []
    tree_points = np.zeros((0, 2))
    for k, spacing in enumerate(levels):
        if k + 1 < len(levels) and guides:
            reach = size.distance_for(levels[k + 1])
            box = (max(bbox[0], guide_bounds[0] - reach), max(bbox[1], guide_bounds[1] - reach),
                   min(bbox[2], guide_bounds[2] + reach), min(bbox[3], guide_bounds[3] + reach))
        else:
            box = bbox
        pts = _lattice(box, spacing)
        if not len(pts):
            continue
        h = size(pts)
        upper = levels[k + 1] if k + 1 < len(levels) else np.inf
        in_level = (h >= spacing * (1.0 - 1e-9)) & (h < upper * (1.0 - 1e-9)) if k else (h < upper * (1.0 - 1e-9))
        pts, h = pts[in_level], h[in_level]
        inside = shapely.contains_xy(domain, pts[:, 0], pts[:, 1])
        pts, h = pts[inside], h[inside]
        clearance = shapely.distance(shapely.points(pts), lines) if len(pts) else np.zeros(0)
        pts = pts[clearance >= LATTICE_CLEARANCE * h]
        if len(tree_points) and len(pts):
            dist, _ = cKDTree(tree_points).query(pts)
            pts = pts[dist >= 0.5 * spacing]
        chosen.append(pts)
        tree_points = np.vstack([tree_points, pts])
    return np.vstack(chosen) if chosen else np.zeros((0, 2))


# ── Triangulation ───────────────────────────────────────────────────────────

def _unique_points(points: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    keys = np.round(points / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return points[np.sort(first)], rank[inverse.ravel()]


def _find_node(points: np.ndarray, xy: XY) -> int:
    dist = np.linalg.norm(points - np.asarray(xy), axis=1)
    return int(np.argmin(dist))


def _triangulate(points: np.ndarray, domain: Polygon, h_min: float) -> np.ndarray:
    tris = Delaunay(points).simplices
    P = points[tris]
    area = 0.5 * ((P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1])
                  - (P[:, 2, 0] - P[:, 0, 0]) * (P[:, 1, 1] - P[:, 0, 1]))
    centroid = P.mean(axis=1)
    keep = shapely.contains_xy(domain, centroid[:, 0], centroid[:, 1]) & (np.abs(area) > 1e-10 * h_min ** 2)
    tris, area = tris[keep], area[keep]
    flip = area < 0.0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _edge_codes(tris: np.ndarray, n: int) -> np.ndarray:
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e.sort(axis=1)
    return e[:, 0] * n + e[:, 1]


def _open_slits(points, tris, slit_nodes: List[np.ndarray], slits) -> Tuple[np.ndarray, np.ndarray, Dict[str, int]]:
    """Duplicate slit nodes (tip excluded) for triangles on the negative side."""
    points = list(points)
    tris = tris.copy()
    markers: Dict[str, int] = {}
    for index, (nodes, (mouth, tip)) in enumerate(zip(list(slit_nodes), slits)):
        direction = np.asarray(tip) - np.asarray(mouth)
        movable = {int(v) for v in nodes[:-1]}
        duplicate: Dict[int, int] = {}
        touching = np.nonzero(np.isin(tris, list(movable)).any(axis=1))[0]
        for t in touching:
            centroid = np.mean([points[v] for v in tris[t]], axis=0)
            side = _cross2(direction, centroid - np.asarray(mouth))
            if side >= 0.0:
                continue
            for j in range(3):
                v = int(tris[t, j])
                if v in movable:
                    if v not in duplicate:
                        duplicate[v] = len(points)
                        points.append(np.array(points[v]))
                    tris[t, j] = duplicate[v]
        suffix = "" if index == 0 else f"_{index + 1}"
        markers[f"mouth_pos{suffix}"] = int(nodes[0])
        markers[f"mouth_neg{suffix}"] = int(duplicate.get(int(nodes[0]), nodes[0]))
        slit_nodes[index] = np.concatenate([nodes, np.array(sorted(duplicate.values()), dtype=np.int64)])
    return np.array(points), tris, markers


def _tag_edges(points, tris, rules: Dict[str, TagRule], slit_node_sets, hole_count: int,
               domain: Polygon, tol: float) -> Dict[str, List[Tuple[int, int]]]:
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    boundary = e[counts[inverse.ravel()] == 1]
    mid = 0.5 * (points[boundary[:, 0]] + points[boundary[:, 1]])
    groups: Dict[str, List[Tuple[int, int]]] = {}
    on_slit = np.zeros(len(boundary), dtype=bool)
    all_slit = np.concatenate(slit_node_sets) if slit_node_sets else np.zeros(0, dtype=np.int64)
    if len(all_slit):
        on_slit = np.isin(boundary, all_slit).all(axis=1)
        groups["notch"] = [tuple(map(int, row)) for row in boundary[on_slit]]
    for name, rule in rules.items():
        hit = rule(mid) & ~on_slit
        if hit.any():
            groups[name] = [tuple(map(int, row)) for row in boundary[hit]]
    if hole_count:
        outer = shapely.distance(shapely.points(mid), domain.exterior) > tol
        hit = outer & ~on_slit
        if hit.any():
            groups["holes"] = [tuple(map(int, row)) for row in boundary[hit]]
    return groups


def refinement_band(h_fine: float, l_c: Optional[float] = None, band: Optional[float] = None) -> float:
    """
    Width of the refinement band around the guide polylines.
    Defaults to max(6 l_c, 10 h_fine); an explicit band must cover 6 l_c.
    Raises:
        ValueError: explicit band narrower than 6 l_c or not positive
    """
    floor = BAND_MIN_LC * l_c if l_c is not None else 0.0
    if band is None:
        return max(floor, BAND_DEFAULT_H * h_fine)
    band = float(band)
    if band <= 0.0:
        raise ValueError(f"band must be positive, got {band}")
    if band < floor:
        raise ValueError(f"band ({band:g}) must be at least {BAND_MIN_LC:g} l_c = {floor:g}")
    return band


def mesh_geometry(geo: GeometryDef, h_far: float, h_fine: float, band: Optional[float] = None,
                  notch_mode: str = "slit", name: str = "custom", l_c: Optional[float] = None) -> Mesh:
    if h_fine <= 0.0 or h_far <= 0.0:
        raise ValueError("mesh sizes must be positive")
    if h_fine > h_far:
        raise ValueError(f"h_fine ({h_fine}) must not exceed h_far ({h_far})")
    if notch_mode not in ("slit", "damage"):
        raise ValueError(f"notch_mode must be 'slit' or 'damage', got {notch_mode!r}")
    band = refinement_band(h_fine, l_c, band)
    tol = _tol(geo.scale)
    slits = list(geo.slits) if notch_mode == "slit" else []
    guides = [list(g) for g in geo.guides]
    if notch_mode == "damage":
        guides += [[m, t] for m, t in geo.slits]
    size = Sizing(guides, h_fine, h_far, band)

    exterior = _insert_on_ring(geo.exterior, [m for m, _ in slits] + list(geo.fixed_points.values()), tol)
    hole_rings = [_circle(c, r, float(size(np.array([c]))[0])) for c, r in geo.holes]
    domain = Polygon(exterior, holes=hole_rings)
    if not domain.is_valid:
        raise MeshError(f"invalid domain polygon for geometry {name}")
    lines = shapely.union_all([domain.boundary] + [LineString(s) for s in slits]) if slits else domain.boundary
    if geo.fixed_points:
        lines = shapely.union_all([lines] + [Point(p).buffer(tol) for p in geo.fixed_points.values()])

    samples = [_sample_polyline(exterior, size, closed=True)]
    samples += [_sample_polyline(ring, size, closed=True) for ring in hole_rings]
    slit_samples = [_sample_polyline([m, t], size, closed=False) for m, t in slits]
    interior = _interior_points(guides, domain, lines, size)
    points, inverse = _unique_points(np.vstack(samples + slit_samples + [interior]), 1e-9 * geo.scale)

    offset = sum(len(s) for s in samples)
    slit_nodes = []
    for s in slit_samples:
        slit_nodes.append(inverse[offset:offset + len(s)])
        offset += len(s)

    tris = _triangulate(points, domain, h_fine)
    codes = set(_edge_codes(tris, len(points)).tolist())
    for nodes in slit_nodes:
        for a, b in zip(nodes[:-1], nodes[1:]):
            lo, hi = (a, b) if a < b else (b, a)
            if int(lo) * len(points) + int(hi) not in codes:
                raise MeshError(f"slit of geometry {name} is not resolved by the triangulation; reduce h_fine")

    markers: Dict[str, int] = {}
    if slits:
        points, tris, markers = _open_slits(points, tris, slit_nodes, slits)
    for label, xy in geo.fixed_points.items():
        markers[label] = _find_node(points, xy)

    groups = _tag_edges(points, tris, geo.tag_rules, slit_nodes, len(geo.holes), domain, tol)
    meta = {
        "geometry": name,
        "h_fine": h_fine,
        "h_far": h_far,
        "band": band,
        "l_c": l_c,
        "notch_mode": notch_mode,
        "guides": [[list(map(float, p)) for p in g] for g in guides],
        "slits": [[list(map(float, m)), list(map(float, t))] for m, t in geo.slits],
    }
    mesh = build_p2(points, tris, groups, markers, meta)
    if notch_mode == "damage":
        seg = _segments([[m, t] for m, t in geo.slits])
        corner_xy = mesh.nodes[mesh.corner_nodes]
        near = segment_distance(corner_xy, seg) <= 0.5 * h_fine + tol
        mesh.meta["initial_damage_nodes"] = mesh.corner_nodes[near].tolist()
    print(f"[MESH] {name}: {mesh.n_elements} elements, {mesh.n_nodes} nodes "
          f"(h_fine={h_fine:g}, h_far={h_far:g}, band={band:g})")
    return mesh


def generate_benchmark(geometry: str, h_far: float, h_fine: float, band: Optional[float] = None,
                       dims: Optional[dict] = None, notch_mode: str = "slit",
                       l_c: Optional[float] = None) -> Mesh:
    """
    Mesh one of the benchmark domains.

    Args:
        geometry  : trapezoid | sen_plate | tpb_beam | den_plate
        h_far     : element size away from the expected crack path
        h_fine    : element size inside the refinement band
        band      : band width around the guide polylines (default max(6 l_c, 10 h_fine))
        dims      : overrides of the default dimensions
        notch_mode: "slit" opens notches by node duplication, "damage" seeds d = 1 instead
        l_c       : regularization length the band has to cover
    Raises:
        ValueError: unknown geometry id, h_fine > h_far or band < 6 l_c
    """
    if geometry not in BENCHMARKS:
        raise ValueError(f"unknown geometry {geometry!r}; allowed: {', '.join(GEOMETRY_IDS)}")
    return mesh_geometry(BENCHMARKS[geometry](dims), h_far, h_fine, band, notch_mode, geometry, l_c)
