"""Crack-band extraction and path metrics on corner-node damage fields."""
from typing import Optional, Sequence
import math
import numpy as np
from scipy.spatial.distance import directed_hausdorff

from engine.fem.mesh import Mesh


def crack_band(mesh: Mesh, d, threshold: float = 0.95) -> np.ndarray:
    """Coordinates (k, 2) of corner nodes with d above the threshold."""
    d = np.asarray(d, dtype=float)
    return mesh.nodes[mesh.corner_nodes[d > threshold]]


def hausdorff_distance(band_a: np.ndarray, band_b: np.ndarray) -> float:
    if len(band_a) == 0 or len(band_b) == 0:
        return math.inf if len(band_a) != len(band_b) else 0.0
    return max(directed_hausdorff(band_a, band_b)[0], directed_hausdorff(band_b, band_a)[0])


def mean_deviation(band: np.ndarray, y0: float) -> float:
    """Mean |y - y0| over the band; nan for an empty band."""
    if len(band) == 0:
        return math.nan
    return float(np.mean(np.abs(band[:, 1] - y0)))


def crack_angle(band: np.ndarray, tip: Sequence[float], distance: float,
                width: Optional[float] = None) -> float:
    """
    Direction (degrees, counterclockwise from +x) of the band seen from the
    notch tip, averaged over band points at the given distance.
    """
    if len(band) == 0:
        return math.nan
    rel = band - np.asarray(tip, dtype=float)
    r = np.linalg.norm(rel, axis=1)
    width = width if width is not None else 0.25 * distance
    ring = np.abs(r - distance) <= width
    if not ring.any():
        return math.nan
    mean = rel[ring].mean(axis=0)
    return math.degrees(math.atan2(mean[1], mean[0]))
