"""
Phase-field ingredients: quasi-quadratic degradation family, crack surface
density with linear local dissipation w(d) = d, driving force and history.

The history update max(H_old, F_crit + F_crit <F/F_crit - 1>+) is evaluated in
the equivalent form max(H_old, F, F_crit).
"""
from dataclasses import dataclass, field
from typing import FrozenSet, Tuple, TYPE_CHECKING
import numpy as np

from common.constants import ENERGY_PARTS
from engine.material import FractureParams, degradation_m, fracture_threshold

if TYPE_CHECKING:
    from engine.constitutive import EnergySplit
    from engine.fem.mesh import Mesh


def parse_degrade_set(text: str) -> FrozenSet[str]:
    """'BCR' -> {'B','C','R'}; '' or '-' -> empty set."""
    if text is None:
        raise ValueError("degradation set is missing; allowed tokens: B, C, R")
    tokens = [c for c in str(text).strip().upper() if c not in " ,-{}"]
    unknown = sorted({c for c in tokens if c not in ENERGY_PARTS})
    if unknown:
        raise ValueError(
            f"invalid degradation set {text!r}: unknown token(s) {', '.join(unknown)}; "
            f"allowed tokens: B, C, R"
        )
    if len(set(tokens)) != len(tokens):
        raise ValueError(f"invalid degradation set {text!r}: repeated token")
    return frozenset(tokens)


@dataclass(frozen=True)
class DegradationConfig:
    """Shape parameter p, constant m and the degraded subset of {B, C, R}."""
    p: float
    m: float
    degrade_set: FrozenSet[str] = field(default_factory=lambda: frozenset(ENERGY_PARTS))

    def __post_init__(self) -> None:
        if self.p < 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        object.__setattr__(self, "degrade_set", frozenset(self.degrade_set))
        if not self.degrade_set <= set(ENERGY_PARTS):
            raise ValueError(f"degradation set must be a subset of B, C, R, got {sorted(self.degrade_set)}")

    @classmethod
    def from_fracture(cls, fp: FractureParams, degrade_set="BCR") -> "DegradationConfig":
        parts = parse_degrade_set(degrade_set) if isinstance(degrade_set, str) else frozenset(degrade_set)
        return cls(p=fp.p, m=degradation_m(fp), degrade_set=parts)

    @property
    def undegraded(self) -> FrozenSet[str]:
        return frozenset(ENERGY_PARTS) - self.degrade_set

    @property
    def label(self) -> str:
        return "".join(part for part in ENERGY_PARTS if part in self.degrade_set) or "-"

    def g(self, d):
        return g(d, self)

    def g_prime(self, d):
        return g_prime(d, self)

    def g_prime2(self, d):
        return g_prime2(d, self)


# ── Degradation family ──────────────────────────────────────────────────────
# g = a / (a + b), a = (1-d)^2, b = m d (1 + p d)

def _parts(d, cfg: DegradationConfig):
    d = np.asarray(d, dtype=float)
    a = (1.0 - d) ** 2
    b = cfg.m * d * (1.0 + cfg.p * d)
    da = -2.0 * (1.0 - d)
    db = cfg.m * (1.0 + 2.0 * cfg.p * d)
    return a, b, da, db


def g(d, cfg: DegradationConfig):
    a, b, _, _ = _parts(d, cfg)
    return a / (a + b)


def g_prime(d, cfg: DegradationConfig):
    a, b, da, db = _parts(d, cfg)
    return (da * b - a * db) / (a + b) ** 2


def g_prime2(d, cfg: DegradationConfig):
    a, b, da, db = _parts(d, cfg)
    denom = a + b
    num = da * b - a * db
    dnum = 2.0 * b - a * (2.0 * cfg.m * cfg.p)
    return (dnum * denom - 2.0 * num * (da + db)) / denom ** 3


def degradation_factors(d, cfg: DegradationConfig, residual_stiffness: float = 0.0) -> Tuple:
    """(g_B, g_C, g_R): g for degraded parts, 1 otherwise. eta keeps stiffness positive."""
    gd = g(d, cfg)
    if residual_stiffness:
        gd = (1.0 - residual_stiffness) * gd + residual_stiffness
    one = np.ones_like(gd)
    return tuple(gd if part in cfg.degrade_set else one for part in ENERGY_PARTS)


# ── Crack surface ───────────────────────────────────────────────────────────

def crack_density(d, grad_d, l_c: float):
    """3 d / (8 l_c) + 3 l_c / 8 |grad d|^2"""
    d = np.asarray(d, dtype=float)
    grad_d = np.asarray(grad_d, dtype=float)
    return 3.0 * d / (8.0 * l_c) + 3.0 * l_c / 8.0 * np.sum(grad_d ** 2, axis=-1)


def optimal_profile(x, l_c: float):
    """Localized 1D profile of the w(d) = d model, support |x| <= 2 l_c."""
    x = np.abs(np.asarray(x, dtype=float))
    return np.where(x <= 2.0 * l_c, (1.0 - x / (2.0 * l_c)) ** 2, 0.0)


def crack_surface_total(mesh: "Mesh", d, l_c: float) -> float:
    """Quadrature integral of the crack density; d holds one value per corner node."""
    from engine.fem.elements import interpolate_p1
    d = np.asarray(d, dtype=float)
    d_q, grad_d_q, weights = interpolate_p1(mesh, d)
    return float(np.sum(crack_density(d_q, grad_d_q, l_c) * weights))


# ── Driving force and history ───────────────────────────────────────────────

def driving_force(es: "EnergySplit", cfg: DegradationConfig, fp: FractureParams):
    """Sum of degraded energy parts over Gc/l_c; only psi_B_pos counts for B."""
    total = np.zeros_like(np.asarray(es.psi_B_pos, dtype=float))
    if "B" in cfg.degrade_set:
        total = total + es.psi_B_pos
    if "C" in cfg.degrade_set:
        total = total + es.psi_C
    if "R" in cfg.degrade_set:
        total = total + es.psi_R
    return total / (fp.Gc / fp.l_c)


def update_history(H_old, F, fp: FractureParams):
    return np.maximum(np.maximum(H_old, F), fracture_threshold(fp))


@dataclass
class HistoryField:
    """Nondimensional driving-force maximum per quadrature point."""
    H: np.ndarray

    @classmethod
    def initial(cls, shape, fp: FractureParams) -> "HistoryField":
        return cls(np.full(shape, fracture_threshold(fp)))

    def updated(self, F, fp: FractureParams) -> "HistoryField":
        return HistoryField(update_history(self.H, F, fp))

    def copy(self) -> "HistoryField":
        return HistoryField(self.H.copy())
