"""
Quadrature-point kernel for 2D plane-strain micropolar elasticity.

Index convention: grad_u[..., i, j] = du_i/dx_j. The in-plane skew strain is
s = 1/2 (u2,1 - u1,2) - theta3, so that eps12_skew = s and eps21_skew = -s.
Voigt vectors are [e11, e22, 2*e12] for strain and [s11, s22, s12] for stress.

Energy parts (per unit volume):
    psi_B+- = 1/2 lam <tr eps>+-^2 + (mu + kappa/2) eps+- : eps+-
    psi_C   = kappa * s^2
    psi_R   = 1/2 gamma |grad theta3|^2

Every function accepts arrays with arbitrary leading axes (quadrature points).
"""
from dataclasses import dataclass
from typing import Tuple
import numpy as np

from common.constants import COALESCENCE_TOL
from engine.material import MaterialConstants
from engine.phasefield import DegradationConfig, degradation_factors


@dataclass
class KinematicState:
    eps_sym: np.ndarray      # (..., 2, 2)
    eps_skew: np.ndarray     # (...)
    curvature: np.ndarray    # (..., 2)


@dataclass
class EnergySplit:
    psi_B_pos: np.ndarray
    psi_B_neg: np.ndarray
    psi_C: np.ndarray
    psi_R: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.psi_B_pos + self.psi_B_neg + self.psi_C + self.psi_R


@dataclass
class StressState:
    sigma_B: np.ndarray      # (..., 2, 2)
    sigma_C: np.ndarray      # (...)
    m_R: np.ndarray          # (..., 2)


@dataclass
class TangentBlocks:
    D_sym: np.ndarray        # (..., 3, 3) Voigt, d sigma_B / d eps_sym
    c_skew: np.ndarray       # (...) d sigma_C / d eps_skew
    D_curv: np.ndarray       # (..., 2, 2) d m_R / d curvature


def compute_kinematics(grad_u, theta3, grad_theta3) -> KinematicState:
    grad_u = np.asarray(grad_u, dtype=float)
    eps_sym = 0.5 * (grad_u + np.swapaxes(grad_u, -1, -2))
    eps_skew = 0.5 * (grad_u[..., 1, 0] - grad_u[..., 0, 1]) - np.asarray(theta3, dtype=float)
    return KinematicState(eps_sym, eps_skew, np.asarray(grad_theta3, dtype=float))


def _eigen(eps_sym: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(eps_sym)
    return vals, vecs


def spectral_split(eps_sym) -> Tuple[np.ndarray, np.ndarray]:
    """Returns (eps_pos, eps_neg) with eps_pos + eps_neg == eps_sym."""
    eps_sym = np.asarray(eps_sym, dtype=float)
    vals, vecs = _eigen(eps_sym)
    pos = np.maximum(vals, 0.0)
    eps_pos = np.einsum("...a,...ia,...ja->...ij", pos, vecs, vecs)
    return eps_pos, eps_sym - eps_pos


def _trace(t: np.ndarray) -> np.ndarray:
    return t[..., 0, 0] + t[..., 1, 1]


def _ddot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", a, b)


def energy_split(ks: KinematicState, mc: MaterialConstants) -> EnergySplit:
    eps_pos, eps_neg = spectral_split(ks.eps_sym)
    tr = _trace(ks.eps_sym)
    G = mc.shear_modulus
    psi_B_pos = 0.5 * mc.lam * np.maximum(tr, 0.0) ** 2 + G * _ddot(eps_pos, eps_pos)
    psi_B_neg = 0.5 * mc.lam * np.minimum(tr, 0.0) ** 2 + G * _ddot(eps_neg, eps_neg)
    psi_C = mc.kappa * ks.eps_skew ** 2
    psi_R = 0.5 * mc.gamma * np.sum(ks.curvature ** 2, axis=-1)
    return EnergySplit(psi_B_pos, psi_B_neg, psi_C, psi_R)


def total_energy(ks: KinematicState, mc: MaterialConstants) -> np.ndarray:
    """Unsplit stored energy density."""
    tr = _trace(ks.eps_sym)
    return (
        0.5 * mc.lam * tr ** 2
        + mc.shear_modulus * _ddot(ks.eps_sym, ks.eps_sym)
        + mc.kappa * ks.eps_skew ** 2
        + 0.5 * mc.gamma * np.sum(ks.curvature ** 2, axis=-1)
    )


def degraded_energy(es: EnergySplit, d, cfg: DegradationConfig) -> np.ndarray:
    g_B, g_C, g_R = degradation_factors(d, cfg)
    return g_B * es.psi_B_pos + es.psi_B_neg + g_C * es.psi_C + g_R * es.psi_R


def degraded_stresses(ks: KinematicState, mc: MaterialConstants, d, cfg: DegradationConfig,
                      residual_stiffness: float = 0.0) -> StressState:
    """Stresses with g applied to the tensile Boltzmann part and to C, R when degraded."""
    g_B, g_C, g_R = degradation_factors(d, cfg, residual_stiffness)
    eps_pos, eps_neg = spectral_split(ks.eps_sym)
    tr = _trace(ks.eps_sym)
    eye = np.eye(2)
    two_g = 2.0 * mc.shear_modulus
    sig_pos = mc.lam * np.maximum(tr, 0.0)[..., None, None] * eye + two_g * eps_pos
    sig_neg = mc.lam * np.minimum(tr, 0.0)[..., None, None] * eye + two_g * eps_neg
    sigma_B = np.asarray(g_B)[..., None, None] * sig_pos + sig_neg
    sigma_C = g_C * mc.kappa * ks.eps_skew
    m_R = np.asarray(g_R)[..., None] * mc.gamma * ks.curvature
    return StressState(sigma_B, sigma_C, m_R)


def _voigt(t: np.ndarray) -> np.ndarray:
    return np.stack([t[..., 0, 0], t[..., 1, 1], t[..., 0, 1]], axis=-1)


def positive_projector(eps_sym) -> np.ndarray:
    """
    Voigt form of d eps_pos / d eps_sym.

    Sum_a H(e_a) M_a x M_a + r * 2 W x W, with M_a = n_a x n_a,
    W = sym(n_1 x n_2) and r = (<e1>+ - <e2>+) / (e1 - e2).
    At coalescence r is replaced by the shared Macaulay sign H(e1).
    """
    eps_sym = np.asarray(eps_sym, dtype=float)
    vals, vecs = _eigen(eps_sym)
    n1, n2 = vecs[..., :, 0], vecs[..., :, 1]
    M1 = _voigt(np.einsum("...i,...j->...ij", n1, n1))
    M2 = _voigt(np.einsum("...i,...j->...ij", n2, n2))
    W = _voigt(0.5 * (np.einsum("...i,...j->...ij", n1, n2) + np.einsum("...i,...j->...ij", n2, n1)))
    e1, e2 = vals[..., 0], vals[..., 1]
    h1 = np.heaviside(e1, 0.0)
    h2 = np.heaviside(e2, 0.0)
    gap = e1 - e2
    scale = np.maximum(np.abs(e1), np.abs(e2))
    coalesced = np.abs(gap) <= COALESCENCE_TOL * np.maximum(scale, np.finfo(float).tiny)
    safe_gap = np.where(coalesced, 1.0, gap)
    ratio = np.where(coalesced, h1, (np.maximum(e1, 0.0) - np.maximum(e2, 0.0)) / safe_gap)
    outer = lambda a, b: np.einsum("...i,...j->...ij", a, b)
    return (
        h1[..., None, None] * outer(M1, M1)
        + h2[..., None, None] * outer(M2, M2)
        + 2.0 * ratio[..., None, None] * outer(W, W)
    )


_I_SYM = np.diag([1.0, 1.0, 0.5])
_M_TRACE = np.array([1.0, 1.0, 0.0])


def consistent_tangent(ks: KinematicState, mc: MaterialConstants, d, cfg: DegradationConfig,
                       residual_stiffness: float = 0.0) -> TangentBlocks:
    g_B, g_C, g_R = degradation_factors(d, cfg, residual_stiffness)
    g_B = np.asarray(g_B, dtype=float)
    tr = _trace(ks.eps_sym)
    P_pos = positive_projector(ks.eps_sym)
    P_neg = _I_SYM - P_pos
    h_pos = np.heaviside(tr, 0.0)
    vol = mc.lam * (g_B * h_pos + (1.0 - h_pos))
    two_g = 2.0 * mc.shear_modulus
    D_sym = (
        vol[..., None, None] * np.outer(_M_TRACE, _M_TRACE)
        + two_g * (g_B[..., None, None] * P_pos + P_neg)
    )
    shape = np.shape(ks.eps_skew)
    c_skew = np.broadcast_to(g_C * mc.kappa, shape).astype(float)
    D_curv = np.broadcast_to(g_R, shape)[..., None, None] * mc.gamma * np.eye(2)
    return TangentBlocks(D_sym, c_skew, D_curv)
