"""
Material parameters: measurable engineering inputs, derived micropolar
constants, admissibility checks and fracture parameters.

All quantities are in the internal MPa / mm / N system.
"""
from dataclasses import dataclass, field
from typing import List, Tuple
import math
import os
import sys
import warnings

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from common.errors import AdmissibilityError


@dataclass(frozen=True)
class EngineeringParams:
    """Experimentally identifiable parameters (E, nu, N, l_b); l_t and chi are inert in 2D."""
    E: float
    nu: float
    N: float = 0.0
    l_b: float = 0.0
    l_t: float = 0.0
    chi: float = 0.0

    def __post_init__(self) -> None:
        if self.E <= 0.0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise ValueError(f"nu must lie in (-1, 0.5), got {self.nu}")
        if self.N == 1.0:
            raise AdmissibilityError(["N < 1 (couple-stress limit N = 1 is singular)"])
        if not 0.0 <= self.N < 1.0:
            raise ValueError(f"N must lie in [0, 1), got {self.N}")
        if self.l_b < 0.0:
            raise ValueError(f"l_b must be non-negative, got {self.l_b}")

    @property
    def shear_modulus(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))


@dataclass(frozen=True)
class MaterialConstants:
    """Lamé-type force-stress constants and couple-stress constants."""
    lam: float
    mu: float
    kappa: float
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    @property
    def shear_modulus(self) -> float:
        """mu + kappa/2, the modulus multiplying the symmetric strain."""
        return self.mu + 0.5 * self.kappa

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam, "mu": self.mu, "kappa": self.kappa,
            "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
        }


@dataclass(frozen=True)
class FractureParams:
    """Gc [N/mm], psi_crit [MPa], l_c [mm], shape parameter p."""
    Gc: float
    psi_crit: float
    l_c: float
    p: float = 10.0
    enforce_bound: bool = False

    def __post_init__(self) -> None:
        problems = []
        if self.Gc <= 0.0:
            problems.append(f"Gc must be positive, got {self.Gc}")
        if self.psi_crit <= 0.0:
            problems.append(f"psi_crit must be positive, got {self.psi_crit}")
        if self.l_c <= 0.0:
            problems.append(f"l_c must be positive, got {self.l_c}")
        if self.p < 1.0:
            problems.append(f"p must be >= 1, got {self.p}")
        if problems:
            raise ValueError("; ".join(problems))
        bound = max_regularization_length(self)
        if self.l_c > bound * (1.0 + 1e-12):
            message = f"l_c = {self.l_c} mm exceeds the admissible bound {bound:.6g} mm"
            if self.enforce_bound:
                raise ValueError(message)
            print(f"[MATERIAL] [WARN] {message}")
            warnings.warn(message, RuntimeWarning, stacklevel=2)


@dataclass
class AdmissibilityReport:
    """Outcome of check_admissibility; truthy when every inequality holds."""
    violated: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violated

    def __bool__(self) -> bool:
        return self.ok


def derive_constants(ep: EngineeringParams) -> MaterialConstants:
    """
    Plane-strain conversion of (E, nu, N, l_b) into micropolar constants.

    Args:
        ep: engineering parameters
    Returns:
        MaterialConstants with alpha = beta = 0
    Raises:
        AdmissibilityError: N = 1 or converted constants not admissible
    """
    if ep.N >= 1.0:
        raise AdmissibilityError(["N < 1 (couple-stress limit N = 1 is singular)"])
    G = ep.shear_modulus
    lam = ep.E * ep.nu / ((1.0 + ep.nu) * (1.0 - 2.0 * ep.nu))
    kappa = 2.0 * G * ep.N ** 2 / (1.0 - ep.N ** 2)
    mu = G - 0.5 * kappa
    gamma = 4.0 * G * ep.l_b ** 2
    mc = MaterialConstants(lam=lam, mu=mu, kappa=kappa, alpha=0.0, beta=0.0, gamma=gamma)
    report = check_admissibility(mc)
    if not report:
        raise AdmissibilityError(report.violated)
    return mc


def engineering_from_constants(mc: MaterialConstants) -> Tuple[float, float, float, float]:
    """Forward relations: returns (E, nu, N, l_b) of the given constants."""
    two_g = 2.0 * mc.mu + mc.kappa
    E = two_g * (3.0 * mc.lam + two_g) / (2.0 * mc.lam + two_g)
    nu = mc.lam / (2.0 * mc.lam + two_g)
    N = math.sqrt(mc.kappa / (2.0 * (mc.mu + mc.kappa))) if mc.kappa > 0.0 else 0.0
    l_b = math.sqrt(mc.gamma / (2.0 * two_g)) if mc.gamma > 0.0 else 0.0
    return E, nu, N, l_b


def check_admissibility(mc: MaterialConstants) -> AdmissibilityReport:
    """Evaluates the six positive-definiteness inequalities; never raises."""
    conditions = (
        ("3λ+2μ+κ ≥ 0", 3.0 * mc.lam + 2.0 * mc.mu + mc.kappa),
        ("2μ+κ ≥ 0", 2.0 * mc.mu + mc.kappa),
        ("κ ≥ 0", mc.kappa),
        ("3α+β+γ ≥ 0", 3.0 * mc.alpha + mc.beta + mc.gamma),
        ("γ+β ≥ 0", mc.gamma + mc.beta),
        ("γ−β ≥ 0", mc.gamma - mc.beta),
    )
    return AdmissibilityReport(violated=[name for name, value in conditions if value < 0.0])


def max_regularization_length(fp: FractureParams) -> float:
    """Upper bound on l_c keeping g monotone: 3 Gc / (8 (p+2) psi_crit)."""
    return 3.0 * fp.Gc / (8.0 * (fp.p + 2.0) * fp.psi_crit)


def fracture_threshold(fp: FractureParams) -> float:
    """Nondimensional threshold F_crit = psi_crit * l_c / Gc."""
    return fp.psi_crit * fp.l_c / fp.Gc


def degradation_m(fp: FractureParams) -> float:
    """
    m = 3 / (8 F_crit).

    Values below 1 are returned unchanged with a warning.
    """
    f_crit = fracture_threshold(fp)
    if f_crit == 0.0:
        raise ValueError("F_crit is zero; m is undefined")
    m = 3.0 / (8.0 * f_crit)
    if m < 1.0:
        message = f"degradation constant m = {m:.6g} < 1 (l_c too large for psi_crit, Gc)"
        print(f"[MATERIAL] [WARN] {message}")
        warnings.warn(message, RuntimeWarning, stacklevel=2)
    return m
