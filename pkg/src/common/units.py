# src/common/units.py
"""
Unit-suffixed quantities from scenario files, converted to MPa, mm, N.

    parse_quantity("30 GPa", "stress")      -> 30000.0
    parse_quantity("0.1 kJ/m^3", "stress")  -> 1e-4
    parse_quantity("2.7 N/mm", "release")   -> 2.7
"""
import re
from typing import Any, Dict

# ── Conversion tables (factor to the internal unit) ─────────────────────────
LENGTH = {"mm": 1.0, "cm": 10.0, "m": 1e3, "um": 1e-3, "µm": 1e-3}

# stress and energy density share the dimension of MPa = N/mm^2 = MJ/m^3
STRESS = {
    "Pa": 1e-6, "kPa": 1e-3, "MPa": 1.0, "GPa": 1e3,
    "N/mm^2": 1.0, "N/mm2": 1.0, "N/m^2": 1e-6, "N/m2": 1e-6,
    "J/m^3": 1e-6, "J/m3": 1e-6, "kJ/m^3": 1e-3, "kJ/m3": 1e-3,
    "MJ/m^3": 1.0, "MJ/m3": 1.0, "mJ/mm^3": 1.0,
}

# energy release rate, and force per unit thickness
RELEASE = {
    "N/mm": 1.0, "N/m": 1e-3, "kN/m": 1.0,
    "J/m^2": 1e-3, "J/m2": 1e-3, "kJ/m^2": 1.0, "kJ/m2": 1.0, "mJ/mm^2": 1.0,
}

FORCE = {"N": 1.0, "kN": 1e3, "mN": 1e-3}

UNIT_TABLES: Dict[str, Dict[str, float]] = {
    "length": LENGTH,
    "stress": STRESS,
    "release": RELEASE,
    "force": FORCE,
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S+)?\s*$")


def parse_quantity(value: Any, kind: str) -> float:
    """
    Convert a scenario value to the internal unit system.

    Args:
        value: string like "30 GPa", or a bare number for kind "dimensionless"
        kind : one of "length", "stress", "release", "force", "dimensionless"
    Returns:
        float: value in MPa / mm / N
    Raises:
        ValueError: unknown kind, unknown suffix, or missing suffix on a physical value
    """
    if kind == "dimensionless":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"expected a bare number, got {value!r}")
        return float(value)
    if kind not in UNIT_TABLES:
        raise ValueError(f"unknown quantity kind {kind!r}")
    table = UNIT_TABLES[kind]
    if not isinstance(value, str):
        raise ValueError(
            f"{kind} value {value!r} needs a unit suffix (one of {', '.join(table)})"
        )
    match = _QUANTITY.match(value)
    if match is None or match.group(2) is None:
        raise ValueError(
            f"cannot read {value!r} as a {kind} (expected '<number> <unit>', units: {', '.join(table)})"
        )
    number, unit = match.group(1), match.group(2)
    if unit not in table:
        raise ValueError(f"unknown {kind} unit {unit!r}; allowed: {', '.join(table)}")
    return float(number) * table[unit]

