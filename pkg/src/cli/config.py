"""
Scenario files: TOML with unit-suffixed physical values.

Every validation problem is collected and raised once as a ConfigError, so a
broken file is reported completely before any mesh is generated.
"""
import copy
import math
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict, List, Optional, Tuple

current_dir = os.path.dirname(os.path.abspath(__file__))
src_dir = os.path.dirname(current_dir)
if src_dir not in sys.path:
    sys.path.insert(0, src_dir)

from common import constants as C
from common.errors import AdmissibilityError, ConfigError
from common.units import parse_quantity
from engine.analytic1d import Bar1DParams, DEFAULT_D_TARGETS
from engine.material import EngineeringParams, FractureParams, derive_constants
from engine.models import (
    BoundaryCondition, GeometrySettings, OutputSettings, Scenario, SolverSettings,
)
from engine.phasefield import parse_degrade_set

SECTIONS = ("scenario", "material", "fracture", "degradation", "geometry", "bc", "solver", "output", "sweep", "bar")

_MISSING = object()


class _Reader:
    """Pulls typed values out of the raw TOML tree and records every failure."""

    def __init__(self, raw: Dict[str, Any]):
        self.raw = raw
        self.errors: List[str] = []

    def section(self, name: str) -> Dict[str, Any]:
        value = self.raw.get(name, {})
        if not isinstance(value, dict):
            self.errors.append(f"[{name}] must be a table")
            return {}
        return value

    def get(self, section: str, key: str, kind: Optional[str] = None, default: Any = _MISSING):
        table = self.section(section)
        if key not in table:
            if default is _MISSING:
                self.errors.append(f"[{section}] {key} is required")
                return None
            return default
        value = table[key]
        if kind is None:
            return value
        try:
            return parse_quantity(value, kind)
        except ValueError as exc:
            self.errors.append(f"[{section}] {key}: {exc}")
            return None

    def integer(self, section: str, key: str, default: Any = _MISSING, minimum: int = 0) -> Optional[int]:
        value = self.get(section, key, default=default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            self.errors.append(f"[{section}] {key} must be an integer >= {minimum}, got {value!r}")
            return None
        return value

    def choice(self, section: str, key: str, allowed, default: Any = _MISSING) -> Optional[str]:
        value = self.get(section, key, default=default)
        if value is not None and value not in allowed:
            self.errors.append(f"[{section}] {key} = {value!r} is not one of {', '.join(allowed)}")
            return None
        return value

    def flag(self, section: str, key: str, default: bool) -> bool:
        value = self.get(section, key, default=default)
        if not isinstance(value, bool):
            self.errors.append(f"[{section}] {key} must be true or false, got {value!r}")
            return default
        return value


# ── Reading ─────────────────────────────────────────────────────────────────

def read_config(path: str) -> Dict[str, Any]:
    """
    Raises:
        ConfigError: unreadable file or TOML syntax error
    """
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror or exc}"])
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"])
    unknown = sorted(set(raw) - set(SECTIONS))
    if unknown:
        raise ConfigError([f"unknown section [{name}]; allowed: {', '.join(SECTIONS)}" for name in unknown])
    raw.setdefault("scenario", {})
    raw["scenario"].setdefault("name", os.path.splitext(os.path.basename(path))[0])
    raw["scenario"]["_base_dir"] = os.path.dirname(os.path.abspath(path))
    return raw


def _engineering(reader: _Reader) -> Optional[EngineeringParams]:
    E = reader.get("material", "E", "stress")
    nu = reader.get("material", "nu", "dimensionless")
    N = reader.get("material", "N", "dimensionless", 0.0)
    l_b = reader.get("material", "l_b", "length", 0.0)
    l_t = reader.get("material", "l_t", "length", 0.0)
    chi = reader.get("material", "chi", "dimensionless", 0.0)
    G = reader.get("material", "G", "stress", None)
    if None in (E, nu, N, l_b, l_t, chi):
        return None
    try:
        ep = EngineeringParams(E=E, nu=nu, N=N, l_b=l_b, l_t=l_t, chi=chi)
        derive_constants(ep)
    except (ValueError, AdmissibilityError) as exc:
        reader.errors.append(f"[material] {exc}")
        return None
    if G is not None and not math.isclose(G, ep.shear_modulus, rel_tol=1e-10):
        reader.errors.append(
            f"[material] G = {G} MPa is inconsistent with E/(2(1+nu)) = {ep.shear_modulus:.10g} MPa"
        )
        return None
    return ep


def _fracture(reader: _Reader) -> Optional[FractureParams]:
    Gc = reader.get("fracture", "Gc", "release")
    psi_crit = reader.get("fracture", "psi_crit", "stress")
    l_c = reader.get("fracture", "l_c", "length")
    p = reader.get("fracture", "p", "dimensionless", C.DEFAULT_SHAPE_P)
    enforce = reader.flag("fracture", "enforce_bound", False)
    if None in (Gc, psi_crit, l_c, p):
        return None
    try:
        return FractureParams(Gc=Gc, psi_crit=psi_crit, l_c=l_c, p=p, enforce_bound=enforce)
    except ValueError as exc:
        reader.errors.append(f"[fracture] {exc}")
        return None


def _dims(reader: _Reader) -> Dict[str, Any]:
    """Geometry dimensions: strings with a length unit are converted, everything else kept."""
    dims = {}
    for key, value in reader.section("geometry").get("dims", {}).items():
        if isinstance(value, str):
            try:
                value = parse_quantity(value, "length")
            except ValueError:
                pass
        elif isinstance(value, list):
            converted = []
            for item in value:
                try:
                    converted.append(parse_quantity(item, "length") if isinstance(item, str) else item)
                except ValueError as exc:
                    reader.errors.append(f"[geometry.dims] {key}: {exc}")
            value = converted
        dims[key] = value
    return dims


def _geometry(reader: _Reader) -> GeometrySettings:
    table = reader.section("geometry")
    settings = GeometrySettings(notch_mode=reader.choice("geometry", "notch_mode", ("slit", "damage"), "slit"))
    if "mesh" in table and "id" in table:
        reader.errors.append("[geometry] give either id or mesh, not both")
    if "mesh" in table:
        path = table["mesh"]
        if not os.path.isabs(path):
            path = os.path.join(reader.raw["scenario"].get("_base_dir", "."), path)
        settings.mesh_path = path
        return settings
    settings.id = reader.choice("geometry", "id", C.GEOMETRY_IDS)
    settings.h_far = reader.get("geometry", "h_far", "length")
    settings.h_fine = reader.get("geometry", "h_fine", "length")
    settings.band = reader.get("geometry", "band", "length", None)
    settings.dims = _dims(reader)
    if settings.h_far is not None and settings.h_fine is not None and settings.h_fine > settings.h_far:
        reader.errors.append("[geometry] h_fine must not exceed h_far")
    return settings


def _bc_kind(field: str, kind: str) -> str:
    if kind == C.BC_DIRICHLET:
        return "dimensionless" if field == C.FIELD_THETA else "length"
    if kind == C.BC_MOMENT:
        return "release"
    return "stress"


def _conditions(reader: _Reader) -> List[BoundaryCondition]:
    raw = reader.section("bc").get("conditions", [])
    if not isinstance(raw, list) or not raw:
        reader.errors.append("[bc] at least one [[bc.conditions]] entry is required")
        return []
    result = []
    for index, entry in enumerate(raw, start=1):
        where = f"[[bc.conditions]] #{index}"
        tag, field = entry.get("tag"), entry.get("field")
        kind = entry.get("kind", C.BC_DIRICHLET)
        if not isinstance(tag, str) or not tag:
            reader.errors.append(f"{where}: tag is required")
            continue
        if field not in C.BC_FIELDS or kind not in C.BC_KINDS:
            reader.errors.append(
                f"{where}: field must be one of {', '.join(C.BC_FIELDS)} and kind one of {', '.join(C.BC_KINDS)}"
            )
            continue
        unit_kind = _bc_kind(field, kind)
        values = {}
        for key in ("increment", "value"):
            value = entry.get(key, _MISSING)
            if value is _MISSING:
                values[key] = 0.0
                continue
            try:
                values[key] = parse_quantity(value, unit_kind)
            except ValueError as exc:
                if kind == C.BC_TRACTION:
                    # point loads on markers are given per unit thickness
                    try:
                        values[key] = parse_quantity(value, "release")
                        continue
                    except ValueError:
                        pass
                reader.errors.append(f"{where} {key}: {exc}")
        if len(values) != 2:
            continue
        try:
            result.append(BoundaryCondition(tag=tag, field=field, kind=kind, **values))
        except ValueError as exc:
            reader.errors.append(f"{where}: {exc}")
    return result


def _solver(reader: _Reader) -> SolverSettings:
    defaults = SolverSettings()
    settings = SolverSettings(
        momentum_mode=reader.choice("solver", "momentum_mode", C.MOMENTUM_MODES, defaults.momentum_mode),
        tol_u=reader.get("solver", "tol_u", "dimensionless", defaults.tol_u),
        tol_d=reader.get("solver", "tol_d", "dimensionless", defaults.tol_d),
        max_iter_u=reader.integer("solver", "max_iter_u", defaults.max_iter_u, 1),
        max_iter_d=reader.integer("solver", "max_iter_d", defaults.max_iter_d, 1),
        stagger_passes=reader.integer("solver", "stagger_passes", defaults.stagger_passes, 1),
        tol_stagger=reader.get("solver", "tol_stagger", "dimensionless", defaults.tol_stagger),
        linear_solver=reader.choice("solver", "linear_solver", C.LINEAR_SOLVERS, defaults.linear_solver),
        max_halvings=reader.integer("solver", "max_halvings", defaults.max_halvings, 0),
        residual_stiffness=reader.get("solver", "residual_stiffness", "dimensionless", defaults.residual_stiffness),
        threads=reader.integer("solver", "threads", defaults.threads, 1),
    )
    for name in ("tol_u", "tol_d", "tol_stagger"):
        value = getattr(settings, name)
        if value is not None and value <= 0.0:
            reader.errors.append(f"[solver] {name} must be positive")
    if settings.residual_stiffness is not None and not 0.0 <= settings.residual_stiffness < 1.0:
        reader.errors.append("[solver] residual_stiffness must lie in [0, 1)")
    return settings


def _output(reader: _Reader) -> OutputSettings:
    reaction_tag = reader.get("output", "reaction_tag", default=None)
    if reaction_tag is not None and not isinstance(reaction_tag, str):
        reader.errors.append("[output] reaction_tag must be a string")
        reaction_tag = None
    return OutputSettings(
        snapshot_every=reader.integer("output", "snapshot_every", 0, 0) or 0,
        reaction_tag=reaction_tag,
        cmod=reader.flag("output", "cmod", False),
        verbose=reader.flag("output", "verbose", True),
    )


def _public(raw: Dict[str, Any]) -> Dict[str, Any]:
    """Raw tree without the sweep table and internal keys, for the run manifest."""
    out = {k: copy.deepcopy(v) for k, v in raw.items() if k != "sweep"}
    out["scenario"] = {k: v for k, v in out.get("scenario", {}).items() if not k.startswith("_")}
    return out


def parse_scenario(raw: Dict[str, Any]) -> Scenario:
    """
    Build a validated Scenario from a raw TOML tree.

    Raises:
        ConfigError: with every problem found
    """
    reader = _Reader(raw)
    engineering = _engineering(reader)
    fracture = _fracture(reader)
    degrade_set = reader.get("degradation", "set", default=C.DEFAULT_DEGRADE_SET)
    try:
        parse_degrade_set(degrade_set)
    except ValueError as exc:
        reader.errors.append(f"[degradation] {exc}")
    geometry = _geometry(reader)
    if fracture is not None and geometry.band is not None and geometry.band < C.BAND_MIN_LC * fracture.l_c:
        reader.errors.append(f"[geometry] band must be at least {C.BAND_MIN_LC:g} l_c = {C.BAND_MIN_LC * fracture.l_c:g} mm")
    steps = reader.integer("bc", "steps", minimum=1)
    conditions = _conditions(reader)
    solver = _solver(reader)
    output = _output(reader)
    if conditions and not any(bc.kind != C.BC_DIRICHLET or bc.increment != 0.0 for bc in conditions):
        reader.errors.append("[bc] no condition changes with the load factor")
    if reader.errors:
        raise ConfigError(reader.errors)
    info = reader.section("scenario")
    return Scenario(
        name=str(info.get("name", "scenario")),
        engineering=engineering,
        fracture=fracture,
        degrade_set=str(degrade_set),
        geometry=geometry,
        conditions=conditions,
        steps=steps,
        solver=solver,
        output=output,
        description=str(info.get("description", "")),
        source=_public(raw),
    )


# ── 1D bar ──────────────────────────────────────────────────────────────────

def parse_bar(raw: Dict[str, Any]) -> Tuple[Bar1DParams, Dict[str, Any]]:
    """
    [bar] moduli and lengths plus [fracture]; options are n_elements, d_targets, l_c_sweep.

    Raises:
        ConfigError: with every problem found
    """
    reader = _Reader(raw)
    values = {
        "C_B": reader.get("bar", "C_B", "stress"),
        "C_C": reader.get("bar", "C_C", "stress"),
        "C_R": reader.get("bar", "C_R", "stress"),
        "l_e": reader.get("bar", "l_e", "length", 1.0),
        "L": reader.get("bar", "L", "length"),
        "Gc": reader.get("fracture", "Gc", "release"),
        "psi_crit": reader.get("fracture", "psi_crit", "stress"),
        "l_c": reader.get("fracture", "l_c", "length"),
        "p": reader.get("fracture", "p", "dimensionless", C.DEFAULT_SHAPE_P),
    }
    options = {
        "n_elements": reader.integer("bar", "n_elements", 1200, 2),
        "d_targets": reader.get("bar", "d_targets", default=list(DEFAULT_D_TARGETS)),
        "l_c_sweep": [],
    }
    for item in reader.section("bar").get("l_c_sweep", []):
        try:
            options["l_c_sweep"].append(parse_quantity(item, "length"))
        except ValueError as exc:
            reader.errors.append(f"[bar] l_c_sweep: {exc}")
    targets = options["d_targets"]
    if not isinstance(targets, list) or not all(isinstance(v, (int, float)) and 0.0 < v < 1.0 for v in targets):
        reader.errors.append("[bar] d_targets must be a list of numbers in (0, 1)")
    if options["n_elements"] is not None and options["n_elements"] % 2:
        reader.errors.append("[bar] n_elements must be even")
    if reader.errors:
        raise ConfigError(reader.errors)
    try:
        params = Bar1DParams(**values)
    except ValueError as exc:
        raise ConfigError([f"[bar] {exc}"])
    return params, options


# ── Sweeps ──────────────────────────────────────────────────────────────────

def sweep_label(parameter: str, value: Any) -> str:
    text = str(value).replace(" ", "").replace("/", "_per_")
    return f"{parameter}={text}"


def expand_sweep(raw: Dict[str, Any]) -> List[Tuple[str, Dict[str, Any]]]:
    """
    One (label, raw tree) per sweep value; a file without [sweep] yields a single entry
    with an empty label.

    Raises:
        ConfigError: malformed [sweep] table
    """
    sweep = raw.get("sweep")
    if not sweep:
        return [("", raw)]
    parameter, values = sweep.get("parameter"), sweep.get("values")
    errors = []
    if not isinstance(parameter, str) or parameter.count(".") != 1:
        errors.append("[sweep] parameter must be a dotted 'section.key' string")
    elif parameter.split(".")[0] not in SECTIONS:
        errors.append(f"[sweep] unknown section in {parameter!r}")
    if not isinstance(values, list) or not values:
        errors.append("[sweep] values must be a non-empty list")
    if errors:
        raise ConfigError(errors)
    section, key = parameter.split(".")
    runs = []
    for value in values:
        variant = copy.deepcopy(raw)
        variant.pop("sweep")
        variant.setdefault(section, {})[key] = value
        label = sweep_label(parameter, value)
        variant["scenario"]["name"] = f"{raw['scenario']['name']}[{label}]"
        runs.append((label, variant))
    return runs
