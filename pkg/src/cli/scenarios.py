"""
Bundled benchmark scenarios (TOML files shipped next to this module).
"""
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import List, Tuple

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "scenarios")


def scenario_names() -> List[str]:
    return sorted(
        os.path.splitext(name)[0] for name in os.listdir(SCENARIO_DIR) if name.endswith(".toml")
    )


def list_scenarios() -> List[Tuple[str, str]]:
    """(name, description) of every bundled scenario."""
    result = []
    for name in scenario_names():
        with open(scenario_path(name), "rb") as handle:
            info = tomllib.load(handle).get("scenario", {})
        result.append((name, info.get("description", "")))
    return result


def scenario_path(name: str) -> str:
    """
    Raises:
        KeyError: no bundled scenario of that name
    """
    path = os.path.join(SCENARIO_DIR, f"{name}.toml")
    if not os.path.isfile(path):
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(scenario_names())}")
    return path


def resolve_config(source: str) -> str:
    """A path to an existing file is returned as is; anything else is looked up by name."""
    if os.path.isfile(source):
        return source
    return scenario_path(os.path.splitext(os.path.basename(source))[0] if source.endswith(".toml") else source)


def show_scenario(name: str) -> str:
    with open(scenario_path(name), "r", encoding="utf-8") as handle:
        return handle.read()
