# src/common/errors.py
"""
Exception types shared by the engine and the command-line front end.
"""
from typing import Iterable, List, Optional


class ConfigError(ValueError):
    """Scenario validation failed. Carries every problem found, not only the first."""

    def __init__(self, messages: Iterable[str]):
        self.messages: List[str] = list(messages) or ["invalid configuration"]
        super().__init__("; ".join(self.messages))


class MeshError(ValueError):
    """Mesh file could not be read or fails validation."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class AdmissibilityError(ValueError):
    """Material constants violate one of the positive-definiteness inequalities."""

    def __init__(self, violated: Iterable[str]):
        self.violated: List[str] = list(violated)
        super().__init__("inadmissible material constants, violated: " + ", ".join(self.violated))


class SolverError(RuntimeError):
    """A sub-solver did not converge or a linear system was singular."""


class IncrementUnderflow(SolverError):
    """The load increment was halved past the allowed number of times."""

    def __init__(self, step: int, halvings: int):
        self.step = step
        self.halvings = halvings
        super().__init__(f"step {step}: increment still rejected after {halvings} halvings")
