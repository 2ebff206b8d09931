"""Exception types raised by the hcife package."""
from __future__ import annotations


class HcifeError(Exception):
    """Base class for all package errors."""


class ParameterError(HcifeError, ValueError):
    """Invalid physical or numerical parameter (e.g. a diffusion value <= 0)."""


class ResourceError(HcifeError):
    """A requested computation exceeds the configured memory budget."""


class GeometryError(HcifeError):
    """Interface/mesh configuration violates the geometric admissibility rules.

    Carries the offending cell index when one is known.
    """

    def __init__(self, message: str, cell: int = -1):
        super().__init__(message if cell < 0 else f"{message} (cell {cell})")
        self.cell = cell


class DegenerateArcError(GeometryError):
    """Arc endpoints coincide; no arc midpoint can be selected."""


class QuadratureError(HcifeError):
    """Adaptive quadrature failed to converge within the refinement budget."""


class DomainError(HcifeError):
    """Evaluation point lies outside the element beyond tolerance."""


class BasisConstructionError(HcifeError):
    """The coupled local basis system is numerically rank deficient.

    Carries the cell index and the cut geometry record for diagnosis.
    """

    def __init__(self, message: str, cell: int = -1, cut=None):
        super().__init__(message if cell < 0 else f"{message} (cell {cell})")
        self.cell = cell
        self.cut = cut


class SolverError(HcifeError):
    """Base class for linear solver failures."""


class NonConvergenceError(SolverError):
    """Iteration budget exhausted before reaching the requested residual."""

    def __init__(self, message: str, residual_history=()):
        tail = list(residual_history)[-10:]
        if tail:
            message = f"{message}; residual tail {tail}"
        super().__init__(message)
        self.residual_history = tail


class IndefiniteSystemError(SolverError):
    """Conjugate gradients met a non-positive curvature direction.

    Signals an indefinite system, typically from an insufficient penalty
    parameter.
    """


class StudyError(HcifeError):
    """A convergence study aborted; carries stage/level/cell provenance."""

    def __init__(self, message: str, stage: str = "", level: int = -1, cell: int = -1):
        parts = [message]
        if stage:
            parts.append(f"stage={stage}")
        if level >= 0:
            parts.append(f"level={level}")
        if cell >= 0:
            parts.append(f"cell={cell}")
        super().__init__("; ".join(parts))
        self.stage = stage
        self.level = level
        self.cell = cell
